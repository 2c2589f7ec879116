use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use zsm_bench::{reference_systems, scaled_pi1};
use zsm_core::compile::{check_correspondence, compile};
use zsm_core::ess::ess_of;
use zsm_core::semantics::{reachability_graph, DEFAULT_STATE_CAP};
use zsm_core::unfold::{unfold, UnfoldBounds};

fn reachability(c: &mut Criterion) {
    let mut g = c.benchmark_group("reachability");
    for n in [1, 2, 3] {
        let sys = scaled_pi1(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &sys, |b, sys| {
            b.iter(|| reachability_graph(sys, 4, DEFAULT_STATE_CAP).unwrap())
        });
    }
    g.finish();
}

fn correspondence(c: &mut Criterion) {
    let mut g = c.benchmark_group("correspondence");
    for (name, sys) in reference_systems() {
        g.bench_function(name, |b| {
            b.iter(|| check_correspondence(&sys, 4, DEFAULT_STATE_CAP).unwrap())
        });
    }
    g.finish();
}

fn unfolding(c: &mut Criterion) {
    let mut g = c.benchmark_group("unfold");
    for n in [1, 2, 3] {
        let net = compile(&scaled_pi1(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &net, |b, net| {
            b.iter(|| unfold(net, UnfoldBounds::layers(3)))
        });
    }
    g.finish();
}

fn event_structure(c: &mut Criterion) {
    let mut g = c.benchmark_group("ess");
    for (name, sys) in reference_systems() {
        let net = compile(&sys);
        let unf = unfold(&net, UnfoldBounds::layers(3));
        g.bench_function(name, |b| b.iter(|| ess_of(&unf, &net).unwrap()));
    }
    g.finish();
}

criterion_group!(
    benches,
    reachability,
    correspondence,
    unfolding,
    event_structure
);
criterion_main!(benches);
