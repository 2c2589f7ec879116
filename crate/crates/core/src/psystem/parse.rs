//! Lexer and recursive-descent parser for the `.psys` format.
//!
//! ```text
//! system   := "psystem" "{" "objects:" ident+ ";" membrane "}"
//! membrane := "membrane" INT "{" "init:" ident* ";" rule* membrane* "}"
//! rule     := "rule" ident ":" ident+ "->" [product ("," product)*] ";"
//! product  := "(" ident "," ("here" | "out" | "in" "(" INT ")") ")"
//! ```
//!
//! `#` starts a comment running to the end of the line.

use super::{
    validate, Diagnostic, Diagnostics, MembraneDecl, MembraneSystem, ProductDecl, RuleDecl,
    TargetDecl,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept `out` targets in the skin membrane; such objects are discarded.
    pub allow_skin_out: bool,
}

pub fn parse(text: &str) -> Result<MembraneSystem, Diagnostics> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, options: ParseOptions) -> Result<MembraneSystem, Diagnostics> {
    let tokens = lex(text).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser { tokens, at: 0 };
    let (objects, root) = p.system().map_err(|d| Diagnostics(vec![d]))?;
    validate(&objects, &root, options)
}

type Pos = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u32),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let pos = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
        } else if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                bump(&mut chars);
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(s), pos));
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            let n = s
                .parse()
                .map_err(|_| Diagnostic::at(pos.0, pos.1, format!("integer `{s}` too large")))?;
            out.push((Tok::Int(n), pos));
        } else if c == '-' {
            bump(&mut chars);
            if chars.peek() == Some(&'>') {
                bump(&mut chars);
                out.push((Tok::Punct("->"), pos));
            } else {
                return Err(Diagnostic::at(pos.0, pos.1, "expected `->`"));
            }
        } else {
            let p = match c {
                '{' => "{",
                '}' => "}",
                '(' => "(",
                ')' => ")",
                ':' => ":",
                ';' => ";",
                ',' => ",",
                _ => {
                    return Err(Diagnostic::at(
                        pos.0,
                        pos.1,
                        format!("unexpected character `{c}`"),
                    ))
                }
            };
            bump(&mut chars);
            out.push((Tok::Punct(p), pos));
        }
    }
    out.push((Tok::Eof, (line, col)));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Pos) {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> Diagnostic {
        let (tok, (l, c)) = self.peek();
        Diagnostic::at(
            *l,
            *c,
            format!("expected {expected}, found {}", tok.describe()),
        )
    }

    fn punct(&mut self, p: &str) -> Result<Pos, Diagnostic> {
        match self.peek() {
            (Tok::Punct(q), pos) if *q == p => {
                let pos = *pos;
                self.next();
                Ok(pos)
            }
            _ => Err(self.error(&format!("`{p}`"))),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), (Tok::Punct(q), _) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), (Tok::Ident(s), _) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, Diagnostic> {
        if self.is_keyword(kw) {
            Ok(self.next().1)
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), Diagnostic> {
        match self.peek().clone() {
            (Tok::Ident(s), pos) => {
                self.next();
                Ok((s, pos))
            }
            _ => Err(self.error(what)),
        }
    }

    fn int(&mut self) -> Result<(u32, Pos), Diagnostic> {
        match self.peek().clone() {
            (Tok::Int(n), pos) => {
                self.next();
                Ok((n, pos))
            }
            _ => Err(self.error("a membrane index")),
        }
    }

    fn idents_until(&mut self, end: &str) -> Result<Vec<(String, Pos)>, Diagnostic> {
        let mut out = Vec::new();
        while !self.is_punct(end) {
            out.push(self.ident(&format!("an object name or `{end}`"))?);
        }
        self.punct(end)?;
        Ok(out)
    }

    fn system(&mut self) -> Result<(Vec<(String, Pos)>, MembraneDecl), Diagnostic> {
        self.keyword("psystem")?;
        self.punct("{")?;
        self.keyword("objects")?;
        self.punct(":")?;
        let objects = self.idents_until(";")?;
        if objects.is_empty() {
            let (_, (l, c)) = self.tokens[self.at - 1];
            return Err(Diagnostic::at(l, c, "the object list is empty"));
        }
        let root = self.membrane()?;
        self.punct("}")?;
        if !matches!(self.peek().0, Tok::Eof) {
            return Err(self.error("end of input"));
        }
        Ok((objects, root))
    }

    fn membrane(&mut self) -> Result<MembraneDecl, Diagnostic> {
        let pos = self.keyword("membrane")?;
        let (index, _) = self.int()?;
        self.punct("{")?;
        self.keyword("init")?;
        self.punct(":")?;
        let init = self.idents_until(";")?;
        let mut rules = Vec::new();
        while self.is_keyword("rule") {
            rules.push(self.rule()?);
        }
        let mut children = Vec::new();
        while self.is_keyword("membrane") {
            children.push(self.membrane()?);
        }
        if self.is_keyword("rule") {
            return Err(self.error("`membrane` or `}` (rules come before nested membranes)"));
        }
        self.punct("}")?;
        Ok(MembraneDecl {
            index,
            pos,
            init,
            rules,
            children,
        })
    }

    fn rule(&mut self) -> Result<RuleDecl, Diagnostic> {
        self.keyword("rule")?;
        let (name, pos) = self.ident("a rule name")?;
        self.punct(":")?;
        let lhs = self.idents_until("->")?;
        let mut rhs = Vec::new();
        if !self.is_punct(";") {
            rhs.push(self.product()?);
            while self.is_punct(",") {
                self.next();
                rhs.push(self.product()?);
            }
        }
        self.punct(";")?;
        Ok(RuleDecl {
            name,
            pos,
            lhs,
            rhs,
        })
    }

    fn product(&mut self) -> Result<ProductDecl, Diagnostic> {
        self.punct("(")?;
        let (object, pos) = self.ident("an object name")?;
        self.punct(",")?;
        let target = match self.peek().clone() {
            (Tok::Ident(s), _) if s == "here" => {
                self.next();
                TargetDecl::Here
            }
            (Tok::Ident(s), _) if s == "out" => {
                self.next();
                TargetDecl::Out
            }
            (Tok::Ident(s), _) if s == "in" => {
                self.next();
                self.punct("(")?;
                let (j, _) = self.int()?;
                self.punct(")")?;
                TargetDecl::In(j)
            }
            _ => return Err(self.error("`here`, `out` or `in(j)`")),
        };
        self.punct(")")?;
        Ok(ProductDecl {
            object,
            pos,
            target,
        })
    }
}
