//! Concrete syntax for programs, queries, and terms.
//!
//! A program is a sequence of symbol declarations (`:- persistent p/1.`,
//! `:- linear q/2.`) and rules. Rules carry an optional name and an
//! optional priority, in either order:
//!
//! ```text
//! name @ 2 :: kept \ removed <=> guard | body.
//! 2 :: name @ kept \ removed <=> guard | body.
//! ```
//!
//! Unnamed rules are named `rule_<k>` by position; unprioritized
//! simplification/simpagation rules default to priority 3 and propagation
//! rules to 4. Term syntax supports integers, variables (`_` is a fresh
//! anonymous variable), atoms, compounds, lists (`[a, b|T]`), tuples
//! (`(a, b)`), infix `=`, `<`, `~`, binary `+`/`-`, and the postfix
//! operators `*` and `+`.

use super::{ConstraintAtom, Program, Query, Rule};
use crate::term::Term;
use std::fmt;

/// A syntax error with a 1-based source position. Errors raised after
/// parsing (such as duplicate rule names discovered at the end) may carry
/// position 0/0, which is omitted from the rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.col, self.msg)
        }
    }
}

impl std::error::Error for ParseError {}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line: pos.0,
        col: pos.1,
        msg: msg.into(),
    })
}

type Pos = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bar,
    At,
    Dot,
    Backslash,
    Slash,
    DoubleColon,
    Decl,
    SimpArrow,
    PropArrow,
    Eq,
    Lt,
    Tilde,
    Plus,
    Minus,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Var(s) => write!(f, "{s}"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Comma => write!(f, ","),
            Tok::Bar => write!(f, "|"),
            Tok::At => write!(f, "@"),
            Tok::Dot => write!(f, "."),
            Tok::Backslash => write!(f, "\\"),
            Tok::Slash => write!(f, "/"),
            Tok::DoubleColon => write!(f, "::"),
            Tok::Decl => write!(f, ":-"),
            Tok::SimpArrow => write!(f, "<=>"),
            Tok::PropArrow => write!(f, "==>"),
            Tok::Eq => write!(f, "="),
            Tok::Lt => write!(f, "<"),
            Tok::Tilde => write!(f, "~"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
        }
    }
}

fn lex(src: &str) -> Result<(Vec<(Tok, Pos)>, Pos), ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);
    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let pos = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => advance!(),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    advance!();
                }
            }
            '(' => {
                toks.push((Tok::LParen, pos));
                advance!();
            }
            ')' => {
                toks.push((Tok::RParen, pos));
                advance!();
            }
            '[' => {
                toks.push((Tok::LBracket, pos));
                advance!();
            }
            ']' => {
                toks.push((Tok::RBracket, pos));
                advance!();
            }
            ',' => {
                toks.push((Tok::Comma, pos));
                advance!();
            }
            '|' => {
                toks.push((Tok::Bar, pos));
                advance!();
            }
            '@' => {
                toks.push((Tok::At, pos));
                advance!();
            }
            '.' => {
                toks.push((Tok::Dot, pos));
                advance!();
            }
            '\\' => {
                toks.push((Tok::Backslash, pos));
                advance!();
            }
            '/' => {
                toks.push((Tok::Slash, pos));
                advance!();
            }
            '~' => {
                toks.push((Tok::Tilde, pos));
                advance!();
            }
            '+' => {
                toks.push((Tok::Plus, pos));
                advance!();
            }
            '-' => {
                toks.push((Tok::Minus, pos));
                advance!();
            }
            '*' => {
                toks.push((Tok::Star, pos));
                advance!();
            }
            ':' => {
                if chars.get(i + 1) == Some(&':') {
                    toks.push((Tok::DoubleColon, pos));
                    advance!();
                    advance!();
                } else if chars.get(i + 1) == Some(&'-') {
                    toks.push((Tok::Decl, pos));
                    advance!();
                    advance!();
                } else {
                    return err(pos, "expected '::' or ':-'");
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'=') && chars.get(i + 2) == Some(&'>') {
                    toks.push((Tok::SimpArrow, pos));
                    advance!();
                    advance!();
                    advance!();
                } else {
                    toks.push((Tok::Lt, pos));
                    advance!();
                }
            }
            '=' => {
                if chars.get(i + 1) == Some(&'=') && chars.get(i + 2) == Some(&'>') {
                    toks.push((Tok::PropArrow, pos));
                    advance!();
                    advance!();
                    advance!();
                } else {
                    toks.push((Tok::Eq, pos));
                    advance!();
                }
            }
            '0'..='9' => {
                let mut text = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    text.push(chars[i]);
                    advance!();
                }
                match text.parse::<i64>() {
                    Ok(v) => toks.push((Tok::Int(v), pos)),
                    Err(_) => return err(pos, format!("integer literal {text} is out of range")),
                }
            }
            c if c.is_ascii_lowercase() => {
                let mut text = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    text.push(chars[i]);
                    advance!();
                }
                toks.push((Tok::Ident(text), pos));
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let mut text = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    text.push(chars[i]);
                    advance!();
                }
                toks.push((Tok::Var(text), pos));
            }
            other => return err(pos, format!("unexpected character '{other}'")),
        }
    }
    Ok((toks, (line, col)))
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    eof: Pos,
    anon: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        let (toks, eof) = lex(src)?;
        Ok(Parser {
            toks,
            idx: 0,
            eof,
            anon: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.idx + off).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.idx).map(|(_, p)| *p).unwrap_or(self.eof)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.next() {
            Some((tok, _)) if tok == want => Ok(()),
            Some((tok, pos)) => err(pos, format!("expected '{want}', found '{tok}'")),
            None => err(self.eof, format!("expected '{want}', found end of input")),
        }
    }

    fn at_end(&self) -> bool {
        self.idx >= self.toks.len()
    }

    fn fresh_anon(&mut self) -> Term {
        self.anon += 1;
        Term::var(format!("_A{}", self.anon))
    }

    fn can_start_term(tok: Option<&Tok>) -> bool {
        matches!(
            tok,
            Some(
                Tok::Ident(_)
                    | Tok::Var(_)
                    | Tok::Int(_)
                    | Tok::LParen
                    | Tok::LBracket
                    | Tok::Minus
                    | Tok::Tilde
            )
        )
    }

    // term := add [ ('=' | '<' | '~') add ]
    fn term(&mut self) -> Result<Term, ParseError> {
        let lhs = self.term_add()?;
        let op = match self.peek() {
            Some(Tok::Eq) => "=",
            Some(Tok::Lt) => "<",
            Some(Tok::Tilde) => "~",
            _ => return Ok(lhs),
        };
        self.next();
        let rhs = self.term_add()?;
        Ok(Term::compound(op, vec![lhs, rhs]))
    }

    // add := post { ('+' | '-') post }
    fn term_add(&mut self) -> Result<Term, ParseError> {
        let mut t = self.term_post()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => "+",
                Some(Tok::Minus) => "-",
                _ => break,
            };
            self.next();
            let rhs = self.term_post()?;
            t = Term::compound(op, vec![t, rhs]);
        }
        Ok(t)
    }

    // post := primary { '*' | '+' }   ('+' is postfix only when no term follows)
    fn term_post(&mut self) -> Result<Term, ParseError> {
        let mut t = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    t = Term::compound("*", vec![t]);
                }
                Some(Tok::Plus) if !Self::can_start_term(self.peek_at(1)) => {
                    self.next();
                    t = Term::compound("+", vec![t]);
                }
                _ => break,
            }
        }
        Ok(t)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let pos = self.pos();
        match self.next() {
            Some((Tok::Int(v), _)) => Ok(Term::Int(v)),
            Some((Tok::Minus, _)) => match self.next() {
                Some((Tok::Int(v), _)) => Ok(Term::Int(-v)),
                Some((tok, p)) => err(p, format!("expected an integer after '-', found '{tok}'")),
                None => err(self.eof, "expected an integer after '-'"),
            },
            Some((Tok::Var(name), _)) => {
                if name == "_" {
                    Ok(self.fresh_anon())
                } else {
                    Ok(Term::var(name))
                }
            }
            Some((Tok::Ident(name), _)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let args = self.arg_list()?;
                    Ok(Term::compound(name, args))
                } else {
                    Ok(Term::Atom(name))
                }
            }
            Some((Tok::Tilde, p)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let args = self.arg_list()?;
                    Ok(Term::compound("~", args))
                } else {
                    err(p, "expected '(' after prefix '~'")
                }
            }
            Some((Tok::LParen, _)) => {
                let first = self.term()?;
                if self.peek() == Some(&Tok::Comma) {
                    let mut elems = vec![first];
                    while self.peek() == Some(&Tok::Comma) {
                        self.next();
                        elems.push(self.term()?);
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Term::tuple(elems))
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(first)
                }
            }
            Some((Tok::LBracket, _)) => {
                if self.peek() == Some(&Tok::RBracket) {
                    self.next();
                    return Ok(Term::nil());
                }
                let mut elems = vec![self.term()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.next();
                    elems.push(self.term()?);
                }
                let tail = if self.peek() == Some(&Tok::Bar) {
                    self.next();
                    self.term()?
                } else {
                    Term::nil()
                };
                self.expect(Tok::RBracket)?;
                Ok(Term::list_with_tail(elems, tail))
            }
            Some((tok, p)) => err(p, format!("expected a term, found '{tok}'")),
            None => err(pos, "expected a term, found end of input"),
        }
    }

    fn arg_list(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<(ConstraintAtom, Pos), ParseError> {
        let pos = self.pos();
        let t = self.term()?;
        let atom = match &t {
            Term::Atom(name) if name != "[]" => ConstraintAtom::new(name.clone(), vec![]),
            Term::Compound(f, args)
                if !matches!(f.as_str(), "," | "." | "+" | "-" | "*" | "[]") =>
            {
                ConstraintAtom::new(f.clone(), (**args).clone())
            }
            _ => return err(pos, format!("expected a constraint, found the term {t}")),
        };
        Ok((atom, pos))
    }

    fn atom_seq(&mut self) -> Result<Vec<(ConstraintAtom, Pos)>, ParseError> {
        let mut out = vec![self.atom()?];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn check_heads(atoms: &[(ConstraintAtom, Pos)]) -> Result<(), ParseError> {
        for (a, pos) in atoms {
            if a.is_builtin() {
                return err(
                    *pos,
                    format!("built-in constraint {a} cannot appear in a rule head"),
                );
            }
        }
        Ok(())
    }

    fn check_guard(atoms: &[(ConstraintAtom, Pos)]) -> Result<(), ParseError> {
        for (a, pos) in atoms {
            let ok = matches!(
                (a.functor.as_str(), a.arity()),
                ("=", 2) | ("<", 2) | ("true", 0) | ("false", 0) | ("nonvar", 1)
            );
            if !ok {
                return err(
                    *pos,
                    format!("only ask built-ins (=, <, true, false, nonvar) may appear in a guard, found {a}"),
                );
            }
        }
        Ok(())
    }

    fn check_body(atoms: &[(ConstraintAtom, Pos)]) -> Result<(), ParseError> {
        for (a, pos) in atoms {
            if a.functor == "nonvar" && a.arity() == 1 {
                return err(*pos, "nonvar/1 is an ask and may only appear in a guard");
            }
        }
        Ok(())
    }

    fn strip(atoms: Vec<(ConstraintAtom, Pos)>) -> Vec<ConstraintAtom> {
        atoms.into_iter().map(|(a, _)| a).collect()
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let mut name: Option<String> = None;
        let mut priority: Option<u32> = None;
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(Tok::Ident(n)), Some(Tok::At)) if name.is_none() => {
                    name = Some(n.clone());
                    self.next();
                    self.next();
                }
                (Some(Tok::Int(p)), Some(Tok::DoubleColon)) if priority.is_none() => {
                    let pos = self.pos();
                    if *p < 1 {
                        return err(pos, "rule priorities start at 1");
                    }
                    priority = Some(*p as u32);
                    self.next();
                    self.next();
                }
                _ => break,
            }
        }
        let first = self.atom_seq()?;
        let (kept, removed, is_propagation) = match self.peek() {
            Some(Tok::Backslash) => {
                self.next();
                let second = self.atom_seq()?;
                let pos = self.pos();
                match self.next() {
                    Some((Tok::SimpArrow, _)) => {}
                    _ => {
                        return err(
                            pos,
                            "a simpagation rule requires '<=>' after its removed head",
                        )
                    }
                }
                (first, second, false)
            }
            Some(Tok::SimpArrow) => {
                self.next();
                (Vec::new(), first, false)
            }
            Some(Tok::PropArrow) => {
                self.next();
                (first, Vec::new(), true)
            }
            _ => {
                return err(
                    self.pos(),
                    "expected '<=>', '==>', or '\\' after the rule head",
                );
            }
        };
        Self::check_heads(&kept)?;
        Self::check_heads(&removed)?;
        let seq = self.atom_seq()?;
        let (guard, body) = if self.peek() == Some(&Tok::Bar) {
            self.next();
            let body = self.atom_seq()?;
            (seq, body)
        } else {
            (Vec::new(), seq)
        };
        Self::check_guard(&guard)?;
        Self::check_body(&body)?;
        self.expect(Tok::Dot)?;
        Ok(Rule {
            name: name.unwrap_or_default(),
            priority: priority.unwrap_or(if is_propagation { 4 } else { 3 }),
            kept: Self::strip(kept),
            removed: Self::strip(removed),
            guard: Self::strip(guard),
            body: Self::strip(body),
        })
    }

    fn directive(&mut self, program: &mut Program) -> Result<(), ParseError> {
        self.expect(Tok::Decl)?;
        let kw_pos = self.pos();
        let kw = match self.next() {
            Some((Tok::Ident(k), _)) => k,
            _ => return err(kw_pos, "expected 'persistent' or 'linear' after ':-'"),
        };
        let sym_pos = self.pos();
        let name = match self.next() {
            Some((Tok::Ident(n), _)) => n,
            Some((Tok::Tilde, _)) => "~".to_string(),
            _ => return err(sym_pos, "expected a constraint symbol"),
        };
        self.expect(Tok::Slash)?;
        let arity_pos = self.pos();
        let arity = match self.next() {
            Some((Tok::Int(a), _)) if a >= 0 => a as usize,
            _ => return err(arity_pos, "expected a non-negative arity"),
        };
        self.expect(Tok::Dot)?;
        match kw.as_str() {
            "persistent" => {
                program.persistent.insert((name, arity));
            }
            "linear" => {
                program.linear_declared.insert((name, arity));
            }
            other => return err(kw_pos, format!("unknown declaration '{other}'")),
        }
        Ok(())
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut program = Program::default();
        let mut starts = Vec::new();
        while !self.at_end() {
            if self.peek() == Some(&Tok::Decl) {
                self.directive(&mut program)?;
            } else {
                starts.push(self.pos());
                let rule = self.rule()?;
                program.rules.push(rule);
            }
        }
        for i in 0..program.rules.len() {
            if program.rules[i].name.is_empty() {
                program.rules[i].name = format!("rule_{}", i + 1);
            }
        }
        for (i, rule) in program.rules.iter().enumerate() {
            if program.rules[..i].iter().any(|r| r.name == rule.name) {
                return err(starts[i], format!("duplicate rule name '{}'", rule.name));
            }
        }
        Ok(program)
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        let atoms = self.atom_seq()?;
        Self::check_body(&atoms)?;
        if self.peek() == Some(&Tok::Dot) {
            self.next();
        }
        if !self.at_end() {
            return err(self.pos(), "unexpected input after the query");
        }
        let goal = Self::strip(atoms);
        let globals = goal.iter().flat_map(|a| a.vars()).collect();
        Ok(Query { goal, globals })
    }
}

/// Parses a program from its textual form.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    Parser::new(src)?.program()
}

/// Like `parse_program`, but additionally rejects programs that use the
/// constraint symbols reserved by the persistence translation.
pub fn parse_program_hybrid(src: &str) -> Result<Program, ParseError> {
    let program = parse_program(src)?;
    let clashes = super::reserved_violations(&program);
    if !clashes.is_empty() {
        let list = clashes
            .iter()
            .map(|(f, a)| format!("{f}/{a}"))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(ParseError {
            line: 0,
            col: 0,
            msg: format!("program uses reserved constraint symbols: {list}"),
        });
    }
    Ok(program)
}

/// Parses a comma-separated goal; the trailing '.' is optional. Every
/// variable of the goal becomes a global of the query.
pub fn parse_query(src: &str) -> Result<Query, ParseError> {
    Parser::new(src)?.query()
}

/// Parses a single term, requiring the whole input to be consumed.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    if !p.at_end() {
        return err(p.pos(), "unexpected input after the term");
    }
    Ok(t)
}
