//! Program-level syntax: constraint atoms, rules, programs, and queries,
//! together with the textual parser/printer, the hybrid-syntax validator,
//! the declarative (logical) reading, and the body-scaling transform.

mod parse;

pub use parse::{parse_program, parse_program_hybrid, parse_query, parse_term, ParseError};

use crate::term::{Subst, Term};
use std::collections::BTreeSet;
use std::fmt;

/// Built-in constraint signatures understood by the solver. Everything else
/// is a user-defined CHR constraint.
pub const BUILTIN_SIGS: [(&str, usize); 7] = [
    ("=", 2),
    ("<", 2),
    ("true", 0),
    ("false", 0),
    ("or", 3),
    ("merge", 3),
    ("nonvar", 1),
];

/// Constraint symbols used internally by the persistent-constraint
/// translation; user symbols that collide with them are renamed apart.
pub const RESERVED_SYMBOLS: [(&str, usize); 5] =
    [("f", 1), ("f", 2), ("a", 2), ("c_f", 1), ("c_a", 1)];

/// A constraint atom: a functor applied to argument terms. Whether it is a
/// built-in or a user constraint is determined by its signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintAtom {
    pub functor: String,
    pub args: Vec<Term>,
}

impl ConstraintAtom {
    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> ConstraintAtom {
        ConstraintAtom {
            functor: functor.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn symbol(&self) -> (String, usize) {
        (self.functor.clone(), self.arity())
    }

    pub fn is_builtin(&self) -> bool {
        BUILTIN_SIGS
            .iter()
            .any(|(f, a)| *f == self.functor && *a == self.arity())
    }

    /// Reifies the atom as a plain term (used for printing and for wrapping
    /// constraints inside other constraints).
    pub fn to_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Atom(self.functor.clone())
        } else {
            Term::compound(self.functor.clone(), self.args.clone())
        }
    }

    /// Inverse of `to_term` for atom- and compound-shaped terms.
    pub fn from_term(t: &Term) -> Option<ConstraintAtom> {
        match t {
            Term::Atom(name) => Some(ConstraintAtom::new(name.clone(), vec![])),
            Term::Compound(f, args) => Some(ConstraintAtom::new(f.clone(), (**args).clone())),
            _ => None,
        }
    }

    pub fn apply(&self, s: &Subst) -> ConstraintAtom {
        ConstraintAtom {
            functor: self.functor.clone(),
            args: self.args.iter().map(|a| s.apply(a)).collect(),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for a in &self.args {
            for v in a.vars() {
                if seen.insert(v.clone()) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

impl fmt::Display for ConstraintAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// A CHR rule. Propagation rules have an empty removed head; simplification
/// rules have an empty kept head; simpagation rules have both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    /// Smaller numbers are more urgent. Must be >= 1.
    pub priority: u32,
    pub kept: Vec<ConstraintAtom>,
    pub removed: Vec<ConstraintAtom>,
    /// Conjunction of built-in atoms; empty means `true`.
    pub guard: Vec<ConstraintAtom>,
    pub body: Vec<ConstraintAtom>,
}

impl Rule {
    pub fn is_propagation(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn head_atoms(&self) -> impl Iterator<Item = &ConstraintAtom> {
        self.kept.iter().chain(self.removed.iter())
    }

    pub fn head_vars(&self) -> BTreeSet<String> {
        self.head_atoms().flat_map(|a| a.vars()).collect()
    }

    pub fn all_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for atom in self
            .kept
            .iter()
            .chain(&self.removed)
            .chain(&self.guard)
            .chain(&self.body)
        {
            for v in atom.vars() {
                if seen.insert(v.clone()) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Rule-local variables: those of the guard and body that do not occur
    /// in any head atom.
    pub fn local_vars(&self) -> BTreeSet<String> {
        let heads = self.head_vars();
        self.guard
            .iter()
            .chain(&self.body)
            .flat_map(|a| a.vars())
            .filter(|v| !heads.contains(v))
            .collect()
    }
}

/// A CHR program plus its symbol declarations. Symbols not declared
/// persistent are linear; `linear_declared` only records explicit
/// declarations so that printing round-trips.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub persistent: BTreeSet<(String, usize)>,
    pub linear_declared: BTreeSet<(String, usize)>,
}

impl Program {
    pub fn is_persistent(&self, functor: &str, arity: usize) -> bool {
        self.persistent.contains(&(functor.to_string(), arity))
    }

    pub fn atom_is_persistent(&self, atom: &ConstraintAtom) -> bool {
        self.is_persistent(&atom.functor, atom.arity())
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// All user-constraint symbols occurring anywhere in the program.
    pub fn user_symbols(&self) -> BTreeSet<(String, usize)> {
        let mut out: BTreeSet<(String, usize)> = BTreeSet::new();
        for r in &self.rules {
            for atom in r.kept.iter().chain(&r.removed).chain(&r.body) {
                if !atom.is_builtin() {
                    out.insert(atom.symbol());
                }
            }
        }
        out.extend(self.persistent.iter().cloned());
        out.extend(self.linear_declared.iter().cloned());
        out
    }
}

/// Symbols of `p` that collide with the translation's reserved symbols.
pub fn reserved_violations(p: &Program) -> Vec<(String, usize)> {
    p.user_symbols()
        .into_iter()
        .filter(|(f, a)| RESERVED_SYMBOLS.iter().any(|(rf, ra)| rf == f && ra == a))
        .collect()
}

/// An initial goal plus the variables whose bindings the caller wants to
/// observe in the final state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub goal: Vec<ConstraintAtom>,
    pub globals: BTreeSet<String>,
}

fn fmt_atoms(atoms: &[ConstraintAtom]) -> String {
    atoms
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :: {} @ ", self.priority, self.name)?;
        if self.removed.is_empty() {
            write!(f, "{} ==> ", fmt_atoms(&self.kept))?;
        } else if self.kept.is_empty() {
            write!(f, "{} <=> ", fmt_atoms(&self.removed))?;
        } else {
            write!(
                f,
                "{} \\ {} <=> ",
                fmt_atoms(&self.kept),
                fmt_atoms(&self.removed)
            )?;
        }
        if !self.guard.is_empty() {
            write!(f, "{} | ", fmt_atoms(&self.guard))?;
        }
        write!(f, "{}.", fmt_atoms(&self.body))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, arity) in &self.persistent {
            writeln!(f, ":- persistent {name}/{arity}.")?;
        }
        for (name, arity) in &self.linear_declared {
            writeln!(f, ":- linear {name}/{arity}.")?;
        }
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Serializes a program in the concrete syntax accepted by `parse_program`.
pub fn program_to_text(p: &Program) -> String {
    p.to_string()
}

/// A reason a rule falls outside the hybrid fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridViolation {
    pub rule: String,
    pub reason: String,
}

impl fmt::Display for HybridViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: {}", self.rule, self.reason)
    }
}

/// Checks the hybrid syntax restriction: kept heads mention only persistent
/// symbols and removed heads only linear ones. Returns all violations.
pub fn validate_hybrid(p: &Program) -> Vec<HybridViolation> {
    let mut out = Vec::new();
    for r in &p.rules {
        for atom in &r.kept {
            if !p.atom_is_persistent(atom) {
                out.push(HybridViolation {
                    rule: r.name.clone(),
                    reason: format!(
                        "kept-head constraint {} is linear; kept heads must be persistent",
                        atom
                    ),
                });
            }
        }
        for atom in &r.removed {
            if p.atom_is_persistent(atom) {
                out.push(HybridViolation {
                    rule: r.name.clone(),
                    reason: format!(
                        "removed-head constraint {} is persistent; removed heads must be linear",
                        atom
                    ),
                });
            }
        }
    }
    out
}

fn conj(atoms: &[ConstraintAtom]) -> String {
    if atoms.is_empty() {
        "true".to_string()
    } else {
        atoms
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(" ∧ ")
    }
}

/// Parenthesizes a conjunction when it has more than one conjunct.
fn conj_group(atoms: &[ConstraintAtom]) -> String {
    if atoms.len() > 1 {
        format!("({})", conj(atoms))
    } else {
        conj(atoms)
    }
}

/// Pretty-prints the declarative reading of each rule, one formula per
/// line, followed by the reading of states. Trivially true antecedents and
/// empty quantifier blocks are elided; no other simplification is applied.
pub fn logical_reading(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.rules {
        let locals: Vec<String> = {
            let set = r.local_vars();
            let mut order = Vec::new();
            for atom in r.guard.iter().chain(&r.body) {
                for v in atom.vars() {
                    if set.contains(&v) && !order.contains(&v) {
                        order.push(v);
                    }
                }
            }
            order
        };
        let mut inner_atoms: Vec<ConstraintAtom> = r.guard.clone();
        inner_atoms.extend(r.body.iter().cloned());
        let mut inner = conj(&inner_atoms);
        if !locals.is_empty() {
            inner = format!("∃{}({})", locals.join(","), inner);
        }
        let mut antecedent_atoms: Vec<ConstraintAtom> = r.kept.clone();
        antecedent_atoms.extend(r.guard.iter().cloned());
        let formula = if r.is_propagation() {
            format!("∀({} → {})", conj_group(&antecedent_atoms), inner)
        } else if antecedent_atoms.is_empty() {
            format!("∀({} ↔ {})", conj_group(&r.removed), inner)
        } else {
            format!(
                "∀({} → ({} ↔ {}))",
                conj_group(&antecedent_atoms),
                conj_group(&r.removed),
                inner
            )
        };
        out.push_str(&format!("{}: {}\n", r.name, formula));
    }
    out.push_str("state ⟨E | C | X⟩ reads as ∃Y1,...,Yk(E ∧ C) where the Yi are the variables outside the globals X\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("body scaling is defined for propagation programs only; rule {0} removes constraints")]
    NotPropagation(String),
}

/// Scales every user constraint in rule bodies by `n` (built-ins stay
/// single). Defined for propagation programs only.
pub fn scalar_program(p: &Program, n: usize) -> Result<Program, ScalarError> {
    assert!(n >= 1, "scale factor must be at least 1");
    let mut rules = Vec::with_capacity(p.rules.len());
    for r in &p.rules {
        if !r.is_propagation() {
            return Err(ScalarError::NotPropagation(r.name.clone()));
        }
        let mut body = Vec::new();
        for atom in &r.body {
            let copies = if atom.is_builtin() { 1 } else { n };
            for _ in 0..copies {
                body.push(atom.clone());
            }
        }
        rules.push(Rule {
            name: format!("{}_x{}", r.name, n),
            body,
            ..r.clone()
        });
    }
    Ok(Program {
        rules,
        persistent: p.persistent.clone(),
        linear_declared: p.linear_declared.clone(),
    })
}

/// Scales every user constraint of a goal by `n`, keeping built-ins single.
pub fn scalar_goal(goal: &[ConstraintAtom], n: usize) -> Vec<ConstraintAtom> {
    assert!(n >= 1, "scale factor must be at least 1");
    let mut out = Vec::new();
    for atom in goal {
        let copies = if atom.is_builtin() { 1 } else { n };
        for _ in 0..copies {
            out.push(atom.clone());
        }
    }
    out
}
