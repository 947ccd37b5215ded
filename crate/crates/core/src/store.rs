//! The built-in constraint store.
//!
//! The store holds an idempotent substitution built from told equations,
//! plus a failure flag and a queue of delayed tells. Built-ins split into
//! tells (`true`, `false`, `=`, `<`, `or`, `merge`) and asks (everything a
//! guard may contain: `true`, `false`, `=`, `<`, `nonvar`).
//!
//! `<`, `or`, and `merge` need (deep) ground inputs. Telling them too early
//! does not error: the tell is suspended and retried whenever an equation
//! extends the substitution. Suspensions still pending when a derivation
//! ends are reported by the engine as an instantiation error; ill-typed
//! ground arguments are errors immediately.

use crate::lang::ConstraintAtom;
use crate::term::{
    list_elements, merge3, or3, simplify_arith, unify, unify_restricted, Subst, Term, UnifyFailure,
};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuiltinError {
    #[error("{0}/{1} is not a built-in constraint")]
    NotABuiltin(String, usize),
    #[error("{0} may only be told, not asked")]
    TellOnly(String),
    #[error("{0} may only be asked, not told")]
    AskOnly(String),
    #[error("{builtin} applied to an unsupported term {term}")]
    TypeMismatch { builtin: String, term: Term },
}

/// Outcome of asking a built-in: entailed (possibly binding some allowed
/// local variables, returned in the extended view), disentailed, or
/// undecided at the current instantiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ask {
    Holds(Subst),
    Fails,
    Unknown,
}

/// Resolves a term under a substitution and evaluates any ground `+`/`-`
/// subterms that resolution exposed.
pub fn resolve_under(s: &Subst, t: &Term) -> Term {
    simplify_arith(&s.apply(t))
}

/// Asks one built-in under `view`. Equations may bind variables from
/// `locals` (rule-local guard variables); binding anything else yields
/// `Unknown` rather than an entailment.
pub fn ask(
    atom: &ConstraintAtom,
    view: &Subst,
    locals: &BTreeSet<String>,
) -> Result<Ask, BuiltinError> {
    match (atom.functor.as_str(), atom.arity()) {
        ("true", 0) => Ok(Ask::Holds(view.clone())),
        ("false", 0) => Ok(Ask::Fails),
        ("=", 2) => {
            let a = resolve_under(view, &atom.args[0]);
            let b = resolve_under(view, &atom.args[1]);
            match unify_restricted(&a, &b, view, locals) {
                Ok(extended) => Ok(Ask::Holds(extended)),
                Err(UnifyFailure::Blocked) => Ok(Ask::Unknown),
                Err(UnifyFailure::Clash) => Ok(Ask::Fails),
            }
        }
        ("<", 2) => {
            let a = resolve_under(view, &atom.args[0]);
            let b = resolve_under(view, &atom.args[1]);
            match (&a, &b) {
                (Term::Int(x), Term::Int(y)) => {
                    if x < y {
                        Ok(Ask::Holds(view.clone()))
                    } else {
                        Ok(Ask::Fails)
                    }
                }
                _ if !a.is_ground() || !b.is_ground() => Ok(Ask::Unknown),
                _ => Err(BuiltinError::TypeMismatch {
                    builtin: "</2".into(),
                    term: if matches!(a, Term::Int(_)) { b } else { a },
                }),
            }
        }
        ("nonvar", 1) => {
            if resolve_under(view, &atom.args[0]).is_var() {
                Ok(Ask::Unknown)
            } else {
                Ok(Ask::Holds(view.clone()))
            }
        }
        ("or", 3) | ("merge", 3) => Err(BuiltinError::TellOnly(atom.functor.clone())),
        (f, a) => Err(BuiltinError::NotABuiltin(f.to_string(), a)),
    }
}

/// Asks a conjunction, threading local bindings left to right. Stops at the
/// first conjunct that does not hold.
pub fn ask_conj(
    atoms: &[ConstraintAtom],
    view: &Subst,
    locals: &BTreeSet<String>,
) -> Result<Ask, BuiltinError> {
    let mut view = view.clone();
    for atom in atoms {
        match ask(atom, &view, locals)? {
            Ask::Holds(extended) => view = extended,
            Ask::Fails => return Ok(Ask::Fails),
            Ask::Unknown => return Ok(Ask::Unknown),
        }
    }
    Ok(Ask::Holds(view))
}

/// The built-in store: a substitution, a failure flag, and suspended tells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuiltinStore {
    subst: Subst,
    failed: bool,
    delayed: Vec<ConstraintAtom>,
    generation: u64,
}

impl BuiltinStore {
    pub fn new() -> BuiltinStore {
        BuiltinStore::default()
    }

    pub fn subst(&self) -> &Subst {
        &self.subst
    }

    /// Bumped on every (attempted) tell; lets callers cache anything
    /// derived from the store and skip recomputation while it is stale-free.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn consistent(&self) -> bool {
        !self.failed
    }

    /// Tells that are waiting for their arguments to become ground.
    pub fn delayed(&self) -> &[ConstraintAtom] {
        &self.delayed
    }

    pub fn resolve(&self, t: &Term) -> Term {
        resolve_under(&self.subst, t)
    }

    /// Adds one built-in to the store and wakes any suspensions the new
    /// bindings unblock. Telling into a failed store is a no-op.
    pub fn tell(&mut self, atom: &ConstraintAtom) -> Result<(), BuiltinError> {
        if self.failed {
            return Ok(());
        }
        self.generation += 1;
        self.tell_inner(atom)?;
        self.wake()
    }

    fn fail(&mut self) {
        self.failed = true;
        self.delayed.clear();
    }

    fn tell_eq(&mut self, a: &Term, b: &Term) {
        match unify(a, b, &self.subst) {
            Some(s) => self.subst = s,
            None => self.fail(),
        }
    }

    fn tell_inner(&mut self, atom: &ConstraintAtom) -> Result<(), BuiltinError> {
        if self.failed {
            return Ok(());
        }
        match (atom.functor.as_str(), atom.arity()) {
            ("true", 0) => Ok(()),
            ("false", 0) => {
                self.fail();
                Ok(())
            }
            ("=", 2) => {
                let a = self.resolve(&atom.args[0]);
                let b = self.resolve(&atom.args[1]);
                self.tell_eq(&a, &b);
                Ok(())
            }
            ("<", 2) => {
                let a = self.resolve(&atom.args[0]);
                let b = self.resolve(&atom.args[1]);
                match (&a, &b) {
                    (Term::Int(x), Term::Int(y)) => {
                        if x >= y {
                            self.fail();
                        }
                        Ok(())
                    }
                    _ if !a.is_ground() || !b.is_ground() => {
                        self.delayed.push(ConstraintAtom::new("<", vec![a, b]));
                        Ok(())
                    }
                    _ => Err(BuiltinError::TypeMismatch {
                        builtin: "</2".into(),
                        term: if matches!(a, Term::Int(_)) { b } else { a },
                    }),
                }
            }
            ("or", 3) => {
                let a = self.resolve(&atom.args[0]);
                let b = self.resolve(&atom.args[1]);
                let out = self.resolve(&atom.args[2]);
                if !a.is_ground() || !b.is_ground() {
                    self.delayed
                        .push(ConstraintAtom::new("or", vec![a, b, out]));
                    return Ok(());
                }
                match or3(&a, &b) {
                    Some(bit) => {
                        self.tell_eq(&out, &bit);
                        Ok(())
                    }
                    None => Err(BuiltinError::TypeMismatch {
                        builtin: "or/3".into(),
                        term: if matches!(a, Term::Int(0 | 1)) { b } else { a },
                    }),
                }
            }
            ("merge", 3) => {
                let a = self.resolve(&atom.args[0]);
                let b = self.resolve(&atom.args[1]);
                let out = self.resolve(&atom.args[2]);
                if !a.is_ground() || !b.is_ground() {
                    self.delayed
                        .push(ConstraintAtom::new("merge", vec![a, b, out]));
                    return Ok(());
                }
                match merge3(&a, &b) {
                    Ok(merged) => {
                        self.tell_eq(&out, &merged);
                        Ok(())
                    }
                    Err(_) => {
                        let bad = if list_elements(&a).is_err() { a } else { b };
                        Err(BuiltinError::TypeMismatch {
                            builtin: "merge/3".into(),
                            term: bad,
                        })
                    }
                }
            }
            ("nonvar", 1) => Err(BuiltinError::AskOnly("nonvar".into())),
            (f, a) => Err(BuiltinError::NotABuiltin(f.to_string(), a)),
        }
    }

    /// Retries suspended tells until none of them makes progress.
    fn wake(&mut self) -> Result<(), BuiltinError> {
        loop {
            if self.failed || self.delayed.is_empty() {
                return Ok(());
            }
            let pending = std::mem::take(&mut self.delayed);
            let before = pending.len();
            for atom in pending {
                self.tell_inner(&atom)?;
            }
            if self.delayed.len() == before {
                return Ok(());
            }
        }
    }

    /// The current bindings, resolved, in variable-name order.
    pub fn bindings(&self) -> Vec<(String, Term)> {
        self.subst
            .iter()
            .map(|(v, _)| (v.clone(), self.resolve(&Term::Var(v.clone()))))
            .collect()
    }
}

impl fmt::Display for BuiltinStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failed {
            return write!(f, "false");
        }
        let mut parts: Vec<String> = self
            .bindings()
            .into_iter()
            .map(|(v, t)| format!("{v} = {t}"))
            .collect();
        parts.extend(self.delayed.iter().map(|a| a.to_string()));
        if parts.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", parts.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_term;

    fn atom(src: &str) -> ConstraintAtom {
        ConstraintAtom::from_term(&parse_term(src).unwrap()).unwrap()
    }

    #[test]
    fn equations_bind_and_resolve_with_arithmetic() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("X = 2+3")).unwrap();
        assert_eq!(s.resolve(&Term::var("X")), Term::Int(5));
        s.tell(&atom("Y = X+1")).unwrap();
        assert_eq!(s.resolve(&Term::var("Y")), Term::Int(6));
        assert!(s.consistent());
    }

    #[test]
    fn clashing_equations_fail_the_store() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("X = a")).unwrap();
        s.tell(&atom("X = b")).unwrap();
        assert!(!s.consistent());
        // Further tells are absorbed.
        s.tell(&atom("Y = 1")).unwrap();
        assert_eq!(s.to_string(), "false");
    }

    #[test]
    fn comparison_delays_until_ground() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("X < 5")).unwrap();
        assert_eq!(s.delayed().len(), 1);
        s.tell(&atom("X = 3")).unwrap();
        assert!(s.delayed().is_empty());
        assert!(s.consistent());

        let mut s = BuiltinStore::new();
        s.tell(&atom("X < 5")).unwrap();
        s.tell(&atom("X = 7")).unwrap();
        assert!(!s.consistent());
    }

    #[test]
    fn comparison_chains_wake_transitively() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("X < Y")).unwrap();
        s.tell(&atom("Y = Z+2")).unwrap();
        assert_eq!(s.delayed().len(), 1);
        s.tell(&atom("Z = 1")).unwrap();
        assert_eq!(s.delayed().len(), 1, "X is still unbound");
        s.tell(&atom("X = 5")).unwrap();
        assert!(!s.consistent(), "5 < 3 must fail");
    }

    #[test]
    fn or_computes_bits_and_checks_types() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("or(0, 1, C)")).unwrap();
        assert_eq!(s.resolve(&Term::var("C")), Term::Int(1));

        let mut s = BuiltinStore::new();
        s.tell(&atom("or(1, 0, 0)")).unwrap();
        assert!(!s.consistent());

        let mut s = BuiltinStore::new();
        s.tell(&atom("or(A, 0, C)")).unwrap();
        assert_eq!(s.delayed().len(), 1);
        s.tell(&atom("A = 0")).unwrap();
        assert_eq!(s.resolve(&Term::var("C")), Term::Int(0));

        let mut s = BuiltinStore::new();
        let e = s.tell(&atom("or(5, 0, C)")).unwrap_err();
        assert!(matches!(e, BuiltinError::TypeMismatch { .. }));
    }

    #[test]
    fn merge_unions_sorted_lists() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("merge([b, a], [a, c], M)")).unwrap();
        assert_eq!(s.resolve(&Term::var("M")), parse_term("[a, b, c]").unwrap());

        let mut s = BuiltinStore::new();
        s.tell(&atom("merge(L, [a], M)")).unwrap();
        assert_eq!(s.delayed().len(), 1);
        s.tell(&atom("L = [c]")).unwrap();
        assert_eq!(s.resolve(&Term::var("M")), parse_term("[a, c]").unwrap());

        let mut s = BuiltinStore::new();
        let e = s.tell(&atom("merge(a, [], M)")).unwrap_err();
        assert!(matches!(e, BuiltinError::TypeMismatch { .. }));
    }

    #[test]
    fn asks_are_three_valued() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("X = f(1)")).unwrap();
        let locals: BTreeSet<String> = ["Z".to_string()].into();

        // Entailment may bind the local Z.
        match ask(&atom("X = f(Z)"), s.subst(), &locals).unwrap() {
            Ask::Holds(view) => assert_eq!(view.apply(&Term::var("Z")), Term::Int(1)),
            other => panic!("expected Holds, got {other:?}"),
        }
        // Binding the non-local Y is not entailment.
        assert_eq!(
            ask(&atom("Y = 1"), s.subst(), &locals).unwrap(),
            Ask::Unknown
        );
        assert_eq!(ask(&atom("1 = 2"), s.subst(), &locals).unwrap(), Ask::Fails);
        assert_eq!(
            ask(&atom("1 < 2"), s.subst(), &locals).unwrap(),
            Ask::Holds(s.subst().clone())
        );
        assert_eq!(ask(&atom("2 < 1"), s.subst(), &locals).unwrap(), Ask::Fails);
        assert_eq!(
            ask(&atom("Y < 1"), s.subst(), &locals).unwrap(),
            Ask::Unknown
        );
        assert_eq!(
            ask(&atom("nonvar(X)"), s.subst(), &locals).unwrap(),
            Ask::Holds(s.subst().clone())
        );
        assert_eq!(
            ask(&atom("nonvar(Y)"), s.subst(), &locals).unwrap(),
            Ask::Unknown
        );
        assert!(matches!(
            ask(&atom("or(0, 0, X)"), s.subst(), &locals),
            Err(BuiltinError::TellOnly(_))
        ));
    }

    #[test]
    fn ask_conj_threads_local_bindings() {
        let mut s = BuiltinStore::new();
        s.tell(&atom("X = f(3)")).unwrap();
        let locals: BTreeSet<String> = ["Z".to_string()].into();
        let conj = [atom("X = f(Z)"), atom("Z < 4")];
        match ask_conj(&conj, s.subst(), &locals).unwrap() {
            Ask::Holds(_) => {}
            other => panic!("expected Holds, got {other:?}"),
        }
        let conj = [atom("X = f(Z)"), atom("4 < Z")];
        assert_eq!(ask_conj(&conj, s.subst(), &locals).unwrap(), Ask::Fails);
    }

    #[test]
    fn telling_nonvar_is_an_error() {
        let mut s = BuiltinStore::new();
        assert!(matches!(
            s.tell(&atom("nonvar(X)")),
            Err(BuiltinError::AskOnly(_))
        ));
    }
}
