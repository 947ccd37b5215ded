//! First-order terms, substitutions, and the small term-level operations the
//! rest of the engine is built on: unification, one-way matching, ground
//! arithmetic, a total term order, and the sorted-list union used by the
//! regular-expression rules.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Functor name of the list constructor (`[H|T]` sugar).
pub const CONS: &str = ".";
/// Name of the empty-list atom (`[]` sugar).
pub const NIL: &str = "[]";
/// Functor name of the pair/concatenation constructor (`(A, B)` sugar).
pub const TUPLE: &str = ",";

/// Argument vectors are shared: coinductive runs build terms whose printed
/// size grows far faster than their distinct structure, so clones must be
/// O(1) and rewrites must preserve sharing for untouched subtrees.
// The manual `PartialEq` below is structural equality with a pointer
// shortcut — it never diverges from the derived one, so the derived
// `Hash` stays consistent with it.
#[allow(clippy::derived_hash_with_manual_eq)]
#[derive(Debug, Clone, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Int(i64),
    Atom(String),
    /// Invariant: arity >= 1; zero-arity symbols are `Atom`s.
    Compound(String, Arc<Vec<Term>>),
}

/// Structural equality, with a pointer shortcut for shared argument
/// vectors (the common case once terms flow through the engine).
impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Int(a), Term::Int(b)) => a == b,
            (Term::Atom(a), Term::Atom(b)) => a == b,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && (Arc::ptr_eq(xs, ys) || xs == ys)
            }
            _ => false,
        }
    }
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Term {
        let functor = functor.into();
        debug_assert!(!args.is_empty(), "compound terms must have arity >= 1");
        Term::Compound(functor, Arc::new(args))
    }

    pub fn nil() -> Term {
        Term::Atom(NIL.into())
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::compound(CONS, vec![head, tail])
    }

    /// Builds a proper list from the given elements.
    pub fn list(items: Vec<Term>) -> Term {
        items
            .into_iter()
            .rev()
            .fold(Term::nil(), |tail, head| Term::cons(head, tail))
    }

    /// Builds a list with an explicit tail, as in `[a, b|T]`.
    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items
            .into_iter()
            .rev()
            .fold(tail, |tail, head| Term::cons(head, tail))
    }

    /// Builds a right-nested pair chain `(a, (b, c))` from two or more terms.
    pub fn tuple(items: Vec<Term>) -> Term {
        debug_assert!(items.len() >= 2);
        let mut iter = items.into_iter().rev();
        let last = iter.next().unwrap();
        iter.fold(last, |acc, item| Term::compound(TUPLE, vec![item, acc]))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Collects the variable names occurring in the term, in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_vars(&mut out, &mut seen);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>, seen: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
            Term::Int(_) | Term::Atom(_) => {}
            Term::Compound(_, args) => {
                for a in args.iter() {
                    a.collect_vars(out, seen);
                }
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) | Term::Atom(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Renames every variable through `map`; names absent from the map are kept.
    pub fn rename(&self, map: &BTreeMap<String, String>) -> Term {
        self.rename_inner(map).unwrap_or_else(|| self.clone())
    }

    fn rename_inner(&self, map: &BTreeMap<String, String>) -> Option<Term> {
        match self {
            Term::Var(v) => map.get(v).map(|n| Term::Var(n.clone())),
            Term::Int(_) | Term::Atom(_) => None,
            Term::Compound(f, args) => rewrite_args(args, |a| a.rename_inner(map))
                .map(|args| Term::Compound(f.clone(), args)),
        }
    }
}

/// Rebuilds an argument vector through a rewrite that returns `None` for
/// "unchanged". Returns `None` when no child changed, letting callers keep
/// the original shared vector instead of allocating an identical copy.
fn rewrite_args(
    args: &Arc<Vec<Term>>,
    mut rw: impl FnMut(&Term) -> Option<Term>,
) -> Option<Arc<Vec<Term>>> {
    let mut out: Option<Vec<Term>> = None;
    for (i, a) in args.iter().enumerate() {
        match rw(a) {
            Some(new) => out.get_or_insert_with(|| args[..i].to_vec()).push(new),
            None => {
                if let Some(v) = out.as_mut() {
                    v.push(a.clone());
                }
            }
        }
    }
    out.map(Arc::new)
}

/// An idempotent substitution: applying it twice equals applying it once.
///
/// Bindings are stored in triangular form; `apply` resolves chains to a
/// fixpoint, which terminates because every binding is occurs-checked.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<String, Term>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.map.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.map.iter()
    }

    /// Inserts a binding without an occurs check. Callers must guarantee
    /// acyclicity (unification and matching both do).
    pub fn bind(&mut self, var: impl Into<String>, term: Term) {
        self.map.insert(var.into(), term);
    }

    /// Union of two substitutions with disjoint domains (bindings of `other`
    /// win on overlap). Values may reference either map's variables; `apply`
    /// resolves across the union.
    pub fn merged(&self, other: &Subst) -> Subst {
        let mut map = self.map.clone();
        for (k, v) in &other.map {
            map.insert(k.clone(), v.clone());
        }
        Subst { map }
    }

    /// Applies the substitution, resolving variable chains all the way down.
    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        self.apply_inner(t).unwrap_or_else(|| t.clone())
    }

    fn apply_inner(&self, t: &Term) -> Option<Term> {
        match t {
            Term::Var(v) => {
                let bound = self.map.get(v)?;
                Some(self.apply_inner(bound).unwrap_or_else(|| bound.clone()))
            }
            Term::Int(_) | Term::Atom(_) => None,
            Term::Compound(f, args) => rewrite_args(args, |a| self.apply_inner(a))
                .map(|args| Term::Compound(f.clone(), args)),
        }
    }
}

/// Why a (restricted) unification attempt did not produce a unifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnifyFailure {
    /// The terms clash structurally; no substitution can equate them.
    Clash,
    /// The terms could only be equated by binding a variable outside the
    /// allowed set. Used by guard entailment, where the answer is "unknown".
    Blocked,
}

fn occurs(var: &str, t: &Term, s: &Subst) -> bool {
    match t {
        Term::Var(v) => {
            if v == var {
                return true;
            }
            match s.get(v) {
                Some(bound) => occurs(var, &bound.clone(), s),
                None => false,
            }
        }
        Term::Int(_) | Term::Atom(_) => false,
        Term::Compound(_, args) => args.iter().any(|a| occurs(var, a, s)),
    }
}

fn walk(t: &Term, s: &Subst) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(bound) => walk(&bound.clone(), s),
            None => t.clone(),
        },
        _ => t.clone(),
    }
}

fn unify_impl(
    a: &Term,
    b: &Term,
    s: Subst,
    allowed: Option<&BTreeSet<String>>,
) -> Result<Subst, UnifyFailure> {
    let a = walk(a, &s);
    let b = walk(b, &s);
    if a == b {
        return Ok(s);
    }
    let bindable = |v: &str| allowed.is_none_or(|set| set.contains(v));
    match (&a, &b) {
        (Term::Var(x), _) if bindable(x) => {
            if occurs(x, &b, &s) {
                return Err(UnifyFailure::Clash);
            }
            let mut s = s;
            s.bind(x.clone(), b);
            Ok(s)
        }
        (_, Term::Var(y)) if bindable(y) => {
            if occurs(y, &a, &s) {
                return Err(UnifyFailure::Clash);
            }
            let mut s = s;
            s.bind(y.clone(), a);
            Ok(s)
        }
        // At least one side is a variable we may not bind.
        (Term::Var(_), _) | (_, Term::Var(_)) => Err(UnifyFailure::Blocked),
        (Term::Int(x), Term::Int(y)) if x == y => Ok(s),
        (Term::Atom(x), Term::Atom(y)) if x == y => Ok(s),
        (Term::Compound(f, xs), Term::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
            let mut s = s;
            for (x, y) in xs.iter().zip(ys.iter()) {
                s = unify_impl(x, y, s, allowed)?;
            }
            Ok(s)
        }
        _ => Err(UnifyFailure::Clash),
    }
}

/// Most general unifier of `a` and `b` extending `s`, with occurs check.
pub fn unify(a: &Term, b: &Term, s: &Subst) -> Option<Subst> {
    unify_impl(a, b, s.clone(), None).ok()
}

/// Unification that may only bind variables in `allowed`. A `Blocked` result
/// means the terms are unifiable but only by constraining a protected
/// variable — entailment is then undecided rather than false.
pub fn unify_restricted(
    a: &Term,
    b: &Term,
    s: &Subst,
    allowed: &BTreeSet<String>,
) -> Result<Subst, UnifyFailure> {
    unify_impl(a, b, s.clone(), Some(allowed))
}

/// One-way matching: binds variables of `pattern` only. Variables in
/// `subject` are opaque constants, so `match(f(X), f(a))` succeeds while
/// `match(f(a), f(X))` fails. Non-linear patterns are handled by binding the
/// first occurrence and requiring syntactic equality afterwards.
pub fn match_term(pattern: &Term, subject: &Term, s: &Subst) -> Option<Subst> {
    match pattern {
        Term::Var(v) => match s.get(v) {
            Some(bound) => {
                if bound == subject || s.apply(bound) == *subject {
                    Some(s.clone())
                } else {
                    None
                }
            }
            None => {
                let mut s = s.clone();
                s.bind(v.clone(), subject.clone());
                Some(s)
            }
        },
        Term::Int(x) => match subject {
            Term::Int(y) if x == y => Some(s.clone()),
            _ => None,
        },
        Term::Atom(x) => match subject {
            Term::Atom(y) if x == y => Some(s.clone()),
            _ => None,
        },
        Term::Compound(f, xs) => match subject {
            Term::Compound(g, ys) if f == g && xs.len() == ys.len() => {
                let mut s = s.clone();
                for (x, y) in xs.iter().zip(ys.iter()) {
                    s = match_term(x, y, &s)?;
                }
                Some(s)
            }
            _ => None,
        },
    }
}

/// Evaluates a ground arithmetic term (`+`/2, `-`/2 over integer literals).
/// Returns `None` on variables, non-numeric leaves, or other functors.
pub fn eval_ground(t: &Term) -> Option<i64> {
    match t {
        Term::Int(n) => Some(*n),
        Term::Compound(op, args) if args.len() == 2 && (op == "+" || op == "-") => {
            let l = eval_ground(&args[0])?;
            let r = eval_ground(&args[1])?;
            Some(if op == "+" {
                l.checked_add(r)?
            } else {
                l.checked_sub(r)?
            })
        }
        _ => None,
    }
}

/// Replaces every arithmetic subterm that evaluates to a ground integer by
/// its value, leaving everything else untouched (`q(1+1)` becomes `q(2)`,
/// `q(X+1)` stays as is).
pub fn simplify_arith(t: &Term) -> Term {
    simplify_arith_inner(t).unwrap_or_else(|| t.clone())
}

fn simplify_arith_inner(t: &Term) -> Option<Term> {
    match t {
        Term::Compound(op, args) if args.len() == 2 && (op == "+" || op == "-") => {
            if let Some(n) = eval_ground(t) {
                return Some(Term::Int(n));
            }
            rewrite_args(args, simplify_arith_inner).map(|a| Term::Compound(op.clone(), a))
        }
        Term::Compound(f, args) => {
            rewrite_args(args, simplify_arith_inner).map(|a| Term::Compound(f.clone(), a))
        }
        _ => None,
    }
}

/// Total order on terms: integers < atoms < variables < compounds.
/// Integers compare by value, atoms and variables by name, compounds by
/// arity, then functor, then arguments left to right.
pub fn term_compare(a: &Term, b: &Term) -> Ordering {
    if let (Term::Compound(f, xs), Term::Compound(g, ys)) = (a, b) {
        if f == g && Arc::ptr_eq(xs, ys) {
            return Ordering::Equal;
        }
    }
    fn rank(t: &Term) -> u8 {
        match t {
            Term::Int(_) => 0,
            Term::Atom(_) => 1,
            Term::Var(_) => 2,
            Term::Compound(..) => 3,
        }
    }
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => x.cmp(y),
        (Term::Atom(x), Term::Atom(y)) => x.cmp(y),
        (Term::Var(x), Term::Var(y)) => x.cmp(y),
        (Term::Compound(f, xs), Term::Compound(g, ys)) => xs
            .len()
            .cmp(&ys.len())
            .then_with(|| f.cmp(g))
            .then_with(|| {
                for (x, y) in xs.iter().zip(ys.iter()) {
                    let ord = term_compare(x, y);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                Ordering::Equal
            }),
        _ => rank(a).cmp(&rank(b)),
    }
}

/// Why a term could not be read as a proper list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ListError {
    #[error("list spine ends in an unbound variable")]
    UnboundSpine,
    #[error("term is not a proper list")]
    NotAList,
}

/// Reads a proper list term into its elements. The spine must be fully
/// determined; elements may be arbitrary terms.
pub fn list_elements(t: &Term) -> Result<Vec<Term>, ListError> {
    let mut items = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Atom(n) if n == NIL => return Ok(items),
            Term::Compound(f, args) if f == CONS && args.len() == 2 => {
                items.push(args[0].clone());
                cur = &args[1];
            }
            Term::Var(_) => return Err(ListError::UnboundSpine),
            _ => return Err(ListError::NotAList),
        }
    }
}

/// Union of two lists as a sorted, duplicate-free list under `term_compare`.
/// This is how alternation lists are kept in a canonical (ACI) form.
pub fn merge3(l1: &Term, l2: &Term) -> Result<Term, ListError> {
    let mut items = list_elements(l1)?;
    items.extend(list_elements(l2)?);
    items.sort_by(term_compare);
    items.dedup();
    Ok(Term::list(items))
}

/// Boolean disjunction over 0/1 integer flags. `None` on non-boolean input.
pub fn or3(b1: &Term, b2: &Term) -> Option<Term> {
    let as_bit = |t: &Term| match t {
        Term::Int(0) => Some(0),
        Term::Int(1) => Some(1),
        _ => None,
    };
    let x = as_bit(b1)?;
    let y = as_bit(b2)?;
    Some(Term::Int(if x == 1 || y == 1 { 1 } else { 0 }))
}

// Printing: precedence levels, loosest to tightest. A term is parenthesized
// when its own level is looser than what the context requires.
const PREC_CMP: u8 = 0; // = < ~
const PREC_ADD: u8 = 1; // binary + -
const PREC_POST: u8 = 2; // postfix * +

fn fmt_prec(t: &Term, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
    match t {
        Term::Var(v) => write!(f, "{v}"),
        Term::Int(n) => {
            if *n < 0 && min >= PREC_ADD {
                write!(f, "({n})")
            } else {
                write!(f, "{n}")
            }
        }
        Term::Atom(a) => write!(f, "{a}"),
        Term::Compound(functor, args) => match (functor.as_str(), args.len()) {
            (CONS, 2) => fmt_list(t, f),
            (TUPLE, 2) => {
                write!(f, "(")?;
                let mut cur = t;
                loop {
                    match cur {
                        Term::Compound(c, parts) if c == TUPLE && parts.len() == 2 => {
                            fmt_prec(&parts[0], f, PREC_CMP)?;
                            write!(f, ", ")?;
                            cur = &parts[1];
                        }
                        _ => {
                            fmt_prec(cur, f, PREC_CMP)?;
                            break;
                        }
                    }
                }
                write!(f, ")")
            }
            ("*", 1) | ("+", 1) => {
                let body = |f: &mut fmt::Formatter<'_>| {
                    fmt_prec(&args[0], f, PREC_POST)?;
                    write!(f, "{functor}")
                };
                if min > PREC_POST {
                    write!(f, "(")?;
                    body(f)?;
                    write!(f, ")")
                } else {
                    body(f)
                }
            }
            ("+", 2) | ("-", 2) => {
                let body = |f: &mut fmt::Formatter<'_>| {
                    fmt_prec(&args[0], f, PREC_ADD)?;
                    write!(f, "{functor}")?;
                    fmt_prec(&args[1], f, PREC_POST)
                };
                if min > PREC_ADD {
                    write!(f, "(")?;
                    body(f)?;
                    write!(f, ")")
                } else {
                    body(f)
                }
            }
            ("=", 2) | ("<", 2) | ("~", 2) => {
                let body = |f: &mut fmt::Formatter<'_>| {
                    fmt_prec(&args[0], f, PREC_ADD)?;
                    write!(f, " {functor} ")?;
                    fmt_prec(&args[1], f, PREC_ADD)
                };
                if min > PREC_CMP {
                    write!(f, "(")?;
                    body(f)?;
                    write!(f, ")")
                } else {
                    body(f)
                }
            }
            _ => {
                write!(f, "{functor}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    fmt_prec(a, f, PREC_CMP)?;
                }
                write!(f, ")")
            }
        },
    }
}

fn fmt_list(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "[")?;
    let mut cur = t;
    let mut first = true;
    loop {
        match cur {
            Term::Compound(c, parts) if c == CONS && parts.len() == 2 => {
                if !first {
                    write!(f, ", ")?;
                }
                first = false;
                fmt_prec(&parts[0], f, PREC_CMP)?;
                cur = &parts[1];
            }
            Term::Atom(n) if n == NIL => break,
            other => {
                write!(f, "|")?;
                fmt_prec(other, f, PREC_CMP)?;
                break;
            }
        }
    }
    write!(f, "]")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, f, PREC_CMP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Term {
        Term::atom("a")
    }

    fn x() -> Term {
        Term::var("X")
    }

    #[test]
    fn unify_binds_and_applies() {
        let s = unify(&x(), &a(), &Subst::new()).unwrap();
        assert_eq!(s.apply(&x()), a());
    }

    #[test]
    fn unify_occurs_check_fails() {
        let fx = Term::compound("f", vec![x()]);
        assert!(unify(&x(), &fx, &Subst::new()).is_none());
    }

    #[test]
    fn unify_is_sound_on_compounds() {
        let t1 = Term::compound("f", vec![x(), Term::atom("b")]);
        let t2 = Term::compound("f", vec![a(), Term::var("Y")]);
        let s = unify(&t1, &t2, &Subst::new()).unwrap();
        assert_eq!(s.apply(&t1), s.apply(&t2));
    }

    #[test]
    fn apply_is_idempotent() {
        let mut s = Subst::new();
        s.bind("X", Term::compound("f", vec![Term::var("Y")]));
        s.bind("Y", a());
        let t = Term::compound("g", vec![x(), Term::var("Y"), Term::var("Z")]);
        let once = s.apply(&t);
        assert_eq!(s.apply(&once), once);
    }

    #[test]
    fn match_is_one_way() {
        // Pattern variable against constant subject: fine.
        let s = match_term(
            &Term::compound("f", vec![x()]),
            &Term::compound("f", vec![a()]),
            &Subst::new(),
        );
        assert!(s.is_some());
        // Constant pattern against subject variable: no.
        let s = match_term(
            &Term::compound("f", vec![a()]),
            &Term::compound("f", vec![x()]),
            &Subst::new(),
        );
        assert!(s.is_none());
    }

    #[test]
    fn match_nonlinear_pattern_checks_equality() {
        let pat = Term::compound("f", vec![x(), x()]);
        let ok = Term::compound("f", vec![a(), a()]);
        let bad = Term::compound("f", vec![a(), Term::atom("b")]);
        assert!(match_term(&pat, &ok, &Subst::new()).is_some());
        assert!(match_term(&pat, &bad, &Subst::new()).is_none());
    }

    #[test]
    fn match_subject_vars_are_constants() {
        // f(X, X) against f(U, V) must fail: U and V are distinct constants.
        let pat = Term::compound("f", vec![x(), x()]);
        let subj = Term::compound("f", vec![Term::var("U"), Term::var("V")]);
        assert!(match_term(&pat, &subj, &Subst::new()).is_none());
        let same = Term::compound("f", vec![Term::var("U"), Term::var("U")]);
        assert!(match_term(&pat, &same, &Subst::new()).is_some());
    }

    #[test]
    fn restricted_unify_blocks_on_protected_vars() {
        let allowed: BTreeSet<String> = ["W".to_string()].into();
        // W is ours to bind.
        assert!(unify_restricted(&Term::var("W"), &a(), &Subst::new(), &allowed).is_ok());
        // X is protected: unifiable but blocked.
        assert_eq!(
            unify_restricted(&x(), &a(), &Subst::new(), &allowed),
            Err(UnifyFailure::Blocked)
        );
        // Clash is still a clash.
        assert_eq!(
            unify_restricted(&a(), &Term::atom("b"), &Subst::new(), &allowed),
            Err(UnifyFailure::Clash)
        );
    }

    #[test]
    fn eval_ground_arithmetic() {
        let t = Term::compound(
            "+",
            vec![
                Term::Int(1),
                Term::compound("-", vec![Term::Int(5), Term::Int(2)]),
            ],
        );
        assert_eq!(eval_ground(&t), Some(4));
        assert_eq!(
            eval_ground(&Term::compound("+", vec![x(), Term::Int(1)])),
            None
        );
        assert_eq!(eval_ground(&a()), None);
    }

    #[test]
    fn simplify_arith_rewrites_only_ground_ops() {
        let t = Term::compound(
            "q",
            vec![
                Term::compound("+", vec![Term::Int(1), Term::Int(1)]),
                Term::compound("+", vec![x(), Term::Int(1)]),
            ],
        );
        let s = simplify_arith(&t);
        assert_eq!(
            s,
            Term::compound(
                "q",
                vec![Term::Int(2), Term::compound("+", vec![x(), Term::Int(1)])]
            )
        );
    }

    #[test]
    fn compare_orders_kinds_then_contents() {
        let terms = [
            Term::Int(-1),
            Term::Int(3),
            a(),
            Term::atom("b"),
            Term::var("A"),
            x(),
            Term::compound("f", vec![a()]),
            Term::compound("g", vec![a()]),
            Term::compound("f", vec![a(), a()]),
        ];
        for w in terms.windows(2) {
            assert_eq!(
                term_compare(&w[0], &w[1]),
                Ordering::Less,
                "{} < {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn merge3_sorted_dedup_union() {
        let l1 = Term::list(vec![Term::atom("b"), a()]);
        let l2 = Term::list(vec![a(), Term::atom("c")]);
        let merged = merge3(&l1, &l2).unwrap();
        assert_eq!(
            merged,
            Term::list(vec![a(), Term::atom("b"), Term::atom("c")])
        );
    }

    #[test]
    fn merge3_rejects_bad_spines() {
        let open = Term::cons(a(), x());
        assert_eq!(merge3(&open, &Term::nil()), Err(ListError::UnboundSpine));
        assert_eq!(merge3(&a(), &Term::nil()), Err(ListError::NotAList));
    }

    #[test]
    fn or3_is_boolean_only() {
        assert_eq!(or3(&Term::Int(0), &Term::Int(0)), Some(Term::Int(0)));
        assert_eq!(or3(&Term::Int(0), &Term::Int(1)), Some(Term::Int(1)));
        assert_eq!(or3(&Term::Int(2), &Term::Int(0)), None);
        assert_eq!(or3(&x(), &Term::Int(0)), None);
    }

    #[test]
    fn display_round_worthy_shapes() {
        assert_eq!(Term::list(vec![a(), Term::atom("b")]).to_string(), "[a, b]");
        assert_eq!(Term::cons(a(), x()).to_string(), "[a|X]");
        assert_eq!(
            Term::tuple(vec![Term::Int(0), Term::nil(), Term::nil()]).to_string(),
            "(0, [], [])"
        );
        assert_eq!(
            Term::compound("+", vec![x(), Term::Int(1)]).to_string(),
            "X+1"
        );
        assert_eq!(
            Term::compound("*", vec![Term::tuple(vec![a(), Term::atom("b")])]).to_string(),
            "(a, b)*"
        );
        assert_eq!(
            Term::compound("+", vec![Term::compound("*", vec![a()])]).to_string(),
            "a*+"
        );
        assert_eq!(
            Term::compound("~", vec![x(), Term::var("Y")]).to_string(),
            "X ~ Y"
        );
        assert_eq!(
            Term::compound(
                "-",
                vec![
                    x(),
                    Term::compound("-", vec![Term::var("Y"), Term::var("Z")])
                ]
            )
            .to_string(),
            "X-(Y-Z)"
        );
    }
}
