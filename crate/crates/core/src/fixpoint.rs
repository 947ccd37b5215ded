//! Explicit-state fixpoint semantics on finite ground fragments.
//!
//! Everything here works on the *abstract* transition system: a rule may
//! fire on any selection of stored constraints at any time — there are no
//! priorities and no propagation history. (Only the engine implements
//! control; the abstract semantics has neither.) States are canonical
//! ground multisets; every inconsistent state collapses to a single ⊥
//! representative.
//!
//! On top of the enumerated system [`GroundTransitionSystem`], three
//! solvers answer membership questions:
//!
//! - [`lfp_csr`] — least fixpoint: states that can reach a consistent
//!   answer (inductive semantics of simplification programs);
//! - [`gfp_cpr`] — greatest fixpoint: states from which no inconsistent
//!   state is reachable (coinductive semantics of propagation programs),
//!   with bounded per-root verdicts when the space was truncated;
//! - [`hybrid_nested`] — the nested ν∘μ fixpoint for hybrid programs:
//!   survive forever inside the set of states that can be simplified to a
//!   consistent purely persistent state.
//!
//! [`data_sufficient_bounded`] checks the precondition of the hybrid
//! completeness results: every reachable state must simplify to a purely
//! persistent one.

use crate::lang::{validate_hybrid, ConstraintAtom, Program};
use crate::store::{ask_conj, Ask, BuiltinError, BuiltinStore};
use crate::term::{match_term, term_compare, Subst};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixpointError {
    #[error("abstract enumeration requires ground fragment: {0}")]
    NonGround(String),
    #[error("states of the ground fragment hold user constraints only; `{0}` is a built-in")]
    BuiltinInState(String),
    #[error("state space truncated at bound {0}; exact fixpoint unavailable")]
    Truncated(usize),
    #[error("contraction requires a hybrid program ({0})")]
    NotHybrid(String),
    #[error("a multiplicity cap is unsound for programs with simplification rules (rule {0} removes constraints)")]
    CapWithSimplification(String),
    #[error(
        "multiplicity cap {cap} is below the head multiplicity {need} required by rule {rule}"
    )]
    CapTooSmall {
        cap: usize,
        need: usize,
        rule: String,
    },
    #[error("rule {rule}: {source}")]
    Builtin {
        rule: String,
        #[source]
        source: BuiltinError,
    },
}

/// A canonical ground state: a sorted multiset of ground user constraints
/// plus a consistency flag. All inconsistent states are identified with
/// the single [`CanonState::bottom`] representative.
///
/// `persistent_dedup` records how the state was canonicalized but is
/// metadata: comparisons look at the atoms and the consistency flag only,
/// so a root built without contraction still equals its contracted twin
/// when the multiset is already duplicate-free.
#[derive(Debug, Clone)]
pub struct CanonState {
    /// Ground user constraints, sorted by term order.
    pub atoms: Vec<ConstraintAtom>,
    pub consistent: bool,
    /// Whether contraction (persistent multiplicity ≤ 1) was applied.
    pub persistent_dedup: bool,
}

fn atom_cmp(a: &ConstraintAtom, b: &ConstraintAtom) -> Ordering {
    term_compare(&a.to_term(), &b.to_term())
}

impl PartialEq for CanonState {
    fn eq(&self, other: &CanonState) -> bool {
        self.consistent == other.consistent && self.atoms == other.atoms
    }
}

impl Eq for CanonState {}

impl Ord for CanonState {
    fn cmp(&self, other: &CanonState) -> Ordering {
        self.consistent
            .cmp(&other.consistent)
            .then(self.atoms.len().cmp(&other.atoms.len()))
            .then_with(|| {
                for (a, b) in self.atoms.iter().zip(&other.atoms) {
                    let c = atom_cmp(a, b);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for CanonState {
    fn partial_cmp(&self, other: &CanonState) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CanonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.consistent {
            return write!(f, "⊥");
        }
        write!(f, "{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl CanonState {
    /// The unique inconsistent state.
    pub fn bottom() -> CanonState {
        CanonState {
            atoms: Vec::new(),
            consistent: false,
            persistent_dedup: false,
        }
    }

    /// A consistent state holding the given constraints, which must be
    /// ground user constraints.
    pub fn new(atoms: Vec<ConstraintAtom>) -> Result<CanonState, FixpointError> {
        for a in &atoms {
            if a.is_builtin() {
                return Err(FixpointError::BuiltinInState(a.to_string()));
            }
            if !a.is_ground() {
                return Err(FixpointError::NonGround(a.to_string()));
            }
        }
        let mut s = CanonState {
            atoms,
            consistent: true,
            persistent_dedup: false,
        };
        s.atoms.sort_by(atom_cmp);
        Ok(s)
    }

    pub fn is_bottom(&self) -> bool {
        !self.consistent
    }

    /// A consistent state with no user constraints left.
    pub fn is_answer(&self) -> bool {
        self.consistent && self.atoms.is_empty()
    }

    /// Whether every constraint is persistent (vacuously true of ⊥).
    pub fn all_persistent(&self, persistent: &BTreeSet<(String, usize)>) -> bool {
        self.atoms.iter().all(|a| persistent.contains(&a.symbol()))
    }

    /// Re-canonicalizes under the given options: sorts, optionally drops
    /// duplicate persistent constraints, optionally caps every
    /// multiplicity.
    fn canon(
        mut self,
        persistent: &BTreeSet<(String, usize)>,
        dedup: bool,
        cap: Option<usize>,
    ) -> CanonState {
        if !self.consistent {
            return CanonState::bottom();
        }
        self.atoms.sort_by(atom_cmp);
        let mut out: Vec<ConstraintAtom> = Vec::with_capacity(self.atoms.len());
        let mut run = 0usize;
        for a in self.atoms.into_iter() {
            run = match out.last() {
                Some(prev) if *prev == a => run + 1,
                _ => 1,
            };
            if run > 1 && dedup && persistent.contains(&a.symbol()) {
                continue;
            }
            if let Some(c) = cap {
                if run > c {
                    continue;
                }
            }
            out.push(a);
        }
        CanonState {
            atoms: out,
            consistent: true,
            persistent_dedup: dedup,
        }
    }
}

/// The enumerated fragment of the abstract transition system.
#[derive(Debug, Clone)]
pub struct GroundTransitionSystem {
    pub states: BTreeSet<CanonState>,
    /// (source, rule name, target); both endpoints are member states.
    pub edges: BTreeSet<(CanonState, String, CanonState)>,
    /// The canonicalized roots, in the order they were given.
    pub roots: Vec<CanonState>,
    /// True when exploration stopped adding states at the bound. ⊥ is
    /// admitted even then, so `inconsistent-reachable` stays conclusive.
    pub truncated: bool,
    pub bound: usize,
    pub persistent: BTreeSet<(String, usize)>,
    pub contraction: bool,
}

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    /// Maximum number of distinct canonical states to admit.
    pub bound: usize,
    /// Apply the hybrid equivalence: persistent multiplicity ≤ 1 and
    /// non-injective matching of kept persistent heads. Requires a hybrid
    /// program.
    pub contraction: bool,
    /// Cap every constraint multiplicity. Sound only for propagation-only
    /// programs, where stores grow monotonically and firability depends on
    /// multiplicities only up to the largest head demand.
    pub mult_cap: Option<usize>,
}

impl Default for EnumerateOptions {
    fn default() -> EnumerateOptions {
        EnumerateOptions {
            bound: 10_000,
            contraction: false,
            mult_cap: None,
        }
    }
}

/// One firing: matches heads against the state (injectively, except that
/// kept heads may share a persistent constraint under contraction), asks
/// the guard, and executes the body on a scratch built-in store. Emits
/// `(rule name, target state)` pairs in deterministic order.
fn successors(
    state: &CanonState,
    program: &Program,
    opts: &EnumerateOptions,
) -> Result<Vec<(String, CanonState)>, FixpointError> {
    let mut out: Vec<(String, CanonState)> = Vec::new();
    for rule in &program.rules {
        let heads: Vec<&ConstraintAtom> = rule.kept.iter().chain(&rule.removed).collect();
        let kept_len = rule.kept.len();
        let mut chosen: Vec<usize> = Vec::with_capacity(heads.len());
        select(
            state,
            program,
            opts,
            rule,
            &heads,
            kept_len,
            &mut chosen,
            &Subst::new(),
            &mut out,
        )?;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn select(
    state: &CanonState,
    program: &Program,
    opts: &EnumerateOptions,
    rule: &crate::lang::Rule,
    heads: &[&ConstraintAtom],
    kept_len: usize,
    chosen: &mut Vec<usize>,
    theta: &Subst,
    out: &mut Vec<(String, CanonState)>,
) -> Result<(), FixpointError> {
    if chosen.len() == heads.len() {
        return fire(state, program, opts, rule, chosen, kept_len, theta, out);
    }
    let pos = chosen.len();
    for (i, subject) in state.atoms.iter().enumerate() {
        if subject.functor != heads[pos].functor || subject.arity() != heads[pos].arity() {
            continue;
        }
        if chosen.contains(&i) {
            // Under contraction a persistent constraint stands for any
            // number of copies, so several kept heads may pick it. Removed
            // heads still consume distinct occurrences.
            let reusable =
                opts.contraction && pos < kept_len && program.atom_is_persistent(subject);
            if !reusable {
                continue;
            }
        }
        if let Some(theta2) = match_term(&heads[pos].to_term(), &subject.to_term(), theta) {
            chosen.push(i);
            select(
                state, program, opts, rule, heads, kept_len, chosen, &theta2, out,
            )?;
            chosen.pop();
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fire(
    state: &CanonState,
    program: &Program,
    opts: &EnumerateOptions,
    rule: &crate::lang::Rule,
    chosen: &[usize],
    kept_len: usize,
    theta: &Subst,
    out: &mut Vec<(String, CanonState)>,
) -> Result<(), FixpointError> {
    let locals = rule.local_vars();
    let view = match ask_conj(&rule.guard, theta, &locals).map_err(|e| FixpointError::Builtin {
        rule: rule.name.clone(),
        source: e,
    })? {
        Ask::Holds(v) => v,
        Ask::Fails => return Ok(()),
        Ask::Unknown => {
            return Err(FixpointError::NonGround(format!(
                "guard of rule {} is not decided by ground matching",
                rule.name
            )))
        }
    };
    let mut scratch = BuiltinStore::new();
    let mut added: Vec<ConstraintAtom> = Vec::new();
    for b in &rule.body {
        let inst = b.apply(&view);
        if inst.is_builtin() {
            scratch.tell(&inst).map_err(|e| FixpointError::Builtin {
                rule: rule.name.clone(),
                source: e,
            })?;
        } else {
            added.push(inst);
        }
    }
    let target = if !scratch.consistent() {
        CanonState::bottom()
    } else {
        if !scratch.delayed().is_empty() {
            return Err(FixpointError::NonGround(format!(
                "body built-in of rule {} stays undetermined on ground arguments",
                rule.name
            )));
        }
        let removed: BTreeSet<usize> = chosen[kept_len..].iter().copied().collect();
        let mut atoms: Vec<ConstraintAtom> = state
            .atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, a)| a.clone())
            .collect();
        for a in added {
            let resolved = ConstraintAtom {
                functor: a.functor,
                args: a.args.iter().map(|t| scratch.resolve(t)).collect(),
            };
            if !resolved.is_ground() {
                return Err(FixpointError::NonGround(format!(
                    "body constraint {} of rule {}",
                    resolved, rule.name
                )));
            }
            atoms.push(resolved);
        }
        CanonState {
            atoms,
            consistent: true,
            persistent_dedup: false,
        }
        .canon(&program.persistent, opts.contraction, opts.mult_cap)
    };
    if !out.iter().any(|(r, t)| r == &rule.name && t == &target) {
        out.push((rule.name.clone(), target));
    }
    Ok(())
}

fn check_options(program: &Program, opts: &EnumerateOptions) -> Result<(), FixpointError> {
    if opts.contraction {
        let violations = validate_hybrid(program);
        if let Some(v) = violations.first() {
            return Err(FixpointError::NotHybrid(format!(
                "rule {}: {}",
                v.rule, v.reason
            )));
        }
    }
    if let Some(cap) = opts.mult_cap {
        for rule in &program.rules {
            if !rule.removed.is_empty() {
                return Err(FixpointError::CapWithSimplification(rule.name.clone()));
            }
            let mut by_symbol: BTreeMap<(String, usize), usize> = BTreeMap::new();
            for h in rule.head_atoms() {
                *by_symbol.entry(h.symbol()).or_insert(0) += 1;
            }
            if let Some((_, &need)) = by_symbol.iter().max_by_key(|(_, &n)| n) {
                if need > cap {
                    return Err(FixpointError::CapTooSmall {
                        cap,
                        need,
                        rule: rule.name.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Breadth-first closure of the abstract transition relation from the
/// given roots, up to `opts.bound` distinct states. Every rule instance
/// and every head selection yields an edge. ⊥ is admitted even once the
/// bound is hit, so "an inconsistent state is reachable" never silently
/// disappears into truncation.
pub fn enumerate(
    program: &Program,
    roots: &[CanonState],
    opts: &EnumerateOptions,
) -> Result<GroundTransitionSystem, FixpointError> {
    check_options(program, opts)?;
    let canon_roots: Vec<CanonState> = roots
        .iter()
        .map(|r| {
            r.clone()
                .canon(&program.persistent, opts.contraction, opts.mult_cap)
        })
        .collect();
    let mut states: BTreeSet<CanonState> = BTreeSet::new();
    let mut edges: BTreeSet<(CanonState, String, CanonState)> = BTreeSet::new();
    let mut queue: VecDeque<CanonState> = VecDeque::new();
    let mut truncated = false;
    for r in &canon_roots {
        if states.insert(r.clone()) {
            queue.push_back(r.clone());
        }
    }
    while let Some(s) = queue.pop_front() {
        if s.is_bottom() {
            continue;
        }
        for (rule, target) in successors(&s, program, opts)? {
            if !states.contains(&target) {
                if states.len() >= opts.bound && !target.is_bottom() {
                    truncated = true;
                    continue;
                }
                states.insert(target.clone());
                queue.push_back(target.clone());
            }
            edges.insert((s.clone(), rule, target));
        }
    }
    Ok(GroundTransitionSystem {
        states,
        edges,
        roots: canon_roots,
        truncated,
        bound: opts.bound,
        persistent: program.persistent.clone(),
        contraction: opts.contraction,
    })
}

fn predecessor_map(ts: &GroundTransitionSystem) -> BTreeMap<&CanonState, Vec<&CanonState>> {
    let mut preds: BTreeMap<&CanonState, Vec<&CanonState>> = BTreeMap::new();
    for (src, _, tgt) in &ts.edges {
        preds.entry(tgt).or_default().push(src);
    }
    preds
}

fn successor_map(ts: &GroundTransitionSystem) -> BTreeMap<&CanonState, Vec<&CanonState>> {
    let mut succs: BTreeMap<&CanonState, Vec<&CanonState>> = BTreeMap::new();
    for (src, _, tgt) in &ts.edges {
        succs.entry(src).or_default().push(tgt);
    }
    succs
}

/// Least fixpoint of the existential cause operator: the states that can
/// be rewritten to a consistent answer. Seeded with the consistent answer
/// states and closed backwards — a state joins as soon as *some* successor
/// is in.
pub fn lfp_csr(ts: &GroundTransitionSystem) -> Result<BTreeSet<CanonState>, FixpointError> {
    if ts.truncated {
        return Err(FixpointError::Truncated(ts.bound));
    }
    let preds = predecessor_map(ts);
    let mut member: BTreeSet<CanonState> = ts
        .states
        .iter()
        .filter(|s| s.is_answer())
        .cloned()
        .collect();
    let mut queue: VecDeque<CanonState> = member.iter().cloned().collect();
    while let Some(t) = queue.pop_front() {
        for &src in preds.get(&t).into_iter().flatten() {
            if !member.contains(src) {
                member.insert(src.clone());
                queue.push_back(src.clone());
            }
        }
    }
    Ok(member)
}

/// Verdict for one root when the state space could not be exhausted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundedVerdict {
    /// No inconsistent state found within the bound — an approximation.
    NoInconsistencyWithinBound,
    /// ⊥ is reachable — conclusive non-membership.
    InconsistentReachable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GfpOutcome {
    /// The exact greatest fixpoint: all states from which ⊥ is
    /// unreachable.
    Exact(BTreeSet<CanonState>),
    /// Truncated exploration: one verdict per root, in root order.
    Bounded(Vec<(CanonState, BoundedVerdict)>),
}

/// Greatest fixpoint of the universal cause operator. On a complete
/// system this is computed by iterated removal: start from all consistent
/// states and discard any state with a successor outside the set. On a
/// truncated system it degrades to per-root bounded verdicts.
pub fn gfp_cpr(ts: &GroundTransitionSystem) -> GfpOutcome {
    if !ts.truncated {
        let preds = predecessor_map(ts);
        let succs = successor_map(ts);
        let mut alive: BTreeSet<CanonState> =
            ts.states.iter().filter(|s| s.consistent).cloned().collect();
        let mut queue: VecDeque<CanonState> = alive
            .iter()
            .filter(|s| {
                succs
                    .get(*s)
                    .into_iter()
                    .flatten()
                    .any(|t| !alive.contains(*t))
            })
            .cloned()
            .collect();
        for s in &queue {
            alive.remove(s);
        }
        while let Some(dead) = queue.pop_front() {
            for &src in preds.get(&dead).into_iter().flatten() {
                if alive.contains(src) {
                    alive.remove(src);
                    queue.push_back(src.clone());
                }
            }
        }
        GfpOutcome::Exact(alive)
    } else {
        let succs = successor_map(ts);
        let verdicts = ts
            .roots
            .iter()
            .map(|root| {
                let mut seen: BTreeSet<&CanonState> = BTreeSet::new();
                let mut queue: VecDeque<&CanonState> = VecDeque::new();
                seen.insert(root);
                queue.push_back(root);
                let mut hit = !root.consistent;
                while let Some(s) = queue.pop_front() {
                    for &t in succs.get(s).into_iter().flatten() {
                        if seen.insert(t) {
                            if !t.consistent {
                                hit = true;
                            }
                            queue.push_back(t);
                        }
                    }
                }
                let verdict = if hit {
                    BoundedVerdict::InconsistentReachable
                } else {
                    BoundedVerdict::NoInconsistencyWithinBound
                };
                (root.clone(), verdict)
            })
            .collect();
        GfpOutcome::Bounded(verdicts)
    }
}

/// The simplification fragment P^s: the rules that remove constraints.
pub fn simplification_fragment(program: &Program) -> Program {
    Program {
        rules: program
            .rules
            .iter()
            .filter(|r| !r.removed.is_empty())
            .cloned()
            .collect(),
        persistent: program.persistent.clone(),
        linear_declared: program.linear_declared.clone(),
    }
}

/// The nested hybrid fixpoint ν∘μ.
///
/// Inner μ over `ts_simpl` (the P^s edges): the states that can be
/// simplified to a consistent, purely persistent state. Outer ν over the
/// full edges: iterated removal of states with any successor outside, so
/// the result holds exactly the states all of whose reachable states stay
/// inside the inner set.
pub fn hybrid_nested(
    ts_full: &GroundTransitionSystem,
    ts_simpl: &GroundTransitionSystem,
) -> Result<BTreeSet<CanonState>, FixpointError> {
    if ts_full.truncated || ts_simpl.truncated {
        return Err(FixpointError::Truncated(ts_full.bound.min(ts_simpl.bound)));
    }
    // Inner μ: backward closure along simplification edges from the
    // consistent purely persistent states.
    let preds_s = predecessor_map(ts_simpl);
    let mut inner: BTreeSet<CanonState> = ts_simpl
        .states
        .iter()
        .chain(&ts_full.states)
        .filter(|s| s.consistent && s.all_persistent(&ts_full.persistent))
        .cloned()
        .collect();
    let mut queue: VecDeque<CanonState> = inner.iter().cloned().collect();
    while let Some(t) = queue.pop_front() {
        for &src in preds_s.get(&t).into_iter().flatten() {
            if !inner.contains(src) {
                inner.insert(src.clone());
                queue.push_back(src.clone());
            }
        }
    }
    // Outer ν: iterated removal over the full transition relation.
    let preds_f = predecessor_map(ts_full);
    let succs_f = successor_map(ts_full);
    let mut member: BTreeSet<CanonState> = ts_full
        .states
        .iter()
        .filter(|s| inner.contains(*s))
        .cloned()
        .collect();
    let mut removal: VecDeque<CanonState> = member
        .iter()
        .filter(|s| {
            succs_f
                .get(*s)
                .into_iter()
                .flatten()
                .any(|t| !member.contains(*t))
        })
        .cloned()
        .collect();
    for s in &removal {
        member.remove(s);
    }
    while let Some(dead) = removal.pop_front() {
        for &src in preds_f.get(&dead).into_iter().flatten() {
            if member.contains(src) {
                member.remove(src);
                removal.push_back(src.clone());
            }
        }
    }
    Ok(member)
}

/// Convenience wrapper: enumerates the full system from the roots under
/// contraction, re-enumerates the simplification fragment from every
/// reached state, and runs [`hybrid_nested`]. Returns the full system
/// alongside the member set so callers can inspect edges and roots.
pub fn hybrid_check(
    program: &Program,
    roots: &[CanonState],
    bound: usize,
) -> Result<(GroundTransitionSystem, BTreeSet<CanonState>), FixpointError> {
    let opts = EnumerateOptions {
        bound,
        contraction: true,
        mult_cap: None,
    };
    let full = enumerate(program, roots, &opts)?;
    let simpl_program = simplification_fragment(program);
    let all_states: Vec<CanonState> = full.states.iter().cloned().collect();
    let simpl = enumerate(&simpl_program, &all_states, &opts)?;
    let members = hybrid_nested(&full, &simpl)?;
    Ok((full, members))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSufficiency {
    /// Every state reached within the bound simplifies to a purely
    /// persistent state.
    YesWithinBound,
    /// This reachable state provably cannot be simplified to a purely
    /// persistent state.
    Counterexample(CanonState),
    /// The bound ran out before the question was settled.
    Inconclusive,
}

/// Bounded check of the data-sufficiency property: every state reachable
/// from the root must have *some* simplification derivation ending in a
/// purely persistent state. A counterexample is only reported when its
/// simplification search was exhausted (not truncated).
pub fn data_sufficient_bounded(
    program: &Program,
    root: &CanonState,
    bound: usize,
) -> Result<DataSufficiency, FixpointError> {
    let opts = EnumerateOptions {
        bound,
        contraction: true,
        mult_cap: None,
    };
    let full = enumerate(program, std::slice::from_ref(root), &opts)?;
    let simpl_program = simplification_fragment(program);
    let mut inconclusive = full.truncated;
    for s in &full.states {
        if s.is_bottom() {
            continue;
        }
        let sub = enumerate(&simpl_program, std::slice::from_ref(s), &opts)?;
        let reaches_purely_persistent = sub
            .states
            .iter()
            .any(|t| t.all_persistent(&program.persistent));
        if reaches_purely_persistent {
            continue;
        }
        if sub.truncated {
            inconclusive = true;
        } else {
            return Ok(DataSufficiency::Counterexample(s.clone()));
        }
    }
    if inconclusive {
        Ok(DataSufficiency::Inconclusive)
    } else {
        Ok(DataSufficiency::YesWithinBound)
    }
}
