//! The prioritized operational semantics.
//!
//! States carry a goal (atoms still to execute), a store of identified user
//! constraints, the built-in store, a propagation history of tokens, the
//! query's global variables, and the next fresh identifier. Three
//! transitions drive a derivation:
//!
//! - *solve*: the leftmost goal atom is a built-in; tell it;
//! - *introduce*: the leftmost goal atom is a user constraint; move it,
//!   resolved, into the store under a fresh identifier;
//! - *apply*: with an empty goal, fire a rule instance. Only instances of
//!   the most urgent priority that has any applicable instance may fire
//!   (smaller number = more urgent); within that level candidates are
//!   ordered by rule appearance and then by store order of the matched
//!   constraints, and the first one fires.
//!
//! An instance is applicable when its heads match distinct stored
//! constraints modulo the built-in store, its guard is entailed (guards may
//! bind rule-local variables only), and its token is not yet in the
//! history. Firing records the token, so a propagation rule meets each
//! combination of constraints at most once.

use crate::lang::{ConstraintAtom, Program, Query, Rule};
use crate::store::{ask_conj, Ask, BuiltinError, BuiltinStore};
use crate::term::{match_term, Subst, Term};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Id = usize;

/// A stored user constraint with its identifier. The atom is kept resolved
/// against the built-in store as of the last apply phase; `ground` marks
/// atoms that no later binding can change, so refreshes skip them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifiedConstraint {
    pub id: Id,
    pub atom: ConstraintAtom,
    ground: bool,
}

/// A propagation-history entry: which rule fired on which constraints
/// (kept ids first, then removed ids, in head order).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Token {
    pub rule: String,
    pub ids: Vec<Id>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Solve,
    Introduce,
    Apply,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Solve => write!(f, "solve"),
            StepKind::Introduce => write!(f, "introduce"),
            StepKind::Apply => write!(f, "apply"),
        }
    }
}

/// What a single step did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepInfo {
    pub kind: StepKind,
    /// Rule name and priority for apply steps.
    pub rule: Option<(String, u32)>,
}

/// One entry of a recorded derivation trace. `pre` is a snapshot of the
/// state the step started from; the sizes are taken from it.
#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub step: usize,
    pub kind: StepKind,
    pub rule: Option<(String, u32)>,
    pub store_size: usize,
    pub token_count: usize,
    pub pre: ConcreteState,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match &self.rule {
            Some((name, _)) => name.as_str(),
            None => "-",
        };
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.step, self.kind, rule, self.store_size, self.token_count
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DerivationError {
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error("derivation ended with {0} built-in(s) still waiting on instantiation")]
    PendingSuspensions(usize),
}

/// A fireable rule instance, self-contained: applying it needs no further
/// matching. Produced by [`ConcreteState::apply_choices`].
#[derive(Debug, Clone)]
pub struct ApplyChoice {
    pub rule: String,
    pub priority: u32,
    /// Matched constraint ids, kept heads first.
    pub ids: Vec<Id>,
    removed_ids: Vec<Id>,
    token: Token,
    /// Matching plus guard-local bindings, over the renamed rule variables.
    view: Subst,
    body: Vec<ConstraintAtom>,
    next_var: usize,
}

/// A state of the operational semantics.
#[derive(Debug, Clone)]
pub struct ConcreteState {
    /// Atoms still to execute, leftmost first.
    pub goal: Vec<ConstraintAtom>,
    /// User constraints in insertion order.
    pub store: Vec<IdentifiedConstraint>,
    pub builtins: BuiltinStore,
    pub tokens: BTreeSet<Token>,
    pub globals: BTreeSet<String>,
    pub next_id: Id,
    next_var: usize,
    /// Built-in generation the stored atoms were last resolved at.
    refreshed_at: u64,
}

impl ConcreteState {
    pub fn initial(query: &Query) -> ConcreteState {
        ConcreteState {
            goal: query.goal.clone(),
            store: Vec::new(),
            builtins: BuiltinStore::new(),
            tokens: BTreeSet::new(),
            globals: query.globals.clone(),
            next_id: 0,
            next_var: 0,
            refreshed_at: 0,
        }
    }

    /// The stored user constraints, resolved against the built-in store.
    pub fn store_atoms(&self) -> Vec<ConstraintAtom> {
        self.store
            .iter()
            .map(|c| {
                if c.ground {
                    c.atom.clone()
                } else {
                    self.resolve_atom(&c.atom)
                }
            })
            .collect()
    }

    fn resolve_atom(&self, atom: &ConstraintAtom) -> ConstraintAtom {
        ConstraintAtom {
            functor: atom.functor.clone(),
            args: atom.args.iter().map(|a| self.builtins.resolve(a)).collect(),
        }
    }

    /// Re-resolves the non-ground stored atoms after new bindings arrived.
    fn refresh_store(&mut self) {
        if self.refreshed_at == self.builtins.generation() {
            return;
        }
        let mut refreshed: Vec<(usize, ConstraintAtom, bool)> = Vec::new();
        for (i, c) in self.store.iter().enumerate() {
            if !c.ground {
                let atom = self.resolve_atom(&c.atom);
                let ground = atom.is_ground();
                refreshed.push((i, atom, ground));
            }
        }
        for (i, atom, ground) in refreshed {
            self.store[i].atom = atom;
            self.store[i].ground = ground;
        }
        self.refreshed_at = self.builtins.generation();
    }

    /// Resolved bindings of the query's globals, skipping still-open ones.
    pub fn global_bindings(&self) -> Vec<(String, Term)> {
        self.globals
            .iter()
            .filter_map(|v| {
                let t = self.builtins.resolve(&Term::Var(v.clone()));
                if t == Term::Var(v.clone()) {
                    None
                } else {
                    Some((v.clone(), t))
                }
            })
            .collect()
    }

    fn rename_rule(&self, rule: &Rule, mark: usize) -> (Rule, BTreeSet<String>) {
        let map: BTreeMap<String, String> = rule
            .all_vars()
            .into_iter()
            .map(|v| (v.clone(), format!("_R{mark}_{v}")))
            .collect();
        let ren_atom = |a: &ConstraintAtom| ConstraintAtom {
            functor: a.functor.clone(),
            args: a.args.iter().map(|t| t.rename(&map)).collect(),
        };
        let renamed = Rule {
            name: rule.name.clone(),
            priority: rule.priority,
            kept: rule.kept.iter().map(ren_atom).collect(),
            removed: rule.removed.iter().map(ren_atom).collect(),
            guard: rule.guard.iter().map(ren_atom).collect(),
            body: rule.body.iter().map(ren_atom).collect(),
        };
        let locals = renamed.local_vars();
        (renamed, locals)
    }

    /// Depth-first search for injective head matchings over the resolved
    /// subjects, in store order per head position. Each complete matching is
    /// token-checked and guard-checked; survivors are emitted in discovery
    /// order, stopping once `limit` of them are collected.
    ///
    /// `merge_store_view` folds the built-in substitution into the guard's
    /// view. The engine's own loop passes `false`: subjects are freshly
    /// resolved there, so the built-in store has nothing left to add.
    fn instances_of(
        &self,
        rule: &Rule,
        resolved: &[ConstraintAtom],
        merge_store_view: bool,
        limit: usize,
        out: &mut Vec<ApplyChoice>,
    ) -> Result<(), BuiltinError> {
        let mark = self.next_var;
        let (renamed, locals) = self.rename_rule(rule, mark);
        let heads: Vec<&ConstraintAtom> = renamed.kept.iter().chain(&renamed.removed).collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(heads.len());

        #[allow(clippy::too_many_arguments)]
        fn dfs(
            state: &ConcreteState,
            rule_src: &Rule,
            renamed: &Rule,
            heads: &[&ConstraintAtom],
            resolved: &[ConstraintAtom],
            merge_store_view: bool,
            limit: usize,
            locals: &BTreeSet<String>,
            chosen: &mut Vec<usize>,
            theta: &Subst,
            mark: usize,
            out: &mut Vec<ApplyChoice>,
        ) -> Result<(), BuiltinError> {
            if out.len() >= limit {
                return Ok(());
            }
            if chosen.len() == heads.len() {
                let ids: Vec<Id> = chosen.iter().map(|&i| state.store[i].id).collect();
                let token = Token {
                    rule: rule_src.name.clone(),
                    ids: ids.clone(),
                };
                if state.tokens.contains(&token) {
                    return Ok(());
                }
                let view = if merge_store_view {
                    state.builtins.subst().merged(theta)
                } else {
                    theta.clone()
                };
                match ask_conj(&renamed.guard, &view, locals)? {
                    Ask::Holds(final_view) => {
                        let removed_ids = ids[renamed.kept.len()..].to_vec();
                        let body = renamed.body.iter().map(|a| a.apply(&final_view)).collect();
                        out.push(ApplyChoice {
                            rule: rule_src.name.clone(),
                            priority: rule_src.priority,
                            ids,
                            removed_ids,
                            token,
                            view: final_view,
                            body,
                            next_var: mark + 1,
                        });
                    }
                    Ask::Fails | Ask::Unknown => {}
                }
                return Ok(());
            }
            let head = heads[chosen.len()];
            for (i, subject) in resolved.iter().enumerate() {
                if out.len() >= limit {
                    return Ok(());
                }
                if chosen.contains(&i)
                    || subject.functor != head.functor
                    || subject.arity() != head.arity()
                {
                    continue;
                }
                if let Some(theta2) = match_term(&head.to_term(), &subject.to_term(), theta) {
                    chosen.push(i);
                    dfs(
                        state,
                        rule_src,
                        renamed,
                        heads,
                        resolved,
                        merge_store_view,
                        limit,
                        locals,
                        chosen,
                        &theta2,
                        mark,
                        out,
                    )?;
                    chosen.pop();
                }
            }
            Ok(())
        }

        dfs(
            self,
            rule,
            &renamed,
            &heads,
            resolved,
            merge_store_view,
            limit,
            &locals,
            &mut chosen,
            &Subst::new(),
            mark,
            out,
        )
    }

    /// All applicable instances of the most urgent priority level that has
    /// any, in firing order. Empty when no rule applies (or the state is
    /// failed). Only meaningful once the goal is empty.
    pub fn apply_choices(&self, program: &Program) -> Result<Vec<ApplyChoice>, BuiltinError> {
        if !self.builtins.consistent() {
            return Ok(Vec::new());
        }
        let resolved = self.store_atoms();
        let mut levels: Vec<u32> = program.rules.iter().map(|r| r.priority).collect();
        levels.sort_unstable();
        levels.dedup();
        for level in levels {
            let mut out = Vec::new();
            for rule in program.rules.iter().filter(|r| r.priority == level) {
                self.instances_of(rule, &resolved, true, usize::MAX, &mut out)?;
            }
            if !out.is_empty() {
                return Ok(out);
            }
        }
        Ok(Vec::new())
    }

    /// Applicable instances of every priority level (not just the most
    /// urgent). Used by tests that audit priority handling.
    pub fn apply_choices_all_levels(
        &self,
        program: &Program,
    ) -> Result<Vec<ApplyChoice>, BuiltinError> {
        let mut out = Vec::new();
        if !self.builtins.consistent() {
            return Ok(out);
        }
        let resolved = self.store_atoms();
        for rule in &program.rules {
            self.instances_of(rule, &resolved, true, usize::MAX, &mut out)?;
        }
        Ok(out)
    }

    /// The first applicable instance in firing order, assuming the stored
    /// atoms are freshly resolved (the engine refreshes before calling).
    fn first_choice(&self, program: &Program) -> Result<Option<ApplyChoice>, BuiltinError> {
        let resolved: Vec<ConstraintAtom> = self.store.iter().map(|c| c.atom.clone()).collect();
        let mut levels: Vec<u32> = program.rules.iter().map(|r| r.priority).collect();
        levels.sort_unstable();
        levels.dedup();
        let mut out = Vec::with_capacity(1);
        for level in levels {
            for rule in program.rules.iter().filter(|r| r.priority == level) {
                self.instances_of(rule, &resolved, false, 1, &mut out)?;
                if let Some(choice) = out.pop() {
                    return Ok(Some(choice));
                }
            }
        }
        Ok(None)
    }

    /// Fires a previously computed instance: records its token, drops the
    /// removed constraints, and schedules the instantiated body as the new
    /// goal (the goal is empty whenever instances exist).
    pub fn apply_choice(&mut self, choice: &ApplyChoice) {
        self.tokens.insert(choice.token.clone());
        self.store.retain(|c| !choice.removed_ids.contains(&c.id));
        let _ = &choice.view; // bindings are already folded into the body
        self.goal.extend(choice.body.iter().cloned());
        self.next_var = self.next_var.max(choice.next_var);
    }

    /// Performs one transition. `Ok(None)` means the state is final.
    pub fn step(&mut self, program: &Program) -> Result<Option<StepInfo>, DerivationError> {
        if !self.builtins.consistent() {
            return Ok(None);
        }
        if !self.goal.is_empty() {
            let atom = self.goal.remove(0);
            if atom.is_builtin() {
                self.builtins.tell(&atom)?;
                return Ok(Some(StepInfo {
                    kind: StepKind::Solve,
                    rule: None,
                }));
            }
            let resolved = self.resolve_atom(&atom);
            let ground = resolved.is_ground();
            self.store.push(IdentifiedConstraint {
                id: self.next_id,
                atom: resolved,
                ground,
            });
            self.next_id += 1;
            return Ok(Some(StepInfo {
                kind: StepKind::Introduce,
                rule: None,
            }));
        }
        self.refresh_store();
        match self.first_choice(program)? {
            Some(choice) => {
                self.apply_choice(&choice);
                Ok(Some(StepInfo {
                    kind: StepKind::Apply,
                    rule: Some((choice.rule.clone(), choice.priority)),
                }))
            }
            None => {
                let pending = self.builtins.delayed().len();
                if pending > 0 {
                    Err(DerivationError::PendingSuspensions(pending))
                } else {
                    Ok(None)
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub step_limit: usize,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions {
            step_limit: 100_000,
            record_trace: false,
        }
    }
}

/// How a derivation ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivationStatus {
    /// Quiesced with a consistent built-in store.
    Success,
    /// Quiesced because the built-in store became inconsistent.
    Failed,
    /// An instantiation error (or stranded suspension) aborted the run.
    Error(DerivationError),
    /// The step budget ran out before quiescence.
    StepLimit,
}

/// A finished derivation: the last state reached, how it ended, how many
/// steps it took, and the trace if one was requested.
#[derive(Debug, Clone)]
pub struct DerivationResult {
    pub state: ConcreteState,
    pub status: DerivationStatus,
    pub steps: usize,
    pub trace: Vec<TraceEntry>,
}

impl DerivationResult {
    pub fn success(&self) -> bool {
        self.status == DerivationStatus::Success
    }
}

/// Runs a query against a program to quiescence (or until the step budget
/// runs out). Never panics or errors: every outcome is a status.
pub fn run(program: &Program, query: &Query, opts: &RunOptions) -> DerivationResult {
    let mut state = ConcreteState::initial(query);
    let mut trace = Vec::new();
    let mut steps = 0;
    let status = loop {
        if steps >= opts.step_limit {
            break if state.builtins.consistent() {
                DerivationStatus::StepLimit
            } else {
                DerivationStatus::Failed
            };
        }
        let pre = opts.record_trace.then(|| state.clone());
        match state.step(program) {
            Ok(Some(info)) => {
                steps += 1;
                if let Some(pre) = pre {
                    trace.push(TraceEntry {
                        step: steps,
                        kind: info.kind,
                        rule: info.rule,
                        store_size: pre.store.len(),
                        token_count: pre.tokens.len(),
                        pre,
                    });
                }
            }
            Ok(None) => {
                break if state.builtins.consistent() {
                    DerivationStatus::Success
                } else {
                    DerivationStatus::Failed
                };
            }
            Err(e) => break DerivationStatus::Error(e),
        }
    };
    DerivationResult {
        state,
        status,
        steps,
        trace,
    }
}
