//! Source-to-source translation that compiles persistent constraints away.
//!
//! Input programs declare some constraint symbols persistent; such
//! constraints act as an ever-growing *set* (telling a duplicate is a
//! no-op, and a persistent constraint is never consumed), which is what
//! coinductive specifications want. The translation produces an ordinary
//! linear program in three steps:
//!
//! 1. *saturate*: for every rule whose kept head could match one stored
//!    constraint several times, add a variant with those head positions
//!    collapsed into one (set semantics makes the copies
//!    indistinguishable). Collapsing repeats to a fixpoint and variants
//!    are deduplicated up to variable renaming.
//! 2. *wrap*: a kept persistent head `p(t̄)` becomes `a(S, p(t̄))` — alive
//!    at some stamp `S` — and a persistent body atom becomes `f(p(t̄))`,
//!    a fresh, not yet stamped copy. Linear atoms pass through, except
//!    that user symbols colliding with the reserved `f/1`, `f/2`, `a/2`,
//!    `c_f/1`, `c_a/1` are renamed apart (`_l` suffix).
//! 3. *control*: three rules drive the `fresh → frozen → alive`
//!    lifecycle. `stamp` numbers fresh constraints with the `c_f`
//!    counter; `set` discards an alive constraint whose payload is
//!    already alive under a smaller stamp (this is what detects cycles);
//!    `unfreeze` activates frozen constraints in stamp order, gated by
//!    the `c_a` counter, at a priority below every user rule — so each
//!    revival happens only after the current stratum has quiesced,
//!    which keeps the schedule fair by construction.
//!
//! Queries translate by wrapping persistent goal atoms in `f/1` and
//! appending the two counters at zero.

use crate::lang::{
    validate_hybrid, ConstraintAtom, HybridViolation, Program, Query, Rule, RESERVED_SYMBOLS,
};
use crate::term::Term;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslateError {
    NotHybrid(Vec<HybridViolation>),
}

impl std::error::Error for TranslateError {}

impl fmt::Display for TranslateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateError::NotHybrid(violations) => {
                writeln!(f, "program is outside the hybrid fragment:")?;
                for v in violations {
                    writeln!(f, "  {v}")?;
                }
                Ok(())
            }
        }
    }
}

/// The output of [`translate`]: an ordinary (all-linear) program plus the
/// bookkeeping needed to translate queries and read stores back.
#[derive(Debug, Clone)]
pub struct TranslatedProgram {
    pub program: Program,
    /// Names chosen for the three control rules (uniquified against user
    /// rule names).
    pub stamp_rule: String,
    pub set_rule: String,
    pub unfreeze_rule: String,
    /// Linear user symbols that clashed with reserved ones, old -> new.
    pub renamed_linear: BTreeMap<(String, usize), String>,
    /// The persistent symbols of the source program.
    pub persistent: BTreeSet<(String, usize)>,
    /// Amount added to every user rule priority to clear room for the
    /// stamp/set rules (zero unless a user rule had priority < 3).
    pub shift: u32,
}

fn canon_key(r: &Rule) -> Rule {
    let map: BTreeMap<String, String> = r
        .all_vars()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, format!("V{i}")))
        .collect();
    let ren = |a: &ConstraintAtom| ConstraintAtom {
        functor: a.functor.clone(),
        args: a.args.iter().map(|t| t.rename(&map)).collect(),
    };
    Rule {
        name: String::new(),
        priority: r.priority,
        kept: r.kept.iter().map(ren).collect(),
        removed: r.removed.iter().map(ren).collect(),
        guard: r.guard.iter().map(ren).collect(),
        body: r.body.iter().map(ren).collect(),
    }
}

fn unique_name(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    let mut k = 1;
    loop {
        let candidate = format!("{base}_{k}");
        if !taken.contains(&candidate) {
            return candidate;
        }
        k += 1;
    }
}

/// Step 1: closes the rule set under collapsing of kept persistent head
/// pairs that could stand for the same stored constraint. The collapsed
/// variant keeps the first atom of the pair and asks the argument-wise
/// equations in its guard, so the deleted head's variables (now locals)
/// pick up the surviving head's values.
pub fn saturate(p: &Program) -> Program {
    let mut out = p.clone();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for r in &out.rules {
        seen.insert(format!("{}", canon_key(r)));
    }
    let mut taken: BTreeSet<String> = out.rules.iter().map(|r| r.name.clone()).collect();
    // (rule, root-name, per-root variant counter start)
    let mut queue: VecDeque<(Rule, String)> = out
        .rules
        .iter()
        .map(|r| (r.clone(), r.name.clone()))
        .collect();
    let mut counters: BTreeMap<String, usize> = BTreeMap::new();

    while let Some((rule, root)) = queue.pop_front() {
        for i in 0..rule.kept.len() {
            for j in (i + 1)..rule.kept.len() {
                let (a, b) = (&rule.kept[i], &rule.kept[j]);
                if !p.atom_is_persistent(a) || !p.atom_is_persistent(b) {
                    continue;
                }
                if crate::term::unify(&a.to_term(), &b.to_term(), &Default::default()).is_none() {
                    continue;
                }
                let mut kept = rule.kept.clone();
                kept.remove(j);
                let mut guard: Vec<ConstraintAtom> = a
                    .args
                    .iter()
                    .zip(&b.args)
                    .map(|(x, y)| ConstraintAtom::new("=", vec![x.clone(), y.clone()]))
                    .collect();
                guard.extend(rule.guard.iter().cloned());
                let variant = Rule {
                    name: String::new(),
                    priority: rule.priority,
                    kept,
                    removed: rule.removed.clone(),
                    guard,
                    body: rule.body.clone(),
                };
                if !seen.insert(format!("{}", canon_key(&variant))) {
                    continue;
                }
                let counter = counters.entry(root.clone()).or_insert(0);
                *counter += 1;
                let name = unique_name(&format!("{root}_s{counter}"), &taken);
                taken.insert(name.clone());
                let variant = Rule { name, ..variant };
                out.rules.push(variant.clone());
                queue.push_back((variant, root.clone()));
            }
        }
    }
    out
}

fn rename_atom(a: &ConstraintAtom, renames: &BTreeMap<(String, usize), String>) -> ConstraintAtom {
    match renames.get(&a.symbol()) {
        Some(new) => ConstraintAtom::new(new.clone(), a.args.clone()),
        None => a.clone(),
    }
}

/// Step 2 for one rule: wrap persistent heads in `a/2` (with a fresh stamp
/// variable per position) and persistent body atoms in `f/1`; rename
/// colliding linear symbols.
fn wrap_rule(
    rule: &Rule,
    p: &Program,
    renames: &BTreeMap<(String, usize), String>,
    shift: u32,
) -> Rule {
    let vars: BTreeSet<String> = rule.all_vars().into_iter().collect();
    let mut stamp_counter = 0usize;
    let mut fresh_stamp = || loop {
        stamp_counter += 1;
        let name = format!("_S{stamp_counter}");
        if !vars.contains(&name) {
            return Term::Var(name);
        }
    };
    let kept = rule
        .kept
        .iter()
        .map(|a| {
            if p.atom_is_persistent(a) {
                ConstraintAtom::new("a", vec![fresh_stamp(), a.to_term()])
            } else {
                rename_atom(a, renames)
            }
        })
        .collect();
    let removed = rule
        .removed
        .iter()
        .map(|a| rename_atom(a, renames))
        .collect();
    let body = rule
        .body
        .iter()
        .map(|a| {
            if p.atom_is_persistent(a) {
                ConstraintAtom::new("f", vec![a.to_term()])
            } else if a.is_builtin() {
                a.clone()
            } else {
                rename_atom(a, renames)
            }
        })
        .collect();
    Rule {
        name: rule.name.clone(),
        priority: rule.priority + shift,
        kept,
        removed,
        guard: rule.guard.clone(),
        body,
    }
}

fn atom(functor: &str, args: Vec<Term>) -> ConstraintAtom {
    ConstraintAtom::new(functor, args)
}

/// Step 3: the stamp/set/unfreeze control rules.
fn control_rules(stamp: &str, set: &str, unfreeze: &str, unfreeze_prio: u32) -> Vec<Rule> {
    let (x, y, z) = (Term::var("X"), Term::var("Y"), Term::var("Z"));
    vec![
        Rule {
            name: stamp.to_string(),
            priority: 1,
            kept: vec![],
            removed: vec![atom("f", vec![x.clone()]), atom("c_f", vec![y.clone()])],
            guard: vec![],
            body: vec![
                atom("f", vec![y.clone(), x.clone()]),
                atom(
                    "c_f",
                    vec![Term::compound("+", vec![y.clone(), Term::Int(1)])],
                ),
            ],
        },
        Rule {
            name: set.to_string(),
            priority: 2,
            kept: vec![atom("a", vec![y.clone(), x.clone()])],
            removed: vec![atom("a", vec![z.clone(), x.clone()])],
            guard: vec![atom("<", vec![y.clone(), z.clone()])],
            body: vec![atom("true", vec![])],
        },
        Rule {
            name: unfreeze.to_string(),
            priority: unfreeze_prio,
            kept: vec![],
            removed: vec![
                atom("f", vec![y.clone(), x.clone()]),
                atom("c_a", vec![y.clone()]),
            ],
            guard: vec![],
            body: vec![
                atom("a", vec![y.clone(), x]),
                atom("c_a", vec![Term::compound("+", vec![y, Term::Int(1)])]),
            ],
        },
    ]
}

/// Compiles a hybrid program into an all-linear one.
pub fn translate(p: &Program) -> Result<TranslatedProgram, TranslateError> {
    let violations = validate_hybrid(p);
    if !violations.is_empty() {
        return Err(TranslateError::NotHybrid(violations));
    }

    // Rename linear user symbols that collide with the control symbols.
    // Persistent symbols never collide: they only survive as payload terms.
    let user_symbols = p.user_symbols();
    let mut renamed_linear = BTreeMap::new();
    for (f, a) in &user_symbols {
        let clashes = RESERVED_SYMBOLS.iter().any(|(rf, ra)| rf == f && ra == a);
        if clashes && !p.is_persistent(f, *a) {
            let mut candidate = format!("{f}_l");
            while user_symbols.contains(&(candidate.clone(), *a))
                || RESERVED_SYMBOLS
                    .iter()
                    .any(|(rf, ra)| *rf == candidate && ra == a)
            {
                candidate.push_str("_l");
            }
            renamed_linear.insert((f.clone(), *a), candidate);
        }
    }

    // User priorities must sit strictly between the set rule (2) and the
    // unfreeze rule; shift them up if any is more urgent than 3.
    let min_user = p.rules.iter().map(|r| r.priority).min().unwrap_or(3);
    let shift = 3u32.saturating_sub(min_user);
    let max_user = p
        .rules
        .iter()
        .map(|r| r.priority + shift)
        .max()
        .unwrap_or(4);
    let unfreeze_prio = max_user.max(4) + 1;

    let saturated = saturate(p);
    let mut rules: Vec<Rule> = saturated
        .rules
        .iter()
        .map(|r| wrap_rule(r, p, &renamed_linear, shift))
        .collect();

    let taken: BTreeSet<String> = rules.iter().map(|r| r.name.clone()).collect();
    let stamp = unique_name("stamp", &taken);
    let set = unique_name("set", &taken);
    let unfreeze = unique_name("unfreeze", &taken);
    let mut all = control_rules(&stamp, &set, &unfreeze, unfreeze_prio);
    // stamp and set go first, unfreeze last, mirroring their urgency.
    let unfreeze_rule = all.pop().unwrap();
    all.append(&mut rules);
    all.push(unfreeze_rule);

    Ok(TranslatedProgram {
        program: Program {
            rules: all,
            persistent: BTreeSet::new(),
            linear_declared: BTreeSet::new(),
        },
        stamp_rule: stamp,
        set_rule: set,
        unfreeze_rule: unfreeze,
        renamed_linear,
        persistent: p.persistent.clone(),
        shift,
    })
}

impl TranslatedProgram {
    /// Translates a query against the source program into one against the
    /// translated program: persistent atoms are told fresh, colliding
    /// linear symbols renamed, and the two counters appended at zero.
    pub fn translate_query(&self, q: &Query) -> Query {
        let mut goal: Vec<ConstraintAtom> = q
            .goal
            .iter()
            .map(|a| {
                if a.is_builtin() {
                    a.clone()
                } else if self.persistent.contains(&a.symbol()) {
                    ConstraintAtom::new("f", vec![a.to_term()])
                } else {
                    rename_atom(a, &self.renamed_linear)
                }
            })
            .collect();
        goal.push(atom("c_f", vec![Term::Int(0)]));
        goal.push(atom("c_a", vec![Term::Int(0)]));
        Query {
            goal,
            globals: q.globals.clone(),
        }
    }

    /// Maps one translated store atom back to source vocabulary: alive and
    /// frozen constraints unwrap to their payload, counters disappear, and
    /// renamed linear symbols get their old names back.
    pub fn readback_atom(&self, a: &ConstraintAtom) -> Option<ConstraintAtom> {
        match (a.functor.as_str(), a.arity()) {
            ("c_f", 1) | ("c_a", 1) => None,
            ("a", 2) | ("f", 2) => ConstraintAtom::from_term(&a.args[1]),
            ("f", 1) => ConstraintAtom::from_term(&a.args[0]),
            _ => {
                for ((old, arity), new) in &self.renamed_linear {
                    if *new == a.functor && *arity == a.arity() {
                        return Some(ConstraintAtom::new(old.clone(), a.args.clone()));
                    }
                }
                Some(a.clone())
            }
        }
    }

    /// Reads a translated store back in source vocabulary, preserving order.
    pub fn readback_store(&self, atoms: &[ConstraintAtom]) -> Vec<ConstraintAtom> {
        atoms.iter().filter_map(|a| self.readback_atom(a)).collect()
    }
}
