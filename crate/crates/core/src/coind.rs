//! Coinductive equality checks built on the persistent-constraint
//! translation: bisimulation of binary automata and regular-expression
//! equivalence through derivative rules.
//!
//! Both checks pose an equality goal `s ~ t`, let a propagation rule
//! unfold it one alphabet step at a time, and rely on the translated
//! program's duplicate elimination to close cycles: a pair seen before is
//! discarded instead of re-expanded, so the run terminates whenever the
//! reachable pair space is finite. The goal holds exactly when the run
//! quiesces with a consistent store; a clash of output bits drives the
//! store inconsistent and refutes it.
//!
//! The [`oracle`] submodule recomputes nullability and derivatives by
//! direct recursion — no rules involved — and decides language equality
//! by brute-force word enumeration. Tests pit the rule-based checker
//! against it.

use crate::engine::{run, DerivationError, DerivationStatus, RunOptions};
use crate::hybrid::{translate, TranslateError};
use crate::lang::{parse_program, parse_term, scalar_goal, ConstraintAtom, Program, Query};
use crate::term::{Term, NIL, TUPLE};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoindError {
    #[error("automaton line {line}: {msg}")]
    Automaton { line: usize, msg: String },
    #[error("unknown automaton state `{0}`")]
    UnknownState(String),
    #[error("`{0}` does not denote a regular expression")]
    RegexSyntax(String),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("derivation error: {0}")]
    Derivation(DerivationError),
    #[error("step limit {0} exceeded; the pair space should be finite, so this indicates a bug")]
    StepLimit(usize),
}

/// Equality verdict of the bisimulation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    NotEqual,
}

/// Verdict of the regular-expression check, which may also give up on a
/// step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegexVerdict {
    Equal,
    NotEqual,
    Limit,
}

/// A binary automaton: every state carries an output bit and two
/// successors, one per letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    /// States in file order.
    pub states: Vec<String>,
    /// state → (output bit, a-successor, b-successor).
    pub dest: BTreeMap<String, (u8, String, String)>,
}

/// Parses the line-oriented automaton format: one `<name> <t:0|1>
/// <a-succ> <b-succ>` per line, `#` starting a comment.
pub fn load_automaton(text: &str) -> Result<Automaton, CoindError> {
    let mut states = Vec::new();
    let mut dest: BTreeMap<String, (u8, String, String)> = BTreeMap::new();
    let err = |line: usize, msg: String| CoindError::Automaton { line, msg };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(
                line_no,
                format!(
                    "expected `<name> <t> <a-succ> <b-succ>`, got {} field(s)",
                    fields.len()
                ),
            ));
        }
        for f in [fields[0], fields[2], fields[3]] {
            if !f.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(
                    line_no,
                    format!("state name `{f}` is not alphanumeric"),
                ));
            }
        }
        let bit: u8 = match fields[1] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(err(
                    line_no,
                    format!("output bit must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let name = fields[0].to_string();
        if dest.contains_key(&name) {
            return Err(err(line_no, format!("state `{name}` defined twice")));
        }
        states.push(name.clone());
        dest.insert(name, (bit, fields[2].to_string(), fields[3].to_string()));
    }
    for (name, (_, a, b)) in &dest {
        for succ in [a, b] {
            if !dest.contains_key(succ) {
                return Err(CoindError::Automaton {
                    line: 0,
                    msg: format!("state `{name}` points to undefined successor `{succ}`"),
                });
            }
        }
    }
    Ok(Automaton { states, dest })
}

/// Picks a fresh variable name for each automaton state: the state name
/// with its first letter upper-cased, disambiguated on collision.
fn state_vars(aut: &Automaton) -> BTreeMap<String, String> {
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut map = BTreeMap::new();
    for s in &aut.states {
        let mut base: String = s.clone();
        if let Some(first) = base.get_mut(0..1) {
            if first.chars().all(|c| c.is_ascii_lowercase()) {
                first.make_ascii_uppercase();
            }
        }
        if !base.starts_with(|c: char| c.is_ascii_uppercase()) {
            base = format!("S{base}");
        }
        let mut candidate = base.clone();
        let mut k = 2;
        while !taken.insert(candidate.clone()) {
            candidate = format!("{base}_{k}");
            k += 1;
        }
        map.insert(s.clone(), candidate);
    }
    map
}

/// Encodes the automaton as one `f/2` constraint per state, the states
/// appearing as variables shared across the atoms.
pub fn automaton_to_constraints(aut: &Automaton) -> Vec<ConstraintAtom> {
    let vars = state_vars(aut);
    aut.states
        .iter()
        .map(|s| {
            let (bit, a, b) = &aut.dest[s];
            ConstraintAtom::new(
                "f",
                vec![
                    Term::var(vars[s].clone()),
                    Term::tuple(vec![
                        Term::Int(*bit as i64),
                        Term::var(vars[a].clone()),
                        Term::var(vars[b].clone()),
                    ]),
                ],
            )
        })
        .collect()
}

const BISIM_SRC: &str = "\
:- persistent f/2.
:- persistent ~/2.
bisim @ f(L, (Lt, La, Lb)), f(K, (Kt, Ka, Kb)), L ~ K ==> Lt = Kt, La ~ Ka, Lb ~ Kb.
";

/// The one-rule equality program over automaton encodings: a claimed pair
/// must agree on output bits and stay related along both letters.
pub fn bisim_program() -> Program {
    static CACHE: OnceLock<Program> = OnceLock::new();
    CACHE
        .get_or_init(|| parse_program(BISIM_SRC).expect("embedded program parses"))
        .clone()
}

/// The equality claim for two automaton states: the automaton constraints
/// plus `s1 ~ s2` over the shared state variables.
pub fn bisim_goal(aut: &Automaton, s1: &str, s2: &str) -> Result<Vec<ConstraintAtom>, CoindError> {
    for s in [s1, s2] {
        if !aut.dest.contains_key(s) {
            return Err(CoindError::UnknownState(s.to_string()));
        }
    }
    let vars = state_vars(aut);
    let mut goal = automaton_to_constraints(aut);
    goal.push(ConstraintAtom::new(
        "~",
        vec![Term::var(vars[s1].clone()), Term::var(vars[s2].clone())],
    ));
    Ok(goal)
}

/// Checks whether two automaton states accept the same language. The
/// claim, together with the automaton constraints scaled `n`-fold, runs
/// through the persistent-constraint translation; duplicate elimination
/// bounds the reachable pairs, so the run always quiesces.
pub fn bisim_check(
    aut: &Automaton,
    s1: &str,
    s2: &str,
    n: usize,
    step_limit: usize,
) -> Result<Verdict, CoindError> {
    let goal = scalar_goal(&bisim_goal(aut, s1, s2)?, n.max(1));
    let globals: BTreeSet<String> = goal.iter().flat_map(|a| a.vars()).collect();
    let translated = translate(&bisim_program())?;
    let query = translated.translate_query(&Query { goal, globals });
    let opts = RunOptions {
        step_limit,
        ..RunOptions::default()
    };
    let result = run(&translated.program, &query, &opts);
    match result.status {
        DerivationStatus::Success => Ok(Verdict::Equal),
        DerivationStatus::Failed => Ok(Verdict::NotEqual),
        DerivationStatus::StepLimit => Err(CoindError::StepLimit(opts.step_limit)),
        DerivationStatus::Error(e) => Err(CoindError::Derivation(e)),
    }
}

/// A regular expression over the two-letter alphabet. `Alt` is the list
/// form: `[]` denotes the empty language and `[e|l]` the union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegexExpr {
    EmptyList,
    Eps,
    CharA,
    CharB,
    Concat(Box<RegexExpr>, Box<RegexExpr>),
    Star(Box<RegexExpr>),
    Plus(Box<RegexExpr>),
    Alt(Vec<RegexExpr>),
}

impl RegexExpr {
    /// The term encoding the rules operate on: `1` for the empty word,
    /// `a`/`b`, pairs for concatenation, postfix `*`/`+`, lists for
    /// alternation.
    pub fn encode(&self) -> Term {
        match self {
            RegexExpr::EmptyList => Term::nil(),
            RegexExpr::Eps => Term::Int(1),
            RegexExpr::CharA => Term::atom("a"),
            RegexExpr::CharB => Term::atom("b"),
            RegexExpr::Concat(l, r) => Term::tuple(vec![l.encode(), r.encode()]),
            RegexExpr::Star(e) => Term::compound("*", vec![e.encode()]),
            RegexExpr::Plus(e) => Term::compound("+", vec![e.encode()]),
            RegexExpr::Alt(es) => Term::list(es.iter().map(|e| e.encode()).collect()),
        }
    }

    pub fn from_term(t: &Term) -> Result<RegexExpr, CoindError> {
        let bad = || CoindError::RegexSyntax(t.to_string());
        match t {
            Term::Int(1) => Ok(RegexExpr::Eps),
            Term::Atom(name) if name == "a" => Ok(RegexExpr::CharA),
            Term::Atom(name) if name == "b" => Ok(RegexExpr::CharB),
            Term::Atom(name) if name == NIL => Ok(RegexExpr::EmptyList),
            Term::Compound(f, args) if f == TUPLE && args.len() == 2 => Ok(RegexExpr::Concat(
                Box::new(RegexExpr::from_term(&args[0])?),
                Box::new(RegexExpr::from_term(&args[1])?),
            )),
            Term::Compound(f, args) if f == "*" && args.len() == 1 => {
                Ok(RegexExpr::Star(Box::new(RegexExpr::from_term(&args[0])?)))
            }
            Term::Compound(f, args) if f == "+" && args.len() == 1 => {
                Ok(RegexExpr::Plus(Box::new(RegexExpr::from_term(&args[0])?)))
            }
            Term::Compound(..) | Term::Atom(_) => {
                let items = crate::term::list_elements(t).map_err(|_| bad())?;
                let mut out = Vec::with_capacity(items.len());
                for item in &items {
                    out.push(RegexExpr::from_term(item)?);
                }
                Ok(RegexExpr::Alt(out))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RegexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.encode())
    }
}

/// Parses the textual regular-expression syntax, e.g.
/// `((b*,a)*,(a,b*))*` or `[1, (a,[a,b]*)]`.
pub fn parse_regex(src: &str) -> Result<RegexExpr, CoindError> {
    let t = parse_term(src).map_err(|e| CoindError::RegexSyntax(e.to_string()))?;
    if !t.is_ground() {
        return Err(CoindError::RegexSyntax(format!(
            "expression must be ground, got {t}"
        )));
    }
    RegexExpr::from_term(&t)
}

const DESTRUCTOR_SRC: &str = "\
:- persistent ~/2.
empty @ f([], R) <=> R = (0, [], []).
eps @ f(1, R) <=> R = (1, [], []).
char_a @ f(a, R) <=> R = (0, [1], []).
char_b @ f(b, R) <=> R = (0, [], [1]).
alt @ f([E|L], R) <=> R = (T, A, B), f(E, (Et, Ea, Eb)), f(L, (Lt, La, Lb)), or(Et, Lt, T), merge(Ea, La, A), merge(Eb, Lb, B).
star @ f(E*, R) <=> R = (1, [(Ea, E*)], [(Eb, E*)]), f(E, (_, Ea, Eb)).
plus @ f(K+, R) <=> R = (T, [Ka, (Ka, K+)], [Kb, (Kb, K+)]), f(K, (T, Ka, Kb)).
conc @ f((E, F), R) <=> f(E, (Et, Ea, Eb)), f_conc(Et, Ea, Eb, F, R).
conc_hold @ f_conc(0, Ea, Eb, F, R) <=> R = (0, [(Ea, F)], [(Eb, F)]).
conc_pass @ f_conc(1, Ea, Eb, F, R) <=> R = (T, A, B), f(F, (T, Fa, Fb)), merge([(Ea, F)], Fa, A), merge([(Eb, F)], Fb, B).
bisim @ L ~ K ==> nonvar(L), nonvar(K) | f(L, (T, La, Lb)), f(K, (T, Ka, Kb)), La ~ Ka, Lb ~ Kb.
";

/// The destructor program: simplification rules computing, for each
/// expression, its output bit and the two lists of derivative summands,
/// plus the propagation rule unfolding equality claims. `f/2` and
/// `f_conc/5` are linear working constraints; `~/2` is persistent.
pub fn destructor_program() -> Program {
    static CACHE: OnceLock<Program> = OnceLock::new();
    CACHE
        .get_or_init(|| parse_program(DESTRUCTOR_SRC).expect("embedded program parses"))
        .clone()
}

/// Decides language equality of two expressions by running the claim
/// `e1 ~ e2` under the translated destructor program.
pub fn regex_equal(
    e1: &RegexExpr,
    e2: &RegexExpr,
    step_limit: usize,
) -> Result<RegexVerdict, CoindError> {
    let translated = translate(&destructor_program())?;
    let goal = vec![ConstraintAtom::new("~", vec![e1.encode(), e2.encode()])];
    let query = translated.translate_query(&Query {
        goal,
        globals: BTreeSet::new(),
    });
    let opts = RunOptions {
        step_limit,
        ..RunOptions::default()
    };
    let result = run(&translated.program, &query, &opts);
    match result.status {
        DerivationStatus::Success => Ok(RegexVerdict::Equal),
        DerivationStatus::Failed => Ok(RegexVerdict::NotEqual),
        DerivationStatus::StepLimit => Ok(RegexVerdict::Limit),
        DerivationStatus::Error(e) => Err(CoindError::Derivation(e)),
    }
}

/// Rule-free recomputation of output bits, derivative lists, and word
/// membership, by direct recursion over the term encoding. Serves as an
/// independent oracle for the rule-based checker.
pub mod oracle {
    use crate::term::{merge3, Term, CONS, NIL, TUPLE};

    /// Whether the empty word belongs to the language. `None` if the term
    /// is not a regular-expression encoding.
    pub fn nullable(t: &Term) -> Option<bool> {
        match t {
            Term::Int(1) => Some(true),
            Term::Atom(n) if n == "a" || n == "b" => Some(false),
            Term::Atom(n) if n == NIL => Some(false),
            Term::Compound(f, args) if f == CONS && args.len() == 2 => {
                Some(nullable(&args[0])? || nullable(&args[1])?)
            }
            Term::Compound(f, args) if f == TUPLE && args.len() == 2 => {
                Some(nullable(&args[0])? && nullable(&args[1])?)
            }
            Term::Compound(f, args) if f == "*" && args.len() == 1 => {
                nullable(&args[0]).map(|_| true)
            }
            Term::Compound(f, args) if f == "+" && args.len() == 1 => nullable(&args[0]),
            _ => None,
        }
    }

    /// The list of derivative summands along `c`, built exactly the way
    /// the rules build it (so results compare for equality).
    pub fn deriv(t: &Term, c: char) -> Option<Term> {
        let lit = |name: &str| -> Term {
            if name.len() == 1 && name.starts_with(c) {
                Term::list(vec![Term::Int(1)])
            } else {
                Term::nil()
            }
        };
        match t {
            Term::Int(1) => Some(Term::nil()),
            Term::Atom(n) if n == NIL => Some(Term::nil()),
            Term::Atom(n) if n == "a" || n == "b" => Some(lit(n)),
            Term::Compound(f, args) if f == CONS && args.len() == 2 => {
                let head = deriv(&args[0], c)?;
                let tail = deriv(&args[1], c)?;
                merge3(&head, &tail).ok()
            }
            Term::Compound(f, args) if f == "*" && args.len() == 1 => {
                let inner = deriv(&args[0], c)?;
                Some(Term::list(vec![Term::tuple(vec![inner, t.clone()])]))
            }
            Term::Compound(f, args) if f == "+" && args.len() == 1 => {
                let inner = deriv(&args[0], c)?;
                Some(Term::list(vec![
                    inner.clone(),
                    Term::tuple(vec![inner, t.clone()]),
                ]))
            }
            Term::Compound(f, args) if f == TUPLE && args.len() == 2 => {
                let ea = deriv(&args[0], c)?;
                let first = Term::list(vec![Term::tuple(vec![ea, args[1].clone()])]);
                if nullable(&args[0])? {
                    let fa = deriv(&args[1], c)?;
                    merge3(&first, &fa).ok()
                } else {
                    Some(first)
                }
            }
            _ => None,
        }
    }

    /// The (bit, a-derivatives, b-derivatives) triple as one term, shaped
    /// like the binding the destructor rules compute.
    pub fn triple(t: &Term) -> Option<Term> {
        Some(Term::tuple(vec![
            Term::Int(nullable(t)? as i64),
            deriv(t, 'a')?,
            deriv(t, 'b')?,
        ]))
    }

    /// Word membership by repeated differentiation.
    pub fn member(t: &Term, word: &str) -> Option<bool> {
        let mut cur = t.clone();
        for c in word.chars() {
            cur = deriv(&cur, c)?;
        }
        nullable(&cur)
    }
}

/// Outcome of the brute-force comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    EqualUpToLen,
    /// The shortest word on which the two languages differ (empty string
    /// for the empty word).
    Differ(String),
}

/// Compares two expressions on every word up to `max_len`, walking the
/// prefix tree with derivatives carried along. Returns the first
/// difference in breadth-first (shortest, `a` before `b`) order.
pub fn oracle_lang_equal(e1: &RegexExpr, e2: &RegexExpr, max_len: usize) -> OracleVerdict {
    let expect = "encoded expressions always differentiate";
    let mut queue: VecDeque<(String, Term, Term)> = VecDeque::new();
    queue.push_back((String::new(), e1.encode(), e2.encode()));
    while let Some((word, t1, t2)) = queue.pop_front() {
        let m1 = oracle::nullable(&t1).expect(expect);
        let m2 = oracle::nullable(&t2).expect(expect);
        if m1 != m2 {
            return OracleVerdict::Differ(word);
        }
        if word.len() >= max_len {
            continue;
        }
        for c in ['a', 'b'] {
            let d1 = oracle::deriv(&t1, c).expect(expect);
            let d2 = oracle::deriv(&t2, c).expect(expect);
            let mut next = word.clone();
            next.push(c);
            queue.push_back((next, d1, d2));
        }
    }
    OracleVerdict::EqualUpToLen
}
