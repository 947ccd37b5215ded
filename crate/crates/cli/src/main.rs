//! Command-line front end for the rule engine: run a program on a goal,
//! print its persistence translation or logical reading, decide fixpoint
//! membership of ground states, and decide the two bundled equivalence
//! problems (automaton bisimilarity and regular-expression equality).
//!
//! Exit codes are the machine contract: 0 success/equal/member,
//! 1 failed/not-equal/non-member, 2 step- or bound-limited/inconclusive,
//! 3 usage or input error, 4 runtime integrity error.

use chr_core::coind::{bisim_goal, bisim_program, destructor_program, load_automaton, parse_regex};
use chr_core::engine::{run, ConcreteState, DerivationStatus, RunOptions};
use chr_core::fixpoint::{
    enumerate, gfp_cpr, hybrid_check, lfp_csr, BoundedVerdict, CanonState, EnumerateOptions,
    FixpointError, GfpOutcome,
};
use chr_core::hybrid::translate;
use chr_core::lang::{
    logical_reading, parse_program, parse_query, program_to_text, scalar_goal, ConstraintAtom,
    Program, Query,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_NO: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "chr",
    version,
    about = "A rule engine with priorities, persistence, and fixpoint checkers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a program on a goal and print the final state
    Run {
        /// Program file
        program: PathBuf,
        /// Initial goal, e.g. "gcd(12), gcd(8)"
        goal: String,
        #[arg(long, default_value_t = 100_000)]
        step_limit: usize,
        /// Write the derivation trace to standard error
        #[arg(long)]
        trace: bool,
    },
    /// Print the persistence translation of a program
    Translate {
        /// Program file with `:- persistent f/n.` declarations
        program: PathBuf,
    },
    /// Decide fixpoint membership of ground root states
    Fixpoint {
        /// Program file
        program: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Ground root state, e.g. "a, b(1)"; repeatable
        #[arg(long = "root", required = true)]
        roots: Vec<String>,
        /// Maximum number of distinct states to enumerate
        #[arg(long, default_value_t = 10_000)]
        bound: usize,
    },
    /// Decide language equality of two regular expressions
    RegexEq {
        /// First expression, e.g. "(a,b*)+"
        e1: String,
        /// Second expression
        e2: String,
        #[arg(long, default_value_t = 100_000)]
        step_limit: usize,
        /// Write the derivation trace to standard error
        #[arg(long)]
        trace: bool,
    },
    /// Decide whether two automaton states accept the same language
    Bisim {
        /// Automaton file: one `<name> <bit> <a-succ> <b-succ>` per line
        automaton: PathBuf,
        state1: String,
        state2: String,
        /// Multiplicity the claim state is scaled by
        #[arg(long, default_value_t = 3)]
        scale: usize,
        #[arg(long, default_value_t = 100_000)]
        step_limit: usize,
        /// Write the derivation trace to standard error
        #[arg(long)]
        trace: bool,
    },
    /// Print the logical reading of a program
    Logical {
        /// Program file
        program: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Least fixpoint over the simplification transition system
    Lfp,
    /// Greatest fixpoint, bounded when the state space is truncated
    Gfp,
    /// Greatest fixpoint of states whose futures all stay simplifiable
    Hybrid,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; they are not usage errors.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.cmd {
        Cmd::Run {
            program,
            goal,
            step_limit,
            trace,
        } => cmd_run(&program, &goal, step_limit, trace),
        Cmd::Translate { program } => cmd_translate(&program),
        Cmd::Fixpoint {
            program,
            mode,
            roots,
            bound,
        } => cmd_fixpoint(&program, mode, &roots, bound),
        Cmd::RegexEq {
            e1,
            e2,
            step_limit,
            trace,
        } => cmd_regex_eq(&e1, &e2, step_limit, trace),
        Cmd::Bisim {
            automaton,
            state1,
            state2,
            scale,
            step_limit,
            trace,
        } => cmd_bisim(&automaton, &state1, &state2, scale, step_limit, trace),
        Cmd::Logical { program } => cmd_logical(&program),
    };
    ExitCode::from(code)
}

fn fail(msg: impl Display, code: u8) -> u8 {
    eprintln!("error: {msg}");
    code
}

fn read_program(path: &Path) -> Result<Program, u8> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| fail(format_args!("{}: {e}", path.display()), EXIT_USAGE))?;
    parse_program(&src).map_err(|e| fail(e, EXIT_USAGE))
}

/// Runs a query and maps the outcome onto stdout/stderr and an exit code.
/// All derivation-running subcommands funnel through here so verdicts and
/// traces behave identically.
fn finish_run(
    program: &Program,
    query: &Query,
    step_limit: usize,
    trace: bool,
    print: impl FnOnce(&ConcreteState, bool),
) -> u8 {
    let opts = RunOptions {
        step_limit,
        record_trace: trace,
    };
    let result = run(program, query, &opts);
    if trace {
        for entry in &result.trace {
            eprintln!("{entry}");
        }
    }
    match result.status {
        DerivationStatus::Success => {
            print(&result.state, true);
            EXIT_OK
        }
        DerivationStatus::Failed => {
            print(&result.state, false);
            EXIT_NO
        }
        DerivationStatus::StepLimit => {
            eprintln!("step limit {step_limit} reached");
            EXIT_BOUND
        }
        DerivationStatus::Error(e) => fail(e, EXIT_INTERNAL),
    }
}

fn cmd_run(path: &Path, goal: &str, step_limit: usize, trace: bool) -> u8 {
    let program = match read_program(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let query = match parse_query(goal) {
        Ok(q) => q,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    finish_run(&program, &query, step_limit, trace, |state, ok| {
        if !ok {
            println!("false");
            return;
        }
        let mut lines: Vec<String> = state
            .global_bindings()
            .into_iter()
            .map(|(v, t)| format!("{v} = {t}"))
            .collect();
        let mut atoms: Vec<String> = state.store_atoms().iter().map(|a| a.to_string()).collect();
        atoms.sort();
        lines.extend(atoms);
        if lines.is_empty() {
            println!("true");
        } else {
            for line in lines {
                println!("{line}");
            }
        }
    })
}

fn cmd_translate(path: &Path) -> u8 {
    let program = match read_program(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match translate(&program) {
        Ok(translated) => {
            print!("{}", program_to_text(&translated.program));
            eprintln!(
                "note: set-style duplicate elimination assumes the simplification rules are \
                 confluent; otherwise results can depend on firing order"
            );
            EXIT_OK
        }
        Err(e) => fail(e, EXIT_USAGE),
    }
}

fn cmd_fixpoint(path: &Path, mode: Mode, root_srcs: &[String], bound: usize) -> u8 {
    let program = match read_program(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mut roots = Vec::new();
    for src in root_srcs {
        let query = match parse_query(src) {
            Ok(q) => q,
            Err(e) => return fail(e, EXIT_USAGE),
        };
        match CanonState::new(query.goal) {
            Ok(state) => roots.push(state),
            Err(e) => return fail(e, EXIT_USAGE),
        }
    }
    let opts = EnumerateOptions {
        bound,
        ..EnumerateOptions::default()
    };

    // One (verdict, exit code) per root, in query order.
    let verdicts: Vec<(&'static str, u8)> = match mode {
        Mode::Lfp | Mode::Gfp => {
            let ts = match enumerate(&program, &roots, &opts) {
                Ok(ts) => ts,
                Err(e) => return fail(e, EXIT_USAGE),
            };
            if mode == Mode::Lfp {
                match lfp_csr(&ts) {
                    Ok(set) => roots.iter().map(|r| membership(set.contains(r))).collect(),
                    Err(FixpointError::Truncated(_)) => {
                        roots.iter().map(|_| ("INCONCLUSIVE", EXIT_BOUND)).collect()
                    }
                    Err(e) => return fail(e, EXIT_USAGE),
                }
            } else {
                match gfp_cpr(&ts) {
                    GfpOutcome::Exact(set) => {
                        roots.iter().map(|r| membership(set.contains(r))).collect()
                    }
                    GfpOutcome::Bounded(pairs) => pairs
                        .iter()
                        .map(|(_, v)| match v {
                            BoundedVerdict::InconsistentReachable => ("NON-MEMBER", EXIT_NO),
                            BoundedVerdict::NoInconsistencyWithinBound => {
                                ("NO-INCONSISTENCY-WITHIN-BOUND", EXIT_BOUND)
                            }
                        })
                        .collect(),
                }
            }
        }
        Mode::Hybrid => match hybrid_check(&program, &roots, bound) {
            Ok((_, set)) => roots.iter().map(|r| membership(set.contains(r))).collect(),
            Err(FixpointError::Truncated(_)) => {
                roots.iter().map(|_| ("INCONCLUSIVE", EXIT_BOUND)).collect()
            }
            Err(e) => return fail(e, EXIT_USAGE),
        },
    };

    let mut code = EXIT_OK;
    for (root, (verdict, root_code)) in roots.iter().zip(&verdicts) {
        println!("{root}\t{verdict}");
        code = code.max(*root_code);
    }
    code
}

fn membership(member: bool) -> (&'static str, u8) {
    if member {
        ("MEMBER", EXIT_OK)
    } else {
        ("NON-MEMBER", EXIT_NO)
    }
}

fn cmd_regex_eq(e1: &str, e2: &str, step_limit: usize, trace: bool) -> u8 {
    let (e1, e2) = match (parse_regex(e1), parse_regex(e2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e, EXIT_USAGE),
    };
    let translated = match translate(&destructor_program()) {
        Ok(t) => t,
        Err(e) => return fail(e, EXIT_INTERNAL),
    };
    let goal = vec![ConstraintAtom::new("~", vec![e1.encode(), e2.encode()])];
    let query = translated.translate_query(&Query {
        goal,
        globals: BTreeSet::new(),
    });
    finish_run(&translated.program, &query, step_limit, trace, |_, ok| {
        println!("{}", if ok { "EQUAL" } else { "NOT-EQUAL" });
    })
}

fn cmd_bisim(
    path: &Path,
    state1: &str,
    state2: &str,
    scale: usize,
    step_limit: usize,
    trace: bool,
) -> u8 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(format_args!("{}: {e}", path.display()), EXIT_USAGE),
    };
    let automaton = match load_automaton(&text) {
        Ok(a) => a,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let goal = match bisim_goal(&automaton, state1, state2) {
        Ok(g) => scalar_goal(&g, scale.max(1)),
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let translated = match translate(&bisim_program()) {
        Ok(t) => t,
        Err(e) => return fail(e, EXIT_INTERNAL),
    };
    let globals: BTreeSet<String> = goal.iter().flat_map(|a| a.vars()).collect();
    let query = translated.translate_query(&Query { goal, globals });
    finish_run(&translated.program, &query, step_limit, trace, |_, ok| {
        println!("{}", if ok { "EQUAL" } else { "NOT-EQUAL" });
    })
}

fn cmd_logical(path: &Path) -> u8 {
    match read_program(path) {
        Ok(program) => {
            print!("{}", logical_reading(&program));
            EXIT_OK
        }
        Err(code) => code,
    }
}
