//! Stage wiring shared by the command-line driver and the tests: source to
//! typed program to network, argument/bus conversion and the differential
//! checker that compares the evaluator with the simulator.

use std::path::Path;
use std::time::Instant;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eval::{EvalError, Evaluator, Value};
use crate::frontend::{parse_source, FrontendError, Pos};
use crate::refine::{refine, ProcessNet, RefineConfig, RefineError};
use crate::semantics::{analyze, SemError, Ty, TypedProgram};
use crate::simnet::{simulate, SimError, SimOptions, SimResult, Status};

#[derive(Debug, Error)]
pub enum HtccError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Semantic(#[from] SemError),
    #[error("{error}")]
    Refine { error: RefineError, pos: Pos },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("simulation {0}")]
    SimStatus(Status),
    #[error("{0}")]
    CheckFailed(String),
}

impl HtccError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HtccError::Usage(_) | HtccError::Io(_) => 1,
            HtccError::Frontend(_) => 2,
            HtccError::Semantic(_) => 3,
            HtccError::Refine { .. } => 4,
            HtccError::Eval(_) | HtccError::Sim(_) | HtccError::SimStatus(_) => 5,
            HtccError::CheckFailed(_) => 6,
        }
    }

    /// `file:line:col: message` for errors tied to a source position.
    pub fn render(&self, file: &str) -> String {
        match self {
            HtccError::Frontend(e) => format!("{file}:{}: {}", e.pos(), e.message()),
            HtccError::Semantic(e) => format!("{file}:{}: {}", e.span, e.message),
            HtccError::Refine { error, pos } => format!("{file}:{pos}: {error}"),
            HtccError::Eval(EvalError::DivisionByZero { span }) => format!("{file}:{span}: division by zero"),
            HtccError::Usage(_) | HtccError::Io(_) => self.to_string(),
            other => format!("{file}: {other}"),
        }
    }
}

pub fn read_source(path: &Path) -> Result<String, HtccError> {
    std::fs::read_to_string(path).map_err(|e| HtccError::Io(format!("{}: {e}", path.display())))
}

pub fn typecheck(src: &str) -> Result<TypedProgram, HtccError> {
    Ok(analyze(&parse_source(src)?)?)
}

/// Refines, attributing failures to the entry function's position.
pub fn refine_program(prog: &TypedProgram, cfg: &RefineConfig) -> Result<ProcessNet, HtccError> {
    refine(prog, cfg).map_err(|error| {
        let unit = cfg
            .entry
            .as_deref()
            .and_then(|e| prog.unit(e))
            .or_else(|| crate::refine::default_entry(prog).and_then(|e| prog.unit(&e)));
        let pos = unit.map(|u| u.span.start).unwrap_or(Pos::new(1, 1));
        HtccError::Refine { error, pos }
    })
}

pub fn compile(src: &str, cfg: &RefineConfig) -> Result<(TypedProgram, ProcessNet), HtccError> {
    let prog = typecheck(src)?;
    let net = refine_program(&prog, cfg)?;
    Ok((prog, net))
}

fn flatten_value(v: &Value, out: &mut Vec<Value>) {
    match v {
        Value::Tuple(xs) => xs.iter().for_each(|x| flatten_value(x, out)),
        v => out.push(v.clone()),
    }
}

/// Input bus contents for entry arguments; removed parameters are skipped.
pub fn bus_inputs(net: &ProcessNet, args: &[Value]) -> Result<IndexMap<String, Value>, HtccError> {
    let mut flat = Vec::new();
    for (i, a) in args.iter().enumerate() {
        if let Some((_, fixed)) = net.fixed_params.iter().find(|(k, _)| *k == i) {
            if a != &Value::Word(*fixed) {
                return Err(HtccError::Usage(format!(
                    "argument {} is fixed to {fixed} by the unrolled network",
                    i + 1
                )));
            }
            continue;
        }
        flatten_value(a, &mut flat);
    }
    if flat.len() != net.inputs.len() {
        return Err(HtccError::Usage(format!(
            "the network has {} input buses but the arguments give {} values",
            net.inputs.len(),
            flat.len()
        )));
    }
    Ok(net.inputs.iter().map(|b| b.name.clone()).zip(flat).collect())
}

fn shape(ty: &Ty, words: &mut impl Iterator<Item = Option<Value>>) -> Option<Value> {
    match ty {
        Ty::Tuple(ts) => Some(Value::Tuple(ts.iter().map(|t| shape(t, words)).collect::<Option<_>>()?)),
        _ => words.next().flatten(),
    }
}

/// The entry's result rebuilt from the output buses, if all were written.
pub fn result_value(net: &ProcessNet, ret: &Ty, r: &SimResult) -> Option<Value> {
    let mut vals = net.outputs.iter().map(|b| r.outputs.get(&b.name).cloned());
    shape(ret, &mut vals)
}

/// Full argument list for the entry: fixed parameters take their value.
pub fn full_args(net: &ProcessNet, free: Vec<Value>) -> Vec<Value> {
    let mut free = free.into_iter();
    let total = free.len() + net.fixed_params.len();
    (0..total)
        .map(|i| match net.fixed_params.iter().find(|(k, _)| *k == i) {
            Some((_, v)) => Value::Word(*v),
            None => free.next().unwrap(),
        })
        .collect()
}

fn random_value(ty: &Ty, n: usize, rng: &mut ChaCha8Rng) -> Value {
    match ty {
        Ty::List(t) => Value::List((0..n).map(|_| random_value(t, n, rng)).collect()),
        Ty::Tuple(ts) => Value::Tuple(ts.iter().map(|t| random_value(t, n, rng)).collect()),
        _ => Value::Word(rng.gen()),
    }
}

/// Random arguments for the entry's free parameters.
pub fn random_args(prog: &TypedProgram, net: &ProcessNet, rng: &mut ChaCha8Rng) -> Vec<Value> {
    let unit = prog.unit(&net.entry).expect("entry exists");
    let n = net.inputs.iter().chain(&net.outputs).find_map(|b| b.len).unwrap_or(1) as usize;
    let free = unit
        .params
        .iter()
        .enumerate()
        .filter(|(i, _)| !net.fixed_params.iter().any(|(k, _)| k == i))
        .map(|(_, t)| random_value(t, n, rng))
        .collect();
    full_args(net, free)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub case: u64,
    pub input: String,
    pub eval: String,
    pub sim: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub program: String,
    pub entry: String,
    pub seed: u64,
    pub cases_run: u64,
    pub mismatch_count: u64,
    /// The first few mismatches, by case index.
    pub mismatches: Vec<Mismatch>,
    pub verdict: Verdict,
    pub elapsed_ms: u128,
}

pub const REPORTED_MISMATCHES: usize = 10;

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn render_text(&self) -> String {
        let mut s = format!(
            "check {} (entry {}, seed {}): {} cases, {} mismatches: {}\n",
            self.program,
            self.entry,
            self.seed,
            self.cases_run,
            self.mismatch_count,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for m in &self.mismatches {
            s.push_str(&format!("  case {}: input {}\n    eval {}\n    sim  {}\n", m.case, m.input, m.eval, m.sim));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }
}

/// Runs both oracles on `cases` seeded random inputs. Case `i` draws from its
/// own stream of the seed, so results do not depend on thread scheduling.
pub fn check_net(
    program: &str,
    prog: &TypedProgram,
    net: &ProcessNet,
    cases: u64,
    seed: u64,
    opts: &SimOptions,
) -> CheckReport {
    let start = Instant::now();
    let unit = prog.unit(&net.entry).expect("entry exists");
    let evaluator = Evaluator::new(prog);
    let mut found: Vec<Mismatch> = (0..cases)
        .into_par_iter()
        .filter_map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(case);
            let args = random_args(prog, net, &mut rng);
            let expected = evaluator.run(&net.entry, &args);
            let got = bus_inputs(net, &args)
                .map_err(|e| e.to_string())
                .and_then(|inputs| simulate(net, &inputs, opts).map_err(|e| e.to_string()))
                .and_then(|r| match &r.status {
                    Status::Completed => result_value(net, &unit.ret, &r).ok_or_else(|| "missing outputs".to_string()),
                    s => Err(s.to_string()),
                });
            let same = matches!((&expected, &got), (Ok(a), Ok(b)) if a == b);
            (!same).then(|| Mismatch {
                case,
                input: args.iter().map(Value::hex).collect::<Vec<_>>().join(", "),
                eval: match expected {
                    Ok(v) => v.hex(),
                    Err(e) => format!("error: {e}"),
                },
                sim: match got {
                    Ok(v) => v.hex(),
                    Err(e) => format!("error: {e}"),
                },
            })
        })
        .collect();
    found.sort_by_key(|m| m.case);
    let mismatch_count = found.len() as u64;
    found.truncate(REPORTED_MISMATCHES);
    CheckReport {
        program: program.to_string(),
        entry: net.entry.clone(),
        seed,
        cases_run: cases,
        mismatch_count,
        verdict: if mismatch_count == 0 { Verdict::Pass } else { Verdict::Fail },
        mismatches: found,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

/// Compiles `src` and checks it.
pub fn check_equivalence(
    program: &str,
    src: &str,
    cfg: &RefineConfig,
    cases: u64,
    seed: u64,
) -> Result<CheckReport, HtccError> {
    let (prog, net) = compile(src, cfg)?;
    Ok(check_net(program, &prog, &net, cases, seed, &SimOptions::default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADD3: &str = "add3 :: Int -> Int\nadd3 x = x + 3\n";

    #[test]
    fn add3_checks_clean_and_is_reproducible() {
        let a = check_equivalence("add3", ADD3, &RefineConfig::default(), 50, 7).unwrap();
        let b = check_equivalence("add3", ADD3, &RefineConfig::default(), 50, 7).unwrap();
        assert!(a.passed());
        assert_eq!(a.render_text(), b.render_text());
    }

    #[test]
    fn tuple_results_round_trip_through_buses() {
        let src = "f :: (Int, Int) -> (Int, Int)\nf (a, b) = (b, a + b)\n";
        let (prog, net) = compile(src, &RefineConfig::default()).unwrap();
        let args = vec![Value::Tuple(vec![Value::Word(2), Value::Word(3)])];
        let inputs = bus_inputs(&net, &args).unwrap();
        assert_eq!(inputs.len(), 2);
        let r = simulate(&net, &inputs, &SimOptions::default()).unwrap();
        let ret = &prog.unit("f").unwrap().ret;
        assert_eq!(result_value(&net, ret, &r), Some(Value::Tuple(vec![Value::Word(3), Value::Word(5)])));
    }

    #[test]
    fn errors_map_to_exit_codes_and_positions() {
        let e = compile("f :: Int -> Int\nf x = x $ 1\n", &RefineConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.render("a.hs").starts_with("a.hs:2:"));
        let e = compile("f :: Int -> uInt32\nf x = x\n", &RefineConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.render("a.hs").starts_with("a.hs:2:"), "{}", e.render("a.hs"));
        let src = "f :: Int -> Int -> Int\nf 0 a = a\nf k a = f (k - 1) (a + 1)\n";
        let e = compile(src, &RefineConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 4);
        assert!(e.render("a.hs").starts_with("a.hs:1:1: non-constant recursion bound"));
    }

    #[test]
    fn json_report_mirrors_fields() {
        let r = check_equivalence("add3", ADD3, &RefineConfig::default(), 3, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["verdict"], "PASS");
        assert_eq!(v["cases_run"], 3);
        assert!(v["mismatches"].as_array().unwrap().is_empty());
    }
}
