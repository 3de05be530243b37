//! Generated programs and corpus-wide invariants.

mod common;

use htcc::emit::{emit_program, EmitConfig};
use htcc::eval::{Evaluator, Value};
use htcc::pipeline::{bus_inputs, compile, result_value};
use htcc::refine::elaborate::check_linearity;
use htcc::refine::{ListMode, RefineConfig};
use htcc::simnet::{simulate, SimOptions, Status};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum E {
    Var(usize),
    Lit(u32),
    Bin(&'static str, Box<E>, Box<E>),
    Shift(bool, Box<E>, u32),
    Call(Box<E>, Box<E>),
}

const VARS: [&str; 3] = ["a", "b", "c"];

impl E {
    fn source(&self) -> String {
        match self {
            E::Var(i) => VARS[*i].to_string(),
            E::Lit(n) => n.to_string(),
            E::Bin("xor", x, y) => format!("(xor {} {})", x.source(), y.source()),
            E::Bin(op, x, y) => format!("({} {op} {})", x.source(), y.source()),
            E::Shift(left, x, k) => format!("({} {} {k})", if *left { "shiftL" } else { "shiftR" }, x.source()),
            E::Call(x, y) => format!("(g {} {})", x.source(), y.source()),
        }
    }

    /// Direct 32-bit semantics; `g p q = p * 3 + q`.
    fn value(&self, env: &[u32; 3]) -> u32 {
        match self {
            E::Var(i) => env[*i],
            E::Lit(n) => *n,
            E::Bin(op, x, y) => {
                let (x, y) = (x.value(env), y.value(env));
                match *op {
                    "+" => x.wrapping_add(y),
                    "-" => x.wrapping_sub(y),
                    "*" => x.wrapping_mul(y),
                    ".&." => x & y,
                    ".|." => x | y,
                    "xor" => x ^ y,
                    _ => unreachable!(),
                }
            }
            E::Shift(true, x, k) => x.value(env) << k,
            E::Shift(false, x, k) => x.value(env) >> k,
            E::Call(x, y) => x.value(env).wrapping_mul(3).wrapping_add(y.value(env)),
        }
    }
}

fn expr() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![(0usize..3).prop_map(E::Var), any::<u32>().prop_map(E::Lit)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["+", "-", "*", ".&.", ".|.", "xor"]), inner.clone(), inner.clone())
                .prop_map(|(op, x, y)| E::Bin(op, Box::new(x), Box::new(y))),
            (any::<bool>(), inner.clone(), 0u32..32).prop_map(|(l, x, k)| E::Shift(l, Box::new(x), k)),
            (inner.clone(), inner).prop_map(|(x, y)| E::Call(Box::new(x), Box::new(y))),
        ]
    })
}

fn program(e: &E) -> String {
    format!(
        "g :: Int -> Int -> Int\ng p q = p * 3 + q\n\nf :: Int -> Int -> Int -> Int\nf a b c = {}\n",
        e.source()
    )
}

fn entry_f() -> RefineConfig {
    RefineConfig {
        entry: Some("f".into()),
        ..RefineConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_programs_agree_with_direct_arithmetic(e in expr(), env in any::<[u32; 3]>(), seed in any::<u64>()) {
        let src = program(&e);
        let (prog, net) = compile(&src, &entry_f()).unwrap();
        prop_assert!(check_linearity(&net).is_ok());
        let want = e.value(&env);
        let args: Vec<Value> = env.iter().map(|&w| Value::Word(w)).collect();
        prop_assert_eq!(Evaluator::new(&prog).run("f", &args).unwrap(), Value::Word(want));
        let opts = SimOptions { schedule_seed: Some(seed), ..SimOptions::default() };
        let r = simulate(&net, &bus_inputs(&net, &args).unwrap(), &opts).unwrap();
        prop_assert_eq!(&r.status, &Status::Completed);
        prop_assert_eq!(result_value(&net, &prog.unit("f").unwrap().ret, &r), Some(Value::Word(want)));
    }

    #[test]
    fn addition_and_multiplication_form_a_ring(a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let src = "dist :: Int -> Int -> Int -> Int\ndist a b c = (a + b) * c - (a * c + b * c)\n\n\
                   assoc :: Int -> Int -> Int -> Int\nassoc a b c = (a * b) * c - a * (b * c)\n\n\
                   inv :: Int -> Int -> Int -> Int\ninv a b c = (a - b) + b - a + c * 0\n";
        for entry in ["dist", "assoc", "inv"] {
            let cfg = RefineConfig { entry: Some(entry.into()), ..RefineConfig::default() };
            let (prog, net) = compile(src, &cfg).unwrap();
            let args = [Value::Word(a), Value::Word(b), Value::Word(c)];
            prop_assert_eq!(Evaluator::new(&prog).run(entry, &args).unwrap(), Value::Word(0));
            let r = simulate(&net, &bus_inputs(&net, &args).unwrap(), &SimOptions::default()).unwrap();
            prop_assert_eq!(r.outputs.get("OUTPUT0"), Some(&Value::Word(0)));
        }
    }
}

fn all_configs() -> Vec<RefineConfig> {
    [ListMode::Vector, ListMode::Stream]
        .into_iter()
        .map(|list_mode| RefineConfig {
            list_mode,
            unroll: Some(3),
            ..RefineConfig::default()
        })
        .collect()
}

#[test]
fn every_corpus_net_is_linear() {
    for name in common::CORPUS {
        for cfg in all_configs() {
            let (_, net) = common::build(name, &cfg);
            check_linearity(&net).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

#[test]
fn schedule_permutations_do_not_change_results() {
    for name in common::CORPUS {
        for cfg in all_configs() {
            let (prog, net) = common::build(name, &cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let args = htcc::pipeline::random_args(&prog, &net, &mut rng);
            let inputs = bus_inputs(&net, &args).unwrap();
            let base = simulate(&net, &inputs, &SimOptions::default()).unwrap();
            assert_eq!(base.status, Status::Completed, "{name}");
            for _ in 0..10 {
                let opts = SimOptions {
                    schedule_seed: Some(rng.gen()),
                    ..SimOptions::default()
                };
                let r = simulate(&net, &inputs, &opts).unwrap();
                assert_eq!(r.outputs, base.outputs, "{name}");
                assert_eq!(r.cycles, base.cycles, "{name}");
            }
        }
    }
}

#[test]
fn emission_is_byte_identical_across_runs() {
    for name in common::CORPUS {
        for cfg in all_configs() {
            let once = emit_program(&common::build(name, &cfg).1, &EmitConfig::default()).source;
            let twice = emit_program(&common::build(name, &cfg).1, &EmitConfig::default()).source;
            assert_eq!(once.as_bytes(), twice.as_bytes(), "{name}");
        }
    }
}
