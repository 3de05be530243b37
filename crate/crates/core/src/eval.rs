//! Call-by-value reference evaluator over the typed tree.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::frontend::Span;
use crate::semantics::{TExpr, TExprKind, TPattern, Ty, TypedEquation, TypedProgram};

pub const DEFAULT_MAX_DEPTH: usize = 10_000;

const EVAL_STACK: usize = 512 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Word(u32),
    List(Vec<Value>),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn word(&self) -> Option<u32> {
        match self {
            Value::Word(w) => Some(*w),
            _ => None,
        }
    }

    pub fn words(xs: &[u32]) -> Value {
        Value::List(xs.iter().map(|&w| Value::Word(w)).collect())
    }

    /// Same shape, words in upper-case hex.
    pub fn hex(&self) -> String {
        match self {
            Value::Word(w) => format!("0x{w:08X}"),
            Value::List(xs) => format!("[{}]", xs.iter().map(Value::hex).collect::<Vec<_>>().join(", ")),
            Value::Tuple(xs) => format!("({})", xs.iter().map(Value::hex).collect::<Vec<_>>().join(", ")),
        }
    }

    /// Whether the value inhabits `ty`.
    pub fn has_type(&self, ty: &Ty) -> bool {
        match (self, ty) {
            (Value::Word(_), t) => t.is_word(),
            (Value::List(xs), Ty::List(t)) => xs.iter().all(|x| x.has_type(t)),
            (Value::Tuple(xs), Ty::Tuple(ts)) => xs.len() == ts.len() && xs.iter().zip(ts).all(|(x, t)| x.has_type(t)),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Word(w) => write!(f, "{w}"),
            Value::List(xs) | Value::Tuple(xs) => {
                let (open, close) = if matches!(self, Value::List(_)) { ("[", "]") } else { ("(", ")") };
                f.write_str(open)?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(close)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{span}: division by zero")]
    DivisionByZero { span: Span },
    #[error("no equation of `{function}` matches the arguments")]
    NoMatchingEquation { function: String },
    #[error("recursion depth exceeded the limit of {limit}")]
    DepthExceeded { limit: usize },
    #[error("{0}")]
    BadArguments(String),
}

/// Parses comma-separated values: decimal or 0x-hex words, `[..]` lists and
/// `(..)` tuples.
pub fn parse_values(text: &str) -> Result<Vec<Value>, String> {
    let mut p = ValueParser { s: text.as_bytes(), i: 0 };
    p.ws();
    if p.i == p.s.len() {
        return Ok(vec![]);
    }
    let vals = p.seq(None)?;
    p.ws();
    if p.i != p.s.len() {
        return Err(format!("unexpected `{}` at offset {}", p.s[p.i] as char, p.i));
    }
    Ok(vals)
}

struct ValueParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl ValueParser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn seq(&mut self, close: Option<u8>) -> Result<Vec<Value>, String> {
        let mut out = Vec::new();
        self.ws();
        if close.is_some() && self.s.get(self.i).copied() == close {
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            self.ws();
            if self.s.get(self.i) == Some(&b',') {
                self.i += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn value(&mut self) -> Result<Value, String> {
        self.ws();
        match self.s.get(self.i) {
            Some(&c @ (b'[' | b'(')) => {
                self.i += 1;
                let close = if c == b'[' { b']' } else { b')' };
                let items = self.seq(Some(close))?;
                self.ws();
                if self.s.get(self.i) != Some(&close) {
                    return Err(format!("expected `{}` at offset {}", close as char, self.i));
                }
                self.i += 1;
                Ok(if c == b'[' { Value::List(items) } else { Value::Tuple(items) })
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.i;
                while self.i < self.s.len() && self.s[self.i].is_ascii_alphanumeric() {
                    self.i += 1;
                }
                let tok = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                let parsed = match tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
                    Some(h) => u32::from_str_radix(h, 16),
                    None => tok.parse::<u32>(),
                };
                parsed.map(Value::Word).map_err(|_| format!("`{tok}` is not a 32-bit unsigned literal"))
            }
            Some(&c) => Err(format!("unexpected `{}` at offset {}", c as char, self.i)),
            None => Err("unexpected end of values".to_string()),
        }
    }
}

enum Slot<'p> {
    Val(Value),
    Pending(&'p TExpr),
}

type Env<'p> = HashMap<String, Slot<'p>>;

pub struct Evaluator<'p> {
    program: &'p TypedProgram,
    max_depth: usize,
}

impl<'p> Evaluator<'p> {
    pub fn new(program: &'p TypedProgram) -> Self {
        Evaluator {
            program,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    /// Evaluates `entry` applied to `args` on a thread with a large stack so
    /// deep non-tail recursion hits the depth cap rather than the stack guard.
    pub fn run(&self, entry: &str, args: &[Value]) -> Result<Value, EvalError> {
        let unit = self
            .program
            .unit(entry)
            .ok_or_else(|| EvalError::BadArguments(format!("no function named `{entry}`")))?;
        if unit.params.len() != args.len() {
            return Err(EvalError::BadArguments(format!(
                "`{entry}` expects {} argument(s), got {}",
                unit.params.len(),
                args.len()
            )));
        }
        for (i, (a, t)) in args.iter().zip(&unit.params).enumerate() {
            if !a.has_type(t) {
                return Err(EvalError::BadArguments(format!("argument {} of `{entry}` must have type {t}", i + 1)));
            }
        }
        std::thread::scope(|s| {
            std::thread::Builder::new()
                .stack_size(EVAL_STACK)
                .spawn_scoped(s, || self.call(entry, args.to_vec(), 1))
                .expect("spawn evaluator thread")
                .join()
                .expect("evaluator thread panicked")
        })
    }

    fn call(&self, name: &str, args: Vec<Value>, depth: usize) -> Result<Value, EvalError> {
        let mut name = name.to_string();
        let mut args = args;
        let mut depth = depth;
        loop {
            if depth > self.max_depth {
                return Err(EvalError::DepthExceeded { limit: self.max_depth });
            }
            let unit = self.program.unit(&name).expect("checked program");
            let (eq, env) = unit
                .equations
                .iter()
                .find_map(|eq| self.bind(eq, &args).map(|env| (eq, env)))
                .ok_or_else(|| EvalError::NoMatchingEquation { function: name.clone() })?;
            let mut env = env;
            match &eq.body.kind {
                TExprKind::Call(f, fargs) => {
                    let mut next = Vec::with_capacity(fargs.len());
                    for a in fargs {
                        next.push(self.eval(a, &mut env, depth)?);
                    }
                    name = f.clone();
                    args = next;
                    depth += 1;
                }
                _ => return self.eval(&eq.body, &mut env, depth),
            }
        }
    }

    fn bind(&self, eq: &'p TypedEquation, args: &[Value]) -> Option<Env<'p>> {
        let mut env = Env::new();
        for (p, v) in eq.patterns.iter().zip(args) {
            if !match_pattern(p, v, &mut env) {
                return None;
            }
        }
        for w in &eq.wheres {
            env.insert(w.name.clone(), Slot::Pending(&w.expr));
        }
        Some(env)
    }

    fn lookup(&self, name: &str, env: &mut Env<'p>, depth: usize) -> Result<Value, EvalError> {
        match env.get(name) {
            Some(Slot::Val(v)) => Ok(v.clone()),
            Some(Slot::Pending(e)) => {
                let e = *e;
                let v = self.eval(e, env, depth)?;
                env.insert(name.to_string(), Slot::Val(v.clone()));
                Ok(v)
            }
            None => unreachable!("checked program has no free variable `{name}`"),
        }
    }

    fn word(&self, e: &'p TExpr, env: &mut Env<'p>, depth: usize) -> Result<u32, EvalError> {
        Ok(self.eval(e, env, depth)?.word().expect("word-typed expression"))
    }

    fn list(&self, e: &'p TExpr, env: &mut Env<'p>, depth: usize) -> Result<Vec<Value>, EvalError> {
        match self.eval(e, env, depth)? {
            Value::List(xs) => Ok(xs),
            _ => unreachable!("list-typed expression"),
        }
    }

    fn eval(&self, e: &'p TExpr, env: &mut Env<'p>, depth: usize) -> Result<Value, EvalError> {
        match &e.kind {
            TExprKind::Var(n) => self.lookup(n, env, depth),
            TExprKind::Lit(v, _) => Ok(Value::Word(*v)),
            TExprKind::Bin(op, a, b) => {
                let x = self.word(a, env, depth)?;
                let y = self.word(b, env, depth)?;
                op.apply(x, y)
                    .map(Value::Word)
                    .ok_or(EvalError::DivisionByZero { span: e.span })
            }
            TExprKind::Shift(op, a, k) => {
                let x = self.word(a, env, depth)?;
                Ok(Value::Word(op.apply(x, *k).expect("shifts are total")))
            }
            TExprKind::Call(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env, depth)?);
                }
                self.call(f, vals, depth + 1)
            }
            TExprKind::Tuple(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for a in items {
                    vals.push(self.eval(a, env, depth)?);
                }
                Ok(Value::Tuple(vals))
            }
            TExprKind::Map(f, xs) => {
                let xs = self.list(xs, env, depth)?;
                let out = xs
                    .into_iter()
                    .map(|x| self.call(f, vec![x], depth + 1))
                    .collect::<Result<_, _>>()?;
                Ok(Value::List(out))
            }
            TExprKind::ZipWith(f, xs, ys) => {
                let xs = self.list(xs, env, depth)?;
                let ys = self.list(ys, env, depth)?;
                let out = xs
                    .into_iter()
                    .zip(ys)
                    .map(|(x, y)| self.call(f, vec![x, y], depth + 1))
                    .collect::<Result<_, _>>()?;
                Ok(Value::List(out))
            }
            TExprKind::Foldr(f, init, xs) => {
                let mut acc = self.eval(init, env, depth)?;
                let xs = self.list(xs, env, depth)?;
                for x in xs.into_iter().rev() {
                    acc = self.call(f, vec![x, acc], depth + 1)?;
                }
                Ok(acc)
            }
        }
    }
}

fn match_pattern(p: &TPattern, v: &Value, env: &mut Env<'_>) -> bool {
    match (p, v) {
        (TPattern::Var(n, _), v) => {
            env.insert(n.clone(), Slot::Val(v.clone()));
            true
        }
        (TPattern::Lit(l, _), Value::Word(w)) => l == w,
        (TPattern::Tuple(ps, _), Value::Tuple(vs)) if ps.len() == vs.len() => {
            ps.iter().zip(vs).all(|(p, v)| match_pattern(p, v, env))
        }
        (TPattern::As(n, inner, _), v) => {
            env.insert(n.clone(), Slot::Val(v.clone()));
            match_pattern(inner, v, env)
        }
        _ => false,
    }
}

/// Convenience wrapper with the default depth cap.
pub fn eval_program(program: &TypedProgram, entry: &str, args: &[Value]) -> Result<Value, EvalError> {
    Evaluator::new(program).run(entry, args)
}

/// Full XTEA encryption through the `xtea` function of a program shaped like
/// `corpus/xtea_full.hs`: `xtea rounds sum (v0, v1) k0 k1 k2 k3`.
pub fn xtea_encrypt(program: &TypedProgram, v: (u32, u32), keys: [u32; 4], rounds: u32) -> Result<(u32, u32), EvalError> {
    let mut args = vec![Value::Word(rounds), Value::Word(0), Value::Tuple(vec![Value::Word(v.0), Value::Word(v.1)])];
    args.extend(keys.iter().map(|&k| Value::Word(k)));
    match eval_program(program, "xtea", &args)? {
        Value::Tuple(xs) if xs.len() == 2 => Ok((xs[0].word().unwrap(), xs[1].word().unwrap())),
        other => Err(EvalError::BadArguments(format!("`xtea` returned {other}, expected a pair"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::semantics::analyze;

    fn prog(src: &str) -> TypedProgram {
        analyze(&parse_source(src).unwrap()).unwrap()
    }

    fn w(v: u32) -> Value {
        Value::Word(v)
    }

    #[test]
    fn add3_of_5() {
        let p = prog("add3 :: Int -> Int\nadd3 x = x + 3\n");
        assert_eq!(eval_program(&p, "add3", &[w(5)]).unwrap(), w(8));
    }

    #[test]
    fn xteasum_wraps() {
        let p = prog("xteasum :: uInt32 -> uInt32\nxteasum sum = sum + 0x9e3779b9\n");
        assert_eq!(eval_program(&p, "xteasum", &[w(0)]).unwrap(), w(0x9e37_79b9));
        // wide-integer oracle
        let expected = ((0xFFFF_FFFFu64 + 0x9e37_79b9u64) % (1u64 << 32)) as u32;
        assert_eq!(expected, 0x9E37_79B8);
        assert_eq!(eval_program(&p, "xteasum", &[w(0xFFFF_FFFF)]).unwrap(), w(expected));
    }

    #[test]
    fn xteav0_matches_bit_oracle() {
        let p = prog(
            "xteav0 :: uInt32 -> uInt32 -> uInt32 -> uInt32 -> uInt32\n\
             xteav0 v0 v1 sum key0 = v0 + (xor (key0 + sum) (v1 + (xor (shiftL v1 4) (shiftR v1 5))))\n",
        );
        let oracle = |v0: u32, v1: u32, sum: u32, k: u32| {
            let mix = ((v1 << 4) ^ (v1 >> 5)).wrapping_add(v1);
            v0.wrapping_add(k.wrapping_add(sum) ^ mix)
        };
        for (v0, v1, s, k) in [(0, 1, 0, 0), (7, 0xdead_beef, 0x9e37_79b9, 0x0123_4567), (u32::MAX, u32::MAX, 3, 9)] {
            assert_eq!(eval_program(&p, "xteav0", &[w(v0), w(v1), w(s), w(k)]).unwrap(), w(oracle(v0, v1, s, k)));
        }
    }

    #[test]
    fn first_matching_equation_wins() {
        let p = prog("f :: Int -> Int\nf 0 = 10\nf 1 = 11\nf x = x\n");
        assert_eq!(eval_program(&p, "f", &[w(0)]).unwrap(), w(10));
        assert_eq!(eval_program(&p, "f", &[w(1)]).unwrap(), w(11));
        assert_eq!(eval_program(&p, "f", &[w(7)]).unwrap(), w(7));
        let p = prog("g :: Int -> Int\ng 0 = 1\n");
        assert!(matches!(eval_program(&p, "g", &[w(2)]), Err(EvalError::NoMatchingEquation { .. })));
    }

    #[test]
    fn division() {
        let p = prog("d :: Int -> Int -> Int\nd x y = x / y\n");
        assert_eq!(eval_program(&p, "d", &[w(7), w(2)]).unwrap(), w(3));
        assert!(matches!(eval_program(&p, "d", &[w(7), w(0)]), Err(EvalError::DivisionByZero { .. })));
    }

    #[test]
    fn unused_where_is_not_evaluated() {
        let p = prog("f :: Int -> Int\nf x = x where\n  bad = x / 0\n");
        assert_eq!(eval_program(&p, "f", &[w(4)]).unwrap(), w(4));
    }

    #[test]
    fn hof_semantics() {
        let p = prog(
            "add :: Int -> Int -> Int\nadd a b = a + b\n\
             m :: [Int] -> [Int] -> [Int]\nm xs ys = zipWith(add) xs ys\n\
             s :: [Int] -> Int\ns xs = foldr(add) 0 xs\n\
             sub :: Int -> Int -> Int\nsub a b = a - b\n\
             r :: [Int] -> Int\nr xs = foldr(sub) 0 xs\n",
        );
        assert_eq!(
            eval_program(&p, "m", &[Value::words(&[1, 2, 3]), Value::words(&[10, 20])]).unwrap(),
            Value::words(&[11, 22])
        );
        assert_eq!(eval_program(&p, "s", &[Value::words(&[1, 2, 3])]).unwrap(), w(6));
        // 1 - (2 - (3 - 0)) = 2
        assert_eq!(eval_program(&p, "r", &[Value::words(&[1, 2, 3])]).unwrap(), w(2));
    }

    #[test]
    fn tail_recursion_runs_in_a_loop_and_depth_is_capped() {
        let p = prog("c :: Int -> Int -> Int\nc 0 acc = acc\nc n acc = c (n - 1) (acc + 2)\n");
        assert_eq!(eval_program(&p, "c", &[w(5000), w(0)]).unwrap(), w(10_000));
        assert!(matches!(
            eval_program(&p, "c", &[w(20_000), w(0)]),
            Err(EvalError::DepthExceeded { limit: DEFAULT_MAX_DEPTH })
        ));
        let e = Evaluator::new(&p).with_max_depth(3);
        assert!(e.run("c", &[w(2), w(0)]).is_ok());
        assert!(e.run("c", &[w(3), w(0)]).is_err());
    }

    #[test]
    fn deep_non_tail_recursion_hits_cap_not_stack() {
        let p = prog("s :: Int -> Int\ns 0 = 0\ns n = 1 + s (n - 1)\n");
        assert_eq!(eval_program(&p, "s", &[w(9000)]).unwrap(), w(9000));
        assert!(matches!(eval_program(&p, "s", &[w(50_000)]), Err(EvalError::DepthExceeded { .. })));
    }

    #[test]
    fn bad_arguments() {
        let p = prog("add3 :: Int -> Int\nadd3 x = x + 3\n");
        assert!(matches!(eval_program(&p, "add3", &[]), Err(EvalError::BadArguments(_))));
        assert!(matches!(eval_program(&p, "nope", &[w(1)]), Err(EvalError::BadArguments(_))));
        assert!(matches!(eval_program(&p, "add3", &[Value::words(&[1])]), Err(EvalError::BadArguments(_))));
    }

    #[test]
    fn value_parsing_and_printing() {
        let v = parse_values("32, 0x10,(1,2), [3, 4]").unwrap();
        assert_eq!(v, vec![w(32), w(16), Value::Tuple(vec![w(1), w(2)]), Value::words(&[3, 4])]);
        assert_eq!(v[2].to_string(), "(1, 2)");
        assert_eq!(w(0x9e37_79b9).hex(), "0x9E3779B9");
        assert!(parse_values("4294967296").is_err());
        assert!(parse_values("[1, 2").is_err());
        assert_eq!(parse_values("").unwrap(), vec![]);
        assert_eq!(parse_values("[]").unwrap(), vec![Value::List(vec![])]);
    }
}
