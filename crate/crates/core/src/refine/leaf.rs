//! Call-free scalar functions become read/compute/write leaf macros.

use std::collections::{HashMap, HashSet};

use crate::semantics::{TExpr, TExprKind, TPattern, TWhere, Ty};

use super::net::*;
use super::RefineError;

/// Positional leaf locals: x, y, z, w, x4, x5, ...
pub fn local_name(i: usize) -> String {
    match i {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        3 => "w".into(),
        _ => format!("x{i}"),
    }
}

/// Leaf parameter list: `itemIn` or `xItem, yItem, ..`, then `itemOut` or
/// `itemOut1, itemOut2, ..`.
pub fn leaf_params(inputs: usize, outputs: usize) -> Vec<Param> {
    let mut params = Vec::new();
    if inputs == 1 {
        params.push(Param {
            name: "itemIn".into(),
            role: Role::In(ChanKind::Item),
        });
    } else {
        params.extend((0..inputs).map(|i| Param {
            name: format!("{}Item", local_name(i)),
            role: Role::In(ChanKind::Item),
        }));
    }
    if outputs == 1 {
        params.push(Param {
            name: "itemOut".into(),
            role: Role::Out(ChanKind::Item),
        });
    } else {
        params.extend((1..=outputs).map(|i| Param {
            name: format!("itemOut{i}"),
            role: Role::Out(ChanKind::Item),
        }));
    }
    params
}

/// One equation as the leaf lowering sees it.
#[derive(Debug, Clone)]
pub struct EqView {
    pub patterns: Vec<TPattern>,
    pub body: TExpr,
    pub wheres: Vec<TWhere>,
}

#[derive(Debug, Clone)]
enum LVal {
    Word(HExpr),
    Tuple(Vec<LVal>),
}

impl LVal {
    fn flatten(self, out: &mut Vec<HExpr>) {
        match self {
            LVal::Word(e) => out.push(e),
            LVal::Tuple(xs) => xs.into_iter().for_each(|x| x.flatten(out)),
        }
    }

    fn word(self) -> HExpr {
        match self {
            LVal::Word(e) => e,
            LVal::Tuple(_) => unreachable!("word-typed expression"),
        }
    }
}

fn structure(ty: &Ty, locals: &mut impl Iterator<Item = String>) -> LVal {
    match ty {
        Ty::Tuple(ts) => LVal::Tuple(ts.iter().map(|t| structure(t, locals)).collect()),
        _ => LVal::Word(HExpr::Var(locals.next().expect("enough locals"))),
    }
}

fn bind(p: &TPattern, v: LVal, env: &mut HashMap<String, LVal>, tests: &mut Vec<(HExpr, u32)>) {
    match (p, v) {
        (TPattern::Var(n, _), v) => {
            env.insert(n.clone(), v);
        }
        (TPattern::Lit(l, _), v) => tests.push((v.word(), *l)),
        (TPattern::Tuple(ps, _), LVal::Tuple(vs)) => {
            for (p, v) in ps.iter().zip(vs) {
                bind(p, v, env, tests);
            }
        }
        (TPattern::As(n, inner, _), v) => {
            env.insert(n.clone(), v.clone());
            bind(inner, v, env, tests);
        }
        (TPattern::Tuple(..), LVal::Word(_)) => unreachable!("checked pattern"),
    }
}

fn translate(e: &TExpr, env: &HashMap<String, LVal>) -> Result<LVal, RefineError> {
    Ok(match &e.kind {
        TExprKind::Var(n) => env.get(n).cloned().expect("bound variable"),
        TExprKind::Lit(v, b) => LVal::Word(HExpr::Lit(*v, *b)),
        TExprKind::Bin(op, a, b) => LVal::Word(HExpr::Bin(
            *op,
            Box::new(translate(a, env)?.word()),
            Box::new(translate(b, env)?.word()),
        )),
        TExprKind::Shift(op, a, k) => LVal::Word(HExpr::Shift(*op, Box::new(translate(a, env)?.word()), *k)),
        TExprKind::Tuple(items) => LVal::Tuple(items.iter().map(|x| translate(x, env)).collect::<Result<_, _>>()?),
        _ => return Err(RefineError::Unsupported("function call inside a leaf body".into())),
    })
}

/// Where bindings reachable from `body`, in the (dependency-sorted) order given.
pub fn used_wheres<'a>(body: &TExpr, wheres: &'a [TWhere]) -> Vec<&'a TWhere> {
    let mut needed: HashSet<String> = HashSet::new();
    let mut vars = Vec::new();
    body.free_vars(&mut vars);
    let mut stack = vars;
    while let Some(v) = stack.pop() {
        if let Some(w) = wheres.iter().find(|w| w.name == v) {
            if needed.insert(v) {
                let mut more = Vec::new();
                w.expr.free_vars(&mut more);
                stack.extend(more);
            }
        }
    }
    wheres.iter().filter(|w| needed.contains(&w.name)).collect()
}

/// Literal tests `(value, literal)` guarding one equation, and its results.
type Arm = (Vec<(HExpr, u32)>, Vec<HExpr>);

/// Lowers equations over word/tuple parameters to a leaf macro.
pub fn lower_leaf(name: &str, param_tys: &[Ty], ret: &Ty, eqs: &[EqView]) -> Result<MacroDef, RefineError> {
    let inputs: usize = param_tys.iter().map(flat_len).sum();
    let outputs = flat_len(ret);
    let reads: Vec<String> = (0..inputs).map(local_name).collect();
    let mut lets: Vec<(String, HExpr)> = Vec::new();
    let mut taken: HashSet<String> = reads.iter().cloned().collect();
    let mut arms: Vec<Arm> = Vec::new();
    let single = eqs.len() == 1;

    for eq in eqs {
        let mut locals = reads.iter().cloned();
        let mut env = HashMap::new();
        let mut tests = Vec::new();
        for (p, t) in eq.patterns.iter().zip(param_tys) {
            let v = structure(t, &mut locals);
            bind(p, v, &mut env, &mut tests);
        }
        for w in used_wheres(&eq.body, &eq.wheres) {
            let v = translate(&w.expr, &env)?;
            let v = match v {
                LVal::Word(e) if single && !e.is_atom() => {
                    let mut local = w.name.clone();
                    let mut k = 1;
                    while taken.contains(&local) || is_reserved(&local) {
                        local = format!("{}_{k}", w.name);
                        k += 1;
                    }
                    taken.insert(local.clone());
                    lets.push((local.clone(), e));
                    LVal::Word(HExpr::Var(local))
                }
                v => v,
            };
            env.insert(w.name.clone(), v);
        }
        let mut outs = Vec::new();
        translate(&eq.body, &env)?.flatten(&mut outs);
        let exhaustive = tests.is_empty();
        arms.push((tests, outs));
        if exhaustive {
            break;
        }
    }
    if !arms.last().map(|(t, _)| t.is_empty()).unwrap_or(false) {
        return Err(RefineError::Unsupported(format!(
            "`{name}` needs a final equation matching every argument to become hardware"
        )));
    }
    let (_, last) = arms.pop().unwrap();
    let writes = last
        .into_iter()
        .enumerate()
        .map(|(j, otherwise)| {
            arms.iter().rev().fold(otherwise, |acc, (tests, outs)| HExpr::Cond {
                tests: tests.clone(),
                then: Box::new(outs[j].clone()),
                otherwise: Box::new(acc),
            })
        })
        .collect();
    Ok(MacroDef {
        name: name.to_string(),
        params: leaf_params(inputs, outputs),
        body: MacroBody::Leaf(LeafBody { reads, lets, writes }),
        library: false,
    })
}

pub fn flat_len(t: &Ty) -> usize {
    match t {
        Ty::Tuple(ts) => ts.iter().map(flat_len).sum(),
        _ => 1,
    }
}

const RESERVED: &[&str] = &[
    "and", "or", "not", "xor", "if", "else", "while", "for", "do", "par", "seq", "chan", "chanin", "chanout", "int",
    "unsigned", "signed", "signal", "macro", "proc", "expr", "void", "main", "typeof", "delay", "struct", "return",
    "width", "interface", "set", "select", "case", "switch", "break", "default", "with", "ram", "rom", "mpram", "wom",
    "static", "const", "inline", "extern", "typedef", "auto", "register", "sizeof", "char", "short", "long", "float",
    "double", "union", "enum", "goto", "continue", "volatile", "assert", "in", "of", "try", "reset", "trysema",
    "releasesema", "sema", "let", "ifselect", "prialt", "shared", "bool", "true", "false", "sync", "pipe", "intern",
];

pub fn is_reserved(n: &str) -> bool {
    RESERVED.contains(&n)
}
