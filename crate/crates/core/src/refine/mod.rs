//! Refinement of typed programs into process networks.

mod build;
pub mod elaborate;
pub mod leaf;
pub mod library;
pub mod net;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::semantics::{Op, TExpr, TExprKind, TPattern, Ty, TypedProgram, TypedUnit};

use build::{Builder, Scope, Sig};
use leaf::{is_reserved, lower_leaf, used_wheres, EqView};
use library::{library_deps, library_macro};
pub use net::*;

/// Largest number of stages an unrolled recursion may have.
pub const MAX_UNROLL: u32 = 4096;
pub const DEFAULT_VEC_LEN: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("non-constant recursion bound: {0}")]
    NonConstantBound(String),
    #[error("mutual recursion between {0} is not supported")]
    MutualRecursion(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no function named `{0}`")]
    UnknownEntry(String),
    #[error("channel `{channel}` has {writers} writer(s) and {readers} reader(s)")]
    Linearity {
        channel: String,
        writers: usize,
        readers: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefineConfig {
    pub list_mode: ListMode,
    /// Element counts per list parameter of the entry function.
    pub vec_lens: Vec<(String, u32)>,
    pub unroll: Option<u32>,
    pub entry: Option<String>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            list_mode: ListMode::Vector,
            vec_lens: vec![],
            unroll: None,
            entry: None,
        }
    }
}

/// Port summary of a lowered function.
#[derive(Debug, Clone)]
pub struct MacroInfo {
    pub name: String,
    pub inputs: Vec<ChanKind>,
    pub outputs: Vec<ChanKind>,
    pub has_count: bool,
    pub ret: Ty,
}

/// Shape of a bounded self-recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecInfo {
    pub counter: usize,
    pub base_lit: u32,
    /// Added to the counter on each recursive call (mod 2^32).
    pub step: u32,
}

impl RecInfo {
    /// Number of recursive calls before the base case when started at `start`.
    pub fn iterations_from(&self, start: u32) -> Option<u32> {
        let mut c = start;
        for t in 0..=MAX_UNROLL {
            if c == self.base_lit {
                return Some(t);
            }
            c = c.wrapping_add(self.step);
        }
        None
    }

    /// Counter value that reaches the base case after `k` recursive calls.
    pub fn start_for(&self, k: u32) -> u32 {
        self.base_lit.wrapping_sub(self.step.wrapping_mul(k))
    }
}

/// The function no other function calls; the last one if several.
pub fn default_entry(program: &TypedProgram) -> Option<String> {
    let mut called = HashSet::new();
    for u in &program.units {
        for c in unit_callees(u) {
            if c != u.name {
                called.insert(c);
            }
        }
    }
    program
        .units
        .iter()
        .rev()
        .find(|u| !called.contains(&u.name))
        .or(program.units.last())
        .map(|u| u.name.clone())
}

fn unit_callees(u: &TypedUnit) -> Vec<String> {
    let mut out = Vec::new();
    for eq in &u.equations {
        eq.body.callees(&mut out);
        for w in &eq.wheres {
            w.expr.callees(&mut out);
        }
    }
    out
}

fn is_irrefutable(p: &TPattern) -> bool {
    match p {
        TPattern::Var(..) => true,
        TPattern::Lit(..) => false,
        TPattern::Tuple(ps, _) => ps.iter().all(is_irrefutable),
        TPattern::As(_, inner, _) => is_irrefutable(inner),
    }
}

fn is_self_call(e: &TExpr, f: &str) -> bool {
    let mut c = Vec::new();
    e.callees(&mut c);
    c.iter().any(|n| n == f)
}

/// Checks the base-case/recursive-case shape of a self-recursive function.
pub fn analyze_recursion(unit: &TypedUnit) -> Result<RecInfo, RefineError> {
    let f = unit.name.as_str();
    let shape_err = || {
        RefineError::Unsupported(format!(
            "recursive `{f}` must have one base equation with a literal counter pattern followed by one \
             equation whose body is the recursive call"
        ))
    };
    let [base, rec] = unit.equations.as_slice() else {
        return Err(shape_err());
    };
    let lits: Vec<usize> = base
        .patterns
        .iter()
        .enumerate()
        .filter(|(_, p)| matches!(p, TPattern::Lit(..)))
        .map(|(i, _)| i)
        .collect();
    let [counter] = lits.as_slice() else {
        return Err(shape_err());
    };
    let counter = *counter;
    let TPattern::Lit(base_lit, _) = base.patterns[counter] else {
        unreachable!()
    };
    let others_ok = base.patterns.iter().enumerate().all(|(i, p)| i == counter || is_irrefutable(p))
        && rec.patterns.iter().all(is_irrefutable);
    if !others_ok || is_self_call(&base.body, f) || base.wheres.iter().any(|w| is_self_call(&w.expr, f)) {
        return Err(shape_err());
    }
    let TExprKind::Call(callee, args) = &rec.body.kind else {
        return Err(shape_err());
    };
    if callee != f || args.iter().any(|a| is_self_call(a, f)) || rec.wheres.iter().any(|w| is_self_call(&w.expr, f)) {
        return Err(shape_err());
    }
    let TPattern::Var(cname, _) = &rec.patterns[counter] else {
        return Err(RefineError::NonConstantBound(format!("the counter of `{f}` must be bound to a plain variable")));
    };
    let is_counter = |e: &TExpr| matches!(&e.kind, TExprKind::Var(n) if n == cname);
    let step = match &args[counter].kind {
        TExprKind::Bin(Op::Add, a, b) => match (&a.kind, &b.kind) {
            (_, TExprKind::Lit(d, _)) if is_counter(a) => Some(*d),
            (TExprKind::Lit(d, _), _) if is_counter(b) => Some(*d),
            _ => None,
        },
        TExprKind::Bin(Op::Sub, a, b) => match &b.kind {
            TExprKind::Lit(d, _) if is_counter(a) => Some(d.wrapping_neg()),
            _ => None,
        },
        _ => None,
    };
    let step = match step {
        Some(0) | None => {
            return Err(RefineError::NonConstantBound(format!(
                "the recursive call of `{f}` does not change its counter by a constant step"
            )))
        }
        Some(d) => d,
    };
    let mut data_vars = Vec::new();
    for (i, a) in args.iter().enumerate() {
        if i != counter {
            a.free_vars(&mut data_vars);
        }
    }
    let stand_in = TExpr {
        kind: TExprKind::Tuple(args.iter().enumerate().filter(|(i, _)| *i != counter).map(|(_, a)| a.clone()).collect()),
        ty: Ty::Tuple(vec![]),
        span: rec.body.span,
    };
    for w in used_wheres(&stand_in, &rec.wheres) {
        w.expr.free_vars(&mut data_vars);
    }
    if data_vars.iter().any(|v| v == cname) {
        return Err(RefineError::NonConstantBound(format!(
            "the counter of `{f}` is used as data, so it cannot be removed by unrolling"
        )));
    }
    Ok(RecInfo { counter, base_lit, step })
}

fn literal_value(e: &TExpr) -> Option<u32> {
    match &e.kind {
        TExprKind::Lit(v, _) => Some(*v),
        _ => None,
    }
}

/// Formal names per kind: `itemIn` when one, else `itemIn1`, `itemIn2`, ...
fn formal_names(kinds: &[ChanKind], suffix: &str) -> Vec<String> {
    let total = |k: ChanKind| kinds.iter().filter(|&&x| x == k).count();
    let mut seen: HashMap<ChanKind, usize> = HashMap::new();
    kinds
        .iter()
        .map(|&k| {
            let i = seen.entry(k).or_insert(0);
            *i += 1;
            if total(k) == 1 {
                format!("{}{suffix}", k.prefix())
            } else {
                format!("{}{suffix}{}", k.prefix(), i)
            }
        })
        .collect()
}

pub struct Driver<'p> {
    prog: &'p TypedProgram,
    mode: ListMode,
    user: Vec<MacroDef>,
    infos: HashMap<(String, Option<u32>), MacroInfo>,
    active: Vec<String>,
    names: HashSet<String>,
    chain_names: HashMap<String, Vec<u32>>,
}

impl<'p> Driver<'p> {
    fn unit(&self, f: &str) -> &'p TypedUnit {
        self.prog.unit(f).expect("checked program")
    }

    fn recursion(&self, f: &str) -> Result<Option<RecInfo>, RefineError> {
        let u = self.unit(f);
        if unit_callees(u).iter().any(|c| c == f) {
            analyze_recursion(u).map(Some)
        } else {
            Ok(None)
        }
    }

    /// A macro name not yet used, avoiding Handel-C keywords.
    pub fn fresh_macro_name(&mut self, base: &str) -> String {
        let base = if is_reserved(base) { base.to_uppercase() } else { base.to_string() };
        let mut name = base.clone();
        let mut k = 2;
        while self.names.contains(&name) || library_macro(&name).is_some() || is_reserved(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        self.names.insert(name.clone());
        name
    }

    /// Macro to call for `f` applied to `args`, and the argument position the
    /// call drops (an unrolled counter).
    fn call_target(&mut self, f: &str, args: &[TExpr]) -> Result<(MacroInfo, Option<usize>), RefineError> {
        match self.recursion(f)? {
            Some(rec) => {
                let bound = literal_value(&args[rec.counter])
                    .ok_or_else(|| {
                        RefineError::NonConstantBound(format!(
                            "`{f}` is called with a counter that is not a literal, so the number of rounds is unknown"
                        ))
                    })
                    .and_then(|start| {
                        rec.iterations_from(start).ok_or_else(|| {
                            RefineError::NonConstantBound(format!(
                                "`{f}` started at {start} does not reach its base case within {MAX_UNROLL} rounds"
                            ))
                        })
                    })?;
                Ok((self.callee(f, Some(bound))?, Some(rec.counter)))
            }
            None => Ok((self.callee(f, None)?, None)),
        }
    }

    fn hof_function(&mut self, f: &str, arity: usize) -> Result<MacroInfo, RefineError> {
        if self.recursion(f)?.is_some() {
            return Err(RefineError::Unsupported(format!("recursive `{f}` cannot be the argument of a list skeleton")));
        }
        let info = self.callee(f, None)?;
        if info.inputs.len() != arity || info.outputs.len() != 1 || info.has_count {
            return Err(RefineError::Unsupported(format!("`{f}` must map items to one item to be replicated")));
        }
        Ok(info)
    }

    fn callee(&mut self, f: &str, bound: Option<u32>) -> Result<MacroInfo, RefineError> {
        let key = (f.to_string(), bound);
        if let Some(info) = self.infos.get(&key) {
            return Ok(info.clone());
        }
        if self.active.iter().any(|a| a == f) {
            let mut cycle = self.active.clone();
            cycle.push(f.to_string());
            return Err(RefineError::MutualRecursion(cycle.join(" -> ")));
        }
        self.active.push(f.to_string());
        let unit = self.unit(f);
        let result = match self.recursion(f)? {
            Some(rec) => self.lower_chain(unit, rec, bound.expect("recursive call carries a bound")),
            None => {
                let eqs: Vec<EqView> = unit
                    .equations
                    .iter()
                    .map(|e| EqView {
                        patterns: e.patterns.clone(),
                        body: e.body.clone(),
                        wheres: e.wheres.clone(),
                    })
                    .collect();
                let name = self.fresh_macro_name(f);
                self.lower_body(&name, &unit.params, &unit.ret, &eqs)
            }
        };
        self.active.pop();
        let info = result?;
        self.infos.insert(key, info.clone());
        Ok(info)
    }

    fn kinds(&self, tys: &[Ty]) -> Result<Vec<ChanKind>, RefineError> {
        let mut out = Vec::new();
        for t in tys {
            out.extend(flat_kinds(t, self.mode)?);
        }
        Ok(out)
    }

    /// Leaf macro when possible, network macro otherwise.
    fn lower_body(&mut self, name: &str, params: &[Ty], ret: &Ty, eqs: &[EqView]) -> Result<MacroInfo, RefineError> {
        let inputs = self.kinds(params)?;
        let outputs = self.kinds(std::slice::from_ref(ret))?;
        let scalar = inputs.iter().chain(&outputs).all(|&k| k == ChanKind::Item);
        let calls = eqs.iter().any(|eq| {
            eq.body.has_calls() || used_wheres(&eq.body, &eq.wheres).iter().any(|w| w.expr.has_calls())
        });
        let has_count = inputs.iter().chain(&outputs).any(|&k| k != ChanKind::Item);
        let info = MacroInfo {
            name: name.to_string(),
            inputs: inputs.clone(),
            outputs: outputs.clone(),
            has_count,
            ret: ret.clone(),
        };
        if scalar && !calls {
            let m = lower_leaf(name, params, ret, eqs)?;
            self.user.push(m);
            return Ok(info);
        }
        let [eq] = eqs else {
            return Err(RefineError::Unsupported(format!(
                "`{name}` calls other functions, so it must be defined by a single equation"
            )));
        };
        let in_names = formal_names(&inputs, "In");
        let out_names = formal_names(&outputs, "Out");
        let mut b = Builder::new(Count::param("n"), self.mode, name);
        let mut scope = Scope::new();
        let mut formals = inputs.iter().zip(&in_names).map(|(&k, n)| (k, n.clone())).collect::<Vec<_>>().into_iter();
        for (p, t) in eq.patterns.iter().zip(params) {
            let n = flat_kinds(t, self.mode)?.len();
            let srcs: Vec<usize> = (0..n)
                .map(|_| {
                    let (k, name) = formals.next().unwrap();
                    b.formal_input(k, &name)
                })
                .collect();
            let sig = Sig::shape(t, &mut srcs.into_iter());
            b.bind(p, sig, &mut scope)?;
        }
        for w in &eq.wheres {
            scope.defer(&w.name, &w.expr);
        }
        let out = b.lower(self, &eq.body, &mut scope)?;
        for (s, formal) in out.flat().into_iter().zip(&out_names) {
            b.consume(s, Some(formal.clone()));
        }
        let aux = std::mem::take(&mut b.aux);
        let (locals, nodes) = b.finalize();
        self.user.extend(aux);
        let mut ps: Vec<Param> = inputs
            .iter()
            .zip(&in_names)
            .map(|(&k, n)| Param { name: n.clone(), role: Role::In(k) })
            .chain(outputs.iter().zip(&out_names).map(|(&k, n)| Param { name: n.clone(), role: Role::Out(k) }))
            .collect();
        if has_count {
            ps.push(Param { name: "n".into(), role: Role::Count });
        }
        self.user.push(MacroDef {
            name: name.to_string(),
            params: ps,
            body: MacroBody::Network { locals, nodes },
            library: false,
        });
        Ok(info)
    }

    fn lower_chain(&mut self, unit: &'p TypedUnit, rec: RecInfo, bound: u32) -> Result<MacroInfo, RefineError> {
        let f = unit.name.as_str();
        let (base, step) = (&unit.equations[0], &unit.equations[1]);
        let drop = |ps: &[TPattern]| -> Vec<TPattern> {
            ps.iter().enumerate().filter(|(i, _)| *i != rec.counter).map(|(_, p)| p.clone()).collect()
        };
        let state: Vec<Ty> = drop_ty(&unit.params, rec.counter);
        let kinds = self.kinds(&state)?;
        if kinds.iter().any(|&k| k != ChanKind::Item) {
            return Err(RefineError::Unsupported(format!("`{f}` threads a list through its recursion")));
        }
        let TExprKind::Call(_, args) = &step.body.kind else {
            unreachable!("checked recursion shape")
        };
        let next: Vec<TExpr> = args.iter().enumerate().filter(|(i, _)| *i != rec.counter).map(|(_, a)| a.clone()).collect();
        let state_ty = Ty::Tuple(state.clone());
        let step_view = EqView {
            patterns: drop(&step.patterns),
            body: TExpr {
                kind: TExprKind::Tuple(next),
                ty: state_ty.clone(),
                span: step.body.span,
            },
            wheres: step.wheres.clone(),
        };
        let step_name = self.fresh_macro_name(&format!("{f}_step"));
        let step_info = self.lower_body(&step_name, &state, &state_ty, &[step_view])?;
        let base_view = EqView {
            patterns: drop(&base.patterns),
            body: base.body.clone(),
            wheres: base.wheres.clone(),
        };
        let base_name = self.fresh_macro_name(&format!("{f}_base"));
        let base_info = self.lower_body(&base_name, &state, &unit.ret, &[base_view])?;
        if base_info.has_count {
            return Err(RefineError::Unsupported(format!("`{f}` returns a list from its base case")));
        }

        let upper = f.to_uppercase();
        let bounds = self.chain_names.entry(f.to_string()).or_default();
        bounds.push(bound);
        let base_label = if bounds.len() == 1 { upper } else { format!("{upper}_{bound}") };
        let name = self.fresh_macro_name(&base_label);

        let m = kinds.len();
        let in_names = formal_names(&kinds, "In");
        let out_names = formal_names(&base_info.outputs, "Out");
        let vectors: Vec<String> = (0..m).map(|j| format!("vector{j}")).collect();
        let locals = vectors
            .iter()
            .map(|v| ChannelDecl {
                name: v.clone(),
                kind: ChanKind::Vector,
                len: Some(Count::Lit(bound + 1)),
            })
            .collect();
        let at = |v: &str, index: Index| Arg::Chan(ChanRef::elem(v, index));
        let c = |plus: u32| Index::Var { name: "c".into(), plus };
        let mut nodes: Vec<NetNode> = (0..m)
            .map(|j| NetNode::call("RELAY", vec![Arg::chan(in_names[j].clone()), at(&vectors[j], Index::Lit(0))]))
            .collect();
        let stage_args = vectors.iter().map(|v| at(v, c(0))).chain(vectors.iter().map(|v| at(v, c(1)))).collect();
        nodes.push(NetNode::Chain {
            count: bound,
            index: "c".into(),
            body: vec![NetNode::call(&step_info.name, stage_args)],
        });
        let base_args = vectors
            .iter()
            .map(|v| at(v, Index::Lit(bound)))
            .chain(out_names.iter().map(|o| Arg::chan(o.clone())))
            .collect();
        nodes.push(NetNode::call(&base_info.name, base_args));

        let params = in_names
            .iter()
            .map(|n| Param { name: n.clone(), role: Role::In(ChanKind::Item) })
            .chain(out_names.iter().map(|n| Param { name: n.clone(), role: Role::Out(ChanKind::Item) }))
            .collect();
        self.user.push(MacroDef {
            name: name.clone(),
            params,
            body: MacroBody::Network { locals, nodes },
            library: false,
        });
        Ok(MacroInfo {
            name,
            inputs: kinds,
            outputs: base_info.outputs,
            has_count: false,
            ret: unit.ret.clone(),
        })
    }
}

fn drop_ty(tys: &[Ty], skip: usize) -> Vec<Ty> {
    tys.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, t)| t.clone()).collect()
}

/// Entry parameter names, taken from the first equation's variable patterns.
fn param_names(unit: &TypedUnit) -> Vec<Option<String>> {
    unit.equations[0]
        .patterns
        .iter()
        .map(|p| match p {
            TPattern::Var(n, _) | TPattern::As(n, _, _) => Some(n.clone()),
            _ => None,
        })
        .collect()
}

fn vector_length(unit: &TypedUnit, cfg: &RefineConfig) -> Result<u32, RefineError> {
    let names = param_names(unit);
    let list_params: Vec<&str> = unit
        .params
        .iter()
        .zip(&names)
        .filter(|(t, _)| matches!(t, Ty::List(_)))
        .filter_map(|(_, n)| n.as_deref())
        .collect();
    for (n, _) in &cfg.vec_lens {
        if !list_params.contains(&n.as_str()) {
            return Err(RefineError::Unsupported(format!(
                "`{n}` is not a list parameter of `{}`",
                unit.name
            )));
        }
    }
    let mut lens: Vec<u32> = cfg.vec_lens.iter().map(|(_, l)| *l).collect();
    lens.dedup();
    match lens.as_slice() {
        [] => Ok(DEFAULT_VEC_LEN),
        [l] if *l >= 1 => {
            if cfg.vec_lens.len() < list_params.len() && *l != DEFAULT_VEC_LEN {
                return Err(RefineError::Unsupported(format!(
                    "all list parameters of `{}` must have the same length",
                    unit.name
                )));
            }
            Ok(*l)
        }
        [_] => Err(RefineError::Unsupported("vector length must be at least 1".into())),
        _ => Err(RefineError::Unsupported(format!(
            "all list parameters of `{}` must have the same length",
            unit.name
        ))),
    }
}

/// Whether the entry is a single skeleton application such as `map f xs`, which
/// keeps its own wrapper macro rather than being inlined into main.
fn is_wrapper(unit: &TypedUnit) -> bool {
    matches!(unit.equations.as_slice(), [eq] if matches!(eq.body.kind, TExprKind::Map(..) | TExprKind::ZipWith(..) | TExprKind::Foldr(..)))
}

pub fn refine(program: &TypedProgram, cfg: &RefineConfig) -> Result<ProcessNet, RefineError> {
    let entry = match &cfg.entry {
        Some(e) => e.clone(),
        None => default_entry(program).ok_or_else(|| RefineError::UnknownEntry(String::new()))?,
    };
    let unit = program.unit(&entry).ok_or_else(|| RefineError::UnknownEntry(entry.clone()))?;
    if cfg.unroll == Some(0) {
        return Err(RefineError::Unsupported("the unroll bound must be at least 1".into()));
    }
    let n = vector_length(unit, cfg)?;
    let mut drv = Driver {
        prog: program,
        mode: cfg.list_mode,
        user: vec![],
        infos: HashMap::new(),
        active: vec![],
        names: HashSet::new(),
        chain_names: HashMap::new(),
    };
    let rec = drv.recursion(&entry)?;
    let mut b = Builder::new(Count::Lit(n), cfg.list_mode, &entry);
    let mut inputs = Vec::new();
    let mut param_sigs = Vec::new();
    for (i, t) in unit.params.iter().enumerate() {
        if rec.map(|r| r.counter) == Some(i) {
            continue;
        }
        let mut srcs = Vec::new();
        for k in flat_kinds(t, cfg.list_mode)? {
            let bus = format!("INPUT{}", inputs.len());
            let (prod, len) = match k {
                ChanKind::Item => ("PRODUCE", None),
                ChanKind::Vector => ("VPRODUCE", Some(n)),
                ChanKind::Stream => ("SPRODUCE", Some(n)),
            };
            srcs.push(b.produce(prod, &bus, k));
            inputs.push(BusDecl { name: bus, len });
        }
        param_sigs.push(Sig::shape(t, &mut srcs.into_iter()));
    }

    let mut fixed_params = Vec::new();
    let result = if let Some(r) = rec {
        let bound = cfg.unroll.ok_or_else(|| {
            RefineError::NonConstantBound(format!(
                "`{entry}` is recursive; give the number of rounds to unroll"
            ))
        })?;
        if bound > MAX_UNROLL {
            return Err(RefineError::Unsupported(format!("at most {MAX_UNROLL} rounds can be unrolled")));
        }
        fixed_params.push((r.counter, r.start_for(bound)));
        let info = drv.callee(&entry, Some(bound))?;
        b.call_info(&info, &param_sigs)
    } else {
        let scalar_leaf =
            !unit.params.iter().chain(std::iter::once(&unit.ret)).any(has_list) && unit_callees(unit).is_empty();
        if scalar_leaf || is_wrapper(unit) {
            let info = drv.callee(&entry, None)?;
            b.call_info(&info, &param_sigs)
        } else {
            let [eq] = unit.equations.as_slice() else {
                return Err(RefineError::Unsupported(format!(
                    "`{entry}` calls other functions, so it must be defined by a single equation"
                )));
            };
            drv.names.insert(entry.clone());
            let mut scope = Scope::new();
            for (p, s) in eq.patterns.iter().zip(param_sigs) {
                b.bind(p, s, &mut scope)?;
            }
            for w in &eq.wheres {
                scope.defer(&w.name, &w.expr);
            }
            b.lower(&mut drv, &eq.body, &mut scope)?
        }
    };

    let mut outputs = Vec::new();
    let flat = result.flat();
    let ret_kinds = flat_kinds(&unit.ret, cfg.list_mode)?;
    for (s, k) in flat.into_iter().zip(ret_kinds) {
        let bus = format!("OUTPUT{}", outputs.len());
        let (store, len) = match k {
            ChanKind::Item => ("STORE", None),
            ChanKind::Vector => ("VSTORE", Some(n)),
            ChanKind::Stream => ("SSTORE", Some(n)),
        };
        b.store(store, s, &bus);
        outputs.push(BusDecl { name: bus, len });
    }
    let aux = std::mem::take(&mut b.aux);
    drv.user.extend(aux);
    let (channels, main) = b.finalize();

    let mut user = std::mem::take(&mut drv.user);
    order_user_macros(&mut user);
    let mut macros = library_section(&user, &main);
    macros.extend(user);
    let net = ProcessNet {
        entry,
        macros,
        channels,
        main,
        inputs,
        outputs,
        fixed_params,
        width: WIDTH,
    };
    elaborate::check_linearity(&net)?;
    Ok(net)
}

fn has_list(t: &Ty) -> bool {
    match t {
        Ty::List(_) => true,
        Ty::Tuple(ts) => ts.iter().any(has_list),
        _ => false,
    }
}

/// Stable callee-before-caller order.
fn order_user_macros(user: &mut Vec<MacroDef>) {
    let names: Vec<String> = user.iter().map(|m| m.name.clone()).collect();
    let mut done: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    fn visit(i: usize, user: &[MacroDef], names: &[String], done: &mut HashSet<String>, out: &mut Vec<usize>) {
        if done.contains(&names[i]) {
            return;
        }
        done.insert(names[i].clone());
        for c in user[i].callees() {
            if let Some(j) = names.iter().position(|n| *n == c) {
                visit(j, user, names, done, out);
            }
        }
        out.push(i);
    }
    for i in 0..user.len() {
        visit(i, user, &names, &mut done, &mut out);
    }
    let mut taken: Vec<Option<MacroDef>> = user.drain(..).map(Some).collect();
    user.extend(out.into_iter().map(|i| taken[i].take().unwrap()));
}

const LIBRARY_ORDER: &[&str] = &[
    "PRODUCE", "STORE", "VPRODUCE", "VSTORE", "SPRODUCE", "SSTORE", "RELAY", "SINK", "S2V", "VMAP", "VZIPWITH",
    "SMAP", "SZIPWITH", "SFOLDR",
];

fn library_section(user: &[MacroDef], main: &[NetNode]) -> Vec<MacroDef> {
    let main_macro = MacroDef {
        name: String::new(),
        params: vec![],
        body: MacroBody::Network {
            locals: vec![],
            nodes: main.to_vec(),
        },
        library: false,
    };
    let mut wanted: Vec<String> = Vec::new();
    let mut stack: Vec<String> = user
        .iter()
        .chain(std::iter::once(&main_macro))
        .flat_map(|m| m.callees())
        .filter(|c| library_macro(c).is_some())
        .collect();
    while let Some(c) = stack.pop() {
        if wanted.contains(&c) {
            continue;
        }
        if let Some(m) = library_macro(&c) {
            stack.extend(library_deps(&m));
        }
        wanted.push(c);
    }
    let mut forks: Vec<usize> = wanted
        .iter()
        .filter_map(|w| w.strip_prefix("FORK").and_then(|k| k.parse().ok()))
        .collect();
    forks.sort_unstable();
    let mut out: Vec<MacroDef> = Vec::new();
    for name in LIBRARY_ORDER {
        if wanted.iter().any(|w| w == name) {
            out.push(library_macro(name).unwrap());
        }
        if *name == "SINK" {
            out.extend(forks.iter().map(|k| library_macro(&library::fork_name(*k)).unwrap()));
        }
    }
    out
}
