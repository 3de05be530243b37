//! Dataflow builder: lowers function bodies that call other functions into
//! networks of macro calls joined by channels.
//!
//! Values are tracked as sources (one writer each) with a list of uses; at
//! finalization every source with several uses gets a FORK, every unused
//! source a SINK, and every input passed straight to an output a RELAY.

use std::collections::HashMap;

use crate::semantics::{TExpr, TExprKind, TPattern, Ty};

use super::leaf::{local_name, leaf_params};
use super::library::fork_name;
use super::net::*;
use super::{Driver, MacroInfo, RefineError};

#[derive(Debug, Clone)]
pub enum Sig {
    Word(usize),
    List(usize),
    Tuple(Vec<Sig>),
}

impl Sig {
    pub fn flatten(&self, out: &mut Vec<usize>) {
        match self {
            Sig::Word(s) | Sig::List(s) => out.push(*s),
            Sig::Tuple(xs) => xs.iter().for_each(|x| x.flatten(out)),
        }
    }

    pub fn flat(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.flatten(&mut out);
        out
    }

    /// Rebuilds the structure of `ty` from flattened sources.
    pub fn shape(ty: &Ty, srcs: &mut impl Iterator<Item = usize>) -> Sig {
        match ty {
            Ty::Tuple(ts) => Sig::Tuple(ts.iter().map(|t| Sig::shape(t, srcs)).collect()),
            Ty::List(_) => Sig::List(srcs.next().expect("enough sources")),
            _ => Sig::Word(srcs.next().expect("enough sources")),
        }
    }
}

struct Src {
    kind: ChanKind,
    formal: Option<String>,
    uses: Vec<usize>,
}

enum PArg {
    In(usize),
    Out(usize),
    Fixed(Arg),
}

struct PNode {
    name: String,
    args: Vec<PArg>,
}

/// Variables in scope, with where bindings lowered on first use.
pub struct Scope<'e> {
    vars: HashMap<String, Sig>,
    pending: HashMap<String, &'e TExpr>,
}

impl<'e> Scope<'e> {
    pub fn new() -> Self {
        Scope {
            vars: HashMap::new(),
            pending: HashMap::new(),
        }
    }

    pub fn defer(&mut self, name: &str, e: &'e TExpr) {
        self.pending.insert(name.to_string(), e);
    }
}

pub struct Builder {
    srcs: Vec<Src>,
    /// Formal output each use feeds, if any.
    uses: Vec<Option<String>>,
    nodes: Vec<PNode>,
    tail: Vec<PNode>,
    count: Count,
    mode: ListMode,
    aux_prefix: String,
    aux_next: usize,
    /// Auxiliary leaf macros created for arithmetic around calls.
    pub aux: Vec<MacroDef>,
}

impl Builder {
    pub fn new(count: Count, mode: ListMode, aux_prefix: &str) -> Self {
        Builder {
            srcs: Vec::new(),
            uses: Vec::new(),
            nodes: Vec::new(),
            tail: Vec::new(),
            count,
            mode,
            aux_prefix: aux_prefix.to_string(),
            aux_next: 1,
            aux: Vec::new(),
        }
    }

    pub fn list_kind(&self) -> ChanKind {
        match self.mode {
            ListMode::Vector => ChanKind::Vector,
            ListMode::Stream => ChanKind::Stream,
        }
    }

    pub fn formal_input(&mut self, kind: ChanKind, name: &str) -> usize {
        self.srcs.push(Src {
            kind,
            formal: Some(name.to_string()),
            uses: vec![],
        });
        self.srcs.len() - 1
    }

    pub fn new_src(&mut self, kind: ChanKind) -> usize {
        self.srcs.push(Src {
            kind,
            formal: None,
            uses: vec![],
        });
        self.srcs.len() - 1
    }

    /// Records one read of `src`; `formal` names the output it feeds.
    pub fn consume(&mut self, src: usize, formal: Option<String>) -> usize {
        self.uses.push(formal);
        let u = self.uses.len() - 1;
        self.srcs[src].uses.push(u);
        u
    }

    pub fn produce(&mut self, name: &str, bus: &str, kind: ChanKind) -> usize {
        let s = self.new_src(kind);
        let mut args = vec![PArg::Fixed(Arg::Bus { name: bus.into(), index: None }), PArg::Out(s)];
        if kind != ChanKind::Item {
            args.push(PArg::Fixed(Arg::Count(self.count.clone())));
        }
        self.nodes.push(PNode { name: name.into(), args });
        s
    }

    pub fn store(&mut self, name: &str, src: usize, bus: &str) {
        let kind = self.srcs[src].kind;
        let u = self.consume(src, None);
        let mut args = vec![PArg::In(u), PArg::Fixed(Arg::Bus { name: bus.into(), index: None })];
        if kind != ChanKind::Item {
            args.push(PArg::Fixed(Arg::Count(self.count.clone())));
        }
        self.tail.push(PNode { name: name.into(), args });
    }

    /// Calls a lowered macro on already-lowered inputs.
    pub fn call_info(&mut self, info: &MacroInfo, inputs: &[Sig]) -> Sig {
        let mut flat = Vec::new();
        for s in inputs {
            s.flatten(&mut flat);
        }
        debug_assert_eq!(flat.len(), info.inputs.len());
        let mut args: Vec<PArg> = flat.into_iter().map(|s| PArg::In(self.consume(s, None))).collect();
        let outs: Vec<usize> = info.outputs.iter().map(|&k| self.new_src(k)).collect();
        args.extend(outs.iter().map(|&s| PArg::Out(s)));
        if info.has_count {
            args.push(PArg::Fixed(Arg::Count(self.count.clone())));
        }
        self.nodes.push(PNode {
            name: info.name.clone(),
            args,
        });
        Sig::shape(&info.ret, &mut outs.into_iter())
    }

    pub fn bind(&mut self, p: &TPattern, sig: Sig, scope: &mut Scope) -> Result<(), RefineError> {
        match (p, sig) {
            (TPattern::Var(n, _), s) => {
                scope.vars.insert(n.clone(), s);
            }
            (TPattern::As(n, inner, _), s) => {
                scope.vars.insert(n.clone(), s.clone());
                self.bind(inner, s, scope)?;
            }
            (TPattern::Tuple(ps, _), Sig::Tuple(ss)) => {
                for (p, s) in ps.iter().zip(ss) {
                    self.bind(p, s, scope)?;
                }
            }
            (TPattern::Lit(..), _) => {
                return Err(RefineError::Unsupported(
                    "literal patterns are only supported in functions without calls".into(),
                ))
            }
            (TPattern::Tuple(..), _) => unreachable!("checked pattern"),
        }
        Ok(())
    }

    fn var(&mut self, drv: &mut Driver, n: &str, scope: &mut Scope) -> Result<Sig, RefineError> {
        if let Some(s) = scope.vars.get(n) {
            return Ok(s.clone());
        }
        let e = scope.pending.remove(n).expect("bound variable");
        let s = self.lower(drv, e, scope)?;
        scope.vars.insert(n.to_string(), s.clone());
        Ok(s)
    }

    fn list(&mut self, drv: &mut Driver, e: &TExpr, scope: &mut Scope) -> Result<usize, RefineError> {
        match self.lower(drv, e, scope)? {
            Sig::List(s) => Ok(s),
            _ => unreachable!("list-typed expression"),
        }
    }

    fn word(&mut self, drv: &mut Driver, e: &TExpr, scope: &mut Scope) -> Result<usize, RefineError> {
        match self.lower(drv, e, scope)? {
            Sig::Word(s) => Ok(s),
            _ => unreachable!("word-typed expression"),
        }
    }

    pub fn lower(&mut self, drv: &mut Driver, e: &TExpr, scope: &mut Scope) -> Result<Sig, RefineError> {
        match &e.kind {
            TExprKind::Var(n) => self.var(drv, n, scope),
            TExprKind::Tuple(items) => Ok(Sig::Tuple(
                items.iter().map(|x| self.lower(drv, x, scope)).collect::<Result<_, _>>()?,
            )),
            TExprKind::Call(f, args) => self.call(drv, f, args, scope),
            TExprKind::Map(f, xs) => {
                let fi = drv.hof_function(f, 1)?;
                let xs = self.list(drv, xs, scope)?;
                self.skeleton(["VMAP", "SMAP"], &[xs], &fi)
            }
            TExprKind::ZipWith(f, a, b) => {
                let fi = drv.hof_function(f, 2)?;
                let a = self.list(drv, a, scope)?;
                let b = self.list(drv, b, scope)?;
                self.skeleton(["VZIPWITH", "SZIPWITH"], &[a, b], &fi)
            }
            TExprKind::Foldr(f, init, xs) => {
                let fi = drv.hof_function(f, 2)?;
                let init = self.word(drv, init, scope)?;
                let mut xs = self.list(drv, xs, scope)?;
                if self.mode == ListMode::Stream {
                    let u = self.consume(xs, None);
                    let v = self.new_src(ChanKind::Vector);
                    self.nodes.push(PNode {
                        name: "S2V".into(),
                        args: vec![PArg::In(u), PArg::Out(v), PArg::Fixed(Arg::Count(self.count.clone()))],
                    });
                    xs = v;
                }
                let ux = self.consume(xs, None);
                let ui = self.consume(init, None);
                let out = self.new_src(ChanKind::Item);
                self.nodes.push(PNode {
                    name: "SFOLDR".into(),
                    args: vec![
                        PArg::In(ux),
                        PArg::In(ui),
                        PArg::Out(out),
                        PArg::Fixed(Arg::Count(self.count.clone())),
                        PArg::Fixed(Arg::Func(fi.name)),
                    ],
                });
                Ok(Sig::Word(out))
            }
            TExprKind::Lit(..) | TExprKind::Bin(..) | TExprKind::Shift(..) => self.arith(drv, e, scope),
        }
    }

    fn skeleton(&mut self, names: [&str; 2], lists: &[usize], f: &MacroInfo) -> Result<Sig, RefineError> {
        let name = if self.mode == ListMode::Vector { names[0] } else { names[1] };
        let mut args: Vec<PArg> = lists.iter().map(|&s| PArg::In(self.consume(s, None))).collect();
        let out = self.new_src(self.list_kind());
        args.push(PArg::Out(out));
        args.push(PArg::Fixed(Arg::Count(self.count.clone())));
        args.push(PArg::Fixed(Arg::Func(f.name.clone())));
        self.nodes.push(PNode { name: name.into(), args });
        Ok(Sig::List(out))
    }

    fn call(&mut self, drv: &mut Driver, f: &str, args: &[TExpr], scope: &mut Scope) -> Result<Sig, RefineError> {
        let (info, skip) = drv.call_target(f, args)?;
        let mut inputs = Vec::new();
        for (i, a) in args.iter().enumerate() {
            if Some(i) != skip {
                inputs.push(self.lower(drv, a, scope)?);
            }
        }
        Ok(self.call_info(&info, &inputs))
    }

    /// Arithmetic over call results and variables becomes an auxiliary leaf
    /// whose inputs are those operands.
    fn arith(&mut self, drv: &mut Driver, e: &TExpr, scope: &mut Scope) -> Result<Sig, RefineError> {
        let mut holes: Vec<(Option<String>, usize)> = Vec::new();
        let body = self.arith_expr(drv, e, scope, &mut holes)?;
        let name = drv.fresh_macro_name(&format!("{}_e{}", self.aux_prefix, self.aux_next));
        self.aux_next += 1;
        let reads: Vec<String> = (0..holes.len()).map(local_name).collect();
        self.aux.push(MacroDef {
            name: name.clone(),
            params: leaf_params(holes.len(), 1),
            body: MacroBody::Leaf(LeafBody {
                reads,
                lets: vec![],
                writes: vec![body],
            }),
            library: false,
        });
        let info = MacroInfo {
            name,
            inputs: vec![ChanKind::Item; holes.len()],
            outputs: vec![ChanKind::Item],
            has_count: false,
            ret: Ty::UInt32,
        };
        let inputs: Vec<Sig> = holes.into_iter().map(|(_, s)| Sig::Word(s)).collect();
        Ok(self.call_info(&info, &inputs))
    }

    fn arith_expr(
        &mut self,
        drv: &mut Driver,
        e: &TExpr,
        scope: &mut Scope,
        holes: &mut Vec<(Option<String>, usize)>,
    ) -> Result<HExpr, RefineError> {
        Ok(match &e.kind {
            TExprKind::Lit(v, b) => HExpr::Lit(*v, *b),
            TExprKind::Bin(op, a, b) => HExpr::Bin(
                *op,
                Box::new(self.arith_expr(drv, a, scope, holes)?),
                Box::new(self.arith_expr(drv, b, scope, holes)?),
            ),
            TExprKind::Shift(op, a, k) => HExpr::Shift(*op, Box::new(self.arith_expr(drv, a, scope, holes)?), *k),
            TExprKind::Var(n) => {
                if let Some(i) = holes.iter().position(|(h, _)| h.as_deref() == Some(n)) {
                    HExpr::Var(local_name(i))
                } else {
                    let s = self.word(drv, e, scope)?;
                    holes.push((Some(n.clone()), s));
                    HExpr::Var(local_name(holes.len() - 1))
                }
            }
            _ => {
                let s = self.word(drv, e, scope)?;
                holes.push((None, s));
                HExpr::Var(local_name(holes.len() - 1))
            }
        })
    }

    /// Assigns channel names and adds the fan-out plumbing.
    pub fn finalize(self) -> (Vec<ChannelDecl>, Vec<NetNode>) {
        let mut next: HashMap<ChanKind, usize> = HashMap::new();
        let mut decls = Vec::new();
        let count = self.count.clone();
        let mut fresh = |kind: ChanKind, decls: &mut Vec<ChannelDecl>| {
            let k = next.entry(kind).or_insert(0);
            let name = format!("{}{}", kind.prefix(), k);
            *k += 1;
            decls.push(ChannelDecl {
                name: name.clone(),
                kind,
                len: (kind != ChanKind::Item).then(|| count.clone()),
            });
            name
        };

        let mut src_chan = Vec::with_capacity(self.srcs.len());
        for s in &self.srcs {
            let name = match (&s.formal, s.uses.as_slice()) {
                (Some(f), _) => f.clone(),
                (None, [u]) if self.uses[*u].is_some() => self.uses[*u].clone().unwrap(),
                _ => fresh(s.kind, &mut decls),
            };
            src_chan.push(name);
        }
        let mut use_chan: Vec<String> = vec![String::new(); self.uses.len()];
        for (i, s) in self.srcs.iter().enumerate() {
            if let [u] = s.uses.as_slice() {
                use_chan[*u] = self.uses[*u].clone().unwrap_or_else(|| src_chan[i].clone());
            }
        }
        for s in &self.srcs {
            if s.uses.len() > 1 {
                for &u in &s.uses {
                    use_chan[u] = match &self.uses[u] {
                        Some(f) => f.clone(),
                        None => fresh(s.kind, &mut decls),
                    };
                }
            }
        }

        let mut plumbing = Vec::new();
        for (i, s) in self.srcs.iter().enumerate() {
            let outs: Vec<&str> = match s.uses.as_slice() {
                [] => vec![],
                [u] if s.formal.is_some() && self.uses[*u].is_some() => vec![use_chan[*u].as_str()],
                [_] => continue,
                us => us.iter().map(|&u| use_chan[u].as_str()).collect(),
            };
            let macro_name = match outs.len() {
                0 => "SINK".to_string(),
                1 => "RELAY".to_string(),
                k => fork_name(k),
            };
            let chans: Vec<&str> = std::iter::once(src_chan[i].as_str()).chain(outs).collect();
            plumbing.push(replicated(s.kind, &self.count, &macro_name, &chans));
        }

        let render = |n: &PNode| {
            let args = n
                .args
                .iter()
                .map(|a| match a {
                    PArg::In(u) => Arg::chan(use_chan[*u].clone()),
                    PArg::Out(s) => Arg::chan(src_chan[*s].clone()),
                    PArg::Fixed(a) => a.clone(),
                })
                .collect();
            NetNode::Call {
                macro_name: n.name.clone(),
                args,
            }
        };
        let mut nodes: Vec<NetNode> = self.nodes.iter().map(render).collect();
        nodes.extend(plumbing);
        nodes.extend(self.tail.iter().map(render));
        (decls, nodes)
    }
}

/// A plumbing call on items, or its per-element replication for lists.
fn replicated(kind: ChanKind, count: &Count, name: &str, chans: &[&str]) -> NetNode {
    match kind {
        ChanKind::Item => NetNode::call(name, chans.iter().map(|c| Arg::chan(*c)).collect()),
        ChanKind::Stream => NetNode::Replicate {
            mode: ReplicateMode::Seq,
            count: count.clone(),
            index: "c".into(),
            body: vec![NetNode::call(name, chans.iter().map(|c| Arg::chan(*c)).collect())],
        },
        ChanKind::Vector => NetNode::Replicate {
            mode: ReplicateMode::Par,
            count: count.clone(),
            index: "c".into(),
            body: vec![NetNode::call(
                name,
                chans
                    .iter()
                    .map(|c| Arg::Chan(ChanRef::elem(c, Index::Var { name: "c".into(), plus: 0 })))
                    .collect(),
            )],
        },
    }
}
