//! Process-network model shared by refinement, emission and simulation.

use std::fmt::Write as _;

use crate::frontend::Base;
use crate::semantics::{Op, Ty};

use super::RefineError;

pub const WIDTH: u32 = 32;

/// Refined communication datatype.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Construct {
    Item,
    VectorOfItems { n: u32 },
    StreamOfItems { n: u32 },
    TupleOfItems(Vec<Construct>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListMode {
    Vector,
    Stream,
}

impl Construct {
    /// Channel kinds of the components, tuples flattened left to right.
    pub fn flatten(&self) -> Vec<ChanKind> {
        match self {
            Construct::Item => vec![ChanKind::Item],
            Construct::VectorOfItems { .. } => vec![ChanKind::Vector],
            Construct::StreamOfItems { .. } => vec![ChanKind::Stream],
            Construct::TupleOfItems(items) => items.iter().flat_map(Construct::flatten).collect(),
        }
    }
}

/// Refines a source type; `n` is the element count for lists.
pub fn refine_type(ty: &Ty, mode: ListMode, n: u32) -> Result<Construct, RefineError> {
    match ty {
        Ty::Int | Ty::UInt32 => Ok(Construct::Item),
        Ty::List(elem) => {
            if !elem.is_word() {
                return Err(RefineError::Unsupported(format!("nested or structured list type {ty}")));
            }
            if n == 0 {
                return Err(RefineError::Unsupported("vector length must be at least 1".into()));
            }
            Ok(match mode {
                ListMode::Vector => Construct::VectorOfItems { n },
                ListMode::Stream => Construct::StreamOfItems { n },
            })
        }
        Ty::Tuple(ts) => Ok(Construct::TupleOfItems(
            ts.iter().map(|t| refine_type(t, mode, n)).collect::<Result<_, _>>()?,
        )),
        Ty::Fun(..) => Err(RefineError::Unsupported(format!("function type {ty} has no channel refinement"))),
    }
}

/// Flattened channel kinds of a type, with the given list mode.
pub fn flat_kinds(ty: &Ty, mode: ListMode) -> Result<Vec<ChanKind>, RefineError> {
    Ok(refine_type(ty, mode, 1)?.flatten())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChanKind {
    Item,
    Vector,
    Stream,
}

impl ChanKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ChanKind::Item => "item",
            ChanKind::Vector => "vector",
            ChanKind::Stream => "stream",
        }
    }
}

/// Static element count: a literal or a count parameter plus an offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Count {
    Lit(u32),
    Param { name: String, plus: u32 },
}

impl Count {
    pub fn param(name: &str) -> Count {
        Count::Param {
            name: name.to_string(),
            plus: 0,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Count::Lit(v) => v.to_string(),
            Count::Param { name, plus: 0 } => name.clone(),
            Count::Param { name, plus } => format!("{name}+{plus}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDecl {
    pub name: String,
    pub kind: ChanKind,
    /// Element count for vectors and streams.
    pub len: Option<Count>,
}

/// Vector element index: `c`, `c+1`, `n`, `3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Index {
    Lit(u32),
    Var { name: String, plus: u32 },
    Count(Count),
}

impl Index {
    pub fn render(&self) -> String {
        match self {
            Index::Lit(v) => v.to_string(),
            Index::Var { name, plus: 0 } => name.clone(),
            Index::Var { name, plus } => format!("{name}+{plus}"),
            Index::Count(c) => c.render(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChanRef {
    Name(String),
    Elem { vector: String, index: Index },
}

impl ChanRef {
    pub fn name(n: impl Into<String>) -> ChanRef {
        ChanRef::Name(n.into())
    }

    pub fn elem(vector: &str, index: Index) -> ChanRef {
        ChanRef::Elem {
            vector: vector.to_string(),
            index,
        }
    }

    pub fn render(&self) -> String {
        match self {
            ChanRef::Name(n) => n.clone(),
            ChanRef::Elem { vector, index } => format!("{vector}.elements[{}]", index.render()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Chan(ChanRef),
    Count(Count),
    Func(String),
    /// An input or output bus; `index` selects one word of a vector bus.
    Bus { name: String, index: Option<Index> },
}

impl Arg {
    pub fn chan(n: impl Into<String>) -> Arg {
        Arg::Chan(ChanRef::Name(n.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplicateMode {
    Par,
    Seq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetNode {
    Call { macro_name: String, args: Vec<Arg> },
    Replicate {
        mode: ReplicateMode,
        count: Count,
        index: String,
        body: Vec<NetNode>,
    },
    /// Pipelined stages of an unrolled recursion.
    Chain { count: u32, index: String, body: Vec<NetNode> },
}

impl NetNode {
    pub fn call(name: &str, args: Vec<Arg>) -> NetNode {
        NetNode::Call {
            macro_name: name.to_string(),
            args,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    In(ChanKind),
    Out(ChanKind),
    Count,
    Function,
    /// One word read from an input bus.
    BusValue,
    /// A whole input bus.
    BusIn,
    /// An output register (or register array).
    BusOut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub role: Role,
}

/// Expression over leaf locals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HExpr {
    Var(String),
    Lit(u32, Base),
    Bin(Op, Box<HExpr>, Box<HExpr>),
    Shift(Op, Box<HExpr>, u32),
    /// `tests` is a conjunction of equality tests.
    Cond {
        tests: Vec<(HExpr, u32)>,
        then: Box<HExpr>,
        otherwise: Box<HExpr>,
    },
}

impl HExpr {
    pub fn eval(&self, env: &dyn Fn(&str) -> u32) -> u32 {
        match self {
            HExpr::Var(n) => env(n),
            HExpr::Lit(v, _) => *v,
            // hardware division by zero yields all ones
            HExpr::Bin(op, a, b) => op.apply(a.eval(env), b.eval(env)).unwrap_or(u32::MAX),
            HExpr::Shift(op, a, k) => op.apply(a.eval(env), *k).unwrap_or(0),
            HExpr::Cond { tests, then, otherwise } => {
                if tests.iter().all(|(e, v)| e.eval(env) == *v) {
                    then.eval(env)
                } else {
                    otherwise.eval(env)
                }
            }
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, HExpr::Var(_) | HExpr::Lit(..))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafBody {
    /// Local bound by each input parameter, in parameter order.
    pub reads: Vec<String>,
    /// Intermediate locals, assigned in order after the reads.
    pub lets: Vec<(String, HExpr)>,
    /// One expression per output parameter, written in parallel.
    pub writes: Vec<HExpr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Produce,
    Store,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacroBody {
    Leaf(LeafBody),
    Primitive(Primitive),
    Network { locals: Vec<ChannelDecl>, nodes: Vec<NetNode> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: MacroBody,
    /// Emitted in the library section rather than with the user macros.
    pub library: bool,
}

impl MacroDef {
    pub fn inputs(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| matches!(p.role, Role::In(_)))
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| matches!(p.role, Role::Out(_)))
    }

    /// Macros this one references through calls (not through function args).
    pub fn callees(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let MacroBody::Network { nodes, .. } = &self.body {
            collect_callees(nodes, &mut out);
        }
        out
    }
}

fn collect_callees(nodes: &[NetNode], out: &mut Vec<String>) {
    for n in nodes {
        match n {
            NetNode::Call { macro_name, args } => {
                for name in std::iter::once(macro_name).chain(args.iter().filter_map(|a| match a {
                    Arg::Func(f) => Some(f),
                    _ => None,
                })) {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
            }
            NetNode::Replicate { body, .. } | NetNode::Chain { body, .. } => collect_callees(body, out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusDecl {
    pub name: String,
    /// `None` for a scalar bus, else the number of words.
    pub len: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessNet {
    pub entry: String,
    /// Library macros first, then user macros callee-before-caller.
    pub macros: Vec<MacroDef>,
    pub channels: Vec<ChannelDecl>,
    pub main: Vec<NetNode>,
    pub inputs: Vec<BusDecl>,
    pub outputs: Vec<BusDecl>,
    /// Entry parameters removed by refinement, with the value they stand for
    /// (the counter of an unrolled recursion).
    pub fixed_params: Vec<(usize, u32)>,
    pub width: u32,
}

impl ProcessNet {
    pub fn macro_def(&self, name: &str) -> Option<&MacroDef> {
        self.macros.iter().find(|m| m.name == name)
    }

    /// Indented textual tree.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "net {} (width {})", self.entry, self.width);
        for b in &self.inputs {
            let _ = writeln!(s, "  input {}{}", b.name, b.len.map(|n| format!("[{n}]")).unwrap_or_default());
        }
        for b in &self.outputs {
            let _ = writeln!(s, "  output {}{}", b.name, b.len.map(|n| format!("[{n}]")).unwrap_or_default());
        }
        for (i, v) in &self.fixed_params {
            let _ = writeln!(s, "  fixed param {i} = {v}");
        }
        for m in &self.macros {
            let params: Vec<String> = m.params.iter().map(|p| format!("{}:{}", p.name, role_name(p.role))).collect();
            let _ = writeln!(s, "  macro {}({}){}", m.name, params.join(", "), if m.library { " library" } else { "" });
            match &m.body {
                MacroBody::Primitive(p) => {
                    let _ = writeln!(s, "    primitive {p:?}");
                }
                MacroBody::Leaf(l) => {
                    let _ = writeln!(s, "    read {}", l.reads.join(", "));
                    for (n, e) in &l.lets {
                        let _ = writeln!(s, "    let {n} = {}", crate::emit::hexpr(e));
                    }
                    for e in &l.writes {
                        let _ = writeln!(s, "    write {}", crate::emit::hexpr(e));
                    }
                }
                MacroBody::Network { locals, nodes } => {
                    dump_decls(&mut s, locals, 4);
                    dump_nodes(&mut s, nodes, 4);
                }
            }
        }
        let _ = writeln!(s, "  main");
        dump_decls(&mut s, &self.channels, 4);
        dump_nodes(&mut s, &self.main, 4);
        s
    }
}

fn role_name(r: Role) -> String {
    match r {
        Role::In(k) => format!("in {}", k.prefix()),
        Role::Out(k) => format!("out {}", k.prefix()),
        Role::Count => "count".into(),
        Role::Function => "function".into(),
        Role::BusValue => "bus value".into(),
        Role::BusIn => "bus in".into(),
        Role::BusOut => "bus out".into(),
    }
}

fn dump_decls(s: &mut String, decls: &[ChannelDecl], indent: usize) {
    for d in decls {
        let len = d.len.as_ref().map(|c| format!("[{}]", c.render())).unwrap_or_default();
        let _ = writeln!(s, "{:indent$}chan {} {}{len}", "", d.kind.prefix(), d.name);
    }
}

pub fn render_arg(a: &Arg) -> String {
    match a {
        Arg::Chan(c) => c.render(),
        Arg::Count(c) => c.render(),
        Arg::Func(f) => f.clone(),
        Arg::Bus { name, index: None } => name.clone(),
        Arg::Bus { name, index: Some(i) } => format!("{name}[{}]", i.render()),
    }
}

fn dump_nodes(s: &mut String, nodes: &[NetNode], indent: usize) {
    for n in nodes {
        match n {
            NetNode::Call { macro_name, args } => {
                let args: Vec<String> = args.iter().map(render_arg).collect();
                let _ = writeln!(s, "{:indent$}call {macro_name}({})", "", args.join(", "));
            }
            NetNode::Replicate { mode, count, index, body } => {
                let m = if *mode == ReplicateMode::Par { "par" } else { "seq" };
                let _ = writeln!(s, "{:indent$}{m} {index} < {}", "", count.render());
                dump_nodes(s, body, indent + 2);
            }
            NetNode::Chain { count, index, body } => {
                let _ = writeln!(s, "{:indent$}chain {index} < {count}", "");
                dump_nodes(s, body, indent + 2);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_types() {
        assert_eq!(refine_type(&Ty::Int, ListMode::Vector, 10).unwrap(), Construct::Item);
        assert_eq!(
            refine_type(&Ty::list(Ty::Int), ListMode::Vector, 10).unwrap(),
            Construct::VectorOfItems { n: 10 }
        );
        assert_eq!(
            refine_type(&Ty::list(Ty::Int), ListMode::Stream, 4).unwrap(),
            Construct::StreamOfItems { n: 4 }
        );
        let pair = refine_type(&Ty::Tuple(vec![Ty::UInt32, Ty::UInt32]), ListMode::Vector, 1).unwrap();
        assert_eq!(pair, Construct::TupleOfItems(vec![Construct::Item, Construct::Item]));
        assert_eq!(pair.flatten(), vec![ChanKind::Item, ChanKind::Item]);
        assert!(refine_type(&Ty::fun(vec![Ty::Int], Ty::Int), ListMode::Vector, 1).is_err());
        assert!(refine_type(&Ty::list(Ty::list(Ty::Int)), ListMode::Vector, 3).is_err());
    }

    #[test]
    fn hexpr_hardware_division() {
        let e = HExpr::Bin(Op::Div, Box::new(HExpr::Var("x".into())), Box::new(HExpr::Lit(0, Base::Dec)));
        assert_eq!(e.eval(&|_| 7), u32::MAX);
    }
}
