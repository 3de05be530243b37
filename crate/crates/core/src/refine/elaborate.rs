//! Flattens a process network into concrete processes over concrete channels.

use std::collections::HashMap;

use thiserror::Error;

use super::net::*;
use super::RefineError;

pub type ChanId = usize;

const MAX_NESTING: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ElabError(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChanInfo {
    /// Scope path, declared name and element index, e.g. `main/vector0[3]`.
    pub name: String,
}

/// One bus, or one word of a vector bus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusRef {
    pub name: String,
    pub index: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Proc {
    Leaf {
        label: String,
        inputs: Vec<ChanId>,
        reads: Vec<String>,
        lets: Vec<(String, HExpr)>,
        outputs: Vec<ChanId>,
        writes: Vec<HExpr>,
    },
    Produce {
        label: String,
        bus: BusRef,
        out: ChanId,
    },
    Store {
        label: String,
        input: ChanId,
        bus: BusRef,
    },
    Par(Vec<Proc>),
    Seq(Vec<Proc>),
    /// Stage `index` of the unrolled recursion instantiated at `chain`.
    Stage {
        chain: String,
        index: u32,
        body: Box<Proc>,
    },
}

impl Proc {
    /// Visits every primitive process (leaf, produce, store).
    pub fn for_each_site(&self, f: &mut impl FnMut(&Proc)) {
        match self {
            Proc::Par(ps) | Proc::Seq(ps) => ps.iter().for_each(|p| p.for_each_site(f)),
            Proc::Stage { body, .. } => body.for_each_site(f),
            p => f(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elaborated {
    pub root: Proc,
    pub channels: Vec<ChanInfo>,
}

#[derive(Debug, Clone)]
enum Binding {
    Chan(ChanId),
    Vector(Vec<ChanId>),
    Count(u32),
    Func(String),
    Bus(BusRef),
}

#[derive(Clone, Default)]
struct Env {
    names: HashMap<String, Binding>,
    indices: HashMap<String, u32>,
}

struct Elab<'n> {
    net: &'n ProcessNet,
    channels: Vec<ChanInfo>,
}

fn err<T>(msg: impl Into<String>) -> Result<T, ElabError> {
    Err(ElabError(msg.into()))
}

impl<'n> Elab<'n> {
    fn count(&self, c: &Count, env: &Env) -> Result<u32, ElabError> {
        match c {
            Count::Lit(v) => Ok(*v),
            Count::Param { name, plus } => match env.names.get(name) {
                Some(Binding::Count(v)) => Ok(v + plus),
                _ => err(format!("`{name}` is not a count")),
            },
        }
    }

    fn index(&self, i: &Index, env: &Env) -> Result<u32, ElabError> {
        match i {
            Index::Lit(v) => Ok(*v),
            Index::Var { name, plus } => match env.indices.get(name) {
                Some(v) => Ok(v + plus),
                None => err(format!("undeclared index `{name}`")),
            },
            Index::Count(c) => self.count(c, env),
        }
    }

    fn declare(&mut self, scope: &str, d: &ChannelDecl, env: &mut Env) -> Result<(), ElabError> {
        let b = match (d.kind, &d.len) {
            (ChanKind::Vector, Some(len)) => {
                let len = self.count(len, env)?;
                Binding::Vector(
                    (0..len)
                        .map(|i| self.fresh(format!("{scope}/{}[{i}]", d.name)))
                        .collect(),
                )
            }
            (ChanKind::Vector, None) => return err(format!("vector `{}` has no length", d.name)),
            _ => Binding::Chan(self.fresh(format!("{scope}/{}", d.name))),
        };
        env.names.insert(d.name.clone(), b);
        Ok(())
    }

    fn fresh(&mut self, name: String) -> ChanId {
        self.channels.push(ChanInfo { name });
        self.channels.len() - 1
    }

    fn chan(&self, r: &ChanRef, env: &Env) -> Result<Binding, ElabError> {
        match r {
            ChanRef::Name(n) => env
                .names
                .get(n)
                .cloned()
                .ok_or_else(|| ElabError(format!("undeclared channel `{n}`"))),
            ChanRef::Elem { vector, index } => {
                let i = self.index(index, env)?;
                match env.names.get(vector) {
                    Some(Binding::Vector(v)) => v
                        .get(i as usize)
                        .map(|&c| Binding::Chan(c))
                        .ok_or_else(|| ElabError(format!("index {i} is outside `{vector}` of {} elements", v.len()))),
                    Some(_) => err(format!("`{vector}` is not a vector")),
                    None => err(format!("undeclared channel `{vector}`")),
                }
            }
        }
    }

    fn arg(&self, a: &Arg, env: &Env) -> Result<Binding, ElabError> {
        match a {
            Arg::Chan(r) => self.chan(r, env),
            Arg::Count(c) => Ok(Binding::Count(self.count(c, env)?)),
            Arg::Func(f) => Ok(Binding::Func(match env.names.get(f) {
                Some(Binding::Func(g)) => g.clone(),
                _ => f.clone(),
            })),
            Arg::Bus { name, index } => {
                let base = match env.names.get(name) {
                    Some(Binding::Bus(b)) => b.clone(),
                    Some(_) => return err(format!("`{name}` is not a bus")),
                    None => BusRef {
                        name: name.clone(),
                        index: None,
                    },
                };
                let index = match index {
                    None => base.index,
                    Some(i) => match base.index {
                        Some(_) => return err(format!("bus `{name}` indexed twice")),
                        None => Some(self.index(i, env)?),
                    },
                };
                if !self.net.inputs.iter().chain(&self.net.outputs).any(|b| b.name == base.name) {
                    return err(format!("undeclared bus `{}`", base.name));
                }
                Ok(Binding::Bus(BusRef { name: base.name, index }))
            }
        }
    }

    fn nodes(&mut self, scope: &str, nodes: &[NetNode], env: &Env, depth: usize) -> Result<Vec<Proc>, ElabError> {
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut out = Vec::new();
        for n in nodes {
            out.push(self.node(scope, n, env, depth, &mut seen)?);
        }
        Ok(out)
    }

    fn node(
        &mut self,
        scope: &str,
        n: &NetNode,
        env: &Env,
        depth: usize,
        seen: &mut HashMap<String, usize>,
    ) -> Result<Proc, ElabError> {
        match n {
            NetNode::Call { macro_name, args } => {
                let target = match env.names.get(macro_name) {
                    Some(Binding::Func(f)) => f.clone(),
                    _ => macro_name.clone(),
                };
                let k = seen.entry(target.clone()).or_insert(0);
                *k += 1;
                let label = if *k == 1 {
                    format!("{scope}/{target}")
                } else {
                    format!("{scope}/{target}#{k}")
                };
                let bound = args.iter().map(|a| self.arg(a, env)).collect::<Result<Vec<_>, _>>()?;
                self.call(&label, &target, bound, depth + 1)
            }
            NetNode::Replicate { mode, count, index, body } => {
                let count = self.count(count, env)?;
                let mut iters = Vec::new();
                for i in 0..count {
                    let mut inner = env.clone();
                    inner.indices.insert(index.clone(), i);
                    let sub = match mode {
                        ReplicateMode::Par => format!("{scope}[{index}={i}]"),
                        ReplicateMode::Seq => scope.to_string(),
                    };
                    let mut seen_iter = seen.clone();
                    let ps = body
                        .iter()
                        .map(|b| self.node(&sub, b, &inner, depth, &mut seen_iter))
                        .collect::<Result<Vec<_>, _>>()?;
                    if i + 1 == count {
                        *seen = seen_iter;
                    }
                    iters.push(Proc::Par(ps));
                }
                Ok(match mode {
                    ReplicateMode::Par => Proc::Par(iters),
                    ReplicateMode::Seq => Proc::Seq(iters),
                })
            }
            NetNode::Chain { count, index, body } => {
                let chain = scope.to_string();
                let mut stages = Vec::new();
                for i in 0..*count {
                    let mut inner = env.clone();
                    inner.indices.insert(index.clone(), i);
                    let sub = format!("{scope}[{index}={i}]");
                    let ps = self.nodes(&sub, body, &inner, depth)?;
                    stages.push(Proc::Stage {
                        chain: chain.clone(),
                        index: i,
                        body: Box::new(Proc::Par(ps)),
                    });
                }
                Ok(Proc::Par(stages))
            }
        }
    }

    fn call(&mut self, label: &str, name: &str, args: Vec<Binding>, depth: usize) -> Result<Proc, ElabError> {
        if depth > MAX_NESTING {
            return err(format!("macro nesting deeper than {MAX_NESTING} at `{label}`"));
        }
        let Some(m) = self.net.macro_def(name) else {
            return err(format!("undeclared macro `{name}`"));
        };
        if m.params.len() != args.len() {
            return err(format!("`{name}` takes {} arguments, {} given", m.params.len(), args.len()));
        }
        let mut env = Env::default();
        for (p, a) in m.params.iter().zip(args) {
            let ok = matches!(
                (p.role, &a),
                (Role::In(ChanKind::Vector) | Role::Out(ChanKind::Vector), Binding::Vector(_))
                    | (Role::In(ChanKind::Item | ChanKind::Stream) | Role::Out(ChanKind::Item | ChanKind::Stream), Binding::Chan(_))
                    | (Role::Count, Binding::Count(_))
                    | (Role::Function, Binding::Func(_))
                    | (Role::BusValue | Role::BusIn | Role::BusOut, Binding::Bus(_))
            );
            if !ok {
                return err(format!("argument `{}` of `{name}` at `{label}` has the wrong kind", p.name));
            }
            env.names.insert(p.name.clone(), a);
        }
        let chan_of = |p: &Param| match env.names.get(&p.name) {
            Some(Binding::Chan(c)) => *c,
            _ => unreachable!("checked kinds"),
        };
        let bus_of = |role: Role| {
            m.params.iter().find(|p| p.role == role).and_then(|p| match env.names.get(&p.name) {
                Some(Binding::Bus(b)) => Some(b.clone()),
                _ => None,
            })
        };
        match &m.body {
            MacroBody::Leaf(l) => Ok(Proc::Leaf {
                label: label.to_string(),
                inputs: m.inputs().map(chan_of).collect(),
                reads: l.reads.clone(),
                lets: l.lets.clone(),
                outputs: m.outputs().map(chan_of).collect(),
                writes: l.writes.clone(),
            }),
            MacroBody::Primitive(Primitive::Produce) => Ok(Proc::Produce {
                label: label.to_string(),
                bus: bus_of(Role::BusValue).ok_or_else(|| ElabError(format!("`{name}` has no bus")))?,
                out: m.outputs().map(chan_of).next().ok_or_else(|| ElabError(format!("`{name}` has no output")))?,
            }),
            MacroBody::Primitive(Primitive::Store) => Ok(Proc::Store {
                label: label.to_string(),
                input: m.inputs().map(chan_of).next().ok_or_else(|| ElabError(format!("`{name}` has no input")))?,
                bus: bus_of(Role::BusOut).ok_or_else(|| ElabError(format!("`{name}` has no bus")))?,
            }),
            MacroBody::Network { locals, nodes } => {
                for d in locals {
                    self.declare(label, d, &mut env)?;
                }
                Ok(Proc::Par(self.nodes(label, nodes, &env, depth)?))
            }
        }
    }
}

pub fn elaborate(net: &ProcessNet) -> Result<Elaborated, ElabError> {
    let mut e = Elab { net, channels: vec![] };
    let mut env = Env::default();
    for d in &net.channels {
        e.declare("main", d, &mut env)?;
    }
    let procs = e.nodes("main", &net.main, &env, 0)?;
    Ok(Elaborated {
        root: Proc::Par(procs),
        channels: e.channels,
    })
}

/// Writer and reader sites per channel; sequential iterations share a site.
pub fn channel_sites(el: &Elaborated) -> Vec<(Vec<String>, Vec<String>)> {
    let mut sites: Vec<(Vec<String>, Vec<String>)> = vec![(vec![], vec![]); el.channels.len()];
    let add = |list: &mut Vec<String>, label: &str| {
        if !list.iter().any(|l| l == label) {
            list.push(label.to_string());
        }
    };
    el.root.for_each_site(&mut |p| match p {
        Proc::Leaf { label, inputs, outputs, .. } => {
            for &c in inputs {
                add(&mut sites[c].1, label);
            }
            for &c in outputs {
                add(&mut sites[c].0, label);
            }
        }
        Proc::Produce { label, out, .. } => add(&mut sites[*out].0, label),
        Proc::Store { label, input, .. } => add(&mut sites[*input].1, label),
        _ => {}
    });
    sites
}

/// Every channel instance must have exactly one writer and one reader.
pub fn check_linearity(net: &ProcessNet) -> Result<(), RefineError> {
    let el = elaborate(net).map_err(|e| RefineError::Unsupported(format!("malformed network: {e}")))?;
    for (c, (w, r)) in channel_sites(&el).iter().enumerate() {
        if w.len() != 1 || r.len() != 1 {
            return Err(RefineError::Linearity {
                channel: el.channels[c].name.clone(),
                writers: w.len(),
                readers: r.len(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::library::library_macro;
    use super::*;

    fn item(name: &str) -> ChannelDecl {
        ChannelDecl {
            name: name.into(),
            kind: ChanKind::Item,
            len: None,
        }
    }

    fn bus(name: &str) -> BusDecl {
        BusDecl {
            name: name.into(),
            len: None,
        }
    }

    fn relay_net(main: Vec<NetNode>, channels: Vec<ChannelDecl>) -> ProcessNet {
        ProcessNet {
            entry: "t".into(),
            macros: ["PRODUCE", "STORE", "RELAY", "VPRODUCE", "VSTORE"]
                .iter()
                .map(|n| library_macro(n).unwrap())
                .collect(),
            channels,
            main,
            inputs: vec![bus("INPUT0")],
            outputs: vec![bus("OUTPUT0")],
            fixed_params: vec![],
            width: WIDTH,
        }
    }

    fn bus_arg(n: &str) -> Arg {
        Arg::Bus {
            name: n.into(),
            index: None,
        }
    }

    #[test]
    fn relay_chain_is_linear_and_labelled() {
        let net = relay_net(
            vec![
                NetNode::call("PRODUCE", vec![bus_arg("INPUT0"), Arg::chan("a")]),
                NetNode::call("RELAY", vec![Arg::chan("a"), Arg::chan("b")]),
                NetNode::call("STORE", vec![Arg::chan("b"), bus_arg("OUTPUT0")]),
            ],
            vec![item("a"), item("b")],
        );
        check_linearity(&net).unwrap();
        let el = elaborate(&net).unwrap();
        let names: Vec<_> = el.channels.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["main/a", "main/b"]);
        let mut labels = vec![];
        el.root.for_each_site(&mut |p| {
            if let Proc::Leaf { label, .. } = p {
                labels.push(label.clone())
            }
        });
        assert_eq!(labels, ["main/RELAY"]);
    }

    #[test]
    fn double_reader_breaks_linearity() {
        let net = relay_net(
            vec![
                NetNode::call("PRODUCE", vec![bus_arg("INPUT0"), Arg::chan("a")]),
                NetNode::call("RELAY", vec![Arg::chan("a"), Arg::chan("b")]),
                NetNode::call("STORE", vec![Arg::chan("a"), bus_arg("OUTPUT0")]),
            ],
            vec![item("a"), item("b")],
        );
        match check_linearity(&net) {
            Err(RefineError::Linearity { channel, writers, readers }) => {
                assert_eq!((channel.as_str(), writers, readers), ("main/a", 1, 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vectors_expand_per_element() {
        let mut net = relay_net(
            vec![
                NetNode::call("VPRODUCE", vec![bus_arg("INPUT0"), Arg::chan("v"), Arg::Count(Count::Lit(3))]),
                NetNode::call("VSTORE", vec![Arg::chan("v"), bus_arg("OUTPUT0"), Arg::Count(Count::Lit(3))]),
            ],
            vec![ChannelDecl {
                name: "v".into(),
                kind: ChanKind::Vector,
                len: Some(Count::Lit(3)),
            }],
        );
        net.inputs[0].len = Some(3);
        net.outputs[0].len = Some(3);
        check_linearity(&net).unwrap();
        let el = elaborate(&net).unwrap();
        assert_eq!(el.channels.len(), 3);
        let mut buses = vec![];
        el.root.for_each_site(&mut |p| {
            if let Proc::Produce { label, bus, .. } = p {
                buses.push((label.clone(), bus.index));
            }
        });
        assert_eq!(buses[2], ("main/VPRODUCE[c=2]/PRODUCE".to_string(), Some(2)));
    }

    #[test]
    fn undeclared_names_are_structural_errors() {
        let net = relay_net(vec![NetNode::call("RELAY", vec![Arg::chan("a"), Arg::chan("zz")])], vec![item("a")]);
        assert!(elaborate(&net).unwrap_err().0.contains("zz"));
        let net = relay_net(vec![NetNode::call("NOPE", vec![])], vec![]);
        assert!(elaborate(&net).is_err());
    }
}
