//! Fixed library macros: produce/store, plumbing and list skeletons.

use super::net::*;

fn p(name: &str, role: Role) -> Param {
    Param {
        name: name.to_string(),
        role,
    }
}

fn elem(v: &str, plus: u32) -> Arg {
    Arg::Chan(ChanRef::elem(
        v,
        Index::Var {
            name: "c".into(),
            plus,
        },
    ))
}

fn each(mode: ReplicateMode, body: Vec<NetNode>) -> NetNode {
    NetNode::Replicate {
        mode,
        count: Count::param("n"),
        index: "c".into(),
        body,
    }
}

fn network(name: &str, params: Vec<Param>, locals: Vec<ChannelDecl>, nodes: Vec<NetNode>) -> MacroDef {
    MacroDef {
        name: name.to_string(),
        params,
        body: MacroBody::Network { locals, nodes },
        library: true,
    }
}

fn leaf(name: &str, outputs: usize, writes: Vec<HExpr>) -> MacroDef {
    let mut params = vec![p("itemIn", Role::In(ChanKind::Item))];
    match outputs {
        0 => {}
        1 => params.push(p("itemOut", Role::Out(ChanKind::Item))),
        k => params.extend((1..=k).map(|i| p(&format!("itemOut{i}"), Role::Out(ChanKind::Item)))),
    }
    MacroDef {
        name: name.to_string(),
        params,
        body: MacroBody::Leaf(LeafBody {
            reads: vec!["x".into()],
            lets: vec![],
            writes,
        }),
        library: true,
    }
}

fn bus_elem(bus: &str) -> Arg {
    Arg::Bus {
        name: bus.into(),
        index: Some(Index::Var {
            name: "c".into(),
            plus: 0,
        }),
    }
}

/// Name of the fan-out macro with `k` outputs.
pub fn fork_name(k: usize) -> String {
    format!("FORK{k}")
}

/// Library macro by name, if `name` is one.
pub fn library_macro(name: &str) -> Option<MacroDef> {
    use ChanKind::*;
    use ReplicateMode::*;
    let x = || HExpr::Var("x".into());
    Some(match name {
        "PRODUCE" => MacroDef {
            name: name.into(),
            params: vec![p("value", Role::BusValue), p("itemOut", Role::Out(Item))],
            body: MacroBody::Primitive(Primitive::Produce),
            library: true,
        },
        "STORE" => MacroDef {
            name: name.into(),
            params: vec![p("itemIn", Role::In(Item)), p("out", Role::BusOut)],
            body: MacroBody::Primitive(Primitive::Store),
            library: true,
        },
        "VPRODUCE" | "SPRODUCE" => {
            let (kind, mode, out) = if name == "VPRODUCE" { (Vector, Par, elem("vectorOut", 0)) } else { (Stream, Seq, Arg::chan("streamOut")) };
            let out_name = if kind == Vector { "vectorOut" } else { "streamOut" };
            network(
                name,
                vec![p("bus", Role::BusIn), p(out_name, Role::Out(kind)), p("n", Role::Count)],
                vec![],
                vec![each(mode, vec![NetNode::call("PRODUCE", vec![bus_elem("bus"), out])])],
            )
        }
        "VSTORE" | "SSTORE" => {
            let (kind, mode, inp) = if name == "VSTORE" { (Vector, Par, elem("vectorIn", 0)) } else { (Stream, Seq, Arg::chan("streamIn")) };
            let in_name = if kind == Vector { "vectorIn" } else { "streamIn" };
            network(
                name,
                vec![p(in_name, Role::In(kind)), p("bus", Role::BusOut), p("n", Role::Count)],
                vec![],
                vec![each(mode, vec![NetNode::call("STORE", vec![inp, bus_elem("bus")])])],
            )
        }
        "RELAY" => leaf(name, 1, vec![x()]),
        "SINK" => leaf(name, 0, vec![]),
        "VMAP" => network(
            name,
            vec![
                p("vectorIn", Role::In(Vector)),
                p("vectorOut", Role::Out(Vector)),
                p("n", Role::Count),
                p("F", Role::Function),
            ],
            vec![],
            vec![each(Par, vec![NetNode::call("F", vec![elem("vectorIn", 0), elem("vectorOut", 0)])])],
        ),
        "VZIPWITH" => network(
            name,
            vec![
                p("vectorIn1", Role::In(Vector)),
                p("vectorIn2", Role::In(Vector)),
                p("vectorOut", Role::Out(Vector)),
                p("n", Role::Count),
                p("F", Role::Function),
            ],
            vec![],
            vec![each(
                Par,
                vec![NetNode::call("F", vec![elem("vectorIn1", 0), elem("vectorIn2", 0), elem("vectorOut", 0)])],
            )],
        ),
        "SMAP" => network(
            name,
            vec![
                p("streamIn", Role::In(Stream)),
                p("streamOut", Role::Out(Stream)),
                p("n", Role::Count),
                p("F", Role::Function),
            ],
            vec![],
            vec![each(Seq, vec![NetNode::call("F", vec![Arg::chan("streamIn"), Arg::chan("streamOut")])])],
        ),
        "SZIPWITH" => network(
            name,
            vec![
                p("streamIn1", Role::In(Stream)),
                p("streamIn2", Role::In(Stream)),
                p("streamOut", Role::Out(Stream)),
                p("n", Role::Count),
                p("F", Role::Function),
            ],
            vec![],
            vec![each(
                Seq,
                vec![NetNode::call("F", vec![Arg::chan("streamIn1"), Arg::chan("streamIn2"), Arg::chan("streamOut")])],
            )],
        ),
        "S2V" => network(
            name,
            vec![p("streamIn", Role::In(Stream)), p("vectorOut", Role::Out(Vector)), p("n", Role::Count)],
            vec![],
            vec![each(Seq, vec![NetNode::call("RELAY", vec![Arg::chan("streamIn"), elem("vectorOut", 0)])])],
        ),
        "SFOLDR" => network(
            name,
            vec![
                p("vectorIn", Role::In(Vector)),
                p("itemInit", Role::In(Item)),
                p("itemOut", Role::Out(Item)),
                p("n", Role::Count),
                p("F", Role::Function),
            ],
            vec![ChannelDecl {
                name: "acc".into(),
                kind: Vector,
                len: Some(Count::Param {
                    name: "n".into(),
                    plus: 1,
                }),
            }],
            vec![
                NetNode::call(
                    "RELAY",
                    vec![Arg::chan("itemInit"), Arg::Chan(ChanRef::elem("acc", Index::Count(Count::param("n"))))],
                ),
                each(Par, vec![NetNode::call("F", vec![elem("vectorIn", 0), elem("acc", 1), elem("acc", 0)])]),
                NetNode::call("RELAY", vec![Arg::Chan(ChanRef::elem("acc", Index::Lit(0))), Arg::chan("itemOut")]),
            ],
        ),
        _ => {
            let k: usize = name.strip_prefix("FORK")?.parse().ok().filter(|&k| k >= 2)?;
            leaf(name, k, vec![x(); k])
        }
    })
}

/// Library macros `m` depends on, directly.
pub fn library_deps(m: &MacroDef) -> Vec<String> {
    m.callees().into_iter().filter(|c| library_macro(c).is_some()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_and_unknown() {
        for n in [
            "PRODUCE", "STORE", "VPRODUCE", "VSTORE", "SPRODUCE", "SSTORE", "RELAY", "SINK", "VMAP", "VZIPWITH", "SMAP",
            "SZIPWITH", "S2V", "SFOLDR", "FORK2", "FORK5",
        ] {
            assert_eq!(library_macro(n).unwrap().name, n);
        }
        assert!(library_macro("FORK1").is_none());
        assert!(library_macro("add3").is_none());
    }

    #[test]
    fn fork_writes_every_output() {
        let m = library_macro("FORK3").unwrap();
        assert_eq!(m.outputs().count(), 3);
        let MacroBody::Leaf(l) = &m.body else { panic!() };
        assert_eq!(l.writes.len(), 3);
    }

    #[test]
    fn skeleton_param_order() {
        let names: Vec<_> = library_macro("VZIPWITH").unwrap().params.into_iter().map(|p| p.name).collect();
        assert_eq!(names, ["vectorIn1", "vectorIn2", "vectorOut", "n", "F"]);
        assert_eq!(library_deps(&library_macro("SFOLDR").unwrap()), ["RELAY"]);
    }
}
