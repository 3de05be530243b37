use super::*;
use crate::refine::library::library_macro;
use crate::refine::*;

fn bus(name: &str, len: Option<u32>) -> BusDecl {
    BusDecl { name: name.into(), len }
}

fn item(name: &str) -> ChannelDecl {
    ChannelDecl {
        name: name.into(),
        kind: ChanKind::Item,
        len: None,
    }
}

fn vector(name: &str, n: u32) -> ChannelDecl {
    ChannelDecl {
        name: name.into(),
        kind: ChanKind::Vector,
        len: Some(Count::Lit(n)),
    }
}

fn net(main: Vec<NetNode>, channels: Vec<ChannelDecl>, inputs: Vec<BusDecl>, outputs: Vec<BusDecl>) -> ProcessNet {
    ProcessNet {
        entry: "t".into(),
        macros: ["PRODUCE", "STORE", "RELAY", "VPRODUCE", "VSTORE", "VMAP", "FORK2"]
            .iter()
            .map(|n| library_macro(n).unwrap())
            .chain([add3()])
            .collect(),
        channels,
        main,
        inputs,
        outputs,
        fixed_params: vec![],
        width: WIDTH,
    }
}

fn add3() -> MacroDef {
    MacroDef {
        name: "add3".into(),
        params: vec![
            Param {
                name: "itemIn".into(),
                role: Role::In(ChanKind::Item),
            },
            Param {
                name: "itemOut".into(),
                role: Role::Out(ChanKind::Item),
            },
        ],
        body: MacroBody::Leaf(LeafBody {
            reads: vec!["x".into()],
            lets: vec![],
            writes: vec![HExpr::Bin(
                crate::semantics::Op::Add,
                Box::new(HExpr::Var("x".into())),
                Box::new(HExpr::Lit(3, crate::frontend::Base::Dec)),
            )],
        }),
        library: false,
    }
}

fn b(name: &str) -> Arg {
    Arg::Bus {
        name: name.into(),
        index: None,
    }
}

fn call(name: &str, args: &[&str]) -> NetNode {
    NetNode::call(name, args.iter().map(|a| Arg::chan(*a)).collect())
}

fn words(pairs: &[(&str, Value)]) -> IndexMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// PRODUCE, `relays` RELAYs and a STORE in a line, on channels `p0..`.
fn relay_line(prefix: &str, relays: usize, input: &str, output: &str) -> (Vec<NetNode>, Vec<ChannelDecl>) {
    let chans: Vec<String> = (0..=relays).map(|i| format!("{prefix}{i}")).collect();
    let mut nodes = vec![NetNode::call("PRODUCE", vec![b(input), Arg::chan(chans[0].clone())])];
    for i in 0..relays {
        nodes.push(call("RELAY", &[&chans[i], &chans[i + 1]]));
    }
    nodes.push(NetNode::call("STORE", vec![Arg::chan(chans[relays].clone()), b(output)]));
    (nodes, chans.iter().map(|c| item(c)).collect())
}

fn run(n: &ProcessNet, inputs: &IndexMap<String, Value>) -> SimResult {
    simulate(n, inputs, &SimOptions::default()).unwrap()
}

#[test]
fn add3_item_pipeline() {
    let n = net(
        vec![
            NetNode::call("PRODUCE", vec![b("INPUT0"), Arg::chan("a")]),
            call("add3", &["a", "b"]),
            NetNode::call("STORE", vec![Arg::chan("b"), b("OUTPUT0")]),
        ],
        vec![item("a"), item("b")],
        vec![bus("INPUT0", None)],
        vec![bus("OUTPUT0", None)],
    );
    let r = run(&n, &words(&[("INPUT0", Value::Word(5))]));
    assert_eq!(r.status, Status::Completed);
    assert_eq!(r.outputs["OUTPUT0"], Value::Word(8));
    assert_eq!(r.cycles, 2);
    let again = run(&n, &words(&[("INPUT0", Value::Word(5))]));
    assert_eq!(again.cycles, r.cycles);
}

#[test]
fn trace_lines_name_process_channel_and_value() {
    let (nodes, chans) = relay_line("p", 1, "INPUT0", "OUTPUT0");
    let n = net(nodes, chans, vec![bus("INPUT0", None)], vec![bus("OUTPUT0", None)]);
    let opts = SimOptions {
        trace: true,
        ..SimOptions::default()
    };
    let r = simulate(&n, &words(&[("INPUT0", Value::Word(0xAB))]), &opts).unwrap();
    let text = render_trace(&r);
    assert_eq!(
        text,
        "cycle 0: main/PRODUCE send main/p0 0x000000AB\n\
         cycle 0: main/RELAY recv main/p0 0x000000AB\n\
         cycle 1: main/RELAY send main/p1 0x000000AB\n\
         cycle 1: main/STORE recv main/p1 0x000000AB\n"
    );
}

#[test]
fn par_cycles_are_the_maximum() {
    let (a, ca) = relay_line("a", 1, "INPUT0", "OUTPUT0");
    let (bn, cb) = relay_line("b", 3, "INPUT1", "OUTPUT1");
    let ins = || vec![bus("INPUT0", None), bus("INPUT1", None)];
    let outs = || vec![bus("OUTPUT0", None), bus("OUTPUT1", None)];
    let input = words(&[("INPUT0", Value::Word(1)), ("INPUT1", Value::Word(2))]);
    let only_a = run(&net(a.clone(), ca.clone(), ins(), vec![bus("OUTPUT0", None)]), &input).cycles;
    let only_b = run(&net(bn.clone(), cb.clone(), ins(), vec![bus("OUTPUT1", None)]), &input).cycles;
    let both = run(&net([a, bn].concat(), [ca, cb].concat(), ins(), outs()), &input);
    assert_eq!(both.status, Status::Completed);
    assert_eq!((only_a, only_b), (2, 4));
    assert_eq!(both.cycles, only_a.max(only_b));
}

fn replicated_line(mode: ReplicateMode, iters: u32) -> ProcessNet {
    let c = |v: &str| Arg::Chan(ChanRef::elem(v, Index::Var { name: "c".into(), plus: 0 }));
    let bus_c = |n: &str| Arg::Bus {
        name: n.into(),
        index: Some(Index::Var { name: "c".into(), plus: 0 }),
    };
    net(
        vec![NetNode::Replicate {
            mode,
            count: Count::Lit(iters),
            index: "c".into(),
            body: vec![
                NetNode::call("PRODUCE", vec![bus_c("INPUT0"), c("v")]),
                NetNode::call("RELAY", vec![c("v"), c("w")]),
                NetNode::call("STORE", vec![c("w"), bus_c("OUTPUT0")]),
            ],
        }],
        vec![vector("v", iters), vector("w", iters)],
        vec![bus("INPUT0", Some(iters))],
        vec![bus("OUTPUT0", Some(iters))],
    )
}

#[test]
fn seq_cycles_add_up() {
    let input = words(&[("INPUT0", Value::words(&[4, 5, 6]))]);
    let one = run(&replicated_line(ReplicateMode::Seq, 1), &words(&[("INPUT0", Value::words(&[4]))]));
    let seq = run(&replicated_line(ReplicateMode::Seq, 3), &input);
    let par = run(&replicated_line(ReplicateMode::Par, 3), &input);
    assert_eq!(seq.outputs["OUTPUT0"], Value::words(&[4, 5, 6]));
    assert_eq!(par.outputs["OUTPUT0"], Value::words(&[4, 5, 6]));
    assert_eq!(seq.cycles, 3 * one.cycles);
    assert_eq!(par.cycles, one.cycles);
}

fn vmap_net(n: u32) -> ProcessNet {
    let count = Arg::Count(Count::Lit(n));
    net(
        vec![
            NetNode::call("VPRODUCE", vec![b("INPUT0"), Arg::chan("v0"), count.clone()]),
            NetNode::call("VMAP", vec![Arg::chan("v0"), Arg::chan("v1"), count.clone(), Arg::Func("add3".into())]),
            NetNode::call("VSTORE", vec![Arg::chan("v1"), b("OUTPUT0"), count]),
        ],
        vec![vector("v0", n), vector("v1", n)],
        vec![bus("INPUT0", Some(n))],
        vec![bus("OUTPUT0", Some(n))],
    )
}

#[test]
fn vmap_cycles_do_not_depend_on_length() {
    let small: Vec<u32> = (0..5).collect();
    let large: Vec<u32> = (0..50).collect();
    let r5 = run(&vmap_net(5), &words(&[("INPUT0", Value::words(&small))]));
    let r50 = run(&vmap_net(50), &words(&[("INPUT0", Value::words(&large))]));
    assert_eq!(r5.outputs["OUTPUT0"], Value::words(&[3, 4, 5, 6, 7]));
    assert_eq!(r50.status, Status::Completed);
    assert_eq!(r5.cycles, r50.cycles);
}

#[test]
fn store_without_producer_deadlocks() {
    let n = net(
        vec![NetNode::call("STORE", vec![Arg::chan("a"), b("OUTPUT0")])],
        vec![item("a")],
        vec![],
        vec![bus("OUTPUT0", None)],
    );
    let r = run(&n, &IndexMap::new());
    assert_eq!(
        r.status,
        Status::Deadlock {
            blocked: vec!["main/STORE".into()]
        }
    );
    assert!(r.outputs.is_empty());
}

#[test]
fn timeout_is_reported() {
    let (nodes, chans) = relay_line("p", 5, "INPUT0", "OUTPUT0");
    let n = net(nodes, chans, vec![bus("INPUT0", None)], vec![bus("OUTPUT0", None)]);
    let opts = SimOptions {
        max_cycles: 3,
        ..SimOptions::default()
    };
    let r = simulate(&n, &words(&[("INPUT0", Value::Word(1))]), &opts).unwrap();
    assert_eq!(r.status, Status::Timeout);
}

#[test]
fn scheduling_order_does_not_change_outputs() {
    let n = vmap_net(7);
    let xs: Vec<u32> = (10..17).collect();
    let input = words(&[("INPUT0", Value::words(&xs))]);
    let base = run(&n, &input);
    for seed in 0..10 {
        let opts = SimOptions {
            schedule_seed: Some(seed),
            ..SimOptions::default()
        };
        let r = simulate(&n, &input, &opts).unwrap();
        assert_eq!(r.outputs, base.outputs);
        assert_eq!(r.cycles, base.cycles);
    }
}

#[test]
fn structural_errors_are_raised_before_running() {
    let n = net(vec![call("RELAY", &["a", "nowhere"])], vec![item("a")], vec![], vec![]);
    assert!(matches!(simulate(&n, &IndexMap::new(), &SimOptions::default()), Err(SimError::Structure(_))));
    let (nodes, chans) = relay_line("p", 1, "INPUT0", "OUTPUT0");
    let n = net(nodes, chans, vec![bus("INPUT0", None)], vec![bus("OUTPUT0", None)]);
    assert_eq!(
        simulate(&n, &IndexMap::new(), &SimOptions::default()),
        Err(SimError::MissingInput("INPUT0".into()))
    );
}

#[test]
fn leaves_with_unbound_locals_are_rejected() {
    let mut n = vmap_net(2);
    if let Some(m) = n.macros.iter_mut().find(|m| m.name == "add3") {
        m.body = MacroBody::Leaf(LeafBody {
            reads: vec!["x".into()],
            lets: vec![],
            writes: vec![HExpr::Var("q".into())],
        });
    }
    let r = simulate(&n, &words(&[("INPUT0", Value::words(&[1, 2]))]), &SimOptions::default());
    assert!(matches!(r, Err(SimError::BadLeaf { .. })));
}

#[test]
fn cycle_report_lists_totals() {
    let (nodes, chans) = relay_line("p", 2, "INPUT0", "OUTPUT0");
    let n = net(nodes, chans, vec![bus("INPUT0", None)], vec![bus("OUTPUT0", None)]);
    let r = run(&n, &words(&[("INPUT0", Value::Word(1))]));
    assert_eq!(cycle_report(&r), "status: completed\ncycles: 3\n");
}
