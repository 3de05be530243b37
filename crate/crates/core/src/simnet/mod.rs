//! Cycle-counting simulator for process networks under synchronous
//! (rendezvous) channel semantics.
//!
//! Each cycle first settles control flow at no cost, then commits every
//! pending assignment and every matched send/receive pair at once. An
//! assignment or a transfer costs one cycle; expressions are combinational.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::Value;
use crate::refine::elaborate::{elaborate, BusRef, ChanId, ElabError, Proc};
use crate::refine::{HExpr, ProcessNet};

pub const DEFAULT_MAX_CYCLES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("malformed network: {0}")]
    Structure(#[from] ElabError),
    #[error("leaf `{label}`: {message}")]
    BadLeaf { label: String, message: String },
    #[error("no value for input bus {0}")]
    MissingInput(String),
    #[error("input bus {bus}: {message}")]
    BadInput { bus: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    pub max_cycles: u64,
    pub trace: bool,
    /// Shuffles the order processes are considered in each cycle.
    pub schedule_seed: Option<u64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_cycles: DEFAULT_MAX_CYCLES,
            trace: false,
            schedule_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Completed,
    Deadlock { blocked: Vec<String> },
    Timeout,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Completed => write!(f, "completed"),
            Status::Deadlock { blocked } if blocked.is_empty() => {
                write!(f, "deadlock: no process left to complete the outputs")
            }
            Status::Deadlock { blocked } => write!(f, "deadlock: blocked {}", blocked.join(", ")),
            Status::Timeout => write!(f, "timeout"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Send,
    Recv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub process: String,
    pub kind: EventKind,
    pub channel: String,
    pub value: u32,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::Send => "send",
            EventKind::Recv => "recv",
        };
        write!(f, "cycle {}: {} {kind} {} 0x{:08X}", self.cycle, self.process, self.channel, self.value)
    }
}

/// Cycle at which one stage of an unrolled recursion finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTiming {
    pub chain: String,
    pub stage: u32,
    pub finished: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    /// Output bus values; only buses that were completely written.
    pub outputs: IndexMap<String, Value>,
    pub cycles: u64,
    pub status: Status,
    pub trace: Vec<TraceEvent>,
    pub stages: Vec<StageTiming>,
}

#[derive(Debug, Clone)]
enum Phase {
    Read(usize),
    Let(usize),
    Write { values: Vec<u32>, sent: Vec<bool> },
    Done,
}

#[derive(Debug, Clone)]
struct LeafTask {
    label: usize,
    inputs: Vec<ChanId>,
    reads: Vec<String>,
    lets: Vec<(String, HExpr)>,
    outputs: Vec<ChanId>,
    writes: Vec<HExpr>,
    env: Vec<(String, u32)>,
    phase: Phase,
}

impl LeafTask {
    fn lookup(&self, n: &str) -> u32 {
        self.env.iter().rev().find(|(k, _)| k == n).map(|(_, v)| *v).expect("validated leaf")
    }

    fn settle(&mut self) -> bool {
        loop {
            match &self.phase {
                Phase::Read(i) if *i == self.inputs.len() => self.phase = Phase::Let(0),
                Phase::Let(j) if *j == self.lets.len() => {
                    let values = self.writes.iter().map(|e| e.eval(&|n| self.lookup(n))).collect();
                    self.phase = Phase::Write {
                        values,
                        sent: vec![false; self.outputs.len()],
                    };
                }
                Phase::Write { sent, .. } if sent.iter().all(|s| *s) => self.phase = Phase::Done,
                Phase::Done => return true,
                _ => return false,
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Task {
    Leaf(LeafTask),
    Produce { label: usize, out: ChanId, value: u32, done: bool },
    Store { label: usize, input: ChanId, bus: BusRef, done: bool },
    Par(Vec<Task>),
    Seq { items: Vec<Task>, pos: usize },
    Stage { chain: usize, index: u32, body: Box<Task>, finished: Option<u64> },
}

#[derive(Debug, Clone, Copy)]
enum Want {
    Send { ch: ChanId, value: u32 },
    Recv { ch: ChanId },
    Assign,
}

impl Task {
    fn settle(&mut self, cycle: u64) -> bool {
        match self {
            Task::Leaf(l) => l.settle(),
            Task::Produce { done, .. } | Task::Store { done, .. } => *done,
            Task::Par(ps) => {
                // every branch settles, even after one is still running
                let mut all = true;
                for p in ps.iter_mut() {
                    all &= p.settle(cycle);
                }
                all
            }
            Task::Seq { items, pos } => {
                while *pos < items.len() && items[*pos].settle(cycle) {
                    *pos += 1;
                }
                *pos == items.len()
            }
            Task::Stage { body, finished, .. } => {
                let done = body.settle(cycle);
                if done && finished.is_none() {
                    *finished = Some(cycle);
                }
                done
            }
        }
    }

    fn wants(&self, out: &mut Vec<(usize, Want)>) {
        match self {
            Task::Leaf(l) => match &l.phase {
                Phase::Read(i) => out.push((l.label, Want::Recv { ch: l.inputs[*i] })),
                Phase::Let(_) => out.push((l.label, Want::Assign)),
                Phase::Write { values, sent } => {
                    for (k, s) in sent.iter().enumerate() {
                        if !s {
                            out.push((
                                l.label,
                                Want::Send {
                                    ch: l.outputs[k],
                                    value: values[k],
                                },
                            ));
                        }
                    }
                }
                Phase::Done => {}
            },
            Task::Produce { label, out: ch, value, done: false } => out.push((*label, Want::Send { ch: *ch, value: *value })),
            Task::Store { label, input, done: false, .. } => out.push((*label, Want::Recv { ch: *input })),
            Task::Produce { .. } | Task::Store { .. } => {}
            Task::Par(ps) => ps.iter().for_each(|p| p.wants(out)),
            Task::Seq { items, pos } => {
                if let Some(p) = items.get(*pos) {
                    p.wants(out);
                }
            }
            Task::Stage { body, .. } => body.wants(out),
        }
    }

    /// Applies the committed wants, visiting them in `wants` order.
    fn apply(&mut self, results: &[Option<u32>], k: &mut usize, buses: &mut Buses) {
        match self {
            Task::Leaf(l) => match &mut l.phase {
                Phase::Read(i) => {
                    if let Some(v) = results[*k] {
                        l.env.push((l.reads[*i].clone(), v));
                        *i += 1;
                    }
                    *k += 1;
                }
                Phase::Let(j) => {
                    if results[*k].is_some() {
                        let (name, e) = &l.lets[*j];
                        let v = e.eval(&|n| l.env.iter().rev().find(|(x, _)| x == n).map(|(_, v)| *v).expect("validated leaf"));
                        l.env.push((name.clone(), v));
                        *j += 1;
                    }
                    *k += 1;
                }
                Phase::Write { sent, .. } => {
                    for s in sent.iter_mut().filter(|s| !**s) {
                        if results[*k].is_some() {
                            *s = true;
                        }
                        *k += 1;
                    }
                }
                Phase::Done => {}
            },
            Task::Produce { done, .. } => {
                if !*done {
                    *done = results[*k].is_some();
                    *k += 1;
                }
            }
            Task::Store { done, bus, .. } => {
                if !*done {
                    if let Some(v) = results[*k] {
                        buses.store(bus, v);
                        *done = true;
                    }
                    *k += 1;
                }
            }
            Task::Par(ps) => ps.iter_mut().for_each(|p| p.apply(results, k, buses)),
            Task::Seq { items, pos } => {
                if let Some(p) = items.get_mut(*pos) {
                    p.apply(results, k, buses);
                }
            }
            Task::Stage { body, .. } => body.apply(results, k, buses),
        }
    }

    fn stages(&self, chains: &[String], out: &mut Vec<StageTiming>) {
        match self {
            Task::Par(ps) | Task::Seq { items: ps, .. } => ps.iter().for_each(|p| p.stages(chains, out)),
            Task::Stage { chain, index, body, finished } => {
                if let Some(c) = finished {
                    out.push(StageTiming {
                        chain: chains[*chain].clone(),
                        stage: *index,
                        finished: *c,
                    });
                }
                body.stages(chains, out);
            }
            _ => {}
        }
    }
}

struct Buses {
    slots: IndexMap<String, Vec<Option<u32>>>,
    scalar: HashMap<String, bool>,
}

impl Buses {
    fn store(&mut self, bus: &BusRef, v: u32) {
        if let Some(s) = self.slots.get_mut(&bus.name) {
            if let Some(slot) = s.get_mut(bus.index.unwrap_or(0) as usize) {
                *slot = Some(v);
            }
        }
    }

    fn complete(&self) -> bool {
        self.slots.values().all(|s| s.iter().all(Option::is_some))
    }

    fn values(&self) -> IndexMap<String, Value> {
        self.slots
            .iter()
            .filter(|(_, s)| s.iter().all(Option::is_some))
            .map(|(name, s)| {
                let words: Vec<u32> = s.iter().map(|v| v.unwrap()).collect();
                let v = if self.scalar[name] { Value::Word(words[0]) } else { Value::words(&words) };
                (name.clone(), v)
            })
            .collect()
    }
}

struct Builder<'a> {
    labels: Vec<String>,
    label_ids: HashMap<String, usize>,
    chains: Vec<String>,
    inputs: &'a HashMap<String, Vec<u32>>,
}

impl<'a> Builder<'a> {
    fn label(&mut self, l: &str) -> usize {
        if let Some(&i) = self.label_ids.get(l) {
            return i;
        }
        self.labels.push(l.to_string());
        self.label_ids.insert(l.to_string(), self.labels.len() - 1);
        self.labels.len() - 1
    }

    fn task(&mut self, p: &Proc) -> Result<Task, SimError> {
        Ok(match p {
            Proc::Leaf { label, inputs, reads, lets, outputs, writes } => {
                validate_leaf(label, inputs, reads, lets, outputs, writes)?;
                Task::Leaf(LeafTask {
                    label: self.label(label),
                    inputs: inputs.clone(),
                    reads: reads.clone(),
                    lets: lets.clone(),
                    outputs: outputs.clone(),
                    writes: writes.clone(),
                    env: Vec::new(),
                    phase: Phase::Read(0),
                })
            }
            Proc::Produce { label, bus, out } => {
                let words = self.inputs.get(&bus.name).ok_or_else(|| SimError::MissingInput(bus.name.clone()))?;
                let i = bus.index.unwrap_or(0) as usize;
                let value = *words.get(i).ok_or_else(|| SimError::BadInput {
                    bus: bus.name.clone(),
                    message: format!("word {i} read but only {} given", words.len()),
                })?;
                Task::Produce {
                    label: self.label(label),
                    out: *out,
                    value,
                    done: false,
                }
            }
            Proc::Store { label, input, bus } => Task::Store {
                label: self.label(label),
                input: *input,
                bus: bus.clone(),
                done: false,
            },
            Proc::Par(ps) => Task::Par(ps.iter().map(|p| self.task(p)).collect::<Result<_, _>>()?),
            Proc::Seq(ps) => Task::Seq {
                items: ps.iter().map(|p| self.task(p)).collect::<Result<_, _>>()?,
                pos: 0,
            },
            Proc::Stage { chain, index, body } => {
                let c = match self.chains.iter().position(|x| x == chain) {
                    Some(c) => c,
                    None => {
                        self.chains.push(chain.clone());
                        self.chains.len() - 1
                    }
                };
                Task::Stage {
                    chain: c,
                    index: *index,
                    body: Box::new(self.task(body)?),
                    finished: None,
                }
            }
        })
    }
}

fn expr_vars(e: &HExpr, out: &mut Vec<String>) {
    match e {
        HExpr::Var(n) => out.push(n.clone()),
        HExpr::Lit(..) => {}
        HExpr::Bin(_, a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        HExpr::Shift(_, a, _) => expr_vars(a, out),
        HExpr::Cond { tests, then, otherwise } => {
            for (t, _) in tests {
                expr_vars(t, out);
            }
            expr_vars(then, out);
            expr_vars(otherwise, out);
        }
    }
}

fn validate_leaf(
    label: &str,
    inputs: &[ChanId],
    reads: &[String],
    lets: &[(String, HExpr)],
    outputs: &[ChanId],
    writes: &[HExpr],
) -> Result<(), SimError> {
    let bad = |message: String| {
        Err(SimError::BadLeaf {
            label: label.to_string(),
            message,
        })
    };
    if inputs.len() != reads.len() {
        return bad(format!("{} inputs but {} reads", inputs.len(), reads.len()));
    }
    if outputs.len() != writes.len() {
        return bad(format!("{} outputs but {} writes", outputs.len(), writes.len()));
    }
    let mut bound: Vec<&str> = reads.iter().map(String::as_str).collect();
    let check = |e: &HExpr, bound: &[&str]| {
        let mut vs = Vec::new();
        expr_vars(e, &mut vs);
        vs.into_iter().find(|v| !bound.contains(&v.as_str()))
    };
    for (n, e) in lets {
        if let Some(v) = check(e, &bound) {
            return bad(format!("`{v}` is used before it is assigned"));
        }
        bound.push(n);
    }
    for e in writes {
        if let Some(v) = check(e, &bound) {
            return bad(format!("`{v}` is used before it is assigned"));
        }
    }
    Ok(())
}

/// Input bus contents as words: a word for a scalar bus, `n` words for a
/// vector bus.
fn input_words(net: &ProcessNet, inputs: &IndexMap<String, Value>) -> Result<HashMap<String, Vec<u32>>, SimError> {
    let mut out = HashMap::new();
    for b in &net.inputs {
        let v = inputs.get(&b.name).ok_or_else(|| SimError::MissingInput(b.name.clone()))?;
        let bad = |message: String| SimError::BadInput {
            bus: b.name.clone(),
            message,
        };
        let words = match (b.len, v) {
            (None, Value::Word(w)) => vec![*w],
            (Some(n), Value::List(items)) => {
                if items.len() != n as usize {
                    return Err(bad(format!("expected {n} words, got {}", items.len())));
                }
                items
                    .iter()
                    .map(|x| x.word().ok_or_else(|| bad("list elements must be words".into())))
                    .collect::<Result<_, _>>()?
            }
            (None, _) => return Err(bad("expected a word".into())),
            (Some(n), _) => return Err(bad(format!("expected a list of {n} words"))),
        };
        out.insert(b.name.clone(), words);
    }
    Ok(out)
}

pub fn simulate(net: &ProcessNet, inputs: &IndexMap<String, Value>, opts: &SimOptions) -> Result<SimResult, SimError> {
    let el = elaborate(net)?;
    let words = input_words(net, inputs)?;
    let mut b = Builder {
        labels: vec![],
        label_ids: HashMap::new(),
        chains: vec![],
        inputs: &words,
    };
    let mut root = b.task(&el.root)?;
    let mut buses = Buses {
        slots: net
            .outputs
            .iter()
            .map(|o| (o.name.clone(), vec![None; o.len.unwrap_or(1) as usize]))
            .collect(),
        scalar: net.outputs.iter().map(|o| (o.name.clone(), o.len.is_none())).collect(),
    };
    let mut rng = opts.schedule_seed.map(ChaCha8Rng::seed_from_u64);
    let mut trace = Vec::new();
    let mut cycle: u64 = 0;
    let mut wants = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    let mut sender: Vec<Option<usize>> = vec![None; el.channels.len()];
    let mut receiver: Vec<Option<usize>> = vec![None; el.channels.len()];

    let status = loop {
        if root.settle(cycle) {
            break if buses.complete() {
                Status::Completed
            } else {
                Status::Deadlock { blocked: vec![] }
            };
        }
        if cycle >= opts.max_cycles {
            break Status::Timeout;
        }
        wants.clear();
        root.wants(&mut wants);
        order.clear();
        order.extend(0..wants.len());
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        let mut results: Vec<Option<u32>> = vec![None; wants.len()];
        let mut touched = Vec::new();
        let mut progress = false;
        for &k in &order {
            match wants[k].1 {
                Want::Assign => {
                    results[k] = Some(0);
                    progress = true;
                }
                Want::Send { ch, .. } => {
                    if sender[ch].is_none() {
                        sender[ch] = Some(k);
                        touched.push(ch);
                    }
                }
                Want::Recv { ch } => {
                    if receiver[ch].is_none() {
                        receiver[ch] = Some(k);
                        touched.push(ch);
                    }
                }
            }
        }
        for &k in &order {
            let Want::Send { ch, value } = wants[k].1 else { continue };
            if sender[ch] != Some(k) {
                continue;
            }
            if let Some(r) = receiver[ch] {
                results[k] = Some(value);
                results[r] = Some(value);
                progress = true;
                if opts.trace {
                    for (who, kind) in [(k, EventKind::Send), (r, EventKind::Recv)] {
                        trace.push(TraceEvent {
                            cycle,
                            process: b.labels[wants[who].0].clone(),
                            kind,
                            channel: el.channels[ch].name.clone(),
                            value,
                        });
                    }
                }
            }
        }
        for ch in touched {
            sender[ch] = None;
            receiver[ch] = None;
        }
        if !progress {
            let mut blocked: Vec<String> = Vec::new();
            for (label, _) in &wants {
                let l = &b.labels[*label];
                if !blocked.contains(l) {
                    blocked.push(l.clone());
                }
            }
            break Status::Deadlock { blocked };
        }
        let mut k = 0;
        root.apply(&results, &mut k, &mut buses);
        debug_assert_eq!(k, wants.len());
        cycle += 1;
    };
    let mut stages = Vec::new();
    root.stages(&b.chains, &mut stages);
    Ok(SimResult {
        outputs: buses.values(),
        cycles: cycle,
        status,
        trace,
        stages,
    })
}

/// Total cycles and, for each unrolled recursion, when each stage finished.
pub fn cycle_report(r: &SimResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", r.status);
    let _ = writeln!(s, "cycles: {}", r.cycles);
    let mut chains: Vec<&str> = Vec::new();
    for t in &r.stages {
        if !chains.contains(&t.chain.as_str()) {
            chains.push(&t.chain);
        }
    }
    for c in chains {
        let _ = writeln!(s, "chain {c}:");
        let mut prev = 0;
        let mut stages: Vec<&StageTiming> = r.stages.iter().filter(|t| t.chain == c).collect();
        stages.sort_by_key(|t| t.stage);
        for t in stages {
            let _ = writeln!(s, "  stage {}: done at cycle {} (+{})", t.stage, t.finished, t.finished.saturating_sub(prev));
            prev = t.finished;
        }
    }
    s
}

/// Trace file text, one event per line.
pub fn render_trace(r: &SimResult) -> String {
    r.trace.iter().map(|e| format!("{e}\n")).collect()
}

#[cfg(test)]
mod tests;
