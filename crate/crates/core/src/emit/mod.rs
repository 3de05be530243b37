//! Handel-C source generation from a process network.

use std::ops::Range;
use std::str::FromStr;

use crate::frontend::Base;
use crate::refine::{
    render_arg, Arg, ChanKind, ChannelDecl, Count, HExpr, LeafBody, MacroBody, MacroDef, NetNode, Primitive,
    ProcessNet, ReplicateMode, Role,
};
use crate::semantics::Op;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    De270,
    De4,
    Generic,
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "de2-70" => Ok(Target::De270),
            "de4" => Ok(Target::De4),
            "generic" => Ok(Target::Generic),
            _ => Err(format!("unknown target `{s}` (expected de2-70, de4 or generic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitConfig {
    pub target: Target,
    pub clock_pin: String,
    pub reset_pin: String,
    pub include_reset: bool,
}

impl EmitConfig {
    /// Board defaults: DE2-70 uses the AD15 oscillator and L8 reset pins.
    pub fn for_target(target: Target) -> EmitConfig {
        let (clock, reset) = match target {
            Target::De270 => ("AD15", "L8"),
            // board signal names; override with the real pin locations
            Target::De4 => ("OSC_50_BANK2", "CPU_RESET_n"),
            Target::Generic => ("", ""),
        };
        EmitConfig {
            target,
            clock_pin: clock.into(),
            reset_pin: reset.into(),
            include_reset: target != Target::Generic,
        }
    }
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig::for_target(Target::De270)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Pins,
    Typedefs,
    Globals,
    Interfaces,
    LibraryMacros,
    UserMacros,
    Main,
}

/// Emitted source with the byte range of each section, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HcText {
    pub source: String,
    pub sections: Vec<(Section, Range<usize>)>,
}

impl HcText {
    pub fn section(&self, kind: Section) -> &str {
        self.sections
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, r)| &self.source[r.clone()])
            .unwrap_or("")
    }
}

const INDENT: &str = "    ";

fn op_text(op: Op) -> &'static str {
    match op {
        Op::Add => "+",
        Op::Sub => "-",
        Op::Mul => "*",
        Op::Div => "/",
        Op::And => "&",
        Op::Or => "|",
        Op::Xor => "^",
        Op::Shl => "<<",
        Op::Shr => ">>",
    }
}

fn child(e: &HExpr) -> String {
    if e.is_atom() {
        hexpr(e)
    } else {
        format!("({})", hexpr(e))
    }
}

/// Handel-C text of a leaf expression; operands that are not atoms are
/// parenthesized.
pub fn hexpr(e: &HExpr) -> String {
    match e {
        HExpr::Var(n) => n.clone(),
        HExpr::Lit(v, Base::Dec) => v.to_string(),
        HExpr::Lit(v, Base::Hex) => format!("{v:#x}"),
        HExpr::Bin(op, a, b) => format!("{}{}{}", child(a), op_text(*op), child(b)),
        HExpr::Shift(op, a, k) => format!("{}{}{k}", child(a), op_text(*op)),
        HExpr::Cond { tests, then, otherwise } => {
            let tests: Vec<String> = tests.iter().map(|(e, v)| format!("({}=={v})", child(e))).collect();
            let test = match tests.as_slice() {
                [one] => one.clone(),
                _ => format!("({})", tests.join("&&")),
            };
            format!("{test}?{}:{}", child(then), child(otherwise))
        }
    }
}

fn bits(v: u32) -> u32 {
    (32 - v.leading_zeros()).max(1)
}

fn count_text(c: &Count) -> String {
    c.render()
}

fn decl_line(d: &ChannelDecl, width: u32) -> String {
    let len = d.len.as_ref().map(count_text).unwrap_or_default();
    match d.kind {
        ChanKind::Item => format!("Item({}, unsigned {width});", d.name),
        ChanKind::Vector => format!("VectorOfItems({}, {len}, unsigned {width});", d.name),
        ChanKind::Stream => format!("StreamOfItems({}, {len}, unsigned {width});", d.name),
    }
}

struct Emitter<'n> {
    net: &'n ProcessNet,
    out: String,
}

impl<'n> Emitter<'n> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn role_of(&self, callee: &str, pos: usize) -> Option<Role> {
        self.net.macro_def(callee).and_then(|m| m.params.get(pos)).map(|p| p.role)
    }

    fn arg(&self, callee: &str, pos: usize, a: &Arg) -> String {
        match (a, self.role_of(callee, pos)) {
            (Arg::Bus { name, index: None }, Some(Role::BusValue)) => format!("{name}.value"),
            (Arg::Bus { name, index: Some(i) }, Some(Role::BusValue)) => {
                format!("({name}.value >> ({}*{})) <- {}", i.render(), self.net.width, self.net.width)
            }
            _ => render_arg(a),
        }
    }

    fn index_decls(&mut self, depth: usize, nodes: &[NetNode]) {
        let mut found: Vec<(String, Vec<Count>)> = Vec::new();
        collect_indices(nodes, &mut found);
        for (index, counts) in found {
            let text = match counts.as_slice() {
                [Count::Param { name, plus: 0 }, rest @ ..] if rest.iter().all(|c| c == &counts[0]) => {
                    format!("typeof({name}) {index};")
                }
                _ if counts.iter().all(|c| matches!(c, Count::Lit(_))) => {
                    let max = counts.iter().map(|c| if let Count::Lit(v) = c { *v } else { 0 }).max().unwrap_or(0);
                    format!("unsigned {} {index};", bits(max))
                }
                _ => format!("unsigned {} {index};", self.net.width),
            };
            self.line(depth, &text);
        }
    }

    fn nodes(&mut self, depth: usize, nodes: &[NetNode]) {
        for n in nodes {
            match n {
                NetNode::Call { macro_name, args } => {
                    let args: Vec<String> = args.iter().enumerate().map(|(i, a)| self.arg(macro_name, i, a)).collect();
                    self.line(depth, &format!("{macro_name}({});", args.join(", ")));
                }
                NetNode::Replicate { mode, count, index, body } => {
                    let kw = if *mode == ReplicateMode::Par { "par" } else { "seq" };
                    self.line(depth, &format!("{kw}({index}=0;{index}<{};{index}++){{", count_text(count)));
                    self.nodes(depth + 1, body);
                    self.line(depth, "}");
                }
                NetNode::Chain { count, index, body } => {
                    self.line(depth, &format!("par({index}=0;{index}<{count};{index}++){{"));
                    self.nodes(depth + 1, body);
                    self.line(depth, "}");
                }
            }
        }
    }

    fn leaf(&mut self, m: &MacroDef, l: &LeafBody) {
        let inputs: Vec<&str> = m.inputs().map(|p| p.name.as_str()).collect();
        let outputs: Vec<&str> = m.outputs().map(|p| p.name.as_str()).collect();
        let mut locals: Vec<&str> = l.reads.iter().map(String::as_str).collect();
        locals.extend(l.lets.iter().map(|(n, _)| n.as_str()));
        if !locals.is_empty() {
            let ty = match inputs.as_slice() {
                [] => format!("unsigned {}", self.net.width),
                [one] if l.reads.len() == 1 => format!("typeof {one}.message"),
                [first, ..] => format!("typeof ({first}.message)"),
            };
            self.line(1, &format!("{ty} {};", locals.join(", ")));
        }
        for (ch, x) in inputs.iter().zip(&l.reads) {
            self.line(1, &format!("{ch}.channel ? {x};"));
        }
        for (n, e) in &l.lets {
            self.line(1, &format!("{n} = {};", hexpr(e)));
        }
        let writes: Vec<String> = outputs
            .iter()
            .zip(&l.writes)
            .map(|(ch, e)| format!("{ch}.channel ! {};", child(e)))
            .collect();
        match writes.as_slice() {
            [] => {}
            [one] => self.line(1, one),
            many => {
                self.line(1, "par{");
                for w in many {
                    self.line(2, w);
                }
                self.line(1, "}");
            }
        }
    }

    fn macro_def(&mut self, m: &MacroDef) {
        let params: Vec<&str> = m.params.iter().map(|p| p.name.as_str()).collect();
        self.line(0, &format!("macro proc {} ({}){{", m.name, params.join(", ")));
        match &m.body {
            MacroBody::Primitive(Primitive::Produce) => {
                self.line(1, &format!("{}.channel ! {};", params[1], params[0]));
            }
            MacroBody::Primitive(Primitive::Store) => {
                self.line(1, &format!("{}.channel ? {};", params[0], params[1]));
            }
            MacroBody::Leaf(l) => self.leaf(m, l),
            MacroBody::Network { .. } if m.library && m.name == "VZIPWITH" => {
                // spacing of the published VZIPWITH template
                self.line(1, "typeof (n) c;");
                self.line(1, "par (c =0; c< n; c++){");
                self.line(2, "F(vectorIn1.elements[c], vectorIn2.elements[c], vectorOut.elements[c]);");
                self.line(1, "}");
            }
            MacroBody::Network { locals, nodes } => {
                for d in locals {
                    let text = decl_line(d, self.net.width);
                    self.line(1, &text);
                }
                self.index_decls(1, nodes);
                self.nodes(1, nodes);
            }
        }
        self.line(0, "}");
        self.out.push('\n');
    }
}

fn collect_indices(nodes: &[NetNode], found: &mut Vec<(String, Vec<Count>)>) {
    for n in nodes {
        let (index, count, body) = match n {
            NetNode::Call { .. } => continue,
            NetNode::Replicate { count, index, body, .. } => (index, count.clone(), body),
            NetNode::Chain { count, index, body } => (index, Count::Lit(*count), body),
        };
        match found.iter_mut().find(|(i, _)| i == index) {
            Some((_, cs)) => cs.push(count),
            None => found.push((index.clone(), vec![count])),
        }
        collect_indices(body, found);
    }
}

fn uses_kind(net: &ProcessNet, kind: ChanKind) -> bool {
    net.channels.iter().any(|c| c.kind == kind)
        || net.macros.iter().any(|m| match &m.body {
            MacroBody::Network { locals, .. } => locals.iter().any(|c| c.kind == kind),
            _ => false,
        })
}

/// Renders the whole program: pins, construct defines, output registers,
/// bus interfaces, library macros, user macros and main.
pub fn emit_program(net: &ProcessNet, cfg: &EmitConfig) -> HcText {
    let mut e = Emitter {
        net,
        out: String::new(),
    };
    let w = net.width;
    let mut sections = Vec::new();
    let mut mark = |e: &Emitter, kind: Section, start: usize| sections.push((kind, start..e.out.len()));

    let start = e.out.len();
    if cfg.target != Target::Generic {
        e.line(0, &format!("set clock = external\"{}\";", cfg.clock_pin));
        if cfg.include_reset {
            e.line(0, &format!("set reset = external\"{}\";", cfg.reset_pin));
        }
    }
    mark(&e, Section::Pins, start);

    let start = e.out.len();
    e.line(0, "#define Item(Name, Msgtype)struct{chan Msgtype channel; Msgtype message;}Name");
    if uses_kind(net, ChanKind::Vector) {
        e.line(0, "#define VectorOfItems(Name, Size, Msgtype)struct{Item(elements[Size], Msgtype);}Name");
    }
    if uses_kind(net, ChanKind::Stream) {
        e.line(0, "#define StreamOfItems(Name, Size, Msgtype)struct{chan Msgtype channel; Msgtype message;}Name");
    }
    e.out.push('\n');
    mark(&e, Section::Typedefs, start);

    let start = e.out.len();
    for b in &net.outputs {
        match b.len {
            None => e.line(0, &format!("unsigned {w} {};", b.name)),
            Some(n) => e.line(0, &format!("unsigned {w} {}[{n}];", b.name)),
        }
    }
    mark(&e, Section::Globals, start);

    let start = e.out.len();
    for b in &net.inputs {
        let width = w * b.len.unwrap_or(1);
        e.line(0, &format!("interface bus_in (unsigned {width} value) {}();", b.name));
    }
    for (k, b) in net.outputs.iter().enumerate() {
        let value = match b.len {
            None => b.name.clone(),
            Some(n) => (0..n).rev().map(|i| format!("{}[{i}]", b.name)).collect::<Vec<_>>().join(" @ "),
        };
        let width = w * b.len.unwrap_or(1);
        e.line(0, &format!("interface bus_out() O{k}(unsigned {width} o = {value} );"));
    }
    e.out.push('\n');
    mark(&e, Section::Interfaces, start);

    let start = e.out.len();
    for m in net.macros.iter().filter(|m| m.library) {
        e.macro_def(m);
    }
    mark(&e, Section::LibraryMacros, start);

    let start = e.out.len();
    for m in net.macros.iter().filter(|m| !m.library) {
        e.macro_def(m);
    }
    mark(&e, Section::UserMacros, start);

    let start = e.out.len();
    e.line(0, "void main(){");
    for d in &net.channels {
        let text = decl_line(d, w);
        e.line(1, &text);
    }
    e.index_decls(1, &net.main);
    e.line(1, "par{");
    e.nodes(2, &net.main);
    e.line(1, "}");
    e.line(0, "}");
    mark(&e, Section::Main, start);

    HcText {
        source: e.out,
        sections,
    }
}

/// Text of one macro as it appears in the program.
pub fn emit_macro(net: &ProcessNet, m: &MacroDef) -> String {
    let mut e = Emitter {
        net,
        out: String::new(),
    };
    e.macro_def(m);
    e.out.trim_end().to_string() + "\n"
}

#[cfg(test)]
mod tests;
