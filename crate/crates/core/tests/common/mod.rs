#![allow(dead_code)]

pub mod xtea;

use std::path::PathBuf;

use htcc::emit::{emit_program, EmitConfig};
use htcc::eval::Value;
use htcc::pipeline::compile;
use htcc::refine::{ProcessNet, RefineConfig};
use htcc::semantics::TypedProgram;

pub const CORPUS: [&str; 8] = [
    "add3",
    "or",
    "mul_zip",
    "vector_add3",
    "foldr_sum",
    "xtea_round",
    "xtea_paper",
    "xtea_full",
];

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn corpus_path(name: &str) -> PathBuf {
    manifest_dir().join("corpus").join(format!("{name}.hs"))
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap()
}

pub fn golden_path(name: &str) -> PathBuf {
    manifest_dir().join("tests").join("golden").join(format!("{name}.hcc"))
}

/// Refinement settings each golden file is generated with.
pub fn golden_config(name: &str) -> RefineConfig {
    match name {
        "vector_add3" => RefineConfig {
            vec_lens: vec![("x".into(), 5)],
            ..RefineConfig::default()
        },
        _ => RefineConfig::default(),
    }
}

pub fn build(name: &str, cfg: &RefineConfig) -> (TypedProgram, ProcessNet) {
    compile(&corpus_source(name), cfg).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn emit_golden(name: &str) -> String {
    let (_, net) = build(name, &golden_config(name));
    emit_program(&net, &EmitConfig::default()).source
}

/// Drops all whitespace, so listings compare independent of layout.
pub fn canon(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Number of differential cases for a program, by how costly simulation is.
pub fn cases_for(name: &str) -> u64 {
    match name {
        "xtea_full" | "xtea_paper" => 100,
        "mul_zip" | "vector_add3" | "foldr_sum" => 500,
        _ => 1000,
    }
}

/// Refinement settings used for differential checks.
pub fn check_config(name: &str) -> RefineConfig {
    match name {
        "xtea_full" | "xtea_paper" => RefineConfig {
            unroll: Some(32),
            ..RefineConfig::default()
        },
        _ => RefineConfig::default(),
    }
}

pub fn words(v: &Value) -> Vec<u32> {
    match v {
        Value::Word(w) => vec![*w],
        Value::List(xs) | Value::Tuple(xs) => xs.iter().flat_map(words).collect(),
    }
}

/// Expected macro and main text, with the corrections listed in
/// tests/golden/DEVIATIONS.md applied.
pub mod listings {
    pub const ADD3_MACRO: &str = "macro proc add3 (itemIn, itemOut){
        typeof itemIn.message x;
        itemIn.channel ? x;
        itemOut.channel ! (x+3);}";

    pub const VMAP_MACRO: &str = "macro proc VMAP(vectorIn,vectorOut,n,F){
        typeof(n) c;
        par(c=0;c<n;c++){
        F(vectorIn.elements[c],
        vectorOut.elements[c]);}}";

    pub const VECTOR_ADD3_MACRO: &str = "macro proc vector_add3 (vectorIn,vectorOut,n){
        VMAP(vectorIn,vectorOut,n,add3);
        }";

    pub const VECTOR_ADD3_CALL: &str = "vector_add3(vector0,vector1,5);";

    pub const OR_PINS: &str = "set clock = external\"AD15\";\nset reset = external\"L8\";\n";

    pub const ITEM_DEFINE: &str = "#define Item(Name, Msgtype)struct{chan Msgtype
        channel; Msgtype message;}Name";

    pub const OR_INTERFACES: &str = "unsigned 32 OUTPUT0;
        interface bus_in (unsigned 32 value) INPUT0();
        interface bus_in (unsigned 32 value) INPUT1();
        interface bus_out() O0(unsigned 32 o = OUTPUT0 ) ;";

    pub const OR_MAIN: &str = "void main (){
        Item(item0 , unsigned 32);
        Item(item1 , unsigned 32);
        Item(item2 , unsigned 32);
        par{
        PRODUCE(INPUT0.value , item0);
        PRODUCE(INPUT1.value , item1);
        OR(item0, item1, item2  );
        STORE(item2, OUTPUT0);}}";

    pub const MUL_MACRO: &str = "macro proc mul (xItem, yItem,itemOut){
        typeof (xItem.message) x, y;
        xItem.channel ? x;
        yItem.channel ? y;
        itemOut.channel ! (x*y);}";

    pub const VZIPWITH_MACRO: &str = "macro proc VZIPWITH ( vectorIn1, vectorIn2,
        vectorOut, n, F){
        typeof (n) c;
        par (c =0; c< n; c++){
        F(vectorIn1.elements[c], vectorIn2.elements[c],
        vectorOut.elements[c]); }}";

    pub const TWO_VECTORS_MUL_MACRO: &str = "macro proc two_vectors_mul(vectorIn1,vectorIn2,
        vectorOut,n){
        VZIPWITH(vectorIn1, vectorIn2, vectorOut, n, mul);}";

    pub const MUL_ZIP_MAIN: &str = "void main (){
        VectorOfItems(vector0, 10, unsigned 32);
        VectorOfItems(vector1, 10, unsigned 32);
        VectorOfItems(vector2, 10, unsigned 32);
        par{
        VPRODUCE(INPUT0, vector0, 10);
        VPRODUCE(INPUT1, vector1, 10);
        two_vectors_mul(vector0,vector1,vector2,10);
        VSTORE(vector2, OUTPUT0, 10);}}";
}

/// Calls in a flat `par{ ... }` main block, as (macro, args).
pub fn main_calls(hc: &str) -> Vec<(String, Vec<String>)> {
    let main = &hc[hc.find("void main(){").expect("main block")..];
    let body = &main[main.find("par{").expect("main par block") + 4..];
    body.lines()
        .map(str::trim)
        .take_while(|l| *l != "}")
        .filter_map(|l| {
            let (name, rest) = l.split_once('(')?;
            let args = rest.trim_end_matches(';').strip_suffix(')')?;
            Some((name.trim().to_string(), args.split(',').map(|a| a.trim().to_string()).collect()))
        })
        .collect()
}

/// Where the value on `chan` comes from: an input bus or `macro#output`,
/// looking through FORK2 copies.
pub fn source_of(calls: &[(String, Vec<String>)], chan: &str) -> String {
    for (name, args) in calls {
        let Some((out, ins)) = args.split_last() else { continue };
        match name.as_str() {
            "FORK2" if args[1..].iter().any(|a| a == chan) => return source_of(calls, &args[0]),
            "PRODUCE" if out == chan => return ins[0].trim_end_matches(".value").to_string(),
            "FORK2" | "STORE" | "PRODUCE" => {}
            _ if out == chan => return name.clone(),
            _ => {}
        }
    }
    panic!("no writer for {chan}")
}
