use super::*;
use crate::frontend::parse_source;
use crate::refine::{refine, RefineConfig};
use crate::semantics::analyze;

fn emit_corpus(name: &str, cfg: &RefineConfig, ecfg: &EmitConfig) -> HcText {
    let src = std::fs::read_to_string(format!("{}/corpus/{name}.hs", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let net = refine(&analyze(&parse_source(&src).unwrap()).unwrap(), cfg).unwrap();
    emit_program(&net, ecfg)
}

fn default_emit(name: &str) -> HcText {
    emit_corpus(name, &RefineConfig::default(), &EmitConfig::default())
}

#[test]
fn emission_is_deterministic() {
    for name in ["add3", "or", "vector_add3", "mul_zip", "xtea_round"] {
        assert_eq!(default_emit(name), default_emit(name), "{name}");
    }
}

#[test]
fn de2_70_pins_come_first() {
    let text = default_emit("or");
    assert_eq!(text.section(Section::Pins), "set clock = external\"AD15\";\nset reset = external\"L8\";\n");
    assert!(text.source.starts_with("set clock = external\"AD15\";\n"));
}

#[test]
fn generic_target_has_no_pins() {
    let text = emit_corpus("or", &RefineConfig::default(), &EmitConfig::for_target(Target::Generic));
    assert_eq!(text.section(Section::Pins), "");
    assert!(!text.source.contains("set clock"));
}

#[test]
fn reset_line_can_be_left_out() {
    let cfg = EmitConfig {
        include_reset: false,
        ..EmitConfig::default()
    };
    let text = emit_corpus("add3", &RefineConfig::default(), &cfg);
    assert!(text.source.contains("set clock"));
    assert!(!text.source.contains("set reset"));
}

#[test]
fn target_names_parse() {
    assert_eq!("de2-70".parse::<Target>(), Ok(Target::De270));
    assert_eq!("de4".parse::<Target>(), Ok(Target::De4));
    assert_eq!("generic".parse::<Target>(), Ok(Target::Generic));
    assert!("zynq".parse::<Target>().is_err());
}

#[test]
fn vzipwith_keeps_the_published_template() {
    let text = default_emit("mul_zip");
    assert!(text.section(Section::LibraryMacros).contains(
        "macro proc VZIPWITH (vectorIn1, vectorIn2, vectorOut, n, F){\n    typeof (n) c;\n    par (c =0; c< n; c++){\n        F(vectorIn1.elements[c], vectorIn2.elements[c], vectorOut.elements[c]);\n    }\n}\n"
    ));
    assert!(text
        .section(Section::UserMacros)
        .contains("VZIPWITH(vectorIn1, vectorIn2, vectorOut, n, mul);"));
}

#[test]
fn braces_balance_in_every_program() {
    let chained = RefineConfig {
        unroll: Some(3),
        ..RefineConfig::default()
    };
    for name in ["add3", "or", "vector_add3", "mul_zip", "foldr_sum", "xtea_round", "xtea_paper", "xtea_full"] {
        for mode in [crate::refine::ListMode::Vector, crate::refine::ListMode::Stream] {
            let cfg = RefineConfig {
                list_mode: mode,
                ..chained.clone()
            };
            let src = emit_corpus(name, &cfg, &EmitConfig::default()).source;
            let mut depth = 0i64;
            for ch in src.chars() {
                match ch {
                    '{' => depth += 1,
                    '}' => depth -= 1,
                    _ => {}
                }
                assert!(depth >= 0, "{name}");
            }
            assert_eq!(depth, 0, "{name}");
        }
    }
}

#[test]
fn sections_cover_the_source_in_order() {
    let text = default_emit("vector_add3");
    let mut at = 0;
    for (_, r) in &text.sections {
        assert_eq!(r.start, at);
        at = r.end;
    }
    assert_eq!(at, text.source.len());
    assert!(text.section(Section::Main).starts_with("void main(){"));
}

#[test]
fn expressions_parenthesize_compound_operands() {
    let x = || Box::new(HExpr::Var("x".into()));
    let lit = |n| Box::new(HExpr::Lit(n, Base::Dec));
    let sum = HExpr::Bin(Op::Add, x(), lit(3));
    assert_eq!(hexpr(&sum), "x+3");
    let nested = HExpr::Bin(Op::Xor, Box::new(sum.clone()), Box::new(HExpr::Bin(Op::Shl, x(), lit(4))));
    assert_eq!(hexpr(&nested), "(x+3)^(x<<4)");
    assert_eq!(hexpr(&HExpr::Lit(0x9e3779b9, Base::Hex)), "0x9e3779b9");
}
