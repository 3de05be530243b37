//! Canonical source printer. Output re-parses to the same tree.

use super::ast::*;

pub fn pretty(program: &Program) -> String {
    let mut out = String::new();
    for (i, unit) in program.units.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let sig = &unit.signature;
        let mut types: Vec<String> = sig.param_types.iter().map(|t| t.to_string()).collect();
        types.push(sig.return_type.to_string());
        out.push_str(&format!("{} :: {}\n", sig.name, types.join(" -> ")));
        for eq in &unit.equations {
            out.push_str(&eq.name);
            for p in &eq.patterns {
                out.push(' ');
                out.push_str(&pattern(p));
            }
            out.push_str(" = ");
            out.push_str(&expr(&eq.body));
            if !eq.where_bindings.is_empty() {
                out.push_str(" where");
                for w in &eq.where_bindings {
                    out.push_str(&format!("\n    {} = {}", w.name, expr(&w.expr)));
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn pattern(p: &Pattern) -> String {
    match p {
        Pattern::Var(n, _) => n.clone(),
        Pattern::Lit(v, _) => v.to_string(),
        Pattern::Tuple(ps, _) => format!("({})", ps.iter().map(pattern).collect::<Vec<_>>().join(", ")),
        Pattern::As(n, q, _) => match **q {
            Pattern::Tuple(..) => format!("{n}@{}", pattern(q)),
            _ => format!("{n}@({})", pattern(q)),
        },
    }
}

fn is_atom(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Var(_) | ExprKind::IntLit(..) | ExprKind::Tuple(_))
}

fn atom(e: &Expr) -> String {
    if is_atom(e) {
        expr(e)
    } else {
        format!("({})", expr(e))
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var(n) => n.clone(),
        ExprKind::IntLit(v, Base::Dec) => v.to_string(),
        ExprKind::IntLit(v, Base::Hex) => format!("{v:#x}"),
        // operands are always atoms so no precedence reasoning is needed
        ExprKind::BinOp(op, l, r) => format!("{} {} {}", atom(l), op.source(), atom(r)),
        ExprKind::Xor(l, r) => format!("xor {} {}", atom(l), atom(r)),
        ExprKind::ShiftL(x, k) => format!("shiftL {} {k}", atom(x)),
        ExprKind::ShiftR(x, k) => format!("shiftR {} {k}", atom(x)),
        ExprKind::Apply(f, args) => {
            let args: Vec<String> = args.iter().map(atom).collect();
            format!("{f} {}", args.join(" "))
        }
        ExprKind::Tuple(es) => format!("({})", es.iter().map(expr).collect::<Vec<_>>().join(", ")),
    }
}
