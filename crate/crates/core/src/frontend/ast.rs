use std::fmt;

use super::lexer::Pos;

/// Half-open source region `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn contains(&self, inner: &Span) -> bool {
        self.start <= inner.start && inner.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub units: Vec<FunUnit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunUnit {
    pub signature: TypeSig,
    pub equations: Vec<Equation>,
    pub span: Span,
}

impl FunUnit {
    pub fn name(&self) -> &str {
        &self.signature.name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSig {
    pub name: String,
    pub param_types: Vec<TypeName>,
    pub return_type: TypeName,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeName {
    Named(String, Span),
    List(Box<TypeName>, Span),
    Tuple(Vec<TypeName>, Span),
}

impl TypeName {
    pub fn span(&self) -> Span {
        match self {
            TypeName::Named(_, s) | TypeName::List(_, s) | TypeName::Tuple(_, s) => *s,
        }
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Named(n, _) => f.write_str(n),
            TypeName::List(t, _) => write!(f, "[{t}]"),
            TypeName::Tuple(ts, _) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub name: String,
    pub patterns: Vec<Pattern>,
    pub body: Expr,
    pub where_bindings: Vec<WhereBinding>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhereBinding {
    pub name: String,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Var(String, Span),
    Lit(u32, Span),
    Tuple(Vec<Pattern>, Span),
    As(String, Box<Pattern>, Span),
}

impl Pattern {
    pub fn span(&self) -> Span {
        match self {
            Pattern::Var(_, s) | Pattern::Lit(_, s) | Pattern::Tuple(_, s) | Pattern::As(_, _, s) => *s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    Dec,
    Hex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
}

impl BinOp {
    pub fn source(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::And => ".&.",
            BinOp::Or => ".|.",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    IntLit(u32, Base),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    ShiftL(Box<Expr>, u32),
    ShiftR(Box<Expr>, u32),
    Apply(String, Vec<Expr>),
    Tuple(Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Var(_) | ExprKind::IntLit(..) => vec![],
            ExprKind::BinOp(_, a, b) | ExprKind::Xor(a, b) => vec![a, b],
            ExprKind::ShiftL(e, _) | ExprKind::ShiftR(e, _) => vec![e],
            ExprKind::Apply(_, args) | ExprKind::Tuple(args) => args.iter().collect(),
        }
    }
}

// Span erasure, used when comparing trees produced from different texts.

impl Program {
    pub fn without_spans(&self) -> Program {
        Program {
            units: self.units.iter().map(FunUnit::without_spans).collect(),
        }
    }
}

impl FunUnit {
    fn without_spans(&self) -> FunUnit {
        FunUnit {
            signature: TypeSig {
                name: self.signature.name.clone(),
                param_types: self.signature.param_types.iter().map(TypeName::without_spans).collect(),
                return_type: self.signature.return_type.without_spans(),
                span: Span::default(),
            },
            equations: self
                .equations
                .iter()
                .map(|e| Equation {
                    name: e.name.clone(),
                    patterns: e.patterns.iter().map(Pattern::without_spans).collect(),
                    body: e.body.without_spans(),
                    where_bindings: e
                        .where_bindings
                        .iter()
                        .map(|w| WhereBinding {
                            name: w.name.clone(),
                            expr: w.expr.without_spans(),
                            span: Span::default(),
                        })
                        .collect(),
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        }
    }
}

impl TypeName {
    fn without_spans(&self) -> TypeName {
        let z = Span::default();
        match self {
            TypeName::Named(n, _) => TypeName::Named(n.clone(), z),
            TypeName::List(t, _) => TypeName::List(Box::new(t.without_spans()), z),
            TypeName::Tuple(ts, _) => TypeName::Tuple(ts.iter().map(|t| t.without_spans()).collect(), z),
        }
    }
}

impl Pattern {
    fn without_spans(&self) -> Pattern {
        let z = Span::default();
        match self {
            Pattern::Var(n, _) => Pattern::Var(n.clone(), z),
            Pattern::Lit(v, _) => Pattern::Lit(*v, z),
            Pattern::Tuple(ps, _) => Pattern::Tuple(ps.iter().map(|p| p.without_spans()).collect(), z),
            Pattern::As(n, p, _) => Pattern::As(n.clone(), Box::new(p.without_spans()), z),
        }
    }
}

impl Expr {
    pub fn without_spans(&self) -> Expr {
        let b = |e: &Expr| Box::new(e.without_spans());
        let kind = match &self.kind {
            ExprKind::Var(n) => ExprKind::Var(n.clone()),
            ExprKind::IntLit(v, base) => ExprKind::IntLit(*v, *base),
            ExprKind::BinOp(op, l, r) => ExprKind::BinOp(*op, b(l), b(r)),
            ExprKind::Xor(l, r) => ExprKind::Xor(b(l), b(r)),
            ExprKind::ShiftL(e, k) => ExprKind::ShiftL(b(e), *k),
            ExprKind::ShiftR(e, k) => ExprKind::ShiftR(b(e), *k),
            ExprKind::Apply(f, args) => {
                ExprKind::Apply(f.clone(), args.iter().map(|a| a.without_spans()).collect())
            }
            ExprKind::Tuple(es) => ExprKind::Tuple(es.iter().map(|a| a.without_spans()).collect()),
        };
        Expr::new(kind, Span::default())
    }
}

/// Line-oriented tree dump, one node per line with its start position.
pub fn dump_ast(program: &Program) -> String {
    let mut out = String::new();
    for unit in &program.units {
        let sig = &unit.signature;
        let params: Vec<String> = sig.param_types.iter().map(|t| t.to_string()).collect();
        out.push_str(&format!(
            "{} FunUnit {} :: {} -> {}\n",
            unit.span.start,
            sig.name,
            params.join(" -> "),
            sig.return_type
        ));
        for eq in &unit.equations {
            out.push_str(&format!("{}   Equation {}\n", eq.span.start, eq.name));
            for p in &eq.patterns {
                dump_pattern(p, 3, &mut out);
            }
            out.push_str(&format!("{}     Body\n", eq.body.span.start));
            dump_expr(&eq.body, 3, &mut out);
            for w in &eq.where_bindings {
                out.push_str(&format!("{}     Where {}\n", w.span.start, w.name));
                dump_expr(&w.expr, 4, &mut out);
            }
        }
    }
    out
}

fn indent(depth: usize) -> String {
    "  ".repeat(depth)
}

fn dump_pattern(p: &Pattern, depth: usize, out: &mut String) {
    let pad = indent(depth);
    match p {
        Pattern::Var(n, s) => out.push_str(&format!("{} {pad}VarP {n}\n", s.start)),
        Pattern::Lit(v, s) => out.push_str(&format!("{} {pad}LitP {v}\n", s.start)),
        Pattern::Tuple(ps, s) => {
            out.push_str(&format!("{} {pad}TupleP\n", s.start));
            for q in ps {
                dump_pattern(q, depth + 1, out);
            }
        }
        Pattern::As(n, q, s) => {
            out.push_str(&format!("{} {pad}AsP {n}\n", s.start));
            dump_pattern(q, depth + 1, out);
        }
    }
}

fn dump_expr(e: &Expr, depth: usize, out: &mut String) {
    let pad = indent(depth);
    let head = match &e.kind {
        ExprKind::Var(n) => format!("Var {n}"),
        ExprKind::IntLit(v, Base::Dec) => format!("IntLit {v}"),
        ExprKind::IntLit(v, Base::Hex) => format!("IntLit {v:#x}"),
        ExprKind::BinOp(op, ..) => format!("BinOp {}", op.source()),
        ExprKind::Xor(..) => "Xor".to_string(),
        ExprKind::ShiftL(_, k) => format!("ShiftL {k}"),
        ExprKind::ShiftR(_, k) => format!("ShiftR {k}"),
        ExprKind::Apply(f, _) => format!("Apply {f}"),
        ExprKind::Tuple(_) => "Tuple".to_string(),
    };
    out.push_str(&format!("{} {pad}{head}\n", e.span.start));
    for c in e.children() {
        dump_expr(c, depth + 1, out);
    }
}
