//! Type-annotated program tree produced by the checker.

use crate::frontend::{Base, Span};

use super::table::SymbolTable;
use super::types::Ty;

/// Word-level binary operators shared by the evaluator and the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Xor,
    Shl,
    Shr,
}

impl Op {
    /// Modulo-2^32 semantics; `None` only for division by zero.
    pub fn apply(self, a: u32, b: u32) -> Option<u32> {
        Some(match self {
            Op::Add => a.wrapping_add(b),
            Op::Sub => a.wrapping_sub(b),
            Op::Mul => a.wrapping_mul(b),
            Op::Div => return a.checked_div(b),
            Op::And => a & b,
            Op::Or => a | b,
            Op::Xor => a ^ b,
            Op::Shl => a.checked_shl(b).unwrap_or(0),
            Op::Shr => a.checked_shr(b).unwrap_or(0),
        })
    }

    pub fn from_source(op: crate::frontend::BinOp) -> Op {
        use crate::frontend::BinOp as B;
        match op {
            B::Add => Op::Add,
            B::Sub => Op::Sub,
            B::Mul => Op::Mul,
            B::Div => Op::Div,
            B::And => Op::And,
            B::Or => Op::Or,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub table: SymbolTable,
    pub units: Vec<TypedUnit>,
}

impl TypedProgram {
    pub fn unit(&self, name: &str) -> Option<&TypedUnit> {
        self.units.iter().find(|u| u.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedUnit {
    pub name: String,
    pub params: Vec<Ty>,
    pub ret: Ty,
    pub equations: Vec<TypedEquation>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedEquation {
    pub patterns: Vec<TPattern>,
    pub body: TExpr,
    /// Sorted so every binding only refers to earlier ones.
    pub wheres: Vec<TWhere>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TWhere {
    pub name: String,
    pub expr: TExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TPattern {
    Var(String, Ty),
    Lit(u32, Ty),
    Tuple(Vec<TPattern>, Ty),
    As(String, Box<TPattern>, Ty),
}

impl TPattern {
    pub fn ty(&self) -> &Ty {
        match self {
            TPattern::Var(_, t) | TPattern::Lit(_, t) | TPattern::Tuple(_, t) | TPattern::As(_, _, t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TExprKind {
    Var(String),
    Lit(u32, Base),
    Bin(Op, Box<TExpr>, Box<TExpr>),
    /// Shift by a static amount.
    Shift(Op, Box<TExpr>, u32),
    Call(String, Vec<TExpr>),
    Map(String, Box<TExpr>),
    ZipWith(String, Box<TExpr>, Box<TExpr>),
    Foldr(String, Box<TExpr>, Box<TExpr>),
    Tuple(Vec<TExpr>),
}

impl TExpr {
    pub fn children(&self) -> Vec<&TExpr> {
        match &self.kind {
            TExprKind::Var(_) | TExprKind::Lit(..) => vec![],
            TExprKind::Bin(_, a, b) | TExprKind::ZipWith(_, a, b) | TExprKind::Foldr(_, a, b) => vec![a, b],
            TExprKind::Shift(_, e, _) | TExprKind::Map(_, e) => vec![e],
            TExprKind::Call(_, args) | TExprKind::Tuple(args) => args.iter().collect(),
        }
    }

    /// True when the expression calls any function (user or higher-order).
    pub fn has_calls(&self) -> bool {
        matches!(
            self.kind,
            TExprKind::Call(..) | TExprKind::Map(..) | TExprKind::ZipWith(..) | TExprKind::Foldr(..)
        ) || self.children().into_iter().any(TExpr::has_calls)
    }

    /// Free variable names in first-occurrence order.
    pub fn free_vars(&self, out: &mut Vec<String>) {
        if let TExprKind::Var(n) = &self.kind {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
        for c in self.children() {
            c.free_vars(out);
        }
    }

    /// Names of functions referenced, including higher-order arguments.
    pub fn callees(&self, out: &mut Vec<String>) {
        match &self.kind {
            TExprKind::Call(f, _) | TExprKind::Map(f, _) | TExprKind::ZipWith(f, ..) | TExprKind::Foldr(f, ..)
                if !out.contains(f) =>
            {
                out.push(f.clone());
            }
            _ => {}
        }
        for c in self.children() {
            c.callees(out);
        }
    }
}
