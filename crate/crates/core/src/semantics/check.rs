//! Bidirectional checker: literals take the type their context demands.

use std::collections::HashMap;

use crate::frontend::{Equation, Expr, ExprKind, Pattern, Program, Span};

use super::table::SymbolTable;
use super::typed::*;
use super::types::Ty;
use super::{SemError, SemErrorKind};

pub fn type_check(program: &Program, table: &SymbolTable) -> Result<TypedProgram, SemError> {
    let mut units = Vec::new();
    for unit in &program.units {
        let entry = table.get(unit.name()).expect("table built from the same program");
        let mut equations = Vec::new();
        for eq in &unit.equations {
            equations.push(check_equation(table, eq, &entry.params, &entry.ret)?);
        }
        units.push(TypedUnit {
            name: unit.name().to_string(),
            params: entry.params.clone(),
            ret: entry.ret.clone(),
            equations,
            span: unit.span,
        });
    }
    Ok(TypedProgram {
        table: table.clone(),
        units,
    })
}

fn err(kind: SemErrorKind, span: Span, msg: impl Into<String>) -> SemError {
    SemError::new(kind, span, msg.into())
}

fn mismatch(span: Span, expected: &Ty, found: &Ty) -> SemError {
    err(
        SemErrorKind::Mismatch,
        span,
        format!("type mismatch: expected {expected}, found {found}"),
    )
}

fn check_equation(table: &SymbolTable, eq: &Equation, params: &[Ty], ret: &Ty) -> Result<TypedEquation, SemError> {
    if eq.patterns.len() != params.len() {
        return Err(err(
            SemErrorKind::Arity,
            eq.span,
            format!(
                "`{}` is declared with {} parameter(s) but this equation has {}",
                eq.name,
                params.len(),
                eq.patterns.len()
            ),
        ));
    }
    let mut scope = HashMap::new();
    let mut patterns = Vec::new();
    for (p, t) in eq.patterns.iter().zip(params) {
        patterns.push(bind_pattern(p, t, &mut scope)?);
    }

    let mut wheres = Vec::new();
    for w in order_wheres(eq)? {
        if scope.contains_key(&w.name) {
            return Err(err(
                SemErrorKind::DuplicateDefinition,
                w.span,
                format!("`{}` is already bound in this equation", w.name),
            ));
        }
        let expr = Checker { table, scope: &scope }.check(&w.expr, None)?;
        scope.insert(w.name.clone(), expr.ty.clone());
        wheres.push(TWhere {
            name: w.name.clone(),
            expr,
            span: w.span,
        });
    }
    let body = Checker { table, scope: &scope }.check(&eq.body, Some(ret))?;
    Ok(TypedEquation {
        patterns,
        body,
        wheres,
        span: eq.span,
    })
}

/// Dependency order for where bindings; stable for independent bindings.
fn order_wheres(eq: &Equation) -> Result<Vec<&crate::frontend::ast::WhereBinding>, SemError> {
    let names: Vec<&str> = eq.where_bindings.iter().map(|w| w.name.as_str()).collect();
    for (i, w) in eq.where_bindings.iter().enumerate() {
        if names[..i].contains(&w.name.as_str()) {
            return Err(err(
                SemErrorKind::DuplicateDefinition,
                w.span,
                format!("duplicate where binding `{}`", w.name),
            ));
        }
    }
    let deps: Vec<Vec<usize>> = eq
        .where_bindings
        .iter()
        .map(|w| {
            let mut vars = Vec::new();
            source_vars(&w.expr, &mut vars);
            vars.iter().filter_map(|v| names.iter().position(|n| n == v)).collect()
        })
        .collect();
    let mut done = vec![false; names.len()];
    let mut order = Vec::new();
    while order.len() < names.len() {
        let next = (0..names.len()).find(|&i| !done[i] && deps[i].iter().all(|&d| done[d]));
        match next {
            Some(i) => {
                done[i] = true;
                order.push(&eq.where_bindings[i]);
            }
            None => {
                let i = (0..names.len()).find(|&i| !done[i]).unwrap();
                let w = &eq.where_bindings[i];
                return Err(err(
                    SemErrorKind::CyclicBinding,
                    w.span,
                    format!("where binding `{}` depends on itself", w.name),
                ));
            }
        }
    }
    Ok(order)
}

fn source_vars(e: &Expr, out: &mut Vec<String>) {
    if let ExprKind::Var(n) = &e.kind {
        out.push(n.clone());
    }
    for c in e.children() {
        source_vars(c, out);
    }
}

fn bind_pattern(p: &Pattern, ty: &Ty, scope: &mut HashMap<String, Ty>) -> Result<TPattern, SemError> {
    let bind = |name: &str, span: Span, scope: &mut HashMap<String, Ty>| {
        if scope.insert(name.to_string(), ty.clone()).is_some() {
            Err(err(
                SemErrorKind::DuplicateDefinition,
                span,
                format!("variable `{name}` is bound twice"),
            ))
        } else {
            Ok(())
        }
    };
    match p {
        Pattern::Var(n, span) => {
            bind(n, *span, scope)?;
            Ok(TPattern::Var(n.clone(), ty.clone()))
        }
        Pattern::Lit(v, span) => {
            if !ty.is_word() {
                return Err(err(
                    SemErrorKind::Mismatch,
                    *span,
                    format!("literal pattern {v} cannot match a value of type {ty}"),
                ));
            }
            Ok(TPattern::Lit(*v, ty.clone()))
        }
        Pattern::Tuple(items, span) => match ty {
            Ty::Tuple(tys) if tys.len() == items.len() => {
                let sub = items
                    .iter()
                    .zip(tys)
                    .map(|(q, t)| bind_pattern(q, t, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(TPattern::Tuple(sub, ty.clone()))
            }
            _ => Err(err(
                SemErrorKind::Mismatch,
                *span,
                format!("tuple pattern of arity {} cannot match type {ty}", items.len()),
            )),
        },
        Pattern::As(n, inner, span) => {
            bind(n, *span, scope)?;
            let inner = bind_pattern(inner, ty, scope)?;
            Ok(TPattern::As(n.clone(), Box::new(inner), ty.clone()))
        }
    }
}

/// Expressions whose type is fixed only by context (literal arithmetic).
fn context_typed(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::IntLit(..) => true,
        ExprKind::BinOp(_, a, b) | ExprKind::Xor(a, b) => context_typed(a) && context_typed(b),
        ExprKind::ShiftL(a, _) | ExprKind::ShiftR(a, _) => context_typed(a),
        _ => false,
    }
}

struct Checker<'a> {
    table: &'a SymbolTable,
    scope: &'a HashMap<String, Ty>,
}

impl Checker<'_> {
    fn expect(&self, span: Span, found: Ty, expected: Option<&Ty>) -> Result<Ty, SemError> {
        match expected {
            Some(t) if *t != found => Err(mismatch(span, t, &found)),
            _ => Ok(found),
        }
    }

    fn check(&self, e: &Expr, expected: Option<&Ty>) -> Result<TExpr, SemError> {
        let span = e.span;
        let (kind, ty) = match &e.kind {
            ExprKind::Var(n) => match self.scope.get(n) {
                Some(t) => (TExprKind::Var(n.clone()), self.expect(span, t.clone(), expected)?),
                None if self.table.get(n).is_some() => {
                    return Err(err(
                        SemErrorKind::Unsupported,
                        span,
                        format!("function `{n}` used as a value outside map/zipWith/foldr"),
                    ))
                }
                None => return Err(err(SemErrorKind::UnknownName, span, format!("unknown name `{n}`"))),
            },
            ExprKind::IntLit(v, base) => {
                let ty = match expected {
                    None => Ty::Int,
                    Some(t) if t.is_word() => t.clone(),
                    Some(t) => {
                        return Err(err(
                            SemErrorKind::Mismatch,
                            span,
                            format!("type mismatch: expected {t}, found integer literal"),
                        ))
                    }
                };
                (TExprKind::Lit(*v, *base), ty)
            }
            ExprKind::BinOp(op, a, b) => {
                let (a, b, ty) = self.operands(a, b, expected)?;
                (TExprKind::Bin(Op::from_source(*op), Box::new(a), Box::new(b)), ty)
            }
            ExprKind::Xor(a, b) => {
                let (a, b, ty) = self.operands(a, b, expected)?;
                (TExprKind::Bin(Op::Xor, Box::new(a), Box::new(b)), ty)
            }
            ExprKind::ShiftL(a, k) | ExprKind::ShiftR(a, k) => {
                let inner = self.check(a, expected)?;
                if !inner.ty.is_word() {
                    return Err(err(
                        SemErrorKind::Mismatch,
                        a.span,
                        format!("shift operand must be Int or uInt32, found {}", inner.ty),
                    ));
                }
                let op = if matches!(e.kind, ExprKind::ShiftL(..)) { Op::Shl } else { Op::Shr };
                let ty = inner.ty.clone();
                (TExprKind::Shift(op, Box::new(inner), *k), ty)
            }
            ExprKind::Tuple(items) => {
                let expected_items = match expected {
                    None => None,
                    Some(Ty::Tuple(ts)) if ts.len() == items.len() => Some(ts),
                    Some(t) => {
                        return Err(err(
                            SemErrorKind::Mismatch,
                            span,
                            format!("type mismatch: expected {t}, found a {}-tuple", items.len()),
                        ))
                    }
                };
                let typed = items
                    .iter()
                    .enumerate()
                    .map(|(i, x)| self.check(x, expected_items.map(|ts| &ts[i])))
                    .collect::<Result<Vec<_>, _>>()?;
                let ty = Ty::Tuple(typed.iter().map(|t| t.ty.clone()).collect());
                (TExprKind::Tuple(typed), ty)
            }
            ExprKind::Apply(f, args) => match f.as_str() {
                "map" | "zipWith" | "foldr" => self.higher_order(f, args, span, expected)?,
                _ => self.call(f, args, span, expected)?,
            },
        };
        Ok(TExpr { kind, ty, span })
    }

    fn operands(&self, a: &Expr, b: &Expr, expected: Option<&Ty>) -> Result<(TExpr, TExpr, Ty), SemError> {
        let (ta, tb) = if let Some(t) = expected.filter(|t| t.is_word()) {
            (self.check(a, Some(t))?, self.check(b, Some(t))?)
        } else if !context_typed(a) {
            let ta = self.check(a, None)?;
            let tb = self.check(b, Some(&ta.ty))?;
            (ta, tb)
        } else if !context_typed(b) {
            let tb = self.check(b, None)?;
            let ta = self.check(a, Some(&tb.ty))?;
            (ta, tb)
        } else {
            (self.check(a, Some(&Ty::Int))?, self.check(b, Some(&Ty::Int))?)
        };
        if !ta.ty.is_word() {
            return Err(err(
                SemErrorKind::Mismatch,
                a.span,
                format!("operator needs Int or uInt32 operands, found {}", ta.ty),
            ));
        }
        let ty = self.expect(b.span.join(a.span), ta.ty.clone(), expected)?;
        Ok((ta, tb, ty))
    }

    fn call(&self, f: &str, args: &[Expr], span: Span, expected: Option<&Ty>) -> Result<(TExprKind, Ty), SemError> {
        if self.scope.contains_key(f) {
            return Err(err(SemErrorKind::Unsupported, span, format!("`{f}` is a variable, not a function")));
        }
        let Some(entry) = self.table.get(f) else {
            return Err(err(SemErrorKind::UnknownName, span, format!("unknown function `{f}`")));
        };
        if entry.arity() != args.len() {
            return Err(err(
                SemErrorKind::Arity,
                span,
                format!("`{f}` expects {} argument(s), got {}", entry.arity(), args.len()),
            ));
        }
        let typed = args
            .iter()
            .zip(&entry.params)
            .map(|(a, t)| self.check(a, Some(t)))
            .collect::<Result<Vec<_>, _>>()?;
        let ty = self.expect(span, entry.ret.clone(), expected)?;
        Ok((TExprKind::Call(f.to_string(), typed), ty))
    }

    /// The functional argument of a higher-order builtin: a bare function
    /// name with word-typed parameters and result.
    fn function_arg(&self, builtin: &str, e: &Expr, arity: usize) -> Result<(String, Vec<Ty>, Ty), SemError> {
        let name = match &e.kind {
            ExprKind::Var(n) if !self.scope.contains_key(n) => n,
            _ => {
                return Err(err(
                    SemErrorKind::Unsupported,
                    e.span,
                    format!("first argument of `{builtin}` must be a function name"),
                ))
            }
        };
        let Some(entry) = self.table.get(name) else {
            return Err(err(SemErrorKind::UnknownName, e.span, format!("unknown function `{name}`")));
        };
        if entry.arity() != arity {
            return Err(err(
                SemErrorKind::Arity,
                e.span,
                format!("`{builtin}` needs a function of {arity} argument(s); `{name}` takes {}", entry.arity()),
            ));
        }
        if !entry.params.iter().all(Ty::is_word) || !entry.ret.is_word() {
            return Err(err(
                SemErrorKind::Unsupported,
                e.span,
                format!("`{name}` must take and return Int or uInt32 to be used with `{builtin}`"),
            ));
        }
        Ok((name.clone(), entry.params.clone(), entry.ret.clone()))
    }

    fn higher_order(
        &self,
        builtin: &str,
        args: &[Expr],
        span: Span,
        expected: Option<&Ty>,
    ) -> Result<(TExprKind, Ty), SemError> {
        let want = match builtin {
            "map" => 2,
            _ => 3,
        };
        if args.len() != want {
            return Err(err(
                SemErrorKind::Arity,
                span,
                format!("`{builtin}` expects {want} arguments, got {}", args.len()),
            ));
        }
        match builtin {
            "map" => {
                let (f, params, ret) = self.function_arg(builtin, &args[0], 1)?;
                let list = self.check(&args[1], Some(&Ty::list(params[0].clone())))?;
                let ty = self.expect(span, Ty::list(ret), expected)?;
                Ok((TExprKind::Map(f, Box::new(list)), ty))
            }
            "zipWith" => {
                let (f, params, ret) = self.function_arg(builtin, &args[0], 2)?;
                let a = self.check(&args[1], Some(&Ty::list(params[0].clone())))?;
                let b = self.check(&args[2], Some(&Ty::list(params[1].clone())))?;
                let ty = self.expect(span, Ty::list(ret), expected)?;
                Ok((TExprKind::ZipWith(f, Box::new(a), Box::new(b)), ty))
            }
            _ => {
                let (f, params, ret) = self.function_arg(builtin, &args[0], 2)?;
                if params[1] != ret {
                    return Err(mismatch(args[0].span, &Ty::fun(vec![params[0].clone(), ret.clone()], ret.clone()), &Ty::fun(params.clone(), ret)));
                }
                let init = self.check(&args[1], Some(&ret))?;
                let list = self.check(&args[2], Some(&Ty::list(params[0].clone())))?;
                let ty = self.expect(span, ret, expected)?;
                Ok((TExprKind::Foldr(f, Box::new(init), Box::new(list)), ty))
            }
        }
    }
}
