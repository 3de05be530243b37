use indexmap::IndexMap;

use crate::frontend::{Program, Span, TypeName};

use super::types::Ty;
use super::{SemError, SemErrorKind};

/// Names the checker treats as built-in higher-order schemes.
pub const BUILTINS: [&str; 3] = ["map", "zipWith", "foldr"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub params: Vec<Ty>,
    pub ret: Ty,
    pub span: Span,
}

impl Entry {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn signature(&self) -> Ty {
        Ty::fun(self.params.clone(), self.ret.clone())
    }
}

/// Function signatures in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolTable {
    entries: IndexMap<String, Entry>,
}

impl SymbolTable {
    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Entry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `name :: type` per line.
    pub fn dump(&self) -> String {
        self.entries
            .iter()
            .map(|(n, e)| format!("{n} :: {}\n", e.signature()))
            .collect()
    }
}

pub fn resolve_type(t: &TypeName) -> Result<Ty, SemError> {
    match t {
        TypeName::Named(n, span) => match n.as_str() {
            "Int" => Ok(Ty::Int),
            "uInt32" => Ok(Ty::UInt32),
            _ => Err(SemError::new(
                SemErrorKind::UnknownTypeName,
                *span,
                format!("unknown type name `{n}`"),
            )),
        },
        TypeName::List(inner, _) => Ok(Ty::list(resolve_type(inner)?)),
        TypeName::Tuple(items, _) => Ok(Ty::Tuple(items.iter().map(resolve_type).collect::<Result<_, _>>()?)),
    }
}

pub fn build_symbol_table(program: &Program) -> Result<SymbolTable, SemError> {
    let mut entries = IndexMap::new();
    for unit in &program.units {
        let sig = &unit.signature;
        if BUILTINS.contains(&sig.name.as_str()) {
            return Err(SemError::new(
                SemErrorKind::DuplicateDefinition,
                sig.span,
                format!("`{}` is a built-in function and cannot be redefined", sig.name),
            ));
        }
        if let Some(prev) = entries.get(&sig.name) {
            let prev: &Entry = prev;
            return Err(SemError::new(
                SemErrorKind::DuplicateDefinition,
                sig.span,
                format!("duplicate definition of `{}` (first declared at {})", sig.name, prev.span.start),
            ));
        }
        if sig.param_types.is_empty() {
            return Err(SemError::new(
                SemErrorKind::Unsupported,
                sig.span,
                format!("`{}` has no parameters; constants are not supported", sig.name),
            ));
        }
        let params = sig.param_types.iter().map(resolve_type).collect::<Result<Vec<_>, _>>()?;
        let ret = resolve_type(&sig.return_type)?;
        entries.insert(sig.name.clone(), Entry { params, ret, span: sig.span });
    }
    Ok(SymbolTable { entries })
}
