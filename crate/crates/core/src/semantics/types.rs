use std::fmt;

/// Semantic types of the source subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    UInt32,
    List(Box<Ty>),
    Tuple(Vec<Ty>),
    Fun(Vec<Ty>, Box<Ty>),
}

impl Ty {
    pub fn is_word(&self) -> bool {
        matches!(self, Ty::Int | Ty::UInt32)
    }

    pub fn list(elem: Ty) -> Ty {
        Ty::List(Box::new(elem))
    }

    pub fn fun(params: Vec<Ty>, ret: Ty) -> Ty {
        Ty::Fun(params, Box::new(ret))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("Int"),
            Ty::UInt32 => f.write_str("uInt32"),
            Ty::List(t) => write!(f, "[{t}]"),
            Ty::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            Ty::Fun(ps, r) => {
                for p in ps {
                    match p {
                        Ty::Fun(..) => write!(f, "({p}) -> ")?,
                        _ => write!(f, "{p} -> ")?,
                    }
                }
                write!(f, "{r}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display() {
        let t = Ty::fun(
            vec![Ty::Int, Ty::UInt32, Ty::Tuple(vec![Ty::UInt32, Ty::UInt32]), Ty::UInt32],
            Ty::Tuple(vec![Ty::UInt32, Ty::UInt32]),
        );
        assert_eq!(t.to_string(), "Int -> uInt32 -> (uInt32, uInt32) -> uInt32 -> (uInt32, uInt32)");
        assert_eq!(Ty::list(Ty::Int).to_string(), "[Int]");
    }
}
