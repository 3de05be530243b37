//! Recursive-descent parser.
//!
//! Layout is deliberately small: a unit is a signature line followed by one
//! or more equation lines for the same name. A line break followed by a
//! token indented deeper than the current construct is a continuation.
//! After `where`, bindings line up on the column of the first binding.

use thiserror::Error;

use super::ast::*;
use super::lexer::{Pos, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
}

pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    Parser::new(tokens).program()
}

struct Parser<'t> {
    toks: &'t [Token],
    idx: usize,
    /// Newlines followed by a token whose column exceeds this are skipped.
    layout_col: u32,
    prev_end: Pos,
}

fn describe(t: Option<&Token>) -> String {
    match t {
        None => "end of input".to_string(),
        Some(t) if t.kind == TokenKind::Newline => "end of line".to_string(),
        Some(t) => format!("{} {:?}", t.kind, t.lexeme),
    }
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token]) -> Self {
        Parser {
            toks,
            idx: 0,
            layout_col: u32::MAX,
            prev_end: Pos::new(1, 1),
        }
    }

    fn skip_continuations(&mut self) {
        while let Some(t) = self.toks.get(self.idx) {
            if t.kind != TokenKind::Newline {
                break;
            }
            match self.toks.get(self.idx + 1) {
                Some(next) if next.col > self.layout_col => self.idx += 1,
                _ => break,
            }
        }
    }

    fn peek(&mut self) -> Option<&'t Token> {
        self.skip_continuations();
        self.toks.get(self.idx)
    }

    fn peek_kind(&mut self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    /// The token after the current one, looking through continuation lines.
    fn peek_second(&mut self) -> Option<&'t Token> {
        self.skip_continuations();
        let mut i = self.idx + 1;
        while let (Some(t), Some(next)) = (self.toks.get(i), self.toks.get(i + 1)) {
            if t.kind == TokenKind::Newline && next.col > self.layout_col {
                i += 1;
            } else {
                break;
            }
        }
        self.toks.get(i)
    }

    fn bump(&mut self) -> &'t Token {
        self.skip_continuations();
        let t = &self.toks[self.idx];
        self.idx += 1;
        if t.kind != TokenKind::Newline {
            self.prev_end = t.end();
        }
        t
    }

    fn error<T>(&mut self, expected: &[&str]) -> Result<T, ParseError> {
        let t = self.peek();
        let pos = t.map(|t| t.pos()).unwrap_or(self.prev_end);
        Err(ParseError {
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(t),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'t Token, ParseError> {
        if self.peek_kind() == Some(kind) {
            Ok(self.bump())
        } else {
            self.error(&[kind.name()])
        }
    }

    fn skip_newlines(&mut self) {
        while self.toks.get(self.idx).map(|t| t.kind) == Some(TokenKind::Newline) {
            self.idx += 1;
        }
    }

    fn start_pos(&mut self) -> Pos {
        self.peek().map(|t| t.pos()).unwrap_or(self.prev_end)
    }

    fn program(mut self) -> Result<Program, ParseError> {
        let mut units = Vec::new();
        self.skip_newlines();
        while self.idx < self.toks.len() {
            units.push(self.unit()?);
            self.skip_newlines();
        }
        Ok(Program { units })
    }

    fn unit(&mut self) -> Result<FunUnit, ParseError> {
        // line-start tokens: no continuation skipping across them
        self.layout_col = u32::MAX;
        let head = self.toks[self.idx].clone();
        let unit_col = head.col;
        let start = head.pos();
        if head.kind != TokenKind::Id || self.toks.get(self.idx + 1).map(|t| t.kind) != Some(TokenKind::DColon) {
            return self.error(&["type signature `name :: type`"]);
        }
        self.layout_col = unit_col;
        let name_tok = self.bump();
        self.expect(TokenKind::DColon)?;
        let mut types = vec![self.type_name()?];
        while self.peek_kind() == Some(TokenKind::Arrow) {
            self.bump();
            types.push(self.type_name()?);
        }
        let return_type = types.pop().unwrap();
        let signature = TypeSig {
            name: name_tok.lexeme.clone(),
            param_types: types,
            return_type,
            span: Span::new(start, self.prev_end),
        };
        match self.peek_kind() {
            Some(TokenKind::Newline) => {}
            None => {
                let expected = format!("definition of `{}`", signature.name);
                return self.error(&[expected.as_str()]);
            }
            _ => return self.error(&["ARROW", "end of line"]),
        }

        let mut equations = Vec::new();
        loop {
            self.layout_col = u32::MAX;
            self.skip_newlines();
            let Some(t) = self.toks.get(self.idx) else { break };
            let is_sig = self.toks.get(self.idx + 1).map(|t| t.kind) == Some(TokenKind::DColon);
            if t.kind == TokenKind::Id && t.lexeme == signature.name && !is_sig && t.col == unit_col {
                equations.push(self.equation(unit_col)?);
            } else {
                break;
            }
        }
        if equations.is_empty() {
            let expected = format!("definition of `{}`", signature.name);
            return self.error(&[expected.as_str()]);
        }
        Ok(FunUnit {
            span: Span::new(start, self.prev_end),
            signature,
            equations,
        })
    }

    fn type_name(&mut self) -> Result<TypeName, ParseError> {
        let start = self.start_pos();
        match self.peek_kind() {
            Some(TokenKind::Id) => {
                let t = self.bump();
                Ok(TypeName::Named(t.lexeme.clone(), Span::new(start, self.prev_end)))
            }
            Some(TokenKind::LBracket) => {
                self.bump();
                let inner = self.type_name()?;
                self.expect(TokenKind::RBracket)?;
                Ok(TypeName::List(Box::new(inner), Span::new(start, self.prev_end)))
            }
            Some(TokenKind::LParen) => {
                self.bump();
                let mut items = vec![self.type_name()?];
                while self.peek_kind() == Some(TokenKind::Comma) {
                    self.bump();
                    items.push(self.type_name()?);
                }
                self.expect(TokenKind::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    Ok(TypeName::Tuple(items, Span::new(start, self.prev_end)))
                }
            }
            _ => self.error(&["type name"]),
        }
    }

    fn equation(&mut self, eq_col: u32) -> Result<Equation, ParseError> {
        self.layout_col = eq_col;
        let start = self.start_pos();
        let name = self.expect(TokenKind::Id)?.lexeme.clone();
        let mut patterns = Vec::new();
        while self.peek_kind() != Some(TokenKind::Equals) {
            if self.peek().is_none() || self.peek_kind() == Some(TokenKind::Newline) {
                return self.error(&["pattern", "EQUALS"]);
            }
            patterns.push(self.pattern()?);
        }
        self.bump();
        let body = self.expr()?;
        let mut where_bindings = Vec::new();
        if self.peek_kind() == Some(TokenKind::KwWhere) {
            self.bump();
            let first = match self.peek() {
                Some(t) if t.kind == TokenKind::Id => t.col,
                _ => return self.error(&["where binding"]),
            };
            loop {
                self.layout_col = first;
                let bstart = self.start_pos();
                let bname = self.expect(TokenKind::Id)?.lexeme.clone();
                self.expect(TokenKind::Equals)?;
                let expr = self.expr()?;
                where_bindings.push(WhereBinding {
                    name: bname,
                    expr,
                    span: Span::new(bstart, self.prev_end),
                });
                // next binding starts a new line on exactly the binding column
                match (self.toks.get(self.idx), self.toks.get(self.idx + 1)) {
                    (Some(nl), Some(next)) if nl.kind == TokenKind::Newline && next.col == first && next.col > eq_col => {
                        self.idx += 1;
                    }
                    _ => break,
                }
            }
        }
        self.layout_col = eq_col;
        match self.peek() {
            None => {}
            Some(t) if t.kind == TokenKind::Newline => {}
            Some(_) => return self.error(&["operator", "end of line"]),
        }
        Ok(Equation {
            name,
            patterns,
            body,
            where_bindings,
            span: Span::new(start, self.prev_end),
        })
    }

    fn literal(&mut self) -> Result<(u32, Base), ParseError> {
        let t = self.peek().cloned();
        let parsed = match t.as_ref().map(|t| t.kind) {
            Some(TokenKind::Digit) => t.as_ref().unwrap().lexeme.parse::<u32>().ok().map(|v| (v, Base::Dec)),
            Some(TokenKind::HexDigit) => {
                u32::from_str_radix(&t.as_ref().unwrap().lexeme[2..], 16).ok().map(|v| (v, Base::Hex))
            }
            _ => return self.error(&["integer literal"]),
        };
        match parsed {
            Some(v) => {
                self.bump();
                Ok(v)
            }
            None => self.error(&["integer literal below 2^32"]),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let start = self.start_pos();
        match self.peek_kind() {
            Some(TokenKind::Id) => {
                let name = self.bump().lexeme.clone();
                if self.peek_kind() == Some(TokenKind::At) {
                    self.bump();
                    let inner = self.pattern()?;
                    Ok(Pattern::As(name, Box::new(inner), Span::new(start, self.prev_end)))
                } else {
                    Ok(Pattern::Var(name, Span::new(start, self.prev_end)))
                }
            }
            Some(TokenKind::Digit | TokenKind::HexDigit) => {
                let (v, _) = self.literal()?;
                Ok(Pattern::Lit(v, Span::new(start, self.prev_end)))
            }
            Some(TokenKind::LParen) => {
                self.bump();
                let mut items = vec![self.pattern()?];
                while self.peek_kind() == Some(TokenKind::Comma) {
                    self.bump();
                    items.push(self.pattern()?);
                }
                self.expect(TokenKind::RParen)?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    Ok(Pattern::Tuple(items, Span::new(start, self.prev_end)))
                }
            }
            _ => self.error(&["pattern"]),
        }
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        self.additive()
    }

    fn binary_level(
        &mut self,
        ops: &[(TokenKind, BinOp)],
        next: fn(&mut Self) -> Result<Expr, ParseError>,
    ) -> Result<Expr, ParseError> {
        let mut lhs = next(self)?;
        while let Some(kind) = self.peek_kind() {
            let Some(&(_, op)) = ops.iter().find(|(k, _)| *k == kind) else { break };
            self.bump();
            let rhs = next(self)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::BinOp(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[(TokenKind::Plus, BinOp::Add), (TokenKind::Minus, BinOp::Sub)], Self::bitwise)
    }

    fn bitwise(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[(TokenKind::BitAnd, BinOp::And), (TokenKind::BitOr, BinOp::Or)], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        self.binary_level(&[(TokenKind::Star, BinOp::Mul), (TokenKind::Slash, BinOp::Div)], Self::application)
    }

    fn starts_atom(&mut self) -> bool {
        matches!(
            self.peek_kind(),
            Some(TokenKind::Id | TokenKind::Digit | TokenKind::HexDigit | TokenKind::LParen)
        )
    }

    fn application(&mut self) -> Result<Expr, ParseError> {
        let start = self.start_pos();
        match self.peek_kind() {
            Some(TokenKind::KwXor) => {
                self.bump();
                let a = self.atom()?;
                let b = self.atom()?;
                Ok(Expr::new(ExprKind::Xor(Box::new(a), Box::new(b)), Span::new(start, self.prev_end)))
            }
            Some(k @ (TokenKind::KwShiftL | TokenKind::KwShiftR)) => {
                self.bump();
                let e = self.atom()?;
                let amount = self.shift_amount()?;
                let kind = if k == TokenKind::KwShiftL {
                    ExprKind::ShiftL(Box::new(e), amount)
                } else {
                    ExprKind::ShiftR(Box::new(e), amount)
                };
                Ok(Expr::new(kind, Span::new(start, self.prev_end)))
            }
            Some(TokenKind::Id) => {
                let next_starts_atom = matches!(
                    self.peek_second().map(|t| t.kind),
                    Some(TokenKind::Id | TokenKind::Digit | TokenKind::HexDigit | TokenKind::LParen)
                );
                if !next_starts_atom {
                    return self.atom();
                }
                let name = self.bump().lexeme.clone();
                let mut args = Vec::new();
                while self.starts_atom() {
                    args.push(self.atom()?);
                }
                Ok(Expr::new(ExprKind::Apply(name, args), Span::new(start, self.prev_end)))
            }
            _ => self.atom(),
        }
    }

    fn shift_amount(&mut self) -> Result<u32, ParseError> {
        if self.peek_kind() == Some(TokenKind::LParen) {
            self.bump();
            let v = match self.peek_kind() {
                Some(TokenKind::Digit | TokenKind::HexDigit) => self.literal()?.0,
                _ => return self.error(&["literal shift amount"]),
            };
            self.expect(TokenKind::RParen)?;
            return Ok(v);
        }
        match self.peek_kind() {
            Some(TokenKind::Digit | TokenKind::HexDigit) => Ok(self.literal()?.0),
            _ => self.error(&["literal shift amount"]),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.start_pos();
        match self.peek_kind() {
            Some(TokenKind::Id) => {
                let name = self.bump().lexeme.clone();
                Ok(Expr::new(ExprKind::Var(name), Span::new(start, self.prev_end)))
            }
            Some(TokenKind::Digit | TokenKind::HexDigit) => {
                let (v, base) = self.literal()?;
                Ok(Expr::new(ExprKind::IntLit(v, base), Span::new(start, self.prev_end)))
            }
            Some(TokenKind::LParen) => {
                self.bump();
                let mut items = vec![self.expr()?];
                while self.peek_kind() == Some(TokenKind::Comma) {
                    self.bump();
                    items.push(self.expr()?);
                }
                self.expect(TokenKind::RParen)?;
                if items.len() == 1 {
                    let mut e = items.pop().unwrap();
                    e.span = Span::new(start, self.prev_end);
                    Ok(e)
                } else {
                    Ok(Expr::new(ExprKind::Tuple(items), Span::new(start, self.prev_end)))
                }
            }
            _ => self.error(&["expression"]),
        }
    }
}
