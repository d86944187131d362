//! Recursive-descent parser for the supported openCypher fragment.
//!
//! A query is a `UNION [ALL]`-separated list of single queries. Each single
//! query is a sequence of query parts, and each part's clauses must follow
//! `MATCH* ((WITH UNWIND?) | UNWIND | RETURN)`, with `RETURN` only in the last
//! part. Violations of that shape are reported as structure errors; anything
//! else the grammar rejects is a syntax error. Keywords are case-insensitive,
//! identifiers are not.

mod ast;
mod lexer;

use thiserror::Error;

pub use ast::*;

use crate::algebra::{AggFn, ArithOp, CmpOp, SortOrder};
use crate::graph::Direction;
use crate::value::Value;
use lexer::{tokenize, Tok, Token};

/// 1-based line and column plus the byte offset into the query text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Structure,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at line {line}, column {column}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl ParseError {
    fn new(kind: ParseErrorKind, message: impl Into<String>, pos: Pos) -> Self {
        ParseError {
            kind,
            message: message.into(),
            line: pos.line,
            column: pos.column,
            offset: pos.offset,
        }
    }

    pub(crate) fn syntax(message: impl Into<String>, pos: Pos) -> Self {
        Self::new(ParseErrorKind::Syntax, message, pos)
    }

    fn structure(message: impl Into<String>, pos: Pos) -> Self {
        Self::new(ParseErrorKind::Structure, message, pos)
    }
}

type PResult<T> = Result<T, ParseError>;

const RESERVED: &[&str] = &[
    "MATCH",
    "OPTIONAL",
    "WHERE",
    "WITH",
    "UNWIND",
    "RETURN",
    "ORDER",
    "BY",
    "SKIP",
    "LIMIT",
    "UNION",
    "ALL",
    "AND",
    "OR",
    "NOT",
    "DISTINCT",
    "AS",
    "ASC",
    "DESC",
    "ASCENDING",
    "DESCENDING",
    "IS",
    "NULL",
    "TRUE",
    "FALSE",
];

const CLAUSE_KEYWORDS: &[&str] = &["MATCH", "OPTIONAL", "WITH", "UNWIND", "RETURN"];

/// Parses a complete query.
pub fn parse(text: &str) -> Result<QueryAst, ParseError> {
    let mut p = Parser::new(text)?;
    let ast = p.query()?;
    Ok(ast)
}

/// Parses a standalone expression.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    i: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> PResult<Self> {
        Ok(Parser {
            src,
            toks: tokenize(src)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let idx = (self.i + n).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    /// End offset of the last consumed token.
    fn last_end(&self) -> usize {
        if self.i == 0 {
            0
        } else {
            self.toks[self.i - 1].end
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            let want = if t == Tok::Eof {
                "end of input".to_string()
            } else {
                format!("`{}`", t.symbol())
            };
            Err(self.unexpected(&want))
        }
    }

    fn unexpected(&self, want: &str) -> ParseError {
        ParseError::syntax(
            format!("expected {want}, found {}", self.peek().describe()),
            self.pos(),
        )
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn at_clause_keyword(&self) -> Option<String> {
        match self.peek() {
            Tok::Ident(s) if CLAUSE_KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => {
                Some(s.to_ascii_uppercase())
            }
            _ => None,
        }
    }

    /// Variable name: a non-reserved identifier or a quoted one.
    fn variable(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.advance();
                Ok(s)
            }
            Tok::Quoted(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected("a variable name")),
        }
    }

    /// Label, type or property key: any identifier, reserved or not.
    fn symbolic_name(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Quoted(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn at_variable(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !is_reserved(s),
            Tok::Quoted(_) => true,
            _ => false,
        }
    }

    // ---- query structure ------------------------------------------------

    fn query(&mut self) -> PResult<QueryAst> {
        let mut singles = vec![self.single_query()?];
        let mut combinators = Vec::new();
        while self.eat_kw("UNION") {
            combinators.push(if self.eat_kw("ALL") {
                UnionKind::UnionAll
            } else {
                UnionKind::Union
            });
            singles.push(self.single_query()?);
        }
        if let Some(kw) = self.at_clause_keyword() {
            return Err(ParseError::structure(
                format!("{kw} cannot follow RETURN; RETURN must end a single query"),
                self.pos(),
            ));
        }
        self.expect(Tok::Eof)?;
        Ok(QueryAst {
            singles,
            combinators,
        })
    }

    fn single_query(&mut self) -> PResult<SingleQuery> {
        let mut parts = Vec::new();
        loop {
            let mut matches = Vec::new();
            while self.at_kw("MATCH") || self.at_kw("OPTIONAL") {
                matches.push(self.match_clause()?);
            }
            if self.eat_kw("RETURN") {
                let body = self.projection_body()?;
                parts.push(QueryPart {
                    matches,
                    tail: PartTail::Return(body),
                });
                return Ok(SingleQuery { parts });
            } else if self.eat_kw("WITH") {
                let body = self.projection_body()?;
                let where_ = if self.eat_kw("WHERE") {
                    Some(self.expr()?)
                } else {
                    None
                };
                let unwind = if self.eat_kw("UNWIND") {
                    Some(self.unwind_item()?)
                } else {
                    None
                };
                parts.push(QueryPart {
                    matches,
                    tail: PartTail::With {
                        body,
                        where_,
                        unwind,
                    },
                });
            } else if self.eat_kw("UNWIND") {
                let item = self.unwind_item()?;
                parts.push(QueryPart {
                    matches,
                    tail: PartTail::UnwindOnly(item),
                });
            } else if (*self.peek() == Tok::Eof || self.at_kw("UNION"))
                && !(parts.is_empty() && matches.is_empty())
            {
                return Err(ParseError::structure(
                    "a single query must end with RETURN",
                    self.pos(),
                ));
            } else if self.at_kw("WHERE") && !matches.is_empty() {
                return Err(ParseError::structure(
                    "WHERE may only appear once, directly after MATCH or WITH",
                    self.pos(),
                ));
            } else {
                return Err(self.unexpected("MATCH, OPTIONAL MATCH, WITH, UNWIND or RETURN"));
            }
        }
    }

    fn match_clause(&mut self) -> PResult<MatchClause> {
        let optional = self.eat_kw("OPTIONAL");
        self.expect_kw("MATCH")?;
        let mut patterns = vec![self.pattern_part()?];
        while self.eat(&Tok::Comma) {
            patterns.push(self.pattern_part()?);
        }
        let where_ = if self.eat_kw("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(MatchClause {
            optional,
            patterns,
            where_,
        })
    }

    fn projection_body(&mut self) -> PResult<ProjectionBody> {
        let distinct = self.eat_kw("DISTINCT");
        let mut items = vec![self.return_item()?];
        while self.eat(&Tok::Comma) {
            items.push(self.return_item()?);
        }
        let mut order_by = Vec::new();
        if self.at_kw("ORDER") {
            self.advance();
            self.expect_kw("BY")?;
            loop {
                let start = self.pos().offset;
                let expr = self.expr()?;
                let text = self.src[start..self.last_end()].to_string();
                let order = if self.eat_kw("DESC") || self.eat_kw("DESCENDING") {
                    SortOrder::Desc
                } else {
                    if !self.eat_kw("ASC") {
                        self.eat_kw("ASCENDING");
                    }
                    SortOrder::Asc
                };
                order_by.push(OrderItem { expr, order, text });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let skip = if self.eat_kw("SKIP") {
            Some(self.count_literal("SKIP")?)
        } else {
            None
        };
        let limit = if self.eat_kw("LIMIT") {
            Some(self.count_literal("LIMIT")?)
        } else {
            None
        };
        Ok(ProjectionBody {
            distinct,
            items,
            order_by,
            skip,
            limit,
        })
    }

    fn count_literal(&mut self, what: &str) -> PResult<u64> {
        match *self.peek() {
            Tok::Int(n) if n >= 0 => {
                self.advance();
                Ok(n as u64)
            }
            _ => Err(self.unexpected(&format!("a non-negative integer after {what}"))),
        }
    }

    fn return_item(&mut self) -> PResult<ReturnItem> {
        if *self.peek() == Tok::Star {
            return Err(ParseError::syntax(
                "`*` projections are not supported",
                self.pos(),
            ));
        }
        let start = self.pos().offset;
        let expr = self.expr()?;
        let text = self.src[start..self.last_end()].to_string();
        let alias = if self.eat_kw("AS") {
            Some(self.variable()?)
        } else {
            None
        };
        Ok(ReturnItem { expr, alias, text })
    }

    fn unwind_item(&mut self) -> PResult<UnwindItem> {
        let expr = self.expr()?;
        self.expect_kw("AS")?;
        let alias = self.variable()?;
        Ok(UnwindItem { expr, alias })
    }

    // ---- patterns -------------------------------------------------------

    fn looks_like_rel(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1)),
            (Tok::Minus, Tok::LBracket | Tok::Minus) | (Tok::Lt, Tok::Minus)
        )
    }

    fn pattern_part(&mut self) -> PResult<PatternPart> {
        let mut nodes = vec![self.node_pattern()?];
        let mut rels = Vec::new();
        while self.looks_like_rel() {
            rels.push(self.rel_pattern()?);
            nodes.push(self.node_pattern()?);
        }
        Ok(PatternPart { nodes, rels })
    }

    fn node_pattern(&mut self) -> PResult<NodePattern> {
        self.expect(Tok::LParen)?;
        let var = if self.at_variable() {
            Some(self.variable()?)
        } else {
            None
        };
        let mut labels = Vec::new();
        while self.eat(&Tok::Colon) {
            labels.push(self.symbolic_name("a label")?);
        }
        if *self.peek() == Tok::LBrace {
            return Err(ParseError::syntax(
                "property maps in patterns are not supported; use WHERE",
                self.pos(),
            ));
        }
        self.expect(Tok::RParen)?;
        Ok(NodePattern { var, labels })
    }

    fn rel_pattern(&mut self) -> PResult<RelPattern> {
        let left = self.eat(&Tok::Lt);
        self.expect(Tok::Minus)?;
        let mut var = None;
        let mut types = Vec::new();
        let mut range = None;
        if self.eat(&Tok::LBracket) {
            if self.at_variable() {
                var = Some(self.variable()?);
            }
            if self.eat(&Tok::Colon) {
                types.push(self.symbolic_name("a relationship type")?);
                while self.eat(&Tok::Pipe) {
                    self.eat(&Tok::Colon);
                    types.push(self.symbolic_name("a relationship type")?);
                }
            }
            if self.eat(&Tok::Star) {
                range = Some(self.range()?);
            }
            if *self.peek() == Tok::LBrace {
                return Err(ParseError::syntax(
                    "property maps in patterns are not supported; use WHERE",
                    self.pos(),
                ));
            }
            self.expect(Tok::RBracket)?;
        }
        self.expect(Tok::Minus)?;
        let right = self.eat(&Tok::Gt);
        let direction = match (left, right) {
            (true, false) => Direction::In,
            (false, true) => Direction::Out,
            _ => Direction::Both,
        };
        Ok(RelPattern {
            var,
            direction,
            types,
            range,
        })
    }

    /// After `*`: `` | n | m.. | ..n | m..n``.
    fn range(&mut self) -> PResult<(u32, Option<u32>)> {
        let bound = |p: &mut Self| -> PResult<Option<u32>> {
            match *p.peek() {
                Tok::Int(n) => {
                    let pos = p.pos();
                    p.advance();
                    u32::try_from(n)
                        .map(Some)
                        .map_err(|_| ParseError::syntax("hop bound out of range", pos))
                }
                _ => Ok(None),
            }
        };
        let lo = bound(self)?;
        if self.eat(&Tok::DotDot) {
            let hi = bound(self)?;
            Ok((lo.unwrap_or(1), hi))
        } else {
            match lo {
                Some(n) => Ok((n, Some(n))),
                None => Ok((1, None)),
            }
        }
    }

    // ---- expressions ----------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("OR") {
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("AND") {
            let rhs = self.not_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("NOT") {
            Ok(Expr::Not(Box::new(self.not_expr()?)))
        } else {
            self.comparison()
        }
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => {
                if self.at_kw("IS") {
                    self.advance();
                    let negated = self.eat_kw("NOT");
                    self.expect_kw("NULL")?;
                    return Ok(Expr::IsNull {
                        expr: Box::new(lhs),
                        negated,
                    });
                }
                return Ok(lhs);
            }
        };
        self.advance();
        let rhs = self.additive()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                Tok::Percent => ArithOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Expr::Literal(Value::Int(i)) => Expr::Literal(Value::Int(-i)),
                Expr::Literal(Value::Float(f)) => Expr::Literal(Value::Float(-f)),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let atom = self.atom()?;
        match (&atom, self.peek()) {
            (Expr::Var(v), Tok::Dot) => {
                let var = v.clone();
                self.advance();
                let key = self.symbolic_name("a property name")?;
                if *self.peek() == Tok::Dot {
                    return Err(ParseError::syntax(
                        "nested property access is not supported",
                        self.pos(),
                    ));
                }
                Ok(Expr::Prop { var, key })
            }
            (Expr::Var(v), Tok::Colon) => {
                let var = v.clone();
                let mut labels = Vec::new();
                while self.eat(&Tok::Colon) {
                    labels.push(self.symbolic_name("a label")?);
                }
                Ok(Expr::HasLabels { var, labels })
            }
            _ => Ok(atom),
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Literal(Value::Int(i)))
            }
            Tok::Float(f) => {
                self.advance();
                Ok(Expr::Literal(Value::Float(f)))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Value::Text(s)))
            }
            Tok::LParen => self.paren_or_pattern(),
            Tok::Quoted(s) => {
                self.advance();
                Ok(Expr::Var(s))
            }
            Tok::Ident(s) => {
                if s.eq_ignore_ascii_case("TRUE") {
                    self.advance();
                    return Ok(Expr::Literal(Value::Bool(true)));
                }
                if s.eq_ignore_ascii_case("FALSE") {
                    self.advance();
                    return Ok(Expr::Literal(Value::Bool(false)));
                }
                if s.eq_ignore_ascii_case("NULL") {
                    self.advance();
                    return Ok(Expr::Literal(Value::Null));
                }
                if *self.peek_at(1) == Tok::LParen {
                    return self.call(&s, pos);
                }
                if is_reserved(&s) {
                    return Err(self.unexpected("an expression"));
                }
                self.advance();
                Ok(Expr::Var(s))
            }
            Tok::LBracket => Err(ParseError::syntax("list literals are not supported", pos)),
            Tok::LBrace => Err(ParseError::syntax("map literals are not supported", pos)),
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn call(&mut self, name: &str, pos: Pos) -> PResult<Expr> {
        let func = AggFn::from_name(name)
            .ok_or_else(|| ParseError::syntax(format!("unknown function `{name}`"), pos))?;
        self.advance();
        self.expect(Tok::LParen)?;
        if func == AggFn::Count && *self.peek() == Tok::Star {
            self.advance();
            self.expect(Tok::RParen)?;
            return Ok(Expr::Agg {
                func,
                distinct: false,
                arg: None,
            });
        }
        let distinct = self.eat_kw("DISTINCT");
        let arg = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(Expr::Agg {
            func,
            distinct,
            arg: Some(Box::new(arg)),
        })
    }

    /// `(` starts either a pattern predicate, a `(v:Label)` label test, or a
    /// parenthesised expression. Patterns are tried first and abandoned on
    /// failure.
    fn paren_or_pattern(&mut self) -> PResult<Expr> {
        let save = self.i;
        if let Ok(part) = self.pattern_part() {
            if !part.rels.is_empty() {
                return Ok(Expr::Pattern(part));
            }
            if let [NodePattern {
                var: Some(var),
                labels,
            }] = part.nodes.as_slice()
            {
                if !labels.is_empty() {
                    return Ok(Expr::HasLabels {
                        var: var.clone(),
                        labels: labels.clone(),
                    });
                }
            }
        }
        self.i = save;
        self.expect(Tok::LParen)?;
        let e = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(e)
    }
}

fn is_reserved(s: &str) -> bool {
    RESERVED.iter().any(|k| s.eq_ignore_ascii_case(k))
}
