//! Surface syntax tree of the supported openCypher fragment.

use crate::algebra::{AggFn, ArithOp, CmpOp, SortOrder};
use crate::graph::Direction;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnionKind {
    Union,
    UnionAll,
}

/// `single (UNION [ALL] single)*`; `combinators.len() == singles.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub singles: Vec<SingleQuery>,
    pub combinators: Vec<UnionKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleQuery {
    pub parts: Vec<QueryPart>,
}

/// `MATCH* ((WITH UNWIND?) | UNWIND | RETURN)`
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPart {
    pub matches: Vec<MatchClause>,
    pub tail: PartTail,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartTail {
    With {
        body: ProjectionBody,
        where_: Option<Expr>,
        unwind: Option<UnwindItem>,
    },
    UnwindOnly(UnwindItem),
    Return(ProjectionBody),
}

/// Shared body of `WITH` and `RETURN`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectionBody {
    pub distinct: bool,
    pub items: Vec<ReturnItem>,
    pub order_by: Vec<OrderItem>,
    pub skip: Option<u64>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnItem {
    pub expr: Expr,
    pub alias: Option<String>,
    /// Source text of the expression, the column name when unaliased.
    pub text: String,
}

impl ReturnItem {
    pub fn output_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub order: SortOrder,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnwindItem {
    pub expr: Expr,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchClause {
    pub optional: bool,
    pub patterns: Vec<PatternPart>,
    pub where_: Option<Expr>,
}

/// `n` node patterns interleaved with `n - 1` relationship patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternPart {
    pub nodes: Vec<NodePattern>,
    pub rels: Vec<RelPattern>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodePattern {
    pub var: Option<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelPattern {
    pub var: Option<String>,
    pub direction: Direction,
    pub types: Vec<String>,
    /// `None` for a single hop; otherwise `(min, max)` with `None` unbounded.
    pub range: Option<(u32, Option<u32>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    Var(String),
    Prop {
        var: String,
        key: String,
    },
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    HasLabels {
        var: String,
        labels: Vec<String>,
    },
    /// Aggregate call; `arg: None` is `count(*)`.
    Agg {
        func: AggFn,
        distinct: bool,
        arg: Option<Box<Expr>>,
    },
    /// A relationship pattern used as a boolean.
    Pattern(PatternPart),
}

impl Expr {
    pub fn contains_aggregate(&self) -> bool {
        match self {
            Expr::Agg { .. } => true,
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) | Expr::And(l, r) | Expr::Or(l, r) => {
                l.contains_aggregate() || r.contains_aggregate()
            }
            Expr::Neg(e) | Expr::Not(e) | Expr::IsNull { expr: e, .. } => e.contains_aggregate(),
            _ => false,
        }
    }

    pub fn contains_pattern(&self) -> bool {
        match self {
            Expr::Pattern(_) => true,
            Expr::Arith(_, l, r) | Expr::Cmp(_, l, r) | Expr::And(l, r) | Expr::Or(l, r) => {
                l.contains_pattern() || r.contains_pattern()
            }
            Expr::Neg(e) | Expr::Not(e) | Expr::IsNull { expr: e, .. } => e.contains_pattern(),
            Expr::Agg { arg, .. } => arg.as_ref().is_some_and(|a| a.contains_pattern()),
            _ => false,
        }
    }
}
