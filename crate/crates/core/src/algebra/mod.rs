//! Relational graph algebra: plan nodes, their schemas and validation.
//!
//! The operator set is the classic bag algebra (selection, projection,
//! grouping, duplicate elimination, joins, unions) extended with graph
//! operators: get-vertices, expand (out / in / both, optionally over a hop
//! range), all-different and unwind, plus sorting and top for ordered results.

mod expr;
mod render;

use std::fmt;

use thiserror::Error;

pub use expr::{quote_name, AggFn, ArithOp, CmpOp, ScalarExpr};
pub use render::render;

pub use crate::graph::Direction;

/// Ordered attribute names of a relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Schema(Vec<String>);

impl Schema {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Schema(names.into_iter().map(Into::into).collect())
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| n == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    /// `self ∥ other`, skipping names already present.
    pub fn append(&self, other: &Schema) -> Schema {
        let mut out = self.0.clone();
        out.extend(other.0.iter().filter(|n| !self.contains(n)).cloned());
        Schema(out)
    }

    /// `self ∖ ⟨name⟩`, preserving the order of what remains.
    pub fn remove(&self, name: &str) -> Schema {
        Schema(self.0.iter().filter(|n| *n != name).cloned().collect())
    }

    pub fn push(&mut self, name: impl Into<String>) {
        self.0.push(name.into());
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(n)?;
        }
        f.write_str("⟩")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SortOrder {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortKey {
    pub expr: ScalarExpr,
    pub order: SortOrder,
}

/// An output column: expression and the attribute name it is stored under.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamedExpr {
    pub expr: ScalarExpr,
    pub name: String,
}

impl NamedExpr {
    pub fn new(expr: ScalarExpr, name: impl Into<String>) -> Self {
        NamedExpr {
            expr,
            name: name.into(),
        }
    }

    /// Item named after its own text, e.g. `p.name`.
    pub fn unaliased(expr: ScalarExpr) -> Self {
        let name = expr.plain_text();
        NamedExpr { expr, name }
    }
}

/// Parameters of the expand operator.
///
/// `min == max == Some(1)` is the single-hop form binding `edge` to one edge;
/// every other range binds `edge` to the list of traversed edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Expand {
    pub input: Box<AlgebraNode>,
    pub direction: Direction,
    pub from: String,
    pub to: String,
    pub to_labels: Vec<String>,
    pub edge: String,
    pub types: Vec<String>,
    pub min: u32,
    /// `None` is an unbounded upper limit.
    pub max: Option<u32>,
}

impl Expand {
    pub fn is_single_hop(&self) -> bool {
        self.min == 1 && self.max == Some(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AlgebraNode {
    GetVertices {
        var: String,
        labels: Vec<String>,
    },
    /// The relation holding exactly one empty tuple.
    UnitTable,
    Expand(Expand),
    AllDifferent {
        input: Box<AlgebraNode>,
        vars: Vec<String>,
    },
    Unwind {
        input: Box<AlgebraNode>,
        expr: ScalarExpr,
        alias: String,
    },
    Selection {
        input: Box<AlgebraNode>,
        predicate: ScalarExpr,
    },
    Projection {
        input: Box<AlgebraNode>,
        items: Vec<NamedExpr>,
    },
    Grouping {
        input: Box<AlgebraNode>,
        criteria: Vec<ScalarExpr>,
        items: Vec<NamedExpr>,
    },
    DuplicateElimination {
        input: Box<AlgebraNode>,
    },
    Sort {
        input: Box<AlgebraNode>,
        keys: Vec<SortKey>,
    },
    Top {
        input: Box<AlgebraNode>,
        skip: u64,
        /// `None` keeps every remaining row.
        limit: Option<u64>,
    },
    Union(Box<AlgebraNode>, Box<AlgebraNode>),
    BagUnion(Box<AlgebraNode>, Box<AlgebraNode>),
    Join(Box<AlgebraNode>, Box<AlgebraNode>),
    LeftOuterJoin {
        left: Box<AlgebraNode>,
        right: Box<AlgebraNode>,
        condition: Option<ScalarExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("{operator}: unknown attribute `{name}` (input schema {schema})")]
    UnknownAttribute {
        operator: &'static str,
        name: String,
        schema: String,
    },
    #[error("{operator}: attribute `{name}` is already bound")]
    AlreadyBound {
        operator: &'static str,
        name: String,
    },
    #[error("{operator}: duplicate output attribute `{name}`")]
    DuplicateOutput {
        operator: &'static str,
        name: String,
    },
    #[error("{operator}: schema mismatch between {left} and {right}")]
    SchemaMismatch {
        operator: &'static str,
        left: String,
        right: String,
    },
    #[error("{operator}: aggregate `{expr}` is only allowed as a grouping output")]
    MisplacedAggregate {
        operator: &'static str,
        expr: String,
    },
    #[error("Grouping: output `{expr}` is neither an aggregate nor a grouping criterion")]
    UngroupedOutput { expr: String },
    #[error("Grouping: nested aggregate in `{expr}`")]
    NestedAggregate { expr: String },
    #[error("Expand: min hops {min} exceeds max hops {max}")]
    BadRange { min: u32, max: u32 },
}

impl AlgebraNode {
    pub fn boxed(self) -> Box<AlgebraNode> {
        Box::new(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlgebraNode::GetVertices { .. } => "GetVertices",
            AlgebraNode::UnitTable => "UnitTable",
            AlgebraNode::Expand(_) => "Expand",
            AlgebraNode::AllDifferent { .. } => "AllDifferent",
            AlgebraNode::Unwind { .. } => "Unwind",
            AlgebraNode::Selection { .. } => "Selection",
            AlgebraNode::Projection { .. } => "Projection",
            AlgebraNode::Grouping { .. } => "Grouping",
            AlgebraNode::DuplicateElimination { .. } => "DuplicateElimination",
            AlgebraNode::Sort { .. } => "Sort",
            AlgebraNode::Top { .. } => "Top",
            AlgebraNode::Union(..) => "Union",
            AlgebraNode::BagUnion(..) => "BagUnion",
            AlgebraNode::Join(..) => "Join",
            AlgebraNode::LeftOuterJoin { .. } => "LeftOuterJoin",
        }
    }

    pub fn children(&self) -> Vec<&AlgebraNode> {
        match self {
            AlgebraNode::GetVertices { .. } | AlgebraNode::UnitTable => vec![],
            AlgebraNode::Expand(x) => vec![&x.input],
            AlgebraNode::AllDifferent { input, .. }
            | AlgebraNode::Unwind { input, .. }
            | AlgebraNode::Selection { input, .. }
            | AlgebraNode::Projection { input, .. }
            | AlgebraNode::Grouping { input, .. }
            | AlgebraNode::DuplicateElimination { input }
            | AlgebraNode::Sort { input, .. }
            | AlgebraNode::Top { input, .. } => vec![input],
            AlgebraNode::Union(l, r) | AlgebraNode::BagUnion(l, r) | AlgebraNode::Join(l, r) => {
                vec![l, r]
            }
            AlgebraNode::LeftOuterJoin { left, right, .. } => vec![left, right],
        }
    }

    /// Result schema, computed without touching any graph.
    pub fn schema(&self) -> Result<Schema, PlanError> {
        let mut diags = Vec::new();
        match check(self, &mut diags) {
            Some(s) if diags.is_empty() => Ok(s),
            _ => Err(diags.swap_remove(0)),
        }
    }

    /// Every problem in the tree; empty when the plan is well formed.
    pub fn validate(&self) -> Vec<PlanError> {
        let mut diags = Vec::new();
        check(self, &mut diags);
        diags
    }
}

/// Free-function form of [`AlgebraNode::schema`].
pub fn schema_of(node: &AlgebraNode) -> Result<Schema, PlanError> {
    node.schema()
}

/// Free-function form of [`AlgebraNode::validate`].
pub fn validate(node: &AlgebraNode) -> Vec<PlanError> {
    node.validate()
}

fn check_expr(
    operator: &'static str,
    e: &ScalarExpr,
    schema: &Schema,
    allow_agg: bool,
    diags: &mut Vec<PlanError>,
) {
    for v in e.referenced_vars() {
        if !schema.contains(v) {
            diags.push(PlanError::UnknownAttribute {
                operator,
                name: v.to_string(),
                schema: schema.to_string(),
            });
        }
    }
    if !allow_agg && e.contains_aggregate() {
        diags.push(PlanError::MisplacedAggregate {
            operator,
            expr: e.to_string(),
        });
    }
}

fn outputs(operator: &'static str, items: &[NamedExpr], diags: &mut Vec<PlanError>) -> Schema {
    let mut s = Schema::default();
    for it in items {
        if s.contains(&it.name) {
            diags.push(PlanError::DuplicateOutput {
                operator,
                name: it.name.clone(),
            });
        } else {
            s.push(it.name.clone());
        }
    }
    s
}

fn check(node: &AlgebraNode, diags: &mut Vec<PlanError>) -> Option<Schema> {
    let op = node.name();
    match node {
        AlgebraNode::GetVertices { var, .. } => Some(Schema::new([var.clone()])),
        AlgebraNode::UnitTable => Some(Schema::default()),
        AlgebraNode::Expand(x) => {
            let input = check(&x.input, diags)?;
            if !input.contains(&x.from) {
                diags.push(PlanError::UnknownAttribute {
                    operator: op,
                    name: x.from.clone(),
                    schema: input.to_string(),
                });
            }
            for n in [&x.edge, &x.to] {
                if input.contains(n) {
                    diags.push(PlanError::AlreadyBound {
                        operator: op,
                        name: n.clone(),
                    });
                }
            }
            if x.edge == x.to {
                diags.push(PlanError::DuplicateOutput {
                    operator: op,
                    name: x.to.clone(),
                });
            }
            if let Some(max) = x.max {
                if x.min > max {
                    diags.push(PlanError::BadRange { min: x.min, max });
                }
            }
            let mut s = input;
            s.push(x.edge.clone());
            s.push(x.to.clone());
            Some(s)
        }
        AlgebraNode::AllDifferent { input, vars } => {
            let s = check(input, diags)?;
            for v in vars {
                if !s.contains(v) {
                    diags.push(PlanError::UnknownAttribute {
                        operator: op,
                        name: v.clone(),
                        schema: s.to_string(),
                    });
                }
            }
            Some(s)
        }
        AlgebraNode::Unwind { input, expr, alias } => {
            let s = check(input, diags)?;
            check_expr(op, expr, &s, false, diags);
            let mut out = match expr {
                ScalarExpr::Var(xs) => s.remove(xs),
                _ => s,
            };
            if out.contains(alias) {
                diags.push(PlanError::AlreadyBound {
                    operator: op,
                    name: alias.clone(),
                });
            }
            out.push(alias.clone());
            Some(out)
        }
        AlgebraNode::Selection { input, predicate } => {
            let s = check(input, diags)?;
            check_expr(op, predicate, &s, false, diags);
            Some(s)
        }
        AlgebraNode::Projection { input, items } => {
            let s = check(input, diags)?;
            for it in items {
                check_expr(op, &it.expr, &s, false, diags);
            }
            Some(outputs(op, items, diags))
        }
        AlgebraNode::Grouping {
            input,
            criteria,
            items,
        } => {
            let s = check(input, diags)?;
            for c in criteria {
                check_expr(op, c, &s, false, diags);
            }
            for it in items {
                check_expr(op, &it.expr, &s, true, diags);
                match &it.expr {
                    ScalarExpr::Agg { arg: Some(a), .. } if a.contains_aggregate() => {
                        diags.push(PlanError::NestedAggregate {
                            expr: it.expr.to_string(),
                        })
                    }
                    ScalarExpr::Agg { .. } => {}
                    e if e.contains_aggregate() => diags.push(PlanError::NestedAggregate {
                        expr: e.to_string(),
                    }),
                    e if !criteria.contains(e) => diags.push(PlanError::UngroupedOutput {
                        expr: e.to_string(),
                    }),
                    _ => {}
                }
            }
            Some(outputs(op, items, diags))
        }
        AlgebraNode::DuplicateElimination { input } | AlgebraNode::Top { input, .. } => {
            check(input, diags)
        }
        AlgebraNode::Sort { input, keys } => {
            let s = check(input, diags)?;
            for k in keys {
                check_expr(op, &k.expr, &s, false, diags);
            }
            Some(s)
        }
        AlgebraNode::Union(l, r) | AlgebraNode::BagUnion(l, r) => {
            let ls = check(l, diags);
            let rs = check(r, diags);
            let (ls, rs) = (ls?, rs?);
            if ls != rs {
                diags.push(PlanError::SchemaMismatch {
                    operator: op,
                    left: ls.to_string(),
                    right: rs.to_string(),
                });
            }
            Some(ls)
        }
        AlgebraNode::Join(l, r) => {
            let ls = check(l, diags);
            let rs = check(r, diags);
            Some(ls?.append(&rs?))
        }
        AlgebraNode::LeftOuterJoin {
            left,
            right,
            condition,
        } => {
            let ls = check(left, diags);
            let rs = check(right, diags);
            let s = ls?.append(&rs?);
            if let Some(c) = condition {
                check_expr(op, c, &s, false, diags);
            }
            Some(s)
        }
    }
}
