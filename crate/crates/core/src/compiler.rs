//! Lowering of the query AST to relational graph algebra.
//!
//! Compilation is bottom-up. Each pattern becomes a get-vertices followed by a
//! chain of expands. Comma-separated patterns of one `MATCH` are natural-joined
//! and guarded by a single all-different over that clause's edges. Clauses are
//! combined into a left-deep join (left outer join for `OPTIONAL MATCH`), and
//! the tree of the preceding query parts is the leftmost operand. On top of the
//! match block come grouping or projection, duplicate elimination, sorting,
//! top, the `WITH ... WHERE` selection and finally `UNWIND`. Single queries are
//! combined into a left-deep tree of unions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{
    AggFn, AlgebraNode, CmpOp, Expand, NamedExpr, PlanError, ScalarExpr, Schema, SortKey,
};
use crate::parser::{
    Expr, MatchClause, PartTail, PatternPart, ProjectionBody, QueryAst, QueryPart, SingleQuery,
    UnionKind, UnwindItem,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("SemanticError: Illegal use of aggregation function in `{0}`")]
    IllegalAggregation(String),
    #[error("all single queries of a UNION must return the same columns: {left} vs {right}")]
    UnionSchemaMismatch { left: String, right: String },
    #[error("variable `{name}` is a {bound} and cannot be used as a {used}")]
    KindConflict {
        name: String,
        bound: &'static str,
        used: &'static str,
    },
    #[error("relationship variable `{0}` is declared twice in one MATCH")]
    DuplicateEdge(String),
    #[error("variable `{0}` is not defined")]
    UnknownVariable(String),
    #[error("variable `{0}` is already defined")]
    AlreadyDefined(String),
    #[error("ORDER BY `{0}` does not refer to a returned column")]
    OrderByUnknown(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(#[from] PlanError),
}

type CResult<T> = Result<T, CompileError>;

/// What a variable is bound to; used to reject reuse of a name in an
/// incompatible position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Vertex,
    Edge,
    EdgeList,
    Value,
}

impl VarKind {
    fn describe(self) -> &'static str {
        match self {
            VarKind::Vertex => "node",
            VarKind::Edge => "relationship",
            VarKind::EdgeList => "relationship list",
            VarKind::Value => "value",
        }
    }
}

/// Compiles a full query and checks that the resulting plan validates.
pub fn compile(ast: &QueryAst) -> CResult<AlgebraNode> {
    let mut c = Compiler::new();
    let mut plan = c.compile_single(&ast.singles[0])?;
    for (single, kind) in ast.singles[1..].iter().zip(&ast.combinators) {
        let mut right = c.compile_single(single)?;
        let (ls, rs) = (plan.schema()?, right.schema()?);
        // same names in any order; a projection lines the right side up
        let names = |s: &Schema| {
            let mut n = s.names().to_vec();
            n.sort();
            n
        };
        if names(&ls) != names(&rs) {
            return Err(CompileError::UnionSchemaMismatch {
                left: ls.to_string(),
                right: rs.to_string(),
            });
        }
        if ls != rs {
            let items = ls
                .names()
                .iter()
                .map(|n| NamedExpr::new(ScalarExpr::var(n.as_str()), n.as_str()))
                .collect();
            right = AlgebraNode::Projection {
                input: right.boxed(),
                items,
            };
        }
        plan = match kind {
            UnionKind::Union => AlgebraNode::Union(plan.boxed(), right.boxed()),
            UnionKind::UnionAll => AlgebraNode::BagUnion(plan.boxed(), right.boxed()),
        };
    }
    if let Some(err) = plan.validate().into_iter().next() {
        return Err(err.into());
    }
    Ok(plan)
}

/// Grouping criteria of a `RETURN`/`WITH` item list: every item without an
/// aggregate, in order of first appearance. Items whose outermost node is an
/// aggregate contribute nothing; an aggregate anywhere else is an error.
pub fn determine_grouping_criteria(items: &[ScalarExpr]) -> CResult<Vec<ScalarExpr>> {
    let mut criteria: Vec<ScalarExpr> = Vec::new();
    for e in items {
        match e {
            ScalarExpr::Agg { arg, .. } => {
                if arg.as_ref().is_some_and(|a| a.contains_aggregate()) {
                    return Err(CompileError::IllegalAggregation(e.to_string()));
                }
            }
            e if e.contains_aggregate() => {
                return Err(CompileError::IllegalAggregation(e.to_string()))
            }
            e => {
                if !criteria.contains(e) {
                    criteria.push(e.clone());
                }
            }
        }
    }
    Ok(criteria)
}

/// Compiler state: fresh-name counters (shared by the whole query) and the
/// variables visible at the current point of a single query.
#[derive(Debug, Default)]
pub struct Compiler {
    next_vertex: u32,
    next_edge: u32,
    scope: BTreeMap<String, VarKind>,
}

impl Compiler {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh_vertex(&mut self) -> String {
        self.next_vertex += 1;
        format!("_v{}", self.next_vertex)
    }

    fn fresh_edge(&mut self) -> String {
        self.next_edge += 1;
        format!("_e{}", self.next_edge)
    }

    pub fn compile_single(&mut self, single: &SingleQuery) -> CResult<AlgebraNode> {
        self.scope.clear();
        let mut prior = None;
        for part in &single.parts {
            prior = Some(self.compile_part(part, prior)?);
        }
        Ok(prior.expect("a single query has at least one part"))
    }

    /// Compiles one query part on top of the tree of the preceding parts.
    pub fn compile_part(
        &mut self,
        part: &QueryPart,
        prior: Option<AlgebraNode>,
    ) -> CResult<AlgebraNode> {
        let tree = self.compile_match_block(&part.matches, prior)?;
        match &part.tail {
            PartTail::Return(body) => self.compile_projection(tree, body),
            PartTail::With {
                body,
                where_,
                unwind,
            } => {
                let mut tree = self.compile_projection(tree, body)?;
                if let Some(cond) = where_ {
                    tree = self.apply_where(tree, cond)?;
                }
                if let Some(item) = unwind {
                    tree = self.compile_unwind(tree, item)?;
                }
                Ok(tree)
            }
            PartTail::UnwindOnly(item) => self.compile_unwind(tree, item),
        }
    }

    fn compile_unwind(&mut self, tree: AlgebraNode, item: &UnwindItem) -> CResult<AlgebraNode> {
        let expr = self.scalar(&item.expr)?;
        if expr.contains_aggregate() {
            return Err(CompileError::IllegalAggregation(expr.to_string()));
        }
        if self.scope.contains_key(&item.alias) {
            return Err(CompileError::AlreadyDefined(item.alias.clone()));
        }
        if let ScalarExpr::Var(xs) = &expr {
            self.scope.remove(xs);
        }
        self.scope.insert(item.alias.clone(), VarKind::Value);
        Ok(AlgebraNode::Unwind {
            input: tree.boxed(),
            expr,
            alias: item.alias.clone(),
        })
    }

    /// Grouping or projection, then `DISTINCT`, `ORDER BY` and `SKIP`/`LIMIT`.
    fn compile_projection(
        &mut self,
        tree: AlgebraNode,
        body: &ProjectionBody,
    ) -> CResult<AlgebraNode> {
        let mut items = Vec::with_capacity(body.items.len());
        for it in &body.items {
            let expr = self.scalar(&it.expr)?;
            let name = it.output_name().to_string();
            if items.iter().any(|i: &NamedExpr| i.name == name) {
                return Err(CompileError::DuplicateColumn(name));
            }
            items.push(NamedExpr { expr, name });
        }
        let exprs: Vec<ScalarExpr> = items.iter().map(|i| i.expr.clone()).collect();
        let criteria = determine_grouping_criteria(&exprs)?;
        let aggregating = exprs.iter().any(ScalarExpr::is_aggregate);

        let new_scope: BTreeMap<String, VarKind> = items
            .iter()
            .map(|it| {
                let kind = match &it.expr {
                    ScalarExpr::Var(v) => self.scope.get(v).copied().unwrap_or(VarKind::Value),
                    _ => VarKind::Value,
                };
                (it.name.clone(), kind)
            })
            .collect();

        let mut tree = if aggregating {
            AlgebraNode::Grouping {
                input: tree.boxed(),
                criteria,
                items: items.clone(),
            }
        } else {
            AlgebraNode::Projection {
                input: tree.boxed(),
                items: items.clone(),
            }
        };
        let input_scope = std::mem::replace(&mut self.scope, new_scope);

        if body.distinct {
            tree = AlgebraNode::DuplicateElimination {
                input: tree.boxed(),
            };
        }
        if !body.order_by.is_empty() {
            let mut keys = Vec::new();
            for o in &body.order_by {
                let expr = match items.iter().find(|i| i.name == o.text) {
                    Some(item) => ScalarExpr::Var(item.name.clone()),
                    None => {
                        let unknown = || CompileError::OrderByUnknown(o.text.clone());
                        // resolved against the input so that `p.name` finds `p.name AS n`
                        let output_scope = std::mem::replace(&mut self.scope, input_scope.clone());
                        let resolved = self.scalar(&o.expr);
                        self.scope = output_scope;
                        let e = match resolved {
                            Ok(e) => e,
                            Err(_) => self.scalar(&o.expr).map_err(|_| unknown())?,
                        };
                        match items.iter().find(|i| i.expr == e) {
                            Some(item) => ScalarExpr::Var(item.name.clone()),
                            None if e.contains_aggregate() => return Err(unknown()),
                            None if e
                                .referenced_vars()
                                .iter()
                                .all(|v| self.scope.contains_key(*v)) =>
                            {
                                e
                            }
                            None => return Err(unknown()),
                        }
                    }
                };
                keys.push(SortKey {
                    expr,
                    order: o.order,
                });
            }
            tree = AlgebraNode::Sort {
                input: tree.boxed(),
                keys,
            };
        }
        if body.skip.is_some() || body.limit.is_some() {
            tree = AlgebraNode::Top {
                input: tree.boxed(),
                skip: body.skip.unwrap_or(0),
                limit: body.limit,
            };
        }
        Ok(tree)
    }

    /// Compiles the `MATCH` clauses of a query part into a left-deep join,
    /// seeded with the tree of the preceding parts when there is one.
    pub fn compile_match_block(
        &mut self,
        matches: &[MatchClause],
        prior: Option<AlgebraNode>,
    ) -> CResult<AlgebraNode> {
        let mut acc = prior;
        for clause in matches {
            let patterns = self.compile_clause_patterns(&clause.patterns)?;
            if clause.optional {
                let condition = match &clause.where_ {
                    Some(w) if w.contains_pattern() => {
                        return Err(CompileError::Unsupported(
                            "pattern predicates in OPTIONAL MATCH ... WHERE".into(),
                        ))
                    }
                    Some(w) => Some(self.predicate(w)?),
                    None => None,
                };
                let left = acc.unwrap_or(AlgebraNode::UnitTable);
                acc = Some(AlgebraNode::LeftOuterJoin {
                    left: left.boxed(),
                    right: patterns.boxed(),
                    condition,
                });
            } else {
                let mut tree = match acc {
                    None => patterns,
                    Some(a) => AlgebraNode::Join(a.boxed(), patterns.boxed()),
                };
                if let Some(w) = &clause.where_ {
                    tree = self.apply_where(tree, w)?;
                }
                acc = Some(tree);
            }
        }
        Ok(acc.unwrap_or(AlgebraNode::UnitTable))
    }

    /// Comma-separated patterns of one clause: natural join, guarded by one
    /// all-different over every edge variable the clause introduces.
    ///
    /// The guard is omitted when it cannot remove anything, i.e. the clause
    /// has a single single-hop edge or none at all.
    fn compile_clause_patterns(&mut self, patterns: &[PatternPart]) -> CResult<AlgebraNode> {
        let mut edges: Vec<String> = Vec::new();
        let mut has_range = false;
        let mut tree: Option<AlgebraNode> = None;
        for p in patterns {
            let (node, pattern_edges) = self.pattern_with_edges(p)?;
            for (e, ranged) in pattern_edges {
                if edges.contains(&e) {
                    return Err(CompileError::DuplicateEdge(e));
                }
                has_range |= ranged;
                edges.push(e);
            }
            tree = Some(match tree {
                None => node,
                Some(t) => AlgebraNode::Join(t.boxed(), node.boxed()),
            });
        }
        let tree = tree.expect("a MATCH clause has at least one pattern");
        if edges.len() >= 2 || has_range {
            Ok(AlgebraNode::AllDifferent {
                input: tree.boxed(),
                vars: edges,
            })
        } else {
            Ok(tree)
        }
    }

    /// A single pattern: get-vertices for the leftmost node, then one expand
    /// per relationship, left to right.
    pub fn compile_pattern(&mut self, p: &PatternPart) -> CResult<AlgebraNode> {
        self.pattern_with_edges(p).map(|(node, _)| node)
    }

    fn bind(&mut self, name: &str, kind: VarKind) -> CResult<()> {
        match self.scope.get(name) {
            Some(&bound) if bound != kind => Err(CompileError::KindConflict {
                name: name.to_string(),
                bound: bound.describe(),
                used: kind.describe(),
            }),
            _ => {
                self.scope.insert(name.to_string(), kind);
                Ok(())
            }
        }
    }

    fn pattern_with_edges(
        &mut self,
        p: &PatternPart,
    ) -> CResult<(AlgebraNode, Vec<(String, bool)>)> {
        let first = &p.nodes[0];
        let start = match &first.var {
            Some(v) => {
                self.bind(v, VarKind::Vertex)?;
                v.clone()
            }
            None => self.fresh_vertex(),
        };
        let mut local: Vec<String> = vec![start.clone()];
        let mut tree = AlgebraNode::GetVertices {
            var: start.clone(),
            labels: first.labels.clone(),
        };
        let mut edges = Vec::new();
        let mut from = start;
        for (rel, node) in p.rels.iter().zip(&p.nodes[1..]) {
            let ranged = rel.range.is_some_and(|r| r != (1, Some(1)));
            let edge = match &rel.var {
                Some(e) => {
                    if local.contains(e) {
                        return Err(CompileError::DuplicateEdge(e.clone()));
                    }
                    self.bind(
                        e,
                        if ranged {
                            VarKind::EdgeList
                        } else {
                            VarKind::Edge
                        },
                    )?;
                    e.clone()
                }
                None => self.fresh_edge(),
            };
            local.push(edge.clone());
            let (to, revisit) = match &node.var {
                Some(v) => {
                    self.bind(v, VarKind::Vertex)?;
                    if local.contains(v) {
                        (self.fresh_vertex(), Some(v.clone()))
                    } else {
                        (v.clone(), None)
                    }
                }
                None => (self.fresh_vertex(), None),
            };
            local.push(to.clone());
            let (min, max) = rel.range.unwrap_or((1, Some(1)));
            tree = AlgebraNode::Expand(Expand {
                input: tree.boxed(),
                direction: rel.direction,
                from: from.clone(),
                to: to.clone(),
                to_labels: node.labels.clone(),
                edge: edge.clone(),
                types: rel.types.clone(),
                min,
                max,
            });
            // a node variable already bound in this chain closes a cycle
            from = match revisit {
                Some(v) => {
                    tree = AlgebraNode::Selection {
                        input: tree.boxed(),
                        predicate: ScalarExpr::cmp(
                            CmpOp::Eq,
                            ScalarExpr::var(&to),
                            ScalarExpr::var(&v),
                        ),
                    };
                    v
                }
                None => to,
            };
            edges.push((edge, ranged));
        }
        Ok((tree, edges))
    }

    /// `WHERE` on an accumulated tree. Top-level conjuncts that are pattern
    /// predicates become joins (positive) or a left outer join plus a
    /// no-match selection (negative); the remaining conjuncts form a single
    /// selection.
    fn apply_where(&mut self, mut tree: AlgebraNode, cond: &Expr) -> CResult<AlgebraNode> {
        let mut scalar_parts = Vec::new();
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for c in conjuncts(cond) {
            match c {
                Expr::Pattern(p) => positive.push(p),
                Expr::Not(inner) if matches!(**inner, Expr::Pattern(_)) => {
                    if let Expr::Pattern(p) = &**inner {
                        negative.push(p);
                    }
                }
                other if other.contains_pattern() => {
                    return Err(CompileError::Unsupported(
                        "pattern predicates are only supported as top-level conjuncts of WHERE"
                            .into(),
                    ))
                }
                other => scalar_parts.push(other),
            }
        }
        if !scalar_parts.is_empty() {
            let mut pred = self.predicate(scalar_parts[0])?;
            for c in &scalar_parts[1..] {
                pred = ScalarExpr::and(pred, self.predicate(c)?);
            }
            tree = AlgebraNode::Selection {
                input: tree.boxed(),
                predicate: pred,
            };
        }
        for p in positive {
            self.check_predicate_pattern(p)?;
            tree = self.semi_join(tree, p)?;
        }
        for p in negative {
            self.check_predicate_pattern(p)?;
            tree = self.anti_join(tree, p)?;
        }
        Ok(tree)
    }

    fn check_predicate_pattern(&self, p: &PatternPart) -> CResult<()> {
        let names = p
            .nodes
            .iter()
            .filter_map(|n| n.var.as_ref())
            .chain(p.rels.iter().filter_map(|r| r.var.as_ref()));
        for name in names {
            if !self.scope.contains_key(name) {
                return Err(CompileError::UnknownVariable(name.clone()));
            }
        }
        Ok(())
    }

    /// `WHERE pattern`: the pattern is reduced to the distinct bindings of its
    /// named variables, so joining keeps each input tuple at most once.
    fn semi_join(&mut self, tree: AlgebraNode, p: &PatternPart) -> CResult<AlgebraNode> {
        let saved = self.scope.clone();
        let pattern = self.compile_clause_patterns(std::slice::from_ref(p))?;
        self.scope = saved;
        let mut items: Vec<NamedExpr> = Vec::new();
        let named = p
            .nodes
            .iter()
            .filter_map(|n| n.var.as_ref())
            .chain(p.rels.iter().filter_map(|r| r.var.as_ref()));
        for name in named {
            if !items.iter().any(|i| &i.name == name) {
                items.push(NamedExpr::unaliased(ScalarExpr::var(name)));
            }
        }
        let matches = AlgebraNode::DuplicateElimination {
            input: AlgebraNode::Projection {
                input: pattern.boxed(),
                items,
            }
            .boxed(),
        };
        Ok(AlgebraNode::Join(tree.boxed(), matches.boxed()))
    }

    /// `WHERE NOT pattern`: every pattern element is renamed to a fresh name,
    /// the named ones are correlated through the join condition, and only
    /// tuples without a match survive.
    fn anti_join(&mut self, tree: AlgebraNode, p: &PatternPart) -> CResult<AlgebraNode> {
        let mut renamed = p.clone();
        let mut correlations = Vec::new();
        for node in &mut renamed.nodes {
            let fresh = self.fresh_vertex();
            if let Some(v) = node.var.replace(fresh.clone()) {
                correlations.push(ScalarExpr::cmp(
                    CmpOp::Eq,
                    ScalarExpr::var(fresh),
                    ScalarExpr::var(v),
                ));
            }
        }
        for rel in &mut renamed.rels {
            let fresh = self.fresh_edge();
            if let Some(e) = rel.var.replace(fresh.clone()) {
                correlations.push(ScalarExpr::cmp(
                    CmpOp::Eq,
                    ScalarExpr::var(fresh),
                    ScalarExpr::var(e),
                ));
            }
        }
        let marker = renamed.nodes[0].var.clone().expect("renamed above");
        let saved = self.scope.clone();
        let pattern = self.compile_clause_patterns(std::slice::from_ref(&renamed))?;
        self.scope = saved;
        let condition = correlations.into_iter().reduce(ScalarExpr::and);
        let joined = AlgebraNode::LeftOuterJoin {
            left: tree.boxed(),
            right: pattern.boxed(),
            condition,
        };
        Ok(AlgebraNode::Selection {
            input: joined.boxed(),
            predicate: ScalarExpr::IsNull {
                expr: Box::new(ScalarExpr::var(marker)),
                negated: false,
            },
        })
    }

    fn predicate(&mut self, e: &Expr) -> CResult<ScalarExpr> {
        let s = self.scalar(e)?;
        if s.contains_aggregate() {
            return Err(CompileError::IllegalAggregation(s.to_string()));
        }
        Ok(s)
    }

    /// Surface expression to algebra expression, resolving names against the
    /// current scope.
    fn scalar(&self, e: &Expr) -> CResult<ScalarExpr> {
        let known = |v: &String| -> CResult<()> {
            if self.scope.contains_key(v) {
                Ok(())
            } else {
                Err(CompileError::UnknownVariable(v.clone()))
            }
        };
        let b = |x: &Expr| self.scalar(x).map(Box::new);
        Ok(match e {
            Expr::Literal(v) => ScalarExpr::Literal(v.clone()),
            Expr::Var(v) => {
                known(v)?;
                ScalarExpr::Var(v.clone())
            }
            Expr::Prop { var, key } => {
                known(var)?;
                ScalarExpr::prop(var, key)
            }
            Expr::Arith(op, l, r) => ScalarExpr::Arith(*op, b(l)?, b(r)?),
            Expr::Neg(x) => ScalarExpr::Neg(b(x)?),
            Expr::Cmp(op, l, r) => ScalarExpr::Cmp(*op, b(l)?, b(r)?),
            Expr::And(l, r) => ScalarExpr::And(b(l)?, b(r)?),
            Expr::Or(l, r) => ScalarExpr::Or(b(l)?, b(r)?),
            Expr::Not(x) => ScalarExpr::Not(b(x)?),
            Expr::IsNull { expr, negated } => ScalarExpr::IsNull {
                expr: b(expr)?,
                negated: *negated,
            },
            Expr::HasLabels { var, labels } => {
                known(var)?;
                match self.scope.get(var) {
                    Some(VarKind::Vertex) | Some(VarKind::Value) => {}
                    Some(&k) => {
                        return Err(CompileError::KindConflict {
                            name: var.clone(),
                            bound: k.describe(),
                            used: VarKind::Vertex.describe(),
                        })
                    }
                    None => {}
                }
                ScalarExpr::HasLabels {
                    var: var.clone(),
                    labels: labels.clone(),
                }
            }
            Expr::Agg {
                func,
                distinct,
                arg,
            } => {
                let func = match (func, distinct) {
                    (f, false) => *f,
                    (AggFn::Count, true) => AggFn::CountDistinct,
                    (f, true) => {
                        return Err(CompileError::Unsupported(format!(
                            "DISTINCT inside {}()",
                            f.name()
                        )))
                    }
                };
                ScalarExpr::Agg {
                    func,
                    arg: arg.as_deref().map(b).transpose()?,
                }
            }
            Expr::Pattern(_) => {
                return Err(CompileError::Unsupported(
                    "pattern expressions outside WHERE".into(),
                ))
            }
        })
    }
}

fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::And(l, r) => {
            let mut v = conjuncts(l);
            v.extend(conjuncts(r));
            v
        }
        other => vec![other],
    }
}

/// Output columns of a compiled plan.
pub fn output_schema(plan: &AlgebraNode) -> CResult<Schema> {
    Ok(plan.schema()?)
}
