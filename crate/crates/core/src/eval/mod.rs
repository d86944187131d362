//! Bag-semantics evaluation of algebra plans over a property graph.
//!
//! Every operator materialises its output. Scans follow the id order of the
//! graph, so the row order of an unsorted result is deterministic.

mod expr;

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::algebra::{
    AggFn, AlgebraNode, Expand, NamedExpr, PlanError, ScalarExpr, Schema, SortKey, SortOrder,
};
use crate::graph::{GraphError, PropertyGraph};
use crate::value::{EdgeId, Value, VertexId};

pub use expr::{arith, compare, eval_scalar, holds, Bindings, RowRef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
}

pub type Row = Vec<Value>;

/// A graph relation: a schema and a bag of tuples over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub schema: Schema,
    pub rows: Vec<Row>,
    /// Whether the row order is meaningful (produced by a sort).
    pub ordered: bool,
}

impl Relation {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Self {
        Relation {
            schema,
            rows,
            ordered: false,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.schema.index_of(name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Rows with columns rearranged to `order`; `None` if the column sets differ.
    pub fn reordered(&self, order: &Schema) -> Option<Vec<Row>> {
        if order.len() != self.schema.len() {
            return None;
        }
        let idx: Vec<usize> = order
            .names()
            .iter()
            .map(|n| self.schema.index_of(n))
            .collect::<Option<_>>()?;
        Some(
            self.rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        )
    }

    /// The rows as a sorted multiset, for order-insensitive comparison.
    pub fn sorted_rows(&self) -> Vec<Row> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }

    /// Bag equality up to column order.
    pub fn bag_eq(&self, other: &Relation) -> bool {
        match other.reordered(&self.schema) {
            Some(mut rows) => {
                rows.sort();
                rows == self.sorted_rows()
            }
            None => false,
        }
    }
}

pub fn evaluate(plan: &AlgebraNode, g: &PropertyGraph) -> Result<Relation, EvalError> {
    if let Some(err) = plan.validate().into_iter().next() {
        return Err(err.into());
    }
    eval_node(plan, g)
}

fn index(schema: &Schema, name: &str) -> Result<usize, EvalError> {
    schema
        .index_of(name)
        .ok_or_else(|| EvalError::UnknownAttribute(name.to_string()))
}

fn eval_node(node: &AlgebraNode, g: &PropertyGraph) -> Result<Relation, EvalError> {
    match node {
        AlgebraNode::GetVertices { var, labels } => get_vertices(g, var, labels),
        AlgebraNode::UnitTable => Ok(Relation::new(Schema::default(), vec![vec![]])),
        AlgebraNode::Expand(x) => expand(x, g),
        AlgebraNode::AllDifferent { input, vars } => all_different(eval_node(input, g)?, vars),
        AlgebraNode::Unwind { input, expr, alias } => unwind(eval_node(input, g)?, expr, alias, g),
        AlgebraNode::Selection { input, predicate } => select(eval_node(input, g)?, predicate, g),
        AlgebraNode::Projection { input, items } => project(eval_node(input, g)?, items, g),
        AlgebraNode::Grouping {
            input,
            criteria,
            items,
        } => grouping(&eval_node(input, g)?, criteria, items, g),
        AlgebraNode::DuplicateElimination { input } => Ok(dedup(eval_node(input, g)?)),
        AlgebraNode::Sort { input, keys } => sort(eval_node(input, g)?, keys, g),
        AlgebraNode::Top { input, skip, limit } => Ok(top(eval_node(input, g)?, *skip, *limit)),
        AlgebraNode::Union(l, r) => union(eval_node(l, g)?, eval_node(r, g)?),
        AlgebraNode::BagUnion(l, r) => bag_union(eval_node(l, g)?, eval_node(r, g)?),
        AlgebraNode::Join(l, r) => join(&eval_node(l, g)?, &eval_node(r, g)?, None, false, g),
        AlgebraNode::LeftOuterJoin {
            left,
            right,
            condition,
        } => join(
            &eval_node(left, g)?,
            &eval_node(right, g)?,
            condition.as_ref(),
            true,
            g,
        ),
    }
}

pub fn get_vertices(
    g: &PropertyGraph,
    var: &str,
    labels: &[String],
) -> Result<Relation, EvalError> {
    let mut rows = Vec::new();
    for v in g.vertices() {
        if g.has_labels(v, labels)? {
            rows.push(vec![Value::Vertex(v.clone())]);
        }
    }
    Ok(Relation::new(Schema::new([var]), rows))
}

/// Keeps tuples whose edges, taken from edge and edge-list attributes, are
/// pairwise distinct.
pub fn all_different(mut rel: Relation, vars: &[String]) -> Result<Relation, EvalError> {
    let idx: Vec<usize> = vars
        .iter()
        .map(|v| index(&rel.schema, v))
        .collect::<Result<_, _>>()?;
    rel.rows.retain(|row| {
        let mut seen = HashSet::new();
        idx.iter()
            .all(|&i| edges_of(&row[i]).all(|e| seen.insert(e)))
    });
    Ok(rel)
}

/// One tuple per list element. A bare attribute operand is replaced by the
/// new one; a `NULL` list yields no tuples.
pub fn unwind(
    rel: Relation,
    expr: &ScalarExpr,
    alias: &str,
    g: &PropertyGraph,
) -> Result<Relation, EvalError> {
    let drop = match expr {
        ScalarExpr::Var(xs) => Some(index(&rel.schema, xs)?),
        _ => None,
    };
    let mut schema = match expr {
        ScalarExpr::Var(xs) => rel.schema.remove(xs),
        _ => rel.schema.clone(),
    };
    schema.push(alias);
    let mut rows = Vec::new();
    for row in &rel.rows {
        let items = match eval_scalar(
            expr,
            &RowRef {
                schema: &rel.schema,
                row,
            },
            g,
        )? {
            Value::List(items) => items,
            Value::Null => continue,
            other => {
                return Err(EvalError::Type(format!(
                    "UNWIND expects a list, got {}",
                    other.kind_name()
                )))
            }
        };
        for item in items {
            let mut out: Row = row
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != drop)
                .map(|(_, v)| v.clone())
                .collect();
            out.push(item);
            rows.push(out);
        }
    }
    Ok(Relation {
        schema,
        rows,
        ordered: rel.ordered,
    })
}

pub fn select(
    mut rel: Relation,
    predicate: &ScalarExpr,
    g: &PropertyGraph,
) -> Result<Relation, EvalError> {
    let mut rows = Vec::with_capacity(rel.rows.len());
    for row in std::mem::take(&mut rel.rows) {
        if holds(
            predicate,
            &RowRef {
                schema: &rel.schema,
                row: &row,
            },
            g,
        )? {
            rows.push(row);
        }
    }
    rel.rows = rows;
    Ok(rel)
}

pub fn project(
    rel: Relation,
    items: &[NamedExpr],
    g: &PropertyGraph,
) -> Result<Relation, EvalError> {
    let schema = Schema::new(items.iter().map(|i| i.name.as_str()));
    let rows = rel
        .rows
        .iter()
        .map(|row| {
            let env = RowRef {
                schema: &rel.schema,
                row,
            };
            items
                .iter()
                .map(|it| eval_scalar(&it.expr, &env, g))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(Relation {
        schema,
        rows,
        ordered: rel.ordered,
    })
}

/// Keeps the first occurrence of every tuple.
pub fn dedup(mut rel: Relation) -> Relation {
    let mut seen = HashSet::new();
    rel.rows.retain(|r| seen.insert(r.clone()));
    rel
}

/// Stable sort under the total value order; `NULL` sorts last ascending.
pub fn sort(rel: Relation, keys: &[SortKey], g: &PropertyGraph) -> Result<Relation, EvalError> {
    let mut keyed = Vec::with_capacity(rel.rows.len());
    for row in rel.rows {
        let env = RowRef {
            schema: &rel.schema,
            row: &row,
        };
        let k: Vec<Value> = keys
            .iter()
            .map(|k| eval_scalar(&k.expr, &env, g))
            .collect::<Result<_, _>>()?;
        keyed.push((k, row));
    }
    keyed.sort_by(|(a, _), (b, _)| {
        keys.iter()
            .zip(a.iter().zip(b))
            .map(|(k, (x, y))| match k.order {
                SortOrder::Asc => x.cmp(y),
                SortOrder::Desc => y.cmp(x),
            })
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(Relation {
        schema: rel.schema,
        rows: keyed.into_iter().map(|(_, r)| r).collect(),
        ordered: true,
    })
}

pub fn top(mut rel: Relation, skip: u64, limit: Option<u64>) -> Relation {
    let skip = usize::try_from(skip).unwrap_or(usize::MAX);
    let limit = limit.map_or(usize::MAX, |l| usize::try_from(l).unwrap_or(usize::MAX));
    rel.rows = rel.rows.into_iter().skip(skip).take(limit).collect();
    rel
}

/// Bag union; the right operand's columns are matched to the left by name.
pub fn bag_union(left: Relation, right: Relation) -> Result<Relation, EvalError> {
    let right_rows = right.reordered(&left.schema).ok_or_else(|| {
        EvalError::Plan(PlanError::SchemaMismatch {
            operator: "BagUnion",
            left: left.schema.to_string(),
            right: right.schema.to_string(),
        })
    })?;
    let mut rows = left.rows;
    rows.extend(right_rows);
    Ok(Relation::new(left.schema, rows))
}

/// Set union: the bag union with duplicates removed.
pub fn union(left: Relation, right: Relation) -> Result<Relation, EvalError> {
    bag_union(left, right).map(dedup).map_err(|e| match e {
        EvalError::Plan(PlanError::SchemaMismatch { left, right, .. }) => {
            EvalError::Plan(PlanError::SchemaMismatch {
                operator: "Union",
                left,
                right,
            })
        }
        other => other,
    })
}

fn edges_of(v: &Value) -> Box<dyn Iterator<Item = &EdgeId> + '_> {
    match v {
        Value::Edge(e) => Box::new(std::iter::once(e)),
        Value::List(items) => Box::new(items.iter().flat_map(edges_of)),
        _ => Box::new(std::iter::empty()),
    }
}

pub fn expand(x: &Expand, g: &PropertyGraph) -> Result<Relation, EvalError> {
    let rel = eval_node(&x.input, g)?;
    let from = index(&rel.schema, &x.from)?;
    let mut schema = rel.schema.clone();
    schema.push(x.edge.clone());
    schema.push(x.to.clone());
    let types: BTreeSet<String> = x.types.iter().cloned().collect();
    let mut rows = Vec::new();
    for row in &rel.rows {
        let start = match &row[from] {
            Value::Vertex(v) => v,
            Value::Null => continue,
            other => {
                return Err(EvalError::Type(format!(
                    "expand from a {}",
                    other.kind_name()
                )))
            }
        };
        if x.is_single_hop() {
            for (e, w) in g.adjacency(start, x.direction, &types)? {
                if g.has_labels(&w, &x.to_labels)? {
                    let mut out = row.clone();
                    out.push(Value::Edge(e));
                    out.push(Value::Vertex(w));
                    rows.push(out);
                }
            }
        } else {
            let mut trails = Vec::new();
            walk_trails(g, x, &types, start, &mut Vec::new(), &mut trails)?;
            for (path, w) in trails {
                let mut out = row.clone();
                out.push(Value::List(path.into_iter().map(Value::Edge).collect()));
                out.push(Value::Vertex(w));
                rows.push(out);
            }
        }
    }
    Ok(Relation::new(schema, rows))
}

/// Depth-first enumeration of trails (no repeated edge) from `at` whose
/// length lies in `[min, max]`. Only the final vertex is label-checked.
fn walk_trails(
    g: &PropertyGraph,
    x: &Expand,
    types: &BTreeSet<String>,
    at: &VertexId,
    path: &mut Vec<EdgeId>,
    out: &mut Vec<(Vec<EdgeId>, VertexId)>,
) -> Result<(), EvalError> {
    let len = path.len() as u32;
    if len >= x.min && g.has_labels(at, &x.to_labels)? {
        out.push((path.clone(), at.clone()));
    }
    if x.max.is_some_and(|m| len >= m) {
        return Ok(());
    }
    for (e, w) in g.adjacency(at, x.direction, types)? {
        if path.contains(&e) {
            continue;
        }
        path.push(e);
        walk_trails(g, x, types, &w, path, out)?;
        path.pop();
    }
    Ok(())
}

/// Natural join on the shared attributes, or left outer join when `outer`.
/// `NULL` never equals anything, so tuples with a `NULL` key find no partner.
pub fn join(
    l: &Relation,
    r: &Relation,
    condition: Option<&ScalarExpr>,
    outer: bool,
    g: &PropertyGraph,
) -> Result<Relation, EvalError> {
    let schema = l.schema.append(&r.schema);
    let common: Vec<(usize, usize)> = r
        .schema
        .names()
        .iter()
        .enumerate()
        .filter_map(|(j, n)| l.schema.index_of(n).map(|i| (i, j)))
        .collect();
    let extra: Vec<usize> = (0..r.schema.len())
        .filter(|j| !common.iter().any(|(_, c)| c == j))
        .collect();
    let mut rows = Vec::new();
    for lrow in &l.rows {
        let mut matched = false;
        for rrow in &r.rows {
            if !common
                .iter()
                .all(|&(i, j)| lrow[i].cypher_eq(&rrow[j]) == Some(true))
            {
                continue;
            }
            let mut out = lrow.clone();
            out.extend(extra.iter().map(|&j| rrow[j].clone()));
            if let Some(c) = condition {
                if !holds(
                    c,
                    &RowRef {
                        schema: &schema,
                        row: &out,
                    },
                    g,
                )? {
                    continue;
                }
            }
            matched = true;
            rows.push(out);
        }
        if outer && !matched {
            let mut out = lrow.clone();
            out.extend(extra.iter().map(|_| Value::Null));
            rows.push(out);
        }
    }
    Ok(Relation::new(schema, rows))
}

pub fn grouping(
    rel: &Relation,
    criteria: &[ScalarExpr],
    items: &[NamedExpr],
    g: &PropertyGraph,
) -> Result<Relation, EvalError> {
    let mut order: Vec<Vec<Value>> = Vec::new();
    let mut groups: HashMap<Vec<Value>, Vec<&Row>> = HashMap::new();
    for row in &rel.rows {
        let env = RowRef {
            schema: &rel.schema,
            row,
        };
        let key: Vec<Value> = criteria
            .iter()
            .map(|c| eval_scalar(c, &env, g))
            .collect::<Result<_, _>>()?;
        groups
            .entry(key)
            .or_insert_with_key(|k| {
                order.push(k.clone());
                Vec::new()
            })
            .push(row);
    }
    if criteria.is_empty() && order.is_empty() {
        order.push(Vec::new());
        groups.insert(Vec::new(), Vec::new());
    }
    let schema = Schema::new(items.iter().map(|i| i.name.as_str()));
    let mut rows = Vec::with_capacity(order.len());
    for key in &order {
        let members = &groups[key];
        let mut out = Vec::with_capacity(items.len());
        for it in items {
            let v = match &it.expr {
                ScalarExpr::Agg { func, arg } => {
                    aggregate(*func, arg.as_deref(), &rel.schema, members, g)?
                }
                e => match criteria.iter().position(|c| c == e) {
                    Some(i) => key[i].clone(),
                    None => {
                        let row = members[0];
                        eval_scalar(
                            e,
                            &RowRef {
                                schema: &rel.schema,
                                row,
                            },
                            g,
                        )?
                    }
                },
            };
            out.push(v);
        }
        rows.push(out);
    }
    Ok(Relation::new(schema, rows))
}

fn aggregate(
    func: AggFn,
    arg: Option<&ScalarExpr>,
    schema: &Schema,
    rows: &[&Row],
    g: &PropertyGraph,
) -> Result<Value, EvalError> {
    let Some(arg) = arg else {
        return Ok(Value::Int(rows.len() as i64));
    };
    let mut values = Vec::with_capacity(rows.len());
    for row in rows {
        let v = eval_scalar(arg, &RowRef { schema, row }, g)?;
        if !v.is_null() {
            values.push(v);
        }
    }
    Ok(match func {
        AggFn::Count => Value::Int(values.len() as i64),
        AggFn::CountDistinct => Value::Int(values.iter().collect::<HashSet<_>>().len() as i64),
        AggFn::Collect => Value::List(values),
        AggFn::Min => values.into_iter().min().unwrap_or(Value::Null),
        AggFn::Max => values.into_iter().max().unwrap_or(Value::Null),
        AggFn::Sum => sum(&values)?,
        AggFn::Avg => {
            if values.is_empty() {
                Value::Null
            } else {
                let n = values.len() as f64;
                match sum(&values)? {
                    Value::Int(i) => Value::Float(i as f64 / n),
                    Value::Float(f) => Value::Float(f / n),
                    _ => unreachable!("sum is numeric"),
                }
            }
        }
    })
}

fn sum(values: &[Value]) -> Result<Value, EvalError> {
    let mut acc = Value::Int(0);
    for v in values {
        if !matches!(v, Value::Int(_) | Value::Float(_)) {
            return Err(EvalError::Type(format!("cannot sum a {}", v.kind_name())));
        }
        acc = arith(crate::algebra::ArithOp::Add, acc, v.clone())?;
    }
    Ok(acc)
}
