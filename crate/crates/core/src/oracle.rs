//! Brute-force pattern matcher used as a differential-testing oracle.
//!
//! It works on the surface syntax and shares nothing with the compiler: each
//! `MATCH` clause is matched by nested iteration over all vertices and all
//! (edge, orientation) pairs of the graph, extending the bindings produced by
//! the previous clauses. Edges are distinct within a clause but may repeat
//! across clauses. Only scalar expression evaluation is shared with the
//! evaluator.

use std::collections::{BTreeMap, HashSet};

use crate::algebra::{AggFn, ScalarExpr, Schema};
use crate::eval::{eval_scalar, EvalError, Relation};
use crate::graph::{Direction, PropertyGraph};
use crate::parser::{Expr, MatchClause, PartTail, PatternPart, QueryAst, RelPattern};
use crate::value::{EdgeId, Value, VertexId};

type Binding = BTreeMap<String, Value>;

/// Prefix of names given to anonymous pattern elements; never a valid
/// identifier, so it cannot collide with user variables.
const ANON: &str = "#";

/// All bindings of the named variables of `matches`, as a bag. Columns are
/// the named variables in order of first appearance.
pub fn oracle_enumerate(matches: &[MatchClause], g: &PropertyGraph) -> Result<Relation, EvalError> {
    let mut names: Vec<String> = Vec::new();
    for clause in matches {
        for name in clause_vars(&clause.patterns) {
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    let o = Oracle {
        g,
        vertices: g.vertices().cloned().collect(),
        edges: g
            .edges()
            .map(|e| {
                let (s, t) = g.endpoints(e)?;
                Ok((e.clone(), s.clone(), t.clone(), g.edge_type(e)?.to_string()))
            })
            .collect::<Result<_, EvalError>>()?,
    };
    let mut bindings = vec![Binding::new()];
    for clause in matches {
        let mut next = Vec::new();
        for b in &bindings {
            let mut found = Vec::new();
            for ext in o.match_patterns(&clause.patterns, b)? {
                let keep = match &clause.where_ {
                    Some(w) => o.predicate(w, &ext)? == Some(true),
                    None => true,
                };
                if keep {
                    found.push(strip_anonymous(ext));
                }
            }
            if found.is_empty() && clause.optional {
                let mut padded = b.clone();
                for name in clause_vars(&clause.patterns) {
                    padded.entry(name).or_insert(Value::Null);
                }
                found.push(padded);
            }
            next.extend(found);
        }
        bindings = next;
    }
    let rows = bindings
        .into_iter()
        .map(|b| names.iter().map(|n| b[n].clone()).collect())
        .collect();
    Ok(Relation::new(
        Schema::new(names.iter().map(String::as_str)),
        rows,
    ))
}

/// Runs a query through the oracle when it is a single `MATCH ... RETURN`
/// part without aggregation, `SKIP` or `LIMIT`; `None` otherwise. The result
/// is unordered.
pub fn oracle_query(ast: &QueryAst, g: &PropertyGraph) -> Result<Option<Relation>, EvalError> {
    let [single] = ast.singles.as_slice() else {
        return Ok(None);
    };
    let [part] = single.parts.as_slice() else {
        return Ok(None);
    };
    let PartTail::Return(body) = &part.tail else {
        return Ok(None);
    };
    if body.skip.is_some()
        || body.limit.is_some()
        || body
            .items
            .iter()
            .any(|i| i.expr.contains_aggregate() || i.expr.contains_pattern())
    {
        return Ok(None);
    }
    let bindings = oracle_enumerate(&part.matches, g)?;
    let items = body
        .items
        .iter()
        .map(|i| lower(&i.expr))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for row in &bindings.rows {
        let env: Binding = bindings
            .schema
            .names()
            .iter()
            .cloned()
            .zip(row.iter().cloned())
            .collect();
        rows.push(
            items
                .iter()
                .map(|e| eval_scalar(e, &env, g))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    if body.distinct {
        let mut seen = HashSet::new();
        rows.retain(|r| seen.insert(r.clone()));
    }
    let schema = Schema::new(body.items.iter().map(|i| i.output_name()));
    Ok(Some(Relation::new(schema, rows)))
}

fn clause_vars(patterns: &[PatternPart]) -> Vec<String> {
    let mut out = Vec::new();
    for p in patterns {
        let mut push = |v: &Option<String>| {
            if let Some(v) = v {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        push(&p.nodes[0].var);
        for (r, n) in p.rels.iter().zip(&p.nodes[1..]) {
            push(&r.var);
            push(&n.var);
        }
    }
    out
}

fn strip_anonymous(mut b: Binding) -> Binding {
    b.retain(|k, _| !k.starts_with(ANON));
    b
}

struct Oracle<'g> {
    g: &'g PropertyGraph,
    vertices: Vec<VertexId>,
    /// id, source, target, type
    edges: Vec<(EdgeId, VertexId, VertexId, String)>,
}

/// One traversal step: an edge and the endpoints in walking order.
type Step = (EdgeId, VertexId, VertexId);

impl Oracle<'_> {
    /// Every extension of `b` matching all patterns, with the edges of these
    /// patterns pairwise distinct.
    fn match_patterns(
        &self,
        patterns: &[PatternPart],
        b: &Binding,
    ) -> Result<Vec<Binding>, EvalError> {
        // anonymous elements get positional names
        let mut named: Vec<PatternPart> = patterns.to_vec();
        let mut k = 0;
        for p in &mut named {
            for n in &mut p.nodes {
                if n.var.is_none() {
                    k += 1;
                    n.var = Some(format!("{ANON}n{k}"));
                }
            }
            for r in &mut p.rels {
                if r.var.is_none() {
                    k += 1;
                    r.var = Some(format!("{ANON}r{k}"));
                }
            }
        }
        let mut out = Vec::new();
        self.extend_pattern(&named, 0, b.clone(), &mut Vec::new(), &mut out)?;
        Ok(out)
    }

    fn extend_pattern(
        &self,
        patterns: &[PatternPart],
        i: usize,
        b: Binding,
        used: &mut Vec<EdgeId>,
        out: &mut Vec<Binding>,
    ) -> Result<(), EvalError> {
        let Some(p) = patterns.get(i) else {
            out.push(b);
            return Ok(());
        };
        let first = &p.nodes[0];
        for v in &self.vertices {
            let Some(b) = self.bind_vertex(&b, first.var.as_ref().unwrap(), &first.labels, v)?
            else {
                continue;
            };
            self.extend_chain(patterns, i, 0, v, b, used, out)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn extend_chain(
        &self,
        patterns: &[PatternPart],
        i: usize,
        hop: usize,
        at: &VertexId,
        b: Binding,
        used: &mut Vec<EdgeId>,
        out: &mut Vec<Binding>,
    ) -> Result<(), EvalError> {
        let p = &patterns[i];
        let Some(rel) = p.rels.get(hop) else {
            return self.extend_pattern(patterns, i + 1, b, used, out);
        };
        let node = &p.nodes[hop + 1];
        for path in self.paths(rel, at, used) {
            let end = path.last().map_or(at.clone(), |s| s.2.clone());
            // `*1..1` binds a single edge, like a plain relationship
            let value = match rel.range {
                None | Some((1, Some(1))) => Value::Edge(path[0].0.clone()),
                Some(_) => Value::List(path.iter().map(|s| Value::Edge(s.0.clone())).collect()),
            };
            let rel_var = rel.var.as_ref().unwrap();
            let Some(b) = bind(&b, rel_var, value) else {
                continue;
            };
            let Some(b) = self.bind_vertex(&b, node.var.as_ref().unwrap(), &node.labels, &end)?
            else {
                continue;
            };
            let n = used.len();
            used.extend(path.into_iter().map(|s| s.0));
            self.extend_chain(patterns, i, hop + 1, &end, b, used, out)?;
            used.truncate(n);
        }
        Ok(())
    }

    /// Every sequence of distinct, unused edges that walks from `start` with
    /// the pattern's direction and types and a length within its range.
    fn paths(&self, rel: &RelPattern, start: &VertexId, used: &[EdgeId]) -> Vec<Vec<Step>> {
        let (min, max) = rel.range.unwrap_or((1, Some(1)));
        let max = max.unwrap_or(self.edges.len() as u32);
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.grow(rel, start, used, min, max, &mut path, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &self,
        rel: &RelPattern,
        at: &VertexId,
        used: &[EdgeId],
        min: u32,
        max: u32,
        path: &mut Vec<Step>,
        out: &mut Vec<Vec<Step>>,
    ) {
        let len = path.len() as u32;
        if len >= min {
            out.push(path.clone());
        }
        if len >= max {
            return;
        }
        for (e, s, t, ty) in &self.edges {
            if !(rel.types.is_empty() || rel.types.contains(ty)) {
                continue;
            }
            if used.contains(e) || path.iter().any(|st| &st.0 == e) {
                continue;
            }
            let mut orientations = Vec::new();
            if matches!(rel.direction, Direction::Out | Direction::Both) {
                orientations.push((s, t));
            }
            if matches!(rel.direction, Direction::In | Direction::Both) {
                orientations.push((t, s));
            }
            for (from, to) in orientations {
                if from != at {
                    continue;
                }
                path.push((e.clone(), from.clone(), to.clone()));
                self.grow(rel, to, used, min, max, path, out);
                path.pop();
            }
        }
    }

    fn bind_vertex(
        &self,
        b: &Binding,
        var: &str,
        labels: &[String],
        v: &VertexId,
    ) -> Result<Option<Binding>, EvalError> {
        if !self.g.has_labels(v, labels)? {
            return Ok(None);
        }
        Ok(bind(b, var, Value::Vertex(v.clone())))
    }

    /// Three-valued truth of a `WHERE` expression; pattern predicates are
    /// existence tests against the current binding.
    fn predicate(&self, e: &Expr, b: &Binding) -> Result<Option<bool>, EvalError> {
        Ok(match e {
            Expr::And(l, r) => match (self.predicate(l, b)?, self.predicate(r, b)?) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Expr::Or(l, r) => match (self.predicate(l, b)?, self.predicate(r, b)?) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            Expr::Not(x) => self.predicate(x, b)?.map(|t| !t),
            // the clause's anonymous elements must not constrain the predicate's
            Expr::Pattern(p) => {
                let outer = strip_anonymous(b.clone());
                Some(
                    !self
                        .match_patterns(std::slice::from_ref(p), &outer)?
                        .is_empty(),
                )
            }
            other => match eval_scalar(&lower(other)?, b, self.g)? {
                Value::Bool(t) => Some(t),
                Value::Null => None,
                v => {
                    return Err(EvalError::Type(format!(
                        "a predicate expects a boolean, got {}",
                        v.kind_name()
                    )))
                }
            },
        })
    }
}

/// Binds `var` to `value`, or checks an existing binding for equality. A
/// `NULL` binding never matches.
fn bind(b: &Binding, var: &str, value: Value) -> Option<Binding> {
    match b.get(var) {
        Some(old) => (old.cypher_eq(&value) == Some(true)).then(|| b.clone()),
        None => {
            let mut b = b.clone();
            b.insert(var.to_string(), value);
            Some(b)
        }
    }
}

fn lower(e: &Expr) -> Result<ScalarExpr, EvalError> {
    let b = |x: &Expr| lower(x).map(Box::new);
    Ok(match e {
        Expr::Literal(v) => ScalarExpr::Literal(v.clone()),
        Expr::Var(v) => ScalarExpr::Var(v.clone()),
        Expr::Prop { var, key } => ScalarExpr::prop(var, key),
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
        Expr::HasLabels { var, labels } => ScalarExpr::HasLabels {
            var: var.clone(),
            labels: labels.clone(),
        },
        Expr::Agg {
            func,
            distinct,
            arg,
        } => ScalarExpr::Agg {
            func: if *distinct && *func == AggFn::Count {
                AggFn::CountDistinct
            } else {
                *func
            },
            arg: arg.as_deref().map(b).transpose()?,
        },
        Expr::Pattern(_) => {
            return Err(EvalError::Type(
                "pattern predicate outside a boolean context".into(),
            ))
        }
    })
}
