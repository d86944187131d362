//! Random graphs and MATCH queries for comparing the compiled plan against the
//! brute-force matcher.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gqe::compiler::compile;
use gqe::eval::evaluate;
use gqe::oracle::oracle_query;
use gqe::parser::parse;
use gqe::{PropertyGraph, Value};

const LABELS: [&str; 3] = ["A", "B", "C"];
const TYPES: [&str; 3] = ["T", "U", "W"];
const VERTEX_VARS: [&str; 4] = ["a", "b", "c", "d"];
const EDGE_VARS: [&str; 4] = ["e0", "e1", "e2", "e3"];
const RANGE_VARS: [&str; 3] = ["r0", "r1", "r2"];

/// What the generated queries exercised.
#[derive(Debug, Default, Clone)]
pub struct Coverage {
    pub cases: usize,
    pub multi_match: usize,
    pub comma: usize,
    pub optional: usize,
    pub where_clause: usize,
    pub pattern_predicate: usize,
    pub range: usize,
    /// An edge variable bound in one clause and matched again in a later one.
    pub shared_edge: usize,
    /// A clause with at least two relationships, so uniqueness applies.
    pub unique_edges: usize,
    pub nonempty_results: usize,
}

pub fn random_graph(rng: &mut impl Rng) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let n = rng.gen_range(1..=8);
    for i in 0..n {
        let labels: Vec<&str> = LABELS
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.4))
            .collect();
        let id = format!("v{i}");
        g.add_vertex(&id, labels).unwrap();
        if rng.gen_bool(0.7) {
            g.set_vertex_property(&id, "x", Value::Int(rng.gen_range(0..3)))
                .unwrap();
        }
    }
    for j in 0..rng.gen_range(0..=12) {
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let id = format!("{j}");
        let ty = TYPES.choose(rng).unwrap();
        g.add_edge(&id, &format!("v{s}"), &format!("v{t}"), ty)
            .unwrap();
        if rng.gen_bool(0.6) {
            g.set_edge_property(&id, "w", Value::Int(rng.gen_range(0..3)))
                .unwrap();
        }
    }
    g
}

/// Features of one generated query.
#[derive(Debug, Default)]
struct Shape {
    multi_match: bool,
    comma: bool,
    optional: bool,
    where_clause: bool,
    pattern_predicate: bool,
    range: bool,
    shared_edge: bool,
    unique_edges: bool,
}

struct QueryGen<'r, R: Rng> {
    rng: &'r mut R,
    vertices: Vec<String>,
    edges: Vec<String>,
    ranges: Vec<String>,
    shape: Shape,
}

impl<R: Rng> QueryGen<'_, R> {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(self.rng).copied().unwrap()
    }

    fn node(&mut self, clause_vertices: &mut Vec<String>) -> String {
        let mut s = String::from("(");
        if self.rng.gen_bool(0.75) {
            let v = self.pick(&VERTEX_VARS);
            s.push_str(v);
            if !clause_vertices.iter().any(|x| x == v) {
                clause_vertices.push(v.to_string());
            }
        }
        if self.rng.gen_bool(0.3) {
            s.push(':');
            s.push_str(self.pick(&LABELS));
        }
        s.push(')');
        s
    }

    fn types(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 | 1 => String::new(),
            2 => format!(":{}", self.pick(&TYPES)),
            _ => {
                let mut ts: Vec<&str> = TYPES.choose_multiple(self.rng, 2).copied().collect();
                ts.sort();
                format!(":{}", ts.join("|"))
            }
        }
    }

    fn range_text(&mut self) -> &'static str {
        self.pick(&[
            "*1..2", "*0..1", "*2", "*..2", "*1..3", "*2..3", "*0..2", "*1..1", "*3",
        ])
    }

    /// Returns the relationship text and the variable it binds, if any.
    fn rel(&mut self, ranged: bool, clause_edges: &mut Vec<String>) -> (String, Option<String>) {
        let mut bound = None;
        let mut body = String::new();
        if self.rng.gen_bool(0.6) {
            let name = if ranged {
                let free: Vec<&str> = RANGE_VARS
                    .iter()
                    .copied()
                    .filter(|v| !clause_edges.iter().any(|x| x == v))
                    .collect();
                free.choose(self.rng).map(|s| s.to_string())
            } else {
                let reuse: Vec<String> = self
                    .edges
                    .iter()
                    .filter(|v| !clause_edges.contains(v))
                    .cloned()
                    .collect();
                if !reuse.is_empty() && self.rng.gen_bool(0.5) {
                    self.shape.shared_edge = true;
                    reuse.choose(self.rng).cloned()
                } else {
                    let free: Vec<&str> = EDGE_VARS
                        .iter()
                        .copied()
                        .filter(|v| !clause_edges.iter().any(|x| x == v))
                        .collect();
                    free.choose(self.rng).map(|s| s.to_string())
                }
            };
            if let Some(name) = name {
                if ranged && self.ranges.contains(&name) {
                    self.shape.shared_edge = true;
                }
                body.push_str(&name);
                clause_edges.push(name.clone());
                bound = Some(name);
            }
        }
        body.push_str(&self.types());
        if ranged {
            body.push_str(self.range_text());
        }
        let inner = if body.is_empty() && self.rng.gen_bool(0.5) {
            String::new()
        } else {
            format!("[{body}]")
        };
        let text = match self.rng.gen_range(0..3) {
            0 => format!("-{inner}->"),
            1 => format!("<-{inner}-"),
            _ => format!("-{inner}-"),
        };
        (text, bound)
    }

    fn scalar_atom(&mut self, vertices: &[String], edges: &[String]) -> String {
        let k = self.rng.gen_range(0..3);
        let op = self.pick(&["=", "<>", "<", ">="]);
        let choice = self.rng.gen_range(0..6);
        if choice == 0 && !edges.is_empty() {
            let e = edges.choose(self.rng).unwrap();
            return format!("{e}.w {op} {k}");
        }
        if vertices.is_empty() {
            return format!("{k} {op} 1");
        }
        let v = vertices.choose(self.rng).unwrap().clone();
        match choice {
            1 => format!("{v}.x IS NULL"),
            2 => format!("{v}.x IS NOT NULL"),
            3 => format!("{v}:{}", self.pick(&LABELS)),
            4 => {
                let u = vertices.choose(self.rng).unwrap();
                format!("{v} {} {u}", self.pick(&["=", "<>"]))
            }
            _ => format!("{v}.x {op} {k}"),
        }
    }

    fn scalar_where(&mut self, vertices: &[String], edges: &[String]) -> String {
        let a = self.scalar_atom(vertices, edges);
        let expr = match self.rng.gen_range(0..4) {
            0 => {
                let b = self.scalar_atom(vertices, edges);
                format!("{a} AND {b}")
            }
            1 => {
                let b = self.scalar_atom(vertices, edges);
                format!("({a} OR {b})")
            }
            _ => a,
        };
        if self.rng.gen_bool(0.2) {
            format!("NOT ({expr})")
        } else {
            expr
        }
    }

    fn pattern_predicate(&mut self, vertices: &[String]) -> String {
        let end = |rng: &mut R| {
            if rng.gen_bool(0.7) {
                format!("({})", vertices.choose(rng).unwrap())
            } else {
                "()".to_string()
            }
        };
        let (l, r) = (end(self.rng), end(self.rng));
        let ty = self.types();
        let rel = match self.rng.gen_range(0..3) {
            0 => format!("-[{ty}]->"),
            1 => format!("<-[{ty}]-"),
            _ => format!("-[{ty}]-"),
        };
        let neg = if self.rng.gen_bool(0.4) { "NOT " } else { "" };
        format!("{neg}{l}{rel}{r}")
    }

    fn clause(&mut self, index: usize, rel_budget: &mut usize, range_budget: &mut usize) -> String {
        let optional = if index == 0 {
            self.rng.gen_bool(0.05)
        } else {
            self.rng.gen_bool(0.35)
        };
        let n_patterns = if self.rng.gen_bool(0.3) { 2 } else { 1 };
        let mut clause_vertices = Vec::new();
        let mut clause_edges = Vec::new();
        let mut clause_rels = 0;
        let mut patterns = Vec::new();
        for _ in 0..n_patterns {
            let mut s = self.node(&mut clause_vertices);
            let n_rels = self.rng.gen_range(0..=2.min(*rel_budget));
            for _ in 0..n_rels {
                let ranged = *range_budget > 0 && self.rng.gen_bool(0.3);
                if ranged {
                    *range_budget -= 1;
                    self.shape.range = true;
                }
                *rel_budget -= 1;
                clause_rels += 1;
                let (rel, bound) = self.rel(ranged, &mut clause_edges);
                s.push_str(&rel);
                s.push_str(&self.node(&mut clause_vertices));
                if let Some(name) = bound {
                    let list = if ranged {
                        &mut self.ranges
                    } else {
                        &mut self.edges
                    };
                    if !list.contains(&name) {
                        list.push(name);
                    }
                }
            }
            patterns.push(s);
        }
        if clause_rels >= 2 {
            self.shape.unique_edges = true;
        }
        self.shape.comma |= n_patterns > 1;
        self.shape.optional |= optional;
        for v in clause_vertices {
            if !self.vertices.contains(&v) {
                self.vertices.push(v);
            }
        }
        let mut text = format!(
            "{}MATCH {}",
            if optional { "OPTIONAL " } else { "" },
            patterns.join(", ")
        );
        if self.rng.gen_bool(0.45) {
            self.shape.where_clause = true;
            let (vs, es) = (self.vertices.clone(), self.edges.clone());
            let mut cond = self.scalar_where(&vs, &es);
            if !optional && !vs.is_empty() && self.rng.gen_bool(0.3) {
                self.shape.pattern_predicate = true;
                cond = format!("{} AND {cond}", self.pattern_predicate(&vs));
            }
            text.push_str(" WHERE ");
            text.push_str(&cond);
        }
        text
    }

    fn query(&mut self) -> String {
        let n_clauses = *[1, 1, 2, 2, 3].choose(self.rng).unwrap();
        self.shape.multi_match = n_clauses > 1;
        let mut rel_budget = 3;
        let mut range_budget = 1;
        let clauses: Vec<String> = (0..n_clauses)
            .map(|i| self.clause(i, &mut rel_budget, &mut range_budget))
            .collect();
        let mut names: Vec<String> = self
            .vertices
            .iter()
            .chain(&self.edges)
            .chain(&self.ranges)
            .cloned()
            .collect();
        names.shuffle(self.rng);
        let mut items: Vec<String> = names
            .iter()
            .take(self.rng.gen_range(1..=names.len().max(1)))
            .cloned()
            .collect();
        if !self.vertices.is_empty() && self.rng.gen_bool(0.3) {
            items.push(format!("{}.x", self.vertices.choose(self.rng).unwrap()));
        }
        if items.is_empty() {
            items.push("1 AS one".to_string());
        }
        let distinct = if self.rng.gen_bool(0.2) {
            "DISTINCT "
        } else {
            ""
        };
        format!(
            "{} RETURN {distinct}{}",
            clauses.join(" "),
            items.join(", ")
        )
    }
}

pub fn random_query(rng: &mut impl Rng) -> (String, Coverage) {
    let mut gen = QueryGen {
        rng,
        vertices: Vec::new(),
        edges: Vec::new(),
        ranges: Vec::new(),
        shape: Shape::default(),
    };
    let q = gen.query();
    let s = gen.shape;
    let c = Coverage {
        cases: 1,
        multi_match: s.multi_match as usize,
        comma: s.comma as usize,
        optional: s.optional as usize,
        where_clause: s.where_clause as usize,
        pattern_predicate: s.pattern_predicate as usize,
        range: s.range as usize,
        shared_edge: s.shared_edge as usize,
        unique_edges: s.unique_edges as usize,
        nonempty_results: 0,
    };
    (q, c)
}

impl Coverage {
    fn add(&mut self, o: &Coverage) {
        self.cases += o.cases;
        self.multi_match += o.multi_match;
        self.comma += o.comma;
        self.optional += o.optional;
        self.where_clause += o.where_clause;
        self.pattern_predicate += o.pattern_predicate;
        self.range += o.range;
        self.shared_edge += o.shared_edge;
        self.unique_edges += o.unique_edges;
        self.nonempty_results += o.nonempty_results;
    }

    /// Every feature was exercised at least `min` times.
    pub fn covers_all(&self, min: usize) -> bool {
        [
            self.multi_match,
            self.comma,
            self.optional,
            self.where_clause,
            self.pattern_predicate,
            self.range,
            self.shared_edge,
            self.unique_edges,
            self.nonempty_results,
        ]
        .iter()
        .all(|&n| n >= min)
    }
}

/// Runs `cases` random graph/query pairs. Returns the coverage and a
/// description of every disagreement or failure.
pub fn run_differential(cases: usize, seed: u64) -> (Coverage, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = Coverage::default();
    let mut failures = Vec::new();
    for i in 0..cases {
        let g = random_graph(&mut rng);
        let (q, mut cov) = random_query(&mut rng);
        let fail =
            |what: String| format!("case {i}: {what}\n  query: {q}\n  graph: {}", g.to_json());
        let outcome = (|| {
            let ast = parse(&q).map_err(|e| format!("parse: {e}"))?;
            let plan = compile(&ast).map_err(|e| format!("compile: {e}"))?;
            let got = evaluate(&plan, &g).map_err(|e| format!("evaluate: {e}"))?;
            let want = oracle_query(&ast, &g)
                .map_err(|e| format!("oracle: {e}"))?
                .ok_or("oracle not applicable")?;
            if !want.bag_eq(&got) {
                return Err(format!(
                    "mismatch: evaluator {} rows, oracle {} rows",
                    got.len(),
                    want.len()
                ));
            }
            Ok(got.len())
        })();
        match outcome {
            Ok(n) => cov.nonempty_results = (n > 0) as usize,
            Err(e) => failures.push(fail(e)),
        }
        total.add(&cov);
    }
    (total, failures)
}
