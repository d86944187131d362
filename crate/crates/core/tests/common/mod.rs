#![allow(dead_code)]

pub mod criteria;
pub mod differential;
pub mod props;

use std::path::PathBuf;

use gqe::algebra::{render, AlgebraNode};
use gqe::compiler::compile;
use gqe::eval::{evaluate, Relation};
use gqe::parser::parse;
use gqe::{load_graph, PropertyGraph, Value};

pub fn tests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn fixture_path() -> PathBuf {
    tests_dir().join("fixtures/social.json")
}

pub fn fixture() -> PropertyGraph {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture readable");
    load_graph(&text).expect("fixture loads")
}

pub fn listing_path(n: u32) -> PathBuf {
    tests_dir().join(format!("golden/listing{n:02}.cql"))
}

pub fn listing(n: u32) -> String {
    std::fs::read_to_string(listing_path(n)).expect("listing readable")
}

pub fn golden_plan(n: u32) -> String {
    std::fs::read_to_string(tests_dir().join(format!("golden/listing{n:02}.plan")))
        .expect("golden plan readable")
}

pub fn plan(q: &str) -> AlgebraNode {
    let ast = parse(q).unwrap_or_else(|e| panic!("parse `{q}`: {e}"));
    compile(&ast).unwrap_or_else(|e| panic!("compile `{q}`: {e}"))
}

pub fn explain(q: &str) -> String {
    render(&plan(q))
}

pub fn run(q: &str, g: &PropertyGraph) -> Relation {
    evaluate(&plan(q), g).unwrap_or_else(|e| panic!("evaluate `{q}`: {e}"))
}

/// Rows as display strings, for compact comparisons.
pub fn rows(r: &Relation) -> Vec<Vec<String>> {
    r.rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| match v {
                    Value::Text(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect()
        })
        .collect()
}

pub fn sorted(mut v: Vec<Vec<String>>) -> Vec<Vec<String>> {
    v.sort();
    v
}

pub fn strs(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect()
}
