//! Algebraic laws of the evaluator's operators, checked on random relations.
//!
//! Every suite runs `CASES` cases from a fixed seed, so failures reproduce.

use proptest::prelude::*;
use proptest::sample::{select, subsequence};
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use gqe::algebra::{CmpOp, NamedExpr, ScalarExpr, Schema, SortKey, SortOrder};
use gqe::eval::{
    all_different, bag_union, dedup, join, project, select as sigma, sort, top, Relation,
};
use gqe::{PropertyGraph, Value};

pub const CASES: u32 = 1000;
const SEED: [u8; 32] = *b"gqe algebra laws, fixed seed 001";
const COLS: [&str; 3] = ["a", "b", "c"];

pub fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

fn value() -> impl Strategy<Value = Value> + Clone {
    prop_oneof![
        (0i64..3).prop_map(Value::Int),
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        select(vec!["x", "y"]).prop_map(Value::text),
        select(vec!["1", "2", "3"]).prop_map(Value::edge),
        prop::collection::vec(select(vec!["1", "2", "3"]).prop_map(Value::edge), 0..3)
            .prop_map(Value::List),
    ]
}

/// Values whose equality is an equivalence, so join laws hold exactly.
fn key_value() -> impl Strategy<Value = Value> + Clone {
    prop_oneof![
        (0i64..3).prop_map(Value::Int),
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        select(vec!["x", "y"]).prop_map(Value::text),
    ]
}

fn rows_of<S: Strategy<Value = Value> + Clone>(
    schema: Schema,
    cell: S,
    max_rows: usize,
) -> impl Strategy<Value = Relation> {
    let width = schema.len();
    prop::collection::vec(prop::collection::vec(cell, width), 0..max_rows)
        .prop_map(move |rows| Relation::new(schema.clone(), rows))
}

fn any_schema() -> impl Strategy<Value = Schema> {
    subsequence(COLS.to_vec(), 0..=3)
        .prop_shuffle()
        .prop_map(Schema::new)
}

/// A relation over `a, b, c` with mixed values.
fn abc() -> impl Strategy<Value = Relation> {
    rows_of(Schema::new(COLS), value(), 8)
}

fn keyed(max_rows: usize) -> impl Strategy<Value = Relation> {
    any_schema().prop_flat_map(move |s| rows_of(s, key_value(), max_rows))
}

/// Two relations over the same columns, in independent orders.
fn union_pair() -> impl Strategy<Value = (Relation, Relation)> {
    any_schema().prop_flat_map(|s| {
        let other = Just(s.names().to_vec())
            .prop_shuffle()
            .prop_map(Schema::new);
        (
            rows_of(s, value(), 6),
            other.prop_flat_map(|o| rows_of(o, value(), 6)),
        )
    })
}

fn predicate() -> impl Strategy<Value = ScalarExpr> {
    let v = ScalarExpr::var;
    let one = || ScalarExpr::lit(1i64);
    select(vec![
        ScalarExpr::cmp(CmpOp::Eq, v("a"), one()),
        ScalarExpr::cmp(CmpOp::Lt, v("a"), v("b")),
        ScalarExpr::IsNull {
            expr: Box::new(v("c")),
            negated: false,
        },
        ScalarExpr::not(ScalarExpr::cmp(CmpOp::Eq, v("b"), v("c"))),
        ScalarExpr::or(
            ScalarExpr::cmp(CmpOp::Ge, v("a"), one()),
            ScalarExpr::IsNull {
                expr: Box::new(v("b")),
                negated: true,
            },
        ),
        ScalarExpr::and(
            ScalarExpr::cmp(CmpOp::Ne, v("a"), v("c")),
            ScalarExpr::cmp(CmpOp::Eq, v("b"), ScalarExpr::lit("x")),
        ),
    ])
}

fn sort_keys() -> impl Strategy<Value = Vec<SortKey>> {
    prop::collection::vec(
        (select(COLS.to_vec()), any::<bool>()).prop_map(|(c, asc)| SortKey {
            expr: ScalarExpr::var(c),
            order: if asc { SortOrder::Asc } else { SortOrder::Desc },
        }),
        0..4,
    )
}

fn check<S: Strategy>(
    strategy: S,
    law: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner().run(&strategy, law).map_err(|e| e.to_string())
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

fn g() -> PropertyGraph {
    PropertyGraph::new()
}

pub fn selection_idempotent() -> Result<(), String> {
    check((abc(), predicate()), |(r, p)| {
        let once = ok(sigma(r, &p, &g()))?;
        let twice = ok(sigma(once.clone(), &p, &g()))?;
        prop_assert_eq!(once, twice);
        Ok(())
    })
}

pub fn dedup_idempotent() -> Result<(), String> {
    check(abc(), |r| {
        let once = dedup(r);
        prop_assert_eq!(dedup(once.clone()), once);
        Ok(())
    })
}

pub fn all_different_idempotent() -> Result<(), String> {
    let vars = subsequence(COLS.to_vec(), 0..=3)
        .prop_map(|v| v.into_iter().map(String::from).collect::<Vec<_>>());
    check((abc(), vars), |(r, vars)| {
        let once = ok(all_different(r, &vars))?;
        prop_assert_eq!(ok(all_different(once.clone(), &vars))?, once);
        Ok(())
    })
}

pub fn sort_idempotent() -> Result<(), String> {
    check((abc(), sort_keys()), |(r, keys)| {
        let once = ok(sort(r, &keys, &g()))?;
        prop_assert_eq!(ok(sort(once.clone(), &keys, &g()))?, once);
        Ok(())
    })
}

pub fn identity_projection_idempotent() -> Result<(), String> {
    check(abc(), |r| {
        let items: Vec<NamedExpr> = r
            .schema
            .names()
            .iter()
            .map(|n| NamedExpr::new(ScalarExpr::var(n.as_str()), n.as_str()))
            .collect();
        let once = ok(project(r.clone(), &items, &g()))?;
        prop_assert_eq!(&once, &r);
        prop_assert_eq!(ok(project(once.clone(), &items, &g()))?, once);
        Ok(())
    })
}

fn nat_join(l: &Relation, r: &Relation) -> Result<Relation, TestCaseError> {
    ok(join(l, r, None, false, &g()))
}

pub fn join_commutative() -> Result<(), String> {
    check((keyed(6), keyed(6)), |(l, r)| {
        let lr = nat_join(&l, &r)?;
        let rl = nat_join(&r, &l)?;
        prop_assert!(lr.bag_eq(&rl), "{:?} vs {:?}", lr, rl);
        Ok(())
    })
}

pub fn join_associative() -> Result<(), String> {
    check((keyed(5), keyed(5), keyed(5)), |(a, b, c)| {
        let left = nat_join(&nat_join(&a, &b)?, &c)?;
        let right = nat_join(&a, &nat_join(&b, &c)?)?;
        prop_assert!(left.bag_eq(&right), "{:?} vs {:?}", left, right);
        Ok(())
    })
}

pub fn bag_union_commutative() -> Result<(), String> {
    check(union_pair(), |(l, r)| {
        let lr = ok(bag_union(l.clone(), r.clone()))?;
        let rl = ok(bag_union(r, l))?;
        prop_assert!(lr.bag_eq(&rl));
        Ok(())
    })
}

pub fn bag_union_associative() -> Result<(), String> {
    let triple = any_schema().prop_flat_map(|s| {
        let shuffled = || {
            Just(s.names().to_vec())
                .prop_shuffle()
                .prop_flat_map(|o| rows_of(Schema::new(o), value(), 5))
        };
        (rows_of(s.clone(), value(), 5), shuffled(), shuffled())
    });
    check(triple, |(a, b, c)| {
        let left = ok(bag_union(ok(bag_union(a.clone(), b.clone()))?, c.clone()))?;
        let right = ok(bag_union(a, ok(bag_union(b, c))?))?;
        prop_assert!(left.bag_eq(&right));
        Ok(())
    })
}

pub fn projection_cardinality() -> Result<(), String> {
    let items = subsequence(COLS.to_vec(), 0..=3);
    check((abc(), items), |(r, cols)| {
        let items: Vec<NamedExpr> = cols
            .iter()
            .map(|c| NamedExpr::new(ScalarExpr::var(*c), *c))
            .collect();
        let p = ok(project(r.clone(), &items, &g()))?;
        prop_assert_eq!(p.len(), r.len());
        Ok(())
    })
}

pub fn bag_union_cardinality() -> Result<(), String> {
    check(union_pair(), |(l, r)| {
        let n = l.len() + r.len();
        prop_assert_eq!(ok(bag_union(l, r))?.len(), n);
        Ok(())
    })
}

pub fn top_cardinality() -> Result<(), String> {
    let limit = prop::option::of(0u64..10);
    check((abc(), 0u64..10, limit), |(r, skip, limit)| {
        let n = r.len() as u64;
        let want = n.saturating_sub(skip).min(limit.unwrap_or(u64::MAX));
        prop_assert_eq!(top(r, skip, limit).len() as u64, want);
        Ok(())
    })
}

/// `{<1,2>, <3,4>} ⊎ {<1,2>}` keeps both copies of `<1,2>`.
pub fn bag_union_example() -> Result<(), String> {
    let rel = |rows: &[[i64; 2]]| {
        Relation::new(
            Schema::new(["x", "y"]),
            rows.iter()
                .map(|r| r.iter().map(|&v| Value::Int(v)).collect())
                .collect(),
        )
    };
    let got = bag_union(rel(&[[1, 2], [3, 4]]), rel(&[[1, 2]])).map_err(|e| e.to_string())?;
    let want = rel(&[[1, 2], [3, 4], [1, 2]]);
    if got.bag_eq(&want) && got.len() == 3 {
        Ok(())
    } else {
        Err(format!("got {:?}", got.rows))
    }
}

pub type Law = fn() -> Result<(), String>;

/// Every law, by name.
pub fn all() -> Vec<(&'static str, Law)> {
    vec![
        ("selection idempotent", selection_idempotent),
        ("duplicate elimination idempotent", dedup_idempotent),
        ("all-different idempotent", all_different_idempotent),
        ("sort idempotent", sort_idempotent),
        (
            "identity projection idempotent",
            identity_projection_idempotent,
        ),
        ("join commutative", join_commutative),
        ("join associative", join_associative),
        ("bag union commutative", bag_union_commutative),
        ("bag union associative", bag_union_associative),
        ("projection cardinality", projection_cardinality),
        ("bag union cardinality", bag_union_cardinality),
        ("top cardinality", top_cardinality),
        ("bag union example", bag_union_example),
    ]
}
