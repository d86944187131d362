//! Scalar expression evaluation under three-valued logic.

use std::collections::BTreeMap;

use crate::algebra::{ArithOp, CmpOp, ScalarExpr, Schema};
use crate::graph::PropertyGraph;
use crate::value::Value;

use super::EvalError;

/// Name lookup for expression evaluation.
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<&Value>;
}

/// A tuple viewed through its schema.
pub struct RowRef<'a> {
    pub schema: &'a Schema,
    pub row: &'a [Value],
}

impl Bindings for RowRef<'_> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.schema.index_of(name).map(|i| &self.row[i])
    }
}

impl Bindings for BTreeMap<String, Value> {
    fn lookup(&self, name: &str) -> Option<&Value> {
        self.get(name)
    }
}

fn lookup<'a>(env: &'a dyn Bindings, name: &str) -> Result<&'a Value, EvalError> {
    env.lookup(name)
        .ok_or_else(|| EvalError::UnknownAttribute(name.to_string()))
}

fn truth(v: &Value, ctx: &str) -> Result<Option<bool>, EvalError> {
    match v {
        Value::Bool(b) => Ok(Some(*b)),
        Value::Null => Ok(None),
        other => Err(EvalError::Type(format!(
            "{ctx} expects a boolean, got {}",
            other.kind_name()
        ))),
    }
}

fn from_truth(t: Option<bool>) -> Value {
    t.map_or(Value::Null, Value::Bool)
}

/// Evaluates a predicate; only `true` keeps a tuple.
pub fn holds(expr: &ScalarExpr, env: &dyn Bindings, g: &PropertyGraph) -> Result<bool, EvalError> {
    let v = eval_scalar(expr, env, g)?;
    Ok(truth(&v, "a predicate")? == Some(true))
}

pub fn eval_scalar(
    expr: &ScalarExpr,
    env: &dyn Bindings,
    g: &PropertyGraph,
) -> Result<Value, EvalError> {
    Ok(match expr {
        ScalarExpr::Literal(v) => v.clone(),
        ScalarExpr::Var(name) => lookup(env, name)?.clone(),
        ScalarExpr::Prop { var, key } => match lookup(env, var)? {
            Value::Null => Value::Null,
            element => g.get_property(element, key)?,
        },
        ScalarExpr::Arith(op, l, r) => {
            arith(*op, eval_scalar(l, env, g)?, eval_scalar(r, env, g)?)?
        }
        ScalarExpr::Neg(e) => match eval_scalar(e, env, g)? {
            Value::Null => Value::Null,
            Value::Int(i) => Value::Int(i.checked_neg().ok_or(EvalError::Overflow)?),
            Value::Float(f) => Value::Float(-f),
            other => {
                return Err(EvalError::Type(format!(
                    "cannot negate a {}",
                    other.kind_name()
                )))
            }
        },
        ScalarExpr::Cmp(op, l, r) => {
            let (a, b) = (eval_scalar(l, env, g)?, eval_scalar(r, env, g)?);
            from_truth(compare(*op, &a, &b))
        }
        ScalarExpr::And(l, r) => {
            let a = truth(&eval_scalar(l, env, g)?, "AND")?;
            if a == Some(false) {
                return Ok(Value::Bool(false));
            }
            match (a, truth(&eval_scalar(r, env, g)?, "AND")?) {
                (_, Some(false)) => Value::Bool(false),
                (Some(true), Some(true)) => Value::Bool(true),
                _ => Value::Null,
            }
        }
        ScalarExpr::Or(l, r) => {
            let a = truth(&eval_scalar(l, env, g)?, "OR")?;
            if a == Some(true) {
                return Ok(Value::Bool(true));
            }
            match (a, truth(&eval_scalar(r, env, g)?, "OR")?) {
                (_, Some(true)) => Value::Bool(true),
                (Some(false), Some(false)) => Value::Bool(false),
                _ => Value::Null,
            }
        }
        ScalarExpr::Not(e) => from_truth(truth(&eval_scalar(e, env, g)?, "NOT")?.map(|b| !b)),
        ScalarExpr::IsNull { expr, negated } => {
            Value::Bool(eval_scalar(expr, env, g)?.is_null() != *negated)
        }
        ScalarExpr::HasLabels { var, labels } => match lookup(env, var)? {
            Value::Null => Value::Null,
            Value::Vertex(v) => Value::Bool(g.has_labels(v, labels)?),
            other => {
                return Err(EvalError::Type(format!(
                    "label test on a {}",
                    other.kind_name()
                )))
            }
        },
        ScalarExpr::Agg { .. } => {
            return Err(EvalError::Type(format!(
                "aggregate `{expr}` outside of a grouping"
            )))
        }
    })
}

/// Comparison under three-valued logic; `None` is `NULL`.
pub fn compare(op: CmpOp, a: &Value, b: &Value) -> Option<bool> {
    match op {
        CmpOp::Eq => a.cypher_eq(b),
        CmpOp::Ne => a.cypher_eq(b).map(|x| !x),
        CmpOp::Lt => a.cypher_cmp(b).map(|o| o.is_lt()),
        CmpOp::Le => a.cypher_cmp(b).map(|o| o.is_le()),
        CmpOp::Gt => a.cypher_cmp(b).map(|o| o.is_gt()),
        CmpOp::Ge => a.cypher_cmp(b).map(|o| o.is_ge()),
    }
}

/// Integer division truncates; division or remainder by zero is `NULL`.
pub fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use Value::{Float, Int, List, Null, Text};
    Ok(match (op, a, b) {
        (_, Null, _) | (_, _, Null) => Null,
        (ArithOp::Add, Text(x), Text(y)) => Text(x + &y),
        (ArithOp::Add, List(mut x), List(y)) => {
            x.extend(y);
            List(x)
        }
        (op, Int(x), Int(y)) => {
            let r = match op {
                ArithOp::Add => x.checked_add(y),
                ArithOp::Sub => x.checked_sub(y),
                ArithOp::Mul => x.checked_mul(y),
                ArithOp::Div | ArithOp::Mod if y == 0 => return Ok(Null),
                ArithOp::Div => x.checked_div(y),
                ArithOp::Mod => x.checked_rem(y),
            };
            Int(r.ok_or(EvalError::Overflow)?)
        }
        (op, x @ (Int(_) | Float(_)), y @ (Int(_) | Float(_))) => {
            let (x, y) = (as_f64(&x), as_f64(&y));
            match op {
                ArithOp::Add => Float(x + y),
                ArithOp::Sub => Float(x - y),
                ArithOp::Mul => Float(x * y),
                ArithOp::Div | ArithOp::Mod if y == 0.0 => Null,
                ArithOp::Div => Float(x / y),
                ArithOp::Mod => Float(x % y),
            }
        }
        (op, x, y) => {
            return Err(EvalError::Type(format!(
                "cannot apply `{}` to {} and {}",
                op.symbol(),
                x.kind_name(),
                y.kind_name()
            )))
        }
    })
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Int(i) => *i as f64,
        Value::Float(f) => *f,
        _ => unreachable!("numeric operand"),
    }
}
