//! Scalar expressions evaluated per tuple: literals, attribute references,
//! property access, arithmetic, comparison, Kleene boolean logic, label tests
//! and aggregate calls.

use std::fmt;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFn {
    Count,
    CountDistinct,
    Sum,
    Avg,
    Min,
    Max,
    Collect,
}

impl AggFn {
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Count => "count",
            AggFn::CountDistinct => "count_distinct",
            AggFn::Sum => "sum",
            AggFn::Avg => "avg",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Collect => "collect",
        }
    }

    /// Looks up an aggregate by its (case-insensitive) surface name.
    pub fn from_name(name: &str) -> Option<AggFn> {
        Some(match name.to_ascii_lowercase().as_str() {
            "count" => AggFn::Count,
            "sum" => AggFn::Sum,
            "avg" => AggFn::Avg,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "collect" => AggFn::Collect,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScalarExpr {
    Literal(Value),
    Var(String),
    Prop {
        var: String,
        key: String,
    },
    Arith(ArithOp, Box<ScalarExpr>, Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    Cmp(CmpOp, Box<ScalarExpr>, Box<ScalarExpr>),
    And(Box<ScalarExpr>, Box<ScalarExpr>),
    Or(Box<ScalarExpr>, Box<ScalarExpr>),
    Not(Box<ScalarExpr>),
    IsNull {
        expr: Box<ScalarExpr>,
        negated: bool,
    },
    /// True when the vertex carries all of the listed labels.
    HasLabels {
        var: String,
        labels: Vec<String>,
    },
    /// Aggregate call; `arg: None` is `count(*)`.
    Agg {
        func: AggFn,
        arg: Option<Box<ScalarExpr>>,
    },
}

impl ScalarExpr {
    pub fn var(name: impl Into<String>) -> Self {
        ScalarExpr::Var(name.into())
    }

    pub fn prop(var: impl Into<String>, key: impl Into<String>) -> Self {
        ScalarExpr::Prop {
            var: var.into(),
            key: key.into(),
        }
    }

    pub fn lit(v: impl Into<Value>) -> Self {
        ScalarExpr::Literal(v.into())
    }

    pub fn cmp(op: CmpOp, l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::Cmp(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: ScalarExpr, r: ScalarExpr) -> Self {
        ScalarExpr::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: ScalarExpr) -> Self {
        ScalarExpr::Not(Box::new(e))
    }

    pub fn agg(func: AggFn, arg: Option<ScalarExpr>) -> Self {
        ScalarExpr::Agg {
            func,
            arg: arg.map(Box::new),
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, ScalarExpr::Agg { .. })
    }

    pub fn contains_aggregate(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= e.is_aggregate());
        found
    }

    /// Attribute names the expression reads, in first-occurrence order.
    pub fn referenced_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.visit(&mut |e| {
            let name = match e {
                ScalarExpr::Var(v) | ScalarExpr::Prop { var: v, .. } => v.as_str(),
                ScalarExpr::HasLabels { var, .. } => var.as_str(),
                _ => return,
            };
            if !out.contains(&name) {
                out.push(name);
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a ScalarExpr)) {
        f(self);
        match self {
            ScalarExpr::Literal(_)
            | ScalarExpr::Var(_)
            | ScalarExpr::Prop { .. }
            | ScalarExpr::HasLabels { .. } => {}
            ScalarExpr::Arith(_, l, r)
            | ScalarExpr::Cmp(_, l, r)
            | ScalarExpr::And(l, r)
            | ScalarExpr::Or(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            ScalarExpr::Neg(e) | ScalarExpr::Not(e) | ScalarExpr::IsNull { expr: e, .. } => {
                e.visit(f)
            }
            ScalarExpr::Agg { arg, .. } => {
                if let Some(a) = arg {
                    a.visit(f);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ScalarExpr::Or(..) => 1,
            ScalarExpr::And(..) => 2,
            ScalarExpr::Not(_) => 3,
            ScalarExpr::Cmp(..) | ScalarExpr::IsNull { .. } => 4,
            ScalarExpr::Arith(ArithOp::Add | ArithOp::Sub, ..) => 5,
            ScalarExpr::Arith(..) => 6,
            ScalarExpr::Neg(_) => 7,
            _ => 8,
        }
    }

    /// Text of the expression with attribute names left unquoted. This is the
    /// column name an unaliased projection item receives.
    pub fn plain_text(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, false).expect("writing to a String");
        s
    }

    fn write(&self, out: &mut impl fmt::Write, quote: bool) -> fmt::Result {
        let name = |n: &str| {
            if quote {
                quote_name(n)
            } else {
                n.to_string()
            }
        };
        match self {
            ScalarExpr::Literal(v) => write!(out, "{v}"),
            ScalarExpr::Var(v) => out.write_str(&name(v)),
            ScalarExpr::Prop { var, key } => write!(out, "{}.{}", name(var), name(key)),
            ScalarExpr::Arith(op, l, r) => {
                let p = self.precedence();
                self.child(out, l, p, quote)?;
                write!(out, " {} ", op.symbol())?;
                self.child(out, r, p + 1, quote)
            }
            ScalarExpr::Neg(e) => {
                out.write_str("-")?;
                self.child(out, e, 7, quote)
            }
            ScalarExpr::Cmp(op, l, r) => {
                self.child(out, l, 5, quote)?;
                write!(out, " {} ", op.symbol())?;
                self.child(out, r, 5, quote)
            }
            ScalarExpr::And(l, r) => {
                self.child(out, l, 2, quote)?;
                out.write_str(" AND ")?;
                self.child(out, r, 3, quote)
            }
            ScalarExpr::Or(l, r) => {
                self.child(out, l, 1, quote)?;
                out.write_str(" OR ")?;
                self.child(out, r, 2, quote)
            }
            ScalarExpr::Not(e) => {
                out.write_str("NOT ")?;
                self.child(out, e, 3, quote)
            }
            ScalarExpr::IsNull { expr, negated } => {
                self.child(out, expr, 5, quote)?;
                out.write_str(if *negated { " IS NOT NULL" } else { " IS NULL" })
            }
            ScalarExpr::HasLabels { var, labels } => {
                out.write_str(&name(var))?;
                for l in labels {
                    write!(out, ":{}", name(l))?;
                }
                Ok(())
            }
            ScalarExpr::Agg { func, arg } => {
                write!(out, "{}(", func.name())?;
                match arg {
                    None => out.write_str("*")?,
                    Some(a) => a.write(out, quote)?,
                }
                out.write_str(")")
            }
        }
    }

    fn child(
        &self,
        out: &mut impl fmt::Write,
        e: &ScalarExpr,
        min: u8,
        quote: bool,
    ) -> fmt::Result {
        if e.precedence() < min {
            out.write_str("(")?;
            e.write(out, quote)?;
            out.write_str(")")
        } else {
            e.write(out, quote)
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, true)
    }
}

const RENDER_KEYWORDS: &[&str] = &["AND", "OR", "NOT", "IS", "NULL", "TRUE", "FALSE"];

/// Backtick-quotes a name unless it is a plain identifier.
pub fn quote_name(name: &str) -> String {
    let mut chars = name.chars();
    let plain = matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
        && !RENDER_KEYWORDS.contains(&name.to_ascii_uppercase().as_str());
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}
