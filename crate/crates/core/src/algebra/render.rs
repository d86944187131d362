//! Indented text form of a plan, used by `--explain` and the golden tests.
//!
//! One operator per line, children indented two spaces below their parent in
//! operand order. Expand carries a direction tag: `↑` out, `↓` in, `↕` both.

use std::fmt::Write;

use super::{quote_name, AlgebraNode, Direction, Expand, NamedExpr, SortOrder};

pub fn render(node: &AlgebraNode) -> String {
    let mut out = String::new();
    render_into(node, 0, &mut out);
    out
}

fn render_into(node: &AlgebraNode, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(&header(node));
    out.push('\n');
    for child in node.children() {
        render_into(child, depth + 1, out);
    }
}

fn names(ns: &[String], sep: &str) -> String {
    ns.iter()
        .map(|n| quote_name(n))
        .collect::<Vec<_>>()
        .join(sep)
}

fn items(items: &[NamedExpr]) -> String {
    items
        .iter()
        .map(|it| {
            if it.expr.plain_text() == it.name {
                it.expr.to_string()
            } else {
                format!("{} -> {}", it.expr, quote_name(&it.name))
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn vertex(name: &str, labels: &[String]) -> String {
    if labels.is_empty() {
        quote_name(name)
    } else {
        format!("{}: {}", quote_name(name), names(labels, ":"))
    }
}

fn expand(x: &Expand) -> String {
    let mut edge = quote_name(&x.edge);
    if !x.types.is_empty() {
        let _ = write!(edge, ": {}", names(&x.types, " | "));
    }
    if !x.is_single_hop() {
        let _ = write!(edge, " *{}..", x.min);
        if let Some(max) = x.max {
            let _ = write!(edge, "{max}");
        }
    }
    let (tag, left, right) = match x.direction {
        Direction::Out => ('↑', "-", "->"),
        Direction::In => ('↓', "<-", "-"),
        Direction::Both => ('↕', "-", "-"),
    };
    format!(
        "Expand{tag}({}){left}[{edge}]{right}({})",
        quote_name(&x.from),
        vertex(&x.to, &x.to_labels)
    )
}

fn header(node: &AlgebraNode) -> String {
    match node {
        AlgebraNode::GetVertices { var, labels } => format!("GetVertices({})", vertex(var, labels)),
        AlgebraNode::UnitTable => "UnitTable".into(),
        AlgebraNode::Expand(x) => expand(x),
        AlgebraNode::AllDifferent { vars, .. } => format!("AllDifferent({})", names(vars, ", ")),
        AlgebraNode::Unwind { expr, alias, .. } => {
            format!("Unwind({expr} -> {})", quote_name(alias))
        }
        AlgebraNode::Selection { predicate, .. } => format!("Selection({predicate})"),
        AlgebraNode::Projection { items: its, .. } => format!("Projection({})", items(its)),
        AlgebraNode::Grouping {
            criteria,
            items: its,
            ..
        } => {
            let crit = criteria
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ");
            format!("Grouping[{crit}]({})", items(its))
        }
        AlgebraNode::DuplicateElimination { .. } => "DuplicateElimination".into(),
        AlgebraNode::Sort { keys, .. } => {
            let ks = keys
                .iter()
                .map(|k| {
                    let arrow = match k.order {
                        SortOrder::Asc => '↑',
                        SortOrder::Desc => '↓',
                    };
                    format!("{arrow}{}", k.expr)
                })
                .collect::<Vec<_>>()
                .join(", ");
            format!("Sort({ks})")
        }
        AlgebraNode::Top { skip, limit, .. } => match limit {
            Some(l) => format!("Top(skip: {skip}, limit: {l})"),
            None => format!("Top(skip: {skip}, limit: ∞)"),
        },
        AlgebraNode::Union(..) => "Union".into(),
        AlgebraNode::BagUnion(..) => "BagUnion".into(),
        AlgebraNode::Join(..) => "Join".into(),
        AlgebraNode::LeftOuterJoin { condition, .. } => match condition {
            Some(c) => format!("LeftOuterJoin({c})"),
            None => "LeftOuterJoin".into(),
        },
    }
}
