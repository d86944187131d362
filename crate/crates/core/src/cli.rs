//! The `gqe` command line: load a graph, run one query, print the result.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::{Map, Value as Json};

use crate::algebra::render;
use crate::compiler::compile;
use crate::eval::{evaluate, Relation};
use crate::graph::load_graph;
use crate::oracle::oracle_query;
use crate::parser::parse;
use crate::value::{format_float, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "gqe",
    about = "Run an openCypher query against a Graph-JSON property graph"
)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["query", "expr"]))]
struct Args {
    /// Graph-JSON file
    #[arg(long)]
    graph: PathBuf,
    /// File containing the query
    #[arg(long)]
    query: Option<PathBuf>,
    /// Query text
    #[arg(short = 'e', value_name = "TEXT")]
    expr: Option<String>,
    /// Print the compiled algebra plan instead of evaluating it
    #[arg(long)]
    explain: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Also run the brute-force matcher and report MATCH or MISMATCH
    #[arg(long)]
    oracle: bool,
}

/// Exit status for query errors: parse, semantic, plan and evaluation.
pub const EXIT_QUERY: i32 = 1;
/// Exit status for unreadable files and malformed graphs.
pub const EXIT_INPUT: i32 = 2;
/// Exit status when `--oracle` disagrees with the evaluator.
pub const EXIT_MISMATCH: i32 = 3;

/// Runs the CLI with the given arguments (program name first) and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            // --help and --version go to stdout and succeed
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(&args, out, err) {
        Ok(code) => code,
        Err((code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn execute(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, (i32, String)> {
    let input = |e: std::io::Error, p: &PathBuf| (EXIT_INPUT, format!("{}: {e}", p.display()));
    let query_text = match (&args.query, &args.expr) {
        (Some(p), _) => std::fs::read_to_string(p).map_err(|e| input(e, p))?,
        (None, Some(t)) => t.clone(),
        (None, None) => unreachable!("clap requires a query source"),
    };
    let graph_text = std::fs::read_to_string(&args.graph).map_err(|e| input(e, &args.graph))?;
    let graph = load_graph(&graph_text).map_err(|e| (EXIT_INPUT, e.to_string()))?;
    let query = |e: &dyn std::fmt::Display| (EXIT_QUERY, e.to_string());

    let ast = parse(&query_text).map_err(|e| query(&e))?;
    let plan = compile(&ast).map_err(|e| query(&e))?;
    let io = |e: std::io::Error| (EXIT_INPUT, e.to_string());
    if args.explain {
        out.write_all(render(&plan).as_bytes()).map_err(io)?;
        return Ok(0);
    }
    let result = evaluate(&plan, &graph).map_err(|e| query(&e))?;
    let text = match args.format {
        Format::Table => to_table(&result),
        Format::Csv => to_csv(&result),
        Format::Json => to_json(&result),
    };
    out.write_all(text.as_bytes()).map_err(io)?;
    if args.oracle {
        return match oracle_query(&ast, &graph).map_err(|e| query(&e))? {
            Some(expected) if expected.bag_eq(&result) => {
                writeln!(err, "oracle: MATCH").map_err(io)?;
                Ok(0)
            }
            Some(expected) => {
                writeln!(
                    err,
                    "oracle: MISMATCH ({} rows expected, {} rows returned)",
                    expected.len(),
                    result.len()
                )
                .map_err(io)?;
                Ok(EXIT_MISMATCH)
            }
            None => {
                writeln!(
                    err,
                    "oracle: not applicable (needs a single MATCH ... RETURN without aggregation, SKIP or LIMIT)"
                )
                .map_err(io)?;
                Ok(0)
            }
        };
    }
    Ok(0)
}

/// Cell text shared by the table and CSV views; `Null` is left to the caller.
fn cell(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => format_float(*f),
        Value::Text(s) => s.clone(),
        Value::List(items) => {
            let inner: Vec<String> = items.iter().map(cell).collect();
            format!("[{}]", inner.join(", "))
        }
        Value::Vertex(id) => format!("(:{id})"),
        Value::Edge(id) => format!("[:{id}]"),
    }
}

pub fn to_table(r: &Relation) -> String {
    let header: Vec<String> = r.schema.names().to_vec();
    let body: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| if v.is_null() { "∅".into() } else { cell(v) })
                .collect()
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("{}\n", padded.join(" | ").trim_end())
    };
    let mut out = line(&header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("{}\n", rule.join("-+-")));
    for row in &body {
        out.push_str(&line(row));
    }
    let n = r.len();
    out.push_str(&format!("({n} row{})\n", if n == 1 { "" } else { "s" }));
    out
}

pub fn to_csv(r: &Relation) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, rec: Vec<String>| {
        w.write_record(&rec).expect("writing to memory");
    };
    write(&mut w, r.schema.names().to_vec());
    for row in &r.rows {
        write(
            &mut w,
            row.iter()
                .map(|v| if v.is_null() { String::new() } else { cell(v) })
                .collect(),
        );
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(i) => Json::from(*i),
        Value::Float(f) => serde_json::Number::from_f64(*f).map_or(Json::Null, Json::Number),
        Value::Text(s) => Json::String(s.clone()),
        Value::List(items) => Json::Array(items.iter().map(json_value).collect()),
        Value::Vertex(_) | Value::Edge(_) => Json::String(cell(v)),
    }
}

pub fn to_json(r: &Relation) -> String {
    let rows: Vec<Json> = r
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Json> = r
                .schema
                .names()
                .iter()
                .cloned()
                .zip(row.iter().map(json_value))
                .collect();
            Json::Object(obj)
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Json::Array(rows)).expect("serializable");
    s.push('\n');
    s
}
