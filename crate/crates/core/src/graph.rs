//! In-memory property graph and its Graph-JSON loader.
//!
//! A graph is immutable once loaded. Vertices and edges are kept in id order so
//! that every scan, and therefore every unordered query result, is
//! reproducible row for row.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::value::{EdgeId, Value, VertexId};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("malformed graph JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid graph: {0}")]
    Format(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    UnknownVertexRef { edge: String, vertex: String },
    #[error("edge `{0}` must have exactly one type")]
    EdgeType(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("property access on a {0} value")]
    NotAnElement(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct VertexData {
    labels: BTreeSet<String>,
    props: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
struct EdgeData {
    source: VertexId,
    target: VertexId,
    etype: String,
    props: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyGraph {
    vertices: BTreeMap<VertexId, VertexData>,
    edges: BTreeMap<EdgeId, EdgeData>,
    out_edges: BTreeMap<VertexId, Vec<EdgeId>>,
    in_edges: BTreeMap<VertexId, Vec<EdgeId>>,
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex<L, S>(&mut self, id: &str, labels: L) -> Result<(), GraphError>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let id = VertexId::from(id);
        if self.vertices.contains_key(&id) {
            return Err(GraphError::DuplicateVertex(id.0));
        }
        let data = VertexData {
            labels: labels.into_iter().map(Into::into).collect(),
            props: BTreeMap::new(),
        };
        self.vertices.insert(id, data);
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        id: &str,
        source: &str,
        target: &str,
        etype: &str,
    ) -> Result<(), GraphError> {
        let eid = EdgeId::from(id);
        if self.edges.contains_key(&eid) {
            return Err(GraphError::DuplicateEdge(id.to_string()));
        }
        for v in [source, target] {
            if !self.vertices.contains_key(&VertexId::from(v)) {
                return Err(GraphError::UnknownVertexRef {
                    edge: id.to_string(),
                    vertex: v.to_string(),
                });
            }
        }
        let (source, target) = (VertexId::from(source), VertexId::from(target));
        self.out_edges
            .entry(source.clone())
            .or_default()
            .push(eid.clone());
        self.in_edges
            .entry(target.clone())
            .or_default()
            .push(eid.clone());
        self.edges.insert(
            eid,
            EdgeData {
                source,
                target,
                etype: etype.to_string(),
                props: BTreeMap::new(),
            },
        );
        Ok(())
    }

    /// Sets a vertex property. Setting `Null` removes it.
    pub fn set_vertex_property(
        &mut self,
        id: &str,
        name: &str,
        value: Value,
    ) -> Result<(), GraphError> {
        let data = self
            .vertices
            .get_mut(&VertexId::from(id))
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))?;
        set_prop(&mut data.props, name, value);
        Ok(())
    }

    /// Sets an edge property. Setting `Null` removes it.
    pub fn set_edge_property(
        &mut self,
        id: &str,
        name: &str,
        value: Value,
    ) -> Result<(), GraphError> {
        let data = self
            .edges
            .get_mut(&EdgeId::from(id))
            .ok_or_else(|| GraphError::UnknownEdge(id.to_string()))?;
        set_prop(&mut data.props, name, value);
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex ids in id order.
    pub fn vertices(&self) -> impl Iterator<Item = &VertexId> {
        self.vertices.keys()
    }

    /// Edge ids in id order.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeId> {
        self.edges.keys()
    }

    pub fn has_vertex(&self, v: &VertexId) -> bool {
        self.vertices.contains_key(v)
    }

    pub fn has_edge(&self, e: &EdgeId) -> bool {
        self.edges.contains_key(e)
    }

    pub fn labels(&self, v: &VertexId) -> Result<&BTreeSet<String>, GraphError> {
        self.vertices
            .get(v)
            .map(|d| &d.labels)
            .ok_or_else(|| GraphError::UnknownVertex(v.0.clone()))
    }

    /// True when the vertex carries every label in `labels`.
    pub fn has_labels<'a, I>(&self, v: &VertexId, labels: I) -> Result<bool, GraphError>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let own = self.labels(v)?;
        Ok(labels.into_iter().all(|l| own.contains(l)))
    }

    pub fn edge_type(&self, e: &EdgeId) -> Result<&str, GraphError> {
        self.edge_data(e).map(|d| d.etype.as_str())
    }

    /// The `st` map: source and target of an edge.
    pub fn endpoints(&self, e: &EdgeId) -> Result<(&VertexId, &VertexId), GraphError> {
        self.edge_data(e).map(|d| (&d.source, &d.target))
    }

    fn edge_data(&self, e: &EdgeId) -> Result<&EdgeData, GraphError> {
        self.edges
            .get(e)
            .ok_or_else(|| GraphError::UnknownEdge(e.0.clone()))
    }

    /// Property of a vertex or edge; unset properties read as `Null`.
    pub fn get_property(&self, element: &Value, name: &str) -> Result<Value, GraphError> {
        let props = match element {
            Value::Vertex(v) => {
                &self
                    .vertices
                    .get(v)
                    .ok_or_else(|| GraphError::UnknownVertex(v.0.clone()))?
                    .props
            }
            Value::Edge(e) => &self.edge_data(e)?.props,
            other => return Err(GraphError::NotAnElement(other.kind_name())),
        };
        Ok(props.get(name).cloned().unwrap_or(Value::Null))
    }

    /// Edges incident to `v` in the given direction, paired with the vertex at
    /// the other end. An empty `types` set admits every type.
    ///
    /// For [`Direction::Both`] the outgoing pairs come first, then the incoming
    /// ones, so a self-loop is reported once per direction.
    pub fn adjacency(
        &self,
        v: &VertexId,
        direction: Direction,
        types: &BTreeSet<String>,
    ) -> Result<Vec<(EdgeId, VertexId)>, GraphError> {
        if !self.vertices.contains_key(v) {
            return Err(GraphError::UnknownVertex(v.0.clone()));
        }
        let type_ok = |d: &EdgeData| types.is_empty() || types.contains(&d.etype);
        let mut out = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            for e in self.out_edges.get(v).into_iter().flatten() {
                let d = &self.edges[e];
                if type_ok(d) {
                    out.push((e.clone(), d.target.clone()));
                }
            }
        }
        if matches!(direction, Direction::In | Direction::Both) {
            for e in self.in_edges.get(v).into_iter().flatten() {
                let d = &self.edges[e];
                if type_ok(d) {
                    out.push((e.clone(), d.source.clone()));
                }
            }
        }
        Ok(out)
    }

    /// Serializes the graph back to Graph-JSON.
    pub fn to_json(&self) -> String {
        let vertices: Vec<Json> = self
            .vertices
            .iter()
            .map(|(id, d)| {
                serde_json::json!({
                    "id": id.0,
                    "labels": d.labels.iter().collect::<Vec<_>>(),
                    "properties": props_to_json(&d.props),
                })
            })
            .collect();
        let edges: Vec<Json> = self
            .edges
            .iter()
            .map(|(id, d)| {
                serde_json::json!({
                    "id": id.0,
                    "source": d.source.0,
                    "target": d.target.0,
                    "type": d.etype,
                    "properties": props_to_json(&d.props),
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "vertices": vertices, "edges": edges }))
            .expect("graph JSON is always serializable")
    }
}

fn set_prop(props: &mut BTreeMap<String, Value>, name: &str, value: Value) {
    if value.is_null() {
        props.remove(name);
    } else {
        props.insert(name.to_string(), value);
    }
}

fn props_to_json(props: &BTreeMap<String, Value>) -> Json {
    Json::Object(
        props
            .iter()
            .map(|(k, v)| (k.clone(), value_to_json(v)))
            .collect(),
    )
}

/// JSON form of a value. Graph element references become their id strings.
pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(i) => Json::from(*i),
        Value::Float(f) => serde_json::Number::from_f64(*f)
            .map(Json::Number)
            .unwrap_or(Json::Null),
        Value::Text(s) => Json::String(s.clone()),
        Value::List(items) => Json::Array(items.iter().map(value_to_json).collect()),
        Value::Vertex(id) => Json::String(id.0.clone()),
        Value::Edge(id) => Json::String(id.0.clone()),
    }
}

/// Parses a graph from Graph-JSON text.
pub fn load_graph(source: &str) -> Result<PropertyGraph, GraphError> {
    let doc: Json = serde_json::from_str(source).map_err(|e| GraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = doc
        .as_object()
        .ok_or_else(|| GraphError::Format("top level must be an object".into()))?;

    let mut g = PropertyGraph::new();
    for (i, v) in array_field(root, "vertices")?.iter().enumerate() {
        let obj = v
            .as_object()
            .ok_or_else(|| GraphError::Format(format!("vertex #{i} is not an object")))?;
        let id = id_field(obj, "id", &format!("vertex #{i}"))?;
        let labels = match obj.get("labels") {
            None | Some(Json::Null) => Vec::new(),
            Some(Json::Array(ls)) => ls
                .iter()
                .map(|l| {
                    l.as_str().map(str::to_string).ok_or_else(|| {
                        GraphError::Format(format!("vertex `{id}`: labels must be strings"))
                    })
                })
                .collect::<Result<_, _>>()?,
            Some(_) => {
                return Err(GraphError::Format(format!(
                    "vertex `{id}`: labels must be an array"
                )))
            }
        };
        g.add_vertex(&id, labels)?;
        for (name, value) in properties(obj, &id)? {
            g.set_vertex_property(&id, &name, value)?;
        }
    }

    for (i, e) in array_field(root, "edges")?.iter().enumerate() {
        let obj = e
            .as_object()
            .ok_or_else(|| GraphError::Format(format!("edge #{i} is not an object")))?;
        let id = id_field(obj, "id", &format!("edge #{i}"))?;
        let source = id_field(obj, "source", &format!("edge `{id}`"))?;
        let target = id_field(obj, "target", &format!("edge `{id}`"))?;
        let etype = match obj.get("type") {
            Some(Json::String(t)) => t.clone(),
            Some(Json::Array(ts)) if ts.len() == 1 && ts[0].is_string() => {
                ts[0].as_str().unwrap_or_default().to_string()
            }
            _ => return Err(GraphError::EdgeType(id)),
        };
        g.add_edge(&id, &source, &target, &etype)?;
        for (name, value) in properties(obj, &id)? {
            g.set_edge_property(&id, &name, value)?;
        }
    }
    Ok(g)
}

fn array_field<'a>(root: &'a Map<String, Json>, key: &str) -> Result<&'a Vec<Json>, GraphError> {
    match root.get(key) {
        Some(Json::Array(a)) => Ok(a),
        Some(_) => Err(GraphError::Format(format!("`{key}` must be an array"))),
        None => Err(GraphError::Format(format!("missing `{key}` array"))),
    }
}

fn id_field(obj: &Map<String, Json>, key: &str, what: &str) -> Result<String, GraphError> {
    match obj.get(key) {
        Some(Json::String(s)) => Ok(s.clone()),
        Some(Json::Number(n)) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
        _ => Err(GraphError::Format(format!(
            "{what}: `{key}` must be a string or integer"
        ))),
    }
}

fn properties(obj: &Map<String, Json>, owner: &str) -> Result<Vec<(String, Value)>, GraphError> {
    match obj.get("properties") {
        None | Some(Json::Null) => Ok(Vec::new()),
        Some(Json::Object(props)) => props
            .iter()
            .map(|(k, v)| Ok((k.clone(), json_to_value(v, owner)?)))
            .collect(),
        Some(_) => Err(GraphError::Format(format!(
            "`{owner}`: properties must be an object"
        ))),
    }
}

fn json_to_value(v: &Json, owner: &str) -> Result<Value, GraphError> {
    Ok(match v {
        Json::Null => Value::Null,
        Json::Bool(b) => Value::Bool(*b),
        Json::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Json::String(s) => Value::Text(s.clone()),
        Json::Array(items) => Value::List(
            items
                .iter()
                .map(|i| json_to_value(i, owner))
                .collect::<Result<_, _>>()?,
        ),
        Json::Object(_) => {
            return Err(GraphError::Format(format!(
                "`{owner}`: map property values are not supported"
            )))
        }
    })
}
