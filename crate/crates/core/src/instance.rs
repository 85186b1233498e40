//! JSON instance documents:
//! `{ nodes: [{id, x, y}], edges: [{u, v, time}], station, params: {b, B, T} }`.
//!
//! Unknown fields are ignored with a warning. Node ids must be unique and
//! form the range `0..n` in any order.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graph::{Graph, GraphError, InstanceParams, NodeId, ParamsError, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: NodeId,
    pub v: NodeId,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub station: NodeId,
    pub params: InstanceParams,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed instance document")]
    Json(#[from] serde_json::Error),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("node ids must be exactly 0..{n}; id {id} is out of range")]
    IdOutOfRange { id: NodeId, n: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

const TOP_FIELDS: &[&str] = &["nodes", "edges", "station", "params"];
const NODE_FIELDS: &[&str] = &["id", "x", "y"];
const EDGE_FIELDS: &[&str] = &["u", "v", "time"];
const PARAM_FIELDS: &[&str] = &["b", "B", "T", "per_node_deadline"];

fn warn_unknown(obj: &Value, known: &[&str], context: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Value::Object(map) = obj {
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                out.push(format!("{context}.{key}"));
            }
        }
    }
    out
}

/// Field paths that the parser does not understand and will ignore.
pub fn unknown_fields(doc: &Value) -> Vec<String> {
    let mut out = warn_unknown(doc, TOP_FIELDS, "$");
    if let Some(Value::Array(nodes)) = doc.get("nodes") {
        for (i, n) in nodes.iter().enumerate() {
            out.extend(warn_unknown(n, NODE_FIELDS, &format!("$.nodes[{i}]")));
        }
    }
    if let Some(Value::Array(edges)) = doc.get("edges") {
        for (i, e) in edges.iter().enumerate() {
            out.extend(warn_unknown(e, EDGE_FIELDS, &format!("$.edges[{i}]")));
        }
    }
    if let Some(params) = doc.get("params") {
        out.extend(warn_unknown(params, PARAM_FIELDS, "$.params"));
    }
    out
}

impl InstanceDoc {
    pub fn from_graph(g: &Graph, params: &InstanceParams) -> Self {
        InstanceDoc {
            nodes: g
                .coords()
                .iter()
                .enumerate()
                .map(|(id, p)| NodeRecord { id, x: p.x, y: p.y })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    u: e.u,
                    v: e.v,
                    time: e.time,
                })
                .collect(),
            station: g.station(),
            params: params.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let raw: Value = serde_json::from_str(text)?;
        for field in unknown_fields(&raw) {
            log::warn!("ignoring unknown instance field {field}");
        }
        // Strip the unknown params keys so the strict params type accepts them.
        let mut raw = raw;
        if let Some(Value::Object(params)) = raw.get_mut("params") {
            params.retain(|k, _| PARAM_FIELDS.contains(&k.as_str()));
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn to_graph(&self) -> Result<(Graph, InstanceParams), InstanceError> {
        let n = self.nodes.len();
        let mut coords = vec![Point { x: 0.0, y: 0.0 }; n];
        let mut seen = BTreeSet::new();
        for rec in &self.nodes {
            if !seen.insert(rec.id) {
                return Err(InstanceError::DuplicateId(rec.id));
            }
            if rec.id >= n {
                return Err(InstanceError::IdOutOfRange { id: rec.id, n });
            }
            coords[rec.id] = Point { x: rec.x, y: rec.y };
        }
        let g = Graph::new(
            coords,
            self.edges.iter().map(|e| (e.u, e.v, e.time)),
            self.station,
        )?;
        self.params.validate()?;
        Ok((g, self.params.clone()))
    }

    pub fn read(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json()).map_err(|source| InstanceError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
