//! JSON and DOT encodings of [`MixedGraph`].

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MixedGraph;
use crate::{Error, Result};

/// Wire form `{"n": .., "arcs": [[u, v], ..], "edges": [[u, v], ..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    #[serde(default)]
    pub arcs: Vec<[usize; 2]>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl From<&MixedGraph> for GraphJson {
    fn from(g: &MixedGraph) -> Self {
        Self {
            n: g.n(),
            arcs: g.arcs().into_iter().map(|(u, v)| [u, v]).collect(),
            edges: g.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl TryFrom<GraphJson> for MixedGraph {
    type Error = Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        let arcs: Vec<_> = j.arcs.iter().map(|a| (a[0], a[1])).collect();
        let edges: Vec<_> = j.edges.iter().map(|e| (e[0], e[1])).collect();
        MixedGraph::from_parts(j.n, &arcs, &edges)
    }
}

impl Serialize for MixedGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixedGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        MixedGraph::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl MixedGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson::from(self)).expect("graph json is always serialisable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: GraphJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        MixedGraph::try_from(j)
    }

    /// DOT text with every vertex declared, arcs as `u -> v` and undirected
    /// edges as `u -- v`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph {\n");
        for v in 0..self.n() {
            let _ = writeln!(out, "  {v};");
        }
        for (u, v) in self.arcs() {
            let _ = writeln!(out, "  {u} -> {v};");
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "  {u} -- {v};");
        }
        out.push_str("}\n");
        out
    }

    /// Parses the subset of DOT written by [`MixedGraph::to_dot`]. Vertex
    /// count is one more than the largest id mentioned. Attribute lists in
    /// brackets are ignored.
    pub fn from_dot(s: &str) -> Result<Self> {
        let body = match (s.find('{'), s.rfind('}')) {
            (Some(a), Some(b)) if a < b => &s[a + 1..b],
            _ => return Err(Error::Parse("missing graph body braces".into())),
        };
        let parse_id = |t: &str| -> Result<usize> {
            t.trim()
                .trim_matches('"')
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad vertex id {t:?}")))
        };
        let mut n = 0;
        let mut arcs = Vec::new();
        let mut edges = Vec::new();
        for stmt in body.split([';', '\n']) {
            let stmt = match stmt.find('[') {
                Some(i) => &stmt[..i],
                None => stmt,
            };
            let stmt = stmt.trim();
            if stmt.is_empty() || stmt.starts_with("//") {
                continue;
            }
            if let Some((a, b)) = stmt.split_once("->") {
                let (u, v) = (parse_id(a)?, parse_id(b)?);
                n = n.max(u + 1).max(v + 1);
                arcs.push((u, v));
            } else if let Some((a, b)) = stmt.split_once("--") {
                let (u, v) = (parse_id(a)?, parse_id(b)?);
                n = n.max(u + 1).max(v + 1);
                edges.push((u, v));
            } else {
                n = n.max(parse_id(stmt)? + 1);
            }
        }
        MixedGraph::from_parts(n, &arcs, &edges)
    }
}
