//! JSON graph documents.
//!
//! ```json
//! {"nodes": ["v1", "v2"], "directed": [["v1", "v2"]], "bidirected": [],
//!  "undirected": [["v2", "v2"]], "sigma": [["v1"], ["v2"]]}
//! ```
//!
//! A missing `sigma` means the strongly connected components. Nodes not listed
//! in any class of a given `sigma` become singletons.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::nodeset::{NodeId, NodeSet};
use super::sigma_cg::{EdgeKind, SigmaCG};
use super::GraphError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub directed: Vec<[String; 2]>,
    #[serde(default)]
    pub bidirected: Vec<[String; 2]>,
    #[serde(default)]
    pub undirected: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<String>>>,
}

/// A [`SigmaCG`] together with the node names it was loaded with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedGraph {
    pub names: Vec<String>,
    pub graph: SigmaCG,
}

impl NamedGraph {
    pub fn new(names: Vec<String>, graph: SigmaCG) -> NamedGraph {
        assert_eq!(names.len(), graph.universe());
        NamedGraph { names, graph }
    }

    /// Build and validate a graph from a document.
    pub fn from_document(doc: &GraphDocument) -> Result<NamedGraph, GraphError> {
        let mut index = HashMap::new();
        for (i, name) in doc.nodes.iter().enumerate() {
            if index.insert(name.clone(), NodeId(i)).is_some() {
                return Err(GraphError::DuplicateNode(name.clone()));
            }
        }
        let lookup = |name: &String| -> Result<NodeId, GraphError> {
            index.get(name).copied().ok_or_else(|| GraphError::UnknownName(name.clone()))
        };
        let mut g = SigmaCG::new(doc.nodes.len())?;
        for [a, b] in &doc.directed {
            g.add_directed(lookup(a)?, lookup(b)?)?;
        }
        for [a, b] in &doc.bidirected {
            g.add_bidirected(lookup(a)?, lookup(b)?)?;
        }
        for [a, b] in &doc.undirected {
            g.add_undirected(lookup(a)?, lookup(b)?)?;
        }
        let g = match &doc.sigma {
            None => g.coarsest_sigma(),
            Some(classes) => {
                let mut sets = Vec::with_capacity(classes.len());
                for class in classes {
                    let mut s = NodeSet::EMPTY;
                    for name in class {
                        s.insert(lookup(name)?);
                    }
                    sets.push(s);
                }
                g.set_sigma(&sets)?;
                g
            }
        };
        g.validate().map_err(GraphError::Invalid)?;
        Ok(NamedGraph { names: doc.nodes.clone(), graph: g })
    }

    pub fn from_json(text: &str) -> Result<NamedGraph, GraphError> {
        let doc: GraphDocument = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        NamedGraph::from_document(&doc)
    }

    /// Document over the present nodes, always with an explicit `sigma`.
    pub fn to_document(&self) -> GraphDocument {
        let name = |v: NodeId| self.names[v.0].clone();
        let mut doc = GraphDocument {
            nodes: self.graph.nodes().iter().map(name).collect(),
            directed: Vec::new(),
            bidirected: Vec::new(),
            undirected: Vec::new(),
            sigma: Some(
                self.graph
                    .classes()
                    .into_iter()
                    .map(|c| c.iter().map(name).collect())
                    .collect(),
            ),
        };
        for e in self.graph.edges() {
            let pair = [name(e.a), name(e.b)];
            match e.kind {
                EdgeKind::Directed => doc.directed.push(pair),
                EdgeKind::Bidirected => doc.bidirected.push(pair),
                EdgeKind::Undirected => doc.undirected.push(pair),
            }
        }
        doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serialises")
    }

    pub fn id(&self, name: &str) -> Result<NodeId, GraphError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(NodeId)
            .filter(|&v| self.graph.contains(v))
            .ok_or_else(|| GraphError::UnknownName(name.to_string()))
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v.0]
    }

    /// Parse a comma- or semicolon-separated list of names. Empty input is the empty set.
    pub fn parse_set(&self, list: &str) -> Result<NodeSet, GraphError> {
        let mut s = NodeSet::EMPTY;
        for part in list.split([',', ';']).map(str::trim).filter(|p| !p.is_empty()) {
            s.insert(self.id(part)?);
        }
        Ok(s)
    }

    pub fn format_set(&self, s: NodeSet) -> String {
        s.iter().map(|v| self.name(v)).collect::<Vec<_>>().join(",")
    }

    pub fn with_graph(&self, graph: SigmaCG) -> NamedGraph {
        NamedGraph { names: self.names.clone(), graph }
    }
}
