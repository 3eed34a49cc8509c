//! Network topologies and target states.
//!
//! A [`Graph`] is the topology of the target network: vertex `k` is node `k`,
//! and every edge is a controlled-Z interaction between its endpoints. A
//! [`Target`] is the state the verifier compares against. It is the graph
//! state of a graph, optionally dressed with Hadamards on a subset of qubits.
//! The GHZ target is the star graph with Hadamards on every leaf.
//!
//! [`GraphSpec`] is the on-disk description used by the command line tool.
//! Both TOML and JSON are accepted:
//!
//! ```toml
//! type = "star"      # star | chain | ring | complete | custom
//! n = 6
//! center = 0         # star only, default 0
//! state = "ghz"      # graph (default) | ghz, ghz needs type = "star"
//! # edges = [[0, 1], [0, 2]]   required for custom, checked otherwise
//! # labels = ["alice", "bob"]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count representable by the 64-bit masks used throughout.
pub const MAX_VERTICES: usize = 64;

/// Simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicate edges and out-of-range
    /// endpoints. Edges are stored as `(min, max)` in input order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::ResourceCap {
                what: "vertex count",
                requested: n,
                limit: MAX_VERTICES,
            });
        }
        let mut seen = std::collections::HashSet::new();
        let mut stored = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            stored.push(e);
        }
        Ok(Graph {
            n,
            edges: stored,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Graph::new(n, [])
    }

    /// Star with every other vertex attached to `center`.
    pub fn star(n: usize, center: usize) -> Result<Self> {
        if n == 0 || center >= n {
            return Err(Error::InvalidGraph(format!(
                "star needs n >= 1 and center < n (n = {n}, center = {center})"
            )));
        }
        Graph::new(n, (0..n).filter(|&v| v != center).map(|v| (center, v)))
    }

    pub fn chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("chain needs n >= 1".into()));
        }
        Graph::new(n, (1..n).map(|v| (v - 1, v)))
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("ring needs n >= 3, got {n}")));
        }
        Graph::new(n, (0..n).map(|v| (v, (v + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("complete graph needs n >= 1".into()));
        }
        Graph::new(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Neighbourhood of `v` as a bit mask (bit `k` is vertex `k`).
    pub fn neighbor_mask(&self, v: usize) -> u64 {
        self.edges.iter().fold(0u64, |m, &(a, b)| {
            if a == v {
                m | 1 << b
            } else if b == v {
                m | 1 << a
            } else {
                m
            }
        })
    }

    /// True when the graph has a single connected component.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut reached = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut next = 0u64;
            for v in bits(frontier) {
                next |= self.neighbor_mask(v);
            }
            frontier = next & !reached;
            reached |= next;
        }
        reached.count_ones() as usize == self.n
    }
}

/// Iterates the set bit positions of `mask`, lowest first.
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

/// The state a network is verified against: the graph state of `graph`
/// followed by a Hadamard on every qubit in `hadamards`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    graph: Graph,
    hadamards: u64,
}

impl Target {
    pub fn graph_state(graph: Graph) -> Self {
        Target {
            graph,
            hadamards: 0,
        }
    }

    /// `n`-qubit GHZ state as the star centred on vertex 0 with Hadamards on
    /// the leaves.
    pub fn ghz(n: usize) -> Result<Self> {
        let graph = Graph::star(n, 0)?;
        let hadamards = if n >= 64 {
            u64::MAX - 1
        } else {
            ((1u64 << n) - 1) & !1
        };
        Ok(Target { graph, hadamards })
    }

    pub fn with_hadamards(graph: Graph, hadamards: u64) -> Result<Self> {
        let n = graph.n();
        if n < 64 && hadamards >> n != 0 {
            return Err(Error::InvalidParameter(format!(
                "hadamard mask {hadamards:#b} exceeds {n} qubits"
            )));
        }
        Ok(Target { graph, hadamards })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Qubits carrying a local Hadamard on top of the graph state.
    pub fn hadamards(&self) -> u64 {
        self.hadamards
    }

    pub fn is_graph_state(&self) -> bool {
        self.hadamards == 0
    }
}

impl From<Graph> for Target {
    fn from(graph: Graph) -> Self {
        Target::graph_state(graph)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Star,
    Chain,
    Ring,
    Complete,
    Custom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetForm {
    #[default]
    Graph,
    Ghz,
}

/// Serialized graph description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(rename = "type", default = "GraphSpec::default_kind")]
    pub kind: GraphKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<usize>,
    #[serde(default)]
    pub state: TargetForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl GraphSpec {
    fn default_kind() -> GraphKind {
        GraphKind::Custom
    }

    pub fn ghz(n: usize) -> Self {
        GraphSpec {
            kind: GraphKind::Star,
            n,
            edges: None,
            center: Some(0),
            state: TargetForm::Ghz,
            labels: None,
        }
    }

    /// Builds the graph. For named kinds an explicit edge list, when given,
    /// must describe the same edge set.
    pub fn to_graph(&self) -> Result<Graph> {
        let named = match self.kind {
            GraphKind::Star => Some(Graph::star(self.n, self.center.unwrap_or(0))?),
            GraphKind::Chain => Some(Graph::chain(self.n)?),
            GraphKind::Ring => Some(Graph::ring(self.n)?),
            GraphKind::Complete => Some(Graph::complete(self.n)?),
            GraphKind::Custom => None,
        };
        if self.center.is_some() && self.kind != GraphKind::Star {
            return Err(Error::InvalidGraph(
                "`center` is only meaningful for a star".into(),
            ));
        }
        let listed = match &self.edges {
            Some(edges) => Some(Graph::new(self.n, edges.iter().map(|e| (e[0], e[1])))?),
            None => None,
        };
        let graph = match (named, listed) {
            (Some(g), None) => g,
            (None, Some(g)) => g,
            (None, None) => {
                return Err(Error::InvalidGraph("custom graph requires `edges`".into()))
            }
            (Some(g), Some(l)) => {
                let mut a = g.edges().to_vec();
                let mut b = l.edges().to_vec();
                a.sort_unstable();
                b.sort_unstable();
                if a != b {
                    return Err(Error::InvalidGraph(format!(
                        "`edges` do not match a {:?} graph on {} vertices",
                        self.kind, self.n
                    )));
                }
                l
            }
        };
        match &self.labels {
            Some(labels) => graph.with_labels(labels.clone()),
            None => Ok(graph),
        }
    }

    pub fn to_target(&self) -> Result<Target> {
        let graph = self.to_graph()?;
        match self.state {
            TargetForm::Graph => Ok(Target::graph_state(graph)),
            TargetForm::Ghz => {
                if self.kind != GraphKind::Star {
                    return Err(Error::InvalidGraph(
                        "state = \"ghz\" requires type = \"star\"".into(),
                    ));
                }
                let center = self.center.unwrap_or(0);
                let leaves = (0..self.n)
                    .filter(|&v| v != center)
                    .fold(0u64, |m, v| m | 1 << v);
                Target::with_hadamards(graph, leaves)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(
            Graph::new(3, [(1, 1)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(3, [(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(2, [(0, 2)]),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn named_families() {
        assert_eq!(Graph::star(4, 0).unwrap().edges().len(), 3);
        assert_eq!(Graph::chain(5).unwrap().edges().len(), 4);
        assert_eq!(Graph::ring(6).unwrap().edges().len(), 6);
        assert_eq!(Graph::complete(5).unwrap().edges().len(), 10);
        assert!(Graph::ring(2).is_err());
        assert_eq!(Graph::star(4, 2).unwrap().neighbor_mask(2), 0b1011);
    }

    #[test]
    fn connectivity() {
        assert!(Graph::ring(5).unwrap().is_connected());
        assert!(!Graph::empty(2).unwrap().is_connected());
        assert!(Graph::empty(1).unwrap().is_connected());
    }

    #[test]
    fn ghz_target_masks_leaves() {
        let t = Target::ghz(4).unwrap();
        assert_eq!(t.hadamards(), 0b1110);
        assert_eq!(Target::ghz(1).unwrap().hadamards(), 0);
    }

    #[test]
    fn spec_parsing() {
        let spec: GraphSpec = toml::from_str("type = \"ring\"\nn = 5\n").unwrap();
        assert_eq!(spec.to_graph().unwrap(), Graph::ring(5).unwrap());

        let custom: GraphSpec = toml::from_str("n = 3\nedges = [[0, 1], [1, 2]]\n").unwrap();
        assert_eq!(custom.to_graph().unwrap().edges(), &[(0, 1), (1, 2)]);

        let wrong: GraphSpec =
            toml::from_str("type = \"chain\"\nn = 3\nedges = [[0, 2]]\n").unwrap();
        assert!(wrong.to_graph().is_err());

        let ghz: GraphSpec = toml::from_str("type = \"star\"\nn = 3\nstate = \"ghz\"\n").unwrap();
        assert_eq!(ghz.to_target().unwrap(), Target::ghz(3).unwrap());

        let bad: GraphSpec = toml::from_str("type = \"ring\"\nn = 4\nstate = \"ghz\"\n").unwrap();
        assert!(bad.to_target().is_err());
    }
}
