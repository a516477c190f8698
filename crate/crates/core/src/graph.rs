//! Program graphs: events plus per-process dummy endpoints, joined by
//! local-order edges and by edges from the k'th send to the k'th receive of
//! every channel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::AnalysisError;
use crate::model::{first_unbalanced, Channel, EventKind, EventRef, ProcessId, Program};
use crate::reach::BitMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphNode {
    Fst(ProcessId),
    Lst(ProcessId),
    Event(EventRef),
}

impl GraphNode {
    pub fn is_dummy(&self) -> bool {
        !matches!(self, GraphNode::Event(_))
    }
}

/// Canonical names: `fst_i`, `lst_i`, `s:<proc>:<index>`, `r:<proc>:<index>`.
impl fmt::Display for GraphNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphNode::Fst(p) => write!(f, "fst_{p}"),
            GraphNode::Lst(p) => write!(f, "lst_{p}"),
            GraphNode::Event(e) => {
                let tag = match e.kind {
                    EventKind::Send => 's',
                    EventKind::Recv => 'r',
                };
                write!(f, "{tag}:{}:{}", e.proc, e.index)
            }
        }
    }
}

/// Nodes are laid out as `fst_1..fst_n`, `lst_1..lst_n`, then events in
/// process order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramGraph {
    n: usize,
    nodes: Vec<GraphNode>,
    edges: BTreeSet<(usize, usize)>,
}

impl ProgramGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn fst(&self, p: ProcessId) -> usize {
        p.index()
    }

    pub fn lst(&self, p: ProcessId) -> usize {
        self.n + p.index()
    }

    pub fn index_of(&self, node: &GraphNode) -> Option<usize> {
        self.nodes.iter().position(|x| x == node)
    }

    /// Edges between two event nodes.
    pub fn normal_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| !self.nodes[a].is_dummy() && !self.nodes[b].is_dummy())
    }

    pub(crate) fn adjacency(&self) -> BitMatrix {
        let mut m = BitMatrix::new(self.nodes.len());
        for &(a, b) in &self.edges {
            m.set(a, b);
        }
        m
    }

    /// Builds a graph from explicit parts. Used for closure checks on
    /// arbitrary relations.
    pub fn from_parts(n: usize, nodes: Vec<GraphNode>, edges: BTreeSet<(usize, usize)>) -> Self {
        ProgramGraph { n, nodes, edges }
    }
}

/// The irreflexive transitive closure of a program graph's edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedEdgeSet {
    matrix: BitMatrix,
}

impl ClosedEdgeSet {
    pub fn contains(&self, from: usize, to: usize) -> bool {
        self.matrix.get(from, to)
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        self.matrix.pairs().collect()
    }

    pub fn len(&self) -> usize {
        self.matrix.pairs().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_program_graph(p: &Program) -> Result<ProgramGraph, AnalysisError> {
    if let Some(ch) = first_unbalanced(p) {
        return Err(AnalysisError::Unbalanced(ch));
    }
    let n = p.n();
    let mut nodes: Vec<GraphNode> = ProcessId::all(n).map(GraphNode::Fst).collect();
    nodes.extend(ProcessId::all(n).map(GraphNode::Lst));
    let mut edges = BTreeSet::new();

    let mut last: Vec<usize> = (0..n).collect();
    let mut sends: BTreeMap<(Channel, usize), usize> = BTreeMap::new();
    let mut recvs: BTreeMap<(Channel, usize), usize> = BTreeMap::new();
    for event in p.events() {
        let id = nodes.len();
        nodes.push(GraphNode::Event(event));
        let proc = event.proc.index();
        edges.insert((last[proc], id));
        last[proc] = id;
        let key = (event.channel, event.seq_on_channel);
        match event.kind {
            EventKind::Send => sends.insert(key, id),
            EventKind::Recv => recvs.insert(key, id),
        };
    }
    for (proc, &tail) in last.iter().enumerate() {
        edges.insert((tail, n + proc));
    }
    // Balance guarantees both maps have the same keys.
    for (key, s) in sends {
        edges.insert((s, recvs[&key]));
    }
    Ok(ProgramGraph { n, nodes, edges })
}

pub fn transitive_closure(g: &ProgramGraph) -> Result<ClosedEdgeSet, AnalysisError> {
    g.adjacency()
        .closure()
        .map(|matrix| ClosedEdgeSet { matrix })
        .ok_or(AnalysisError::CyclicGraph)
}

/// True when the program graph is acyclic.
pub fn deadlock_free(p: &Program) -> Result<bool, AnalysisError> {
    let g = build_program_graph(p)?;
    Ok(g.adjacency().topological_order().is_some())
}
