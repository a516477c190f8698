//! Sealing signatures.
//!
//! The signature of a balanced straight-line program keeps the per-process
//! dummies, the first send and last receive of each channel, and the
//! causality edges between them. A first send on `i->j` is dropped when
//! `fst_j` already precedes it, and a last receive on `i->j` is dropped when
//! it already precedes `lst_i`: such events can never meet traffic from a
//! neighbouring layer. What survives has `O(n^2)` nodes and is enough to
//! decide open channels and sealing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::AnalysisError;
use crate::graph::{build_program_graph, transitive_closure, GraphNode};
use crate::model::{Channel, EventKind, ProcessId, Program};
use crate::reach::BitMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SigNode {
    Fst(ProcessId),
    Lst(ProcessId),
    FirstSend(Channel),
    LastRecv(Channel),
}

/// Canonical names: `fst_i`, `lst_i`, `snd:i>j`, `rcv:j<i`.
impl fmt::Display for SigNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigNode::Fst(p) => write!(f, "fst_{p}"),
            SigNode::Lst(p) => write!(f, "lst_{p}"),
            SigNode::FirstSend(ch) => write!(f, "snd:{}>{}", ch.src(), ch.dst()),
            SigNode::LastRecv(ch) => write!(f, "rcv:{}<{}", ch.dst(), ch.src()),
        }
    }
}

impl SigNode {
    pub fn is_dummy(&self) -> bool {
        matches!(self, SigNode::Fst(_) | SigNode::Lst(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    n: usize,
    nodes: BTreeSet<SigNode>,
    edges: BTreeSet<(SigNode, SigNode)>,
}

impl Signature {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &BTreeSet<SigNode> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(SigNode, SigNode)> {
        &self.edges
    }

    pub fn contains(&self, node: SigNode) -> bool {
        self.nodes.contains(&node)
    }

    pub fn has_edge(&self, from: SigNode, to: SigNode) -> bool {
        self.edges.contains(&(from, to))
    }

    /// A program leaves `ch` open exactly when its last receive on `ch`
    /// survives in the signature.
    pub fn leaves_open(&self, ch: Channel) -> bool {
        self.contains(SigNode::LastRecv(ch))
    }

    /// Channels left open, in `(src, dst)` order.
    pub fn open_channels(&self) -> Vec<Channel> {
        self.nodes
            .iter()
            .filter_map(|node| match node {
                SigNode::LastRecv(ch) => Some(*ch),
                _ => None,
            })
            .collect()
    }

    /// Structural well-formedness. Returns a description of the first
    /// violated invariant.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.n;
        if self.nodes.len() > 2 * n + 2 * n * n.saturating_sub(1) {
            return Err(format!("{} nodes exceed the O(n^2) bound", self.nodes.len()));
        }
        for p in ProcessId::all(n) {
            if !self.contains(SigNode::Fst(p)) || !self.contains(SigNode::Lst(p)) {
                return Err(format!("missing dummy for process {p}"));
            }
        }
        for &(a, b) in &self.edges {
            if a == b {
                return Err(format!("reflexive edge at {a}"));
            }
            if !self.contains(a) || !self.contains(b) {
                return Err(format!("edge {a} -> {b} leaves the node set"));
            }
        }
        for &(a, b) in &self.edges {
            for &(c, d) in self.edges.range((b, SigNode::Fst(ProcessId::from_index(0)))..) {
                if c != b {
                    break;
                }
                if !self.has_edge(a, d) && a != d {
                    return Err(format!("{a} -> {b} -> {d} is not closed"));
                }
                if a == d {
                    return Err(format!("cycle through {a} and {b}"));
                }
            }
        }
        for &node in &self.nodes {
            match node {
                SigNode::FirstSend(ch) if self.has_edge(SigNode::Fst(ch.dst()), node) => {
                    return Err(format!("{node} is preceded by fst_{}", ch.dst()));
                }
                SigNode::LastRecv(ch) if self.has_edge(node, SigNode::Lst(ch.src())) => {
                    return Err(format!("{node} precedes lst_{}", ch.src()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes: Vec<String> = self.nodes.iter().map(ToString::to_string).collect();
        writeln!(f, "nodes: {}", nodes.join(" "))?;
        for (a, b) in &self.edges {
            writeln!(f, "edge: {a} -> {b}")?;
        }
        Ok(())
    }
}

pub fn compute_signature(p: &Program) -> Result<Signature, AnalysisError> {
    let g = build_program_graph(p)?;
    let closure = transitive_closure(&g)?;
    let n = p.n();

    // Graph node index of every node that may survive.
    let mut candidates: BTreeMap<SigNode, usize> = BTreeMap::new();
    for proc in ProcessId::all(n) {
        candidates.insert(SigNode::Fst(proc), g.fst(proc));
        candidates.insert(SigNode::Lst(proc), g.lst(proc));
    }
    for (idx, node) in g.nodes().iter().enumerate() {
        let GraphNode::Event(e) = node else { continue };
        match e.kind {
            EventKind::Send if e.seq_on_channel == 1 => {
                if !closure.contains(g.fst(e.channel.dst()), idx) {
                    candidates.insert(SigNode::FirstSend(e.channel), idx);
                }
            }
            EventKind::Recv => {
                // Later receives on the same channel overwrite earlier ones.
                candidates.insert(SigNode::LastRecv(e.channel), idx);
            }
            EventKind::Send => {}
        }
    }
    candidates.retain(|node, &mut idx| match node {
        SigNode::LastRecv(ch) => !closure.contains(idx, g.lst(ch.src())),
        _ => true,
    });

    let mut edges = BTreeSet::new();
    for (&a, &ia) in &candidates {
        for (&b, &ib) in &candidates {
            if closure.contains(ia, ib) {
                edges.insert((a, b));
            }
        }
    }
    Ok(Signature {
        n,
        nodes: candidates.into_keys().collect(),
        edges,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    P,
    Q,
}

/// The signature of `P ▸ Q` from the signatures of `P` and `Q`.
pub fn signature_compose(sp: &Signature, sq: &Signature) -> Result<Signature, AnalysisError> {
    if sp.n != sq.n {
        return Err(AnalysisError::ProcessCountMismatch(sp.n, sq.n));
    }
    let n = sp.n;
    let tagged: Vec<(Side, SigNode)> = sp
        .nodes
        .iter()
        .map(|&v| (Side::P, v))
        .chain(sq.nodes.iter().map(|&v| (Side::Q, v)))
        .collect();
    let index: BTreeMap<(Side, SigNode), usize> =
        tagged.iter().enumerate().map(|(i, &t)| (t, i)).collect();

    let mut adj = BitMatrix::new(tagged.len());
    for (side, sig) in [(Side::P, sp), (Side::Q, sq)] {
        for &(a, b) in &sig.edges {
            adj.set(index[&(side, a)], index[&(side, b)]);
        }
    }
    for proc in ProcessId::all(n) {
        adj.set(
            index[&(Side::P, SigNode::Lst(proc))],
            index[&(Side::Q, SigNode::Fst(proc))],
        );
    }
    let closure = adj.closure().ok_or(AnalysisError::CyclicGraph)?;
    let reaches = |a: (Side, SigNode), b: (Side, SigNode)| closure.get(index[&a], index[&b]);

    let keep = |&(side, node): &(Side, SigNode)| -> bool {
        match (side, node) {
            // Inner dummies.
            (Side::P, SigNode::Lst(_)) | (Side::Q, SigNode::Fst(_)) => false,
            (Side::Q, SigNode::FirstSend(ch)) => {
                !sp.contains(node) && !reaches((Side::P, SigNode::Fst(ch.dst())), (side, node))
            }
            (Side::P, SigNode::LastRecv(ch)) => {
                !sq.contains(node) && !reaches((side, node), (Side::Q, SigNode::Lst(ch.src())))
            }
            _ => true,
        }
    };
    let survivors: Vec<(Side, SigNode)> = tagged.iter().copied().filter(keep).collect();

    let mut edges = BTreeSet::new();
    for &a in &survivors {
        for &b in &survivors {
            if reaches(a, b) {
                edges.insert((a.1, b.1));
            }
        }
    }
    Ok(Signature {
        n,
        nodes: survivors.into_iter().map(|(_, v)| v).collect(),
        edges,
    })
}

/// Structural equality: identical node and edge sets.
pub fn signature_equal(a: &Signature, b: &Signature) -> bool {
    a == b
}
