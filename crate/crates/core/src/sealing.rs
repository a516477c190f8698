//! Closed channels, sealability, the sealing decision, and seal synthesis.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::error::AnalysisError;
use crate::model::{Channel, ModelError, ProcessId, Program, Statement};
use crate::signature::{compute_signature, SigNode, Signature};

/// Directed graph on processes with an edge `(i, j)` when the program closes
/// channel `i->j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedChannelGraph {
    n: usize,
    edges: BTreeSet<Channel>,
}

impl ClosedChannelGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<Channel> {
        &self.edges
    }

    pub fn is_closed(&self, ch: Channel) -> bool {
        self.edges.contains(&ch)
    }

    pub fn open_channels(&self) -> Vec<Channel> {
        Channel::all(self.n).filter(|ch| !self.is_closed(*ch)).collect()
    }

    /// Neighbours in the undirected version, ascending.
    fn undirected_neighbours(&self, p: ProcessId) -> Vec<ProcessId> {
        ProcessId::all(self.n)
            .filter(|&q| {
                Channel::new(p, q)
                    .map(|ch| self.is_closed(ch) || self.is_closed(ch.reversed()))
                    .unwrap_or(false)
            })
            .collect()
    }

    /// Connectivity of the undirected version over all `n` processes.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        bfs(self.n, ProcessId::from_index(0), |p| self.undirected_neighbours(p))
            .order
            .len()
            == self.n
    }
}

pub fn closed_channels(p: &Program) -> Result<ClosedChannelGraph, AnalysisError> {
    let sig = compute_signature(p)?;
    Ok(closed_channels_of(&sig))
}

pub fn closed_channels_of(sig: &Signature) -> ClosedChannelGraph {
    let edges = Channel::all(sig.n())
        .filter(|&ch| {
            let rcv = SigNode::LastRecv(ch);
            !(sig.contains(rcv) && !sig.has_edge(rcv, SigNode::Lst(ch.src())))
        })
        .collect();
    ClosedChannelGraph { n: sig.n(), edges }
}

pub fn is_sealable(p: &Program) -> Result<bool, AnalysisError> {
    Ok(closed_channels(p)?.is_connected())
}

/// Decides whether `q` properly seals `p`.
pub fn is_seal(p: &Program, q: &Program) -> Result<bool, AnalysisError> {
    if p.n() != q.n() {
        return Err(AnalysisError::ProcessCountMismatch(p.n(), q.n()));
    }
    Ok(is_seal_signatures(&compute_signature(p)?, &compute_signature(q)?))
}

/// Every channel `i->j` that `P` leaves open needs some process `k` such that
/// `P`'s last receive reaches `lst_k` and `fst_k` reaches `Q`'s first send on
/// the channel, or `lst_i` when `Q` does not send on it.
pub fn is_seal_signatures(sp: &Signature, sq: &Signature) -> bool {
    sp.open_channels().into_iter().all(|ch| {
        let rcv = SigNode::LastRecv(ch);
        let snd = SigNode::FirstSend(ch);
        let last_of_sender = SigNode::Lst(ch.src());
        ProcessId::all(sp.n()).any(|k| {
            sp.has_edge(rcv, SigNode::Lst(k))
                && sq.has_edge(SigNode::Fst(k), last_of_sender)
                && (!sq.contains(snd) || sq.has_edge(SigNode::Fst(k), snd))
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    DirectClose,
    ConvergeCast,
    Broadcast,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::DirectClose => "direct-close",
            Phase::ConvergeCast => "converge-cast",
            Phase::Broadcast => "broadcast",
        }
    }
}

impl FromStr for Phase {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct-close" => Ok(Phase::DirectClose),
            "converge-cast" => Ok(Phase::ConvergeCast),
            "broadcast" => Ok(Phase::Broadcast),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transmission {
    pub channel: Channel,
    pub phase: Phase,
}

/// An ordered list of message transmissions. Each one expands to a send at
/// the source followed by the matching receive at the destination.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SealPlan {
    pub transmissions: Vec<Transmission>,
}

impl SealPlan {
    pub fn len(&self) -> usize {
        self.transmissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transmissions.is_empty()
    }

    fn push(&mut self, src: ProcessId, dst: ProcessId, phase: Phase) {
        let channel = Channel::new(src, dst).expect("tree edges join distinct processes");
        self.transmissions.push(Transmission { channel, phase });
    }
}

/// One line per transmission: `src -> dst [phase]`.
impl fmt::Display for SealPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.transmissions {
            writeln!(
                f,
                "{} -> {} [{}]",
                t.channel.src(),
                t.channel.dst(),
                t.phase.as_str()
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("process id {id} is outside 1..={n}")]
    BadProcessId { id: u32, n: usize },
}

impl FromStr for SealPlan {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut plan = SealPlan::default();
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| PlanError::Syntax {
                line: idx + 1,
                message: message.to_string(),
            };
            let (route, tag) = line
                .split_once('[')
                .ok_or_else(|| syntax("expected `src -> dst [phase]`"))?;
            let tag = tag
                .strip_suffix(']')
                .ok_or_else(|| syntax("unterminated phase tag"))?;
            let phase: Phase = tag
                .trim()
                .parse()
                .map_err(|_| syntax("unknown phase tag"))?;
            let (src, dst) = route
                .split_once("->")
                .ok_or_else(|| syntax("expected `->`"))?;
            let id = |text: &str| -> Result<ProcessId, PlanError> {
                let value: u32 = text.trim().parse().map_err(|_| syntax("expected a process id"))?;
                ProcessId::new(value).ok_or(PlanError::BadProcessId { id: value, n: 0 })
            };
            let (src, dst) = (id(src)?, id(dst)?);
            let channel = Channel::new(src, dst).ok_or_else(|| syntax("source equals destination"))?;
            plan.transmissions.push(Transmission { channel, phase });
        }
        Ok(plan)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SealError {
    #[error("program cannot be sealed: its closed-channel graph is disconnected")]
    Unsealable,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

struct Traversal {
    order: Vec<ProcessId>,
    parent: Vec<Option<ProcessId>>,
    depth: Vec<usize>,
}

fn bfs(n: usize, root: ProcessId, neighbours: impl Fn(ProcessId) -> Vec<ProcessId>) -> Traversal {
    let mut parent = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root]);
    depth[root.index()] = 0;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for w in neighbours(u) {
            if depth[w.index()] == usize::MAX {
                depth[w.index()] = depth[u.index()] + 1;
                parent[w.index()] = Some(u);
                queue.push_back(w);
            }
        }
    }
    Traversal {
        order,
        parent,
        depth,
    }
}

/// Synthesizes a seal of fewer than `3n` transmissions.
///
/// A spanning tree of the undirected closed-channel graph is taken by BFS
/// from process 1 with ascending neighbours; each tree edge is oriented along
/// a closed channel, parent to child when both directions are closed. The
/// tree is re-rooted at a centre (minimum eccentricity, smallest id). Then:
/// a transmission down every tree edge pointing away from the centre whose
/// reverse channel is open, a converge-cast to the centre in post-order, and
/// a broadcast from the centre in pre-order. Every transmission travels a
/// channel that is closed at that point.
pub fn construct_seal(p: &Program) -> Result<SealPlan, SealError> {
    let closed = closed_channels(p)?;
    if !closed.is_connected() {
        return Err(SealError::Unsealable);
    }
    let n = p.n();
    let mut plan = SealPlan::default();
    if n <= 1 {
        return Ok(plan);
    }

    let spanning = bfs(n, ProcessId::from_index(0), |u| closed.undirected_neighbours(u));
    let mut tree: Vec<BTreeSet<ProcessId>> = vec![BTreeSet::new(); n];
    let mut oriented: BTreeSet<Channel> = BTreeSet::new();
    for child in ProcessId::all(n) {
        let Some(parent) = spanning.parent[child.index()] else { continue };
        tree[parent.index()].insert(child);
        tree[child.index()].insert(parent);
        let down = Channel::new(parent, child).expect("distinct");
        oriented.insert(if closed.is_closed(down) { down } else { down.reversed() });
    }
    let tree_neighbours = |u: ProcessId| tree[u.index()].iter().copied().collect::<Vec<_>>();

    let centre = ProcessId::all(n)
        .min_by_key(|&u| {
            let t = bfs(n, u, tree_neighbours);
            (t.depth.into_iter().max().unwrap_or(0), u)
        })
        .expect("n > 1");
    let rooted = bfs(n, centre, tree_neighbours);
    let parent_of = |u: ProcessId| rooted.parent[u.index()];

    for &child in &rooted.order {
        let Some(parent) = parent_of(child) else { continue };
        let down = Channel::new(parent, child).expect("distinct");
        if oriented.contains(&down) && !closed.is_closed(down.reversed()) {
            plan.push(parent, child, Phase::DirectClose);
        }
    }

    let children = |u: ProcessId| -> Vec<ProcessId> {
        tree[u.index()]
            .iter()
            .copied()
            .filter(|&c| parent_of(c) == Some(u))
            .collect()
    };
    let mut pre_order = Vec::with_capacity(n);
    let mut post_order = Vec::with_capacity(n);
    // Iterative DFS; `true` marks the post-visit of a node.
    let mut stack = vec![(centre, false)];
    while let Some((u, done)) = stack.pop() {
        if done {
            post_order.push(u);
            continue;
        }
        pre_order.push(u);
        stack.push((u, true));
        for c in children(u).into_iter().rev() {
            stack.push((c, false));
        }
    }
    for &u in &post_order {
        if let Some(parent) = parent_of(u) {
            plan.push(u, parent, Phase::ConvergeCast);
        }
    }
    for &u in &pre_order {
        if let Some(parent) = parent_of(u) {
            plan.push(parent, u, Phase::Broadcast);
        }
    }
    Ok(plan)
}

/// Lays out the plan's transmissions in order as one straight-line program.
pub fn expand_plan(plan: &SealPlan, n: usize) -> Result<Program, PlanError> {
    let mut program = Program::empty("seal", n);
    for t in &plan.transmissions {
        let (src, dst) = (t.channel.src(), t.channel.dst());
        program
            .push(src, Statement::send(dst))
            .and_then(|_| program.push(dst, Statement::recv(src)))
            .map_err(|err| match err {
                ModelError::BadProcessId { id, n } => PlanError::BadProcessId { id, n },
                other => unreachable!("channels exclude {other}"),
            })?;
    }
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::deadlock_free;
    use crate::model::is_balanced;

    fn pid(i: u32) -> ProcessId {
        ProcessId::new(i).unwrap()
    }

    fn ch(i: u32, j: u32) -> Channel {
        Channel::new(pid(i), pid(j)).unwrap()
    }

    fn mt(n: usize, i: u32, j: u32) -> Program {
        Program::transmit(n, pid(i), pid(j)).unwrap()
    }

    fn x(n: usize) -> Program {
        let mut p = Program::empty("x", n);
        p.push(pid(1), Statement::send(pid(2))).unwrap();
        p.push(pid(2), Statement::send(pid(1))).unwrap();
        p.push(pid(1), Statement::recv(pid(2))).unwrap();
        p.push(pid(2), Statement::recv(pid(1))).unwrap();
        p
    }

    #[test]
    fn closed_channels_of_transmission() {
        let c = closed_channels(&mt(2, 1, 2)).unwrap();
        assert_eq!(c.edges().iter().copied().collect::<Vec<_>>(), vec![ch(2, 1)]);
        assert_eq!(c.open_channels(), vec![ch(1, 2)]);
    }

    #[test]
    fn crossing_exchange_closes_nothing() {
        let c = closed_channels(&x(2)).unwrap();
        assert!(c.edges().is_empty());
        assert!(!c.is_connected());
        assert!(!is_sealable(&x(2)).unwrap());
        assert_eq!(construct_seal(&x(2)).unwrap_err(), SealError::Unsealable);
    }

    #[test]
    fn silent_program_closes_everything() {
        let c = closed_channels(&Program::empty("e", 3)).unwrap();
        assert_eq!(c.edges().len(), 6);
    }

    #[test]
    fn bystander_makes_exchange_sealable() {
        assert!(is_sealable(&x(3)).unwrap());
        let plan = construct_seal(&x(3)).unwrap();
        assert!(plan.len() < 9);
        let seal = expand_plan(&plan, 3).unwrap();
        assert!(is_seal(&x(3), &seal).unwrap());
    }

    #[test]
    fn acknowledgment_seals_transmission() {
        assert!(is_seal(&mt(2, 1, 2), &mt(2, 2, 1)).unwrap());
        assert!(!is_seal(&mt(2, 1, 2), &mt(2, 1, 2)).unwrap());
        assert!(!is_seal(&mt(2, 1, 2), &Program::empty("e", 2)).unwrap());
    }

    #[test]
    fn is_seal_rejects_mismatched_sizes() {
        assert_eq!(
            is_seal(&mt(2, 1, 2), &mt(3, 2, 1)).unwrap_err(),
            AnalysisError::ProcessCountMismatch(2, 3)
        );
    }

    #[test]
    fn seal_for_single_transmission() {
        let plan = construct_seal(&mt(2, 1, 2)).unwrap();
        assert_eq!(plan.to_string(), "2 -> 1 [converge-cast]\n1 -> 2 [broadcast]\n");
        let seal = expand_plan(&plan, 2).unwrap();
        assert!(is_seal(&mt(2, 1, 2), &seal).unwrap());
    }

    #[test]
    fn expand_single_and_empty() {
        let plan: SealPlan = "2 -> 1 [direct-close]".parse().unwrap();
        let p = expand_plan(&plan, 2).unwrap();
        assert_eq!(p.seqs(), mt(2, 2, 1).seqs());
        assert!(expand_plan(&SealPlan::default(), 3).unwrap().is_empty());
    }

    #[test]
    fn expand_keeps_plan_order() {
        let text = "1 -> 2 [broadcast]\n1 -> 3 [broadcast]\n2 -> 1 [broadcast]\n3 -> 1 [broadcast]\n";
        let plan: SealPlan = text.parse().unwrap();
        assert_eq!(plan.to_string(), text);
        let p = expand_plan(&plan, 3).unwrap();
        assert_eq!(
            p.seq(pid(1)),
            &[
                Statement::send(pid(2)),
                Statement::send(pid(3)),
                Statement::recv(pid(2)),
                Statement::recv(pid(3)),
            ]
        );
        assert!(is_balanced(&p));
        assert!(deadlock_free(&p).unwrap());
    }

    #[test]
    fn expand_rejects_out_of_range() {
        let plan: SealPlan = "1 -> 4 [broadcast]".parse().unwrap();
        assert_eq!(
            expand_plan(&plan, 3).unwrap_err(),
            PlanError::BadProcessId { id: 4, n: 3 }
        );
    }

    #[test]
    fn plan_syntax_errors() {
        for bad in ["1 -> 2", "1 2 [broadcast]", "1 -> 2 [sideways]", "1 -> 1 [broadcast]", "a -> 2 [broadcast]"] {
            assert!(
                matches!(bad.parse::<SealPlan>(), Err(PlanError::Syntax { line: 1, .. })),
                "{bad}"
            );
        }
    }
}
