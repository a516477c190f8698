//! Brute-force run semantics for small straight-line programs.
//!
//! A run of a straight-line program is determined by its matching: an
//! injective assignment of a send to every receive on the same channel such
//! that process order plus the send-to-receive pairs stays acyclic. Finite
//! worlds stand in for infinite runs: every acyclic receive-total matching of
//! a finite world extends to a reliable run by letting all processes stutter
//! afterwards, and any send left unmatched is never followed by further
//! matched sends, so the fairness condition on reliable runs holds
//! vacuously.
//!
//! Later layers are represented by probe sends appended after the layers
//! under test. One probe per relevant channel suffices: a later send on a
//! channel is never more permissive than the earliest one, and probe
//! receives are unnecessary because balance forces a layer's sends inward
//! once all of its receives are inward. Probes are only placed on channels
//! where the first layer receives; a probe on any other channel can only be
//! taken by a later receive that could equally take an earlier, causally
//! weaker send.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::{channel_traffic, first_unbalanced, Channel, EventKind, ProcessId, Program};

/// Largest world the enumerator accepts regardless of budget.
pub const MAX_WORLD_EVENTS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    LayerP,
    LayerS,
    Probe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WorldEvent {
    pub kind: EventKind,
    pub channel: Channel,
    pub origin: Origin,
}

/// Position of an event in a world: process and index in its sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventPos {
    pub proc: ProcessId,
    pub index: usize,
}

/// Per-process event sequences assembled from layers and probes, in
/// concatenation order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventWorld {
    events: Vec<Vec<WorldEvent>>,
}

impl EventWorld {
    pub fn new(n: usize) -> Self {
        EventWorld {
            events: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.events.len()
    }

    pub fn len(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn events(&self, proc: ProcessId) -> &[WorldEvent] {
        &self.events[proc.index()]
    }

    pub fn event(&self, pos: EventPos) -> &WorldEvent {
        &self.events[pos.proc.index()][pos.index]
    }

    pub fn positions(&self) -> impl Iterator<Item = EventPos> + '_ {
        self.events.iter().enumerate().flat_map(|(p, seq)| {
            (0..seq.len()).map(move |index| EventPos {
                proc: ProcessId::from_index(p),
                index,
            })
        })
    }

    /// Appends `p` after everything already in the world.
    pub fn append_layer(&mut self, p: &Program, origin: Origin) -> Result<(), OracleError> {
        if p.n() != self.n() {
            return Err(OracleError::ProcessCountMismatch(self.n(), p.n()));
        }
        for (idx, seq) in p.seqs().iter().enumerate() {
            let owner = ProcessId::from_index(idx);
            self.events[idx].extend(seq.iter().map(|stmt| WorldEvent {
                kind: stmt.kind,
                channel: stmt.channel(owner),
                origin,
            }));
        }
        Ok(())
    }

    /// Appends one probe send on `ch` at its source.
    pub fn append_probe(&mut self, ch: Channel) {
        self.events[ch.src().index()].push(WorldEvent {
            kind: EventKind::Send,
            channel: ch,
            origin: Origin::Probe,
        });
    }
}

/// Receive-to-send assignment, sorted by receive position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    pairs: Vec<(EventPos, EventPos)>,
}

impl Matching {
    pub fn pairs(&self) -> &[(EventPos, EventPos)] {
        &self.pairs
    }

    pub fn send_for(&self, recv: EventPos) -> Option<EventPos> {
        self.pairs
            .binary_search_by_key(&recv, |&(r, _)| r)
            .ok()
            .map(|i| self.pairs[i].1)
    }

    /// Checks both matching conditions from scratch: total, injective and
    /// channel-respecting on receives, and an acyclic induced causality.
    pub fn validate(&self, world: &EventWorld) -> Result<(), String> {
        let mut used = std::collections::BTreeSet::new();
        for pos in world.positions() {
            let event = world.event(pos);
            if event.kind != EventKind::Recv {
                continue;
            }
            let send = self.send_for(pos).ok_or(format!("receive {pos:?} unmatched"))?;
            let s = world.event(send);
            if s.kind != EventKind::Send || s.channel != event.channel {
                return Err(format!("{pos:?} matched to incompatible {send:?}"));
            }
            if !used.insert(send) {
                return Err(format!("send {send:?} matched twice"));
            }
        }
        if self.pairs.len() != used.len() {
            return Err("matching mentions non-receives".into());
        }
        Causality::of(world, self).map(|_| ())
    }
}

/// Lamport happens-before induced by a matching on a world.
#[derive(Clone, Debug)]
pub struct Causality {
    offsets: Vec<usize>,
    reach: Vec<Vec<bool>>,
}

impl Causality {
    /// Fails when the induced relation has a cycle.
    pub fn of(world: &EventWorld, matching: &Matching) -> Result<Self, String> {
        let mut offsets = Vec::with_capacity(world.n());
        let mut total = 0;
        for p in ProcessId::all(world.n()) {
            offsets.push(total);
            total += world.events(p).len();
        }
        let flat = |pos: EventPos| offsets[pos.proc.index()] + pos.index;
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); total];
        for p in ProcessId::all(world.n()) {
            for index in 1..world.events(p).len() {
                let a = flat(EventPos { proc: p, index: index - 1 });
                succ[a].push(a + 1);
            }
        }
        for &(r, s) in matching.pairs() {
            succ[flat(s)].push(flat(r));
        }
        // Plain DFS from every node; worlds are tiny.
        let mut reach = vec![vec![false; total]; total];
        for start in 0..total {
            let mut stack = succ[start].clone();
            while let Some(v) = stack.pop() {
                if !reach[start][v] {
                    reach[start][v] = true;
                    stack.extend(succ[v].iter().copied());
                }
            }
            if reach[start][start] {
                return Err(format!("causality cycle through event #{start}"));
            }
        }
        Ok(Causality { offsets, reach })
    }

    pub fn precedes(&self, a: EventPos, b: EventPos) -> bool {
        self.reach[self.offsets[a.proc.index()] + a.index][self.offsets[b.proc.index()] + b.index]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_matchings: u64,
    pub max_events: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_matchings: 1_000_000,
            max_events: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("channel {0} has more receives than sends")]
    ShapeError(Channel),
    #[error("channel {0} carries unequal numbers of sends and receives")]
    Unbalanced(Channel),
    #[error("programs have different process counts ({0} vs {1})")]
    ProcessCountMismatch(usize, usize),
}

/// Flattened world prepared for enumeration.
struct Search<'w> {
    world: &'w EventWorld,
    positions: Vec<EventPos>,
    /// Flat indices of receives, in position order.
    recvs: Vec<usize>,
    /// For each receive (same order), candidate sends in position order.
    candidates: Vec<Vec<usize>>,
    /// Strict process-order successors of every event.
    base_reach: Vec<u128>,
}

impl<'w> Search<'w> {
    fn new(world: &'w EventWorld, budget: OracleBudget) -> Result<Self, OracleError> {
        let total = world.len();
        if total > budget.max_events || total > MAX_WORLD_EVENTS {
            return Err(OracleError::BudgetExceeded(format!(
                "{total} events exceed the limit of {}",
                budget.max_events.min(MAX_WORLD_EVENTS)
            )));
        }
        let positions: Vec<EventPos> = world.positions().collect();
        let mut sends_on: BTreeMap<Channel, Vec<usize>> = BTreeMap::new();
        let mut recvs_on: BTreeMap<Channel, usize> = BTreeMap::new();
        let mut base_reach = vec![0u128; total];
        for (flat, &pos) in positions.iter().enumerate() {
            let event = world.event(pos);
            match event.kind {
                EventKind::Send => sends_on.entry(event.channel).or_default().push(flat),
                EventKind::Recv => *recvs_on.entry(event.channel).or_default() += 1,
            }
            let len = world.events(pos.proc).len();
            for later in 1..len - pos.index {
                base_reach[flat] |= 1 << (flat + later);
            }
        }
        let mut product: u128 = 1;
        for (&ch, &r) in &recvs_on {
            let s = sends_on.get(&ch).map_or(0, Vec::len);
            if r > s {
                return Err(OracleError::ShapeError(ch));
            }
            for k in 0..r {
                product = product.saturating_mul((s - k) as u128);
            }
            if product > budget.max_matchings as u128 {
                return Err(OracleError::BudgetExceeded(format!(
                    "more than {} candidate matchings",
                    budget.max_matchings
                )));
            }
        }
        let recvs: Vec<usize> = (0..total)
            .filter(|&f| world.event(positions[f]).kind == EventKind::Recv)
            .collect();
        let candidates = recvs
            .iter()
            .map(|&r| sends_on[&world.event(positions[r]).channel].clone())
            .collect();
        Ok(Search {
            world,
            positions,
            recvs,
            candidates,
            base_reach,
        })
    }

    /// Depth-first over receives, pruning as soon as an assignment closes a
    /// cycle. `visit` sees each complete assignment as `send_of[recv_slot]`.
    fn run(&self, visit: &mut impl FnMut(&[usize]) -> ControlFlow<()>) {
        let mut assigned = Vec::with_capacity(self.recvs.len());
        let mut used = 0u128;
        let _ = self.descend(&self.base_reach, &mut assigned, &mut used, visit);
    }

    fn descend(
        &self,
        reach: &[u128],
        assigned: &mut Vec<usize>,
        used: &mut u128,
        visit: &mut impl FnMut(&[usize]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let slot = assigned.len();
        if slot == self.recvs.len() {
            return visit(assigned);
        }
        let r = self.recvs[slot];
        for &s in &self.candidates[slot] {
            if *used & (1 << s) != 0 || reach[r] & (1 << s) != 0 {
                continue;
            }
            let mut next = reach.to_vec();
            let gain = (1u128 << r) | reach[r];
            for (x, row) in next.iter_mut().enumerate() {
                if x == s || *row & (1 << s) != 0 {
                    *row |= gain;
                }
            }
            *used |= 1 << s;
            assigned.push(s);
            let flow = self.descend(&next, assigned, used, visit);
            assigned.pop();
            *used &= !(1 << s);
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn matching(&self, assignment: &[usize]) -> Matching {
        Matching {
            pairs: self
                .recvs
                .iter()
                .zip(assignment)
                .map(|(&r, &s)| (self.positions[r], self.positions[s]))
                .collect(),
        }
    }

    fn origin(&self, flat: usize) -> Origin {
        self.world.event(self.positions[flat]).origin
    }
}

/// Every acyclic matching of `world`, ordered lexicographically by receive
/// position and then by assigned send position.
pub fn enumerate_matchings(
    world: &EventWorld,
    budget: OracleBudget,
) -> Result<Vec<Matching>, OracleError> {
    let search = Search::new(world, budget)?;
    let mut out = Vec::new();
    search.run(&mut |assignment| {
        out.push(search.matching(assignment));
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// True when `world` has at least one acyclic receive-total matching, i.e.
/// it can run to completion.
pub fn has_run(world: &EventWorld, budget: OracleBudget) -> Result<bool, OracleError> {
    let search = Search::new(world, budget)?;
    let mut found = false;
    search.run(&mut |_| {
        found = true;
        ControlFlow::Break(())
    });
    Ok(found)
}

fn require_balanced(p: &Program) -> Result<(), OracleError> {
    match first_unbalanced(p) {
        Some(ch) => Err(OracleError::Unbalanced(ch)),
        None => Ok(()),
    }
}

/// True when some run of `p` lets a later send on `ch` reach one of `p`'s
/// receives.
pub fn oracle_channel_open(p: &Program, ch: Channel, budget: OracleBudget) -> Result<bool, OracleError> {
    require_balanced(p)?;
    let mut world = EventWorld::new(p.n());
    world.append_layer(p, Origin::LayerP)?;
    world.append_probe(ch);
    let search = Search::new(&world, budget)?;
    let mut open = false;
    search.run(&mut |assignment| {
        let captured = search
            .recvs
            .iter()
            .zip(assignment)
            .any(|(&r, &s)| search.origin(r) == Origin::LayerP && search.origin(s) == Origin::Probe);
        if captured {
            open = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(open)
}

/// True when in every run of `p ▸ s ▸ later` all of `p`'s receives are
/// matched inside `p`.
pub fn oracle_seals(p: &Program, s: &Program, budget: OracleBudget) -> Result<bool, OracleError> {
    require_balanced(p)?;
    require_balanced(s)?;
    let mut world = EventWorld::new(p.n());
    world.append_layer(p, Origin::LayerP)?;
    world.append_layer(s, Origin::LayerS)?;
    for (ch, traffic) in channel_traffic(p) {
        if traffic.recvs > 0 {
            world.append_probe(ch);
        }
    }
    let search = Search::new(&world, budget)?;
    let mut sealed = true;
    search.run(&mut |assignment| {
        let leaked = search
            .recvs
            .iter()
            .zip(assignment)
            .any(|(&r, &s)| search.origin(r) == Origin::LayerP && search.origin(s) != Origin::LayerP);
        if leaked {
            sealed = false;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(sealed)
}

/// Tail communication closure: every program seals `p`, equivalently the
/// empty program does.
pub fn oracle_tcc(p: &Program, budget: OracleBudget) -> Result<bool, OracleError> {
    oracle_seals(p, &Program::empty("empty", p.n()), budget)
}
