//! Straight-line message-passing programs and their channels.
//!
//! A [`Program`] is a fixed number of processes, each running a finite
//! sequence of sends and receives. Payloads and local variables never
//! influence sealing, so statements only record who talks to whom.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A process identifier in `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(u32);

impl ProcessId {
    /// Returns `None` for zero.
    pub fn new(id: u32) -> Option<Self> {
        (id >= 1).then_some(ProcessId(id))
    }

    /// Zero-based index, i.e. `id - 1`.
    pub fn from_index(index: usize) -> Self {
        ProcessId(index as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    /// All processes `1..=n` in ascending order.
    pub fn all(n: usize) -> impl Iterator<Item = ProcessId> + Clone {
        (0..n).map(ProcessId::from_index)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The directed channel from `src` to `dst`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Channel {
    src: ProcessId,
    dst: ProcessId,
}

impl Channel {
    /// Returns `None` for self-loops.
    pub fn new(src: ProcessId, dst: ProcessId) -> Option<Self> {
        (src != dst).then_some(Channel { src, dst })
    }

    pub fn src(self) -> ProcessId {
        self.src
    }

    pub fn dst(self) -> ProcessId {
        self.dst
    }

    pub fn reversed(self) -> Channel {
        Channel {
            src: self.dst,
            dst: self.src,
        }
    }

    /// Every channel between distinct processes of `1..=n`, ordered by
    /// `(src, dst)`.
    pub fn all(n: usize) -> impl Iterator<Item = Channel> {
        ProcessId::all(n).flat_map(move |src| {
            ProcessId::all(n).filter_map(move |dst| Channel::new(src, dst))
        })
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.src, self.dst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Send,
    Recv,
}

/// One communication statement. For a send `peer` is the destination, for a
/// receive it is the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Statement {
    pub kind: EventKind,
    pub peer: ProcessId,
}

impl Statement {
    pub fn send(to: ProcessId) -> Self {
        Statement {
            kind: EventKind::Send,
            peer: to,
        }
    }

    pub fn recv(from: ProcessId) -> Self {
        Statement {
            kind: EventKind::Recv,
            peer: from,
        }
    }

    /// The channel this statement uses when executed by `owner`.
    pub fn channel(&self, owner: ProcessId) -> Channel {
        let (src, dst) = match self.kind {
            EventKind::Send => (owner, self.peer),
            EventKind::Recv => (self.peer, owner),
        };
        Channel { src, dst }
    }
}

/// A single send or receive occurrence inside a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventRef {
    pub proc: ProcessId,
    /// Position within the owning process' sequence.
    pub index: usize,
    pub kind: EventKind,
    pub channel: Channel,
    /// 1-based ordinal among events of the same kind on `channel`.
    pub seq_on_channel: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("process id {id} is outside 1..={n}")]
    BadProcessId { id: u32, n: usize },
    #[error("process {0} cannot communicate with itself")]
    SelfChannel(ProcessId),
    #[error("programs have different process counts ({0} vs {1})")]
    ProcessCountMismatch(usize, usize),
}

/// A straight-line program over processes `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    name: String,
    seqs: Vec<Vec<Statement>>,
}

impl Program {
    /// The program that does nothing on `n` processes.
    pub fn empty(name: impl Into<String>, n: usize) -> Self {
        Program {
            name: name.into(),
            seqs: vec![Vec::new(); n],
        }
    }

    /// Builds a program from one statement sequence per process, in process
    /// order. The process count is `seqs.len()`.
    pub fn from_seqs(name: impl Into<String>, seqs: Vec<Vec<Statement>>) -> Result<Self, ModelError> {
        let n = seqs.len();
        for (idx, seq) in seqs.iter().enumerate() {
            let owner = ProcessId::from_index(idx);
            for stmt in seq {
                if stmt.peer.index() >= n {
                    return Err(ModelError::BadProcessId {
                        id: stmt.peer.get(),
                        n,
                    });
                }
                if stmt.peer == owner {
                    return Err(ModelError::SelfChannel(owner));
                }
            }
        }
        Ok(Program {
            name: name.into(),
            seqs,
        })
    }

    /// `MT(src -> dst)`: one send at `src` and the matching receive at `dst`.
    pub fn transmit(n: usize, src: ProcessId, dst: ProcessId) -> Result<Self, ModelError> {
        let mut p = Program::empty(format!("mt{}{}", src, dst), n);
        p.push(src, Statement::send(dst))?;
        p.push(dst, Statement::recv(src))?;
        Ok(p)
    }

    /// Appends a statement to `proc`'s sequence.
    pub fn push(&mut self, proc: ProcessId, stmt: Statement) -> Result<(), ModelError> {
        let n = self.n();
        for id in [proc, stmt.peer] {
            if id.index() >= n {
                return Err(ModelError::BadProcessId { id: id.get(), n });
            }
        }
        if proc == stmt.peer {
            return Err(ModelError::SelfChannel(proc));
        }
        self.seqs[proc.index()].push(stmt);
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of processes.
    pub fn n(&self) -> usize {
        self.seqs.len()
    }

    pub fn seq(&self, proc: ProcessId) -> &[Statement] {
        &self.seqs[proc.index()]
    }

    pub fn seqs(&self) -> &[Vec<Statement>] {
        &self.seqs
    }

    /// Total number of sends and receives.
    pub fn event_count(&self) -> usize {
        self.seqs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.event_count() == 0
    }

    /// Layering `self ▸ next`: every process runs its part of `self`, then
    /// its part of `next`.
    pub fn then(&self, next: &Program) -> Result<Program, ModelError> {
        if self.n() != next.n() {
            return Err(ModelError::ProcessCountMismatch(self.n(), next.n()));
        }
        let seqs = self
            .seqs
            .iter()
            .zip(&next.seqs)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(Program {
            name: format!("{}_{}", self.name, next.name),
            seqs,
        })
    }

    /// All events, process by process in program order, with their
    /// per-channel ordinals.
    pub fn events(&self) -> Vec<EventRef> {
        let mut counters: BTreeMap<(Channel, EventKind), usize> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.event_count());
        for (idx, seq) in self.seqs.iter().enumerate() {
            let proc = ProcessId::from_index(idx);
            for (index, stmt) in seq.iter().enumerate() {
                let channel = stmt.channel(proc);
                let k = counters.entry((channel, stmt.kind)).or_insert(0);
                *k += 1;
                out.push(EventRef {
                    proc,
                    index,
                    kind: stmt.kind,
                    channel,
                    seq_on_channel: *k,
                });
            }
        }
        out
    }
}

/// Send and receive counts of one channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Traffic {
    pub sends: usize,
    pub recvs: usize,
}

/// Per-channel send/receive counts. Channels without traffic are omitted.
pub fn channel_traffic(p: &Program) -> BTreeMap<Channel, Traffic> {
    let mut out: BTreeMap<Channel, Traffic> = BTreeMap::new();
    for (idx, seq) in p.seqs.iter().enumerate() {
        let owner = ProcessId::from_index(idx);
        for stmt in seq {
            let t = out.entry(stmt.channel(owner)).or_default();
            match stmt.kind {
                EventKind::Send => t.sends += 1,
                EventKind::Recv => t.recvs += 1,
            }
        }
    }
    out
}

/// Every statement of a straight-line program runs exactly once, so counting
/// decides balance.
pub fn is_balanced(p: &Program) -> bool {
    first_unbalanced(p).is_none()
}

pub(crate) fn first_unbalanced(p: &Program) -> Option<Channel> {
    channel_traffic(p)
        .into_iter()
        .find(|(_, t)| t.sends != t.recvs)
        .map(|(ch, _)| ch)
}
