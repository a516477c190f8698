//! Program corpora for exhaustive and randomized checking.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::deadlock_free;
use crate::model::{is_balanced, Channel, ProcessId, Program, Statement};

/// Every balanced, deadlock-free program on `n` processes with at most
/// `max_events` sends and receives in total, in a fixed order.
pub fn all_programs(n: usize, max_events: usize) -> Vec<Program> {
    let alphabet: Vec<Vec<Statement>> = ProcessId::all(n)
        .map(|owner| {
            ProcessId::all(n)
                .filter(|&peer| peer != owner)
                .flat_map(|peer| [Statement::send(peer), Statement::recv(peer)])
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut seqs: Vec<Vec<Statement>> = vec![Vec::new(); n];
    fill(&alphabet, 0, max_events, &mut seqs, &mut out);
    out
}

fn fill(
    alphabet: &[Vec<Statement>],
    proc: usize,
    budget: usize,
    seqs: &mut Vec<Vec<Statement>>,
    out: &mut Vec<Program>,
) {
    if proc == seqs.len() {
        let p = Program::from_seqs(format!("p{}", out.len()), seqs.clone())
            .expect("alphabet only names valid peers");
        if is_balanced(&p) && deadlock_free(&p).unwrap_or(false) {
            out.push(p);
        }
        return;
    }
    // Either this process' sequence is complete, or it grows by one more
    // statement.
    fill(alphabet, proc + 1, budget, seqs, out);
    if budget == 0 {
        return;
    }
    for &stmt in &alphabet[proc] {
        seqs[proc].push(stmt);
        fill(alphabet, proc, budget - 1, seqs, out);
        seqs[proc].pop();
    }
}

/// A random balanced, deadlock-free program with at most
/// `max_transmissions` messages.
///
/// Events are produced in one global order where every receive comes after
/// the send it is FIFO-matched to, so the program graph is acyclic. Every
/// deadlock-free program arises this way from some topological order of its
/// graph.
pub fn random_program<R: Rng + ?Sized>(rng: &mut R, n: usize, max_transmissions: usize) -> Program {
    let mut p = Program::empty("r", n);
    if n < 2 {
        return p;
    }
    let target = rng.gen_range(0..=max_transmissions);
    let channels: Vec<Channel> = Channel::all(n).collect();
    let mut in_flight: Vec<Channel> = Vec::new();
    let mut sent = 0;
    while sent < target || !in_flight.is_empty() {
        let deliver = sent == target || (!in_flight.is_empty() && rng.gen_bool(0.5));
        if deliver {
            let i = rng.gen_range(0..in_flight.len());
            let ch = in_flight.swap_remove(i);
            p.push(ch.dst(), Statement::recv(ch.src())).expect("valid channel");
        } else {
            let ch = *channels.choose(rng).expect("n >= 2");
            p.push(ch.src(), Statement::send(ch.dst())).expect("valid channel");
            in_flight.push(ch);
            sent += 1;
        }
    }
    p
}
