#![allow(dead_code)]

use layerseal::generate::random_program;
use layerseal::{ProcessId, Program, Statement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn pid(i: u32) -> ProcessId {
    ProcessId::new(i).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Any well-formed straight-line program, balanced or not.
pub fn any_program(max_n: usize, max_len: usize) -> impl Strategy<Value = Program> {
    (1..=max_n).prop_flat_map(move |n| {
        let stmt = (any::<bool>(), 0..n.max(2) - 1);
        let seq = proptest::collection::vec(stmt, 0..=if n > 1 { max_len } else { 0 });
        proptest::collection::vec(seq, n).prop_map(move |seqs| {
            let seqs = seqs
                .into_iter()
                .enumerate()
                .map(|(owner, seq)| {
                    seq.into_iter()
                        .map(|(is_send, offset)| {
                            let peer = ProcessId::from_index((owner + 1 + offset) % n);
                            if is_send {
                                Statement::send(peer)
                            } else {
                                Statement::recv(peer)
                            }
                        })
                        .collect()
                })
                .collect();
            Program::from_seqs("prop", seqs).unwrap()
        })
    })
}

/// Balanced, deadlock-free programs drawn through the seeded generator.
pub fn bsl(max_n: usize, max_transmissions: usize) -> impl Strategy<Value = Program> {
    (any::<u64>(), 1..=max_n).prop_map(move |(seed, n)| random_program(&mut rng(seed), n, max_transmissions))
}

/// Two balanced, deadlock-free programs over the same processes.
pub fn bsl_pair(max_n: usize, max_transmissions: usize) -> impl Strategy<Value = (Program, Program)> {
    (any::<u64>(), 1..=max_n).prop_map(move |(seed, n)| {
        let mut r = rng(seed);
        let p = random_program(&mut r, n, max_transmissions).with_name("p");
        let q = random_program(&mut r, n, max_transmissions).with_name("q");
        (p, q)
    })
}
