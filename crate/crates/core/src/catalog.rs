//! Small named programs that come up repeatedly when reasoning about seals.

use crate::model::{ProcessId, Program, Statement};

fn pid(i: usize) -> ProcessId {
    ProcessId::from_index(i - 1)
}

/// Processes 1 and 2 each send to the other, then each receive. Neither
/// channel between them is ever closed. Requires `n >= 2`; any further
/// processes stay idle.
pub fn crossing_exchange(n: usize) -> Program {
    assert!(n >= 2, "crossing exchange needs two processes");
    let mut p = Program::empty("x", n);
    p.push(pid(1), Statement::send(pid(2))).unwrap();
    p.push(pid(1), Statement::recv(pid(2))).unwrap();
    p.push(pid(2), Statement::send(pid(1))).unwrap();
    p.push(pid(2), Statement::recv(pid(1))).unwrap();
    p
}

/// Seal for [`crossing_exchange`] with a third, idle process: processes 1
/// and 2 report to 3, which then answers both.
pub fn relay_acknowledgment() -> Program {
    let mut s = Program::empty("relay", 3);
    for (src, dst) in [(1, 3), (2, 3), (3, 1), (3, 2)] {
        s.push(pid(src), Statement::send(pid(dst))).unwrap();
        s.push(pid(dst), Statement::recv(pid(src))).unwrap();
    }
    s
}

/// Every process `i != 1` sends to all other processes except 1, then
/// receives from each of them, then reports to process 1. Process 1
/// receives the reports in ascending order.
pub fn exchange_then_report(n: usize) -> Program {
    assert!(n >= 2);
    let mut p = Program::empty(format!("l{n}"), n);
    for i in 2..=n {
        let others: Vec<usize> = (2..=n).filter(|&k| k != i).collect();
        for &k in &others {
            p.push(pid(i), Statement::send(pid(k))).unwrap();
        }
        for &k in &others {
            p.push(pid(i), Statement::recv(pid(k))).unwrap();
        }
        p.push(pid(i), Statement::send(pid(1))).unwrap();
    }
    for i in 2..=n {
        p.push(pid(1), Statement::recv(pid(i))).unwrap();
    }
    p
}

/// Process 1 sends one message to every other process, in ascending order.
pub fn hub_broadcast(n: usize) -> Program {
    let mut s = Program::empty(format!("hub{n}"), n);
    for i in 2..=n {
        s.push(pid(1), Statement::send(pid(i))).unwrap();
        s.push(pid(i), Statement::recv(pid(1))).unwrap();
    }
    s
}
