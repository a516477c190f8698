//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits nonzero if any of them fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use layerseal::catalog::{crossing_exchange, exchange_then_report, hub_broadcast, relay_acknowledgment};
use layerseal::generate::{all_programs, random_program};
use layerseal::{
    closed_channels, compute_signature, construct_seal, expand_plan, is_seal, is_sealable, oracle_channel_open,
    oracle_seals, oracle_tcc, parse, print, signature_compose, signature_equal, Channel, OracleBudget, OracleError,
    ParseErrorKind, ProcessId, Program, SealError, SigNode, Statement,
};
use layerseal_cli::{run, EXIT_INPUT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn pid(i: u32) -> ProcessId {
    ProcessId::new(i).unwrap()
}

fn ch(i: u32, j: u32) -> Channel {
    Channel::new(pid(i), pid(j)).unwrap()
}

fn mt(n: usize, i: u32, j: u32) -> Program {
    Program::transmit(n, pid(i), pid(j)).unwrap()
}

/// The exhaustive corpus: every balanced, deadlock-free program with
/// n <= 3 and at most four events.
fn corpus() -> Vec<Program> {
    (1..=3).flat_map(|n| all_programs(n, 4)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn seal_of(p: &Program) -> Option<Program> {
    construct_seal(p).ok().map(|plan| expand_plan(&plan, p.n()).unwrap())
}

fn small_fixtures() -> Outcome {
    let start = Instant::now();
    let (mt12, mt21) = (mt(2, 1, 2), mt(2, 2, 1));
    ensure(is_seal(&mt12, &mt21).unwrap(), || "MT(2->1) does not seal MT(1->2)".into())?;
    ensure(!is_seal(&mt12, &mt12).unwrap(), || "MT(1->2) seals itself".into())?;
    let last = SigNode::LastRecv(ch(1, 2));
    ensure(compute_signature(&mt12).unwrap().contains(last), || "Sig(MT) lacks the last receive".into())?;
    let acked = mt12.then(&mt21).unwrap();
    ensure(!compute_signature(&acked).unwrap().contains(last), || "Sig(MT then ack) keeps the last receive".into())?;
    let x = crossing_exchange(2);
    ensure(!is_sealable(&x).unwrap(), || "X reported sealable".into())?;
    ensure(construct_seal(&x) == Err(SealError::Unsealable), || "construct_seal(X) did not refuse".into())?;
    let (p, s) = (crossing_exchange(3), relay_acknowledgment());
    ensure(is_seal(&p, &s).unwrap(), || "S' does not seal P'".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("8 fixtures in {elapsed:?}"))
}

fn decision_oracle_equivalence() -> Outcome {
    let budget = OracleBudget::default();
    let start = Instant::now();
    let (mut pairs, mut seals) = (0, 0);
    for n in 1..=3 {
        let programs = all_programs(n, 4);
        for p in &programs {
            for q in &programs {
                let decided = is_seal(p, q).unwrap();
                let observed = oracle_seals(p, q, budget).map_err(|e| format!("{}: {e}", print(p)))?;
                ensure(decided == observed, || {
                    format!("is_seal={decided} oracle={observed} for {} then {}", print(p), print(q))
                })?;
                pairs += 1;
                seals += decided as usize;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!("{pairs} pairs agree ({seals} seals) in {elapsed:?}"))
}

fn open_channel_equivalence() -> Outcome {
    let budget = OracleBudget::default();
    let (mut checked, mut open) = (0, 0);
    for p in corpus() {
        let sig = compute_signature(&p).unwrap();
        for c in Channel::all(p.n()) {
            let observed = oracle_channel_open(&p, c, budget).map_err(|e| e.to_string())?;
            let decided = sig.contains(SigNode::LastRecv(c));
            ensure(decided == observed, || format!("{c} static={decided} oracle={observed} in {}", print(&p)))?;
            checked += 1;
            open += observed as usize;
        }
    }
    Ok(format!("{checked} channels agree ({open} open)"))
}

fn compositionality() -> Outcome {
    let check = |p: &Program, q: &Program| -> Result<(), String> {
        let composed = signature_compose(&compute_signature(p).unwrap(), &compute_signature(q).unwrap()).unwrap();
        let direct = compute_signature(&p.then(q).unwrap()).unwrap();
        ensure(signature_equal(&composed, &direct), || format!("mismatch on {} then {}", print(p), print(q)))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=5);
        let p = random_program(&mut rng, n, 5);
        let q = random_program(&mut rng, n, 5);
        check(&p, &q)?;
    }
    let mut exhaustive = 0;
    for n in 1..=3 {
        let programs = all_programs(n, 4);
        for p in &programs {
            for q in &programs {
                check(p, q)?;
                exhaustive += 1;
            }
        }
    }
    Ok(format!("1000 random and {exhaustive} exhaustive pairs equal"))
}

fn synthesis_soundness() -> Outcome {
    let budget = OracleBudget {
        max_matchings: 10_000_000,
        max_events: 64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut sealable, mut unsealable, mut confirmed, mut too_big) = (0, 0, 0, 0);
    while sealable < 500 {
        let n = rng.gen_range(2..=6);
        let p = random_program(&mut rng, n, 6);
        if !is_sealable(&p).unwrap() {
            ensure(construct_seal(&p) == Err(SealError::Unsealable), || format!("no refusal for {}", print(&p)))?;
            unsealable += 1;
            continue;
        }
        sealable += 1;
        let plan = construct_seal(&p).map_err(|e| format!("{e} on {}", print(&p)))?;
        ensure(plan.len() < 3 * n, || format!("{} transmissions for n={n}", plan.len()))?;
        let s = expand_plan(&plan, n).unwrap();
        ensure(is_seal(&p, &s).unwrap(), || format!("plan fails Is-Seal for {}", print(&p)))?;
        match oracle_seals(&p, &s, budget) {
            Ok(true) => confirmed += 1,
            Ok(false) => return Err(format!("oracle rejects the plan for {}", print(&p))),
            Err(OracleError::BudgetExceeded(_)) => too_big += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!(
        "500 sealable (oracle confirmed {confirmed}, {too_big} beyond enumeration), {unsealable} unsealable refused"
    ))
}

fn report_example() -> Outcome {
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for n in 4..=6 {
        let l = exchange_then_report(n);
        let open = closed_channels(&l).unwrap().open_channels().len();
        let expected = n * n - 3 * n + 3;
        counts.push(format!("n={n}: {open} open, expected {expected}"));
        if open != expected {
            failures.push(format!("n={n} has {open} open channels, expected {expected}"));
        }
        let hub = hub_broadcast(n);
        if hub.event_count() != 2 * (n - 1) || !is_seal(&l, &hub).unwrap() {
            failures.push(format!("n={n}: hand-written seal rejected"));
        }
        match construct_seal(&l) {
            Ok(plan) if plan.len() < 3 * n => {}
            Ok(plan) => failures.push(format!("n={n}: {} transmissions", plan.len())),
            Err(e) => failures.push(format!("n={n}: {e}")),
        }
    }
    if failures.is_empty() {
        Ok(counts.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn non_tcc() -> Outcome {
    let budget = OracleBudget::default();
    let mut with_traffic = 0;
    for p in corpus() {
        let tcc = oracle_tcc(&p, budget).map_err(|e| e.to_string())?;
        ensure(tcc == p.is_empty(), || format!("oracle_tcc={tcc} for {}", print(&p)))?;
        with_traffic += !p.is_empty() as usize;
    }
    Ok(format!("{with_traffic} programs with traffic are not TCC; the empty program is"))
}

fn seal_algebra() -> Outcome {
    let budget = OracleBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut extended, mut chained, mut spot) = (0, 0, 0);
    for round in 0..300 {
        let n = rng.gen_range(2..=5);
        let p = random_program(&mut rng, n, 4);
        // Half the seals are synthesized so the implications are exercised.
        let s = match (round % 2 == 0).then(|| seal_of(&p)).flatten() {
            Some(s) => s,
            None => random_program(&mut rng, n, 4),
        };
        let q = random_program(&mut rng, n, 4);
        let s2 = seal_of(&s).unwrap_or_else(|| random_program(&mut rng, n, 4));
        if !is_seal(&p, &s).unwrap() {
            continue;
        }
        let sq = s.then(&q).unwrap();
        ensure(is_seal(&p, &sq).unwrap(), || format!("extension breaks the seal of {}", print(&p)))?;
        extended += 1;
        if matches!(oracle_seals(&p, &sq, budget), Ok(true)) {
            spot += 1;
        }
        if is_seal(&s, &s2).unwrap() {
            let ps = p.then(&s).unwrap();
            ensure(is_seal(&ps, &s2).unwrap(), || format!("chained seal fails for {}", print(&p)))?;
            chained += 1;
        }
    }
    ensure(extended > 100 && chained > 100, || format!("too few non-vacuous cases ({extended}, {chained})"))?;
    Ok(format!(
        "300 triples: {extended} extension and {chained} chaining cases hold, {spot} oracle spot checks"
    ))
}

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    path.to_string_lossy().into_owned()
}

fn dsl_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for round in 0..1000 {
        let n = rng.gen_range(1..=6);
        let p = if round % 2 == 0 || n < 2 {
            random_program(&mut rng, n, 6)
        } else {
            // arbitrary statement soup, usually unbalanced
            let mut p = Program::empty(format!("soup{round}"), n);
            for _ in 0..rng.gen_range(0..12) {
                let owner = ProcessId::from_index(rng.gen_range(0..n));
                let peer = ProcessId::from_index((owner.index() + rng.gen_range(1..n)) % n);
                let stmt = if rng.gen() { Statement::send(peer) } else { Statement::recv(peer) };
                p.push(owner, stmt).unwrap();
            }
            p
        };
        let text = print(&p);
        let back = parse(&text).map_err(|e| format!("{e} in {text}"))?;
        ensure(back == p, || format!("round trip changed {text}"))?;
    }
    let fixtures = [
        ("bad_syntax.prog", ParseErrorKind::Syntax),
        ("bad_id.prog", ParseErrorKind::BadProcessId),
        ("bad_self.prog", ParseErrorKind::SelfChannel),
        ("bad_duplicate.prog", ParseErrorKind::DuplicateProcess),
    ];
    for (name, kind) in fixtures {
        let path = fixture(name);
        let err = parse(&std::fs::read_to_string(&path).unwrap()).err();
        ensure(err.as_ref().map(|e| e.kind) == Some(kind), || format!("{name}: got {err:?}"))?;
        let result = run(["layerseal", "check", path.as_str()]);
        ensure(result.exit_code == EXIT_INPUT, || format!("{name}: exit {}", result.exit_code))?;
    }
    Ok("1000 programs round trip; 4 error fixtures exit 2 with the right kind".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("small fixtures", small_fixtures),
        ("decision-oracle equivalence", decision_oracle_equivalence),
        ("open-channel equivalence", open_channel_equivalence),
        ("compositionality", compositionality),
        ("seal synthesis soundness and size", synthesis_soundness),
        ("exchange-then-report example", report_example),
        ("non-TCC property", non_tcc),
        ("seal algebra", seal_algebra),
        ("DSL round trip", dsl_round_trip),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS ({detail}; {secs:.2}s)", idx + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({detail}; {secs:.2}s)", idx + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
