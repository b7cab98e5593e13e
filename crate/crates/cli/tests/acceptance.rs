//! Acceptance run: one PASS/FAIL line per criterion. Runs are sequential so
//! that the reported times are not inflated by sharing cores.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use polylyap::gadget::{
    check_gadget_conditions, decode_assignment, encode_naesat3, explicit_candidate, Literal, Nae3Instance,
};
use polylyap::linalg::dot;
use polylyap::lp::{chebyshev_center, solve_lp, LpOutcome};
use polylyap::search::{depth_bound, excluded_by_all_children, EventVerdict};
use polylyap::{
    simulate, verify, Candidate, HybridSystem, ModePolicy, SearchConfig, SynthesisOutcome, Synthesizer, VerifierConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXCLUSION_TOL: f64 = 1e-9;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> HybridSystem {
    HybridSystem::parse(&std::fs::read(data(name)).unwrap()).unwrap()
}

fn polylyap(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_polylyap"))
        .args(args)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

/// A synthesis run instrumented with the exclusion check on every expansion.
struct Run {
    label: String,
    outcome: Result<SynthesisOutcome, String>,
    elapsed: Duration,
    expansions: usize,
    violations: Vec<String>,
}

fn run(label: &str, sys: &HybridSystem, m: usize, epsilon: f64, max_time: Duration) -> Run {
    let mut cfg = SearchConfig::new(m, epsilon, sys.dim());
    cfg.budget.max_time = max_time;
    let mut expansions = 0;
    let mut violations = Vec::new();
    let started = Instant::now();
    let outcome = Synthesizer::new(sys, cfg).and_then(|mut s| {
        s.run_with(|tree, event| {
            if event.verdict != EventVerdict::Refuted {
                return;
            }
            expansions += 1;
            let c = Candidate::new(event.candidate.clone().expect("refuted nodes carry a candidate")).unwrap();
            let cex = event
                .counterexample
                .as_ref()
                .expect("refuted nodes carry a counterexample");
            if !excluded_by_all_children(&c, cex, sys, EXCLUSION_TOL).unwrap() {
                violations.push(format!(
                    "node {}: a clause at the counterexample still holds",
                    event.node
                ));
            }
            for &child in &tree.node(event.node).children {
                let t = tree.node(child).added.as_ref().expect("children add a triple");
                if t.holds_for(&c, sys, EXCLUSION_TOL).unwrap() {
                    violations.push(format!(
                        "node {}: child {child} admits the parent candidate",
                        event.node
                    ));
                }
            }
        })
    });
    Run {
        label: label.into(),
        outcome: outcome.map_err(|e| e.to_string()),
        elapsed: started.elapsed(),
        expansions,
        violations,
    }
}

fn describe(r: &Run) -> String {
    match &r.outcome {
        Ok(o) => {
            let s = o.stats();
            let name = match o {
                SynthesisOutcome::Found(..) => "Found",
                SynthesisOutcome::NoRobustLyapunov(_) => "NoRobustLyapunov",
                SynthesisOutcome::BudgetExhausted(_) => "BudgetExhausted",
            };
            format!(
                "{} {name} after {} nodes, depth {}, {:.1} s",
                r.label,
                s.nodes_explored,
                s.max_depth,
                r.elapsed.as_secs_f64()
            )
        }
        Err(e) => format!("{} error: {e}", r.label),
    }
}

fn found(r: &Run) -> Option<&Candidate> {
    r.outcome.as_ref().ok().and_then(SynthesisOutcome::candidate)
}

fn write_candidate(dir: &Path, name: &str, c: &Candidate) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, c.to_json()).unwrap();
    p
}

/// Positivity and decrease at unit-circle samples by direct arithmetic.
fn sample_check(c: &Candidate, sys: &HybridSystem, samples: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..samples {
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = [t.cos(), t.sin()];
        let values: Vec<f64> = c.pieces().iter().map(|p| dot(p, &x)).collect();
        let v = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if v <= 0.0 {
            return Err(format!("V({x:?}) = {v}"));
        }
        for mode in sys.modes() {
            if mode.domain().iter().any(|g| dot(g, &x) < 0.0) {
                continue;
            }
            let f = mode.flow().mul_vec(&x);
            for (i, p) in c.pieces().iter().enumerate() {
                if values[i] == v && dot(p, &f) >= 1e-9 {
                    return Err(format!("piece {i} increases at {x:?}: {}", dot(p, &f)));
                }
            }
        }
    }
    Ok(())
}

fn criterion1(r: &Run, sys: &HybridSystem, dir: &Path) -> Verdict {
    let Some(c) = found(r) else {
        return verdict(false, describe(r));
    };
    let path = write_candidate(dir, "example1.json", c);
    let (code, out) = polylyap(&[
        "verify",
        "--system",
        data("example1.json").to_str().unwrap(),
        "--candidate",
        path.to_str().unwrap(),
    ]);
    if code != 0 {
        return verdict(false, format!("verify exited {code}: {out}"));
    }
    if let Err(e) = sample_check(c, sys, 10_000) {
        return verdict(false, format!("sample check: {e}"));
    }
    let traj = simulate(sys, &[1.25, 0.0], 1e-3, 10.0, ModePolicy::LowestIndex).unwrap();
    let worst = traj
        .states
        .windows(2)
        .map(|w| c.value(&w[1]) - c.value(&w[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    let in_time = r.elapsed <= Duration::from_secs(300);
    verdict(
        worst <= 1e-6 && in_time,
        format!(
            "{}; verify valid; 10^4 samples clean; largest V increase along the trajectory {worst:.2e}",
            describe(r)
        ),
    )
}

fn criterion2(r: &Run, dir: &Path) -> Verdict {
    let Some(c) = found(r) else {
        return verdict(false, describe(r));
    };
    let path = write_candidate(dir, "rotation.json", c);
    let csv = dir.join("rotation.csv");
    let (code, out) = polylyap(&[
        "plot-data",
        "--candidate",
        path.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    if code != 0 {
        return verdict(false, format!("plot-data exited {code}: {out}"));
    }
    let edges = std::fs::read_to_string(csv)
        .unwrap()
        .lines()
        .filter(|l| l.starts_with("vertex,"))
        .count();
    verdict(
        edges == 8,
        format!("{}; 1-sublevel polygon has {edges} edges (want 8)", describe(r)),
    )
}

fn criterion3(runs: &[Run]) -> Verdict {
    let ok = runs
        .iter()
        .all(|r| matches!(r.outcome, Ok(SynthesisOutcome::NoRobustLyapunov(_))));
    verdict(ok, runs.iter().map(describe).collect::<Vec<_>>().join("; "))
}

fn criterion4(r: &Run) -> Verdict {
    let (code, out) = polylyap(&[
        "verify",
        "--system",
        data("contract.json").to_str().unwrap(),
        "--candidate",
        data("infnorm.json").to_str().unwrap(),
    ]);
    let inf = Candidate::parse(&std::fs::read(data("infnorm.json")).unwrap()).unwrap();
    let lib = verify(&inf, &load("contract.json"), &VerifierConfig::default()).unwrap();
    verdict(
        found(r).is_some() && code == 0 && lib.is_valid(),
        format!(
            "{}; ∞-norm candidate: verify exited {code} {}",
            describe(r),
            out.trim().replace('\n', " ")
        ),
    )
}

fn criterion5(runs: &[&Run]) -> Verdict {
    let expansions: usize = runs.iter().map(|r| r.expansions).sum();
    let violations: Vec<&String> = runs.iter().flat_map(|r| &r.violations).collect();
    let mut detail = format!(
        "{expansions} expansions over {} runs, {} violations",
        runs.len(),
        violations.len()
    );
    if let Some(v) = violations.first() {
        detail += &format!("; first: {v}");
    }
    verdict(expansions > 0 && violations.is_empty(), detail)
}

fn criterion6(dir: &Path) -> Verdict {
    let sys = load("example1.json");
    let traj = simulate(&sys, &[1.5, 0.0], 1e-3, 1.0, ModePolicy::Prefer(1)).unwrap();
    let x = traj.final_state();
    let t = *traj.times.last().unwrap();
    let lib_err = x[0].abs().max((x[1] + 1.5).abs());

    let csv = dir.join("sim.csv");
    let (code, out) = polylyap(&[
        "simulate",
        "--system",
        data("example1.json").to_str().unwrap(),
        "--x0",
        "1.5,0",
        "--dt",
        "1e-3",
        "--horizon",
        "1",
        "--prefer-mode",
        "1",
        "--out",
        csv.to_str().unwrap(),
    ]);
    if code != 0 {
        return verdict(false, format!("simulate exited {code}: {out}"));
    }
    let text = std::fs::read_to_string(csv).unwrap();
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .take(3)
        .map(|s| s.parse().unwrap())
        .collect();
    let cli_err = last[1].abs().max((last[2] + 1.5).abs());
    verdict(
        (t - 1.0).abs() < 1e-12 && lib_err < 1e-6 && cli_err < 1e-6,
        format!(
            "x(1) = ({:.9}, {:.9}), error {lib_err:.1e}; CLI error {cli_err:.1e}",
            x[0], x[1]
        ),
    )
}

fn criterion7(run4: &Run) -> Verdict {
    let bound = depth_bound(2, 2, 0.01).unwrap();
    let Ok(outcome) = &run4.outcome else {
        return verdict(false, describe(run4));
    };
    verdict(
        bound == 64,
        format!(
            "depth_bound(2, 2, 0.01) = {bound}; the contracting run reached depth {}",
            outcome.stats().max_depth
        ),
    )
}

fn criterion8() -> Verdict {
    let inst = Nae3Instance::new(3, vec![[Literal::pos(0), Literal::pos(1), Literal::pos(2)]]).unwrap();
    let gs = encode_naesat3(&inst).unwrap();
    let mut mismatches = 0;
    let mut valid = 0;
    for bits in 0..8u32 {
        let a: Vec<bool> = (0..3).map(|k| bits >> k & 1 == 1).collect();
        let nae = a.contains(&true) && a.contains(&false);
        let ok = check_gadget_conditions(&explicit_candidate(&inst, &a).unwrap(), &gs)
            .unwrap()
            .is_valid();
        valid += ok as usize;
        mismatches += (ok != nae) as usize;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut round_trips = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let l = if n >= 3 { rng.gen_range(0..=4) } else { 0 };
        let clauses = (0..l)
            .map(|_| {
                let mut vars: Vec<usize> = (0..n).collect();
                for k in 0..3 {
                    let j = rng.gen_range(k..n);
                    vars.swap(k, j);
                }
                [0, 1, 2].map(|k| {
                    if rng.gen() {
                        Literal::neg(vars[k])
                    } else {
                        Literal::pos(vars[k])
                    }
                })
            })
            .collect();
        let inst = Nae3Instance::new(n, clauses).unwrap();
        let gs = encode_naesat3(&inst).unwrap();
        let a: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let c = explicit_candidate(&inst, &a).unwrap();
        if c.dim() == gs.index.dim && decode_assignment(&c, n).unwrap() == a {
            round_trips += 1;
        }
    }
    verdict(
        mismatches == 0 && valid == 6 && round_trips == 100,
        format!("{valid}/8 assignments valid, {mismatches} disagree with NAE; {round_trips}/100 round trips"),
    )
}

fn criterion9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut lp_bad = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let inst = oracles::random_lp2(&mut rng);
        match (oracles::vertex_optimum(&inst, 1e-9), solve_lp(&inst.to_lp())) {
            (Some(want), Ok(LpOutcome::Optimal { value, .. })) => {
                worst = worst.max((want - value).abs());
                lp_bad += ((want - value).abs() > 1e-7) as usize;
            }
            (None, Ok(LpOutcome::Infeasible)) => {}
            _ => lp_bad += 1,
        }
    }
    let mut ball_bad = 0;
    for k in 0..200 {
        let p = oracles::random_polytope(&mut rng, 2 + k % 3);
        match chebyshev_center(&p) {
            Ok(ball) => {
                let inside = p.rows().iter().all(|h| {
                    let norm = h.normal.iter().map(|a| a * a).sum::<f64>().sqrt();
                    h.excess(&ball.center) + ball.radius * norm <= 1e-9
                });
                ball_bad += (!inside || ball.radius < 0.0) as usize;
            }
            Err(_) => ball_bad += 1,
        }
    }
    verdict(
        lp_bad == 0 && ball_bad == 0,
        format!("{lp_bad}/200 LPs off the vertex oracle (worst gap {worst:.1e}); {ball_bad}/200 balls escape"),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let example1 = load("example1.json");
    let rotation = load("rotation.json");
    let expand = load("expand.json");
    let contract = load("contract.json");

    let r1 = run("m=4", &example1, 4, 1e-3, Duration::from_secs(300));
    let r2 = run("m=8", &rotation, 8, 1e-3, Duration::from_secs(600));
    let r3: Vec<Run> = [2, 3, 4]
        .into_iter()
        .map(|m| run(&format!("m={m}"), &expand, m, 0.01, Duration::from_secs(600)))
        .collect();
    let r4 = run("m=4", &contract, 4, 1e-3, Duration::from_secs(600));

    let mut all: Vec<&Run> = vec![&r1, &r2];
    all.extend(&r3);
    all.push(&r4);
    let results = [
        (
            1,
            "four-mode oscillator, 4 pieces",
            criterion1(&r1, &example1, dir.path()),
        ),
        (2, "two-mode rotation, 8 pieces", criterion2(&r2, dir.path())),
        (3, "expanding system has no robust function", criterion3(&r3)),
        (4, "contracting system and the ∞-norm", criterion4(&r4)),
        (5, "parent candidates are excluded by children", criterion5(&all)),
        (6, "simulator against the matrix exponential", criterion6(dir.path())),
        (7, "depth bound", criterion7(&r4)),
        (8, "NAE-3SAT gadget", criterion8()),
        (9, "LP kernel against oracles", criterion9()),
    ];

    let mut failed = 0;
    for (k, name, v) in &results {
        let tag = if v.ok { "PASS" } else { "FAIL" };
        println!("criterion {k} {tag}: {name}: {}", v.detail);
        failed += !v.ok as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
