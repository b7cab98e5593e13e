use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use polylyap::gadget::{encode_naesat3, Nae3Instance};
use polylyap::search::{SearchConfig, SynthesisOutcome, Synthesizer};
use polylyap::sublevel::sublevel_polygon;
use polylyap::{simulate, Candidate, Error, HybridSystem, ModePolicy, Result, Verdict, VerifierConfig};
use serde_json::json;

use crate::config::FileConfig;
use crate::{
    Cli, Command, EncodeArgs, PlotArgs, SimulateArgs, SynthArgs, VerifyArgs, EXIT_BUDGET, EXIT_NO_ROBUST, EXIT_REFUTED,
};

const DEFAULT_EPSILON: f64 = 1e-3;
const DEFAULT_DT: f64 = 1e-3;
const DEFAULT_HORIZON: f64 = 10.0;

pub fn run(cli: &Cli) -> Result<u8> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let deterministic = cli.deterministic || file.deterministic.unwrap_or(false);
    match &cli.command {
        Command::Synth(args) => synth(args, &file, deterministic),
        Command::Verify(args) => verify(args, &file),
        Command::Simulate(args) => simulate_cmd(args, &file),
        Command::EncodeSat(args) => encode(args),
        Command::PlotData(args) => plot(args),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    let res = match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    res.map_err(|e| Error::Precondition(format!("cannot write output: {e}")))
}

fn verifier_config(file: &FileConfig) -> VerifierConfig {
    let t = &file.tolerances;
    let mut cfg = VerifierConfig::default();
    if let Some(v) = t.tol_cex {
        cfg.tol_cex = v;
    }
    if let Some(v) = t.x_max {
        cfg.x_max = v;
    }
    apply_lp(&mut cfg.lp, file);
    cfg
}

fn apply_lp(lp: &mut polylyap::lp::LpConfig, file: &FileConfig) {
    let t = &file.tolerances;
    if let Some(v) = t.lp_feasibility {
        lp.tol_feas = v;
    }
    if let Some(v) = t.lp_optimality {
        lp.tol_obj = v;
    }
    if let Some(v) = t.lp_pivot {
        lp.pivot_tol = v;
    }
}

fn synth(args: &SynthArgs, file: &FileConfig, deterministic: bool) -> Result<u8> {
    let system = HybridSystem::parse(&read(&args.system)?).map_err(|e| e.context(args.system.display().to_string()))?;
    let pieces = args
        .pieces
        .or(file.synth.pieces)
        .ok_or_else(|| Error::Precondition("--pieces is required".into()))?;
    let epsilon = args.epsilon.or(file.synth.epsilon).unwrap_or(DEFAULT_EPSILON);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!(
            "--epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut cfg = SearchConfig::new(pieces, epsilon, system.dim());
    if let Some(n) = args.budget_nodes.or(file.synth.budget_nodes) {
        cfg.budget.max_nodes = n;
    }
    if let Some(s) = args.budget_seconds.or(file.synth.budget_seconds) {
        cfg.budget.max_time =
            Duration::try_from_secs_f64(s).map_err(|e| Error::Precondition(format!("--budget-seconds: {e}")))?;
    }
    if let Some(order) = args.leaf_order.map(Into::into).or(file.synth.leaf_order) {
        cfg.leaf_order = order;
    }
    if let Some(center) = args.center.map(Into::into).or(file.synth.center) {
        cfg.learner.center = center;
    }
    cfg.symmetry_breaking = !args.no_symmetry_breaking && file.synth.symmetry_breaking.unwrap_or(true);
    if let Some(v) = file.tolerances.tau_min {
        cfg.learner.tau_min = v;
    }
    apply_lp(&mut cfg.learner.lp, file);
    cfg.verifier = verifier_config(file);

    let mut log = match &args.log {
        Some(p) => {
            Some(BufWriter::new(File::create(p).map_err(|e| {
                Error::Precondition(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => None,
    };
    let mut log_error = None;
    let mut synth = Synthesizer::new(&system, cfg)?;
    let outcome = synth.run_with(|_, event| {
        if let (Some(w), None) = (log.as_mut(), &log_error) {
            let line = serde_json::to_string(event).expect("event serializes");
            if let Err(e) = writeln!(w, "{line}") {
                log_error = Some(e);
            }
        }
    })?;
    if let Some(w) = log.as_mut() {
        if let Err(e) = w.flush() {
            log_error.get_or_insert(e);
        }
    }
    if let Some(e) = log_error {
        return Err(Error::Precondition(format!("cannot write event log: {e}")));
    }

    let stats = outcome.stats();
    log::info!(
        "explored {} nodes to depth {} with {} programs in {:.3?}",
        stats.nodes_explored,
        stats.max_depth,
        stats.lp_count,
        stats.wall_time
    );
    let (name, code) = match &outcome {
        SynthesisOutcome::Found(..) => ("found", 0),
        SynthesisOutcome::NoRobustLyapunov(_) => ("no_robust_lyapunov", EXIT_NO_ROBUST),
        SynthesisOutcome::BudgetExhausted(_) => ("budget_exhausted", EXIT_BUDGET),
    };
    let mut doc = json!({ "outcome": name, "stats": stats });
    if let Some(c) = outcome.candidate() {
        doc["pieces"] = json!(c.pieces());
    }
    if !deterministic {
        doc["wall_time_seconds"] = json!(stats.wall_time.as_secs_f64());
    }
    write_output(
        args.out.as_ref(),
        &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
    )?;
    Ok(code)
}

fn verify(args: &VerifyArgs, file: &FileConfig) -> Result<u8> {
    let system = HybridSystem::parse(&read(&args.system)?).map_err(|e| e.context(args.system.display().to_string()))?;
    let candidate =
        Candidate::parse(&read(&args.candidate)?).map_err(|e| e.context(args.candidate.display().to_string()))?;
    let verdict = polylyap::verify(&candidate, &system, &verifier_config(file))?;
    let (doc, code) = match &verdict {
        Verdict::Valid => (json!({ "verdict": "valid" }), 0),
        Verdict::Refuted(cex) => (json!({ "verdict": "refuted", "counterexample": cex }), EXIT_REFUTED),
    };
    write_output(
        args.out.as_ref(),
        &(serde_json::to_string_pretty(&doc).expect("json") + "\n"),
    )?;
    Ok(code)
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Precondition(format!("bad number {s:?} in --x0: {e}")))
        })
        .collect()
}

fn simulate_cmd(args: &SimulateArgs, file: &FileConfig) -> Result<u8> {
    let system = HybridSystem::parse(&read(&args.system)?).map_err(|e| e.context(args.system.display().to_string()))?;
    let x0 = parse_vector(&args.x0)?;
    if x0.len() != system.dim() {
        return Err(Error::Precondition(format!(
            "--x0 has {} entries but the system has dimension {}",
            x0.len(),
            system.dim()
        )));
    }
    let dt = args.dt.or(file.simulate.dt).unwrap_or(DEFAULT_DT);
    let horizon = args.horizon.or(file.simulate.horizon).unwrap_or(DEFAULT_HORIZON);
    let policy = args.prefer_mode.map_or(ModePolicy::LowestIndex, ModePolicy::Prefer);
    let traj = simulate(&system, &x0, dt, horizon, policy)?;
    write_output(args.out.as_ref(), &traj.to_csv())?;
    Ok(0)
}

fn encode(args: &EncodeArgs) -> Result<u8> {
    let text = String::from_utf8(read(&args.input)?).map_err(|e| Error::Parse {
        location: args.input.display().to_string(),
        message: e.to_string(),
    })?;
    let inst = Nae3Instance::parse_dimacs(&text).map_err(|e| e.context(args.input.display().to_string()))?;
    let gadget = encode_naesat3(&inst)?;
    write_output(args.out.as_ref(), &(gadget.system.to_json() + "\n"))?;
    if let Some(p) = &args.index_map {
        let map = serde_json::to_string_pretty(&gadget.index).expect("json") + "\n";
        write_output(Some(p), &map)?;
    }
    Ok(0)
}

/// States of the triples on the path from the root to the certified node of
/// an event log.
fn constraint_states(log: &[u8]) -> Result<Vec<Vec<f64>>> {
    let text = std::str::from_utf8(log).map_err(|e| Error::Parse {
        location: "event log".into(),
        message: e.to_string(),
    })?;
    let mut events: HashMap<u64, serde_json::Value> = HashMap::new();
    let mut found = None;
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let event: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            location: format!("event log line {}", k + 1),
            message: e.to_string(),
        })?;
        let id = event["node"].as_u64().ok_or_else(|| Error::Parse {
            location: format!("event log line {}", k + 1),
            message: "missing node id".into(),
        })?;
        if event["verdict"] == "valid" {
            found = Some(id);
        }
        events.insert(id, event);
    }
    let mut states = Vec::new();
    let mut cur = found;
    while let Some(id) = cur {
        let event = events.get(&id).ok_or_else(|| Error::Parse {
            location: "event log".into(),
            message: format!("node {id} is referenced but never logged"),
        })?;
        if let Some(x) = event["added"]["x"].as_array() {
            states.push(x.iter().filter_map(|v| v.as_f64()).collect());
        }
        cur = event["parent"].as_u64();
    }
    states.reverse();
    Ok(states)
}

fn plot(args: &PlotArgs) -> Result<u8> {
    let candidate =
        Candidate::parse(&read(&args.candidate)?).map_err(|e| e.context(args.candidate.display().to_string()))?;
    let vertices = sublevel_polygon(&candidate)?;
    let mut out = String::from("kind,x1,x2\n");
    for v in &vertices {
        out.push_str(&format!("vertex,{:.16e},{:.16e}\n", v[0], v[1]));
    }
    if let Some(p) = &args.log {
        for x in constraint_states(&read(p)?)? {
            if x.len() == 2 {
                out.push_str(&format!("constraint,{:.16e},{:.16e}\n", x[0], x[1]));
            }
        }
    }
    write_output(args.out.as_ref(), &out)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("1.25, 0").unwrap(), vec![1.25, 0.0]);
        assert!(parse_vector("1,x").is_err());
    }

    #[test]
    fn log_path_is_followed() {
        let log = br#"{"node":0,"parent":null,"verdict":"refuted","added":null}
{"node":1,"parent":0,"verdict":"infeasible","added":{"x":[1.0,0.0],"i":0,"j":0}}
{"node":2,"parent":0,"verdict":"refuted","added":{"x":[0.0,1.0],"i":0,"j":1}}
{"node":3,"parent":2,"verdict":"valid","added":{"x":[-1.0,0.5],"i":1,"j":0}}
"#;
        assert_eq!(constraint_states(log).unwrap(), vec![vec![0.0, 1.0], vec![-1.0, 0.5]]);
        assert!(constraint_states(b"{oops").is_err());
    }
}
