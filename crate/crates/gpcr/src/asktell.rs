//! Line-delimited JSON ask-tell session over any reader/writer pair.
//!
//! Outgoing: `{"type":"suggest","iter":k,"x":[..]}`, `{"type":"best_guess","x":[..]}`,
//! `{"type":"error","msg":".."}`, `{"type":"done","iterations":k}`.
//!
//! Incoming: `{"type":"observe","objective":1.2|"unstable","constraints":[0.3|"violated"|"satisfied", ..]}`,
//! `{"type":"best_guess"}`, `{"type":"quit"}`.

use std::io::{BufRead, Write};
use std::path::Path;

use gpcr_core::bo::{BoEngine, CoupledObservation, Outcome};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::dataset;
use crate::error::{CliError, CliResult};
use crate::report::{write_json, RunSummary};

fn parse_outcome(v: &Value, label: &str) -> Result<Outcome, String> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(Outcome::Value)
            .ok_or_else(|| format!("unrepresentable number {n}")),
        Value::String(s) if s == label => Ok(Outcome::Fail),
        Value::String(s) if s == "satisfied" => Ok(Outcome::Pass),
        other => Err(format!("expected a number, \"{label}\" or \"satisfied\", got {other}")),
    }
}

/// Decodes an `observe` message.
pub fn parse_observation(msg: &Value) -> Result<CoupledObservation, String> {
    let objective = match msg.get("objective") {
        Some(Value::String(s)) if s == "unstable" => Outcome::Fail,
        Some(Value::Number(n)) => Outcome::Value(n.as_f64().ok_or("unrepresentable objective")?),
        Some(other) => return Err(format!("objective must be a number or \"unstable\", got {other}")),
        None => return Err("missing objective".into()),
    };
    let constraints = match msg.get("constraints") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| parse_outcome(v, "violated"))
            .collect::<Result<_, _>>()?,
        Some(other) => return Err(format!("constraints must be an array, got {other}")),
    };
    Ok(CoupledObservation {
        objective,
        constraints,
    })
}

fn send<W: Write>(out: &mut W, v: &Value) -> CliResult<()> {
    writeln!(out, "{v}")?;
    out.flush()?;
    Ok(())
}

fn persist(engine: &BoEngine, dir: &Path) -> CliResult<()> {
    let st = engine.state();
    dataset::save(&st.objective, &dir.join("objective.json"))?;
    for (j, d) in st.constraints.iter().enumerate() {
        dataset::save(d, &dir.join(format!("constraint_{}.json", j + 1)))?;
    }
    Ok(())
}

fn suggest<W: Write>(engine: &mut BoEngine, out: &mut W) -> CliResult<()> {
    match engine.suggest() {
        Ok(s) => send(out, &json!({"type": "suggest", "iter": s.iter, "x": s.x})),
        Err(e) => {
            send(out, &json!({"type": "error", "msg": e.to_string()}))?;
            Err(CliError::runtime(e))
        }
    }
}

/// Runs a session until `quit` or end of input. Datasets are written to
/// `cfg.output` after every accepted observation, `summary.json` at the end.
pub fn run_session<R: BufRead, W: Write>(cfg: &RunConfig, input: R, mut out: W) -> CliResult<usize> {
    let case = cfg.case_config()?;
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir)?;
    let mut engine = BoEngine::new(case.clone(), cfg.acquisition, cfg.seed)?;
    let mut observations = 0;
    suggest(&mut engine, &mut out)?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let msg: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                send(&mut out, &json!({"type": "error", "msg": format!("malformed JSON: {e}")}))?;
                suggest(&mut engine, &mut out)?;
                continue;
            }
        };
        match msg.get("type").and_then(Value::as_str) {
            Some("observe") => {
                let res = parse_observation(&msg).and_then(|obs| engine.observe(obs).map_err(|e| e.to_string()));
                match res {
                    Ok(()) => {
                        observations += 1;
                        persist(&engine, &dir)?;
                    }
                    Err(e) => send(&mut out, &json!({"type": "error", "msg": e}))?,
                }
                suggest(&mut engine, &mut out)?;
            }
            Some("best_guess") => {
                send(&mut out, &json!({"type": "best_guess", "x": engine.best_guess()}))?;
            }
            Some("quit") => break,
            other => {
                let msg = match other {
                    Some(t) => format!("unknown message type '{t}'"),
                    None => "message has no type".to_string(),
                };
                send(&mut out, &json!({"type": "error", "msg": msg}))?;
                suggest(&mut engine, &mut out)?;
            }
        }
    }
    let summary = RunSummary::new(&cfg.problem, &case, cfg.seed, engine.state(), None);
    write_json(&dir.join("summary.json"), &summary)?;
    send(&mut out, &json!({"type": "done", "iterations": engine.state().iteration}))?;
    Ok(observations)
}
