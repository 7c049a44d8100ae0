//! JSON-lines traces, one round per line.

use serde::{Deserialize, Serialize};

use super::{Execution, Round};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Line {
    t: usize,
    active: Vec<usize>,
    comms: Vec<(usize, usize)>,
    anon: bool,
}

pub fn write_trace(exec: &Execution) -> String {
    let mut out = String::new();
    for (t, r) in exec.rounds.iter().enumerate() {
        let line = Line { t, active: r.active.clone(), comms: r.comms.clone(), anon: r.anon };
        out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Rebuilds an execution on `n` nodes; the final active set is recovered as
/// the receivers of the last round.
pub fn read_trace(n: usize, text: &str) -> Result<Execution> {
    let mut rounds = Vec::new();
    for (i, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line: Line =
            serde_json::from_str(raw).map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?;
        if line.t != rounds.len() {
            return Err(Error::Parse { line: i + 1, reason: format!("expected t = {}", rounds.len()) });
        }
        if line.active.iter().chain(line.comms.iter().flat_map(|(u, v)| [u, v])).any(|&v| v >= n) {
            return Err(Error::Parse { line: i + 1, reason: format!("node outside 0..{n}") });
        }
        rounds.push(Round { active: line.active, comms: line.comms, anon: line.anon });
    }
    let first: &Round = rounds.first().ok_or(Error::Parse { line: 1, reason: "empty trace".into() })?;
    let [source] = first.active[..] else {
        return Err(Error::Parse { line: 1, reason: "round 0 must have exactly one active node".into() });
    };
    let mut exec = Execution::start(n, source);
    let mut remaining = n - 1;
    for (t, round) in rounds.iter().enumerate() {
        let mut receivers: Vec<usize> = round.comms.iter().map(|&(_, v)| v).collect();
        receivers.sort_unstable();
        receivers.dedup();
        exec.final_active = receivers;
        exec.mark_informed(t + 1, &mut remaining);
    }
    exec.rounds = rounds;
    Ok(exec)
}
