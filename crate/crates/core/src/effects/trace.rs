//! Finite observation of computations and JSONL trace export.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{Computation, Effect, Step, TagMismatch};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome<R> {
    Returned(R),
    OutOfFuel,
}

impl<R> Outcome<R> {
    pub fn returned(self) -> Option<R> {
        match self {
            Outcome::Returned(r) => Some(r),
            Outcome::OutOfFuel => None,
        }
    }
}

/// One line of an exported trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<E, A> {
    pub seq: u64,
    pub event: E,
    pub response: A,
}

/// Runs `t` against `oracle`, recording every visible event with the answer
/// it received. Taus and events both consume fuel.
pub fn record_trace<E, R, F>(
    t: Computation<E, R>,
    mut oracle: F,
    fuel: u64,
) -> Result<(Vec<(E, E::Answer)>, Outcome<R>), TagMismatch>
where
    E: Effect,
    R: Send + 'static,
    F: FnMut(&E) -> E::Answer,
{
    let mut trace = Vec::new();
    let mut t = t;
    for _ in 0..fuel {
        match t.step() {
            Step::Ret(r) => return Ok((trace, Outcome::Returned(r))),
            Step::Tau(next) => t = next,
            Step::Vis(p) => {
                let answer = oracle(p.event());
                let event = p.event().clone();
                t = p.resume(answer.clone())?;
                trace.push((event, answer));
            }
        }
    }
    Ok((trace, Outcome::OutOfFuel))
}

/// Writes `{"seq": n, "event": ..., "response": ...}` lines.
pub fn write_jsonl<'a, E, A, W, I>(out: &mut W, entries: I, first_seq: u64) -> io::Result<u64>
where
    E: Serialize + 'a,
    A: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = (&'a E, &'a A)>,
{
    let mut seq = first_seq;
    for (event, response) in entries {
        let line = TraceEntry {
            seq,
            event,
            response,
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
        seq += 1;
    }
    Ok(seq)
}
