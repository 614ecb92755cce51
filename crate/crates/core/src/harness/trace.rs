//! Whole-run event traces: JSONL export and replay.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::effects::{write_jsonl, Event, ProcessorEvent, Response, TraceEntry, VMemEvent};
use crate::machine::{MachineState, RunOutcome};

pub type Entry = TraceEntry<Event, Response>;

/// Runs `s` and streams every event with its answer to `out` as JSONL.
pub fn run_traced<W: Write>(s: &mut MachineState, fuel: u64, out: &mut W) -> io::Result<RunOutcome> {
    let mut seq = 0;
    let mut err = None;
    let outcome = s.run_with(fuel, |e, r| {
        if err.is_none() {
            match write_jsonl(out, [(e, r)], seq) {
                Ok(n) => seq = n,
                Err(e) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}

pub fn read_trace<R: BufRead>(input: R) -> io::Result<Vec<Entry>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| serde_json::from_str(&l?).map_err(io::Error::from))
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("entry {seq}: program emitted {got:?}, trace has {want:?}")]
    Diverged { seq: u64, got: Box<Event>, want: Box<Event> },
    #[error("trace ended after {0} entries while the program kept running")]
    Exhausted(u64),
    #[error("entry {seq}: replayed write answered {got:?}, trace has {want:?}")]
    WriteDiverged { seq: u64, got: Box<Response>, want: Box<Response> },
}

fn is_update(e: &Event) -> bool {
    matches!(
        e,
        Event::Proc(
            ProcessorEvent::RegWrite { .. }
                | ProcessorEvent::FpRegWrite { .. }
                | ProcessorEvent::PcWrite { .. }
                | ProcessorEvent::CsrWrite { .. }
        ) | Event::VMem(VMemEvent::VMemWrite { .. })
    )
}

/// Reads that take a reservation (`lr`) also change state.
fn reserves(e: &Event) -> bool {
    matches!(e, Event::VMem(VMemEvent::VMemRead { res: true, .. }))
}

/// Re-executes from `initial` with every read answered from `trace`. Only
/// update events and reserving reads touch the replay state, so the final
/// state is rebuilt from the recorded observations alone.
pub fn replay(initial: &MachineState, trace: &[Entry], fuel: u64) -> Result<(MachineState, RunOutcome), ReplayError> {
    let mut s = initial.clone();
    let mut next = 0usize;
    let mut failure = None;
    let outcome = s.run_answering(fuel, |s, e| {
        if failure.is_some() {
            return s.handle(e);
        }
        let Some(entry) = trace.get(next) else {
            failure = Some(ReplayError::Exhausted(next as u64));
            return s.handle(e);
        };
        next += 1;
        if entry.event != *e {
            failure = Some(ReplayError::Diverged {
                seq: entry.seq,
                got: Box::new(e.clone()),
                want: Box::new(entry.event.clone()),
            });
            return entry.response.clone();
        }
        if reserves(e) {
            s.handle(e);
        } else if is_update(e) {
            let got = s.handle(e);
            if got != entry.response {
                failure = Some(ReplayError::WriteDiverged {
                    seq: entry.seq,
                    got: Box::new(got),
                    want: Box::new(entry.response.clone()),
                });
            }
        }
        entry.response.clone()
    });
    match failure {
        Some(f) => Err(f),
        None => Ok((s, outcome)),
    }
}
