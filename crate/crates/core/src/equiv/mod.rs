//! Bounded equivalence checking of computations, and the three case-study
//! checks built on it.
//!
//! Both sides are co-executed on concrete responses. `Equivalent` therefore
//! means no counterexample was found within the fuel and sample budget; a
//! `Mismatch` is an exact counterexample.

mod alu;
mod micro;
mod reorder;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use serde_json::json;

use crate::effects::{Computation, Effect, Step, TagMismatch};

pub use alu::{check_alu_refinement, isa_rtype, RuleALU, RTYPE_OPS};
pub use micro::{
    array_load, check_crosslevel, check_crosslevel_with, locals_handler, riscv_array_load, riscv_array_load_mutant,
    Locals, MicroAnswer, MicroEvent, MicroIR, MicroInstr, MicroOp, Operand,
};
pub use reorder::{
    result_equiv, run_block, validate_reorder, Params, Template, BASELINE, FULL_FUSED, PARTIAL_FUSED,
};

/// Where and how two sides disagreed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Evidence {
    /// Sample index, for sampled checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    /// Matched visible events before the disagreement.
    pub step: u64,
    /// What disagreed: `event`, `result`, a register name, `pc`, `memory`, ...
    pub what: String,
    pub left: String,
    pub right: String,
    /// Sample parameters.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub context: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new(step: u64, what: impl Into<String>, left: impl Into<String>, right: impl Into<String>) -> Evidence {
        Evidence {
            sample: None,
            step,
            what: what.into(),
            left: left.into(),
            right: right.into(),
            context: BTreeMap::new(),
        }
    }

    fn in_sample(mut self, sample: usize, context: BTreeMap<String, String>) -> Evidence {
        self.sample = Some(sample);
        self.context.extend(context);
        self
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.sample {
            write!(f, "sample {i}: ")?;
        }
        write!(f, "{} differs after {} events: {} vs {}", self.what, self.step, self.left, self.right)?;
        for (k, v) in &self.context {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Outcome of a bounded check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No counterexample within the budget.
    Equivalent,
    Mismatch(Evidence),
    /// The supplied response oracles broke the response relation.
    OracleViolation(Evidence),
    /// Ran out of fuel.
    Undecided(String),
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }

    pub fn is_mismatch(&self) -> bool {
        matches!(self, Verdict::Mismatch(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Equivalent => "equivalent",
            Verdict::Mismatch(_) => "mismatch",
            Verdict::OracleViolation(_) => "oracle_violation",
            Verdict::Undecided(_) => "undecided",
        }
    }

    pub fn evidence(&self) -> Option<&Evidence> {
        match self {
            Verdict::Mismatch(e) | Verdict::OracleViolation(e) => Some(e),
            _ => None,
        }
    }

    /// `{"verdict", "samples", "counterexample"?}`
    pub fn to_json(&self, samples: usize) -> serde_json::Value {
        let mut v = json!({ "verdict": self.name(), "samples": samples });
        if let Some(e) = self.evidence() {
            v["counterexample"] = serde_json::to_value(e).expect("evidence serializes");
        }
        if let Verdict::Undecided(why) = self {
            v["reason"] = json!(why);
        }
        v
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equivalent => f.write_str("equivalent"),
            Verdict::Mismatch(e) => write!(f, "mismatch: {e}"),
            Verdict::OracleViolation(e) => write!(f, "oracle violation: {e}"),
            Verdict::Undecided(why) => write!(f, "undecided: {why}"),
        }
    }
}

type Rel<'a, A, B> = Box<dyn Fn(&A, &B) -> bool + 'a>;
type AnsRel<'a, E1, E2> =
    Box<dyn Fn(&E1, &<E1 as Effect>::Answer, &E2, &<E2 as Effect>::Answer) -> bool + 'a>;

pub struct EuttConfig<'a, R1, R2> {
    pub result_relation: Rel<'a, R1, R2>,
    /// Consecutive taus skipped per side before giving up.
    pub tau_fuel: u64,
    /// Matched visible events before giving up.
    pub step_fuel: u64,
}

impl<'a, R1, R2> EuttConfig<'a, R1, R2> {
    pub fn new(result_relation: impl Fn(&R1, &R2) -> bool + 'a) -> Self {
        EuttConfig { result_relation: Box::new(result_relation), tau_fuel: 10_000, step_fuel: 100_000 }
    }

    pub fn with_fuel(mut self, tau_fuel: u64, step_fuel: u64) -> Self {
        self.tau_fuel = tau_fuel;
        self.step_fuel = step_fuel;
        self
    }
}

impl<'a, R: PartialEq> EuttConfig<'a, R, R> {
    pub fn equality() -> Self {
        EuttConfig::new(|a: &R, b: &R| a == b)
    }
}

pub struct RuttConfig<'a, E1: Effect, E2: Effect, R1, R2> {
    pub event_relation: Rel<'a, E1, E2>,
    pub response_relation: AnsRel<'a, E1, E2>,
    pub result_relation: Rel<'a, R1, R2>,
    pub tau_fuel: u64,
    pub step_fuel: u64,
}

impl<'a, E1: Effect, E2: Effect, R1, R2> RuttConfig<'a, E1, E2, R1, R2> {
    pub fn new(
        event_relation: impl Fn(&E1, &E2) -> bool + 'a,
        response_relation: impl Fn(&E1, &E1::Answer, &E2, &E2::Answer) -> bool + 'a,
        result_relation: impl Fn(&R1, &R2) -> bool + 'a,
    ) -> Self {
        RuttConfig {
            event_relation: Box::new(event_relation),
            response_relation: Box::new(response_relation),
            result_relation: Box::new(result_relation),
            tau_fuel: 10_000,
            step_fuel: 100_000,
        }
    }
}

enum Head<E: Effect, R> {
    Ret(R),
    Vis(crate::effects::Pending<E, R>),
    Silent,
}

fn settle<E: Effect, R: Send + 'static>(mut t: Computation<E, R>, tau_fuel: u64) -> Head<E, R> {
    for _ in 0..=tau_fuel {
        match t.step() {
            Step::Ret(r) => return Head::Ret(r),
            Step::Vis(p) => return Head::Vis(p),
            Step::Tau(next) => t = next,
        }
    }
    Head::Silent
}

fn shape<E: Effect, R: fmt::Debug + Send + 'static>(h: &Head<E, R>) -> String {
    match h {
        Head::Ret(r) => format!("Ret({r:?})"),
        Head::Vis(p) => format!("Vis({:?})", p.event()),
        Head::Silent => "silent".into(),
    }
}

fn check_fuel(tau_fuel: u64, step_fuel: u64) {
    assert!(tau_fuel > 0 && step_fuel > 0, "fuel must be positive");
}

/// Equivalence up to taus with one response oracle shared by both sides.
pub fn check_eutt<E, R1, R2, F>(
    t1: Computation<E, R1>,
    t2: Computation<E, R2>,
    mut env: F,
    cfg: &EuttConfig<'_, R1, R2>,
) -> Result<Verdict, TagMismatch>
where
    E: Effect + PartialEq,
    R1: fmt::Debug + Send + 'static,
    R2: fmt::Debug + Send + 'static,
    F: FnMut(&E) -> E::Answer,
{
    check_fuel(cfg.tau_fuel, cfg.step_fuel);
    let (mut a, mut b) = (t1, t2);
    for step in 0..cfg.step_fuel {
        match (settle(a, cfg.tau_fuel), settle(b, cfg.tau_fuel)) {
            (Head::Silent, _) | (_, Head::Silent) => {
                return Ok(Verdict::Undecided(format!("more than {} consecutive silent steps", cfg.tau_fuel)))
            }
            (Head::Ret(x), Head::Ret(y)) => {
                return Ok(if (cfg.result_relation)(&x, &y) {
                    Verdict::Equivalent
                } else {
                    Verdict::Mismatch(Evidence::new(step, "result", format!("{x:?}"), format!("{y:?}")))
                })
            }
            (Head::Vis(p), Head::Vis(q)) => {
                if p.event() != q.event() {
                    return Ok(Verdict::Mismatch(Evidence::new(
                        step,
                        "event",
                        format!("{:?}", p.event()),
                        format!("{:?}", q.event()),
                    )));
                }
                let ans = env(p.event());
                a = p.resume(ans.clone())?;
                b = q.resume(ans)?;
            }
            (x, y) => return Ok(Verdict::Mismatch(Evidence::new(step, "shape", shape(&x), shape(&y)))),
        }
    }
    Ok(Verdict::Undecided(format!("more than {} visible events", cfg.step_fuel)))
}

/// Heterogeneous equivalence: events related by `event_relation`, each side
/// answered by its own oracle, and the answer pair checked against
/// `response_relation`.
pub fn check_rutt<E1, E2, R1, R2, F1, F2>(
    t1: Computation<E1, R1>,
    t2: Computation<E2, R2>,
    mut env1: F1,
    mut env2: F2,
    cfg: &RuttConfig<'_, E1, E2, R1, R2>,
) -> Result<Verdict, TagMismatch>
where
    E1: Effect,
    E2: Effect,
    R1: fmt::Debug + Send + 'static,
    R2: fmt::Debug + Send + 'static,
    F1: FnMut(&E1) -> E1::Answer,
    F2: FnMut(&E2) -> E2::Answer,
{
    check_fuel(cfg.tau_fuel, cfg.step_fuel);
    let (mut a, mut b) = (t1, t2);
    for step in 0..cfg.step_fuel {
        match (settle(a, cfg.tau_fuel), settle(b, cfg.tau_fuel)) {
            (Head::Silent, _) | (_, Head::Silent) => {
                return Ok(Verdict::Undecided(format!("more than {} consecutive silent steps", cfg.tau_fuel)))
            }
            (Head::Ret(x), Head::Ret(y)) => {
                return Ok(if (cfg.result_relation)(&x, &y) {
                    Verdict::Equivalent
                } else {
                    Verdict::Mismatch(Evidence::new(step, "result", format!("{x:?}"), format!("{y:?}")))
                })
            }
            (Head::Vis(p), Head::Vis(q)) => {
                let (e1, e2) = (p.event(), q.event());
                if !(cfg.event_relation)(e1, e2) {
                    return Ok(Verdict::Mismatch(Evidence::new(step, "event", format!("{e1:?}"), format!("{e2:?}"))));
                }
                let (x, y) = (env1(e1), env2(e2));
                if !(cfg.response_relation)(e1, &x, e2, &y) {
                    return Ok(Verdict::OracleViolation(Evidence::new(
                        step,
                        "response",
                        format!("{x:?}"),
                        format!("{y:?}"),
                    )));
                }
                a = p.resume(x)?;
                b = q.resume(y)?;
            }
            (x, y) => return Ok(Verdict::Mismatch(Evidence::new(step, "shape", shape(&x), shape(&y)))),
        }
    }
    Ok(Verdict::Undecided(format!("more than {} visible events", cfg.step_fuel)))
}

/// First non-equivalent verdict by sample index, evaluated in parallel.
fn first_failure<F>(samples: usize, f: F) -> Verdict
where
    F: Fn(usize) -> Verdict + Sync + Send,
{
    use rayon::prelude::*;
    (0..samples)
        .into_par_iter()
        .map(f)
        .find_first(|v| !v.is_equivalent())
        .unwrap_or(Verdict::Equivalent)
}

/// Per-sample generator: the same (seed, index) always yields the same draws.
fn sample_rng(seed: u64, index: usize) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}
