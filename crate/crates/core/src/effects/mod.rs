//! Resumable effectful computations.
//!
//! A [`Computation`] is a suspended program that, when stepped, either
//! returns a value, takes a silent internal step, or stops on a visible event
//! and waits for the environment's answer. Handlers replace events with their
//! implementation; [`interp`] and [`interp_state`] apply them lazily, so the
//! result is again a computation that can be stepped, compared, or
//! interpreted further.
//!
//! Continuations are one-shot: a computation is consumed by stepping it.

pub mod events;
pub mod trace;

use std::any::Any;
use std::collections::VecDeque;
use std::fmt;
use std::marker::PhantomData;

pub use events::*;
pub use trace::{record_trace, write_jsonl, Outcome, TraceEntry};

/// An event vocabulary with dynamically tagged answers.
pub trait Effect: Clone + fmt::Debug + Send + 'static {
    type Answer: Clone + fmt::Debug + Send + 'static;

    /// True when `answer` has the shape this event expects.
    fn accepts(&self, answer: &Self::Answer) -> bool;
}

/// Raised when a suspended event is resumed with an answer of the wrong tag.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("answer {answer} does not fit event {event}")]
pub struct TagMismatch {
    pub event: String,
    pub answer: String,
}

type AnyBox = Box<dyn Any + Send>;
type Kont<E> = Box<dyn FnOnce(AnyBox) -> Core<E> + Send>;
type Resume<E> = Box<dyn FnOnce(<E as Effect>::Answer) -> Core<E> + Send>;

/// Type-erased computation: a head node plus the queue of continuations
/// bound after it. Binding appends to the queue, so left-nested chains cost
/// O(1) per bind and per step.
struct Core<E: Effect> {
    head: Head<E>,
    queue: VecDeque<Kont<E>>,
    // the head has emitted a Tau or Vis since the front continuation was bound
    dirty: bool,
}

enum Head<E: Effect> {
    Ret(AnyBox),
    Tau(Box<Core<E>>),
    Vis(E, Resume<E>),
    Lazy(Box<dyn FnOnce() -> Core<E> + Send>),
}

enum RawStep<E: Effect> {
    Ret(AnyBox),
    Tau(Core<E>),
    Vis(E, Resume<E>),
}

impl<E: Effect> Core<E> {
    fn new(head: Head<E>) -> Self {
        Core {
            head,
            queue: VecDeque::new(),
            dirty: false,
        }
    }

    /// `self` followed by the continuations in `tail`.
    fn with_tail(mut self, mut tail: VecDeque<Kont<E>>) -> Self {
        if tail.is_empty() {
            return self;
        }
        if self.queue.len() <= tail.len() {
            while let Some(k) = self.queue.pop_back() {
                tail.push_front(k);
            }
            self.queue = tail;
        } else {
            self.queue.append(&mut tail);
        }
        self
    }

    fn step(self) -> RawStep<E> {
        let mut c = self;
        loop {
            let Core { head, mut queue, dirty } = c;
            match head {
                Head::Lazy(f) => {
                    let mut inner = f().with_tail(queue);
                    inner.dirty |= dirty;
                    c = inner;
                }
                Head::Ret(v) => match queue.pop_front() {
                    None => return RawStep::Ret(v),
                    Some(k) if dirty => {
                        return RawStep::Tau(Core {
                            head: Head::Lazy(Box::new(move || k(v))),
                            queue,
                            dirty: false,
                        })
                    }
                    Some(k) => c = k(v).with_tail(queue),
                },
                Head::Tau(inner) => {
                    let mut next = inner.with_tail(queue);
                    next.dirty = true;
                    return RawStep::Tau(next);
                }
                Head::Vis(e, k) => {
                    if queue.is_empty() {
                        return RawStep::Vis(e, k);
                    }
                    return RawStep::Vis(
                        e,
                        Box::new(move |a| {
                            let mut next = k(a).with_tail(queue);
                            next.dirty = true;
                            next
                        }),
                    );
                }
            }
        }
    }
}

/// A visible event together with the continuation awaiting its answer.
pub struct Pending<E: Effect, R> {
    event: E,
    k: Resume<E>,
    _r: PhantomData<fn() -> R>,
}

impl<E: Effect, R: Send + 'static> Pending<E, R> {
    pub fn event(&self) -> &E {
        &self.event
    }

    /// Feeds the answer to the continuation. The tag is checked first.
    pub fn resume(self, answer: E::Answer) -> Result<Computation<E, R>, TagMismatch> {
        if !self.event.accepts(&answer) {
            return Err(TagMismatch {
                event: format!("{:?}", self.event),
                answer: format!("{answer:?}"),
            });
        }
        Ok(Computation::from_core((self.k)(answer)))
    }

    fn map_cont<S, F>(self, f: F) -> Pending<E, S>
    where
        S: Send + 'static,
        F: FnOnce(Computation<E, R>) -> Computation<E, S> + Send + 'static,
    {
        let k = self.k;
        Pending {
            event: self.event,
            k: Box::new(move |a| f(Computation::from_core(k(a))).core),
            _r: PhantomData,
        }
    }
}

impl<E: Effect, R> fmt::Debug for Pending<E, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Vis").field(&self.event).finish()
    }
}

/// One observable unfolding of a computation.
pub enum Step<E: Effect, R> {
    Ret(R),
    Tau(Computation<E, R>),
    Vis(Pending<E, R>),
}

impl<E: Effect, R: fmt::Debug> fmt::Debug for Step<E, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Ret(r) => f.debug_tuple("Ret").field(r).finish(),
            Step::Tau(_) => f.write_str("Tau(..)"),
            Step::Vis(p) => p.fmt(f),
        }
    }
}

pub struct Computation<E: Effect, R> {
    core: Core<E>,
    _r: PhantomData<fn() -> R>,
}

impl<E: Effect, R> fmt::Debug for Computation<E, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.core.head {
            Head::Ret(_) => f.write_str("Ret(..)"),
            Head::Tau(_) => f.write_str("Tau(..)"),
            Head::Vis(e, _) => f.debug_tuple("Vis").field(e).finish(),
            Head::Lazy(_) => f.write_str("<suspended>"),
        }
    }
}

fn unbox<R: 'static>(v: AnyBox) -> R {
    *v.downcast::<R>()
        .unwrap_or_else(|_| unreachable!("continuation queue out of step with its types"))
}

impl<E: Effect, R: Send + 'static> Computation<E, R> {
    fn from_core(core: Core<E>) -> Self {
        Computation {
            core,
            _r: PhantomData,
        }
    }

    pub fn ret(r: R) -> Self {
        Self::from_core(Core::new(Head::Ret(Box::new(r))))
    }

    pub fn tau(next: Computation<E, R>) -> Self {
        Self::from_core(Core::new(Head::Tau(Box::new(next.core))))
    }

    /// Defers construction until the computation is first stepped.
    pub fn lazy<F>(f: F) -> Self
    where
        F: FnOnce() -> Computation<E, R> + Send + 'static,
    {
        Self::from_core(Core::new(Head::Lazy(Box::new(move || f().core))))
    }

    pub fn vis<K>(event: E, k: K) -> Self
    where
        K: FnOnce(E::Answer) -> Computation<E, R> + Send + 'static,
    {
        Self::from_core(Core::new(Head::Vis(event, Box::new(move |a| k(a).core))))
    }

    fn from_pending(p: Pending<E, R>) -> Self {
        Self::from_core(Core::new(Head::Vis(p.event, p.k)))
    }

    /// Unfolds until the next Ret, Tau, or Vis.
    pub fn step(self) -> Step<E, R> {
        match self.core.step() {
            RawStep::Ret(v) => Step::Ret(unbox(v)),
            RawStep::Tau(c) => Step::Tau(Self::from_core(c)),
            RawStep::Vis(event, k) => Step::Vis(Pending {
                event,
                k,
                _r: PhantomData,
            }),
        }
    }

    /// Sequencing. A Tau is inserted where a non-trivial left operand hands
    /// its result to `k`.
    pub fn bind<S, K>(self, k: K) -> Computation<E, S>
    where
        S: Send + 'static,
        K: FnOnce(R) -> Computation<E, S> + Send + 'static,
    {
        let mut core = self.core;
        core.queue
            .push_back(Box::new(move |v| k(unbox::<R>(v)).core));
        Computation::from_core(core)
    }

    pub fn map<S, F>(self, f: F) -> Computation<E, S>
    where
        S: Send + 'static,
        F: FnOnce(R) -> S + Send + 'static,
    {
        self.bind(move |r| Computation::ret(f(r)))
    }

    /// `self ;; next`, discarding the first result.
    pub fn then<S: Send + 'static>(self, next: Computation<E, S>) -> Computation<E, S> {
        self.bind(move |_| next)
    }

    /// Drives the computation with `answer` until it returns or `fuel` steps
    /// (taus and events both count) are spent.
    pub fn run_with<F>(self, mut answer: F, fuel: u64) -> Result<Outcome<R>, TagMismatch>
    where
        F: FnMut(&E) -> E::Answer,
    {
        let mut t = self;
        for _ in 0..fuel {
            match t.step() {
                Step::Ret(r) => return Ok(Outcome::Returned(r)),
                Step::Tau(next) => t = next,
                Step::Vis(p) => {
                    let a = answer(p.event());
                    t = p.resume(a)?;
                }
            }
        }
        Ok(Outcome::OutOfFuel)
    }
}

/// Emits `event` once and returns its answer.
pub fn trigger<E: Effect>(event: E) -> Computation<E, E::Answer> {
    Computation::vis(event, Computation::ret)
}

/// A computation that never returns: an unbounded chain of taus.
pub fn spin<E: Effect, R: Send + 'static>() -> Computation<E, R> {
    Computation::lazy(|| Computation::tau(spin()))
}

/// Applies a (possibly partial) handler. Each handled event is replaced by
/// the handler's computation followed by a Tau; events the handler declines
/// stay visible in the result. Handler output is not re-interpreted.
pub fn interp<E, R, H>(h: H, t: Computation<E, R>) -> Computation<E, R>
where
    E: Effect,
    R: Send + 'static,
    H: FnMut(&E) -> Option<Computation<E, E::Answer>> + Send + 'static,
{
    fn go<E, R, H>(mut h: H, t: Computation<E, R>) -> Computation<E, R>
    where
        E: Effect,
        R: Send + 'static,
        H: FnMut(&E) -> Option<Computation<E, E::Answer>> + Send + 'static,
    {
        Computation::lazy(move || match t.step() {
            Step::Ret(r) => Computation::ret(r),
            Step::Tau(next) => Computation::tau(go(h, next)),
            Step::Vis(p) => match h(p.event()) {
                Some(sub) => Computation::tau(sub.bind(move |answer| {
                    let next = p
                        .resume(answer)
                        .unwrap_or_else(|e| panic!("handler produced a mistagged answer: {e}"));
                    go(h, next)
                })),
                None => Computation::from_pending(p.map_cont(move |c| go(h, c))),
            },
        })
    }
    go(h, t)
}

/// Applies a stateful handler, threading `s` through every handled event.
/// The result pairs the final state with the computation's value. Declined
/// events stay visible and carry the state across their continuation.
pub fn interp_state<E, S, R, H>(h: H, t: Computation<E, R>, s: S) -> Computation<E, (S, R)>
where
    E: Effect,
    S: Send + 'static,
    R: Send + 'static,
    H: FnMut(&E, &mut S) -> Option<E::Answer> + Send + 'static,
{
    Computation::lazy(move || {
        let (mut h, mut s) = (h, s);
        match t.step() {
            Step::Ret(r) => Computation::ret((s, r)),
            Step::Tau(next) => Computation::tau(interp_state(h, next, s)),
            Step::Vis(p) => match h(p.event(), &mut s) {
                Some(answer) => {
                    let next = p
                        .resume(answer)
                        .unwrap_or_else(|e| panic!("handler produced a mistagged answer: {e}"));
                    Computation::tau(interp_state(h, next, s))
                }
                None => Computation::from_pending(p.map_cont(move |c| interp_state(h, c, s))),
            },
        }
    })
}
