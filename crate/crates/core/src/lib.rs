//! Event-trace RISC-V semantics.
//!
//! Instruction semantics are written as [`effects::Computation`]s that emit
//! processor and memory events; handlers in [`machine`] and [`vmem`] give
//! those events meaning against a concrete state. The [`equiv`] module
//! compares computations up to silent steps, homogeneously or through
//! user-supplied event relations.

pub mod bitvec;
pub mod effects;
pub mod equiv;
pub mod harness;
pub mod isa;
pub mod machine;
pub mod softfloat;
pub mod vmem;

pub use bitvec::BitVec;
