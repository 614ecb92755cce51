//! ELF loading, the riscv-tests runner, and run traces.

pub mod elf;
pub mod suite;
pub mod trace;

pub use elf::{load_elf, LoadError, LoadedImage, Segment};
pub use suite::{run_file, run_suite, Extension, FileReport, FileStatus, SuiteConfig, SuiteReport, Totals};
pub use trace::{read_trace, replay, run_traced, ReplayError};
