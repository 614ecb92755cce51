//! `rvfx`: run RISC-V ELF images, the riscv-tests suite, and the
//! equivalence checkers.
//!
//! Exit codes: 0 pass, 1 failure, 2 usage or load error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rvfx_core::equiv::{self, Template, Verdict};
use rvfx_core::harness::{load_elf, run_suite, run_traced, LoadedImage, SuiteConfig};
use rvfx_core::isa::{decode, disassemble, Instr};
use rvfx_core::machine::RunOutcome;

#[derive(Parser)]
#[command(name = "rvfx", version, about = "Event-trace RISC-V simulator and equivalence checkers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a bare-metal ELF until it exits through tohost.
    Run {
        elf: PathBuf,
        #[arg(long, env = "RVFX_FUEL", default_value_t = 5_000_000)]
        fuel: u64,
        /// Write the event trace as JSON lines.
        #[arg(long, env = "RVFX_TRACE")]
        trace: Option<PathBuf>,
        /// Expected register width; must match the image.
        #[arg(long, env = "RVFX_XLEN", value_parser = ["32", "64"])]
        xlen: Option<String>,
        #[arg(long, env = "RVFX_TRAP_MISALIGNED")]
        trap_misaligned: bool,
    },
    /// Run every riscv-tests binary in a directory.
    TestSuite {
        dir: PathBuf,
        /// Glob over file names, e.g. `rv64u?-p-*`.
        #[arg(long, env = "RVFX_FILTER")]
        filter: Option<String>,
        #[arg(long, env = "RVFX_FUEL", default_value_t = 5_000_000)]
        fuel: u64,
        #[arg(long, env = "RVFX_TRAP_MISALIGNED")]
        trap_misaligned: bool,
        #[arg(long)]
        json: bool,
    },
    /// Check that two instruction sequences behave the same. Immediates may
    /// name the parameters imm_hi, imm_lo, pc_off, call_off.
    ValidateReorder {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, env = "RVFX_SAMPLES", default_value_t = 1000)]
        samples: usize,
        #[arg(long, env = "RVFX_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Compare the rule-table ALU with the R-type semantics.
    CheckAlu {
        /// Samples per operation.
        #[arg(long, env = "RVFX_SAMPLES", default_value_t = 10_000)]
        samples: usize,
        #[arg(long, env = "RVFX_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Compare the micro-IR array load with its compiled RISC-V code.
    CheckCrosslevel {
        #[arg(long, env = "RVFX_SAMPLES", default_value_t = 1000)]
        samples: usize,
        #[arg(long, env = "RVFX_SEED", default_value_t = 0)]
        seed: u64,
        /// Check the halfword-load mutant instead.
        #[arg(long)]
        mutant: bool,
        #[arg(long)]
        json: bool,
    },
    /// Disassemble the executable segments of an ELF.
    Disasm { elf: PathBuf },
}

enum Failure {
    Usage(String),
    Failed,
    /// stdout went away, e.g. piped into `head`.
    Closed,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Closed;
        }
        Failure::Usage(e.to_string())
    }
}

fn load(path: &Path) -> Result<LoadedImage, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    load_elf(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn template(path: &Path) -> Result<Template, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Template::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn report(v: &Verdict, samples: usize, json: bool) -> Result<(), Failure> {
    if json {
        println!("{}", v.to_json(samples));
    } else {
        println!("{v} ({samples} samples)");
    }
    if v.is_equivalent() {
        Ok(())
    } else {
        Err(Failure::Failed)
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run { elf, fuel, trace, xlen, trap_misaligned } => {
            let img = load(&elf)?;
            if let Some(x) = xlen {
                if x != img.xlen.bits().to_string() {
                    return Err(Failure::Usage(format!("--xlen {x} but the image is RV{}", img.xlen.bits())));
                }
            }
            let mut s = img.machine();
            s.trap_misaligned = trap_misaligned;
            let outcome = match trace {
                Some(path) => {
                    let mut out = BufWriter::new(File::create(&path)?);
                    let o = run_traced(&mut s, fuel, &mut out)?;
                    out.flush()?;
                    o
                }
                None => s.run(fuel),
            };
            let cases = s.gp_values.iter().filter(|v| **v >= 2).count();
            match outcome {
                RunOutcome::HtifExit(0) => println!("pass ({} instructions, {cases} cases)", s.instret),
                RunOutcome::HtifExit(c) => println!("fail: case {c} ({} instructions)", s.instret),
                RunOutcome::OutOfFuel => println!("out of fuel after {} instructions at pc {:#x}", s.instret, s.pc),
                RunOutcome::Wfi => println!("stopped at wfi, pc {:#x}", s.pc),
            }
            if outcome == RunOutcome::HtifExit(0) {
                Ok(())
            } else {
                Err(Failure::Failed)
            }
        }
        Cmd::TestSuite { dir, filter, fuel, trap_misaligned, json } => {
            let cfg = SuiteConfig { fuel, trap_misaligned };
            let r = run_suite(&dir, filter.as_deref(), &cfg)
                .map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
            if r.files.is_empty() {
                return Err(Failure::Usage(format!("no test binaries in {}", dir.display())));
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            } else {
                println!("{r}");
            }
            if r.all_passed() {
                Ok(())
            } else {
                Err(Failure::Failed)
            }
        }
        Cmd::ValidateReorder { a, b, samples, seed, json } => {
            let (ta, tb) = (template(&a)?, template(&b)?);
            report(&equiv::validate_reorder(&ta, &tb, samples, seed), samples, json)
        }
        Cmd::CheckAlu { samples, seed, json } => {
            report(&equiv::check_alu_refinement(samples, seed), samples * equiv::RTYPE_OPS.len(), json)
        }
        Cmd::CheckCrosslevel { samples, seed, mutant, json } => {
            let code = if mutant { equiv::riscv_array_load_mutant() } else { equiv::riscv_array_load() };
            report(&equiv::check_crosslevel_with(&code, samples, seed), samples, json)
        }
        Cmd::Disasm { elf } => {
            let img = load(&elf)?;
            let out = io::stdout();
            let mut out = out.lock();
            for seg in img.segments.iter().filter(|s| s.executable) {
                for (k, w) in seg.bytes.chunks_exact(4).enumerate() {
                    let addr = seg.paddr + 4 * k as u64;
                    if let Some(sym) = img.symbol_at(addr) {
                        writeln!(out, "\n{addr:016x} <{sym}>:")?;
                    }
                    let word = u32::from_le_bytes(w.try_into().expect("4-byte chunk"));
                    let text = match decode(word, img.xlen) {
                        Instr::Illegal => "unknown".to_string(),
                        i => disassemble(&i),
                    };
                    writeln!(out, "{addr:8x}:  {word:08x}  {text}")?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Failed) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("rvfx: {msg}");
            ExitCode::from(2)
        }
    }
}

