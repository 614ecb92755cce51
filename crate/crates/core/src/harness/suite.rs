//! riscv-tests style suite runner.
//!
//! Each test keeps its case number in gp and reports through `tohost`:
//! 1 for a pass, `(case << 1) | 1` for a failure in `case`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::elf::load_elf;
use crate::machine::RunOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Extension {
    I,
    M,
    F,
    A,
    Zicsr,
    Other,
}

impl fmt::Display for Extension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Splits `rv64ui-p-add` into (64, I). Unrecognized names give `None`.
pub fn classify(name: &str) -> Option<(u32, Extension)> {
    let rest = name.strip_prefix("rv")?;
    let (bits, rest) = rest.split_at(rest.find(|c: char| !c.is_ascii_digit())?);
    let bits: u32 = bits.parse().ok()?;
    let suite = rest.split('-').next()?;
    let ext = match suite {
        "ui" => Extension::I,
        "um" => Extension::M,
        "uf" => Extension::F,
        "ua" => Extension::A,
        "mi" | "si" | "uzicsr" => Extension::Zicsr,
        _ => Extension::Other,
    };
    Some((bits, ext))
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    /// Instruction budget per file.
    pub fuel: u64,
    pub trap_misaligned: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { fuel: 5_000_000, trap_misaligned: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail")]
pub enum FileStatus {
    Pass,
    /// Failing case number reported through tohost.
    Fail(u64),
    OutOfFuel,
    Wfi,
    LoadError(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileReport {
    pub name: String,
    pub xlen: u32,
    pub extension: Extension,
    pub status: FileStatus,
    /// Distinct case numbers the test reached.
    pub cases: u64,
    pub instret: u64,
}

impl FileReport {
    pub fn passed(&self) -> bool {
        self.status == FileStatus::Pass
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub files: u64,
    pub passed_files: u64,
    pub cases: u64,
    pub passed_cases: u64,
}

impl Totals {
    fn add(&mut self, r: &FileReport) {
        self.files += 1;
        self.cases += r.cases;
        if r.passed() {
            self.passed_files += 1;
            self.passed_cases += r.cases;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub files: Vec<FileReport>,
    /// Keyed by "RV64 I" style labels.
    pub by_extension: BTreeMap<String, Totals>,
    pub total: Totals,
}

impl SuiteReport {
    pub fn from_files(files: Vec<FileReport>) -> SuiteReport {
        let mut by_extension: BTreeMap<String, Totals> = BTreeMap::new();
        let mut total = Totals::default();
        for f in &files {
            by_extension.entry(format!("RV{} {}", f.xlen, f.extension)).or_default().add(f);
            total.add(f);
        }
        SuiteReport { files, by_extension, total }
    }

    pub fn all_passed(&self) -> bool {
        self.files.iter().all(FileReport::passed)
    }

    pub fn totals(&self, xlen: u32, ext: Extension) -> Totals {
        self.by_extension.get(&format!("RV{xlen} {ext}")).cloned().unwrap_or_default()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.files {
            let status = match &r.status {
                FileStatus::Pass => "PASS".to_string(),
                FileStatus::Fail(case) => format!("FAIL case {case}"),
                FileStatus::OutOfFuel => "FAIL out of fuel".to_string(),
                FileStatus::Wfi => "FAIL stopped at wfi".to_string(),
                FileStatus::LoadError(e) => format!("ERROR {e}"),
            };
            writeln!(f, "{:<32} {:>4} cases  {status}", r.name, r.cases)?;
        }
        writeln!(f)?;
        for (k, t) in &self.by_extension {
            writeln!(f, "{k:<12} {:>4} / {:<4} files  {:>5} / {:<5} cases", t.passed_files, t.files, t.passed_cases, t.cases)?;
        }
        write!(
            f,
            "{:<12} {:>4} / {:<4} files  {:>5} / {:<5} cases",
            "total", self.total.passed_files, self.total.files, self.total.passed_cases, self.total.cases
        )
    }
}

pub fn run_file(path: &Path, cfg: &SuiteConfig) -> FileReport {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (bits, extension) = classify(&name).unwrap_or((0, Extension::Other));
    let mut report = FileReport { name, xlen: bits, extension, status: FileStatus::Pass, cases: 0, instret: 0 };
    let image = match std::fs::read(path).map_err(|e| e.to_string()).and_then(|b| load_elf(&b).map_err(|e| e.to_string())) {
        Ok(i) => i,
        Err(e) => {
            report.status = FileStatus::LoadError(e);
            return report;
        }
    };
    report.xlen = image.xlen.bits();
    let mut s = image.machine();
    s.trap_misaligned = cfg.trap_misaligned;
    let outcome = s.run(cfg.fuel);
    report.cases = s.gp_values.iter().filter(|v| **v >= 2).count() as u64;
    report.instret = s.instret;
    report.status = match outcome {
        RunOutcome::HtifExit(0) => FileStatus::Pass,
        RunOutcome::HtifExit(case) => FileStatus::Fail(case),
        RunOutcome::OutOfFuel => FileStatus::OutOfFuel,
        RunOutcome::Wfi => FileStatus::Wfi,
    };
    report
}

/// Test binaries in `dir`: regular files without an extension (riscv-tests
/// ships `.dump` listings next to the ELFs), filtered by `filter`.
pub fn suite_files(dir: &Path, filter: Option<&str>) -> std::io::Result<Vec<PathBuf>> {
    let pattern = filter
        .map(glob::Pattern::new)
        .transpose()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_none())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            classify(&name).is_some() && pattern.as_ref().map_or(true, |p| p.matches(&name))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every matching file in parallel; the report lists files in name
/// order.
pub fn run_suite(dir: &Path, filter: Option<&str>, cfg: &SuiteConfig) -> std::io::Result<SuiteReport> {
    let files = suite_files(dir, filter)?;
    let reports: Vec<FileReport> = files.par_iter().map(|p| run_file(p, cfg)).collect();
    Ok(SuiteReport::from_files(reports))
}

/// Table 1 of the reference evaluation: (xlen, extension, files, cases).
pub const REFERENCE_COVERAGE: &[(u32, Extension, u64, u64)] = &[
    (32, Extension::I, 41, 926),
    (32, Extension::M, 8, 174),
    (32, Extension::F, 11, 209),
    (32, Extension::A, 9, 40),
    (32, Extension::Zicsr, 10, 47),
    (64, Extension::I, 52, 1354),
    (64, Extension::M, 13, 221),
    (64, Extension::F, 10, 177),
    (64, Extension::A, 18, 80),
];
