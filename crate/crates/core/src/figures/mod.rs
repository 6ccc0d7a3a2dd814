//! Figure-reproduction presets.
//!
//! Each preset runs its simulations with the calibrated default model and
//! seeds derived from one master seed, runs the relevant analysis, and
//! returns plot-ready CSV files plus the qualitative checks the figure must
//! satisfy. Outputs are a pure function of the master seed.

mod dark;
mod laser;
mod pulse;
mod sweep;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::circuit::CircuitError;
use crate::config::{ConfigError, RunConfig};
use crate::procsim::{derive_seed, simulate, DetectorModel, ProcsimError, StimulusConfig, TimeTagStream};

pub use dark::{fig11_kernel, FIG4_BIAS};
pub use laser::{laser_on_model, recovery_separations, FIG10_BIAS, FIG9_BIAS};
pub use sweep::{bias_sweep, sweep_biases, SweepPoint};

#[derive(Debug, Error)]
pub enum FigureError {
    #[error(transparent)]
    Simulation(#[from] ProcsimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown figure `{0}` (expected one of: {list})", list = FigureId::names())]
    UnknownFigure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    FigA2,
}

impl FigureId {
    pub const ALL: [FigureId; 10] = [
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
        FigureId::Fig9,
        FigureId::Fig10,
        FigureId::Fig11,
        FigureId::FigA2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
            FigureId::Fig9 => "fig9",
            FigureId::Fig10 => "fig10",
            FigureId::Fig11 => "fig11",
            FigureId::FigA2 => "figA2",
        }
    }

    fn names() -> String {
        Self::ALL.map(Self::as_str).join(", ")
    }

    /// Stream index of this preset under the master seed; sub-runs add to it.
    fn seed_base(self) -> u64 {
        1_000 * (Self::ALL.iter().position(|&f| f == self).expect("listed") as u64 + 1)
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = FigureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| FigureError::UnknownFigure(s.to_string()))
    }
}

/// One asserted property of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured values behind the verdict.
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub id: FigureId,
    /// `(file name, contents)`, CSV unless the name says otherwise.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl FigureOutput {
    fn new(id: FigureId) -> Self {
        Self {
            id,
            files: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn file(&mut self, suffix: &str, contents: String) {
        self.files.push((format!("{}_{suffix}.csv", self.id), contents));
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Human-readable verdicts, one line per check.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("[{mark}] {} {}: {}\n", self.id, c.name, c.detail));
        }
        out
    }

    /// Writes every file into `dir` (created if needed).
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// Runs one preset.
pub fn reproduce(id: FigureId, master_seed: u64) -> Result<FigureOutput, FigureError> {
    let ctx = Context {
        id,
        master_seed,
        model: default_model()?,
    };
    match id {
        FigureId::Fig3 => dark::fig3(&ctx),
        FigureId::Fig4 => dark::fig4(&ctx),
        FigureId::Fig5 => sweep::fig5(&ctx),
        FigureId::Fig6 => sweep::fig6(&ctx),
        FigureId::Fig7 => sweep::fig7(&ctx),
        FigureId::Fig8 => sweep::fig8(&ctx),
        FigureId::Fig9 => laser::fig9(&ctx),
        FigureId::Fig10 => laser::fig10(&ctx),
        FigureId::Fig11 => dark::fig11(&ctx),
        FigureId::FigA2 => pulse::fig_a2(&ctx),
    }
}

/// The calibrated default detector.
pub fn default_model() -> Result<DetectorModel, ConfigError> {
    RunConfig::default_profile().model()
}

pub(crate) struct Context {
    id: FigureId,
    master_seed: u64,
    model: DetectorModel,
}

impl Context {
    fn seed(&self, index: u64) -> u64 {
        derive_seed(self.master_seed, self.id.seed_base() + index)
    }

    fn seed_for(&self, id: FigureId, index: u64) -> u64 {
        derive_seed(self.master_seed, id.seed_base() + index)
    }
}

/// Dark-count run sized to give about `events` clicks.
pub fn dark_run(model: &DetectorModel, events: f64, seed: u64) -> Result<TimeTagStream, ProcsimError> {
    let duration = events / model.stationary_rate();
    simulate(model, &StimulusConfig::None, duration, seed)
}
