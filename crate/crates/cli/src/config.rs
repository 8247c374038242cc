//! JSON config schemas for `solve` and `bubble`. Every config carries a
//! `version` field (currently 1) and unknown keys are rejected, so typos
//! fail loudly with exit code 2.

use crate::{CmdError, CmdResult};
use dhlab_core::solver::InitKind;
use dhlab_core::{Grid, SolverParams, Topology};
use serde::Deserialize;
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub topology: Topology,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridConfig {
    pub fn build(&self) -> CmdResult<Grid> {
        Grid::new(self.topology, self.lx, self.ly, self.nx, self.ny)
            .map_err(|e| CmdError::config(e.to_string()))
    }
}

/// Optional overrides on the grid-derived solver defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOverrides {
    pub step: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub psi_norm_target: Option<f64>,
    pub seed: Option<u64>,
    pub eps0: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, grid: &Grid, seed_override: Option<u64>) -> SolverParams {
        let mut p = SolverParams::for_grid(grid);
        if let Some(v) = self.step {
            p.step = v;
        }
        if let Some(v) = self.max_iters {
            p.max_iters = v;
        }
        if let Some(v) = self.tol {
            p.tol = v;
        }
        if let Some(v) = self.psi_norm_target {
            p.psi_norm_target = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = seed_override {
            p.seed = v;
        }
        if let Some(v) = self.eps0 {
            p.eps0 = v;
        }
        p
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleStart {
    pub center: [f64; 2],
    pub lambda: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartConfig {
    /// Exact bubble sampled on the grid, zero spinor.
    Bubble { center: [f64; 2], lambda: f64 },
    /// Resume from a saved snapshot (map, or map + spinor pair).
    Snapshot { path: String },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    /// Harmonic map heat flow (spinor identically zero).
    Harmonic { start: StartConfig },
    /// Coupled map/spinor relaxation.
    Coupled { start: StartConfig },
    /// Seeded small-energy vanishing trials.
    VanishingProbe {
        energy_budget: f64,
        trials: usize,
        init: InitKind,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub version: u32,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverOverrides,
    pub task: TaskConfig,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// Concentrating-family energy accounting table.
    EnergyIdentity {
        center: [f64; 2],
        lambdas: Vec<f64>,
        delta: f64,
        r_big: f64,
        #[serde(default = "default_true")]
        with_spinor: bool,
    },
    /// Cluster centers of the above-threshold local energy set.
    BlowupSet {
        bubbles: Vec<BubbleStart>,
        eps0: f64,
        radius: f64,
    },
    /// Sup/integral ratios behind the small-energy estimates.
    RegularityProbe {
        bubble: BubbleStart,
        margin: usize,
        eps0: f64,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleConfig {
    pub version: u32,
    pub grid: GridConfig,
    pub experiment: ExperimentConfig,
}

/// Read and validate a JSON config; schema violations exit with code 2
/// and the serde message naming the offending key.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CmdError::config(format!("cannot read config {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CmdError::config(format!("{}: {e}", path.display())))
}

pub fn check_version(version: u32, path: &Path) -> CmdResult<()> {
    if version != CONFIG_VERSION {
        return Err(CmdError::config(format!(
            "{}: unsupported config version {version} (expected {CONFIG_VERSION})",
            path.display()
        )));
    }
    Ok(())
}
