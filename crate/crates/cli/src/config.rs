//! Experiment configuration: a single JSON document per experiment, with the
//! `kind` tag selecting the driver and kind-specific parameters validated
//! before any computation starts.

use fraclab::capacity::{GridSpec, SolverCfg};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallCfg {
    pub t_center: f64,
    #[serde(default)]
    pub x_center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
    #[serde(default = "default_target_rel_gap")]
    pub target_rel_gap: f64,
    #[serde(default = "default_dual_iters")]
    pub dual_iters: usize,
}

fn default_max_iters() -> usize {
    4000
}
fn default_check_every() -> usize {
    50
}
fn default_target_rel_gap() -> f64 {
    1e-6
}
fn default_dual_iters() -> usize {
    400
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            check_every: default_check_every(),
            target_rel_gap: default_target_rel_gap(),
            dual_iters: default_dual_iters(),
        }
    }
}

impl SolverParams {
    pub fn to_cfg(&self) -> SolverCfg {
        SolverCfg {
            max_iters: self.max_iters,
            check_every: self.check_every,
            target_rel_gap: self.target_rel_gap,
            power_iters: 50,
            dual_iters: self.dual_iters,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExperimentKind {
    /// Two-sided kernel envelope constants, checked under grid doubling.
    #[serde(rename = "kernel-envelope")]
    KernelEnvelope {
        n: usize,
        alpha: f64,
        t: f64,
        region_radius: f64,
        grid: GridSpec,
    },
    /// Semigroup operator-ratio experiment, checked under grid doubling.
    #[serde(rename = "strichartz-R", alias = "strichartz-r")]
    StrichartzR {
        n: usize,
        alpha: f64,
        p: f64,
        p_out: f64,
        trials: usize,
        grid: GridSpec,
    },
    /// Potential operator-ratio experiment, checked under grid doubling.
    #[serde(rename = "strichartz-S", alias = "strichartz-s")]
    StrichartzS {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        p_out: f64,
        q_out: f64,
        trials: usize,
        grid: GridSpec,
    },
    /// Time modulus of continuity of the semigroup orbit of a spike.
    #[serde(rename = "continuity")]
    Continuity {
        n: usize,
        alpha: f64,
        t_base: f64,
        offsets: Vec<f64>,
        grid: GridSpec,
    },
    /// Exponential-integrability constant, stable under refinement.
    #[serde(rename = "exp-integrability")]
    ExpIntegrability {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        /// Ball center fixing the exponential-moment window (radius is
        /// forced to `t_center^{1/(2 alpha)}`).
        t_center: f64,
        forcing_ball: BallCfg,
        #[serde(default = "default_threshold")]
        threshold: f64,
        grid: GridSpec,
    },
    /// Hoelder modulus fits in space and time at a base point.
    #[serde(rename = "holder")]
    Holder {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        base_t: f64,
        #[serde(default)]
        base_x: [f64; 2],
        forcing_ball: BallCfg,
        grid: GridSpec,
    },
    /// One certified capacity bracket for a parabolic ball.
    #[serde(rename = "capacity-bracket")]
    CapacityBracket {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        ball: BallCfg,
        grid: GridSpec,
        #[serde(default)]
        solver: SolverParams,
        #[serde(default = "default_gap_tol")]
        rel_gap_tol: f64,
    },
    /// Supercritical power law over a radius ladder on rescaled grids.
    #[serde(rename = "capacity-scaling")]
    CapacityScaling {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        radii: Vec<f64>,
        grid: GridSpec,
        #[serde(default = "default_t0_factor")]
        t0_factor: f64,
        #[serde(default)]
        solver: SolverParams,
    },
    /// Critical log law on a fixed grid.
    #[serde(rename = "capacity-critical")]
    CapacityCritical {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        radii: Vec<f64>,
        grid: GridSpec,
        t_center: f64,
        #[serde(default)]
        solver: SolverParams,
    },
    /// Capacity axioms on small deterministic sets.
    #[serde(rename = "capacity-axioms")]
    CapacityAxioms {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        grid: GridSpec,
        #[serde(default)]
        solver: SolverParams,
    },
    /// Certified covering upper bound for the content of a ball.
    #[serde(rename = "hausdorff-content")]
    HausdorffContent {
        n: usize,
        alpha: f64,
        gauge_power: Option<f64>,
        gauge_log: Option<f64>,
        epsilon: f64,
        ball: BallCfg,
        grid: GridSpec,
    },
    /// Three-way scaling comparison: Lebesgue term, capacity, content.
    #[serde(rename = "comparison")]
    Comparison {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        p_out: f64,
        q_out: f64,
        shrinks: Vec<f64>,
        grid: GridSpec,
        interval_len: f64,
        box_side: f64,
        #[serde(default)]
        solver: SolverParams,
    },
    /// Critical-regime capacity against the log-gauge content.
    #[serde(rename = "log-gauge")]
    LogGauge {
        n: usize,
        alpha: f64,
        p: f64,
        q: f64,
        radii: Vec<f64>,
        grid: GridSpec,
        t_center: f64,
        #[serde(default)]
        solver: SolverParams,
    },
}

fn default_threshold() -> f64 {
    10.0
}
fn default_gap_tol() -> f64 {
    1e-2
}
fn default_t0_factor() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

impl ExperimentConfig {
    /// Kind-specific completeness checks beyond what the schema enforces.
    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("experiment name must be nonempty".into());
        }
        match &self.kind {
            ExperimentKind::StrichartzR { .. } | ExperimentKind::StrichartzS { .. } => {
                if self.seed.is_none() {
                    return Err(format!(
                        "experiment {:?}: randomized kinds require an explicit seed",
                        self.name
                    ));
                }
            }
            ExperimentKind::HausdorffContent {
                gauge_power, gauge_log, ..
            } => {
                if gauge_power.is_none() == gauge_log.is_none() {
                    return Err("hausdorff-content needs exactly one of gauge_power, gauge_log".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// A verification manifest: named experiments with expected verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiments: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Human-readable statement of what the experiment checks.
    pub label: String,
    pub expect_pass: bool,
    pub config: ExperimentConfig,
}
