//! Space-time capacity of compact grid sets for the dissipative operator.
//!
//! The capacity of a set `K` is the infimum of `||F||^{p ^ q}` over
//! nonnegative forcings whose potential dominates one on `K`. Discretized on
//! the grid this is a convex program; the primal solver produces feasible
//! upper bounds, the dual measure-maximization produces feasible lower
//! bounds, and every reported bracket carries both certificates.

mod experiments;
mod solver;

pub use experiments::{
    axiom_suite, ball_bracket, critical_experiment, indicator_certificate, scaling_experiment,
    AxiomReport, CertificateReport, CriticalReport, CriticalRow, GridSpec, ScalingReport,
    ScalingRow,
};
pub use solver::{capacity_bracket, dual_capacity, primal_capacity, SolverCfg};

use crate::error::{Error, Result};
use crate::evolve::{adjoint_duhamel_field, duhamel_field, SemigroupPlan};
use crate::grid::{ball_mask, Field, FieldKind, ParabolicBall, SpaceTimeGrid};
use crate::par;
use serde::Serialize;

/// A compact set of space-time grid points, strictly inside positive time
/// (points on the `t = 0` slice are dropped: no potential can reach them).
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet {
    pub grid: SpaceTimeGrid,
    /// `(time index, flattened spatial index)`, ordered by time then space.
    points: Vec<(usize, usize)>,
    descriptor: String,
}

impl CompactSet {
    /// Collect the support of a 0/1 mask field, dropping the `t = 0` slice.
    pub fn from_mask(mask: &Field) -> Result<Self> {
        if mask.kind != FieldKind::Full {
            return Err(Error::KindMismatch { expected: "full space-time" });
        }
        let grid = mask.grid;
        let mut points = Vec::new();
        for k in 1..grid.time_len() {
            for (j, &v) in mask.slice(k).iter().enumerate() {
                if v != 0.0 {
                    points.push((k, j));
                }
            }
        }
        Ok(Self {
            grid,
            points,
            descriptor: "mask".into(),
        })
    }

    pub fn from_ball(grid: &SpaceTimeGrid, ball: &ParabolicBall) -> Result<Self> {
        let mask = ball_mask(grid, ball)?;
        let mut set = Self::from_mask(&mask)?;
        set.descriptor = format!(
            "ball(t0={}, x0={:?}, r={}, alpha={})",
            ball.t_center,
            &ball.x_center[..grid.dim],
            ball.radius,
            ball.alpha
        );
        Ok(set)
    }

    pub fn empty(grid: SpaceTimeGrid) -> Self {
        Self {
            grid,
            points: Vec::new(),
            descriptor: "empty".into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn with_descriptor(mut self, d: impl Into<String>) -> Self {
        self.descriptor = d.into();
        self
    }

    /// Union of two sets on the same grid.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut points: Vec<(usize, usize)> = self.points.iter().chain(&other.points).cloned().collect();
        points.sort_unstable();
        points.dedup();
        Ok(Self {
            grid: self.grid,
            points,
            descriptor: format!("union({}, {})", self.descriptor, other.descriptor),
        })
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.points.iter().all(|p| other.points.binary_search(p).is_ok())
    }

    /// Translate by whole spatial cells (wrapping around the torus).
    pub fn translate_cells(&self, shift: [i64; 2]) -> Self {
        let n = self.grid.points as i64;
        let mut points: Vec<(usize, usize)> = self
            .points
            .iter()
            .map(|&(k, j)| {
                let j = j as i64;
                let wrapped = match self.grid.dim {
                    1 => (j + shift[0]).rem_euclid(n),
                    _ => {
                        let row = (j / n + shift[0]).rem_euclid(n);
                        let col = (j % n + shift[1]).rem_euclid(n);
                        row * n + col
                    }
                };
                (k, wrapped as usize)
            })
            .collect();
        points.sort_unstable();
        Self {
            grid: self.grid,
            points,
            descriptor: format!("{} + shift{:?}", self.descriptor, shift),
        }
    }

    /// Quadrature weight of each member point (trapezoid time weight times cell volume).
    pub fn node_weights(&self) -> Vec<f64> {
        let w = self.grid.time_weights();
        let cell = self.grid.cell_volume();
        self.points.iter().map(|&(k, _)| w[k] * cell).collect()
    }
}

/// Nonnegative point masses on the points of a compact set.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteMeasure {
    pub grid: SpaceTimeGrid,
    /// `(time index, spatial index)` support, aligned with `masses`.
    pub support: Vec<(usize, usize)>,
    pub masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Matrix-free restriction of the potential to a constraint set:
/// `forward` maps a forcing to the potential values on the set, and
/// `adjoint_density` is its exact transpose under the quadrature inner
/// products (a density on the set maps to the adjoint potential field).
pub struct CapacityOperator<'a> {
    pub plan: &'a SemigroupPlan,
    pub set: &'a CompactSet,
    node_weights: Vec<f64>,
    /// `(time index, start, end)` ranges into the set's point list, one per
    /// active slice.
    ranges: Vec<(usize, usize, usize)>,
}

impl<'a> CapacityOperator<'a> {
    pub fn new(plan: &'a SemigroupPlan, set: &'a CompactSet) -> Result<Self> {
        if plan.grid != set.grid {
            return Err(Error::GridMismatch);
        }
        let mut ranges = Vec::new();
        let mut start = 0;
        while start < set.points.len() {
            let k = set.points[start].0;
            let end = start + set.points[start..].iter().take_while(|&&(kk, _)| kk == k).count();
            ranges.push((k, start, end));
            start = end;
        }
        Ok(Self {
            plan,
            set,
            node_weights: set.node_weights(),
            ranges,
        })
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    /// Potential values at the set's points.
    pub fn forward(&self, forcing: &Field) -> Vec<f64> {
        let grid = self.plan.grid;
        let s = grid.spatial_len();
        let fhat = self.plan.fft_slices(forcing);
        let uhat = crate::evolve::duhamel_recursion(self.plan, &fhat);
        // invert only the slices that carry constraint points
        let per_slice: Vec<Vec<f64>> = par::map_collect(self.ranges.len(), |i| {
            let (k, start, end) = self.ranges[i];
            let mut buf = uhat[k * s..(k + 1) * s].to_vec();
            self.plan.dft().inverse(&mut buf);
            let scale = 1.0 / s as f64;
            self.set.points[start..end]
                .iter()
                .map(|&(_, j)| buf[j].re * scale)
                .collect()
        });
        let mut out = Vec::with_capacity(self.set.len());
        for chunk in per_slice {
            out.extend(chunk);
        }
        out
    }

    /// Adjoint potential of the density `lam` (values per set point with
    /// respect to the quadrature measure).
    pub fn adjoint_density(&self, lam: &[f64]) -> Field {
        debug_assert_eq!(lam.len(), self.set.len());
        let mut embedded = Field::zeros(self.plan.grid, FieldKind::Full);
        for (&(k, j), &v) in self.set.points.iter().zip(lam) {
            embedded.slice_mut(k)[j] += v;
        }
        adjoint_duhamel_field(self.plan, &embedded).expect("embedded field lives on the plan grid")
    }

    /// Quadrature inner product on the constraint side.
    pub fn set_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.node_weights)
            .map(|((x, y), w)| w * x * y)
            .sum()
    }
}

/// Dense materialization of the restricted operator (plain coordinates:
/// entry `(i, v)` is the potential at point `i` of the unit basis forcing at
/// flattened space-time index `v`).
pub struct DenseOperator {
    pub rows: Vec<Vec<f64>>,
    pub num_vars: usize,
}

impl DenseOperator {
    pub fn forward(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars];
        for (row, &yi) in self.rows.iter().zip(y) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Either form of the restricted operator.
pub enum OperatorForm<'a> {
    Dense(DenseOperator),
    MatrixFree(CapacityOperator<'a>),
}

/// Materialize the restricted operator when `variables x constraints` fits the
/// budget; otherwise fall back to the matrix-free form when allowed.
pub fn materialize_operator<'a>(
    plan: &'a SemigroupPlan,
    set: &'a CompactSet,
    budget: usize,
    allow_matrix_free: bool,
) -> Result<OperatorForm<'a>> {
    let num_vars = plan.grid.time_len() * plan.grid.spatial_len();
    if num_vars.saturating_mul(set.len()) > budget {
        if allow_matrix_free {
            return Ok(OperatorForm::MatrixFree(CapacityOperator::new(plan, set)?));
        }
        return Err(Error::BudgetExceeded {
            vars: num_vars,
            constraints: set.len(),
            budget,
        });
    }
    // row i = quadrature-weighted adjoint of the unit point mass at point i
    let op = CapacityOperator::new(plan, set)?;
    let w = plan.grid.time_weights();
    let cell = plan.grid.cell_volume();
    let nu = set.node_weights();
    let mut rows = Vec::with_capacity(set.len());
    for i in 0..set.len() {
        let mut lam = vec![0.0; set.len()];
        lam[i] = 1.0 / nu[i];
        let field = op.adjoint_density(&lam);
        let mut row = Vec::with_capacity(num_vars);
        for k in 0..plan.grid.time_len() {
            for &v in field.slice(k) {
                row.push(v * w[k] * cell);
            }
        }
        rows.push(row);
    }
    Ok(OperatorForm::Dense(DenseOperator { rows, num_vars }))
}

/// A capacity bracket with its certificates and solver diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub set_descriptor: String,
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub grid: SpaceTimeGrid,
    /// `||F*||^{p ^ q}` of the best feasible forcing (upper bound).
    pub primal_value: f64,
    /// `||mu*||_1^{p ^ q}` of the best feasible measure (lower bound).
    pub dual_value: f64,
    pub gap: f64,
    pub rel_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set has no grid points at this resolution; both bounds are zero.
    pub sub_resolution: bool,
    /// `min_K S F* - 1` after the exact feasibility rescale (>= 0 up to fp).
    pub primal_feasibility: f64,
    /// `||(S* mu*)_+||_{q',p'}` after the exact rescale (<= 1).
    pub dual_feasibility: f64,
    #[serde(skip)]
    pub primal_certificate: Option<Field>,
    #[serde(skip)]
    pub dual_certificate: Option<DiscreteMeasure>,
}

/// Potential of the all-ones forcing, evaluated directly through the evolve
/// module. Oracle for dense row sums.
pub fn potential_of_ones(plan: &SemigroupPlan) -> Result<Field> {
    let ones = Field::full_from_fn(plan.grid, |_, _| 1.0);
    duhamel_field(plan, &ones)
}
