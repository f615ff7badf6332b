//! Discretization backbone: a periodic spatial torus standing in for free
//! space, a uniform time axis, and real fields sampled on the product grid.
//!
//! Spatial quadrature is the rectangle rule (exact for band-limited periodic
//! functions); time quadrature is composite trapezoid. Experiments keep their
//! supports concentrated in the central quarter of the box and treat the box
//! side as a convergence parameter.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic spatial grid times a uniform time grid.
///
/// Spatial samples per axis are `x_j = -L/2 + j dx` for `j = 0..N-1`; time
/// samples are `t_k = k dt` for `k = 0..=M`. The dual grid consists of the
/// discrete Fourier frequencies `2 pi m / L`, `m in {-N/2, ..., N/2 - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    /// Spatial dimension, 1 or 2.
    #[serde(rename = "n")]
    pub dim: usize,
    /// Side length L of the torus `[-L/2, L/2)^n`.
    #[serde(rename = "L")]
    pub box_len: f64,
    /// Points N per spatial axis (even, >= 8).
    #[serde(rename = "N")]
    pub points: usize,
    /// Time horizon T.
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Number of time steps M (the grid carries M + 1 time samples).
    #[serde(rename = "M")]
    pub steps: usize,
}

/// Validated grid constructor.
pub fn make_grid(dim: usize, box_len: f64, points: usize, horizon: f64, steps: usize) -> Result<SpaceTimeGrid> {
    SpaceTimeGrid::new(dim, box_len, points, horizon, steps)
}

impl SpaceTimeGrid {
    pub fn new(dim: usize, box_len: f64, points: usize, horizon: f64, steps: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("spatial dimension must be 1 or 2, got {dim}")));
        }
        if points % 2 != 0 {
            return Err(Error::InvalidParameter(format!("points per axis must be even, got {points}")));
        }
        if points < 8 {
            return Err(Error::InvalidParameter(format!("points per axis must be >= 8, got {points}")));
        }
        if steps < 2 {
            return Err(Error::InvalidParameter(format!("time steps must be >= 2, got {steps}")));
        }
        if !(box_len > 0.0) || !box_len.is_finite() {
            return Err(Error::InvalidParameter(format!("box length must be positive, got {box_len}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("time horizon must be positive, got {horizon}")));
        }
        Ok(Self { dim, box_len, points, horizon, steps })
    }

    pub fn dx(&self) -> f64 {
        self.box_len / self.points as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Quadrature weight of one spatial cell, `dx^n`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Number of spatial sample points, `N^n`.
    pub fn spatial_len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Number of time samples, `M + 1`.
    pub fn time_len(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Composite-trapezoid weights over `t_0..t_M`.
    pub fn time_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.time_len()];
        w[0] = 0.5 * dt;
        w[self.steps] = 0.5 * dt;
        w
    }

    /// Coordinates of the flattened spatial index (row-major for n = 2).
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let dx = self.dx();
        let half = self.box_len / 2.0;
        match self.dim {
            1 => [-half + idx as f64 * dx, 0.0],
            _ => {
                let i = idx / self.points;
                let j = idx % self.points;
                [-half + i as f64 * dx, -half + j as f64 * dx]
            }
        }
    }

    /// Signed frequency index of FFT bin `b` per axis: `b` for `b < N/2`, `b - N` otherwise.
    fn freq_index(&self, b: usize) -> i64 {
        if b < self.points / 2 {
            b as i64
        } else {
            b as i64 - self.points as i64
        }
    }

    /// Dual-grid frequency of FFT bin `b` along one axis, `2 pi m / L`.
    pub fn frequency(&self, b: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.freq_index(b) as f64 / self.box_len
    }

    /// All per-axis frequencies in FFT bin order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.points).map(|b| self.frequency(b)).collect()
    }

    /// `|xi|^{2 alpha}` over the flattened dual grid, FFT bin order.
    pub fn symbol(&self, alpha: f64) -> Vec<f64> {
        let freqs = self.frequencies();
        match self.dim {
            1 => freqs.iter().map(|&f| f.abs().powf(2.0 * alpha)).collect(),
            _ => {
                let n = self.points;
                let mut out = Vec::with_capacity(n * n);
                for &fi in &freqs {
                    for &fj in &freqs {
                        out.push((fi * fi + fj * fj).powf(alpha));
                    }
                }
                out
            }
        }
    }

    /// Largest per-axis frequency magnitude, `pi N / L`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.points as f64 / self.box_len
    }

    /// Torus (minimum-image) distance between a flattened grid point and a center.
    pub fn torus_distance(&self, idx: usize, center: &[f64]) -> f64 {
        let p = self.coords(idx);
        let mut s = 0.0;
        for d in 0..self.dim {
            let mut diff = (p[d] - center[d]).abs() % self.box_len;
            if diff > self.box_len / 2.0 {
                diff = self.box_len - diff;
            }
            s += diff * diff;
        }
        s.sqrt()
    }
}

/// Whether a field spans all time slices or a single one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Full,
    Slice,
}

/// Real-valued function sampled on a grid, either one time slice or the full
/// space-time block (time-major, row-major spatial layout).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: SpaceTimeGrid,
    pub kind: FieldKind,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: SpaceTimeGrid, kind: FieldKind) -> Self {
        let len = match kind {
            FieldKind::Full => grid.time_len() * grid.spatial_len(),
            FieldKind::Slice => grid.spatial_len(),
        };
        Self { grid, kind, values: vec![0.0; len] }
    }

    /// Unchecked constructor for values produced internally.
    pub(crate) fn from_raw(grid: SpaceTimeGrid, kind: FieldKind, values: Vec<f64>) -> Self {
        debug_assert_eq!(
            values.len(),
            match kind {
                FieldKind::Full => grid.time_len() * grid.spatial_len(),
                FieldKind::Slice => grid.spatial_len(),
            }
        );
        Self { grid, kind, values }
    }

    pub fn from_values(grid: SpaceTimeGrid, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        let expect = match kind {
            FieldKind::Full => grid.time_len() * grid.spatial_len(),
            FieldKind::Slice => grid.spatial_len(),
        };
        if values.len() != expect {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match grid ({} expected)",
                values.len(),
                expect
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        Ok(Self { grid, kind, values })
    }

    /// Build a full field from a function of `(t, x)`.
    pub fn full_from_fn(grid: SpaceTimeGrid, mut f: impl FnMut(f64, [f64; 2]) -> f64) -> Self {
        let s = grid.spatial_len();
        let mut values = Vec::with_capacity(grid.time_len() * s);
        for k in 0..grid.time_len() {
            let t = grid.time(k);
            for j in 0..s {
                values.push(f(t, grid.coords(j)));
            }
        }
        Self { grid, kind: FieldKind::Full, values }
    }

    /// Build a single slice from a function of `x`.
    pub fn slice_from_fn(grid: SpaceTimeGrid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.spatial_len()).map(|j| f(grid.coords(j))).collect();
        Self { grid, kind: FieldKind::Slice, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn num_slices(&self) -> usize {
        match self.kind {
            FieldKind::Full => self.grid.time_len(),
            FieldKind::Slice => 1,
        }
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let s = self.grid.spatial_len();
        &self.values[k * s..(k + 1) * s]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let s = self.grid.spatial_len();
        &mut self.values[k * s..(k + 1) * s]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }
}

/// The anisotropic metric ball `{|t - t0| < r^{2 alpha}, |x - x0| < r}`,
/// intersected with positive time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicBall {
    pub t_center: f64,
    pub x_center: [f64; 2],
    pub radius: f64,
    pub alpha: f64,
}

impl ParabolicBall {
    pub fn new(t_center: f64, x_center: [f64; 2], radius: f64, alpha: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self { t_center, x_center, radius, alpha })
    }

    /// Time half-width `r^{2 alpha}`.
    pub fn time_halfwidth(&self) -> f64 {
        self.radius.powf(2.0 * self.alpha)
    }

    pub fn contains(&self, t: f64, x: [f64; 2], dim: usize) -> bool {
        if (t - self.t_center).abs() >= self.time_halfwidth() {
            return false;
        }
        let mut s = 0.0;
        for d in 0..dim {
            let diff = x[d] - self.x_center[d];
            s += diff * diff;
        }
        s.sqrt() < self.radius
    }
}

/// Indicator of a parabolic ball sampled on the grid. Errors when the ball's
/// space-time bounding box does not fit (silent truncation would otherwise
/// distort volumes); see [`ball_mask_clipped`] for the intersecting variant.
pub fn ball_mask(grid: &SpaceTimeGrid, ball: &ParabolicBall) -> Result<Field> {
    let tw = ball.time_halfwidth();
    if ball.t_center + tw > grid.horizon + 1e-12 {
        return Err(Error::BallOutOfBounds(format!(
            "time extent ({}, {}) leaves [0, {}]",
            ball.t_center - tw,
            ball.t_center + tw,
            grid.horizon
        )));
    }
    let half = grid.box_len / 2.0;
    for d in 0..grid.dim {
        let c = ball.x_center[d];
        if c - ball.radius < -half - 1e-12 || c + ball.radius > half + 1e-12 {
            return Err(Error::BallOutOfBounds(format!(
                "spatial extent along axis {d} leaves [{}, {})",
                -half, half
            )));
        }
    }
    Ok(ball_mask_clipped(grid, ball))
}

/// Indicator of the ball intersected with the grid's space-time box; no
/// bounding check, spatial distance taken on the torus.
pub fn ball_mask_clipped(grid: &SpaceTimeGrid, ball: &ParabolicBall) -> Field {
    let tw = ball.time_halfwidth();
    let s = grid.spatial_len();
    let mut mask = Field::zeros(*grid, FieldKind::Full);
    let spatial: Vec<bool> = (0..s)
        .map(|j| grid.torus_distance(j, &ball.x_center[..grid.dim]) < ball.radius)
        .collect();
    for k in 0..grid.time_len() {
        if (grid.time(k) - ball.t_center).abs() >= tw {
            continue;
        }
        let row = mask.slice_mut(k);
        for (v, &inside) in row.iter_mut().zip(&spatial) {
            if inside {
                *v = 1.0;
            }
        }
    }
    mask
}

/// Space-time quadrature: rectangle rule in space, composite trapezoid in time.
pub fn integrate(field: &Field) -> f64 {
    match field.kind {
        FieldKind::Slice => integrate_values(&field.grid, field.values()),
        FieldKind::Full => {
            let w = field.grid.time_weights();
            let mut total = 0.0;
            for k in 0..field.grid.time_len() {
                total += w[k] * integrate_values(&field.grid, field.slice(k));
            }
            total
        }
    }
}

/// Spatial integral of time slice `k` (or of the lone slice).
pub fn integrate_slice(field: &Field, k: usize) -> f64 {
    match field.kind {
        FieldKind::Slice => integrate_values(&field.grid, field.values()),
        FieldKind::Full => integrate_values(&field.grid, field.slice(k)),
    }
}

fn integrate_values(grid: &SpaceTimeGrid, values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_arithmetic() {
        let g = make_grid(1, 2.0 * std::f64::consts::PI, 8, 1.0, 4).unwrap();
        assert_relative_eq!(g.dx(), std::f64::consts::PI / 4.0);
        assert_relative_eq!(g.dt(), 0.25);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(1, 2.0 * std::f64::consts::PI, 7, 1.0, 4).is_err()); // odd N
        assert!(make_grid(1, 1.0, 6, 1.0, 4).is_err()); // N < 8
        assert!(make_grid(1, -1.0, 8, 1.0, 4).is_err());
        assert!(make_grid(1, 1.0, 8, 0.0, 4).is_err());
        assert!(make_grid(1, 1.0, 8, 1.0, 1).is_err());
        assert!(make_grid(3, 1.0, 8, 1.0, 4).is_err());
    }

    #[test]
    fn dual_grid_frequencies() {
        let g = make_grid(2, 16.0, 64, 2.0, 32).unwrap();
        let f = g.frequencies();
        // 2 pi m / 16 for m in {-32..31}
        assert_relative_eq!(f[0], 0.0);
        assert_relative_eq!(f[1], std::f64::consts::PI / 8.0);
        assert_relative_eq!(f[32], -2.0 * std::f64::consts::PI * 32.0 / 16.0);
        assert_relative_eq!(f[63], -std::f64::consts::PI / 8.0);
    }

    #[test]
    fn integrate_constant_and_zero() {
        let g = make_grid(1, 2.0, 16, 1.0, 4).unwrap();
        let one = Field::full_from_fn(g, |_, _| 1.0);
        assert_relative_eq!(integrate(&one), 2.0, max_relative = 1e-14);
        let zero = Field::zeros(g, FieldKind::Full);
        assert_eq!(integrate(&zero), 0.0);
    }

    #[test]
    fn integrate_cosine_slice_vanishes() {
        let g = make_grid(1, 4.0, 32, 1.0, 4).unwrap();
        let f = Field::slice_from_fn(g, |x| (2.0 * std::f64::consts::PI * x[0] / 4.0).cos());
        assert!(integrate_slice(&f, 0).abs() < 1e-12);
    }

    #[test]
    fn integrate_is_linear() {
        let g = make_grid(1, 3.0, 16, 1.0, 6).unwrap();
        let f = Field::full_from_fn(g, |t, x| (t + x[0]).sin());
        let h = Field::full_from_fn(g, |t, x| (2.0 * t - x[0]).cos());
        let (a, b) = (1.7, -0.4);
        let mut combo = Field::zeros(g, FieldKind::Full);
        for (c, (u, v)) in combo
            .values_mut()
            .iter_mut()
            .zip(f.values().iter().zip(h.values()))
        {
            *c = a * u + b * v;
        }
        assert_relative_eq!(
            integrate(&combo),
            a * integrate(&f) + b * integrate(&h),
            max_relative = 1e-13
        );
    }

    #[test]
    fn tiny_ball_has_empty_mask() {
        let g = make_grid(1, 4.0, 64, 1.0, 64).unwrap();
        // center strictly between grid points, radius below one cell
        let ball = ParabolicBall::new(0.503, [0.031, 0.0], 1e-3, 0.5).unwrap();
        let mask = ball_mask(&g, &ball).unwrap();
        assert_eq!(integrate(&mask), 0.0);
    }

    #[test]
    fn huge_ball_covers_everything_when_clipped() {
        let g = make_grid(1, 4.0, 8, 1.0, 4).unwrap();
        let ball = ParabolicBall::new(0.5, [0.0, 0.0], 50.0, 0.5).unwrap();
        assert!(ball_mask(&g, &ball).is_err()); // bounding box leaves the grid
        let mask = ball_mask_clipped(&g, &ball);
        assert!(mask.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ball_mask_volume_matches_direct_count() {
        let g = make_grid(1, 4.0, 64, 1.0, 64).unwrap();
        let ball = ParabolicBall::new(0.5, [0.0, 0.0], 0.25, 0.5).unwrap();
        let mask = ball_mask(&g, &ball).unwrap();

        // independent oracle: count grid points satisfying the membership predicate
        let mut count = 0usize;
        for k in 0..g.time_len() {
            for j in 0..g.spatial_len() {
                let x = g.coords(j);
                if (g.time(k) - 0.5).abs() < 0.25 && (x[0]).abs() < 0.25 {
                    count += 1;
                }
            }
        }
        let vol = integrate(&mask);
        assert_relative_eq!(vol, count as f64 * g.dx() * g.dt(), max_relative = 1e-12);

        // continuum volume 2r * 2r^{2 alpha} = 0.25 within one cell layer
        let slack = 0.5 * g.dx() + 0.5 * g.dt() + g.dx() * g.dt();
        assert!((vol - 0.25).abs() <= slack + 1e-12, "vol = {vol}");
    }

    #[test]
    fn ball_mask_monotone_in_radius() {
        let g = make_grid(1, 4.0, 32, 1.0, 16).unwrap();
        let small = ball_mask(&g, &ParabolicBall::new(0.5, [0.25, 0.0], 0.2, 0.5).unwrap()).unwrap();
        let large = ball_mask(&g, &ParabolicBall::new(0.5, [0.25, 0.0], 0.4, 0.5).unwrap()).unwrap();
        for (s, l) in small.values().iter().zip(large.values()) {
            assert!(s <= l);
        }
    }

    #[test]
    fn ball_mask_translation_covariant() {
        let g = make_grid(1, 4.0, 32, 1.0, 16).unwrap();
        let shift_cells = 5usize;
        let base = ball_mask_clipped(&g, &ParabolicBall::new(0.5, [-0.5, 0.0], 0.3, 0.75).unwrap());
        let moved = ball_mask_clipped(
            &g,
            &ParabolicBall::new(0.5, [-0.5 + shift_cells as f64 * g.dx(), 0.0], 0.3, 0.75).unwrap(),
        );
        let n = g.spatial_len();
        for k in 0..g.time_len() {
            for j in 0..n {
                assert_eq!(base.slice(k)[j], moved.slice(k)[(j + shift_cells) % n]);
            }
        }
    }

    #[test]
    fn mask_in_two_dimensions() {
        let g = make_grid(2, 4.0, 16, 1.0, 8).unwrap();
        let ball = ParabolicBall::new(0.5, [0.0, 0.0], 0.8, 0.5).unwrap();
        // time extent pokes out of [0, T]: the strict variant refuses,
        // the clipped one intersects
        assert!(ball_mask(&g, &ball).is_err());
        let mask = ball_mask_clipped(&g, &ball);
        // Euclidean membership: corner points at distance > 0.8 excluded
        for k in 0..g.time_len() {
            for j in 0..g.spatial_len() {
                let x = g.coords(j);
                let inside = ball.contains(g.time(k), x, 2);
                assert_eq!(mask.slice(k)[j] == 1.0, inside);
            }
        }
    }
}
