//! Shared oracles for the integration suites. Everything here is computed by
//! routes independent of the library's spectral code paths: closed forms,
//! image sums, direct quadrature, and dense linear algebra.

#![allow(dead_code)]

use fraclab::{Field, SpaceTimeGrid};

/// Exact periodization of the order-one-half kernel on the circle:
/// `sum_k (1/pi) t / ((x + kL)^2 + t^2) = (1/L) sinh(2 pi t / L) / (cosh(2 pi t / L) - cos(2 pi x / L))`.
pub fn periodic_poisson_1d(t: f64, x: f64, box_len: f64) -> f64 {
    let a = 2.0 * std::f64::consts::PI * t / box_len;
    let b = 2.0 * std::f64::consts::PI * x / box_len;
    (1.0 / box_len) * a.sinh() / (a.cosh() - b.cos())
}

/// Gaussian kernel periodized by an image sum (images decay like
/// `e^{-k^2 L^2 / (4t)}`, so a handful suffice).
pub fn periodic_heat_1d(t: f64, x: f64, box_len: f64) -> f64 {
    let mut acc = 0.0;
    for k in -6i32..=6 {
        let y = x + k as f64 * box_len;
        acc += (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-y * y / (4.0 * t)).exp();
    }
    acc
}

/// Fourier inversion of the kernel at the origin by direct quadrature:
/// `K_t(0) = (1/pi) int_0^inf e^{-t y^{2 alpha}} dy` in one dimension.
pub fn kernel_at_origin_quadrature(alpha: f64, t: f64) -> f64 {
    // Simpson on [0, Y] with Y far past the decay scale
    let y_max: f64 = (700.0 / t).powf(1.0 / (2.0 * alpha)).min(1e6);
    let n = 200_000usize;
    let h = y_max / n as f64;
    let f = |y: f64| (-t * y.powf(2.0 * alpha)).exp();
    let mut acc = f(0.0) + f(y_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0 / std::f64::consts::PI
}

/// Mixed relative error with an absolute floor: below the floor the values
/// are dominated by spectral truncation and float noise.
pub fn rel_err_floored(value: f64, reference: f64, floor: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(floor)
}

/// Dense one-step semigroup matrix built by direct DFT sums (no FFT):
/// `E[a][b] = (1/N) sum_m e^{-dt |xi_m|^{2 alpha}} cos(xi_m (x_a - x_b))`.
pub fn dense_semigroup_step(grid: &SpaceTimeGrid, alpha: f64) -> Vec<Vec<f64>> {
    assert_eq!(grid.dim, 1, "dense oracle is one-dimensional");
    let n = grid.points;
    let dt = grid.dt();
    let mut row0 = vec![0.0; n];
    for (d, r) in row0.iter_mut().enumerate() {
        let mut acc = 0.0;
        for m in 0..n {
            let xi = grid.frequency(m);
            let phase = xi * d as f64 * grid.dx();
            acc += (-dt * xi.abs().powf(2.0 * alpha)).exp() * phase.cos();
        }
        *r = acc / n as f64;
    }
    // circulant: E[a][b] = row0[(a - b) mod N]
    (0..n)
        .map(|a| (0..n).map(|b| row0[(a + n - b) % n]).collect())
        .collect()
}

/// Dense potential matrix on the full space-time grid by the shared
/// trapezoid recursion, built from the dense one-step matrix. Layout matches
/// the field order (time-major).
pub fn dense_potential_matrix(grid: &SpaceTimeGrid, alpha: f64) -> Vec<Vec<f64>> {
    let n = grid.points;
    let m = grid.steps;
    let e1 = dense_semigroup_step(grid, alpha);
    let vars = (m + 1) * n;
    let half_dt = 0.5 * grid.dt();

    let matvec = |mat: &Vec<Vec<f64>>, v: &[f64]| -> Vec<f64> {
        mat.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    };

    // columns: recursion applied to unit forcings
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(vars);
    for src in 0..vars {
        let (ks, js) = (src / n, src % n);
        let mut u = vec![0.0; n];
        let mut out = vec![0.0; vars];
        for k in 0..m {
            // u_{k+1} = E (u_k + dt/2 f_k) + dt/2 f_{k+1}
            let mut tmp = u.clone();
            if k == ks {
                tmp[js] += half_dt;
            }
            let mut next = matvec(&e1, &tmp);
            if k + 1 == ks {
                next[js] += half_dt;
            }
            u = next;
            out[(k + 1) * n..(k + 2) * n].copy_from_slice(&u);
        }
        cols.push(out);
    }
    // transpose columns into rows
    (0..vars)
        .map(|r| (0..vars).map(|c| cols[c][r]).collect())
        .collect()
}

/// Projected-gradient solver for the tiny quadratic program
/// `min (1/2) ||F||^2_w  s.t.  A F >= 1 on the set, F >= 0`,
/// via ascent on its concave dual. Returns the optimal `||F||^2_w`
/// (which equals the capacity at exponents (2, 2)).
pub struct DenseQp {
    /// constraint rows in plain coordinates
    pub rows: Vec<Vec<f64>>,
    /// quadrature weights per variable
    pub var_weights: Vec<f64>,
}

impl DenseQp {
    pub fn solve(&self, iters: usize) -> f64 {
        let nc = self.rows.len();
        let nv = self.var_weights.len();
        // F = (A^T lam)_+ / w elementwise (gradient of the dual), with the
        // plain-coordinate rows mapped through the quadrature metric
        let primal = |lam: &[f64]| -> Vec<f64> {
            let mut f = vec![0.0; nv];
            for (row, &l) in self.rows.iter().zip(lam) {
                for (fv, &a) in f.iter_mut().zip(row) {
                    *fv += a * l;
                }
            }
            for (fv, &w) in f.iter_mut().zip(&self.var_weights) {
                *fv = (*fv / w).max(0.0);
            }
            f
        };
        let forward = |f: &[f64]| -> Vec<f64> {
            self.rows
                .iter()
                .map(|row| row.iter().zip(f).map(|(a, b)| a * b).sum())
                .collect()
        };

        // crude operator-norm bound for the step size
        let mut norm2 = 0.0;
        let mut v = vec![1.0; nc];
        for _ in 0..100 {
            let f = primal(&v);
            let av = forward(&f);
            let vv: f64 = v.iter().map(|x| x * x).sum();
            norm2 = av.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / vv;
            let nrm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm == 0.0 {
                break;
            }
            v = av.iter().map(|x| x / nrm).collect();
        }
        // the clamp makes the iteration map nonlinear; stay well inside the bound
        let step = 0.5 / norm2.max(1e-300);

        let mut lam = vec![0.0; nc];
        for _ in 0..iters {
            let f = primal(&lam);
            let af = forward(&f);
            for (l, &a) in lam.iter_mut().zip(&af) {
                *l = (*l + step * (1.0 - a)).max(0.0);
            }
        }
        let f = primal(&lam);
        f.iter()
            .zip(&self.var_weights)
            .map(|(x, w)| w * x * x)
            .sum()
    }
}

/// Quadrature weights per flattened space-time variable.
pub fn variable_weights(grid: &SpaceTimeGrid) -> Vec<f64> {
    let tw = grid.time_weights();
    let cell = grid.cell_volume();
    let mut out = Vec::with_capacity(grid.time_len() * grid.spatial_len());
    for k in 0..grid.time_len() {
        for _ in 0..grid.spatial_len() {
            out.push(tw[k] * cell);
        }
    }
    out
}

/// Max-abs difference between a field and a reference function of `(t, x)`.
pub fn max_abs_diff(field: &Field, mut reference: impl FnMut(f64, [f64; 2]) -> f64) -> f64 {
    let grid = field.grid;
    let mut worst = 0.0_f64;
    for k in 0..field.num_slices() {
        let t = grid.time(k);
        for (j, &v) in field.slice(k).iter().enumerate() {
            worst = worst.max((v - reference(t, grid.coords(j))).abs());
        }
    }
    worst
}
