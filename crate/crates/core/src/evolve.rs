//! The semigroup `e^{-t (-Delta)^alpha}`, the dissipative potential
//! (Duhamel integral) and its adjoint, applied spectrally on the torus.
//!
//! The time quadrature is composite trapezoid, shared verbatim between the
//! potential and its adjoint so that the two are exact transposes of each
//! other under the grid's quadrature inner product. That exactness is what
//! the capacity solver's certificates lean on.

use crate::error::{Error, Result};
use crate::fft::SpatialDft;
use crate::grid::{Field, FieldKind, SpaceTimeGrid};
use crate::par;
use num_complex::Complex64;

/// Precomputed spectral data for one `(grid, alpha)` pair. Valid only for the
/// grid it was built from; all apply operations check.
pub struct SemigroupPlan {
    pub grid: SpaceTimeGrid,
    pub alpha: f64,
    /// `|xi|^{2 alpha}` over the flattened dual grid.
    symbol: Vec<f64>,
    /// One-step multiplier `e^{-dt |xi|^{2 alpha}}`.
    step: Vec<f64>,
    dft: SpatialDft,
}

impl SemigroupPlan {
    pub fn new(grid: SpaceTimeGrid, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let symbol = grid.symbol(alpha);
        let dt = grid.dt();
        let step = symbol.iter().map(|s| (-dt * s).exp()).collect();
        Ok(Self {
            grid,
            alpha,
            symbol,
            step,
            dft: SpatialDft::new(grid.dim, grid.points),
        })
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub(crate) fn dft(&self) -> &SpatialDft {
        &self.dft
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn check_slice(&self, f: &Field) -> Result<()> {
        self.check_grid(f)?;
        if f.kind != FieldKind::Slice {
            return Err(Error::KindMismatch { expected: "slice" });
        }
        Ok(())
    }

    fn check_full(&self, f: &Field) -> Result<()> {
        self.check_grid(f)?;
        if f.kind != FieldKind::Full {
            return Err(Error::KindMismatch { expected: "full space-time" });
        }
        Ok(())
    }

    /// Forward-transform every slice of a field into one time-major complex buffer.
    pub(crate) fn fft_slices(&self, f: &Field) -> Vec<Complex64> {
        let s = self.grid.spatial_len();
        let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let dft = &self.dft;
        par::for_each_chunk_mut(&mut buf, s, |_, chunk| dft.forward(chunk));
        buf
    }

    /// Inverse-transform a time-major complex buffer back to a real field.
    pub(crate) fn ifft_slices(&self, mut hat: Vec<Complex64>, kind: FieldKind) -> Field {
        let s = self.grid.spatial_len();
        let dft = &self.dft;
        par::for_each_chunk_mut(&mut hat, s, |_, chunk| dft.inverse(chunk));
        let scale = 1.0 / s as f64;
        let values = hat.iter().map(|c| c.re * scale).collect();
        Field::from_raw(self.grid, kind, values)
    }

    fn ifft_one(&self, hat: &[Complex64]) -> Field {
        let mut buf = hat.to_vec();
        self.dft.inverse(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        let values = buf.iter().map(|c| c.re * scale).collect();
        Field::from_raw(self.grid, FieldKind::Slice, values)
    }

    fn apply_multiplier(&self, f: &Field, mult: impl Fn(f64) -> f64) -> Field {
        let mut hat: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.dft.forward(&mut hat);
        for (h, &s) in hat.iter_mut().zip(&self.symbol) {
            *h *= mult(s);
        }
        self.ifft_one(&hat)
    }
}

/// `R_alpha`: apply the semigroup to a spatial slice. Exact identity at `t = 0`.
pub fn apply_semigroup(plan: &SemigroupPlan, f: &Field, t: f64) -> Result<Field> {
    plan.check_slice(f)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("semigroup time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(plan.apply_multiplier(f, |s| (-t * s).exp()))
}

/// `(-Delta)^alpha e^{-t (-Delta)^alpha}`: the smoothing derivative of the
/// semigroup. Unbounded at `t = 0`, hence `t > 0` required.
pub fn apply_fractional_laplacian_semigroup(plan: &SemigroupPlan, f: &Field, t: f64) -> Result<Field> {
    plan.check_slice(f)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "the smoothing operator needs t > 0, got {t}"
        )));
    }
    Ok(plan.apply_multiplier(f, |s| s * (-t * s).exp()))
}

/// Semigroup orbit `t_k -> R_alpha f(t_k, .)` over all time samples.
pub fn semigroup_field(plan: &SemigroupPlan, f: &Field) -> Result<Field> {
    plan.check_slice(f)?;
    let s = plan.grid.spatial_len();
    let mut fhat: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.dft.forward(&mut fhat);
    let mut hat = vec![Complex64::default(); plan.grid.time_len() * s];
    let dt = plan.grid.dt();
    let symbol = &plan.symbol;
    par::for_each_chunk_mut(&mut hat, s, |k, chunk| {
        let t = k as f64 * dt;
        for (j, c) in chunk.iter_mut().enumerate() {
            *c = fhat[j] * (-t * symbol[j]).exp();
        }
    });
    Ok(plan.ifft_slices(hat, FieldKind::Full))
}

/// Trapezoid recursion for the potential in frequency space:
/// `U_{k+1} = E (U_k + dt/2 F_k) + dt/2 F_{k+1}`, `U_0 = 0`.
pub(crate) fn duhamel_recursion(plan: &SemigroupPlan, fhat: &[Complex64]) -> Vec<Complex64> {
    let s = plan.grid.spatial_len();
    let m = plan.grid.steps;
    let half_dt = 0.5 * plan.grid.dt();
    let mut uhat = vec![Complex64::default(); (m + 1) * s];
    for k in 0..m {
        let (done, rest) = uhat.split_at_mut((k + 1) * s);
        let prev = &done[k * s..];
        let next = &mut rest[..s];
        let fk = &fhat[k * s..(k + 1) * s];
        let fk1 = &fhat[(k + 1) * s..(k + 2) * s];
        for j in 0..s {
            next[j] = plan.step[j] * (prev[j] + half_dt * fk[j]) + half_dt * fk1[j];
        }
    }
    uhat
}

/// Backward recursion for the exact transpose. With `P_i = sum_{k>i} w_k E^{k-i} G_k`
/// (built from `P_M = 0`, `P_i = E (P_{i+1} + w_{i+1} G_{i+1})`), the adjoint
/// slices are `V_0 = P_0` and `V_i = dt/2 G_i + (dt / w_i) P_i` for `i >= 1`.
pub(crate) fn adjoint_recursion(plan: &SemigroupPlan, ghat: &[Complex64]) -> Vec<Complex64> {
    let s = plan.grid.spatial_len();
    let m = plan.grid.steps;
    let dt = plan.grid.dt();
    let w = plan.grid.time_weights();
    let mut p = vec![Complex64::default(); s];
    let mut vhat = vec![Complex64::default(); (m + 1) * s];
    for i in (0..=m).rev() {
        if i < m {
            let g_next = &ghat[(i + 1) * s..(i + 2) * s];
            for j in 0..s {
                p[j] = plan.step[j] * (p[j] + w[i + 1] * g_next[j]);
            }
        }
        let gi = &ghat[i * s..(i + 1) * s];
        let out = &mut vhat[i * s..(i + 1) * s];
        if i == 0 {
            out.copy_from_slice(&p);
        } else {
            let c = dt / w[i];
            for j in 0..s {
                out[j] = 0.5 * dt * gi[j] + c * p[j];
            }
        }
    }
    vhat
}

/// Dissipative potential `S_alpha F` at time index `k`.
pub fn duhamel(plan: &SemigroupPlan, forcing: &Field, k: usize) -> Result<Field> {
    plan.check_full(forcing)?;
    check_time_index(plan, k)?;
    if k == 0 {
        return Ok(Field::zeros(plan.grid, FieldKind::Slice));
    }
    let s = plan.grid.spatial_len();
    let fhat = plan.fft_slices(forcing);
    let uhat = duhamel_recursion(plan, &fhat);
    Ok(plan.ifft_one(&uhat[k * s..(k + 1) * s]))
}

/// Dissipative potential over all time samples.
pub fn duhamel_field(plan: &SemigroupPlan, forcing: &Field) -> Result<Field> {
    plan.check_full(forcing)?;
    let fhat = plan.fft_slices(forcing);
    let uhat = duhamel_recursion(plan, &fhat);
    Ok(plan.ifft_slices(uhat, FieldKind::Full))
}

/// Adjoint potential `S_alpha^* G` at time index `k`, horizon-truncated: the
/// upper integration limit is `T`, exact for forcings supported in `[0, T]`.
pub fn adjoint_duhamel(plan: &SemigroupPlan, forcing: &Field, k: usize) -> Result<Field> {
    plan.check_full(forcing)?;
    check_time_index(plan, k)?;
    let s = plan.grid.spatial_len();
    let ghat = plan.fft_slices(forcing);
    let vhat = adjoint_recursion(plan, &ghat);
    Ok(plan.ifft_one(&vhat[k * s..(k + 1) * s]))
}

/// Adjoint potential over all time samples.
pub fn adjoint_duhamel_field(plan: &SemigroupPlan, forcing: &Field) -> Result<Field> {
    plan.check_full(forcing)?;
    let ghat = plan.fft_slices(forcing);
    let vhat = adjoint_recursion(plan, &ghat);
    Ok(plan.ifft_slices(vhat, FieldKind::Full))
}

fn check_time_index(plan: &SemigroupPlan, k: usize) -> Result<()> {
    if k > plan.grid.steps {
        return Err(Error::InvalidParameter(format!(
            "time index {k} exceeds the grid's {} steps",
            plan.grid.steps
        )));
    }
    Ok(())
}

/// Quadrature inner product `<F, G>` over space-time (trapezoid in time).
pub fn quad_inner(grid: &SpaceTimeGrid, a: &Field, b: &Field) -> f64 {
    let w = grid.time_weights();
    let cell = grid.cell_volume();
    let mut acc = 0.0;
    for k in 0..grid.time_len() {
        let mut slice_acc = 0.0;
        for (x, y) in a.slice(k).iter().zip(b.slice(k)) {
            slice_acc += x * y;
        }
        acc += w[k] * slice_acc;
    }
    acc * cell
}

/// Refinement study of the time modulus of continuity of the semigroup orbit:
/// `h -> sup_x |R_alpha f(t + h) - R_alpha f(t)|` over a dyadic ladder of `h`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ContinuityReport {
    pub t_base: f64,
    pub offsets: Vec<f64>,
    pub sup_diffs: Vec<f64>,
    pub fitted_slope: f64,
    pub r_squared: f64,
}

pub fn continuity_experiment(
    plan: &SemigroupPlan,
    f: &Field,
    t_base: f64,
    offsets: &[f64],
) -> Result<ContinuityReport> {
    if offsets.len() < 3 {
        return Err(Error::TooFewSamples { need: 3, got: offsets.len() });
    }
    let base = apply_semigroup(plan, f, t_base)?;
    let mut sups = Vec::with_capacity(offsets.len());
    for &h in offsets {
        let shifted = apply_semigroup(plan, f, t_base + h)?;
        let sup = shifted
            .values()
            .iter()
            .zip(base.values())
            .fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()));
        sups.push(sup);
    }
    let (slope, _, r2) = crate::fit::linear_fit(
        &offsets.iter().map(|h| h.ln()).collect::<Vec<_>>(),
        &sups.iter().map(|s| s.ln()).collect::<Vec<_>>(),
    )?;
    Ok(ContinuityReport {
        t_base,
        offsets: offsets.to_vec(),
        sup_diffs: sups,
        fitted_slope: slope,
        r_squared: r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate_slice, make_grid};
    use approx::assert_relative_eq;

    fn plan_1d() -> SemigroupPlan {
        let g = make_grid(1, 16.0, 128, 1.0, 16).unwrap();
        SemigroupPlan::new(g, 0.5).unwrap()
    }

    fn spike(grid: &SpaceTimeGrid) -> Field {
        let mut f = Field::zeros(*grid, FieldKind::Slice);
        let mid = grid.spatial_len() / 2;
        f.values_mut()[mid] = 1.0 / grid.cell_volume();
        f
    }

    #[test]
    fn identity_at_time_zero_is_exact() {
        let plan = plan_1d();
        let f = Field::slice_from_fn(plan.grid, |x| (x[0] * 0.7).sin() + 0.3);
        let out = apply_semigroup(&plan, &f, 0.0).unwrap();
        assert_eq!(out.values(), f.values());
    }

    #[test]
    fn mass_is_preserved() {
        let plan = plan_1d();
        let f = Field::slice_from_fn(plan.grid, |x| (-x[0] * x[0]).exp());
        let before = integrate_slice(&f, 0);
        let out = apply_semigroup(&plan, &f, 0.7).unwrap();
        assert_relative_eq!(integrate_slice(&out, 0), before, max_relative = 1e-10);
    }

    #[test]
    fn semigroup_law_holds_to_machine_precision() {
        let plan = plan_1d();
        let f = Field::slice_from_fn(plan.grid, |x| (x[0] * 0.5).cos() + 1.0);
        let two_step = apply_semigroup(&plan, &apply_semigroup(&plan, &f, 0.3).unwrap(), 0.45).unwrap();
        let one_step = apply_semigroup(&plan, &f, 0.75).unwrap();
        for (a, b) in two_step.values().iter().zip(one_step.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let plan = plan_1d();
        let other = make_grid(1, 16.0, 64, 1.0, 16).unwrap();
        let f = Field::zeros(other, FieldKind::Slice);
        assert!(matches!(apply_semigroup(&plan, &f, 0.1), Err(Error::GridMismatch)));
    }

    #[test]
    fn smoothing_kills_constants() {
        let plan = plan_1d();
        let f = Field::slice_from_fn(plan.grid, |_| 3.25);
        let out = apply_fractional_laplacian_semigroup(&plan, &f, 0.5).unwrap();
        assert!(out.max_abs() < 1e-12);
        assert!(apply_fractional_laplacian_semigroup(&plan, &f, 0.0).is_err());
    }

    #[test]
    fn smoothing_eigenfunction_is_diagonal() {
        let plan = plan_1d();
        let xi0 = plan.grid.frequency(3);
        let f = Field::slice_from_fn(plan.grid, |x| (xi0 * x[0]).cos());
        let t = 0.4;
        let out = apply_fractional_laplacian_semigroup(&plan, &f, t).unwrap();
        let lam = xi0.abs().powf(2.0 * plan.alpha);
        let factor = lam * (-t * lam).exp();
        for (o, i) in out.values().iter().zip(f.values()) {
            assert_relative_eq!(*o, factor * i, max_relative = 1e-11, epsilon = 1e-13);
        }
    }

    #[test]
    fn smoothing_sup_norm_decay_rate() {
        // sup |(-Delta)^a e^{-t(-Delta)^a} delta| ~ t^{-(1 + n/(2a))}
        let g = make_grid(1, 32.0, 512, 1.0, 4).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let f = spike(&g);
        let ts = [1.0, 2.0, 4.0, 8.0];
        let sups: Vec<f64> = ts
            .iter()
            .map(|&t| apply_fractional_laplacian_semigroup(&plan, &f, t).unwrap().max_abs())
            .collect();
        let (slope, _, r2) = crate::fit::linear_fit(
            &ts.iter().map(|t| t.ln()).collect::<Vec<_>>(),
            &sups.iter().map(|s| s.ln()).collect::<Vec<_>>(),
        )
        .unwrap();
        let target = -(1.0 + 1.0 / (2.0 * 0.5));
        assert!((slope - target).abs() <= 0.1 * target.abs(), "slope = {slope}");
        assert!(r2 > 0.99);
    }

    #[test]
    fn duhamel_of_zero_is_zero_and_k0_is_zero() {
        let plan = plan_1d();
        let zero = Field::zeros(plan.grid, FieldKind::Full);
        assert_eq!(duhamel(&plan, &zero, 7).unwrap().max_abs(), 0.0);
        let f = Field::full_from_fn(plan.grid, |t, x| t + x[0].cos());
        assert_eq!(duhamel(&plan, &f, 0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn duhamel_matches_scalar_trapezoid_on_eigenmode() {
        let plan = plan_1d();
        let grid = plan.grid;
        let xi0 = grid.frequency(2);
        let lam = xi0.abs().powf(2.0 * plan.alpha);
        let f = Field::full_from_fn(grid, |_, x| (xi0 * x[0]).cos());
        let k = 11;
        let out = duhamel(&plan, &f, k).unwrap();

        // independent scalar oracle: trapezoid sum of e^{-(t_k - s_i) lam}
        let dt = grid.dt();
        let e1 = (-dt * lam).exp();
        let mut coeff = 0.0;
        for _ in 0..k {
            coeff = e1 * (coeff + 0.5 * dt) + 0.5 * dt;
        }
        let probe = grid.spatial_len() / 4;
        let x = grid.coords(probe)[0];
        assert_relative_eq!(out.values()[probe], coeff * (xi0 * x).cos(), max_relative = 1e-11);

        // closed-form time integral (1 - e^{-t lam})/lam up to quadrature order
        let t = grid.time(k);
        let exact = (1.0 - (-t * lam).exp()) / lam;
        assert_relative_eq!(coeff, exact, max_relative = 2e-3);
    }

    #[test]
    fn duhamel_preserves_positivity_to_spectral_floor() {
        let plan = plan_1d();
        let f = Field::full_from_fn(plan.grid, |t, x| {
            if (x[0] + 2.0).abs() < 1.0 && t < 0.7 {
                1.0
            } else {
                0.0
            }
        });
        let out = duhamel_field(&plan, &f).unwrap();
        assert!(out.min_value() >= -1e-8 * out.max_abs().max(1.0));
    }

    #[test]
    fn adjoint_vanishes_at_horizon_up_to_endpoint_weight() {
        let plan = plan_1d();
        let g = Field::full_from_fn(plan.grid, |t, x| (1.0 + t) * (0.3 * x[0]).cos());
        let m = plan.grid.steps;
        let out = adjoint_duhamel(&plan, &g, m).unwrap();
        // exact transpose leaves dt/2 * G_M at the horizon
        let half_dt = 0.5 * plan.grid.dt();
        for (o, gi) in out.values().iter().zip(g.slice(m)) {
            assert_relative_eq!(*o, half_dt * gi, max_relative = 1e-11, epsilon = 1e-14);
        }
        let zero = Field::zeros(plan.grid, FieldKind::Full);
        assert_eq!(adjoint_duhamel(&plan, &zero, 3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn adjointness_identity_on_random_fields() {
        use rand::{Rng, SeedableRng};
        let plan = plan_1d();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let f = Field::full_from_fn(plan.grid, |_, _| rng.gen_range(-1.0..1.0));
        let g = Field::full_from_fn(plan.grid, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = quad_inner(&plan.grid, &duhamel_field(&plan, &f).unwrap(), &g);
        let rhs = quad_inner(&plan.grid, &f, &adjoint_duhamel_field(&plan, &g).unwrap());
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn continuity_modulus_is_linear_in_offset() {
        // for an integrable spike, sup_x |R f(t+h) - R f(t)| ~ c h at fixed t
        let g = make_grid(1, 32.0, 512, 1.0, 4).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let f = spike(&g);
        let offsets = [0.4, 0.2, 0.1, 0.05, 0.025];
        let rep = continuity_experiment(&plan, &f, 1.0, &offsets).unwrap();
        assert!(
            (rep.fitted_slope - 1.0).abs() < 0.2,
            "slope = {}",
            rep.fitted_slope
        );
        // sup differences shrink monotonically with h
        for w in rep.sup_diffs.windows(2) {
            assert!(w[1] < w[0]);
        }
    }
}
