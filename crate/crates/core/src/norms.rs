//! Mixed space-time Lebesgue norms `L^q_t L^p_x` and randomized boundedness
//! experiments for the semigroup and the dissipative potential.
//!
//! The experiments operationalize "bounded with an unspecified constant" as:
//! the empirical sup of the operator ratio over a seeded trial family is
//! finite and stable under grid refinement. No sharp constants are asserted.

use crate::error::{Error, Result};
use crate::evolve::{duhamel_field, semigroup_field, SemigroupPlan};
use crate::grid::{ball_mask_clipped, Field, FieldKind, ParabolicBall, SpaceTimeGrid};
use crate::par;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Spatial/temporal exponent pair with the usual conjugacy conventions
/// (`f64::INFINITY` encodes the sup norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedExponents {
    pub p: f64,
    pub q: f64,
}

impl MixedExponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::ExponentConstraint(format!("spatial exponent must satisfy p >= 1, got {p}")));
        }
        if !(q > 1.0) {
            return Err(Error::ExponentConstraint(format!("temporal exponent must satisfy q > 1, got {q}")));
        }
        Ok(Self { p, q })
    }

    pub fn p_conjugate(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn q_conjugate(&self) -> f64 {
        conjugate(self.q)
    }

    pub fn min_exponent(&self) -> f64 {
        self.p.min(self.q)
    }
}

/// Hoelder conjugate with the `1 <-> infinity` convention.
pub fn conjugate(e: f64) -> f64 {
    if e == 1.0 {
        f64::INFINITY
    } else if e.is_infinite() {
        1.0
    } else {
        e / (e - 1.0)
    }
}

/// Spatial `L^p` of one slice under the rectangle rule.
pub(crate) fn slice_lp(grid: &SpaceTimeGrid, values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    }
    let cell = grid.cell_volume();
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() * cell;
    }
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt();
    }
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// `L^q_t L^p_x` of a full space-time field: spatial `L^p` per slice, then the
/// temporal `L^q` of the slice norms under trapezoid weights.
pub fn mixed_norm(field: &Field, p: f64, q: f64) -> Result<f64> {
    if field.kind != FieldKind::Full {
        return Err(Error::KindMismatch { expected: "full space-time" });
    }
    if !(p >= 1.0) || (!(q >= 1.0)) {
        return Err(Error::ExponentConstraint(format!("exponents must satisfy p, q >= 1, got ({p}, {q})")));
    }
    let grid = field.grid;
    let slice_norms: Vec<f64> =
        par::map_collect(grid.time_len(), |k| slice_lp(&grid, field.slice(k), p));
    if q.is_infinite() {
        return Ok(slice_norms.iter().fold(0.0_f64, |a, v| a.max(*v)));
    }
    let w = grid.time_weights();
    let mut acc = 0.0;
    for (s, wk) in slice_norms.iter().zip(&w) {
        acc += wk * if q == 2.0 { s * s } else { s.powf(q) };
    }
    Ok(acc.powf(1.0 / q))
}

/// Nonnegative seeded trial family: unit spikes, squared trigonometric
/// polynomials, parabolic-ball indicators. Spans the certificate shapes the
/// capacity experiments use.
pub(crate) fn trial_slice(grid: &SpaceTimeGrid, rng: &mut ChaCha8Rng, which: usize) -> Field {
    match which % 3 {
        0 => {
            let mut f = Field::zeros(*grid, FieldKind::Slice);
            let j = rng.gen_range(0..grid.spatial_len());
            f.values_mut()[j] = 1.0 / grid.cell_volume();
            f
        }
        1 => random_trig_square(grid, rng),
        _ => {
            let ball = random_ball(grid, rng);
            let full = ball_mask_clipped(grid, &ball);
            let k = rng.gen_range(0..grid.time_len());
            Field::from_raw(*grid, FieldKind::Slice, full.slice(k).to_vec())
        }
    }
}

pub(crate) fn trial_field(grid: &SpaceTimeGrid, rng: &mut ChaCha8Rng, which: usize) -> Field {
    match which % 3 {
        0 => {
            let mut f = Field::zeros(*grid, FieldKind::Full);
            let k = rng.gen_range(1..grid.time_len());
            let j = rng.gen_range(0..grid.spatial_len());
            f.slice_mut(k)[j] = 1.0 / (grid.cell_volume() * grid.dt());
            f
        }
        1 => {
            let sp = random_trig_square(grid, rng);
            let a = rng.gen_range(0.5..2.0);
            let b = rng.gen_range(0.0..std::f64::consts::PI);
            let horizon = grid.horizon;
            let mut f = Field::zeros(*grid, FieldKind::Full);
            for k in 0..grid.time_len() {
                let t = grid.time(k);
                let env = 1.0 + (a * std::f64::consts::PI * t / horizon + b).sin();
                for (o, s) in f.slice_mut(k).iter_mut().zip(sp.values()) {
                    *o = env * s;
                }
            }
            f
        }
        _ => ball_mask_clipped(grid, &random_ball(grid, rng)),
    }
}

fn random_ball(grid: &SpaceTimeGrid, rng: &mut ChaCha8Rng) -> ParabolicBall {
    let r = rng.gen_range(0.05..0.2) * grid.box_len;
    let t0 = rng.gen_range(0.25..0.75) * grid.horizon;
    let mut x0 = [0.0, 0.0];
    for c in x0.iter_mut().take(grid.dim) {
        *c = rng.gen_range(-0.25..0.25) * grid.box_len;
    }
    // alpha of the trial shape is arbitrary; 0.5 keeps the box isotropic-ish
    ParabolicBall::new(t0, x0, r, 0.5).expect("trial ball parameters are valid")
}

fn random_trig_square(grid: &SpaceTimeGrid, rng: &mut ChaCha8Rng) -> Field {
    let modes = 3usize;
    let mut coef = Vec::new();
    for _ in 0..=modes {
        coef.push((rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    let base = 2.0 * std::f64::consts::PI / grid.box_len;
    Field::slice_from_fn(*grid, |x| {
        let arg = x[0] + x[1];
        let mut s = 0.0;
        for (m, (a, b)) in coef.iter().enumerate() {
            s += a * (base * m as f64 * arg).cos() + b * (base * m as f64 * arg).sin();
        }
        s * s
    })
}

/// Empirical operator-ratio record.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub operator: &'static str,
    pub alpha: f64,
    pub n: usize,
    pub p: f64,
    pub q: Option<f64>,
    pub p_out: f64,
    pub q_out: f64,
    pub ratio: f64,
    pub trials: usize,
    pub seed: u64,
    pub grid: SpaceTimeGrid,
    /// Set when the admissible range for `p_out` is unconstrained because the
    /// smoothing order covers the dimension (`2 alpha >= n`).
    pub range_unrestricted: bool,
}

/// Empirical sup of `||R_alpha f||_{L^{q_out}_t L^{p_out}_x} / ||f||_{L^p_x}`
/// over the seeded trial family; `q_out` comes from the scaling relation
/// `1/q_out = (n / 2 alpha)(1/p - 1/p_out)` (`p = p_out` gives the sup norm).
pub fn strichartz_ratio_semigroup(
    plan: &SemigroupPlan,
    p: f64,
    p_out: f64,
    trial_count: usize,
    seed: u64,
) -> Result<RatioReport> {
    let n = plan.grid.dim as f64;
    let alpha = plan.alpha;
    if !(p >= 1.0 && p_out >= p) {
        return Err(Error::ExponentConstraint(format!("need 1 <= p <= p_out, got ({p}, {p_out})")));
    }
    let denom = n - n.min(2.0 * alpha);
    let range_unrestricted = denom <= 0.0;
    if !range_unrestricted && p_out >= n * p / denom {
        return Err(Error::ExponentConstraint(format!(
            "p_out = {p_out} outside the admissible range [p, {})",
            n * p / denom
        )));
    }
    let inv_qout = (n / (2.0 * alpha)) * (1.0 / p - 1.0 / p_out);
    let q_out = if inv_qout <= 0.0 { f64::INFINITY } else { 1.0 / inv_qout };

    let ratios: Vec<f64> = par::map_collect(trial_count, |i| {
        let mut rng = child_rng(seed, i as u64);
        let f = trial_slice(&plan.grid, &mut rng, i);
        let denom = slice_lp(&plan.grid, f.values(), p);
        if denom < 1e-300 {
            return 0.0;
        }
        let orbit = semigroup_field(plan, &f).expect("trial slice lives on the plan grid");
        mixed_norm(&orbit, p_out, q_out).expect("valid exponents") / denom
    });
    Ok(RatioReport {
        operator: "semigroup",
        alpha,
        n: plan.grid.dim,
        p,
        q: None,
        p_out,
        q_out,
        ratio: ratios.iter().fold(0.0_f64, |a, r| a.max(*r)),
        trials: trial_count,
        seed,
        grid: plan.grid,
        range_unrestricted,
    })
}

/// Empirical sup of `||S_alpha F||_{L^{q_out}_t L^{p_out}_x} / ||F||_{L^q_t L^p_x}`.
/// The exponents must satisfy the potential's scaling relation
/// `(1/q - 1/q_out) + (n / 2 alpha)(1/p - 1/p_out) = 1` exactly.
pub fn strichartz_ratio_potential(
    plan: &SemigroupPlan,
    p: f64,
    q: f64,
    p_out: f64,
    q_out: f64,
    trial_count: usize,
    seed: u64,
) -> Result<RatioReport> {
    let n = plan.grid.dim as f64;
    let alpha = plan.alpha;
    if !(p >= 1.0 && p < p_out) {
        return Err(Error::ExponentConstraint(format!("need 1 <= p < p_out, got ({p}, {p_out})")));
    }
    if !(q > 1.0 && q < q_out && q_out.is_finite()) {
        return Err(Error::ExponentConstraint(format!("need 1 < q < q_out < inf, got ({q}, {q_out})")));
    }
    let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
    let residual = (inv(q) - inv(q_out)) + (n / (2.0 * alpha)) * (inv(p) - inv(p_out)) - 1.0;
    if residual.abs() > 1e-9 {
        return Err(Error::ScalingRelation { residual });
    }

    let ratios: Vec<f64> = par::map_collect(trial_count, |i| {
        let mut rng = child_rng(seed, i as u64);
        let f = trial_field(&plan.grid, &mut rng, i);
        let denom = mixed_norm(&f, p, q).expect("valid exponents");
        if denom < 1e-300 {
            return 0.0; // zero-norm trials are skipped
        }
        let pot = duhamel_field(plan, &f).expect("trial field lives on the plan grid");
        mixed_norm(&pot, p_out, q_out).expect("valid exponents") / denom
    });
    Ok(RatioReport {
        operator: "potential",
        alpha,
        n: plan.grid.dim,
        p,
        q: Some(q),
        p_out,
        q_out,
        ratio: ratios.iter().fold(0.0_f64, |a, r| a.max(*r)),
        trials: trial_count,
        seed,
        grid: plan.grid,
        range_unrestricted: false,
    })
}

pub(crate) fn child_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    fn unit_grid() -> SpaceTimeGrid {
        make_grid(1, 1.0, 16, 1.0, 8).unwrap()
    }

    #[test]
    fn constant_field_has_unit_norm_for_all_exponents() {
        let g = unit_grid();
        let f = Field::full_from_fn(g, |_, _| 1.0);
        for &(p, q) in &[(1.0, 2.0), (2.0, 2.0), (3.0, 1.5), (f64::INFINITY, 4.0), (2.0, f64::INFINITY)] {
            assert_relative_eq!(mixed_norm(&f, p, q).unwrap(), 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn norm_is_homogeneous_and_even() {
        let g = unit_grid();
        let f = Field::full_from_fn(g, |t, x| (5.0 * t - x[0]).sin());
        let mut cf = f.clone();
        cf.scale(-3.5);
        let base = mixed_norm(&f, 2.5, 3.0).unwrap();
        assert_relative_eq!(mixed_norm(&cf, 2.5, 3.0).unwrap(), 3.5 * base, max_relative = 1e-12);
    }

    #[test]
    fn product_fields_factorize() {
        let g = make_grid(1, 1.0, 32, 1.0, 16).unwrap();
        let a = |t: f64| 1.0 + t * t;
        let b = |x: f64| 0.5 + (x - 0.2) * (x - 0.2);
        let f = Field::full_from_fn(g, |t, x| a(t) * b(x[0]));
        let (p, q) = (3.0, 2.0);

        // one-dimensional quadrature oracles with the same rules
        let cell = g.cell_volume();
        let bnorm = ((0..g.spatial_len())
            .map(|j| b(g.coords(j)[0]).powf(p))
            .sum::<f64>()
            * cell)
            .powf(1.0 / p);
        let w = g.time_weights();
        let anorm = ((0..g.time_len()).map(|k| w[k] * a(g.time(k)).powf(q)).sum::<f64>()).powf(1.0 / q);
        assert_relative_eq!(mixed_norm(&f, p, q).unwrap(), anorm * bnorm, max_relative = 1e-12);
    }

    #[test]
    fn triangle_inequality_on_random_pairs() {
        let g = unit_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..40 {
            let f = Field::full_from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let h = Field::full_from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let mut sum = f.clone();
            for (s, v) in sum.values_mut().iter_mut().zip(h.values()) {
                *s += v;
            }
            let p = 1.0 + (trial % 5) as f64;
            let q = 1.5 + (trial % 4) as f64;
            let lhs = mixed_norm(&sum, p, q).unwrap();
            let rhs = mixed_norm(&f, p, q).unwrap() + mixed_norm(&h, p, q).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12), "triangle failed: {lhs} > {rhs}");
        }
    }

    #[test]
    fn absolute_value_leaves_norm_unchanged() {
        let g = unit_grid();
        let f = Field::full_from_fn(g, |t, x| (9.0 * t * x[0]).sin());
        let mut af = f.clone();
        for v in af.values_mut() {
            *v = v.abs();
        }
        assert_relative_eq!(
            mixed_norm(&f, 2.0, 3.0).unwrap(),
            mixed_norm(&af, 2.0, 3.0).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn conjugate_conventions() {
        assert_eq!(conjugate(1.0), f64::INFINITY);
        assert_eq!(conjugate(f64::INFINITY), 1.0);
        assert_relative_eq!(conjugate(2.0), 2.0);
        assert_relative_eq!(conjugate(4.0), 4.0 / 3.0);
    }

    #[test]
    fn semigroup_ratio_is_contraction_at_equal_exponents() {
        let g = make_grid(1, 16.0, 128, 1.0, 16).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let rep = strichartz_ratio_semigroup(&plan, 2.0, 2.0, 9, 11).unwrap();
        assert!(rep.q_out.is_infinite());
        assert!(rep.ratio <= 1.0 + 1e-6, "ratio = {}", rep.ratio);
        assert!(rep.ratio > 0.5);
    }

    #[test]
    fn potential_ratio_rejects_broken_scaling_relation() {
        let g = make_grid(1, 16.0, 64, 1.0, 8).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        // (1/2 - 1/4) + 1 * (1 - 1/2) = 3/4 != 1
        let err = strichartz_ratio_potential(&plan, 1.0, 2.0, 2.0, 4.0, 4, 0).unwrap_err();
        match err {
            Error::ScalingRelation { residual } => assert_relative_eq!(residual, -0.25, epsilon = 1e-12),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn potential_ratio_finite_on_valid_tuple() {
        let g = make_grid(1, 16.0, 128, 1.0, 16).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        // (3/4 - 1/4) + (1)(1 - 1/2) = 1
        let rep = strichartz_ratio_potential(&plan, 1.0, 4.0 / 3.0, 2.0, 4.0, 9, 5).unwrap();
        assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
    }

    #[test]
    fn semigroup_ratio_unrestricted_flag_when_order_covers_dimension() {
        let g = make_grid(1, 16.0, 128, 1.0, 16).unwrap();
        let plan = SemigroupPlan::new(g, 0.75).unwrap(); // 2 alpha = 1.5 >= n = 1
        let rep = strichartz_ratio_semigroup(&plan, 1.0, 5.0, 6, 2).unwrap();
        assert!(rep.range_unrestricted);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = make_grid(1, 16.0, 64, 1.0, 8).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let a = strichartz_ratio_semigroup(&plan, 1.0, 2.0, 6, 123).unwrap();
        let b = strichartz_ratio_semigroup(&plan, 1.0, 2.0, 6, 123).unwrap();
        assert_eq!(a.ratio.to_bits(), b.ratio.to_bits());
    }
}
