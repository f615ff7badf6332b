//! Pointwise regularity experiments for the dissipative potential: regime
//! classification from the exponent balance `n/p + 2 alpha / q` against
//! `2 alpha`, exponential integrability in the critical regime, and Hoelder
//! modulus fits in the subcritical one.

use crate::error::{Error, Result};
use crate::evolve::{duhamel_field, SemigroupPlan};
use crate::fit::linear_fit;
use crate::grid::{ball_mask, Field, ParabolicBall};
use crate::norms::mixed_norm;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Supercritical,
    Critical,
    Subcritical,
}

impl std::fmt::Display for Criticality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Criticality::Supercritical => "supercritical",
            Criticality::Critical => "critical",
            Criticality::Subcritical => "subcritical",
        };
        f.write_str(s)
    }
}

/// Exponent regime of a `(n, alpha, p, q)` quadruple.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularityRegime {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    /// `n/p + 2 alpha / q - 2 alpha`.
    pub criticality: f64,
    pub class: Criticality,
}

/// Classify the quadruple. The balance is evaluated in f64; for the dyadic
/// rational exponents the experiments use, the computation is exact, and a
/// `1e-12` band absorbs representation noise otherwise.
pub fn classify(n: usize, alpha: f64, p: f64, q: f64) -> Result<RegularityRegime> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::ExponentConstraint(format!("need 1 <= p < inf, got {p}")));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::ExponentConstraint(format!("need 1 < q < inf, got {q}")));
    }
    let criticality = n as f64 / p + 2.0 * alpha / q - 2.0 * alpha;
    let class = if criticality > 1e-12 {
        Criticality::Supercritical
    } else if criticality < -1e-12 {
        Criticality::Subcritical
    } else {
        Criticality::Critical
    };
    Ok(RegularityRegime { n, alpha, p, q, criticality, class })
}

/// Result of the dyadic search for the exponential-integrability constant.
#[derive(Debug, Clone, Serialize)]
pub struct ExpIntegrabilityReport {
    pub regime: RegularityRegime,
    /// Smallest dyadic `C` with ball-average of `exp((S F / (C ||F||))^{q'})`
    /// at most `threshold`; `None` when the search ladder is exhausted.
    pub c_star: Option<f64>,
    pub mean_exp: f64,
    pub threshold: f64,
    pub ball: ParabolicBall,
}

/// Search `C in {2^k}` for the smallest constant taming the exponential
/// moment of the potential over the natural parabolic ball at `(t0, x0)`
/// (radius `t0^{1/(2 alpha)}`, so the ball spans `(0, 2 t0)` in time).
pub fn exp_integrability_check(
    regime: &RegularityRegime,
    plan: &SemigroupPlan,
    forcing: &Field,
    ball: &ParabolicBall,
    threshold: f64,
) -> Result<ExpIntegrabilityReport> {
    if regime.class != Criticality::Critical {
        return Err(Error::RegimeMismatch {
            expected: "critical".into(),
            got: regime.class.to_string(),
        });
    }
    let r_expected = ball.t_center.powf(1.0 / (2.0 * regime.alpha));
    if (ball.radius - r_expected).abs() > 1e-9 * r_expected.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius {} must equal t0^(1/(2 alpha)) = {r_expected}",
            ball.radius
        )));
    }
    let norm = mixed_norm(forcing, regime.p, regime.q)?;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "forcing must have positive finite mixed norm, got {norm}"
        )));
    }
    let mask = ball_mask(&plan.grid, ball)?;
    let potential = duhamel_field(plan, forcing)?;
    let q_conj = regime.q / (regime.q - 1.0);

    // quadrature weights restricted to the ball
    let w = plan.grid.time_weights();
    let cell = plan.grid.cell_volume();
    let mut pts = Vec::new();
    let mut measure = 0.0;
    for k in 0..plan.grid.time_len() {
        for (j, &m) in mask.slice(k).iter().enumerate() {
            if m == 1.0 {
                let wt = w[k] * cell;
                pts.push((potential.slice(k)[j], wt));
                measure += wt;
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::InvalidParameter("ball contains no grid points".into()));
    }

    let mut c_star = None;
    let mut mean_exp = f64::INFINITY;
    for k in -8..=40 {
        let c = 2.0_f64.powi(k);
        let mut acc = 0.0;
        for &(u, wt) in &pts {
            let arg = (u.max(0.0) / (c * norm)).powf(q_conj);
            if arg > 700.0 {
                acc = f64::INFINITY;
                break;
            }
            acc += wt * arg.exp();
        }
        let avg = acc / measure;
        if avg <= threshold {
            c_star = Some(c);
            mean_exp = avg;
            break;
        }
    }
    Ok(ExpIntegrabilityReport {
        regime: *regime,
        c_star,
        mean_exp,
        threshold,
        ball: *ball,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Space,
    Time,
}

/// Hoelder modulus fit of the potential around a base point.
#[derive(Debug, Clone, Serialize)]
pub struct HolderFit {
    pub regime: RegularityRegime,
    pub direction: Direction,
    pub fitted_exponent: f64,
    pub theory_exponent: f64,
    pub r_squared: f64,
    /// `(offset, |difference|)` samples entering the fit.
    pub samples: Vec<(f64, f64)>,
    /// All differences sat below the noise floor; the bound holds vacuously.
    pub vacuous: bool,
    pub pass: bool,
}

/// Log-log regression of `|S F(base + offset) - S F(base)|` against dyadic
/// offsets along one axis. Offsets live in `[2 dx, L/16]` (space) or
/// `[2 dt, T/8]` (time): below that quadrature noise dominates, above it the
/// torus geometry does. Passes when the fitted exponent reaches 85% of the
/// regime's theoretical one.
pub fn holder_fit(
    regime: &RegularityRegime,
    plan: &SemigroupPlan,
    forcing: &Field,
    base_point: (f64, [f64; 2]),
    direction: Direction,
) -> Result<HolderFit> {
    if regime.class != Criticality::Subcritical {
        return Err(Error::RegimeMismatch {
            expected: "subcritical".into(),
            got: regime.class.to_string(),
        });
    }
    let grid = plan.grid;
    let (t0, x0) = base_point;
    if !(t0 > 0.0 && t0 < grid.horizon) {
        return Err(Error::InvalidParameter(format!(
            "base time {t0} must be interior to (0, {})",
            grid.horizon
        )));
    }
    let k0 = (t0 / grid.dt()).round() as usize;
    let j0 = nearest_spatial_index(&grid, &x0);

    let smooth_gap = 2.0 * regime.alpha - regime.n as f64 / regime.p - 2.0 * regime.alpha / regime.q;
    let theory_exponent = match direction {
        Direction::Space => smooth_gap,
        Direction::Time => smooth_gap / (2.0 * regime.alpha),
    };

    let potential = duhamel_field(plan, forcing)?;
    let u0 = potential.slice(k0)[j0];

    let mut samples = Vec::new();
    match direction {
        Direction::Space => {
            let max_cells = (grid.box_len / 16.0 / grid.dx()).floor() as usize;
            let mut step = 2usize;
            while step <= max_cells.max(2) {
                // offset along the first axis, row-major layout
                let j = offset_index(&grid, j0, step);
                let diff = (potential.slice(k0)[j] - u0).abs();
                samples.push((step as f64 * grid.dx(), diff));
                step *= 2;
            }
        }
        Direction::Time => {
            let max_steps = (grid.horizon / 8.0 / grid.dt()).floor() as usize;
            let mut step = 2usize;
            while step <= max_steps.max(2) && k0 + step <= grid.steps {
                let diff = (potential.slice(k0 + step)[j0] - u0).abs();
                samples.push((step as f64 * grid.dt(), diff));
                step *= 2;
            }
        }
    }
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { need: 3, got: samples.len() });
    }

    if samples.iter().all(|&(_, d)| d < 1e-12) {
        return Ok(HolderFit {
            regime: *regime,
            direction,
            fitted_exponent: f64::INFINITY,
            theory_exponent,
            r_squared: 1.0,
            samples,
            vacuous: true,
            pass: true,
        });
    }

    let xs: Vec<f64> = samples.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, d)| d.max(1e-300).ln()).collect();
    let (slope, _, r2) = linear_fit(&xs, &ys)?;
    Ok(HolderFit {
        regime: *regime,
        direction,
        fitted_exponent: slope,
        theory_exponent,
        r_squared: r2,
        samples,
        vacuous: false,
        pass: slope >= theory_exponent * 0.85,
    })
}

fn nearest_spatial_index(grid: &crate::grid::SpaceTimeGrid, x: &[f64; 2]) -> usize {
    let to_axis = |c: f64| -> usize {
        let j = ((c + grid.box_len / 2.0) / grid.dx()).round() as i64;
        j.rem_euclid(grid.points as i64) as usize
    };
    match grid.dim {
        1 => to_axis(x[0]),
        _ => to_axis(x[0]) * grid.points + to_axis(x[1]),
    }
}

fn offset_index(grid: &crate::grid::SpaceTimeGrid, j0: usize, cells: usize) -> usize {
    match grid.dim {
        1 => (j0 + cells) % grid.points,
        _ => {
            let row = j0 / grid.points;
            let col = j0 % grid.points;
            ((row + cells) % grid.points) * grid.points + col
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, FieldKind};
    use approx::assert_relative_eq;

    #[test]
    fn classification_reference_points() {
        let r = classify(1, 0.5, 2.0, 2.0).unwrap();
        assert_eq!(r.class, Criticality::Critical);
        assert_relative_eq!(r.criticality, 0.0);

        let r = classify(1, 0.5, 4.0, 4.0).unwrap();
        assert_eq!(r.class, Criticality::Subcritical);
        assert_relative_eq!(r.criticality, -0.5);

        let r = classify(1, 0.5, 1.0, 2.0).unwrap();
        assert_eq!(r.class, Criticality::Supercritical);
        assert_relative_eq!(r.criticality, 0.5);
    }

    #[test]
    fn exp_integrability_requires_critical_regime_and_nonzero_forcing() {
        let g = make_grid(1, 8.0, 64, 1.0, 32).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let sub = classify(1, 0.5, 4.0, 4.0).unwrap();
        let ball = ParabolicBall::new(0.5, [0.0, 0.0], 0.5, 0.5).unwrap();
        let f = Field::full_from_fn(g, |_, _| 1.0);
        assert!(matches!(
            exp_integrability_check(&sub, &plan, &f, &ball, 10.0),
            Err(Error::RegimeMismatch { .. })
        ));
        let crit = classify(1, 0.5, 2.0, 2.0).unwrap();
        let zero = Field::zeros(g, FieldKind::Full);
        assert!(exp_integrability_check(&crit, &plan, &zero, &ball, 10.0).is_err());
    }

    #[test]
    fn exp_integrability_constant_is_monotone_in_threshold() {
        let g = make_grid(1, 8.0, 128, 1.0, 64).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let crit = classify(1, 0.5, 2.0, 2.0).unwrap();
        let ball = ParabolicBall::new(0.5, [0.0, 0.0], 0.5, 0.5).unwrap();
        let f = ball_mask(&g, &ParabolicBall::new(0.3, [0.5, 0.0], 0.15, 0.5).unwrap()).unwrap();
        let tight = exp_integrability_check(&crit, &plan, &f, &ball, 5.0).unwrap();
        let loose = exp_integrability_check(&crit, &plan, &f, &ball, 50.0).unwrap();
        assert!(loose.c_star.unwrap() <= tight.c_star.unwrap());
    }

    #[test]
    fn holder_fit_smooth_forcing_passes_both_directions() {
        let g = make_grid(1, 8.0, 256, 1.0, 128).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let sub = classify(1, 0.5, 4.0, 4.0).unwrap();
        let f = Field::full_from_fn(g, |t, x| {
            (-4.0 * (x[0] - 0.7) * (x[0] - 0.7) - 30.0 * (t - 0.35) * (t - 0.35)).exp()
        });
        for dir in [Direction::Space, Direction::Time] {
            let fit = holder_fit(&sub, &plan, &f, (0.75, [0.9, 0.0]), dir).unwrap();
            assert_relative_eq!(fit.theory_exponent, 0.5);
            assert!(fit.pass, "{dir:?}: fitted = {}", fit.fitted_exponent);
        }
    }

    #[test]
    fn holder_fit_constant_forcing_is_vacuous_in_space() {
        // spatially uniform potential: all spatial increments vanish
        let g = make_grid(1, 8.0, 128, 1.0, 64).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let sub = classify(1, 0.5, 4.0, 4.0).unwrap();
        let f = Field::full_from_fn(g, |_, _| 1.0);
        let fit = holder_fit(&sub, &plan, &f, (0.5, [0.0, 0.0]), Direction::Space).unwrap();
        assert!(fit.vacuous && fit.pass);
    }

    #[test]
    fn holder_fit_rough_seeded_family_passes() {
        use rand::Rng;
        let g = make_grid(1, 8.0, 256, 1.0, 128).unwrap();
        let plan = SemigroupPlan::new(g, 0.5).unwrap();
        let sub = classify(1, 0.5, 4.0, 4.0).unwrap();
        let mut rng = crate::norms::child_rng(99, 0);
        let mut f = Field::zeros(g, FieldKind::Full);
        // supports end well before the probe time so the point modulus sees
        // the smoothing, not indicator switching at quadrature scale
        for _ in 0..12 {
            let t0 = rng.gen_range(0.05..0.2);
            let x0 = rng.gen_range(-2.0..2.0);
            let r = rng.gen_range(0.05..0.2);
            let b = ParabolicBall::new(t0, [x0, 0.0], r, 0.5).unwrap();
            let m = crate::grid::ball_mask_clipped(&g, &b);
            for (a, v) in f.values_mut().iter_mut().zip(m.values()) {
                *a += v;
            }
        }
        for dir in [Direction::Space, Direction::Time] {
            let fit = holder_fit(&sub, &plan, &f, (0.75, [0.9, 0.0]), dir).unwrap();
            assert!(fit.pass, "{dir:?}: fitted = {}", fit.fitted_exponent);
        }
    }
}
