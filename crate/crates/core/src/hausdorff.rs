//! Parabolic Hausdorff content by covering search, and the comparison
//! experiments linking Lebesgue measure, capacity, and content.
//!
//! The infimum over covers is intractable exactly; the module produces
//! certified upper bounds (single-ball, dyadic-grid, and greedy covers whose
//! coverage is verified point by point) and pairs them with the elementary
//! volume lower bound for power gauges. All downstream assertions are
//! slope-based, so two-sided control up to constants is enough.

use crate::capacity::{capacity_bracket, CompactSet, GridSpec, SolverCfg};
use crate::error::{Error, Result};
use crate::evolve::SemigroupPlan;
use crate::fit::linear_fit;
use crate::grid::{ParabolicBall, SpaceTimeGrid};
use crate::regularity::{classify, Criticality};
use serde::Serialize;

/// Gauge function for the content: either a power `r^d` or the logarithmic
/// gauge `(ln_+ 1/r)^{-gamma}` (infinite at `r >= 1`, consistent with the
/// positive-part logarithm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeFn {
    Power { d: f64 },
    LogPower { gamma: f64 },
}

impl GaugeFn {
    pub fn power(d: f64) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::InvalidParameter(format!("power gauge needs d > 0, got {d}")));
        }
        Ok(GaugeFn::Power { d })
    }

    pub fn log_power(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("log gauge needs gamma > 0, got {gamma}")));
        }
        Ok(GaugeFn::LogPower { gamma })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            GaugeFn::Power { d } => r.powf(d),
            GaugeFn::LogPower { gamma } => {
                if r >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 / r).ln().powf(-gamma)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMethod {
    SingleBall,
    DyadicGrid,
    Greedy,
    /// Best value among the three.
    Best,
}

/// A verified cover of a grid set by parabolic balls, with its gauge sum.
#[derive(Debug, Clone, Serialize)]
pub struct CoverResult {
    pub set_descriptor: String,
    pub epsilon: f64,
    pub gauge: GaugeFn,
    pub method: CoverMethod,
    pub balls: Vec<ParabolicBall>,
    /// `sum_j gauge(r_j)`: certified upper bound for the content.
    pub value: f64,
    /// Elementary volume lower bound (power gauges only): any cover's gauge
    /// sum is at least `(vol(K) / 2^{1+n})^{d/(n + 2 alpha)}` when `d <= n + 2 alpha`.
    pub volume_lower_bound: Option<f64>,
}

/// Largest of cell width and step duration in the parabolic metric: balls
/// below this radius cannot capture even one cell.
pub fn parabolic_resolution(grid: &SpaceTimeGrid, alpha: f64) -> f64 {
    grid.dx().max(grid.dt().powf(1.0 / (2.0 * alpha)))
}

/// Upper-bound the content `inf { sum gauge(r_j) }` over covers of the set by
/// parabolic balls of radius below `epsilon`.
pub fn hausdorff_content(
    set: &CompactSet,
    alpha: f64,
    gauge: &GaugeFn,
    epsilon: f64,
    method: CoverMethod,
) -> Result<CoverResult> {
    let grid = set.grid;
    if set.is_empty() {
        return Ok(CoverResult {
            set_descriptor: set.descriptor().to_string(),
            epsilon,
            gauge: *gauge,
            method,
            balls: Vec::new(),
            value: 0.0,
            volume_lower_bound: Some(0.0),
        });
    }
    let resolution = parabolic_resolution(&grid, alpha);
    if epsilon <= resolution {
        return Err(Error::EpsilonBelowResolution { epsilon, resolution });
    }

    let candidates: Vec<(CoverMethod, Vec<ParabolicBall>)> = match method {
        CoverMethod::SingleBall => single_ball_cover(set, alpha, epsilon).into_iter().collect(),
        CoverMethod::DyadicGrid => best_tiling_cover(set, alpha, gauge, epsilon, false).into_iter().collect(),
        CoverMethod::Greedy => best_tiling_cover(set, alpha, gauge, epsilon, true).into_iter().collect(),
        CoverMethod::Best => {
            let mut all = Vec::new();
            all.extend(single_ball_cover(set, alpha, epsilon));
            all.extend(best_tiling_cover(set, alpha, gauge, epsilon, false));
            all.extend(best_tiling_cover(set, alpha, gauge, epsilon, true));
            all
        }
    };
    let mut best: Option<(CoverMethod, Vec<ParabolicBall>, f64)> = None;
    for (m, balls) in candidates {
        let value: f64 = balls.iter().map(|b| gauge.eval(b.radius)).sum();
        if best.as_ref().map_or(true, |(_, _, v)| value < *v) {
            best = Some((m, balls, value));
        }
    }
    let (method_used, balls, value) = best.ok_or_else(|| {
        Error::InvalidParameter("no admissible cover below epsilon; enlarge epsilon".into())
    })?;
    debug_assert!(verify_cover(set, &balls), "constructed cover must cover the set");

    let volume_lower_bound = match gauge {
        GaugeFn::Power { d } => {
            let n = grid.dim as f64;
            if *d <= n + 2.0 * alpha {
                let w = grid.time_weights();
                let cell = grid.cell_volume();
                let vol: f64 = set.points().iter().map(|&(k, _)| w[k] * cell).sum();
                Some((vol / 2.0_f64.powf(1.0 + n)).powf(d / (n + 2.0 * alpha)))
            } else {
                None
            }
        }
        GaugeFn::LogPower { .. } => None,
    };

    Ok(CoverResult {
        set_descriptor: set.descriptor().to_string(),
        epsilon,
        gauge: *gauge,
        method: method_used,
        balls,
        value,
        volume_lower_bound,
    })
}

/// Every grid point of the set lies in some ball of the list.
pub fn verify_cover(set: &CompactSet, balls: &[ParabolicBall]) -> bool {
    let grid = set.grid;
    set.points().iter().all(|&(k, j)| {
        let t = grid.time(k);
        let x = grid.coords(j);
        balls.iter().any(|b| b.contains(t, x, grid.dim))
    })
}

/// One ball circumscribing the whole set, when admissible below epsilon.
fn single_ball_cover(
    set: &CompactSet,
    alpha: f64,
    epsilon: f64,
) -> Option<(CoverMethod, Vec<ParabolicBall>)> {
    let grid = set.grid;
    let pts = set.points();
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    let mut x_min = [f64::INFINITY; 2];
    let mut x_max = [f64::NEG_INFINITY; 2];
    for &(k, j) in pts {
        let t = grid.time(k);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
        let x = grid.coords(j);
        for d in 0..grid.dim {
            x_min[d] = x_min[d].min(x[d]);
            x_max[d] = x_max[d].max(x[d]);
        }
    }
    let t_half = 0.5 * (t_max - t_min);
    let mut x_rad2 = 0.0;
    for d in 0..grid.dim {
        let h = 0.5 * (x_max[d] - x_min[d]);
        x_rad2 += h * h;
    }
    let r_space = x_rad2.sqrt();
    let r_time = t_half.powf(1.0 / (2.0 * alpha));
    let r = (r_space.max(r_time) * (1.0 + 1e-9)).max(1e-300);
    if r >= epsilon {
        return None;
    }
    let mut center = [0.0, 0.0];
    for d in 0..grid.dim {
        center[d] = 0.5 * (x_min[d] + x_max[d]);
    }
    let ball = ParabolicBall::new(0.5 * (t_min + t_max), center, r, alpha).ok()?;
    Some((CoverMethod::SingleBall, vec![ball]))
}

/// Tile space-time by parabolic boxes of shape `2 rho^{2 alpha} x (2 rho)^n`
/// anchored at the set's bounding corner, at each admissible dyadic scale;
/// optionally refine by greedy most-uncovered-first selection. Returns the
/// cheapest scale's cover.
fn best_tiling_cover(
    set: &CompactSet,
    alpha: f64,
    gauge: &GaugeFn,
    epsilon: f64,
    greedy: bool,
) -> Option<(CoverMethod, Vec<ParabolicBall>)> {
    let grid = set.grid;
    let resolution = parabolic_resolution(&grid, alpha);
    let mut best: Option<(f64, Vec<ParabolicBall>)> = None;
    let mut rho = epsilon / 2.0;
    while rho > resolution / 2.0 {
        if let Some(balls) = tiling_cover_at_scale(set, alpha, rho, greedy) {
            let value: f64 = balls.iter().map(|b| gauge.eval(b.radius)).sum();
            if best.as_ref().map_or(true, |(v, _)| value < *v) {
                best = Some((value, balls));
            }
        }
        rho /= 2.0;
    }
    best.map(|(_, balls)| {
        (
            if greedy { CoverMethod::Greedy } else { CoverMethod::DyadicGrid },
            balls,
        )
    })
}

fn tiling_cover_at_scale(
    set: &CompactSet,
    alpha: f64,
    rho: f64,
    greedy: bool,
) -> Option<Vec<ParabolicBall>> {
    let grid = set.grid;
    let pts = set.points();
    // anchor at the bounding corner, shifted half a cell so strict
    // inequalities in the membership predicate cannot exclude boundary points
    let t_anchor = pts.iter().map(|&(k, _)| grid.time(k)).fold(f64::INFINITY, f64::min) - 0.25 * grid.dt();
    let mut x_anchor = [f64::INFINITY; 2];
    for &(_, j) in pts {
        let x = grid.coords(j);
        for d in 0..grid.dim {
            x_anchor[d] = x_anchor[d].min(x[d]);
        }
    }
    for a in x_anchor.iter_mut().take(grid.dim) {
        *a -= 0.25 * grid.dx();
    }

    let t_ext = 2.0 * rho.powf(2.0 * alpha);
    // inscribe the spatial box of the tile: side 2 rho / sqrt(n) fits in the ball
    let x_ext = 2.0 * rho / (grid.dim as f64).sqrt() * 0.999;

    // tile index per point
    let mut tiles: std::collections::BTreeMap<(i64, i64, i64), Vec<usize>> = Default::default();
    for (idx, &(k, j)) in pts.iter().enumerate() {
        let t = grid.time(k);
        let x = grid.coords(j);
        let it = ((t - t_anchor) / t_ext).floor() as i64;
        let i0 = ((x[0] - x_anchor[0]) / x_ext).floor() as i64;
        let i1 = if grid.dim == 2 {
            ((x[1] - x_anchor[1]) / x_ext).floor() as i64
        } else {
            0
        };
        tiles.entry((it, i0, i1)).or_default().push(idx);
    }

    let make_ball = |key: &(i64, i64, i64)| -> ParabolicBall {
        let (it, i0, i1) = *key;
        let t_c = t_anchor + (it as f64 + 0.5) * t_ext;
        let mut x_c = [0.0, 0.0];
        x_c[0] = x_anchor[0] + (i0 as f64 + 0.5) * x_ext;
        if grid.dim == 2 {
            x_c[1] = x_anchor[1] + (i1 as f64 + 0.5) * x_ext;
        }
        ParabolicBall::new(t_c.max(0.5 * rho.powf(2.0 * alpha)), x_c, rho, alpha)
            .expect("tile radius positive")
    };

    if !greedy {
        return Some(tiles.keys().map(make_ball).collect());
    }

    // greedy most-uncovered-first over the tile candidates
    let mut covered = vec![false; pts.len()];
    let mut remaining: Vec<(&(i64, i64, i64), Vec<usize>)> =
        tiles.iter().map(|(k, v)| (k, v.clone())).collect();
    let mut balls = Vec::new();
    let mut uncovered = pts.len();
    while uncovered > 0 {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, (_, members))| (i, members.iter().filter(|&&m| !covered[m]).count()))
            .max_by_key(|&(i, c)| (c, usize::MAX - i))?;
        let (key, members) = remaining.swap_remove(pos);
        let mut gained = 0;
        for &m in &members {
            if !covered[m] {
                covered[m] = true;
                gained += 1;
            }
        }
        if gained == 0 {
            continue;
        }
        uncovered -= gained;
        balls.push(make_ball(key));
    }
    Some(balls)
}

/// Rows of the three-way comparison across a dyadic shrink ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub shrink: f64,
    pub lebesgue_term: f64,
    pub capacity_lower: f64,
    pub capacity_upper: f64,
    pub content: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub beta: f64,
    pub rows: Vec<ComparisonRow>,
    pub lebesgue_slope: f64,
    pub capacity_slope: f64,
    pub content_slope: f64,
    pub max_slope_spread: f64,
    pub pass: bool,
}

/// Shrink a time-interval times spatial-box product set parabolically and
/// compare the scaling of: the Lebesgue product term, the capacity bracket,
/// and the power-gauge content. The three slopes agree (within 15%) with the
/// common exponent `beta = (p ^ q)(n/p + 2 alpha/q - 2 alpha)` fixed by the
/// exponent relation of the underlying estimates.
#[allow(clippy::too_many_arguments)]
pub fn comparison_experiment(
    n: usize,
    alpha: f64,
    p: f64,
    q: f64,
    p_out: f64,
    q_out: f64,
    shrinks: &[f64],
    base: &GridSpec,
    interval_len: f64,
    box_side: f64,
    cfg: &SolverCfg,
) -> Result<ComparisonReport> {
    let regime = classify(n, alpha, p, q)?;
    let beta = p.min(q) * regime.criticality;
    if !(beta > 0.0) {
        return Err(Error::ExponentConstraint(format!(
            "the comparison needs beta > 0, got beta = {beta}"
        )));
    }
    if !(p < p_out && q < q_out && q_out.is_finite()) {
        return Err(Error::ExponentConstraint(
            "the comparison needs p < p_out and q < q_out < inf".into(),
        ));
    }
    let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
    let residual = (inv(q) - inv(q_out)) + (n as f64 / (2.0 * alpha)) * (inv(p) - inv(p_out)) - 1.0;
    if residual.abs() > 1e-9 {
        return Err(Error::ScalingRelation { residual });
    }
    if shrinks.len() < 3 {
        return Err(Error::TooFewSamples { need: 3, got: shrinks.len() });
    }

    let pq = p.min(q);
    let mut rows = Vec::with_capacity(shrinks.len());
    for &s in shrinks {
        let spec = base.rescaled(s, alpha);
        let grid = spec.build(n)?;
        let plan = SemigroupPlan::new(grid, alpha)?;
        let s2a = s.powf(2.0 * alpha);

        // product set: time interval x spatial box, centered
        let t_len = interval_len * s2a;
        let t_mid = 0.5 * spec.horizon;
        let side = box_side * s;
        let mask = crate::grid::Field::full_from_fn(grid, |t, x| {
            let in_t = (t - t_mid).abs() < 0.5 * t_len && t > 0.0;
            let in_x = (0..grid.dim).all(|d| x[d].abs() < 0.5 * side);
            if in_t && in_x {
                1.0
            } else {
                0.0
            }
        });
        let set = CompactSet::from_mask(&mask)?
            .with_descriptor(format!("interval x box at shrink {s}"));
        if set.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "product set empty at shrink {s}; refine the base grid"
            )));
        }

        let lebesgue_term = t_len.powf(pq / q_out) * side.powf(n as f64 * pq / p_out);
        let res = capacity_bracket(&set, p, q, &plan, cfg)?;
        let gauge = GaugeFn::power(beta)?;
        // admissible scale: a fixed multiple of the set's own parabolic size
        let eps = 4.0 * (side.max(t_len.powf(1.0 / (2.0 * alpha)))).max(parabolic_resolution(&grid, alpha) * 4.0);
        let cover = hausdorff_content(&set, alpha, &gauge, eps, CoverMethod::Best)?;
        rows.push(ComparisonRow {
            shrink: s,
            lebesgue_term,
            capacity_lower: res.dual_value,
            capacity_upper: res.primal_value,
            content: cover.value,
        });
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.shrink.ln()).collect();
    let slope = |f: &dyn Fn(&ComparisonRow) -> f64| -> Result<f64> {
        let ys: Vec<f64> = rows.iter().map(|r| f(r).max(1e-300).ln()).collect();
        Ok(linear_fit(&xs, &ys)?.0)
    };
    let lebesgue_slope = slope(&|r| r.lebesgue_term)?;
    let capacity_slope = slope(&|r| 0.5 * (r.capacity_lower + r.capacity_upper))?;
    let content_slope = slope(&|r| r.content)?;
    let slopes = [lebesgue_slope, capacity_slope, content_slope];
    let max_slope_spread = slopes
        .iter()
        .map(|a| (a - beta).abs() / beta)
        .fold(0.0_f64, f64::max);
    Ok(ComparisonReport {
        beta,
        rows,
        lebesgue_slope,
        capacity_slope,
        content_slope,
        max_slope_spread,
        pass: max_slope_spread <= 0.15,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LogGaugeRow {
    pub radius: f64,
    pub capacity_mid: f64,
    pub content: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogGaugeReport {
    pub gamma: f64,
    pub rows: Vec<LogGaugeRow>,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Critical-regime comparison of the capacity of shrinking balls against the
/// log-gauge content `gamma = (p ^ q)(1 - 1/q)`; the ratio stays bounded
/// across at least three dyadic orders.
pub fn log_gauge_experiment(
    n: usize,
    alpha: f64,
    p: f64,
    q: f64,
    radii: &[f64],
    spec: &GridSpec,
    t_center: f64,
    cfg: &SolverCfg,
) -> Result<LogGaugeReport> {
    let regime = classify(n, alpha, p, q)?;
    if regime.class != Criticality::Critical {
        return Err(Error::RegimeMismatch {
            expected: "critical".into(),
            got: regime.class.to_string(),
        });
    }
    if radii.len() < 3 || radii.first().unwrap() / radii.last().unwrap() < 7.99 {
        return Err(Error::InvalidParameter(
            "the log-gauge comparison needs radii spanning at least three dyadic orders".into(),
        ));
    }
    let gamma = p.min(q) * (1.0 - 1.0 / q);
    let gauge = GaugeFn::log_power(gamma)?;
    let grid = spec.build(n)?;
    let plan = SemigroupPlan::new(grid, alpha)?;

    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball = ParabolicBall::new(t_center, [0.0, 0.0], r, alpha)?;
        let set = CompactSet::from_ball(&grid, &ball)?;
        if set.is_empty() {
            return Err(Error::InvalidParameter(format!("radius {r} below resolution")));
        }
        let res = capacity_bracket(&set, p, q, &plan, cfg)?;
        let cover = hausdorff_content(&set, alpha, &gauge, 4.0 * r, CoverMethod::Best)?;
        let capacity_mid = 0.5 * (res.primal_value + res.dual_value);
        rows.push(LogGaugeRow {
            radius: r,
            capacity_mid,
            content: cover.value,
            ratio: capacity_mid / cover.value,
        });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0_f64, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    // bounded-above in slope form: the ratio ladder does not blow up
    let pass = max_ratio.is_finite() && max_ratio / min_ratio <= 4.0;
    Ok(LogGaugeReport { gamma, rows, max_ratio, pass })
}

/// Exponent identity behind the comparison chain: when the product set
/// shrinks parabolically, the Lebesgue term scales with exactly
/// `(p ^ q)(2 alpha / q_out + n / p_out) = beta`. Pure arithmetic.
pub fn comparison_exponent_identity(n: usize, alpha: f64, p: f64, q: f64, p_out: f64, q_out: f64) -> (f64, f64) {
    let pq = p.min(q);
    let lhs = pq * (2.0 * alpha / q_out + n as f64 / p_out);
    let beta = pq * (n as f64 / p + 2.0 * alpha / q - 2.0 * alpha);
    (lhs, beta)
}
