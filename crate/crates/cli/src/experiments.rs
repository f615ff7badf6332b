//! Dispatch one experiment configuration to the library drivers and collect
//! a verdict plus serializable artifacts.

use crate::config::{BallCfg, ExperimentConfig, ExperimentKind};
use fraclab::capacity::{
    axiom_suite, ball_bracket, critical_experiment, scaling_experiment, GridSpec,
};
use fraclab::evolve::{continuity_experiment, SemigroupPlan};
use fraclab::hausdorff::{
    comparison_experiment, hausdorff_content, log_gauge_experiment, CoverMethod, GaugeFn,
};
use fraclab::kernel::envelope_report;
use fraclab::norms::{strichartz_ratio_potential, strichartz_ratio_semigroup};
use fraclab::regularity::{classify, exp_integrability_check, holder_fit, Direction};
use fraclab::{Field, FieldKind, ParabolicBall, Result};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// A solver exhausted its iteration budget before certifying the target.
    NonConverged,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NonConverged => "NON-CONVERGED",
        }
    }
}

pub struct Outcome {
    pub verdict: Verdict,
    pub summary: String,
    /// Full JSON record (embeds the configuration).
    pub results_json: serde_json::Value,
    /// Tabular artifact for sweep kinds.
    pub results_csv: Option<String>,
}

fn ball(cfg: &BallCfg, alpha: f64) -> Result<ParabolicBall> {
    ParabolicBall::new(cfg.t_center, cfg.x_center, cfg.radius, alpha)
}

fn doubled(spec: &GridSpec) -> GridSpec {
    GridSpec {
        box_len: spec.box_len,
        points: spec.points * 2,
        horizon: spec.horizon,
        steps: spec.steps * 2,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let config_echo = serde_json::to_value(config)?;
    match &config.kind {
        ExperimentKind::KernelEnvelope { n, alpha, t, region_radius, grid } => {
            let coarse = envelope_report(&grid.build(*n)?, *alpha, *t, *region_radius)?;
            let fine_spec = GridSpec { points: grid.points * 2, ..*grid };
            let fine = envelope_report(&fine_spec.build(*n)?, *alpha, *t, *region_radius)?;
            let ratio_c = coarse.c_upper / coarse.c_lower;
            let ratio_f = fine.c_upper / fine.c_lower;
            let rel_change = (ratio_f - ratio_c).abs() / ratio_c;
            let pass = ratio_c.is_finite() && rel_change < 0.10;
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "envelope ratio {:.4} -> {:.4} under doubling (change {:.2}%)",
                    ratio_c,
                    ratio_f,
                    100.0 * rel_change
                ),
                results_json: json!({
                    "config": config_echo,
                    "coarse": coarse,
                    "fine": fine,
                    "ratio_change": rel_change,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::StrichartzR { n, alpha, p, p_out, trials, grid } => {
            let seed = config.seed.expect("validated");
            let plan = SemigroupPlan::new(grid.build(*n)?, *alpha)?;
            let coarse = strichartz_ratio_semigroup(&plan, *p, *p_out, *trials, seed)?;
            let plan2 = SemigroupPlan::new(doubled(grid).build(*n)?, *alpha)?;
            let fine = strichartz_ratio_semigroup(&plan2, *p, *p_out, *trials, seed)?;
            let rel_change = (fine.ratio - coarse.ratio).abs() / coarse.ratio;
            let pass = coarse.ratio.is_finite() && rel_change < 0.10;
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "semigroup ratio {:.4} -> {:.4} (change {:.2}%)",
                    coarse.ratio,
                    fine.ratio,
                    100.0 * rel_change
                ),
                results_json: json!({
                    "config": config_echo,
                    "coarse": coarse,
                    "fine": fine,
                    "ratio_change": rel_change,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::StrichartzS { n, alpha, p, q, p_out, q_out, trials, grid } => {
            let seed = config.seed.expect("validated");
            let plan = SemigroupPlan::new(grid.build(*n)?, *alpha)?;
            let coarse = strichartz_ratio_potential(&plan, *p, *q, *p_out, *q_out, *trials, seed)?;
            let plan2 = SemigroupPlan::new(doubled(grid).build(*n)?, *alpha)?;
            let fine = strichartz_ratio_potential(&plan2, *p, *q, *p_out, *q_out, *trials, seed)?;
            let rel_change = (fine.ratio - coarse.ratio).abs() / coarse.ratio;
            let pass = coarse.ratio.is_finite() && rel_change < 0.10;
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "potential ratio {:.4} -> {:.4} (change {:.2}%)",
                    coarse.ratio,
                    fine.ratio,
                    100.0 * rel_change
                ),
                results_json: json!({
                    "config": config_echo,
                    "coarse": coarse,
                    "fine": fine,
                    "ratio_change": rel_change,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::Continuity { n, alpha, t_base, offsets, grid } => {
            let g = grid.build(*n)?;
            let plan = SemigroupPlan::new(g, *alpha)?;
            let mut spike = Field::zeros(g, FieldKind::Slice);
            let mid = g.spatial_len() / 2;
            spike.values_mut()[mid] = 1.0 / g.cell_volume();
            let rep = continuity_experiment(&plan, &spike, *t_base, offsets)?;
            let monotone = rep.sup_diffs.windows(2).all(|w| w[1] < w[0]);
            let pass = monotone && (rep.fitted_slope - 1.0).abs() < 0.2;
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "modulus slope {:.3}, monotone contraction: {monotone}",
                    rep.fitted_slope
                ),
                results_json: json!({
                    "config": config_echo,
                    "report": rep,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::ExpIntegrability {
            n, alpha, p, q, t_center, forcing_ball, threshold, grid,
        } => {
            let regime = classify(*n, *alpha, *p, *q)?;
            let run_at = |spec: &GridSpec| -> Result<_> {
                let g = spec.build(*n)?;
                let plan = SemigroupPlan::new(g, *alpha)?;
                let f = fraclab::ball_mask(&g, &ball(forcing_ball, *alpha)?)?;
                let window = ParabolicBall::new(
                    *t_center,
                    [0.0, 0.0],
                    t_center.powf(1.0 / (2.0 * alpha)),
                    *alpha,
                )?;
                exp_integrability_check(&regime, &plan, &f, &window, *threshold)
            };
            let coarse = run_at(grid)?;
            let fine = run_at(&doubled(grid))?;
            let pass = match (coarse.c_star, fine.c_star) {
                (Some(a), Some(b)) => {
                    let r = if a > b { a / b } else { b / a };
                    r <= 2.0 + 1e-12 // within one dyadic step
                }
                _ => false,
            };
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "C* = {:?} -> {:?} under refinement",
                    coarse.c_star, fine.c_star
                ),
                results_json: json!({
                    "config": config_echo,
                    "coarse": coarse,
                    "fine": fine,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::Holder { n, alpha, p, q, base_t, base_x, forcing_ball, grid } => {
            let regime = classify(*n, *alpha, *p, *q)?;
            let g = grid.build(*n)?;
            let plan = SemigroupPlan::new(g, *alpha)?;
            let f = fraclab::ball_mask(&g, &ball(forcing_ball, *alpha)?)?;
            let space = holder_fit(&regime, &plan, &f, (*base_t, *base_x), Direction::Space)?;
            let time = holder_fit(&regime, &plan, &f, (*base_t, *base_x), Direction::Time)?;
            let pass = space.pass && time.pass;
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "space fit {:.3} (theory {:.3}), time fit {:.3} (theory {:.3})",
                    space.fitted_exponent,
                    space.theory_exponent,
                    time.fitted_exponent,
                    time.theory_exponent
                ),
                results_json: json!({
                    "config": config_echo,
                    "space": space,
                    "time": time,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::CapacityBracket { n, alpha, p, q, ball: b, grid, solver, rel_gap_tol } => {
            let res = ball_bracket(*n, *alpha, *p, *q, grid, &ball(b, *alpha)?, &solver.to_cfg())?;
            let weak_duality = res.dual_value <= res.primal_value + 1e-12;
            let pass = weak_duality && res.rel_gap <= *rel_gap_tol;
            let verdict = if pass {
                Verdict::Pass
            } else if !res.converged {
                Verdict::NonConverged
            } else {
                Verdict::Fail
            };
            Ok(Outcome {
                verdict,
                summary: format!(
                    "bracket [{:.6}, {:.6}], rel gap {:.2e}",
                    res.dual_value, res.primal_value, res.rel_gap
                ),
                results_json: json!({
                    "config": config_echo,
                    "result": res,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::CapacityScaling { n, alpha, p, q, radii, grid, t0_factor, solver } => {
            let rep = scaling_experiment(*n, *alpha, *p, *q, radii, grid, *t0_factor, &solver.to_cfg())?;
            let mut csv = String::from("# capacity scaling sweep\nradius,primal,dual,midpoint,rel_gap\n");
            for r in &rep.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.radius, r.primal, r.dual, r.midpoint, r.rel_gap
                ));
            }
            Ok(Outcome {
                verdict: if rep.pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "fitted exponent {:.4} vs target {:.4} (r2 = {:.4})",
                    rep.fit.fitted_exponent, rep.beta_target, rep.fit.r_squared
                ),
                results_json: json!({
                    "config": config_echo,
                    "report": rep,
                }),
                results_csv: Some(csv),
            })
        }
        ExperimentKind::CapacityCritical { n, alpha, p, q, radii, grid, t_center, solver } => {
            let rep = critical_experiment(*n, *alpha, *p, *q, radii, grid, *t_center, &solver.to_cfg())?;
            let mut csv = String::from(
                "# capacity critical sweep\nradius,primal,dual,midpoint,rel_gap,extremal_potential_ratio,extremal_norm_ratio\n",
            );
            for r in &rep.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.radius,
                    r.primal,
                    r.dual,
                    r.midpoint,
                    r.rel_gap,
                    r.extremal_potential_ratio,
                    r.extremal_norm_ratio
                ));
            }
            Ok(Outcome {
                verdict: if rep.pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "log-law exponent {:.4} vs target {:.4}; certificates stable: {}",
                    rep.fit.fitted_exponent, rep.target_exponent, rep.pass_certificate
                ),
                results_json: json!({
                    "config": config_echo,
                    "report": rep,
                }),
                results_csv: Some(csv),
            })
        }
        ExperimentKind::CapacityAxioms { n, alpha, p, q, grid, solver } => {
            let g = grid.build(*n)?;
            let plan = SemigroupPlan::new(g, *alpha)?;
            let rep = axiom_suite(&plan, *p, *q, &solver.to_cfg())?;
            Ok(Outcome {
                verdict: if rep.pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "empty: {}, monotone: {}, subadditive: {}, translation: {} ({:.1e})",
                    rep.empty_is_zero,
                    rep.monotone,
                    rep.subadditive,
                    rep.translation_invariant,
                    rep.translation_rel_diff
                ),
                results_json: json!({
                    "config": config_echo,
                    "report": rep,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::HausdorffContent { n, alpha, gauge_power, gauge_log, epsilon, ball: b, grid } => {
            let g = grid.build(*n)?;
            let gauge = match (gauge_power, gauge_log) {
                (Some(d), None) => GaugeFn::power(*d)?,
                (None, Some(gamma)) => GaugeFn::log_power(*gamma)?,
                _ => unreachable!("validated"),
            };
            let set = fraclab::capacity::CompactSet::from_ball(&g, &ball(b, *alpha)?)?;
            let cover = hausdorff_content(&set, *alpha, &gauge, *epsilon, CoverMethod::Best)?;
            let lower_ok = cover
                .volume_lower_bound
                .map_or(true, |lb| lb <= cover.value * (1.0 + 1e-9));
            let pass = cover.value.is_finite() && lower_ok;
            Ok(Outcome {
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "content <= {:.6} with {} balls (volume bound {:?})",
                    cover.value,
                    cover.balls.len(),
                    cover.volume_lower_bound
                ),
                results_json: json!({
                    "config": config_echo,
                    "cover": cover,
                    "pass": pass,
                }),
                results_csv: None,
            })
        }
        ExperimentKind::Comparison {
            n, alpha, p, q, p_out, q_out, shrinks, grid, interval_len, box_side, solver,
        } => {
            let rep = comparison_experiment(
                *n, *alpha, *p, *q, *p_out, *q_out, shrinks, grid, *interval_len, *box_side,
                &solver.to_cfg(),
            )?;
            let mut csv = String::from(
                "# comparison chain sweep\nshrink,lebesgue_term,capacity_lower,capacity_upper,content\n",
            );
            for r in &rep.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.shrink, r.lebesgue_term, r.capacity_lower, r.capacity_upper, r.content
                ));
            }
            Ok(Outcome {
                verdict: if rep.pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!(
                    "slopes: lebesgue {:.3}, capacity {:.3}, content {:.3} (target {:.3})",
                    rep.lebesgue_slope, rep.capacity_slope, rep.content_slope, rep.beta
                ),
                results_json: json!({
                    "config": config_echo,
                    "report": rep,
                }),
                results_csv: Some(csv),
            })
        }
        ExperimentKind::LogGauge { n, alpha, p, q, radii, grid, t_center, solver } => {
            let rep = log_gauge_experiment(*n, *alpha, *p, *q, radii, grid, *t_center, &solver.to_cfg())?;
            let mut csv = String::from("# log-gauge comparison\nradius,capacity_mid,content,ratio\n");
            for r in &rep.rows {
                csv.push_str(&format!("{},{},{},{}\n", r.radius, r.capacity_mid, r.content, r.ratio));
            }
            Ok(Outcome {
                verdict: if rep.pass { Verdict::Pass } else { Verdict::Fail },
                summary: format!("capacity/content ratio bounded: max {:.4}", rep.max_ratio),
                results_json: json!({
                    "config": config_echo,
                    "report": rep,
                }),
                results_csv: Some(csv),
            })
        }
    }
}
