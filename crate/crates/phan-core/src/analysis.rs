//! Post-processing of trajectories: limit classification, decay-rate fits
//! and thickness sweeps across the planar/hybrid transition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::node_h1_norm;
use crate::eigen::linearized_spectrum_at_zero;
use crate::equilibrium::{monotone_iterate, Branch, EquilibriumProfile};
use crate::error::{PhanError, Result};
use crate::field::AngleField;
use crate::flow::{ramp_profile, run, FlowState, RunSettings, RunStatus, Trajectory};
use crate::grid::Grid;
use crate::params::{critical_thickness, validate_params, PhysParams};
use crate::tol::{MONOTONE_TOL, TOL_CONV};

pub const MIN_FIT_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    Exponential,
    Algebraic,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub kind: DecayKind,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    /// r^2 of the selected model (the larger of the two when inconclusive).
    pub r_squared: f64,
    pub window: (f64, f64),
}

struct LineFit {
    slope: f64,
    r_squared: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return LineFit {
            slope: 0.0,
            r_squared: 0.0,
        };
    }
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit { slope, r_squared }
}

/// Fits `y ~ e^{-kappa t}` and `y ~ (1+t)^{-alpha}` on the trailing
/// `window_fraction` of the samples.
///
/// The exponential model is reported only with `r^2 >= 0.99` and
/// `kappa > 0`; the algebraic one when it fits better than the exponential,
/// with `r^2 >= 0.9` and `alpha > 0`. Anything else is inconclusive.
pub fn fit_decay(series: &[(f64, f64)], window_fraction: f64) -> Result<DecayFit> {
    if series.len() < MIN_FIT_SAMPLES {
        return Err(PhanError::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: series.len(),
        });
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(PhanError::InvalidInput(format!(
            "window fraction {window_fraction} not in (0, 1]"
        )));
    }
    if let Some((index, &(_, value))) = series
        .iter()
        .enumerate()
        .find(|(_, (_, y))| !(*y > 0.0 && y.is_finite()))
    {
        return Err(PhanError::NonPositiveSeries { index, value });
    }
    let take = ((series.len() as f64 * window_fraction).ceil() as usize).clamp(3, series.len());
    let tail = &series[series.len() - take..];
    let t: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let log_t: Vec<f64> = tail.iter().map(|p| (1.0 + p.0).ln()).collect();
    let log_y: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let exp = least_squares(&t, &log_y);
    let alg = least_squares(&log_t, &log_y);
    let window = (t[0], t[t.len() - 1]);

    let (kappa, alpha) = (-exp.slope, -alg.slope);
    let fit = if exp.r_squared >= alg.r_squared && exp.r_squared >= 0.99 && kappa > 0.0 {
        DecayFit {
            kind: DecayKind::Exponential,
            kappa: Some(kappa),
            alpha: None,
            r_squared: exp.r_squared,
            window,
        }
    } else if alg.r_squared > exp.r_squared && alg.r_squared >= 0.9 && alpha > 0.0 {
        DecayFit {
            kind: DecayKind::Algebraic,
            kappa: None,
            alpha: Some(alpha),
            r_squared: alg.r_squared,
            window,
        }
    } else {
        DecayFit {
            kind: DecayKind::Inconclusive,
            kappa: None,
            alpha: None,
            r_squared: exp.r_squared.max(alg.r_squared),
            window,
        }
    };
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitClass {
    /// Planar: the trivial state `phi = 0`.
    P,
    /// Hybrid aligned: the positive least-energy equilibrium.
    #[serde(rename = "HAN")]
    Han,
    #[serde(rename = "ambiguous")]
    Ambiguous,
}

/// H1 distance of the final angle field to a 1D profile, extended
/// tangentially.
pub fn distance_to_profile(state: &FlowState, star: &EquilibriumProfile) -> Result<f64> {
    let g = state.grid();
    let ext = AngleField::from_profile(g, star.params.l_h, &star.profile)?;
    let diff: Vec<f64> = state
        .phi
        .values
        .iter()
        .zip(&ext.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(node_h1_norm(g, &diff))
}

/// P when the final state is within `tol` of zero, HAN when it is within
/// `tol` of `phi_star` and at least `10 tol` from zero.
pub fn classify_limit(
    trajectory: &Trajectory,
    phi_star: Option<&EquilibriumProfile>,
    tol: f64,
) -> Result<LimitClass> {
    if trajectory.status != RunStatus::Converged {
        return Err(PhanError::NotConverged);
    }
    let state = &trajectory.final_state;
    let dist0 = node_h1_norm(state.grid(), &state.phi.values);
    if dist0 < tol {
        return Ok(LimitClass::P);
    }
    if let Some(star) = phi_star {
        if distance_to_profile(state, star)? < tol && dist0 > 10.0 * tol {
            return Ok(LimitClass::Han);
        }
    }
    Ok(LimitClass::Ambiguous)
}

/// Thickness interval between the last planar and the first hybrid run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bracket {
    pub fn contains(&self, d: f64) -> bool {
        self.lower.is_none_or(|lo| lo <= d) && self.upper.is_none_or(|hi| d <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub d_values: Vec<f64>,
    pub classifications: Vec<LimitClass>,
    pub d_transition_empirical: Bracket,
    pub d_c_theory: f64,
    pub kappa_by_d: Vec<Option<f64>>,
}

impl TransitionReport {
    /// Number of P/HAN alternations, ignoring ambiguous entries.
    pub fn switch_count(&self) -> usize {
        let decided: Vec<_> = self
            .classifications
            .iter()
            .filter(|c| **c != LimitClass::Ambiguous)
            .collect();
        decided.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// First thickness at which the single-switch structure breaks.
    pub fn offending_d(&self) -> Option<f64> {
        let mut seen_han = false;
        for (d, c) in self.d_values.iter().zip(&self.classifications) {
            match c {
                LimitClass::Han => seen_han = true,
                LimitClass::P if seen_han => return Some(*d),
                _ => {}
            }
        }
        None
    }

    pub fn ambiguous_d(&self) -> Vec<f64> {
        self.d_values
            .iter()
            .zip(&self.classifications)
            .filter(|(_, c)| **c == LimitClass::Ambiguous)
            .map(|(d, _)| *d)
            .collect()
    }
}

/// Settings shared by every pipeline of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_normal: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub tol_conv: f64,
    /// Distance threshold of [`classify_limit`].
    pub tol_class: f64,
    /// Initial tilt `phi0 = amplitude (d - x3)/d`.
    pub amplitude: f64,
    pub window_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_normal: 128,
            dt: 1e-3,
            t_end: 5000.0,
            sample_every: 100,
            tol_conv: TOL_CONV,
            tol_class: 1e-4,
            amplitude: 0.1,
            window_fraction: 0.5,
        }
    }
}

/// Everything one sweep pipeline produced.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub d: f64,
    pub candidate: Option<EquilibriumProfile>,
    pub trajectory: Trajectory,
    pub class: LimitClass,
    pub fit: Option<DecayFit>,
}

/// Distance of every sample to the classified limit (plus `|u|`), the
/// quantity whose decay is fitted.
pub fn decay_series(traj: &Trajectory, class: LimitClass) -> Vec<(f64, f64)> {
    traj.samples
        .iter()
        .filter_map(|s| {
            let dist = match class {
                LimitClass::P => Some(s.dist_to_zero),
                LimitClass::Han => s.dist_to_star,
                LimitClass::Ambiguous => None,
            }?;
            Some((s.t, dist + s.u_l2))
        })
        .filter(|&(_, y)| y > 0.0)
        .collect()
}

fn sweep_one(base: &PhysParams, d: f64, cfg: &SweepConfig) -> Result<SweepRun> {
    let params = validate_params(base.h, base.l_h, d)?;
    let grid = Grid::line(d, cfg.n_normal)?;
    let candidate = match monotone_iterate(&params, &grid, MONOTONE_TOL) {
        Ok((eq, _)) if eq.branch == Branch::Positive => Some(eq),
        Ok(_) | Err(PhanError::AmbiguousLimit { .. }) => None,
        Err(e) => return Err(e),
    };
    let phi0 = AngleField::from_profile(
        &grid,
        params.l_h,
        &ramp_profile(d, cfg.n_normal, cfg.amplitude),
    )?;
    let settings = RunSettings {
        dt: cfg.dt,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
        tol_conv: cfg.tol_conv,
    };
    let trajectory = run(
        &FlowState::at_rest(phi0),
        &params,
        &settings,
        candidate.as_ref().map(|c| &c.profile),
    )?;
    let class = match classify_limit(&trajectory, candidate.as_ref(), cfg.tol_class) {
        Ok(c) => c,
        Err(PhanError::NotConverged) => LimitClass::Ambiguous,
        Err(e) => return Err(e),
    };
    let fit = fit_decay(&decay_series(&trajectory, class), cfg.window_fraction).ok();
    Ok(SweepRun {
        d,
        candidate,
        trajectory,
        class,
        fit,
    })
}

/// Runs one full pipeline per thickness, in parallel, and collects the
/// runs alongside the report.
pub fn phan_sweep_runs(
    params_base: &PhysParams,
    d_values: &[f64],
    cfg: &SweepConfig,
) -> Result<(TransitionReport, Vec<SweepRun>)> {
    validate_params(params_base.h, params_base.l_h, 1.0)?;
    if d_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PhanError::InvalidInput(
            "thickness list must be strictly increasing".into(),
        ));
    }
    let runs: Vec<SweepRun> = d_values
        .par_iter()
        .map(|&d| sweep_one(params_base, d, cfg))
        .collect::<Result<_>>()?;
    let classifications: Vec<LimitClass> = runs.iter().map(|r| r.class).collect();
    let lower = runs
        .iter()
        .filter(|r| r.class == LimitClass::P)
        .map(|r| r.d)
        .next_back();
    let upper = runs
        .iter()
        .find(|r| r.class == LimitClass::Han)
        .map(|r| r.d);
    let report = TransitionReport {
        d_values: d_values.to_vec(),
        classifications,
        d_transition_empirical: Bracket { lower, upper },
        d_c_theory: critical_thickness(params_base.h, params_base.l_h),
        kappa_by_d: runs
            .iter()
            .map(|r| r.fit.as_ref().and_then(|f| f.kappa))
            .collect(),
    };
    Ok((report, runs))
}

pub fn phan_sweep(
    params_base: &PhysParams,
    d_values: &[f64],
    cfg: &SweepConfig,
) -> Result<TransitionReport> {
    phan_sweep_runs(params_base, d_values, cfg).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub kappa_fitted: f64,
    pub nu1: f64,
    pub relative_gap: f64,
}

/// Fitted decay rate of a small 1D flow below threshold against the
/// principal eigenvalue of the linearization at zero on the same grid.
pub fn rate_vs_spectrum(params: &PhysParams, cfg: &SweepConfig) -> Result<RateComparison> {
    if params.d >= params.d_c {
        return Err(PhanError::InvalidInput(
            "rate comparison needs d below the critical thickness".into(),
        ));
    }
    let grid = Grid::line(params.d, cfg.n_normal)?;
    let phi0 = AngleField::from_profile(
        &grid,
        params.l_h,
        &ramp_profile(params.d, cfg.n_normal, cfg.amplitude),
    )?;
    let settings = RunSettings {
        dt: cfg.dt,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
        tol_conv: cfg.tol_conv,
    };
    let traj = run(&FlowState::at_rest(phi0), params, &settings, None)?;
    let fit = fit_decay(&decay_series(&traj, LimitClass::P), cfg.window_fraction)?;
    let kappa_fitted = fit
        .kappa
        .ok_or_else(|| PhanError::InvalidInput("decay is not exponential".into()))?;
    let nu1 = linearized_spectrum_at_zero(params, &grid)?
        .nu1
        .ok_or(PhanError::NoConvergence { iterations: 0 })?;
    Ok(RateComparison {
        kappa_fitted,
        nu1,
        relative_gap: (kappa_fitted - nu1).abs() / nu1.abs(),
    })
}
