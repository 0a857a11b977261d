//! Parameter sweeps over L, a, Omega, and the maximum harvesting-achievable
//! separation L_max: the outermost L at which |X| - P changes sign from
//! positive to non-positive, located by a geometric coarse scan and refined
//! by bisection.

use crate::kernels::{PhysicalConfig, Scenario};
use crate::observables::{
    self, evaluate, x_nonlocal, x_rest, ObservableError, ObservableRecord, Tolerances,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RangeError {
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("invalid sweep: {0}")]
    BadSpec(&'static str),
    #[error("no entanglement anywhere in (0, {0}]: |X| - P < 0 across the scan")]
    NoEntanglement(f64),
    #[error("|X| - P still positive at L = {0}; raise l_hi")]
    BracketEscape(f64),
}

/// Which configuration field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VaryParam {
    ASigma,
    OmegaSigma,
    LSigma,
}

/// A uniform inclusive grid over one parameter with the other two fixed.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub vary: VaryParam,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    /// Values of the two non-varied fields (the varied one is ignored).
    pub fixed: PhysicalConfig,
    pub tol: f64,
}

impl SweepSpec {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn config_at(&self, value: f64) -> PhysicalConfig {
        let mut cfg = self.fixed;
        match self.vary {
            VaryParam::ASigma => cfg.a_sigma = value,
            VaryParam::OmegaSigma => cfg.omega_sigma = value,
            VaryParam::LSigma => cfg.l_sigma = value,
        }
        cfg
    }

    fn validate(&self) -> Result<(), RangeError> {
        if !(self.from < self.to) {
            return Err(RangeError::BadSpec("from must be < to"));
        }
        if self.points < 2 {
            return Err(RangeError::BadSpec("points must be >= 2"));
        }
        if !(self.tol > 0.0) {
            return Err(RangeError::BadSpec("tol must be > 0"));
        }
        Ok(())
    }
}

/// One record per grid point, in grid order. Points are evaluated
/// concurrently; individual non-convergence is carried in the record flag
/// rather than aborting the sweep.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<ObservableRecord>, RangeError> {
    spec.validate()?;
    let tols = Tolerances::from_target(spec.tol);
    let grid = spec.grid();
    let results: Result<Vec<ObservableRecord>, ObservableError> = grid
        .par_iter()
        .map(|&v| evaluate(spec.scenario, &spec.config_at(v), &tols))
        .collect();
    Ok(results?)
}

/// Refined harvesting boundary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RangeResult {
    pub l_max_sigma: f64,
    /// Half-width of the final bisection bracket; concurrence is positive at
    /// l_max - bracket_width and zero at l_max + bracket_width.
    pub bracket_width: f64,
    pub evaluations: usize,
}

const SCAN_FLOOR: usize = 80;
const SCAN_CEIL: usize = 640;
const BRACKET_TARGET: f64 = 1e-4;

struct BoundaryProblem {
    scenario: Scenario,
    a_sigma: f64,
    omega_sigma: f64,
    p: f64,
    p_err: f64,
    tol_user: f64,
    evals: AtomicUsize,
}

impl BoundaryProblem {
    fn new(
        scenario: Scenario,
        a_sigma: f64,
        omega_sigma: f64,
        tol: f64,
    ) -> Result<Self, RangeError> {
        // P does not depend on L, and all three accelerated scenarios share it.
        let (p, p_err) = if scenario == Scenario::Inertial {
            (observables::transition_probability_rest(omega_sigma), 0.0)
        } else {
            let cfg = PhysicalConfig::new(a_sigma, omega_sigma, 1.0);
            let est = observables::transition_probability(&cfg)?;
            (est.value, est.abs_error)
        };
        Ok(BoundaryProblem {
            scenario,
            a_sigma,
            omega_sigma,
            p,
            p_err,
            tol_user: tol,
            evals: AtomicUsize::new(0),
        })
    }

    /// f(L) = |X(L)| - P with an absolute tolerance for X.
    fn f_at(&self, l: f64, tol_x: f64) -> Result<(f64, f64), ObservableError> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let cfg = PhysicalConfig::new(self.a_sigma, self.omega_sigma, l);
        if self.scenario == Scenario::Inertial {
            return Ok((x_rest(&cfg).norm() - self.p, self.p_err));
        }
        let tols = Tolerances { outer: tol_x, inner: tol_x / 10.0 };
        let x = x_nonlocal(self.scenario, &cfg, &tols)?;
        Ok((x.value.norm() - self.p, x.abs_error + self.p_err))
    }

    /// Evaluate f with just enough precision to trust its sign: the
    /// comparison scale is P itself, which gets exponentially small at large
    /// gaps where a fixed absolute tolerance would drown the sign.
    fn f_sign(&self, l: f64) -> Result<f64, ObservableError> {
        let scale = self.p.abs().max(1e-300);
        let ladder = [
            1e-2 * scale,
            1e-4 * scale,
            (1e-6 * scale).min(self.tol_user).max(1e-15),
        ];
        let mut last = 0.0;
        for &tol_x in &ladder {
            let (f, err) = self.f_at(l, tol_x)?;
            last = f;
            if f.abs() > 4.0 * err {
                return Ok(f);
            }
        }
        Ok(last)
    }
}

/// Locate L_max: the last positive-to-nonpositive crossing of |X| - P on a
/// geometric scan of (0, l_hi], refined by bisection to a half-width of 1e-4.
///
/// The scan has an 80-point floor; if two adjacent cells both contain sign
/// changes, the density doubles (up to 640) before refinement, guarding
/// against re-entrant harvesting windows.
pub fn l_max(
    scenario: Scenario,
    a_sigma: f64,
    omega_sigma: f64,
    l_hi: f64,
    tol: f64,
) -> Result<RangeResult, RangeError> {
    if !(l_hi > 0.0) {
        return Err(RangeError::BadSpec("l_hi must be > 0"));
    }
    let problem = BoundaryProblem::new(scenario, a_sigma, omega_sigma, tol)?;

    let l_lo = l_hi / 240.0;
    let mut n = SCAN_FLOOR;
    let (grid, signs) = loop {
        let ratio = (l_hi / l_lo).powf(1.0 / (n - 1) as f64);
        let grid: Vec<f64> = (0..n)
            .map(|k| if k == n - 1 { l_hi } else { l_lo * ratio.powi(k as i32) })
            .collect();
        let signs: Result<Vec<f64>, ObservableError> =
            grid.par_iter().map(|&l| problem.f_sign(l)).collect();
        let signs = signs?;
        let double_crossing = signs
            .windows(3)
            .any(|w| w[0].signum() != w[1].signum() && w[1].signum() != w[2].signum());
        if double_crossing && n < SCAN_CEIL {
            n *= 2;
            continue;
        }
        break (grid, signs);
    };

    if signs.iter().all(|&f| f <= 0.0) {
        return Err(RangeError::NoEntanglement(l_hi));
    }
    let last_pos = signs.iter().rposition(|&f| f > 0.0).expect("checked above");
    if last_pos == grid.len() - 1 {
        return Err(RangeError::BracketEscape(l_hi));
    }

    let (mut lo, mut hi) = (grid[last_pos], grid[last_pos + 1]);
    while hi - lo > 2.0 * BRACKET_TARGET {
        let mid = 0.5 * (lo + hi);
        if problem.f_sign(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    Ok(RangeResult {
        l_max_sigma: 0.5 * (lo + hi),
        bracket_width: 0.5 * (hi - lo),
        evaluations: problem.evals.load(Ordering::Relaxed),
    })
}
