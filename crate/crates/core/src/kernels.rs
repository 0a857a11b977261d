//! Scenario kinematics: the symmetrized Wightman kernels for parallel,
//! anti-parallel, and perpendicular acceleration as prefactor/denominator
//! term lists, their light-cone roots in the co-rotating variable x at fixed
//! y, and the anti-parallel root-onset threshold.
//!
//! Every term represents prefactor / (u(x, y) - i eps) with u real; the
//! -i eps is carried implicitly and resolved downstream by the principal
//! value plus delta-term decomposition. Internally sigma = 1, so a, Omega,
//! and L are the dimensionless groups a*sigma, Omega*sigma, L/sigma.

use crate::quadrature::{bracket_roots, PoleSet};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Dimensionless detector/field parameters defining one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    /// Acceleration times switching duration, a*sigma.
    pub a_sigma: f64,
    /// Energy gap times switching duration, Omega*sigma.
    pub omega_sigma: f64,
    /// Detector separation over switching duration, L/sigma.
    pub l_sigma: f64,
}

impl PhysicalConfig {
    pub fn new(a_sigma: f64, omega_sigma: f64, l_sigma: f64) -> Self {
        PhysicalConfig { a_sigma, omega_sigma, l_sigma }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !self.a_sigma.is_finite() || self.a_sigma < 0.0 {
            return Err(KernelError::BadConfig("a_sigma must be finite and >= 0"));
        }
        if !self.omega_sigma.is_finite() {
            return Err(KernelError::BadConfig("omega_sigma must be finite"));
        }
        if !self.l_sigma.is_finite() || self.l_sigma <= 0.0 {
            return Err(KernelError::BadConfig("l_sigma must be finite and > 0"));
        }
        Ok(())
    }
}

/// Which acceleration scenario a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Inertial,
    Parallel,
    AntiParallel,
    Perpendicular,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Inertial => "inertial",
            Scenario::Parallel => "parallel",
            Scenario::AntiParallel => "antiparallel",
            Scenario::Perpendicular => "perpendicular",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = KernelError;
    fn from_str(s: &str) -> Result<Self, KernelError> {
        match s {
            "inertial" => Ok(Scenario::Inertial),
            "parallel" => Ok(Scenario::Parallel),
            "antiparallel" => Ok(Scenario::AntiParallel),
            "perpendicular" => Ok(Scenario::Perpendicular),
            _ => Err(KernelError::BadConfig("unknown scenario")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("scenario has no kernel terms (inertial closed forms live in observables)")]
    UnsupportedScenario,
    #[error("degenerate root at x = {x}, y = {y}: |du/dx| = {slope:e} < 1e-12")]
    DegenerateRoot { x: f64, y: f64, slope: f64 },
}

/// Gaussian switching envelope exp(-x^2/4) falls below 1e-18 of its peak at
/// this |x| (sigma = 1); integrals over x or y are truncated here.
pub fn gaussian_cut() -> f64 {
    2.0 * (1e18_f64).ln().sqrt()
}

/// Padding beyond the Gaussian cut inside which poles are still tracked.
pub const WINDOW_PAD: f64 = 2.0;

/// One additive term of a scenario kernel: the full kernel at (x, y) is
/// sum_k prefactor_k / (u_k(x, y) - i eps).
#[derive(Debug, Clone, Copy)]
pub struct KernelTerm {
    pub prefactor: f64,
    shape: TermShape,
}

#[derive(Debug, Clone, Copy)]
enum TermShape {
    /// (c - e^{-ax/2} S)(c + e^{ax/2} S), S = sinh(ay/2), c = aL/2.
    ParallelFirst { a: f64, c: f64 },
    /// (c + e^{-ax/2} S)(c - e^{ax/2} S); the x -> -x mirror of the first.
    ParallelSecond { a: f64, c: f64 },
    /// (e^{-ay/2} b + cosh(ax/2))(e^{ay/2} b + cosh(ax/2)), b = aL/2 - 1.
    AntiParallel { a: f64, b: f64 },
    /// 3 + (aL-1)^2 - 4 cosh(ax/2)cosh(ay/2) - cosh(ay) + cosh(ax)
    ///   + 2 aL cosh(a(x + sign*y)/2), sign = +1 or -1.
    Perpendicular { a: f64, al: f64, sign: f64 },
}

impl KernelTerm {
    /// The real denominator u(x, y).
    pub fn denominator(&self, x: f64, y: f64) -> f64 {
        self.at_y(y).u(x)
    }

    /// Analytic du/dx at (x, y).
    pub fn denominator_dx(&self, x: f64, y: f64) -> f64 {
        self.at_y(y).du(x)
    }

    /// Freeze the y-dependent factors for repeated evaluation along x.
    ///
    /// The return value evaluates u in cancellation-free form: the factored
    /// expressions lose all significance near their roots (the difference of
    /// two O(1) operands shrinks to O(u' dx), so the relative noise grows
    /// like eps/dx and the principal-value quadrature sees a rough
    /// integrand), while the forms below isolate the root crossing inside a
    /// single sinh.
    pub fn at_y(&self, y: f64) -> TermAtY {
        match self.shape {
            // (c - e^{-ax/2}S)(c + e^{ax/2}S) = (c^2 - S^2) + 2cS sinh(ax/2)
            TermShape::ParallelFirst { a, c } => {
                let s = (0.5 * a * y).sinh();
                TermAtY::Parallel { a, k: c * c - s * s, m: 2.0 * c * s }
            }
            TermShape::ParallelSecond { a, c } => {
                let s = (0.5 * a * y).sinh();
                TermAtY::Parallel { a, k: c * c - s * s, m: -2.0 * c * s }
            }
            TermShape::AntiParallel { a, b } if b < 0.0 => {
                // (m - m_plus)(m - m_minus) with m = cosh(ax/2),
                // m_plus = (1 - aL/2) e^{ay/2} = 1 + d, m_minus = e^{-(a/2)(y + y_th)};
                // m - m_plus = 2 sinh^2(ax/4) - d keeps its digits at the roots.
                let y_th = -2.0 / a * (-b).ln();
                let d = (0.5 * a * (y - y_th)).exp_m1();
                let e_minus = -(-0.5 * a * (y + y_th)).exp_m1();
                TermAtY::AntiParallel { a, d, e_minus }
            }
            TermShape::AntiParallel { a, b } => TermAtY::AntiParallelWide {
                a,
                fm: (-0.5 * a * y).exp() * b,
                fp: (0.5 * a * y).exp() * b,
            },
            TermShape::Perpendicular { a, al, sign } => {
                let chy2 = (0.5 * a * y).cosh();
                let shy2 = (0.5 * a * y).sinh();
                TermAtY::Perpendicular {
                    a,
                    al,
                    base: 3.0 + (al - 1.0) * (al - 1.0) - (a * y).cosh(),
                    chy2,
                    shy2_signed: sign * shy2,
                }
            }
        }
    }
}

/// A kernel term with its y-dependence evaluated, exposing u and du/dx.
#[derive(Debug, Clone)]
pub enum TermAtY {
    /// u = k + m sinh(ax/2); root at sinh(ax/2) = -k/m.
    Parallel { a: f64, k: f64, m: f64 },
    /// u = (2 sinh^2(ax/4) - d)(2 sinh^2(ax/4) + e_minus), aL < 2.
    AntiParallel { a: f64, d: f64, e_minus: f64 },
    /// u = (fm + cosh(ax/2))(fp + cosh(ax/2)) with fm, fp >= 0 (aL >= 2).
    AntiParallelWide { a: f64, fm: f64, fp: f64 },
    /// Direct evaluation; near roots use [`TermAtY::anchored`].
    Perpendicular { a: f64, al: f64, base: f64, chy2: f64, shy2_signed: f64 },
}

impl TermAtY {
    pub fn u(&self, x: f64) -> f64 {
        match *self {
            TermAtY::Parallel { a, k, m } => k + m * (0.5 * a * x).sinh(),
            TermAtY::AntiParallel { a, d, e_minus } => {
                let s2 = 2.0 * (0.25 * a * x).sinh().powi(2);
                (s2 - d) * (s2 + e_minus)
            }
            TermAtY::AntiParallelWide { a, fm, fp } => {
                let m = (0.5 * a * x).cosh();
                (fm + m) * (fp + m)
            }
            TermAtY::Perpendicular { a, al, base, chy2, shy2_signed } => {
                let ch = (0.5 * a * x).cosh();
                let sh = (0.5 * a * x).sinh();
                base - 4.0 * ch * chy2 + (2.0 * ch * ch - 1.0)
                    + 2.0 * al * (ch * chy2 + sh * shy2_signed)
            }
        }
    }

    pub fn du(&self, x: f64) -> f64 {
        match *self {
            TermAtY::Parallel { a, m, .. } => 0.5 * a * m * (0.5 * a * x).cosh(),
            TermAtY::AntiParallel { a, d, e_minus } => {
                let s2 = 2.0 * (0.25 * a * x).sinh().powi(2);
                0.5 * a * (0.5 * a * x).sinh() * ((s2 - d) + (s2 + e_minus))
            }
            TermAtY::AntiParallelWide { a, fm, fp } => {
                let m = (0.5 * a * x).cosh();
                let dm = 0.5 * a * (0.5 * a * x).sinh();
                dm * ((fm + m) + (fp + m))
            }
            TermAtY::Perpendicular { a, al, chy2, shy2_signed, .. } => {
                let ch = (0.5 * a * x).cosh();
                let sh = (0.5 * a * x).sinh();
                0.5 * a * (-4.0 * sh * chy2 + 4.0 * ch * sh + 2.0 * al * (sh * chy2 + ch * shy2_signed))
            }
        }
    }

    /// A root-anchored evaluator for the principal-value path.
    ///
    /// The perpendicular denominator is re-expressed as h(x) - h(r) around
    /// the nearest anchor root r, with the difference of each cosh pair
    /// collapsed into sinh products, so the evaluation keeps full precision
    /// arbitrarily close to the roots. The other scenarios are already
    /// stable and are returned as-is.
    pub fn anchored(&self, roots: &[f64]) -> AnchoredTerm<'_> {
        AnchoredTerm { term: self, anchors: roots.to_vec() }
    }
}

/// See [`TermAtY::anchored`].
pub struct AnchoredTerm<'a> {
    term: &'a TermAtY,
    anchors: Vec<f64>,
}

impl AnchoredTerm<'_> {
    pub fn u(&self, x: f64) -> f64 {
        if let TermAtY::Perpendicular { a, al, chy2, shy2_signed, .. } = *self.term {
            if let Some(&r) = nearest(&self.anchors, x) {
                // h(x) - h(r) with cosh differences turned into products:
                //   cosh A - cosh B = 2 sinh((A+B)/2) sinh((A-B)/2).
                let dm = 0.25 * a * (x - r);
                let dp = 0.25 * a * (x + r);
                let bracket = (2.0 * dp).sinh() * dm.cosh() - 2.0 * chy2 * dp.sinh()
                    + al * (dp.cosh() * shy2_signed + dp.sinh() * chy2);
                return 4.0 * dm.sinh() * bracket;
            }
        }
        self.term.u(x)
    }
}

fn nearest<'r>(anchors: &'r [f64], x: f64) -> Option<&'r f64> {
    anchors.iter().min_by(|p, q| {
        (*p - x).abs().partial_cmp(&(*q - x).abs()).unwrap()
    })
}

/// The kernel term list for an accelerated scenario.
pub fn kernel_terms(scenario: Scenario, cfg: &PhysicalConfig) -> Result<Vec<KernelTerm>, KernelError> {
    if !(cfg.a_sigma > 0.0) {
        return Err(KernelError::BadConfig("accelerated kernel requires a_sigma > 0"));
    }
    let a = cfg.a_sigma;
    let l = cfg.l_sigma;
    match scenario {
        Scenario::Inertial => Err(KernelError::UnsupportedScenario),
        Scenario::Parallel => {
            let pf = a * a / (32.0 * PI * PI);
            let c = 0.5 * a * l;
            Ok(vec![
                KernelTerm { prefactor: pf, shape: TermShape::ParallelFirst { a, c } },
                KernelTerm { prefactor: pf, shape: TermShape::ParallelSecond { a, c } },
            ])
        }
        Scenario::AntiParallel => {
            let pf = a * a / (16.0 * PI * PI);
            let b = 0.5 * a * l - 1.0;
            Ok(vec![KernelTerm { prefactor: pf, shape: TermShape::AntiParallel { a, b } }])
        }
        Scenario::Perpendicular => {
            let pf = a * a / (8.0 * PI * PI);
            let al = a * l;
            Ok(vec![
                KernelTerm { prefactor: pf, shape: TermShape::Perpendicular { a, al, sign: 1.0 } },
                KernelTerm { prefactor: pf, shape: TermShape::Perpendicular { a, al, sign: -1.0 } },
            ])
        }
    }
}

/// Threshold y above which the anti-parallel denominator acquires roots:
/// y_th = (2/a) ln(1/(1 - aL/2)) for 0 < aL < 2, none for aL >= 2.
pub fn kernel_threshold_antiparallel(cfg: &PhysicalConfig) -> Option<f64> {
    let al = cfg.a_sigma * cfg.l_sigma;
    if al > 0.0 && al < 2.0 {
        Some(-2.0 / cfg.a_sigma * (1.0 - 0.5 * al).ln())
    } else {
        None
    }
}

/// acosh(1 + d) for d >= 0, accurate for small d.
fn acosh1p(d: f64) -> f64 {
    (d + (d * (2.0 + d)).sqrt()).ln_1p()
}

/// Per-term pole sets of the scenario kernel at fixed y > 0, inside
/// |x| <= gaussian_cut() + WINDOW_PAD.
///
/// Parallel and anti-parallel roots come from the factorized denominators in
/// closed form; perpendicular roots are bracketed numerically. Each set
/// carries |du/dx| at the root (analytic for all scenarios).
pub fn kernel_roots(
    scenario: Scenario,
    cfg: &PhysicalConfig,
    y: f64,
) -> Result<Vec<PoleSet>, KernelError> {
    if !(y > 0.0) {
        return Err(KernelError::BadConfig("kernel_roots requires y > 0"));
    }
    let window = gaussian_cut() + WINDOW_PAD;
    kernel_roots_in(scenario, cfg, y, window, DEGENERATE_SLOPE)
}

/// Public degeneracy threshold: callers of [`kernel_roots`] must subdivide in
/// y when |du/dx| at a root falls below this.
pub const DEGENERATE_SLOPE: f64 = 1e-12;

pub(crate) fn kernel_roots_in(
    scenario: Scenario,
    cfg: &PhysicalConfig,
    y: f64,
    window: f64,
    min_slope: f64,
) -> Result<Vec<PoleSet>, KernelError> {
    let a = cfg.a_sigma;
    let l = cfg.l_sigma;
    match scenario {
        Scenario::Inertial => Err(KernelError::UnsupportedScenario),
        Scenario::Parallel => {
            // First factor of u1 vanishes at x1 = (2/a) ln(2S/(aL)); u2 mirrors it.
            let s = (0.5 * a * y).sinh();
            let x1 = 2.0 / a * (2.0 * s / (a * l)).ln();
            let slope = 0.5 * a * (0.25 * a * a * l * l + s * s);
            let inside = |x: f64| x.abs() <= window;
            let set1 = if inside(x1) {
                pole_set_checked(vec![x1], vec![slope], y, min_slope)?
            } else {
                PoleSet::empty()
            };
            let set2 = if inside(-x1) {
                pole_set_checked(vec![-x1], vec![slope], y, min_slope)?
            } else {
                PoleSet::empty()
            };
            Ok(vec![set1, set2])
        }
        Scenario::AntiParallel => {
            let al = a * l;
            if al >= 2.0 {
                return Ok(vec![PoleSet::empty()]);
            }
            let y_th = kernel_threshold_antiparallel(cfg).expect("al < 2");
            // e^{ay/2}(1 - aL/2) = 1 + d with d = expm1(a (y - y_th)/2), so the
            // root condition cosh(ax/2) = 1 + d is evaluable right at onset.
            let d = (0.5 * a * (y - y_th)).exp_m1();
            if d < 0.0 {
                return Ok(vec![PoleSet::empty()]);
            }
            let xr = 2.0 / a * acosh1p(d);
            let slope = a * (1.0 - 0.5 * al) * (0.5 * a * y).sinh() * (d * (2.0 + d)).sqrt();
            if xr == 0.0 || xr > window {
                // Merged roots exactly at threshold count as degenerate.
                if xr == 0.0 {
                    return Err(KernelError::DegenerateRoot { x: 0.0, y, slope: 0.0 });
                }
                return Ok(vec![PoleSet::empty()]);
            }
            Ok(vec![pole_set_checked(vec![-xr, xr], vec![slope, slope], y, min_slope)?])
        }
        Scenario::Perpendicular => {
            let terms = kernel_terms(scenario, cfg)?;
            let plus = terms[0].at_y(y);
            let scan = perp_scan_points(a);
            let roots_plus = bracket_roots(|x| plus.u(x), -window, window, scan);
            let mut mags = Vec::with_capacity(roots_plus.len());
            for &r in &roots_plus {
                let slope = plus.du(r).abs();
                if slope < min_slope {
                    return Err(KernelError::DegenerateRoot { x: r, y, slope });
                }
                mags.push(slope);
            }
            let set_plus = PoleSet::new(roots_plus.clone(), mags.clone())
                .map_err(|_| KernelError::BadConfig("perpendicular root set"))?;
            // h_minus(x) = h_plus(-x): mirror the roots and keep the magnitudes.
            let mut roots_minus: Vec<f64> = roots_plus.iter().map(|r| -r).collect();
            roots_minus.reverse();
            let mut mags_minus = mags;
            mags_minus.reverse();
            let set_minus = PoleSet::new(roots_minus, mags_minus)
                .map_err(|_| KernelError::BadConfig("perpendicular root set"))?;
            Ok(vec![set_plus, set_minus])
        }
    }
}

pub fn perp_scan_points(a: f64) -> usize {
    // Denominator features live on the scale 2/a; a few hundred points cover
    // the window for the accelerations the figures use.
    ((128.0 * (1.0 + 2.0 * a)) as usize).clamp(128, 1024)
}

fn pole_set_checked(
    locs: Vec<f64>,
    mags: Vec<f64>,
    y: f64,
    min_slope: f64,
) -> Result<PoleSet, KernelError> {
    for (&x, &m) in locs.iter().zip(&mags) {
        if m < min_slope {
            return Err(KernelError::DegenerateRoot { x, y, slope: m });
        }
    }
    PoleSet::new(locs, mags).map_err(|_| KernelError::BadConfig("pole set"))
}
