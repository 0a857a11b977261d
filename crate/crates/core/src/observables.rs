//! The physical quantities: transition probability P (at rest and
//! accelerated), the non-local correlation term X for all four scenarios, the
//! concurrence, and the resonance-gap helper. Everything is reported per
//! squared coupling.
//!
//! X for an accelerated scenario is the double integral
//!
//!   X = - int_0^inf dy int dx  e^{-(x^2+y^2)/4 - i Omega x} D(x, y)
//!
//! with D = sum_k pf_k / (u_k - i eps). The inner x integral resolves the
//! distributional denominator as PV(1/u) + i pi delta(u): a principal value
//! with the local singular model subtracted around each root, plus delta
//! terms g(x_r)/|u'(x_r)|. The outer y integral is split at the light-cone
//! shadow y = L, at the parallel root-crossing, and at root-onset points
//! (the anti-parallel threshold and numerically located perpendicular
//! onsets), where the inner integral has integrable |y - y*|^{-1/2} spikes;
//! panels touching an onset are regularized by the substitution y = y* +- t^2.

use crate::kernels::{
    self, gaussian_cut, kernel_terms, kernel_threshold_antiparallel, KernelError, KernelTerm,
    PhysicalConfig, Scenario, WINDOW_PAD,
};
use crate::quadrature::{
    bracket_roots, integrate_finite_c, integrate_pv_c, integrate_semi_infinite, PoleSet,
    QuadratureError,
};
use crate::specfun::{erfc, scaled_cerfc};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::f64::consts::PI;
use thiserror::Error;

/// Below this acceleration the accelerated formulas dispatch to the closed
/// inertial forms; e^{+-ax/2} expansions lose too many digits further down,
/// and every plotted a*sigma sits far above.
pub const A_MIN: f64 = 1e-6;

// Nodes of a substituted onset panel closer than this to t = 0 use the
// analytic quadratic-model limit; y is then within 1e-8 of the onset, where
// the merged roots are numerically degenerate.
const T_MIN_SUB: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("resonance gap is defined for aL < 4, got aL = {0}")]
    ResonanceDomain(f64),
}

/// Absolute tolerances for the nested integrals.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Outer y integral, absolute.
    pub outer: f64,
    /// Inner x integral, absolute (relaxed by the Gaussian envelope at large y).
    pub inner: f64,
}

impl Tolerances {
    pub fn from_target(tol: f64) -> Self {
        Tolerances { outer: tol, inner: tol / 10.0 }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::from_target(1e-9)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// P, X, and concurrence for one (scenario, config) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub scenario: Scenario,
    pub a_sigma: f64,
    pub omega_sigma: f64,
    pub l_sigma: f64,
    pub p_over_lambda2: f64,
    pub re_x_over_lambda2: f64,
    pub im_x_over_lambda2: f64,
    pub concurrence_over_lambda2: f64,
    pub p_error: f64,
    pub x_error: f64,
    pub converged: bool,
}

impl ObservableRecord {
    pub fn x(&self) -> Complex64 {
        Complex64::new(self.re_x_over_lambda2, self.im_x_over_lambda2)
    }

    pub fn abs_x(&self) -> f64 {
        self.x().norm()
    }
}

/// Transition probability of a detector at rest:
/// P = (1/4pi) [e^{-Omega^2} - sqrt(pi) Omega erfc(Omega)].
pub fn transition_probability_rest(omega_sigma: f64) -> f64 {
    let om = omega_sigma;
    ((-om * om).exp() - PI.sqrt() * om * erfc(om)) / (4.0 * PI)
}

/// (sinh^2 s - s^2) / (s^2 sinh^2 s), continuously extended to 1/3 at s = 0.
fn acceleration_profile(s: f64) -> f64 {
    let s = s.abs();
    if s == 0.0 {
        return 1.0 / 3.0;
    }
    let sh = s.sinh();
    if s < 0.5 {
        // sinh s - s by series so the quartic-order difference keeps its digits
        let s2 = s * s;
        let mut term = s * s2 / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-20 * sum {
            term *= s2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
            k += 1.0;
        }
        sum * (sh + s) / (s * s * sh * sh)
    } else {
        (sh * sh - s * s) / (s * s * sh * sh)
    }
}

/// Transition probability of a uniformly accelerated detector; identical for
/// both detectors and for all three acceleration scenarios.
pub fn transition_probability(cfg: &PhysicalConfig) -> Result<Estimate, ObservableError> {
    cfg.validate()?;
    let rest = transition_probability_rest(cfg.omega_sigma);
    if cfg.a_sigma < A_MIN {
        return Ok(Estimate { value: rest, abs_error: 0.0, evaluations: 0, converged: true });
    }
    let a = cfg.a_sigma;
    let beta = 2.0 * cfg.omega_sigma / a;
    let alpha = 1.0 / (a * a);
    let prefactor = a / (4.0 * PI.powf(1.5));
    // The result can be exponentially small at large Omega while the
    // integrand stays O(1); aim the quadrature at the result scale.
    let tol = (rest.abs() * 1e-7).max(1e-16) / prefactor;
    let r = integrate_semi_infinite(
        |s| (s * beta).cos() * (-s * s * alpha).exp() * acceleration_profile(s),
        tol,
    );
    Ok(Estimate {
        value: prefactor * r.value + rest,
        abs_error: prefactor * r.abs_error,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Closed-form X for detectors at rest, in the overflow-safe form
/// X = (-i / (4 sqrt(pi) L)) e^{-Omega^2} w(-L/2),
/// where w is the scaled complementary error function; the unscaled
/// e^{-L^2/4} erfc(iL/2) would overflow for large L.
pub fn x_rest(cfg: &PhysicalConfig) -> Complex64 {
    let w = scaled_cerfc(Complex64::new(-0.5 * cfg.l_sigma, 0.0)).expect("real axis");
    let amp = (-cfg.omega_sigma * cfg.omega_sigma).exp() / (4.0 * PI.sqrt() * cfg.l_sigma);
    Complex64::new(0.0, -amp) * w
}

/// Energy gap of the claimed anti-parallel entanglement resonance,
/// Omega_res sigma = arccos[(2 - aL)/2] / (a sigma), defined for aL < 4.
/// All observables stay finite there; the helper exists to probe that point.
pub fn resonance_gap(cfg: &PhysicalConfig) -> Result<f64, ObservableError> {
    cfg.validate()?;
    if !(cfg.a_sigma > 0.0) {
        return Err(KernelError::BadConfig("resonance gap requires a_sigma > 0").into());
    }
    let al = cfg.a_sigma * cfg.l_sigma;
    if al >= 4.0 {
        return Err(ObservableError::ResonanceDomain(al));
    }
    Ok((0.5 * (2.0 - al)).acos() / cfg.a_sigma)
}

/// e^{-x^2/4} e^{-i Omega x}; the e^{-y^2/4} part is pulled out per inner
/// integral.
#[inline]
fn switching_factor(omega: f64, x: f64) -> Complex64 {
    let (s, c) = (omega * x).sin_cos();
    let e = (-0.25 * x * x).exp();
    Complex64::new(e * c, -e * s)
}

/// A marked point of the outer y axis.
#[derive(Debug, Clone)]
enum Cut {
    /// The inner integral has a kink or onset of rapid variation here.
    Regular(f64),
    /// The inner integral diverges like |y - y*|^{-1/2} here; `merges` lists
    /// (term index, merge position x*) for the terms whose roots collide.
    Singular { y: f64, merges: Vec<(usize, f64)> },
}

impl Cut {
    fn y(&self) -> f64 {
        match self {
            Cut::Regular(y) => *y,
            Cut::Singular { y, .. } => *y,
        }
    }
}

struct InnerEngine<'a> {
    scenario: Scenario,
    cfg: &'a PhysicalConfig,
    terms: Vec<KernelTerm>,
    omega: f64,
    tol_inner: f64,
    window: f64,
    /// (y*, x*) pairs where a perpendicular root pair is born; near these the
    /// coarse scan cannot resolve the newborn pair and a local rescan runs.
    onset_hints: Vec<(f64, f64)>,
    evals: Cell<usize>,
    poisoned: Cell<bool>,
}

// The public kernel_roots contract flags |du/dx| < 1e-12 as degenerate so
// naive callers keep away from merged roots; the engine regularizes onsets by
// substitution, so it only needs slopes to be representable.
const INTERNAL_MIN_SLOPE: f64 = 1e-300;

impl<'a> InnerEngine<'a> {
    fn new(
        scenario: Scenario,
        cfg: &'a PhysicalConfig,
        tols: &Tolerances,
    ) -> Result<Self, ObservableError> {
        Ok(InnerEngine {
            scenario,
            cfg,
            terms: kernel_terms(scenario, cfg)?,
            omega: cfg.omega_sigma,
            tol_inner: tols.inner,
            window: gaussian_cut(),
            onset_hints: Vec::new(),
            evals: Cell::new(0),
            poisoned: Cell::new(false),
        })
    }

    /// Per-term pole sets at y, with a local rescan near perpendicular onsets
    /// where a just-born pair sits below the coarse scan resolution.
    fn roots_at(&self, y: f64) -> Result<Vec<PoleSet>, KernelError> {
        let window = self.window + WINDOW_PAD;
        let mut sets =
            kernels::kernel_roots_in(self.scenario, self.cfg, y, window, INTERNAL_MIN_SLOPE)?;
        if self.scenario != Scenario::Perpendicular || self.onset_hints.is_empty() {
            return Ok(sets);
        }
        let at = self.terms[0].at_y(y);
        let mut locs: Vec<f64> = sets[0].locations().to_vec();
        let mut added = false;
        for &(y_star, x_star) in &self.onset_hints {
            if (y - y_star).abs() > 0.5 {
                continue;
            }
            if locs.iter().any(|r| (r - x_star).abs() < 0.4) {
                continue;
            }
            // Zoom in geometrically; a resolvable pair shows up at some scale.
            let mut w = 0.6;
            while w > 1e-7 {
                let found = bracket_roots(|x| at.u(x), x_star - w, x_star + w, 64);
                if !found.is_empty() {
                    locs.extend(found);
                    added = true;
                    break;
                }
                w *= 0.25;
            }
        }
        if added {
            locs.sort_by(|p, q| p.partial_cmp(q).unwrap());
            locs.dedup_by(|p, q| (*p - *q).abs() < 1e-9);
            let mut mags = Vec::with_capacity(locs.len());
            for &r in &locs {
                let slope = at.du(r).abs();
                if !(slope > INTERNAL_MIN_SLOPE) {
                    return Err(KernelError::DegenerateRoot { x: r, y, slope });
                }
                mags.push(slope);
            }
            let mirrored_locs: Vec<f64> = locs.iter().rev().map(|r| -r).collect();
            let mirrored_mags: Vec<f64> = mags.iter().rev().copied().collect();
            sets[0] = PoleSet::new(locs, mags)
                .map_err(|_| KernelError::BadConfig("refined root set"))?;
            sets[1] = PoleSet::new(mirrored_locs, mirrored_mags)
                .map_err(|_| KernelError::BadConfig("refined root set"))?;
        }
        Ok(sets)
    }

    /// inner(y) = sum_k pf_k [ PV int g/u_k dx + i pi sum_r g(x_r)/|u_k'(x_r)| ],
    /// with g = e^{-(x^2+y^2)/4 - i Omega x}.
    fn inner(&self, y: f64) -> Complex64 {
        let gy = (-0.25 * y * y).exp();
        if gy < 1e-18 {
            return Complex64::new(0.0, 0.0);
        }
        let sets = match self.roots_at(y) {
            Ok(s) => s,
            Err(_) => {
                self.poisoned.set(true);
                return Complex64::new(0.0, 0.0);
            }
        };
        // The envelope multiplies the whole inner integral, so the absolute
        // tolerance passed down can be relaxed by 1/envelope.
        let tol_term = (self.tol_inner / (self.terms.len() as f64 * gy)).min(1e-3);
        let omega = self.omega;
        let mut acc = Complex64::new(0.0, 0.0);
        for (term, poles) in self.terms.iter().zip(&sets) {
            let at = term.at_y(y);
            // Widen the integration domain so every kept pole sits at least
            // one unit away from an edge.
            let mut half_width = self.window;
            let mut locs = Vec::new();
            let mut mags = Vec::new();
            for (&r, &m) in poles.locations().iter().zip(poles.derivative_magnitudes()) {
                if r.abs() <= self.window + WINDOW_PAD {
                    locs.push(r);
                    mags.push(m);
                    if r.abs() > half_width - 1.0 {
                        half_width = r.abs() + 1.0;
                    }
                }
            }
            let mut delta = Complex64::new(0.0, 0.0);
            for (&r, &m) in locs.iter().zip(&mags) {
                delta += switching_factor(omega, r) / m;
            }
            delta *= Complex64::new(0.0, PI);
            let anchored = at.anchored(&locs);
            let kept = PoleSet::new(locs, mags).expect("ordered root set");
            // The tolerance is budgeted on the term's contribution, so the
            // raw PV integral (before the prefactor) gets it rescaled; the
            // integrand itself is O(1/|u'|) and can be huge near merged roots.
            match integrate_pv_c(
                |x| switching_factor(omega, x),
                |x| anchored.u(x),
                &kept,
                -half_width,
                half_width,
                tol_term / term.prefactor,
            ) {
                Ok(pv) => {
                    self.evals.set(self.evals.get() + pv.evaluations);
                    acc += term.prefactor * (pv.value + delta);
                }
                Err(_) => {
                    self.poisoned.set(true);
                }
            }
        }
        gy * acc
    }

    /// Integrand of an onset panel after the substitution y = s + dir t^2
    /// (Jacobian 2t); below T_MIN_SUB the analytic limit takes over.
    fn inner_substituted(&self, s: f64, dir: f64, t: f64, merges: &[(usize, f64)]) -> Complex64 {
        if t < T_MIN_SUB {
            self.onset_limit(s, dir, merges)
        } else {
            2.0 * t * self.inner(s + dir * t * t)
        }
    }

    /// lim_{t->0} inner(s +- t^2) 2t from the quadratic model of u around the
    /// merge point: u ~ -D_y (y - y*) + u''/2 (x - x*)^2. Below the onset the
    /// near-zero minimum gives a real peak integral; above, the newborn root
    /// pair gives the same magnitude times i.
    fn onset_limit(&self, s: f64, dir: f64, merges: &[(usize, f64)]) -> Complex64 {
        let gy = (-0.25 * s * s).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(k, x_star) in merges {
            let term = &self.terms[k];
            let hy = 1e-5 * s.abs().max(1.0);
            let d_y = ((term.denominator(x_star, s + hy) - term.denominator(x_star, s - hy))
                / (2.0 * hy))
                .abs();
            let hx = 1e-5 * x_star.abs().max(1.0);
            let at = term.at_y(s);
            let upp =
                ((at.u(x_star + hx) - 2.0 * at.u(x_star) + at.u(x_star - hx)) / (hx * hx)).abs();
            if !(d_y * upp > 0.0) {
                self.poisoned.set(true);
                continue;
            }
            let amp =
                2.0 * std::f64::consts::SQRT_2 * PI * term.prefactor / (d_y * upp).sqrt();
            acc += amp * switching_factor(self.omega, x_star);
        }
        let acc = gy * acc;
        if dir > 0.0 {
            Complex64::new(0.0, 1.0) * acc
        } else {
            acc
        }
    }
}

/// A perpendicular root-onset: at y the two h_+ roots merge at x_star (and
/// the h_- roots at -x_star).
#[derive(Debug, Clone, Copy)]
struct PerpOnset {
    y: f64,
    x_star: f64,
    clean: bool,
}

/// Locate the y values where the perpendicular denominator h_+ gains or
/// loses a root pair inside the x window. The root count is scanned on a
/// coarse y grid, count changes are bracketed by bisection, and the onset is
/// polished by driving the local minimum of h_+ to zero.
fn perp_onsets(cfg: &PhysicalConfig, term_plus: &KernelTerm, y_hi: f64) -> Vec<PerpOnset> {
    let window = gaussian_cut() + WINDOW_PAD;
    let scan_n = kernels::perp_scan_points(cfg.a_sigma);
    let roots_at = |y: f64| -> Vec<f64> {
        let at = term_plus.at_y(y);
        bracket_roots(|x| at.u(x), -window, window, scan_n)
    };

    const GRID: usize = 192;
    let mut onsets = Vec::new();
    let step = y_hi / GRID as f64;
    let mut prev_y = 0.25 * step;
    let mut prev_roots = roots_at(prev_y);
    for j in 1..=GRID {
        let y = j as f64 * step;
        let roots = roots_at(y);
        if roots.len() != prev_roots.len() {
            if let Some(onset) = locate_onset(term_plus, prev_y, y, &roots_at, window) {
                onsets.push(onset);
            }
        }
        prev_y = y;
        prev_roots = roots;
    }
    onsets.dedup_by(|a, b| (a.y - b.y).abs() < 1e-9);
    onsets
}

fn locate_onset(
    term: &KernelTerm,
    y_lo: f64,
    y_hi: f64,
    roots_at: &dyn Fn(f64) -> Vec<f64>,
    window: f64,
) -> Option<PerpOnset> {
    // Bisect on the scanned root count until the change is tightly bracketed.
    let (mut lo, mut hi) = (y_lo, y_hi);
    let n_lo = roots_at(lo).len();
    for _ in 0..18 {
        let mid = 0.5 * (lo + hi);
        if roots_at(mid).len() == n_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r_lo = roots_at(lo);
    let r_hi = roots_at(hi);
    // Identify what appeared or vanished across the tight bracket.
    let (small, big) = if r_lo.len() < r_hi.len() { (&r_lo, &r_hi) } else { (&r_hi, &r_lo) };
    let mut fresh: Vec<f64> = big
        .iter()
        .copied()
        .filter(|r| small.iter().all(|s| (r - s).abs() > 0.05))
        .collect();
    // Window-edge crossings are not onsets; the envelope there is ~1e-24.
    fresh.retain(|r| r.abs() < window - 1.0);
    if fresh.is_empty() {
        return None;
    }
    let x_mid = fresh.iter().sum::<f64>() / fresh.len() as f64;
    let spread = fresh
        .iter()
        .map(|r| (r - x_mid).abs())
        .fold(0.0_f64, f64::max)
        .max(0.3);

    // m(y) = h_+ at its local minimum near x_mid; the onset is m(y) = 0.
    let local_min = |y: f64| -> Option<f64> {
        let at = term.at_y(y);
        let mut d = spread;
        for _ in 0..5 {
            let (a, b) = (x_mid - d, x_mid + d);
            if at.du(a) < 0.0 && at.du(b) > 0.0 {
                let r = bracket_roots(|x| at.du(x), a, b, 64);
                if let Some(&x) = r.first() {
                    return Some(x);
                }
            }
            d *= 2.0;
        }
        None
    };
    let m = |y: f64| -> Option<f64> { local_min(y).map(|x| term.denominator(x, y)) };
    let fallback = PerpOnset { y: 0.5 * (lo + hi), x_star: x_mid, clean: false };
    let (m_lo, m_hi) = match (m(y_lo), m(y_hi)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Some(fallback),
    };
    if m_lo.signum() == m_hi.signum() {
        return Some(fallback);
    }
    let (mut a, mut b, mut ma) = (y_lo, y_hi, m_lo);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let mm = match m(mid) {
            Some(v) => v,
            None => return Some(fallback),
        };
        if mm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if mm.signum() == ma.signum() {
            a = mid;
            ma = mm;
        } else {
            b = mid;
        }
        if b - a <= 1e-13 * b.abs().max(1.0) {
            break;
        }
    }
    let y_star = 0.5 * (a + b);
    let x_star = local_min(y_star)?;
    Some(PerpOnset { y: y_star, x_star, clean: true })
}

/// Probe the perpendicular onset detector; a development aid, not part of
/// the stable surface.
#[doc(hidden)]
pub fn perp_onsets_probe(cfg: &PhysicalConfig) -> Vec<(f64, f64, bool)> {
    let terms = kernel_terms(Scenario::Perpendicular, cfg).expect("valid cfg");
    perp_onsets(cfg, &terms[0], gaussian_cut())
        .into_iter()
        .map(|o| (o.y, o.x_star, o.clean))
        .collect()
}

/// Probe one inner-integral evaluation; a development aid for timing and
/// diagnosing the nested quadrature, not part of the stable surface.
#[doc(hidden)]
pub fn x_inner_probe(
    scenario: Scenario,
    cfg: &PhysicalConfig,
    tols: &Tolerances,
    y: f64,
) -> (Complex64, usize) {
    let engine = InnerEngine::new(scenario, cfg, tols).expect("valid scenario");
    let v = engine.inner(y);
    (v, engine.evals.get())
}

/// The non-local correlation term X for an accelerated scenario.
pub fn x_nonlocal(
    scenario: Scenario,
    cfg: &PhysicalConfig,
    tols: &Tolerances,
) -> Result<ComplexEstimate, ObservableError> {
    cfg.validate()?;
    if scenario == Scenario::Inertial {
        return Err(KernelError::UnsupportedScenario.into());
    }
    if cfg.a_sigma < A_MIN {
        return Ok(ComplexEstimate {
            value: x_rest(cfg),
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        });
    }

    let mut engine = InnerEngine::new(scenario, cfg, tols)?;
    let y_hi = gaussian_cut();
    let a = cfg.a_sigma;
    let l = cfg.l_sigma;

    let mut cuts: Vec<Cut> = Vec::new();
    if l < y_hi {
        cuts.push(Cut::Regular(l));
    }
    match scenario {
        Scenario::Parallel => {
            // Both term roots cross x = 0 where sinh(ay/2) = aL/2.
            let yc = 2.0 / a * (0.5 * a * l).asinh();
            if yc < y_hi {
                cuts.push(Cut::Regular(yc));
            }
        }
        Scenario::AntiParallel => {
            if let Some(y_th) = kernel_threshold_antiparallel(cfg) {
                if y_th < y_hi {
                    cuts.push(Cut::Singular { y: y_th, merges: vec![(0, 0.0)] });
                }
            }
        }
        Scenario::Perpendicular => {
            for onset in perp_onsets(cfg, &engine.terms[0], y_hi) {
                if onset.y <= 1e-9 || onset.y >= y_hi - 1e-9 {
                    continue;
                }
                if onset.clean {
                    engine.onset_hints.push((onset.y, onset.x_star));
                    // h_-(x) = h_+(-x): its pair merges at -x_star, same y.
                    cuts.push(Cut::Singular {
                        y: onset.y,
                        merges: vec![(0, onset.x_star), (1, -onset.x_star)],
                    });
                } else {
                    cuts.push(Cut::Regular(onset.y));
                }
            }
        }
        Scenario::Inertial => unreachable!(),
    }

    cuts.sort_by(|p, q| p.y().partial_cmp(&q.y()).unwrap());
    cuts.dedup_by(|p, q| {
        // Keep the singular marking when a regular cut coincides with it.
        let close = (p.y() - q.y()).abs() < 1e-9;
        if close && matches!(q, Cut::Regular(_)) {
            std::mem::swap(p, q);
        }
        close
    });

    // Panels between consecutive edges; an edge shared by two singular cuts
    // gets an extra midpoint split so each panel touches at most one.
    struct PanelSpec {
        lo: f64,
        hi: f64,
        sing_lo: Option<Vec<(usize, f64)>>,
        sing_hi: Option<Vec<(usize, f64)>>,
    }
    let mut edges: Vec<Cut> = Vec::with_capacity(cuts.len() + 2);
    edges.push(Cut::Regular(0.0));
    edges.extend(cuts.into_iter().filter(|c| c.y() > 1e-12 && c.y() < y_hi - 1e-12));
    edges.push(Cut::Regular(y_hi));

    let mut panels: Vec<PanelSpec> = Vec::new();
    for pair in edges.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        let sing_lo = match lo {
            Cut::Singular { merges, .. } => Some(merges.clone()),
            Cut::Regular(_) => None,
        };
        let sing_hi = match hi {
            Cut::Singular { merges, .. } => Some(merges.clone()),
            Cut::Regular(_) => None,
        };
        if sing_lo.is_some() && sing_hi.is_some() {
            let mid = 0.5 * (lo.y() + hi.y());
            panels.push(PanelSpec { lo: lo.y(), hi: mid, sing_lo: sing_lo.clone(), sing_hi: None });
            panels.push(PanelSpec { lo: mid, hi: hi.y(), sing_lo: None, sing_hi });
        } else {
            panels.push(PanelSpec { lo: lo.y(), hi: hi.y(), sing_lo, sing_hi });
        }
    }

    let tol_panel = tols.outer / panels.len() as f64;
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_error = 0.0;
    let mut outer_evals = 0usize;
    let mut converged = true;
    for p in &panels {
        let r = if let Some(merges) = &p.sing_lo {
            let w = (p.hi - p.lo).sqrt();
            integrate_finite_c(|t| engine.inner_substituted(p.lo, 1.0, t, merges), 0.0, w, tol_panel)
        } else if let Some(merges) = &p.sing_hi {
            let w = (p.hi - p.lo).sqrt();
            integrate_finite_c(
                |t| engine.inner_substituted(p.hi, -1.0, t, merges),
                0.0,
                w,
                tol_panel,
            )
        } else {
            integrate_finite_c(|y| engine.inner(y), p.lo, p.hi, tol_panel)
        };
        value += r.value;
        abs_error += r.abs_error;
        outer_evals += r.evaluations;
        converged &= r.converged;
    }

    converged &= !engine.poisoned.get();
    Ok(ComplexEstimate {
        value: -value,
        abs_error: abs_error + tols.inner * y_hi,
        evaluations: engine.evals.get() + outer_evals,
        converged,
    })
}

/// Concurrence per squared coupling: C = 2 max(0, |X| - P); the detectors are
/// identical, so P_A = P_B = P.
pub fn concurrence(
    scenario: Scenario,
    cfg: &PhysicalConfig,
    tols: &Tolerances,
) -> Result<f64, ObservableError> {
    Ok(evaluate(scenario, cfg, tols)?.concurrence_over_lambda2)
}

/// Compute the full observable record for one (scenario, config) pair.
pub fn evaluate(
    scenario: Scenario,
    cfg: &PhysicalConfig,
    tols: &Tolerances,
) -> Result<ObservableRecord, ObservableError> {
    cfg.validate()?;
    let (p, x) = match scenario {
        Scenario::Inertial => {
            let p = Estimate {
                value: transition_probability_rest(cfg.omega_sigma),
                abs_error: 0.0,
                evaluations: 0,
                converged: true,
            };
            let x = ComplexEstimate {
                value: x_rest(cfg),
                abs_error: 0.0,
                evaluations: 0,
                converged: true,
            };
            (p, x)
        }
        _ => (transition_probability(cfg)?, x_nonlocal(scenario, cfg, tols)?),
    };
    let concurrence = 2.0 * (x.value.norm() - p.value).max(0.0);
    Ok(ObservableRecord {
        scenario,
        a_sigma: cfg.a_sigma,
        omega_sigma: cfg.omega_sigma,
        l_sigma: cfg.l_sigma,
        p_over_lambda2: p.value,
        re_x_over_lambda2: x.value.re,
        im_x_over_lambda2: x.value.im,
        concurrence_over_lambda2: concurrence,
        p_error: p.abs_error,
        x_error: x.abs_error,
        converged: p.converged && x.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn p_rest_closed_form_values() {
        // Omega = 0: 1/(4 pi).
        assert_relative_eq!(
            transition_probability_rest(0.0),
            0.07957747154594767,
            max_relative = 1e-14
        );
        // mpmath oracle at 30 digits.
        assert_relative_eq!(
            transition_probability_rest(1.0),
            0.007088272232636416,
            max_relative = 1e-13
        );
        let far = transition_probability_rest(20.0);
        assert!(far > 0.0 && far < 1e-6);
    }

    #[test]
    fn acceleration_profile_small_s_limit() {
        assert_relative_eq!(acceleration_profile(0.0), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(acceleration_profile(1e-9), 1.0 / 3.0, max_relative = 1e-12);
        // series branch consistent with the direct form at the switch point
        assert_relative_eq!(
            acceleration_profile(0.499999),
            acceleration_profile(0.500001),
            max_relative = 1e-12
        );
    }

    #[test]
    fn p_accelerated_dispatches_to_rest_below_a_min() {
        let cfg = PhysicalConfig::new(1e-9, 0.5, 1.0);
        let p = transition_probability(&cfg).unwrap();
        assert_eq!(p.value, transition_probability_rest(0.5));
    }

    #[test]
    fn p_accelerated_small_a_matches_rest() {
        let cfg = PhysicalConfig::new(1e-4, 0.5, 1.0);
        let p = transition_probability(&cfg).unwrap();
        assert_relative_eq!(p.value, transition_probability_rest(0.5), max_relative = 1e-6);
    }

    #[test]
    fn p_accelerated_golden() {
        // mpmath adaptive quadrature of the same integrand at 30 digits.
        let cfg = PhysicalConfig::new(1.0, 1.0, 1.0);
        let p = transition_probability(&cfg).unwrap();
        assert!(p.converged);
        assert_relative_eq!(p.value, 0.012309374911707275, max_relative = 1e-8);
        let cfg = PhysicalConfig::new(0.5, 2.0, 1.0);
        let p = transition_probability(&cfg).unwrap();
        assert_relative_eq!(p.value, 2.0982320296138245e-4, max_relative = 1e-8);
        // Strong Unruh regime.
        let cfg = PhysicalConfig::new(2.0, 0.01, 1.0);
        let p = transition_probability(&cfg).unwrap();
        assert_relative_eq!(p.value, 0.11924668222066154, max_relative = 1e-8);
    }

    #[test]
    fn x_rest_values() {
        // mpmath oracle: X(0, 1) = -0.0675511484623942 - 0.1098478223669306 i.
        let x = x_rest(&PhysicalConfig::new(0.0, 0.0, 1.0));
        assert_relative_eq!(x.re, -0.06755114846239422, max_relative = 1e-12);
        assert_relative_eq!(x.im, -0.10984782236693060, max_relative = 1e-12);
        assert_relative_eq!(x.norm(), 0.12895620084875781, max_relative = 1e-12);

        let x = x_rest(&PhysicalConfig::new(0.0, 0.5, 0.5));
        assert_relative_eq!(x.re, -0.05945612591770632, max_relative = 1e-12);
        assert_relative_eq!(x.im, -0.20638495850621781, max_relative = 1e-12);
    }

    #[test]
    fn x_rest_large_gap_and_large_separation() {
        let x = x_rest(&PhysicalConfig::new(0.0, 10.0, 1.0));
        assert!(x.norm() < 1e-40);
        let x = x_rest(&PhysicalConfig::new(0.0, 0.0, 20.0));
        assert!(x.norm().is_finite() && x.norm() > 0.0);
        assert_relative_eq!(x.norm(), 1.6255142802739183e-3, max_relative = 1e-12);
    }

    #[test]
    fn resonance_gap_values() {
        // aL = 2, a = 1: arccos(0) = pi/2.
        let cfg = PhysicalConfig::new(1.0, 0.0, 2.0);
        assert_relative_eq!(resonance_gap(&cfg).unwrap(), PI / 2.0, max_relative = 1e-14);
        // aL -> 0: arccos(1) = 0.
        let cfg = PhysicalConfig::new(1.0, 0.0, 1e-12);
        assert!(resonance_gap(&cfg).unwrap() < 1e-5);
        // aL = 5: outside the domain.
        let cfg = PhysicalConfig::new(2.5, 0.0, 2.0);
        assert!(matches!(
            resonance_gap(&cfg).unwrap_err(),
            ObservableError::ResonanceDomain(_)
        ));
    }

    #[test]
    fn concurrence_closed_form_composition() {
        // Inertial, Omega = 0, L = 1: 2(|X| - P) from the two closed forms.
        let cfg = PhysicalConfig::new(0.0, 0.0, 1.0);
        let c = concurrence(Scenario::Inertial, &cfg, &Tolerances::default()).unwrap();
        assert_relative_eq!(c, 0.09875745860562028, max_relative = 1e-11);
        // Gaussian suppression at L = 10 pushes |X| far below P.
        let cfg = PhysicalConfig::new(0.0, 0.0, 10.0);
        assert_eq!(concurrence(Scenario::Inertial, &cfg, &Tolerances::default()).unwrap(), 0.0);
    }

    #[test]
    fn concurrence_is_recomputable_from_parts() {
        let cfg = PhysicalConfig::new(0.5, 0.5, 0.5);
        let tols = Tolerances::from_target(1e-8);
        let rec = evaluate(Scenario::Parallel, &cfg, &tols).unwrap();
        let expect = 2.0 * (rec.abs_x() - rec.p_over_lambda2).max(0.0);
        assert_eq!(rec.concurrence_over_lambda2, expect);
    }

    #[test]
    fn x_nonlocal_dispatches_below_a_min() {
        let cfg = PhysicalConfig::new(1e-8, 0.5, 1.0);
        let x = x_nonlocal(Scenario::Parallel, &cfg, &Tolerances::default()).unwrap();
        assert_eq!(x.value, x_rest(&cfg));
    }

    #[test]
    fn x_nonlocal_rejects_inertial() {
        let cfg = PhysicalConfig::new(0.5, 0.5, 1.0);
        assert!(x_nonlocal(Scenario::Inertial, &cfg, &Tolerances::default()).is_err());
    }

    // Checkpoint values from an independent epsilon-regularized 2-D
    // quadrature (vectorized Simpson inner, graded Gauss-Legendre outer,
    // Richardson in eps), accurate to ~1e-2 relative.
    #[test]
    fn x_nonlocal_checkpoints() {
        let tols = Tolerances::from_target(1e-8);
        let cfg = PhysicalConfig::new(0.5, 0.5, 0.5);

        let x = x_nonlocal(Scenario::Parallel, &cfg, &tols).unwrap();
        assert!(x.converged);
        assert_relative_eq!(x.value.re, -6.0413e-2, max_relative = 2e-2);
        assert_relative_eq!(x.value.im, -1.9799e-1, max_relative = 2e-2);

        let x = x_nonlocal(Scenario::AntiParallel, &cfg, &tols).unwrap();
        assert!(x.converged);
        assert_relative_eq!(x.value.re, -6.4145e-2, max_relative = 2e-2);
        assert_relative_eq!(x.value.im, -1.7363e-1, max_relative = 2e-2);

        let x = x_nonlocal(Scenario::Perpendicular, &cfg, &tols).unwrap();
        assert!(x.converged);
        assert_relative_eq!(x.value.re, -6.2525e-2, max_relative = 2e-2);
        assert_relative_eq!(x.value.im, -1.8230e-1, max_relative = 2e-2);

        // aL = 3 > 2: no poles anywhere, X is purely real.
        let cfg = PhysicalConfig::new(3.0, 0.5, 1.0);
        let x = x_nonlocal(Scenario::AntiParallel, &cfg, &tols).unwrap();
        assert_relative_eq!(x.value.re, -3.7883e-2, max_relative = 2e-2);
        assert!(x.value.im.abs() < 1e-7);
    }

    #[test]
    fn x_nonlocal_small_a_approaches_rest() {
        let tols = Tolerances::from_target(1e-8);
        let rest = x_rest(&PhysicalConfig::new(0.0, 0.5, 0.5));
        for &scenario in &[Scenario::Parallel, Scenario::AntiParallel, Scenario::Perpendicular] {
            let cfg = PhysicalConfig::new(1e-3, 0.5, 0.5);
            let x = x_nonlocal(scenario, &cfg, &tols).unwrap();
            let rel = (x.value - rest).norm() / rest.norm();
            assert!(rel < 1e-3, "{scenario:?}: relative deviation {rel:.2e}");
        }
    }

    #[test]
    fn x_nonlocal_parallel_inner_l_parity() {
        // The parallel kernel is even in L, so the inner integral must be too.
        let tols = Tolerances::from_target(1e-9);
        let cfg = PhysicalConfig::new(0.7, 0.6, 0.8);
        let neg = PhysicalConfig { l_sigma: -cfg.l_sigma, ..cfg };
        let engine_neg = InnerEngine::new(Scenario::Parallel, &neg, &tols).unwrap();
        let engine_pos = InnerEngine::new(Scenario::Parallel, &cfg, &tols).unwrap();
        for &y in &[0.3, 0.8, 1.2, 2.5] {
            let d = (engine_neg.inner(y) - engine_pos.inner(y)).norm();
            assert!(d <= 1e-10, "inner mismatch {d:.2e} at y = {y}");
        }
    }

    #[test]
    fn x_nonlocal_omega_parity() {
        // The kernel term set is x-even, so X(-Omega) = X(Omega).
        let tols = Tolerances::from_target(1e-9);
        for &scenario in &[Scenario::Parallel, Scenario::AntiParallel, Scenario::Perpendicular] {
            let plus = x_nonlocal(scenario, &PhysicalConfig::new(0.6, 0.7, 0.9), &tols).unwrap();
            let minus = x_nonlocal(scenario, &PhysicalConfig::new(0.6, -0.7, 0.9), &tols).unwrap();
            assert!((plus.value - minus.value).norm() <= 1e-8);
        }
    }
}
