//! Test functions, the two sides of the approximate trace formula, the
//! Gaussian mean-square sum and multiplicity moments of the length spectrum.
//!
//! With `ψ(s) = ∫ e^{su} φ(u) du`, shifting the contour of
//! `(1/2πi) ∫ Z'/Z(s) ψ(s) ds` from the right of `δ` to `Re s = ρ + ε̃`
//! turns the geodesic sum `Σ l(γ)/(1-e^{-kl(γ)}) φ(kl(γ))` into the sum of
//! `ψ` over the zeros with `Re s > ρ` plus the integral along the new line.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schottky::SchottkyGroup;
use crate::words::{length_spectrum, LengthSpectrum, DEFAULT_BIN_TOL};
use crate::zeta::Resonance;

pub const QUAD_TOL: f64 = 1e-12;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_EPS: f64 = 0.05;
/// `ε̃` is accepted once `|Z| >= ZETA_FLOOR` along the shifted line.
pub const ZETA_FLOOR: f64 = 1e-6;
/// Spacing of the `|Z|` samples along the shifted line.
const LINE_STEP: f64 = 0.05;
/// Furthest `|Im s|` scanned for the tail of `ψ`.
const TAIL_SCAN_MAX: f64 = 5000.0;
const MAX_DEPTH: u32 = 48;
/// Absolute quadrature tolerance for the error integral.
const BOUND_TOL: f64 = 1e-7;

fn smooth_step(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Plateau bump: 1 on `[-1, 1]`, 0 outside `(-2, 2)`, smooth in between.
pub fn bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let u = smooth_step(2.0 - a);
        u / (u + smooth_step(a - 1.0))
    }
}

fn simpson_rec<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth >= MAX_DEPTH || diff.norm() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Adaptive Simpson to absolute tolerance `tol`, started from `panels`
/// equal pieces so that oscillating integrands are not undersampled.
pub fn adaptive_simpson<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64, panels: usize) -> C64 {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let mut total = C64::new(0.0, 0.0);
    for k in 0..n {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson_rec(f, x0, x1, f0, fm, f1, whole, tol / n as f64, 0);
    }
    total
}

/// `φ̂(w) = ∫ e^{-iwu} φ(u) du` for complex `w`. The plateau contributes
/// `2 sin(w)/w` exactly; the two transition pieces are equal by symmetry.
pub fn bump_transform(w: C64) -> C64 {
    let plateau = if w.norm() < 1e-4 {
        let w2 = w * w;
        2.0 * (1.0 - w2 / 6.0 + w2 * w2 / 120.0)
    } else {
        2.0 * w.sin() / w
    };
    let panels = (w.re.abs() / 2.0).ceil() as usize + 2;
    let edge = adaptive_simpson(&|u: f64| (w * u).cos() * bump(u), 1.0, 2.0, 0.25 * QUAD_TOL, panels);
    plateau + 2.0 * edge
}

/// Trapezoid rule for `φ̂` on a fixed grid of step `1/512`. The bump is
/// smooth with compact support, so the error is governed by `|φ̂|` near the
/// aliasing frequency `2π·512` and is negligible for `|Re w|` below a few
/// hundred. Used where `φ̂` is needed at thousands of points.
pub struct GridTransform {
    nodes: Vec<(f64, f64)>,
    h: f64,
}

impl GridTransform {
    pub fn new() -> Self {
        let h = 1.0 / 512.0;
        // u > 0 half of the grid, weights doubled by symmetry
        let nodes = (1..1024)
            .map(|j| {
                let u = j as f64 * h;
                (u, bump(u))
            })
            .collect();
        GridTransform { nodes, h }
    }

    pub fn eval(&self, w: C64) -> C64 {
        let s: C64 = self.nodes.iter().map(|&(u, f)| f * (w * u).cos()).sum();
        self.h * (1.0 + 2.0 * s)
    }

    pub fn psi(&self, tf: &TestFunction, s: C64) -> C64 {
        let w = C64::new(tf.xi, 0.0) + C64::i() * s;
        tf.amplitude * C64::from_polar(1.0, -tf.xi * tf.t) * (s * tf.t).exp() * self.eval(w)
    }
}

impl Default for GridTransform {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub xi: f64,
    pub t: f64,
    /// Overall factor multiplying the bump.
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(xi: f64, t: f64) -> Self {
        TestFunction { xi, t, amplitude: 1.0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        TestFunction {
            amplitude: self.amplitude * c,
            ..self
        }
    }

    /// `φ_{ξ,T}(x) = e^{-iξx} φ(x - T)`.
    pub fn eval(&self, x: f64) -> C64 {
        self.amplitude * C64::from_polar(1.0, -self.xi * x) * bump(x - self.t)
    }

    /// Lengths outside this interval do not contribute.
    pub fn support(&self) -> (f64, f64) {
        (self.t - 2.0, self.t + 2.0)
    }
}

/// `ψ_{ξ,T}(s) = e^{-iξT} e^{sT} φ̂(ξ + is)`.
pub fn psi_eval(tf: &TestFunction, s: C64) -> C64 {
    let w = C64::new(tf.xi, 0.0) + C64::i() * s;
    tf.amplitude * C64::from_polar(1.0, -tf.xi * tf.t) * (s * tf.t).exp() * bump_transform(w)
}

fn check_complete(spec: &LengthSpectrum, needed: f64) -> Result<()> {
    if spec.certified < needed {
        return Err(Error::IncompleteSpectrum {
            needed,
            certified: spec.certified,
        });
    }
    Ok(())
}

/// `Σ l(γ)/(1-e^{-kl(γ)}) φ_{ξ,T}(kl(γ))` over the entries in the support.
pub fn geodesic_side_from(spec: &LengthSpectrum, tf: &TestFunction) -> Result<C64> {
    let (lo, hi) = tf.support();
    check_complete(spec, hi)?;
    Ok(spec
        .entries
        .iter()
        .filter(|e| e.ell > lo && e.ell < hi)
        .map(|e| e.weight / (1.0 - (-e.ell).exp()) * tf.eval(e.ell))
        .sum())
}

pub fn geodesic_side(g: &SchottkyGroup, tf: &TestFunction) -> Result<C64> {
    let hi = tf.support().1;
    geodesic_side_from(&length_spectrum(g, hi.max(0.0), DEFAULT_BIN_TOL), tf)
}

/// Zeros `-k + 2πim/ℓ₀` (order 2) of the cylinder zeta function with
/// `Re > rho` and `|Im| <= height`.
pub fn cylinder_resonances(l0: f64, rho: f64, height: f64) -> Vec<Resonance> {
    let step = 2.0 * std::f64::consts::PI / l0;
    let mmax = (height / step).floor() as i64;
    let mut out = Vec::new();
    let mut k = 0i64;
    while (-k as f64) > rho {
        for m in -mmax..=mmax {
            out.push(Resonance {
                s: C64::new(-k as f64, m as f64 * step),
                order: 2,
                newton_residual: 0.0,
                box_id: 0,
                rect: crate::zeta::Rect {
                    re_min: rho,
                    re_max: 0.0,
                    im_min: -height,
                    im_max: height,
                },
                newton_steps: Vec::new(),
            });
        }
        k += 1;
    }
    out
}

/// Closed-form cylinder zeta `Π_n (1 - e^{-(s+n)ℓ₀})²`, truncated once the
/// factors reach 1 in double precision.
pub fn cylinder_zeta(l0: f64, s: C64) -> C64 {
    let mut z = C64::new(1.0, 0.0);
    let mut n = 0.0;
    loop {
        let q = (-(s + n) * l0).exp();
        z *= (1.0 - q) * (1.0 - q);
        if q.norm() < 1e-18 {
            return z;
        }
        n += 1.0;
    }
}

/// Adds the conjugate of every zero with nonzero imaginary part.
pub fn with_conjugates(zeros: &[Resonance]) -> Vec<Resonance> {
    let mut out = zeros.to_vec();
    for r in zeros {
        if r.s.im.abs() > 1e-9 {
            out.push(Resonance { s: r.s.conj(), ..r.clone() });
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct TraceCheckOptions {
    pub eps: f64,
    pub tail_tol: f64,
    /// The resonance list is complete in `{Re s > ρ, |Im s| <= coverage}`.
    pub coverage: f64,
    /// Exponent of the weight `(1+|x|)^δ` in the error integral; also the
    /// largest real part a zero can have.
    pub delta: f64,
}

impl TraceCheckOptions {
    pub fn new(delta: f64, coverage: f64) -> Self {
        TraceCheckOptions {
            eps: DEFAULT_EPS,
            tail_tol: DEFAULT_TAIL_TOL,
            coverage,
            delta,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceCheckReport {
    pub t: f64,
    pub xi: f64,
    pub geodesic_side: C64,
    pub resonance_side: C64,
    pub rho: f64,
    pub eps_tilde: f64,
    pub residual: C64,
    /// `∫ (1+|x|)^δ |ψ(ρ+ε̃+ix)| dx`.
    pub bound_estimate: f64,
    /// Height beyond which `|ψ| < tail_tol` on `ρ <= Re s <= δ`.
    pub coverage_needed: f64,
    /// Smallest sampled `|Z|` on the shifted line, when `Z` was supplied.
    pub min_zeta_on_line: Option<f64>,
    pub zeros_used: usize,
}

/// Largest `|Im s|` with `|ψ(σ+i Im s)| >= tol`, sampled every 0.5 in
/// `|Im s - ξ|`. `|ψ|` depends on `Im s` only through `|Im s - ξ|`.
pub fn tail_height(tf: &TestFunction, sigma: f64, tol: f64) -> f64 {
    let ft = GridTransform::new();
    let mut last = 0.0f64;
    let mut quiet = 0.0;
    let mut y = 0.0;
    while y <= TAIL_SCAN_MAX {
        if ft.psi(tf, C64::new(sigma, tf.xi + y)).norm() >= tol {
            last = y;
            quiet = 0.0;
        } else {
            quiet += 0.5;
            // the envelope decays monotonically once past the bulk
            if quiet > 50.0 + 0.2 * y {
                break;
            }
        }
        y += 0.5;
    }
    tf.xi.abs() + last
}

/// `∫ (1+|x|)^δ |ψ(σ+ix)| dx`, cut where the integrand falls below `1e-3 tol`.
pub fn error_integral(tf: &TestFunction, sigma: f64, delta: f64, tol: f64) -> f64 {
    let ft = GridTransform::new();
    let h = tail_height(tf, sigma, 1e-3 * tol) + 1.0;
    let f = |x: f64| C64::new((1.0 + x.abs()).powf(delta) * ft.psi(tf, C64::new(sigma, x)).norm(), 0.0);
    adaptive_simpson(&f, -h, h, tol, h.ceil() as usize).re
}

/// Both sides of the approximate trace formula for zeros with `Re > rho`.
/// `zeta`, when given, is used to move `ε̃` off the zero set.
pub fn resonance_check(
    spec: &LengthSpectrum,
    tf: &TestFunction,
    rho: f64,
    resonances: &[Resonance],
    opts: &TraceCheckOptions,
    zeta: Option<&(dyn Fn(C64) -> C64 + Sync)>,
) -> Result<TraceCheckReport> {
    if !(opts.eps > 0.0 && opts.tail_tol > 0.0) {
        return Err(Error::Domain("eps and tail tolerance must be positive".into()));
    }
    let sigma_max = opts.delta.max(rho + 2.0 * opts.eps);
    let need = tail_height(tf, sigma_max, opts.tail_tol);
    if opts.coverage < need {
        return Err(Error::Coverage {
            have: opts.coverage,
            need,
        });
    }

    let mut eps_tilde = opts.eps;
    let mut min_zeta = None;
    if let Some(z) = zeta {
        let n = (need / LINE_STEP).ceil() as i64;
        loop {
            let m = (-n..=n)
                .map(|k| z(C64::new(rho + eps_tilde, k as f64 * LINE_STEP)).norm())
                .fold(f64::INFINITY, f64::min);
            min_zeta = Some(m);
            if m >= ZETA_FLOOR || eps_tilde + 0.25 * opts.eps > 2.0 * opts.eps + 1e-12 {
                break;
            }
            eps_tilde += 0.25 * opts.eps;
        }
    }

    let geodesic = geodesic_side_from(spec, tf)?;
    let used: Vec<&Resonance> = resonances
        .iter()
        .filter(|r| r.s.re > rho && r.s.im.abs() <= opts.coverage)
        .collect();
    let resonance_side: C64 = used.iter().map(|r| r.order as f64 * psi_eval(tf, r.s)).sum();
    let bound = error_integral(tf, rho + eps_tilde, opts.delta, BOUND_TOL);
    Ok(TraceCheckReport {
        t: tf.t,
        xi: tf.xi,
        geodesic_side: geodesic,
        resonance_side,
        rho,
        eps_tilde,
        residual: geodesic - resonance_side,
        bound_estimate: bound,
        coverage_needed: need,
        min_zeta_on_line: min_zeta,
        zeros_used: used.len(),
    })
}

pub fn write_report_csv<W: std::io::Write>(rows: &[TraceCheckReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "T",
        "rho",
        "geodesic_side_re",
        "geodesic_side_im",
        "resonance_side_re",
        "resonance_side_im",
        "residual_abs",
        "bound_estimate",
    ])?;
    for r in rows {
        wr.write_record([
            format!("{}", r.t),
            format!("{}", r.rho),
            format!("{:.15e}", r.geodesic_side.re),
            format!("{:.15e}", r.geodesic_side.im),
            format!("{:.15e}", r.resonance_side.re),
            format!("{:.15e}", r.resonance_side.im),
            format!("{:.6e}", r.residual.norm()),
            format!("{:.6e}", r.bound_estimate),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Coefficient `a_ℓ = ℓ̃ m(ℓ)/(1-e^{-ℓ})` and `φ(ℓ-T)` for each entry in the support.
fn weighted_entries(spec: &LengthSpectrum, t: f64) -> Vec<(f64, f64)> {
    spec.entries
        .iter()
        .filter(|e| (e.ell - t).abs() < 2.0)
        .map(|e| (e.ell, e.weight / (1.0 - (-e.ell).exp()) * bump(e.ell - t)))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanSquare {
    pub sigma: f64,
    pub t: f64,
    pub g: f64,
    pub diagonal: f64,
}

/// `G(σ,T) = √σ ∫ e^{-σξ²} |S_{ξ,T}|² dξ` in closed form, `S_{ξ,T}` being
/// the geodesic side for `φ_{ξ,T}`.
pub fn mean_square_from(spec: &LengthSpectrum, sigma: f64, t: f64) -> Result<MeanSquare> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    check_complete(spec, t + 2.0)?;
    let v = weighted_entries(spec, t);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut g = 0.0;
    let mut diag = 0.0;
    for (i, &(li, ai)) in v.iter().enumerate() {
        diag += ai * ai;
        for &(lj, aj) in &v[i + 1..] {
            g += 2.0 * ai * aj * (-(li - lj).powi(2) / (4.0 * sigma)).exp();
        }
    }
    Ok(MeanSquare {
        sigma,
        t,
        g: sqrt_pi * (g + diag),
        diagonal: sqrt_pi * diag,
    })
}

pub fn mean_square_g(g: &SchottkyGroup, sigma: f64, t: f64) -> Result<MeanSquare> {
    mean_square_from(&length_spectrum(g, t + 2.0, DEFAULT_BIN_TOL), sigma, t)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentWindow {
    pub t: f64,
    /// `Σ m(ℓ)` over `T-1 <= ℓ <= T+1`.
    pub m_sum: f64,
    pub m2_sum: f64,
    /// Number of distinct lengths in the window.
    pub distinct: usize,
    /// Largest number of distinct traces in a unit interval `[n, n+1]`
    /// meeting the window (integer-trace groups only).
    pub cluster_max: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentLadder {
    pub windows: Vec<MomentWindow>,
    /// Least-squares slopes of the logarithms against `T`.
    pub m_exponent: Option<f64>,
    pub m2_exponent: Option<f64>,
    pub distinct_exponent: Option<f64>,
}

pub fn moment_window(spec: &LengthSpectrum, t: f64) -> Result<MomentWindow> {
    check_complete(spec, t + 1.0)?;
    let inside: Vec<_> = spec.entries.iter().filter(|e| (e.ell - t).abs() <= 1.0).collect();
    let m_sum = inside.iter().map(|e| e.multiplicity as f64).sum();
    let m2_sum = inside.iter().map(|e| (e.multiplicity as f64).powi(2)).sum();
    let cluster_max = spec.exact_keys.then(|| {
        let mut traces: Vec<i128> = inside
            .iter()
            .map(|e| (2.0 * (0.5 * e.ell).cosh()).round() as i128)
            .collect();
        traces.sort_unstable();
        traces.dedup();
        let mut best = 0;
        for (i, &a) in traces.iter().enumerate() {
            best = best.max(traces[i..].iter().take_while(|&&b| b <= a + 1).count());
        }
        best
    });
    Ok(MomentWindow {
        t,
        m_sum,
        m2_sum,
        distinct: inside.len(),
        cluster_max,
    })
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn moment_ladder(spec: &LengthSpectrum, ts: &[f64]) -> Result<MomentLadder> {
    let windows = ts
        .iter()
        .map(|&t| moment_window(spec, t))
        .collect::<Result<Vec<_>>>()?;
    let fit = |f: &dyn Fn(&MomentWindow) -> f64| {
        let pts: Vec<(f64, f64)> = windows
            .iter()
            .filter(|w| f(w) > 0.0)
            .map(|w| (w.t, f(w).ln()))
            .collect();
        slope(&pts)
    };
    Ok(MomentLadder {
        m_exponent: fit(&|w| w.m_sum),
        m2_exponent: fit(&|w| w.m2_sum),
        distinct_exponent: fit(&|w| w.distinct as f64),
        windows,
    })
}

/// Window sums on a T-ladder; the spectrum is computed once up to `max T + 1`.
pub fn multiplicity_moments(g: &SchottkyGroup, ts: &[f64]) -> Result<MomentLadder> {
    let top = ts.iter().cloned().fold(0.0, f64::max) + 1.0;
    moment_ladder(&length_spectrum(g, top, DEFAULT_BIN_TOL), ts)
}
