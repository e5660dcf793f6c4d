//! Zeros of an entire function in a rectangle: grid scan for local minima of
//! `|Z|`, Newton refinement, and argument-principle certification.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schottky::SchottkyGroup;

use super::transfer::FredholmEvaluator;

/// Phase change above which a boundary segment is split.
const MAX_PHASE_STEP: f64 = 0.5;
const MAX_SPLIT_DEPTH: u32 = 40;
const WINDING_TOL: f64 = 0.05;
const MAX_NUDGES: usize = 3;
const CENTROID_SAMPLES: usize = 64;
const MERGE_DIST: f64 = 1e-6;
/// Half-width of the order-certification square, in grid steps.
const CERT_FRACTION: f64 = 0.1;
/// Newton gives up when the step has not shrunk over this many iterations.
const STALL_RUN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::Domain(format!(
                "empty rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// Parses `re_min,re_max,im_min,im_max`.
    pub fn parse(text: &str) -> Result<Self> {
        let v: Vec<f64> = text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("bad rectangle '{text}': {e}")))?;
        if v.len() != 4 {
            return Err(Error::Domain(format!("rectangle needs 4 numbers, got '{text}'")));
        }
        Rect::new(v[0], v[1], v[2], v[3])
    }

    pub fn square(center: C64, half: f64) -> Self {
        Rect {
            re_min: center.re - half,
            re_max: center.re + half,
            im_min: center.im - half,
            im_max: center.im + half,
        }
    }

    pub fn contains(&self, s: C64) -> bool {
        s.re >= self.re_min && s.re <= self.re_max && s.im >= self.im_min && s.im <= self.im_max
    }

    pub fn expanded(&self, e: f64) -> Self {
        Rect {
            re_min: self.re_min - e,
            re_max: self.re_max + e,
            im_min: self.im_min - e,
            im_max: self.im_max + e,
        }
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    /// Distance from `s` to the boundary.
    fn boundary_distance(&self, s: C64) -> f64 {
        let dx = (s.re - self.re_min).abs().min((s.re - self.re_max).abs());
        let dy = (s.im - self.im_min).abs().min((s.im - self.im_max).abs());
        let inside_x = s.re >= self.re_min && s.re <= self.re_max;
        let inside_y = s.im >= self.im_min && s.im <= self.im_max;
        match (inside_x, inside_y) {
            (true, true) => dx.min(dy),
            (true, false) => dy,
            (false, true) => dx,
            (false, false) => dx.hypot(dy),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Resonance {
    pub s: C64,
    pub order: usize,
    /// `|Z|` at the reported point.
    pub newton_residual: f64,
    pub box_id: usize,
    pub rect: Rect,
    /// Step sizes `|Δs|` of the Newton iteration.
    #[serde(skip)]
    pub newton_steps: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub grid_step: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Depth of quadrant refinement allowed when the zero count and the
    /// boundary winding disagree.
    pub max_refinements: usize,
    pub box_id: usize,
}

impl SearchOptions {
    pub fn new(grid_step: f64) -> Self {
        SearchOptions {
            grid_step,
            newton_tol: 1e-10,
            max_newton: 60,
            max_refinements: 3,
            box_id: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceSearch {
    pub rect: Rect,
    /// Contour actually integrated (the rectangle after nudging).
    pub contour: Rect,
    pub zeros: Vec<Resonance>,
    pub winding: i64,
    /// Sum of the orders of the reported zeros inside the contour.
    pub zero_count: usize,
    pub consistent: bool,
    pub grid_step: f64,
    pub warnings: Vec<String>,
}

/// Phase change of `f` along the segment `a -> b`, split until every piece
/// changes phase by less than [`MAX_PHASE_STEP`].
fn segment_phase<F: Fn(C64) -> C64>(
    f: &F,
    a: C64,
    fa: C64,
    b: C64,
    fb: C64,
    depth: u32,
) -> Result<f64> {
    if fa.norm() == 0.0 || fb.norm() == 0.0 || !fa.norm().is_finite() || !fb.norm().is_finite() {
        return Err(Error::ContourThroughZero(0));
    }
    let d = (fb / fa).arg();
    if d.abs() <= MAX_PHASE_STEP {
        return Ok(d);
    }
    if depth >= MAX_SPLIT_DEPTH {
        return Err(Error::ContourThroughZero(0));
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    Ok(segment_phase(f, a, fa, m, fm, depth + 1)? + segment_phase(f, m, fm, b, fb, depth + 1)?)
}

/// Winding number of `f` around 0 along the counter-clockwise boundary of
/// `rect`, sampled initially every `h`.
pub fn winding_number<F: Fn(C64) -> C64 + Sync>(f: &F, rect: &Rect, h: f64) -> Result<i64> {
    let c = rect.corners();
    let mut pts = Vec::new();
    for e in 0..4 {
        let (a, b) = (c[e], c[(e + 1) % 4]);
        let n = (((b - a).norm() / h).ceil() as usize).max(2);
        for k in 0..n {
            pts.push(a + (b - a) * (k as f64 / n as f64));
        }
    }
    let vals: Vec<C64> = pts.par_iter().map(|&z| f(z)).collect();
    let n = pts.len();
    let phases: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let j = (k + 1) % n;
            segment_phase(f, pts[k], vals[k], pts[j], vals[j], 0)
        })
        .collect();
    let mut total = 0.0;
    for p in phases {
        total += p?;
    }
    let w = total / (2.0 * PI);
    if (w - w.round()).abs() > WINDING_TOL {
        return Err(Error::NonIntegerWinding(w));
    }
    Ok(w.round() as i64)
}

/// Winding number with automatic outward nudging of the contour when it
/// passes through (or too close to) a zero.
pub fn count_zeros_in_rect<F: Fn(C64) -> C64 + Sync>(
    f: &F,
    rect: &Rect,
    h: f64,
) -> Result<(i64, Rect)> {
    let mut r = *rect;
    for attempt in 0..=MAX_NUDGES {
        match winding_number(f, &r, h) {
            Ok(w) => return Ok((w, r)),
            Err(Error::ContourThroughZero(_)) | Err(Error::NonIntegerWinding(_))
                if attempt < MAX_NUDGES =>
            {
                r = r.expanded(h / 8.0);
            }
            Err(Error::ContourThroughZero(_)) => return Err(Error::ContourThroughZero(MAX_NUDGES)),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ContourThroughZero(MAX_NUDGES))
}

fn derivative<F: Fn(C64) -> C64>(f: &F, s: C64) -> C64 {
    let h = 1e-6 * (1.0 + s.norm());
    (f(s + h) - f(s - h)) / (2.0 * h)
}

struct NewtonResult {
    s: C64,
    steps: Vec<f64>,
}

fn newton<F: Fn(C64) -> C64>(f: &F, s0: C64, opts: &SearchOptions, bounds: &Rect) -> Option<NewtonResult> {
    let mut s = s0;
    let mut steps = Vec::new();
    for _ in 0..opts.max_newton {
        let v = f(s);
        if v.norm() == 0.0 {
            return Some(NewtonResult { s, steps });
        }
        let d = derivative(f, s);
        if d.norm() == 0.0 || !d.norm().is_finite() {
            break;
        }
        let mut step = v / d;
        // keep each step within a few grid cells
        let cap = 4.0 * opts.grid_step;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        s -= step;
        steps.push(step.norm());
        if !bounds.contains(s) {
            return None;
        }
        // a zero of any order shrinks the step at least geometrically
        if steps.len() > STALL_RUN {
            let k = steps.len();
            if steps[k - 1] > 0.9 * steps[k - 1 - STALL_RUN] {
                return None;
            }
        }
        if step.norm() < opts.newton_tol {
            break;
        }
    }
    let last = steps.last().copied().unwrap_or(0.0);
    (last < 1e-6).then_some(NewtonResult { s, steps })
}

/// Root position from the first moment of `f'/f` on a circle about `c`,
/// assuming exactly `order` zeros inside. `f'` comes from the discrete
/// Fourier series of the samples.
fn contour_centroid<F: Fn(C64) -> C64 + Sync>(f: &F, c: C64, radius: f64, order: usize) -> C64 {
    let q = CENTROID_SAMPLES;
    let e: Vec<C64> = (0..q)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / q as f64))
        .collect();
    let vals: Vec<C64> = e.par_iter().map(|w| f(c + radius * w)).collect();
    // Taylor coefficients a_k R^k
    let coef: Vec<C64> = (0..q)
        .map(|k| vals.iter().enumerate().map(|(j, v)| v * e[(k * j) % q].conj()).sum::<C64>() / q as f64)
        .collect();
    let mut moment = C64::new(0.0, 0.0);
    for j in 0..q {
        let mut d = C64::new(0.0, 0.0);
        for (k, a) in coef.iter().enumerate().skip(1) {
            d += a * k as f64 * e[((k - 1) * j) % q];
        }
        // d = R f'(z_j); (z_j - c) f'/f dz/(2πi) -> R e_j * R f' e_j / f / Q
        moment += radius * e[j] * d * e[j] / vals[j];
    }
    c + moment / (q as f64 * order as f64)
}

/// Zeros of `f` in `rect` (see module docs). When the zeros found do not
/// account for the boundary winding, quadrants whose own winding disagrees
/// with the zeros inside them are searched again at half the grid step.
pub fn find_zeros<F: Fn(C64) -> C64 + Sync>(
    f: &F,
    rect: &Rect,
    opts: SearchOptions,
) -> Result<ResonanceSearch> {
    if !(opts.grid_step > 0.0) {
        return Err(Error::Domain("grid step must be positive".into()));
    }
    let mut warnings = Vec::new();
    let h = opts.grid_step;
    let zeros = scan(f, rect, h, &opts, &mut warnings);
    let contour = nudged(rect, &zeros, h);
    let winding = contour_winding(f, &contour, &zeros, h)?;
    let mut zeros = zeros;
    if order_sum(&zeros, &contour) as i64 != winding {
        refine(f, &contour, &mut zeros, h, opts.max_refinements, &opts, &mut warnings);
    }
    zeros.retain(|z| contour.contains(z.s) && contour.boundary_distance(z.s) > 0.0);
    zeros.sort_by(|a, b| a.s.im.total_cmp(&b.s.im).then(a.s.re.total_cmp(&b.s.re)));
    for z in &mut zeros {
        z.rect = *rect;
    }
    let zero_count = order_sum(&zeros, &contour);
    if zero_count as i64 != winding {
        warnings.push(format!(
            "zero count {zero_count} differs from boundary winding {winding} after {} refinements",
            opts.max_refinements
        ));
    }
    Ok(ResonanceSearch {
        rect: *rect,
        contour,
        consistent: zero_count as i64 == winding,
        zeros,
        winding,
        zero_count,
        grid_step: h,
        warnings,
    })
}

fn order_sum(zeros: &[Resonance], r: &Rect) -> usize {
    zeros
        .iter()
        .filter(|z| r.contains(z.s) && r.boundary_distance(z.s) > 0.0)
        .map(|z| z.order)
        .sum()
}

/// Moves each edge by at most `h/4` so that it stays as far as possible from
/// the known zeros near it, without changing which side of the edge any zero
/// lies on (a zero within roundoff of an edge counts as inside).
fn nudged(rect: &Rect, zeros: &[Resonance], h: f64) -> Rect {
    let eps = h / 4.0;
    let near = rect.expanded(eps);
    let pick = |x: f64, coords: &[f64], inside_above: bool| -> f64 {
        let mut best = (x, f64::NEG_INFINITY);
        for k in 0..=64 {
            let cand = x - eps + 2.0 * eps * k as f64 / 64.0;
            let keeps = coords.iter().all(|&c| {
                let tol = 1e-9 * (1.0 + x.abs());
                let was_in = if inside_above { c >= x - tol } else { c <= x + tol };
                let is_in = if inside_above { c >= cand } else { c <= cand };
                was_in == is_in
            });
            if !keeps {
                continue;
            }
            let gap = coords.iter().map(|c| (c - cand).abs()).fold(f64::INFINITY, f64::min);
            // prefer the original edge among equally good candidates
            let score = gap.min(eps) - 1e-9 * (cand - x).abs();
            if score > best.1 {
                best = (cand, score);
            }
        }
        best.0
    };
    let re: Vec<f64> = zeros.iter().filter(|z| near.contains(z.s)).map(|z| z.s.re).collect();
    let im: Vec<f64> = zeros.iter().filter(|z| near.contains(z.s)).map(|z| z.s.im).collect();
    Rect {
        re_min: pick(rect.re_min, &re, true),
        re_max: pick(rect.re_max, &re, false),
        im_min: pick(rect.im_min, &im, true),
        im_max: pick(rect.im_max, &im, false),
    }
}

/// Winding number with the boundary sampled no coarser than the distance to
/// the nearest known zero, so the phase cannot alias around it.
fn contour_winding<F: Fn(C64) -> C64 + Sync>(f: &F, r: &Rect, zeros: &[Resonance], h: f64) -> Result<i64> {
    let d = zeros
        .iter()
        .map(|z| r.boundary_distance(z.s))
        .fold(h, f64::min);
    let (w, _) = count_zeros_in_rect(f, r, d.max(h / 64.0))?;
    Ok(w)
}

fn refine<F: Fn(C64) -> C64 + Sync>(
    f: &F,
    rect: &Rect,
    zeros: &mut Vec<Resonance>,
    h: f64,
    depth: usize,
    opts: &SearchOptions,
    warnings: &mut Vec<String>,
) {
    if depth == 0 {
        return;
    }
    let hh = 0.5 * h;
    // split lines kept a quarter step away from known zeros
    let split = |mut x: f64, coord: fn(&Resonance) -> f64| {
        for _ in 0..8 {
            match zeros.iter().find(|z| (coord(z) - x).abs() < hh / 2.0) {
                Some(z) => x = coord(z) + hh,
                None => break,
            }
        }
        x
    };
    let xm = split(0.5 * (rect.re_min + rect.re_max), |z| z.s.re);
    let ym = split(0.5 * (rect.im_min + rect.im_max), |z| z.s.im);
    let quads = [
        (rect.re_min, xm, rect.im_min, ym),
        (xm, rect.re_max, rect.im_min, ym),
        (rect.re_min, xm, ym, rect.im_max),
        (xm, rect.re_max, ym, rect.im_max),
    ];
    for (a, b, c, d) in quads {
        let Ok(q) = Rect::new(a, b, c, d) else { continue };
        if let Ok(w) = contour_winding(f, &q, zeros, hh) {
            if w == order_sum(zeros, &q) as i64 {
                continue;
            }
        }
        let found = scan(f, &q, hh, opts, warnings);
        for z in found {
            if !zeros.iter().any(|u| (u.s - z.s).norm() < hh / 8.0) {
                zeros.push(z);
            }
        }
        let qc = nudged(&q, zeros, hh);
        if let Ok(w) = contour_winding(f, &qc, zeros, hh) {
            if w == order_sum(zeros, &qc) as i64 {
                continue;
            }
        }
        refine(f, &qc, zeros, hh, depth - 1, opts, warnings);
    }
}

/// Grid scan of `rect` (expanded by one step), Newton from every local
/// minimum of `|f|`, and certification of each candidate on a small square.
fn scan<F: Fn(C64) -> C64 + Sync>(
    f: &F,
    rect: &Rect,
    h: f64,
    opts: &SearchOptions,
    warnings: &mut Vec<String>,
) -> Vec<Resonance> {
    let grid_rect = rect.expanded(h);
    let nx = ((grid_rect.re_max - grid_rect.re_min) / h).round() as usize + 1;
    let ny = ((grid_rect.im_max - grid_rect.im_min) / h).round() as usize + 1;
    let at = |i: usize, j: usize| C64::new(grid_rect.re_min + i as f64 * h, grid_rect.im_min + j as f64 * h);
    let mags: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| f(at(idx % nx, idx / nx)).norm())
        .collect();
    let mut seeds = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v = mags[j * nx + i];
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    if mags[jj as usize * nx + ii as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push(at(i, j));
            }
        }
    }
    let bounds = rect.expanded(2.0 * h);
    let step_opts = SearchOptions { grid_step: h, ..*opts };
    let mut found: Vec<NewtonResult> = seeds
        .par_iter()
        .filter_map(|&s0| newton(f, s0, &step_opts, &bounds))
        .collect();

    // merge duplicates in a fixed order
    found.sort_by(|a, b| a.s.im.total_cmp(&b.s.im).then(a.s.re.total_cmp(&b.s.re)));
    let mut uniq: Vec<NewtonResult> = Vec::new();
    for r in found {
        if !uniq.iter().any(|u| (u.s - r.s).norm() < MERGE_DIST) {
            uniq.push(r);
        }
    }

    // the order is the winding on a square small against the grid step
    let mut zeros = Vec::new();
    for (k, r) in uniq.iter().enumerate() {
        let nearest = uniq
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, u)| (u.s - r.s).norm())
            .fold(f64::INFINITY, f64::min);
        let half = (CERT_FRACTION * h).min(0.45 * nearest);
        let sq = Rect::square(r.s, half);
        let order = match winding_number(f, &sq, half / 4.0) {
            Ok(w) if w > 0 => w as usize,
            Ok(_) => continue,
            Err(e) => {
                warnings.push(format!("could not certify candidate {}: {e}", r.s));
                continue;
            }
        };
        let mut s = r.s;
        if order >= 2 {
            for _ in 0..2 {
                s = contour_centroid(f, s, 0.5 * half, order);
            }
        }
        zeros.push(Resonance {
            s,
            order,
            newton_residual: f(s).norm(),
            box_id: opts.box_id,
            rect: *rect,
            newton_steps: r.steps.clone(),
        });
    }
    zeros
}

/// Resonances of `g` in `rect` from the Fredholm determinant of order `m`.
pub fn find_resonances(g: &SchottkyGroup, rect: &Rect, grid_step: f64, m: usize) -> Result<ResonanceSearch> {
    let ev = FredholmEvaluator::new(g, m)?;
    let f = |s: C64| ev.value(s);
    find_zeros(&f, rect, SearchOptions::new(grid_step))
}

/// Resonance CSV with columns `re, im, order, newton_residual, method, M, box_id`.
pub fn write_resonances_csv<W: std::io::Write>(zeros: &[Resonance], m: usize, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["re", "im", "order", "newton_residual", "method", "M", "box_id"])?;
    for r in zeros {
        wr.write_record([
            format!("{:.15e}", r.s.re),
            format!("{:.15e}", r.s.im),
            r.order.to_string(),
            format!("{:.3e}", r.newton_residual),
            "fredholm".to_string(),
            m.to_string(),
            r.box_id.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
