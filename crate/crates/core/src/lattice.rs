//! Orbit counting `N(T; z, z') = #{γ : d(z, γz') <= T}`, Poincaré series
//! partial sums and residuals against fitted exponential expansions.
//!
//! The counting walk extends reduced words on the right. With `z'` outside
//! every disc, all words beginning `P·a` send `z'` into the half-disc
//! `h_P(D_{a+p})`, so a prefix is dropped once the hyperbolic distance from
//! `z` to that half-disc exceeds `T`. The distance to a half-disc bounded by
//! the geodesic `|w - c| = r` is exact: `sinh d = (|z-c|² - r²) / (2 r Im z)`.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moebius::{Model, MoebiusMap, PointH};
use crate::schottky::{Disc, SchottkyGroup};
use crate::words::Word;

pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;
/// Slack added to `T` before a prefix is dropped.
const PRUNE_SLACK: f64 = 1e-9;
const MAX_REDUCTION_STEPS: usize = 10_000;

/// Disc-model origin and a point off the symmetry axes of the symmetric groups.
pub fn default_points() -> (PointH, PointH) {
    (
        PointH::disc(C64::new(0.0, 0.0)).expect("origin"),
        PointH::disc(C64::new(0.31, 0.17)).expect("inside the disc"),
    )
}

fn distance_h(z: C64, w: C64) -> f64 {
    2.0 * ((z - w).norm() / (2.0 * (z.im * w.im).sqrt())).asinh()
}

/// Hyperbolic distance from `z` to the half-disc over `disc`.
fn distance_to_half_disc(z: C64, disc: &Disc) -> f64 {
    let q = (z - disc.center).norm_sqr() - disc.radius * disc.radius;
    if q <= 0.0 {
        0.0
    } else {
        (q / (2.0 * disc.radius * z.im)).asinh()
    }
}

fn image_disc(m: &MoebiusMap, d: &Disc) -> Disc {
    let (x0, x1) = d.interval();
    let (y0, y1) = (m.apply_real(x0), m.apply_real(x1));
    Disc::new(C64::new(0.5 * (y0 + y1), 0.0), 0.5 * (y1 - y0).abs())
}

/// Moves `z` outside all discs. Returns the point `w` and the letters
/// `[i_k, ..., i_1]` of the element `u` with `w = u(z)`.
fn reduce_to_domain(g: &SchottkyGroup, z: C64) -> Result<(C64, Vec<usize>)> {
    let mut w = z;
    let mut letters = Vec::new();
    for _ in 0..MAX_REDUCTION_STEPS {
        match g.discs().iter().position(|d| d.contains(w)) {
            None => {
                letters.reverse();
                return Ok((w, letters));
            }
            Some(i) => {
                // letter i carries D_i onto the outside of its image disc
                w = g.letter(i).apply_c(w)?;
                letters.push(i);
            }
        }
    }
    Err(Error::NotInCodingDomain(z.re))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitCount {
    pub t: f64,
    pub z: PointH,
    pub z_prime: PointH,
    pub count: u64,
    /// `(word, d(z, γz'))` sorted by distance, when requested.
    pub elements: Option<Vec<(Word, f64)>>,
    pub visited_nodes: u64,
    pub pruned_nodes: u64,
}

struct Walk<'a> {
    g: &'a SchottkyGroup,
    z: C64,
    zp: C64,
    t: f64,
    keep: bool,
    budget: usize,
    visited: &'a AtomicUsize,
}

#[derive(Default)]
struct Tally {
    count: u64,
    pruned: u64,
    visited: u64,
    elements: Vec<(Vec<usize>, f64)>,
    over_budget: bool,
}

impl Walk<'_> {
    fn descend(&self, map: MoebiusMap, word: &mut Vec<usize>, out: &mut Tally) {
        let p = self.g.rank();
        let last = *word.last().expect("nonempty prefix");
        for a in 0..2 * p {
            if a == (last + p) % (2 * p) {
                continue;
            }
            self.visit(map, a, word, out);
            if out.over_budget {
                return;
            }
        }
    }

    fn visit(&self, map: MoebiusMap, a: usize, word: &mut Vec<usize>, out: &mut Tally) {
        let region = image_disc(&map, &self.g.discs()[self.g.image_disc(a)]);
        if distance_to_half_disc(self.z, &region) > self.t + PRUNE_SLACK {
            out.pruned += 1;
            return;
        }
        if self.visited.fetch_add(1, Ordering::Relaxed) >= self.budget {
            out.over_budget = true;
            return;
        }
        out.visited += 1;
        let child = map * self.g.letter(a);
        word.push(a);
        if let Ok(w) = child.apply_c(self.zp) {
            let d = distance_h(self.z, w);
            if d <= self.t {
                out.count += 1;
                if self.keep {
                    out.elements.push((word.clone(), d));
                }
            }
        }
        self.descend(child, word, out);
        word.pop();
    }
}

/// A word `γ'` counted for the reduced point corresponds to `γ' u` for the
/// original one.
fn reframe(p: usize, letters: &[usize], shift: &[usize]) -> Word {
    let mut out: Vec<usize> = Vec::with_capacity(letters.len() + shift.len());
    for &a in letters.iter().chain(shift) {
        if out.last() == Some(&((a + p) % (2 * p))) {
            out.pop();
        } else {
            out.push(a);
        }
    }
    Word::new(out)
}

pub fn orbit_count(g: &SchottkyGroup, z: PointH, z_prime: PointH, t: f64) -> Result<OrbitCount> {
    orbit_count_with(g, z, z_prime, t, false, DEFAULT_NODE_BUDGET)
}

/// Exact count with optional element list and node budget.
pub fn orbit_count_with(
    g: &SchottkyGroup,
    z: PointH,
    z_prime: PointH,
    t: f64,
    keep_elements: bool,
    budget: usize,
) -> Result<OrbitCount> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("T must be nonnegative, got {t}")));
    }
    let zi = g.to_internal(z)?;
    let (zp, shift) = reduce_to_domain(g, g.to_internal(z_prime)?)?;
    let visited = AtomicUsize::new(0);
    let walk = Walk {
        g,
        z: zi,
        zp,
        t,
        keep: keep_elements,
        budget,
        visited: &visited,
    };
    let tallies: Vec<Tally> = (0..g.n_letters())
        .into_par_iter()
        .map(|a| {
            let mut out = Tally::default();
            walk.visit(MoebiusMap::IDENTITY, a, &mut Vec::new(), &mut out);
            out
        })
        .collect();
    let d0 = distance_h(zi, zp);
    let mut count = (d0 <= t) as u64;
    let mut elements = Vec::new();
    if keep_elements && d0 <= t {
        elements.push((reframe(g.rank(), &[], &shift), d0));
    }
    let (mut vis, mut pruned, mut over) = (0, 0, false);
    for tl in tallies {
        count += tl.count;
        vis += tl.visited;
        pruned += tl.pruned;
        over |= tl.over_budget;
        elements.extend(tl.elements.into_iter().map(|(w, d)| (reframe(g.rank(), &w, &shift), d)));
    }
    if over {
        return Err(Error::SearchBudget {
            budget: budget as u64,
            partial: count,
        });
    }
    elements.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(OrbitCount {
        t,
        z,
        z_prime,
        count,
        elements: keep_elements.then_some(elements),
        visited_nodes: vis,
        pruned_nodes: pruned,
    })
}

/// Counts on a ladder of radii from a single walk at the largest radius.
pub fn orbit_counts(g: &SchottkyGroup, z: PointH, z_prime: PointH, ts: &[f64]) -> Result<Vec<OrbitCount>> {
    let top = ts.iter().cloned().fold(0.0, f64::max);
    let full = orbit_count_with(g, z, z_prime, top, true, DEFAULT_NODE_BUDGET)?;
    let dists: Vec<f64> = full.elements.as_ref().expect("kept").iter().map(|e| e.1).collect();
    Ok(ts
        .iter()
        .map(|&t| OrbitCount {
            t,
            z,
            z_prime,
            count: dists.partition_point(|&d| d <= t) as u64,
            elements: None,
            visited_nodes: full.visited_nodes,
            pruned_nodes: full.pruned_nodes,
        })
        .collect())
}

pub fn write_counts_csv<W: std::io::Write>(rows: &[OrbitCount], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["T", "N", "pruned_nodes", "visited_nodes"])?;
    for r in rows {
        wr.write_record([
            format!("{}", r.t),
            r.count.to_string(),
            r.pruned_nodes.to_string(),
            r.visited_nodes.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincarePartial {
    pub s: C64,
    pub depth: usize,
    pub value: C64,
    /// Sum over the words of each length `0..=depth`.
    pub shells: Vec<C64>,
    /// `|shell(depth)|`, the tail indicator.
    pub last_shell: f64,
}

/// `Σ e^{-s d(z, γz')}` over reduced words of length `<= depth`.
pub fn poincare_partial(g: &SchottkyGroup, s: C64, z: PointH, z_prime: PointH, depth: usize) -> Result<PoincarePartial> {
    let zi = g.to_internal(z)?;
    let zp = g.to_internal(z_prime)?;
    let p = g.rank();
    let mut shells = vec![C64::new(0.0, 0.0); depth + 1];
    shells[0] = (-s * distance_h(zi, zp)).exp();
    fn rec(
        g: &SchottkyGroup,
        s: C64,
        zi: C64,
        zp: C64,
        map: MoebiusMap,
        last: usize,
        n: usize,
        depth: usize,
        shells: &mut [C64],
    ) {
        let p = g.rank();
        for a in 0..2 * p {
            if n > 0 && a == (last + p) % (2 * p) {
                continue;
            }
            let child = map * g.letter(a);
            if let Ok(w) = child.apply_c(zp) {
                shells[n + 1] += (-s * distance_h(zi, w)).exp();
            }
            if n + 1 < depth {
                rec(g, s, zi, zp, child, a, n + 1, depth, shells);
            }
        }
    }
    if depth > 0 {
        let parts: Vec<Vec<C64>> = (0..2 * p)
            .into_par_iter()
            .map(|a| {
                let mut sh = vec![C64::new(0.0, 0.0); depth + 1];
                let child = g.letter(a);
                if let Ok(w) = child.apply_c(zp) {
                    sh[1] += (-s * distance_h(zi, w)).exp();
                }
                if depth > 1 {
                    rec(g, s, zi, zp, child, a, 1, depth, &mut sh);
                }
                sh
            })
            .collect();
        for sh in parts {
            for (k, v) in sh.into_iter().enumerate() {
                shells[k] += v;
            }
        }
    }
    Ok(PoincarePartial {
        s,
        depth,
        value: shells.iter().sum(),
        last_shell: shells[depth].norm(),
        shells,
    })
}

/// One exponent `δ_j` with a polynomial factor of the given degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub exponent: C64,
    pub degree: usize,
}

/// `Σ_j Q_j(T) e^{δ_j T}`; a complex exponent stands for the conjugate pair
/// and contributes cosine and sine columns.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionModel {
    pub terms: Vec<ExpansionTerm>,
    pub coefficients: Vec<f64>,
    pub window: (f64, f64),
}

fn basis(terms: &[ExpansionTerm], t: f64) -> Vec<f64> {
    let mut v = Vec::new();
    for term in terms {
        let e = (term.exponent.re * t).exp();
        for k in 0..=term.degree {
            let poly = t.powi(k as i32) * e;
            if term.exponent.im == 0.0 {
                v.push(poly);
            } else {
                v.push(poly * (term.exponent.im * t).cos());
                v.push(poly * (term.exponent.im * t).sin());
            }
        }
    }
    v
}

impl ExpansionModel {
    pub fn eval(&self, t: f64) -> f64 {
        basis(&self.terms, t).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }
}

/// Least-squares fit of the coefficients for fixed exponents, using the
/// counts with `T` inside `window`.
pub fn fit_expansion(
    counts: &[OrbitCount],
    terms: &[ExpansionTerm],
    window: (f64, f64),
    delta: f64,
) -> Result<ExpansionModel> {
    if let Some(bad) = terms.iter().find(|t| t.exponent.re > delta + 1e-9) {
        return Err(Error::Domain(format!(
            "exponent {} lies to the right of δ = {delta}",
            bad.exponent
        )));
    }
    let pts: Vec<&OrbitCount> = counts
        .iter()
        .filter(|c| c.t >= window.0 && c.t <= window.1)
        .collect();
    let ncoef = basis(terms, 1.0).len();
    if pts.len() < ncoef || ncoef == 0 {
        return Err(Error::DegenerateFit {
            points: pts.len(),
            coefficients: ncoef,
        });
    }
    let mut a = DMatrix::<f64>::zeros(pts.len(), ncoef);
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|c| c.count as f64));
    for (i, c) in pts.iter().enumerate() {
        for (j, v) in basis(terms, c.t).into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    // equilibrate columns before solving
    let scale: Vec<f64> = (0..ncoef).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
    Ok(ExpansionModel {
        terms: terms.to_vec(),
        coefficients: x.iter().zip(&scale).map(|(v, s)| v / s).collect(),
        window,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub t: f64,
    pub n: u64,
    pub model_value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    /// `(β, sup |R(T)| e^{-βT})` over the rows.
    pub weighted_sup: Vec<(f64, f64)>,
    pub sign_changes: usize,
}

pub fn residual_analysis(counts: &[OrbitCount], model: &ExpansionModel, betas: &[f64]) -> ResidualReport {
    let rows: Vec<ResidualRow> = counts
        .iter()
        .map(|c| {
            let m = model.eval(c.t);
            ResidualRow {
                t: c.t,
                n: c.count,
                model_value: m,
                residual: c.count as f64 - m,
            }
        })
        .collect();
    let weighted_sup = betas
        .iter()
        .map(|&b| {
            let s = rows
                .iter()
                .map(|r| r.residual.abs() * (-b * r.t).exp())
                .fold(0.0, f64::max);
            (b, s)
        })
        .collect();
    let signs: Vec<bool> = rows.iter().filter(|r| r.residual != 0.0).map(|r| r.residual > 0.0).collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    ResidualReport {
        rows,
        weighted_sup,
        sign_changes,
    }
}

pub fn write_residuals_csv<W: std::io::Write>(report: &ResidualReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["T", "N", "model_value", "residual"])?;
    for r in &report.rows {
        wr.write_record([
            format!("{}", r.t),
            r.n.to_string(),
            format!("{:.15e}", r.model_value),
            format!("{:.15e}", r.residual),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Points of the model as `PointH`, for callers working in the group's model.
pub fn point(g: &SchottkyGroup, z: C64) -> Result<PointH> {
    match g.model() {
        Model::HalfPlane => PointH::half_plane(z),
        Model::Disc => PointH::disc(z),
    }
}
