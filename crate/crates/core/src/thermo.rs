//! Topological pressure of the boundary map and the dimension of the limit set.
//!
//! `P(-x)` is the growth rate of `S_n(x) = Σ_{|α|=n} e^{-x l_α}` over
//! cyclically reduced words. The n-th root and ratio of `S_n` converge only
//! like `1/n` and geometrically, so the reported value comes from the
//! cycle expansion: `e^{-P(-x)}` is the smallest positive zero of the
//! polynomial truncation of `exp(-Σ u^n t_n/n)`, `t_n = Σ e^{-x l}/(1-e^{-l})`,
//! whose coefficients decay super-exponentially. Only word lengths enter.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schottky::SchottkyGroup;
use crate::words::CycleTable;
use crate::zeta::{cycle_coefficients, default_order, dimension_by_eigenvalue};

pub const DEFAULT_TOL: f64 = 1e-6;
/// Rough cap on the number of cyclically reduced words summed at the deepest level.
const WORD_BUDGET: f64 = 5e6;

/// Largest word length whose level has at most about five million words; 14 for p = 2.
pub fn default_n_max(p: usize) -> usize {
    let q = (2 * p - 1) as f64;
    if q <= 1.0 {
        return 24;
    }
    ((WORD_BUDGET.ln() / q.ln()).floor() as usize).clamp(3, 24)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PressureEstimate {
    pub x: f64,
    pub value: f64,
    pub n_used: usize,
    /// `|value(n) - value(n-1)|`.
    pub error_bar: f64,
    /// Plain ratio estimate `log(S_n/S_{n-1})`.
    pub ratio: f64,
    /// Plain root estimate `log(S_n)/n`.
    pub root: f64,
}

fn log_sum_exp(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    // (log-weight, multiplicity) pairs
    let v: Vec<(f64, f64)> = terms.collect();
    let m = v.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|(a, w)| w * (a - m).exp()).sum::<f64>().ln()
}

/// `log S_n(x)` with plain weights.
fn log_plain(table: &CycleTable, x: f64, n: usize) -> f64 {
    log_sum_exp(table.level(n).iter().map(|&(l, w)| (-x * l, w)))
}

/// `log t_n(x)` with the determinant weights `1/(1-e^{-l})`.
fn log_trace(table: &CycleTable, x: f64, n: usize) -> f64 {
    log_sum_exp(
        table
            .level(n)
            .iter()
            .map(|&(l, w)| (-x * l - (-(-l).exp()).ln_1p(), w)),
    )
}

/// Smallest positive zero of `Σ c_k v^k` in `(0, v_max]`.
fn smallest_positive_root(c: &[f64], v_max: f64) -> Option<f64> {
    let f = |v: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * v + ck);
    let steps = 4000;
    let mut a = 0.0;
    let mut fa = f(a);
    for k in 1..=steps {
        let b = v_max * k as f64 / steps as f64;
        let fb = f(b);
        if fa == 0.0 {
            return Some(a);
        }
        if fa * fb <= 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    return Some(mid);
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-16 * hi {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Cycle-expansion estimate at truncation order `n`, falling back to the
/// ratio estimator when the truncated polynomial has no sign change (as for
/// the double zero of the cylinder).
fn cycle_estimate(table: &CycleTable, x: f64, n: usize) -> f64 {
    let ratio = log_plain(table, x, n) - log_plain(table, x, n - 1);
    let q = ratio;
    let traces: Vec<C64> = (1..=n)
        .map(|k| C64::new((log_trace(table, x, k) - k as f64 * q).exp(), 0.0))
        .collect();
    let c: Vec<f64> = cycle_coefficients(&traces).iter().map(|z| z.re).collect();
    match smallest_positive_root(&c, 4.0) {
        Some(v) => q - v.ln(),
        None => ratio,
    }
}

/// Pressure estimate from a prepared table of word lengths.
pub fn pressure_from_table(table: &CycleTable, x: f64, n_max: usize) -> Result<PressureEstimate> {
    if n_max < 3 || n_max > table.n_max {
        return Err(Error::Domain(format!(
            "pressure needs 3 <= n_max <= {}, got {n_max}",
            table.n_max
        )));
    }
    let value = cycle_estimate(table, x, n_max);
    let prev = cycle_estimate(table, x, n_max - 1);
    let ls = log_plain(table, x, n_max);
    Ok(PressureEstimate {
        x,
        value,
        n_used: n_max,
        error_bar: (value - prev).abs(),
        ratio: ls - log_plain(table, x, n_max - 1),
        root: ls / n_max as f64,
    })
}

pub fn pressure(g: &SchottkyGroup, x: f64, n_max: usize) -> Result<PressureEstimate> {
    pressure_from_table(&CycleTable::build(g, n_max), x, n_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionMethod {
    WordSum,
    Eigenvalue,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionResult {
    pub delta: f64,
    pub method: DimensionMethod,
    pub tolerance: f64,
    /// Independent estimate from the leading eigenvalue of the transfer matrix.
    pub eigenvalue_delta: f64,
    pub pressure_at_delta: PressureEstimate,
    pub n_used: usize,
    pub basis_order: usize,
}

/// Zero of `x -> P(-x)` on `[0, 1]` by bisection, finished with one secant
/// step inside the final bracket.
pub fn dimension_from_table(table: &CycleTable, n_max: usize, tol: f64) -> Result<f64> {
    let p = |x: f64| pressure_from_table(table, x, n_max).map(|e| e.value);
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut plo, mut phi) = (p(lo)?, p(hi)?);
    if !(plo > 0.0 && phi < 0.0) {
        return Err(Error::Domain(format!(
            "pressure does not change sign on [0,1] ({plo}, {phi})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let pm = p(mid)?;
        if pm > 0.0 {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
            phi = pm;
        }
    }
    Ok(lo + (hi - lo) * plo / (plo - phi))
}

pub fn hausdorff_dimension(g: &SchottkyGroup, tol: f64) -> Result<DimensionResult> {
    hausdorff_dimension_with(g, tol, default_n_max(g.rank()), default_order(g))
}

pub fn hausdorff_dimension_with(
    g: &SchottkyGroup,
    tol: f64,
    n_max: usize,
    basis_order: usize,
) -> Result<DimensionResult> {
    if g.rank() < 2 {
        return Err(Error::Elementary(g.rank()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let table = CycleTable::build(g, n_max);
    let delta = dimension_from_table(&table, n_max, tol)?;
    let at = pressure_from_table(&table, delta, n_max)?;
    if at.error_bar > 5.0 * tol {
        return Err(Error::Domain(format!(
            "pressure estimators at order {n_max} differ by {:.3e} > 5 tol; raise n_max",
            at.error_bar
        )));
    }
    let eig = dimension_by_eigenvalue(g, basis_order, tol)?;
    if (eig - delta).abs() > 10.0 * tol {
        return Err(Error::EstimatorDisagreement {
            word_sum: delta,
            eigenvalue: eig,
        });
    }
    Ok(DimensionResult {
        delta,
        method: DimensionMethod::WordSum,
        tolerance: tol,
        eigenvalue_delta: eig,
        pressure_at_delta: at,
        n_used: n_max,
        basis_order,
    })
}
