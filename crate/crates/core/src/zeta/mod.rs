//! Selberg zeta function: cycle expansion, Euler product and Fredholm
//! determinant, plus zero finding and strip diagnostics.

mod resonances;
mod transfer;

pub use resonances::{
    count_zeros_in_rect, find_resonances, find_zeros, winding_number, Rect, Resonance,
    ResonanceSearch, SearchOptions, write_resonances_csv,
};
pub use transfer::{
    build_transfer_matrix, default_order, dimension_by_eigenvalue, zeta_fredholm,
    FredholmEvaluator, TransferOperator,
};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schottky::SchottkyGroup;
use crate::words::{primitive_classes, required_word_len, CycleTable};

pub const PRODUCT_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cycle,
    Fredholm,
    Product,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cycle => "cycle",
            Method::Fredholm => "fredholm",
            Method::Product => "product",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZetaEvaluation {
    pub s: C64,
    pub value: C64,
    pub method: Method,
    /// Word-length cutoff `N` (cycle), basis order `M` (fredholm) or prime
    /// length cutoff rounded down (product).
    pub order: usize,
    pub error_estimate: f64,
    pub warnings: Vec<String>,
}

/// `Σ_{|α|=n} e^{-s l_α} / (1 - e^{-l_α})` from a prepared table.
pub fn trace_from_table(table: &CycleTable, s: C64, n: usize) -> C64 {
    table
        .level(n)
        .iter()
        .map(|&(l, w)| w * (-s * l).exp() / (1.0 - (-l).exp()))
        .sum()
}

/// `Tr(L_s^n)` summed over the cyclically reduced words of length `n`.
pub fn transfer_trace(g: &SchottkyGroup, s: C64, n: usize) -> C64 {
    trace_from_table(&CycleTable::build(g, n), s, n)
}

/// Taylor coefficients `c_0..c_N` of `det(I - zL_s) = exp(-Σ z^n Tr(L_s^n)/n)`.
pub fn cycle_coefficients(traces: &[C64]) -> Vec<C64> {
    let n = traces.len();
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[0] = C64::new(1.0, 0.0);
    for k in 1..=n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k {
            acc += traces[j - 1] * c[k - j];
        }
        c[k] = -acc / k as f64;
    }
    c
}

/// Cycle-expansion evaluator holding the word-length table.
pub struct CycleExpansion {
    table: CycleTable,
}

impl CycleExpansion {
    pub fn new(g: &SchottkyGroup, n_max: usize) -> Self {
        CycleExpansion {
            table: CycleTable::build(g, n_max),
        }
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max
    }

    pub fn table(&self) -> &CycleTable {
        &self.table
    }

    pub fn eval(&self, s: C64, n: usize) -> Result<ZetaEvaluation> {
        if n < 2 || n > self.table.n_max {
            return Err(Error::Domain(format!(
                "cycle order {n} outside [2, {}]",
                self.table.n_max
            )));
        }
        let traces: Vec<C64> = (1..=n).map(|k| trace_from_table(&self.table, s, k)).collect();
        let c = cycle_coefficients(&traces);
        let value: C64 = c.iter().sum();
        let mut warnings = Vec::new();
        let mags: Vec<f64> = c.iter().map(|x| x.norm()).collect();
        // rounding floor: magnitude of everything added while forming the c_k
        let mut spread: f64 = mags.iter().sum();
        for k in 1..=n {
            spread += (1..=k).map(|j| traces[j - 1].norm() * mags[k - j]).sum::<f64>() / k as f64;
        }
        let mut run = 0;
        for k in 2..=n {
            if mags[k] > mags[k - 1] {
                run += 1;
                if run >= 3 {
                    warnings.push(format!(
                        "cycle-expansion terms grow for 3 consecutive orders (up to {k}); s = {s} is too far left for this cutoff"
                    ));
                    break;
                }
            } else {
                run = 0;
            }
        }
        Ok(ZetaEvaluation {
            s,
            value,
            method: Method::Cycle,
            order: n,
            error_estimate: mags[n] + 4.0 * f64::EPSILON * spread,
            warnings,
        })
    }
}

/// Cycle expansion of `det(I - L_s)` truncated at word length `n`.
pub fn zeta_cycle(g: &SchottkyGroup, s: C64, n: usize) -> Result<ZetaEvaluation> {
    CycleExpansion::new(g, n.max(2)).eval(s, n)
}

/// Euler product over primes with `l(γ) <= t_cut` and `k <= n_cut`. Needs
/// `Re(s) > δ + 0.1`; the error estimate bounds the omitted primes by the
/// prime geodesic density.
pub fn zeta_product(
    g: &SchottkyGroup,
    s: C64,
    t_cut: f64,
    n_cut: usize,
    delta: f64,
) -> Result<ZetaEvaluation> {
    let bound = delta + PRODUCT_MARGIN;
    if s.re <= bound {
        return Err(Error::Region { re: s.re, bound });
    }
    let primes = primitive_classes(g, t_cut, required_word_len(g, t_cut).max(1));
    let mut log_z = C64::new(0.0, 0.0);
    for c in &primes {
        for n in 0..=n_cut {
            log_z += (-(-(s + n as f64) * c.length).exp()).ln_1p_c();
        }
    }
    let gap = s.re - delta;
    let prime_tail = (-gap * t_cut).exp() / (gap * t_cut);
    let shortest = primes.first().map_or(t_cut, |c| c.length);
    let n_tail = primes.len() as f64 * (-(s.re + (n_cut + 1) as f64) * shortest).exp();
    let warnings = Vec::new();
    Ok(ZetaEvaluation {
        s,
        value: log_z.exp(),
        method: Method::Product,
        order: t_cut.floor() as usize,
        error_estimate: (prime_tail + n_tail) * log_z.exp().norm(),
        warnings,
    })
}

trait Ln1p {
    fn ln_1p_c(self) -> C64;
}

impl Ln1p for C64 {
    /// `log(1 + x)` accurate for small `|x|`.
    fn ln_1p_c(self) -> C64 {
        if self.norm() < 1e-4 {
            let x = self;
            x - x * x / 2.0 + x * x * x / 3.0 - x * x * x * x / 4.0
        } else {
            (C64::new(1.0, 0.0) + self).ln()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripBound {
    /// Proven lower bound for the essential spectral gap.
    pub theorem: f64,
    /// Conjectured value `δ/2`.
    pub conjectural: f64,
}

/// Gap bound `δ(1-2δ)/2` for `δ <= 1/2` and `δ/2 - 1/4` above.
pub fn theorem_strip(delta: f64) -> Result<StripBound> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ = {delta} outside (0, 1)")));
    }
    let theorem = if delta <= 0.5 {
        delta * (1.0 - 2.0 * delta) / 2.0
    } else {
        delta / 2.0 - 0.25
    };
    Ok(StripBound {
        theorem,
        conjectural: delta / 2.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StripCensus {
    pub sigma: f64,
    pub t: f64,
    /// Zeros (with order) in `Re s >= σ, 0 <= Im s <= T`.
    pub count: usize,
    /// Same, without real zeros.
    pub count_nonreal: usize,
    /// `(T_k, N(σ, T_k))` over nested windows `T_k = kT/8`.
    pub windows: Vec<(f64, usize)>,
    /// Least-squares slope of `log N` against `log T` over windows with `N > 0`.
    pub growth_exponent: Option<f64>,
}

pub fn strip_census(resonances: &[Resonance], sigma: f64, t: f64) -> StripCensus {
    let count_to = |tt: f64, real: bool| -> usize {
        resonances
            .iter()
            // real zeros may carry a roundoff-sized negative imaginary part
            .filter(|r| r.s.re >= sigma && r.s.im >= -1e-8 && r.s.im <= tt)
            .filter(|r| real || r.s.im.abs() > 1e-8)
            .map(|r| r.order)
            .sum()
    };
    let windows: Vec<(f64, usize)> = (1..=8)
        .map(|k| {
            let tt = t * k as f64 / 8.0;
            (tt, count_to(tt, true))
        })
        .collect();
    let pts: Vec<(f64, f64)> = windows
        .iter()
        .filter(|w| w.1 > 0)
        .map(|&(tt, n)| (tt.ln(), (n as f64).ln()))
        .collect();
    let growth_exponent = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    StripCensus {
        sigma,
        t,
        count: count_to(t, true),
        count_nonreal: count_to(t, false),
        windows,
        growth_exponent,
    }
}
