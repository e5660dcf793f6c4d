//! Discretized transfer operator and its Fredholm determinant.
//!
//! `L_s f(z) = Σ_{j≠i} (h_j'(z))^s f(h_j z)` for `z ∈ D_i`, written in the
//! per-disc basis `((z - c_i)/r_i)^k`, `0 <= k < M`. Column block `t` holds the
//! basis of disc `t = j+p`, which `h_j` maps `D_i` into. Coefficients come
//! from a discrete Cauchy transform on the circle of radius `0.75 r_i`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::schottky::SchottkyGroup;

use super::{Method, ZetaEvaluation};

pub const SAMPLE_RADIUS: f64 = 0.75;
pub const MIN_ORDER: usize = 4;
pub const MAX_DEFAULT_ORDER: usize = 96;
const TAIL_TARGET: f64 = 1e-12;

struct Block {
    row: usize,
    col: usize,
    /// `Log(cz_q + d)` with the sign of the matrix fixed on the row disc.
    logs: Vec<C64>,
    /// `((h_j z_q - c_t)/r_t)^k'` for `k' < M`, row-major in `k'`.
    pows: Vec<C64>,
}

/// Everything about the discretization that does not depend on `s`.
pub struct TransferOperator {
    n_discs: usize,
    m: usize,
    q: usize,
    blocks: Vec<Block>,
    fft: Arc<dyn Fft<f64>>,
    /// `1 / (Q · 0.75^k)`.
    scale: Vec<f64>,
}

/// Default order: smallest `M >= 4` with `κ^M < 1e-12`, capped.
pub fn default_order(g: &SchottkyGroup) -> usize {
    let kappa = g.contraction_ratio();
    if !(kappa < 1.0) {
        return MAX_DEFAULT_ORDER;
    }
    let m = (TAIL_TARGET.ln() / kappa.ln()).floor() as usize + 1;
    m.clamp(MIN_ORDER, MAX_DEFAULT_ORDER)
}

impl TransferOperator {
    pub fn new(g: &SchottkyGroup, m: usize) -> Result<Self> {
        if m < MIN_ORDER {
            return Err(Error::Domain(format!("basis order must be at least {MIN_ORDER}, got {m}")));
        }
        let q = 4 * m;
        let n_discs = g.n_letters();
        let discs = g.discs();
        let mut omega = vec![C64::new(1.0, 0.0); q];
        for k in 1..=q / 2 {
            omega[k] = C64::from_polar(1.0, 2.0 * PI * k as f64 / q as f64);
            omega[q - k] = omega[k].conj();
        }
        omega[q / 2] = C64::new(-1.0, 0.0);
        let mut blocks = Vec::new();
        for i in 0..n_discs {
            let (ci, ri) = (discs[i].center, discs[i].radius);
            for j in (0..n_discs).filter(|&j| j != i) {
                let t = g.image_disc(j);
                let (ct, rt) = (discs[t].center, discs[t].radius);
                let h = g.letter(j).oriented_at(ci);
                let mut logs = Vec::with_capacity(q);
                let mut us = Vec::with_capacity(q);
                for w in &omega {
                    let z = ci + SAMPLE_RADIUS * ri * w;
                    let den = h.c * z + h.d;
                    if den.re <= 0.0 {
                        return Err(Error::BranchAmbiguity(format!(
                            "cz+d leaves the right half-plane on disc {}",
                            i + 1
                        )));
                    }
                    logs.push(den.ln());
                    us.push((h.apply_c(z)? - ct) / rt);
                }
                let mut pows = vec![C64::new(0.0, 0.0); m * q];
                for (qi, u) in us.iter().enumerate() {
                    let mut x = C64::new(1.0, 0.0);
                    for k in 0..m {
                        pows[k * q + qi] = x;
                        x *= u;
                    }
                }
                blocks.push(Block {
                    row: i,
                    col: t,
                    logs,
                    pows,
                });
            }
        }
        let scale = (0..m)
            .map(|k| 1.0 / (q as f64 * SAMPLE_RADIUS.powi(k as i32)))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(q);
        Ok(TransferOperator {
            n_discs,
            m,
            q,
            blocks,
            fft,
            scale,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n_discs * self.m
    }

    /// Matrix of `L_s` in the monomial basis. The lower half-plane is
    /// evaluated through `L_{conj s} = conj(L_s)`, so the symmetry is exact.
    pub fn matrix(&self, s: C64) -> DMatrix<C64> {
        if s.im < 0.0 {
            return self.matrix(s.conj()).map(|z| z.conj());
        }
        let (m, q) = (self.m, self.q);
        let mut a = DMatrix::<C64>::zeros(self.dim(), self.dim());
        let mut v = vec![C64::new(0.0, 0.0); q];
        let mut scratch = vec![C64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for b in &self.blocks {
            let w: Vec<C64> = b.logs.iter().map(|l| (-2.0 * s * l).exp()).collect();
            for kp in 0..m {
                for qi in 0..q {
                    v[qi] = w[qi] * b.pows[kp * q + qi];
                }
                self.fft.process_with_scratch(&mut v, &mut scratch);
                for k in 0..m {
                    a[(b.row * m + k, b.col * m + kp)] = v[k] * self.scale[k];
                }
            }
        }
        a
    }

    /// `det(I - L_s)`.
    pub fn det(&self, s: C64) -> C64 {
        let mut a = -self.matrix(s);
        for i in 0..self.dim() {
            a[(i, i)] += 1.0;
        }
        a.lu().determinant()
    }

    /// Leading eigenvalue by power iteration; meant for real `s`, where the
    /// operator is positive and the top eigenvalue is simple.
    pub fn leading_eigenvalue(&self, s: C64) -> C64 {
        let a = self.matrix(s);
        let n = self.dim();
        let mut v = nalgebra::DVector::<C64>::from_element(n, C64::new(0.0, 0.0));
        for d in 0..self.n_discs {
            v[d * self.m] = C64::new(1.0, 0.0);
        }
        let mut lambda = C64::new(0.0, 0.0);
        for _ in 0..2000 {
            let w = &a * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let new_lambda = v.dotc(&w) / v.dotc(&v);
            v = w / C64::new(norm, 0.0);
            if (new_lambda - lambda).norm() <= 1e-15 * new_lambda.norm() {
                return new_lambda;
            }
            lambda = new_lambda;
        }
        lambda
    }
}

/// Matrix of the discretized operator (a fresh [`TransferOperator`] each call).
pub fn build_transfer_matrix(g: &SchottkyGroup, s: C64, m: usize) -> Result<DMatrix<C64>> {
    Ok(TransferOperator::new(g, m)?.matrix(s))
}

/// Fredholm determinant with the `M-2` comparison as error estimate. Callers
/// evaluating many points should hold a [`FredholmEvaluator`] instead.
pub fn zeta_fredholm(g: &SchottkyGroup, s: C64, m: usize) -> Result<ZetaEvaluation> {
    FredholmEvaluator::new(g, m)?.eval(s)
}

/// Cached pair of discretizations (orders `M` and `M-2`).
pub struct FredholmEvaluator {
    hi: TransferOperator,
    lo: TransferOperator,
}

impl FredholmEvaluator {
    pub fn new(g: &SchottkyGroup, m: usize) -> Result<Self> {
        if m < MIN_ORDER + 2 {
            return Err(Error::Domain(format!(
                "basis order must be at least {} for the error estimate",
                MIN_ORDER + 2
            )));
        }
        Ok(FredholmEvaluator {
            hi: TransferOperator::new(g, m)?,
            lo: TransferOperator::new(g, m - 2)?,
        })
    }

    pub fn order(&self) -> usize {
        self.hi.order()
    }

    pub fn operator(&self) -> &TransferOperator {
        &self.hi
    }

    /// Value only (no error estimate).
    pub fn value(&self, s: C64) -> C64 {
        self.hi.det(s)
    }

    pub fn eval(&self, s: C64) -> Result<ZetaEvaluation> {
        let v = self.hi.det(s);
        let w = self.lo.det(s);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Domain(format!("determinant overflow at s = {s}")));
        }
        Ok(ZetaEvaluation {
            s,
            value: v,
            method: Method::Fredholm,
            order: self.hi.order(),
            // truncation by comparison with a smaller basis, plus an LU rounding floor
            error_estimate: (v - w).norm() + self.hi.dim() as f64 * f64::EPSILON * v.norm().max(1.0),
            warnings: Vec::new(),
        })
    }
}

/// Dimension as the zero of `s -> log λ_1(L_s)` on `[0, 1]`, by bisection
/// finished with one secant step.
pub fn dimension_by_eigenvalue(g: &SchottkyGroup, m: usize, tol: f64) -> Result<f64> {
    if g.rank() < 2 {
        return Err(Error::Elementary(g.rank()));
    }
    let op = TransferOperator::new(g, m)?;
    let f = |s: f64| op.leading_eigenvalue(C64::new(s, 0.0)).re.ln();
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Domain(format!(
            "log leading eigenvalue does not change sign on [0,1] ({flo}, {fhi})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok(lo + (hi - lo) * flo / (flo - fhi))
}
