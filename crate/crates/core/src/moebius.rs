//! Real Möbius maps acting on the hyperbolic plane.
//!
//! A [`MoebiusMap`] is always stored as a real unit-determinant matrix. On the
//! upper half-plane it acts by `z -> (az+b)/(cz+d)`; on the unit disc it acts
//! through the Cayley transform `C(w) = (w-i)/(w+i)`, i.e. by the PSU(1,1)
//! matrix `C M C^-1`. Which model is meant is carried by the caller (see
//! [`Model`]) or by the [`PointH`] being acted on.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Determinant slack below which a matrix is treated as already normalized.
const NORMALIZED_SLACK: f64 = 1e-14;
/// Smallest admissible |cz+d| before a point is considered the pole of a map.
pub const POLE_TOL: f64 = 1e-14;
/// Band around |trace| = 2 inside which the translation length is ill-conditioned.
pub const NEAR_PARABOLIC_TOL: f64 = 1e-10;
/// Required margin of a point inside its model.
pub const MODEL_MARGIN: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "halfplane")]
    HalfPlane,
    #[serde(rename = "disc")]
    Disc,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::HalfPlane => "halfplane",
            Model::Disc => "disc",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cayley transform from the upper half-plane onto the unit disc.
pub fn cayley(w: C64) -> C64 {
    (w - C64::i()) / (w + C64::i())
}

/// Inverse Cayley transform, unit disc onto the upper half-plane.
pub fn cayley_inv(z: C64) -> C64 {
    C64::i() * (C64::new(1.0, 0.0) + z) / (C64::new(1.0, 0.0) - z)
}

/// Real point of the half-plane boundary corresponding to `e^{iθ}` on the circle.
pub fn boundary_angle_to_real(theta: f64) -> f64 {
    -1.0 / (0.5 * theta).tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusMap {
    pub const IDENTITY: MoebiusMap = MoebiusMap {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds a map from matrix entries, scaling to determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        MoebiusMap { a, b, c, d }.normalized()
    }

    pub fn from_row_major(e: [f64; 4]) -> Result<Self> {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn to_row_major(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Divides by `sqrt(det)`; maps already within 1e-14 of unit determinant are
    /// returned unchanged so that normalization is idempotent bit for bit.
    pub fn normalized(self) -> Result<Self> {
        let det = self.det();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::BadDeterminant(det));
        }
        if (det - 1.0).abs() <= NORMALIZED_SLACK {
            return Ok(self);
        }
        let k = det.sqrt().recip();
        Ok(MoebiusMap {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        })
    }

    pub fn inverse(&self) -> Self {
        MoebiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn negated(&self) -> Self {
        MoebiusMap {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn is_integral(&self) -> bool {
        self.to_row_major()
            .iter()
            .all(|x| x.fract() == 0.0 && x.abs() < 9.0e15)
    }

    /// `(az+b)/(cz+d)` for complex `z`, erroring at the pole.
    pub fn apply_c(&self, z: C64) -> Result<C64> {
        let den = self.c * z + self.d;
        if den.norm() < POLE_TOL {
            return Err(Error::PoleOfMap(den.norm()));
        }
        Ok((self.a * z + self.b) / den)
    }

    /// Action on a real boundary point of the half-plane. Returns `f64::INFINITY`
    /// at the pole.
    pub fn apply_real(&self, x: f64) -> f64 {
        let den = self.c * x + self.d;
        if den == 0.0 {
            return f64::INFINITY;
        }
        (self.a * x + self.b) / den
    }

    /// Coefficients `[α, β, γ, δ]` of the PSU(1,1) matrix `C M C^-1` acting on the disc.
    pub fn disc_coeffs(&self) -> [C64; 4] {
        let i = C64::i();
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        // C = [[1, -i], [1, i]],  C^-1 = (1/2i) [[i, i], [-1, 1]]
        let m00 = C64::new(a, 0.0) - i * c;
        let m01 = C64::new(b, 0.0) - i * d;
        let m10 = C64::new(a, 0.0) + i * c;
        let m11 = C64::new(b, 0.0) + i * d;
        let s = (2.0 * i).inv();
        [
            (m00 * i - m01) * s,
            (m00 * i + m01) * s,
            (m10 * i - m11) * s,
            (m10 * i + m11) * s,
        ]
    }

    /// Inverse of [`MoebiusMap::disc_coeffs`]: the real matrix `C^-1 D C`.
    pub fn from_disc_coeffs(dc: [C64; 4]) -> Result<Self> {
        let i = C64::i();
        let [al, be, ga, de] = dc;
        // D C with C = [[1, -i], [1, i]]
        let n00 = al + be;
        let n01 = (be - al) * i;
        let n10 = ga + de;
        let n11 = (de - ga) * i;
        let s = (2.0 * i).inv();
        let r = [
            (i * n00 + i * n10) * s,
            (i * n01 + i * n11) * s,
            (-n00 + n10) * s,
            (-n01 + n11) * s,
        ];
        let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        if r.iter().any(|z| z.im.abs() > 1e-9 * scale) {
            return Err(Error::Domain(
                "disc matrix is not conjugate to a real matrix (not in SU(1,1))".into(),
            ));
        }
        Self::new(r[0].re, r[1].re, r[2].re, r[3].re)
    }

    /// Applies the map to a point in whichever model the point lives in.
    pub fn apply(&self, p: PointH) -> Result<PointH> {
        match p.model {
            Model::HalfPlane => PointH::half_plane(self.apply_c(p.z)?),
            Model::Disc => {
                let [al, be, ga, de] = self.disc_coeffs();
                let den = ga * p.z + de;
                if den.norm() < POLE_TOL {
                    return Err(Error::PoleOfMap(den.norm()));
                }
                PointH::disc((al * p.z + be) / den)
            }
        }
    }

    /// Half-plane form of the disc rotation `z -> e^{it} z` (rotation about `i`).
    pub fn rotation(t: f64) -> Self {
        let (s, c) = (0.5 * t).sin_cos();
        MoebiusMap {
            a: c,
            b: s,
            c: -s,
            d: c,
        }
    }

    pub fn conjugate_by(&self, k: &MoebiusMap) -> Self {
        *k * *self * k.inverse()
    }

    /// The same element of PSL2(R) with the sign chosen so that `cz+d` has a
    /// positive real part at `z`.
    pub fn oriented_at(&self, z: C64) -> Self {
        if (self.c * z + self.d).re < 0.0 {
            self.negated()
        } else {
            *self
        }
    }
}

impl Mul for MoebiusMap {
    type Output = MoebiusMap;

    fn mul(self, o: MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// A point of the hyperbolic plane in an explicit model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointH {
    pub z: C64,
    pub model: Model,
}

impl PointH {
    pub fn half_plane(z: C64) -> Result<Self> {
        if !(z.im > MODEL_MARGIN) || !z.re.is_finite() {
            return Err(Error::OutsideModel(format!("{z}"), "halfplane"));
        }
        Ok(PointH {
            z,
            model: Model::HalfPlane,
        })
    }

    pub fn disc(z: C64) -> Result<Self> {
        if !(z.norm() < 1.0 - MODEL_MARGIN) {
            return Err(Error::OutsideModel(format!("{z}"), "disc"));
        }
        Ok(PointH {
            z,
            model: Model::Disc,
        })
    }

    pub fn new(z: C64, model: Model) -> Result<Self> {
        match model {
            Model::HalfPlane => Self::half_plane(z),
            Model::Disc => Self::disc(z),
        }
    }

    pub fn to_model(self, model: Model) -> Self {
        let z = match (self.model, model) {
            (Model::HalfPlane, Model::Disc) => cayley(self.z),
            (Model::Disc, Model::HalfPlane) => cayley_inv(self.z),
            _ => self.z,
        };
        PointH { z, model }
    }
}

/// `sinh(d/2)` between two points, computed without cancellation.
fn half_sinh(z: PointH, w: PointH) -> f64 {
    let w = w.to_model(z.model);
    match z.model {
        Model::HalfPlane => (z.z - w.z).norm() / (2.0 * (z.z.im * w.z.im).sqrt()),
        Model::Disc => {
            let den = ((1.0 - z.z.norm_sqr()) * (1.0 - w.z.norm_sqr())).sqrt();
            (z.z - w.z).norm() / den
        }
    }
}

pub fn hyperbolic_distance(z: PointH, w: PointH) -> f64 {
    2.0 * half_sinh(z, w).asinh()
}

/// `σ(z,w) = cosh²(d(z,w)/2)`.
pub fn sigma(z: PointH, w: PointH) -> f64 {
    let s = half_sinh(z, w);
    1.0 + s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryKind {
    Hyperbolic,
    Parabolic,
    Elliptic,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsometryClass {
    pub kind: IsometryKind,
    /// Defined only for hyperbolic maps.
    pub translation_length: Option<f64>,
    /// `||trace| - 2| < 1e-10`: the length is ill-conditioned.
    pub near_parabolic: bool,
}

/// Translation length `2 arccosh(|t|/2)` for a hyperbolic trace `t`.
pub fn length_from_trace(t: f64) -> f64 {
    2.0 * (0.5 * t.abs()).acosh()
}

pub fn mobius_classify(m: &MoebiusMap) -> IsometryClass {
    let t = m.trace().abs();
    let near_parabolic = (t - 2.0).abs() < NEAR_PARABOLIC_TOL;
    let kind = if t > 2.0 + NEAR_PARABOLIC_TOL {
        IsometryKind::Hyperbolic
    } else if near_parabolic {
        if m.b.abs() < NEAR_PARABOLIC_TOL && m.c.abs() < NEAR_PARABOLIC_TOL {
            IsometryKind::Identity
        } else {
            IsometryKind::Parabolic
        }
    } else {
        IsometryKind::Elliptic
    };
    IsometryClass {
        kind,
        translation_length: (kind == IsometryKind::Hyperbolic).then(|| length_from_trace(t)),
        near_parabolic,
    }
}

/// `(h')^s = exp(-2s Log(cz+d))` with the principal logarithm, for a real map
/// acting on the half-plane. Callers pick the matrix sign (see
/// [`MoebiusMap::oriented_at`]) so that `cz+d` stays off the branch cut on the
/// whole disc of interest.
pub fn power_derivative(m: &MoebiusMap, z: C64, s: C64) -> Result<C64> {
    let w = m.c * z + m.d;
    if w.norm() < POLE_TOL {
        return Err(Error::PoleOfMap(w.norm()));
    }
    if w.re <= 0.0 && w.im.abs() <= 1e-14 * w.norm() {
        return Err(Error::BranchAmbiguity(format!(
            "cz+d = {w} lies on the cut of the principal logarithm"
        )));
    }
    if s == C64::new(0.0, 0.0) {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok((-2.0 * s * w.ln()).exp())
}
