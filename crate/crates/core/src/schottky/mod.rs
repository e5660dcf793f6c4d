//! Schottky groups: paired discs, generators, validation and the Bowen–Series map.
//!
//! Groups are accepted in either model, but every group also carries a
//! canonical half-plane realization: real generators whose Schottky discs are
//! centred on the real axis. In that picture the coding intervals are real
//! intervals, `cz+d` is real on them, and the principal branch of `(h')^s` is
//! consistent along every periodic orbit. Disc-model groups are first rotated
//! so that the boundary point sent to infinity sits in the middle of the
//! widest gap between discs; the angle is kept in [`SchottkyGroup::rotation`].

mod config;

pub use config::{read_group_file, write_group_file, GroupFile};

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moebius::{
    boundary_angle_to_real, mobius_classify, IsometryKind, Model, MoebiusMap, PointH,
};

pub const DISJOINT_TOL: f64 = 1e-10;
pub const PAIRING_TOL: f64 = 1e-8;
const PAIRING_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disc {
    pub center: C64,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: C64, radius: f64) -> Self {
        Disc { center, radius }
    }

    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    /// Euclidean gap between the closed discs (negative when they overlap).
    pub fn gap(&self, other: &Disc) -> f64 {
        (self.center - other.center).norm() - self.radius - other.radius
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.center.re - self.radius, self.center.re + self.radius)
    }
}

#[derive(Debug, Clone)]
pub struct SchottkyGroup {
    rank: usize,
    model: Model,
    input_generators: Vec<MoebiusMap>,
    input_discs: Vec<Disc>,
    generators: Vec<MoebiusMap>,
    discs: Vec<Disc>,
    rotation: f64,
    label: Option<String>,
    integer_trace: bool,
}

impl SchottkyGroup {
    /// Assembles a group from canonical half-plane data without any checks.
    /// Used to build deliberately broken configurations for validation.
    pub fn from_parts(generators: Vec<MoebiusMap>, discs: Vec<Disc>) -> Self {
        SchottkyGroup {
            rank: generators.len(),
            model: Model::HalfPlane,
            input_generators: generators.clone(),
            input_discs: discs.clone(),
            generators,
            discs,
            rotation: 0.0,
            label: None,
            integer_trace: false,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_letters(&self) -> usize {
        2 * self.rank
    }

    pub fn is_cylinder(&self) -> bool {
        self.rank == 1
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn integer_trace(&self) -> bool {
        self.integer_trace
    }

    pub(crate) fn set_integer_trace(&mut self, flag: bool) {
        self.integer_trace = flag;
    }

    /// Rotation angle (disc model) applied before passing to the half-plane.
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    /// Half-plane coordinate, in the frame of [`SchottkyGroup::generators`],
    /// of a point given in either model.
    pub fn to_internal(&self, p: PointH) -> Result<C64> {
        MoebiusMap::rotation(self.rotation).apply_c(p.to_model(Model::HalfPlane).z)
    }

    /// Inverse of [`SchottkyGroup::to_internal`], returned in the group's model.
    pub fn from_internal(&self, z: C64) -> Result<PointH> {
        let w = MoebiusMap::rotation(-self.rotation).apply_c(z)?;
        Ok(PointH::half_plane(w)?.to_model(self.model))
    }

    /// Generators as supplied, in [`SchottkyGroup::model`].
    pub fn input_generators(&self) -> &[MoebiusMap] {
        &self.input_generators
    }

    /// Discs in the input model (isometric circles of the input generators).
    pub fn input_discs(&self) -> &[Disc] {
        &self.input_discs
    }

    /// Canonical half-plane generators `h_1..h_p`.
    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    /// Canonical half-plane discs `D_1..D_2p`.
    pub fn discs(&self) -> &[Disc] {
        &self.discs
    }

    /// Map for letter `j` in `0..2p`: `h_j` for `j < p`, `h_{j-p}^-1` otherwise.
    pub fn letter(&self, j: usize) -> MoebiusMap {
        if j < self.rank {
            self.generators[j]
        } else {
            self.generators[j - self.rank].inverse()
        }
    }

    pub fn inverse_letter(&self, j: usize) -> usize {
        (j + self.rank) % (2 * self.rank)
    }

    /// Letter `j` maps every disc other than `D_j` into `D_{j+p}`.
    pub fn image_disc(&self, j: usize) -> usize {
        self.inverse_letter(j)
    }

    /// Hyperbolic distance between the boundary geodesics of discs `i` and `j`.
    pub fn disc_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.discs[i], &self.discs[j]);
        let dd = (a.center - b.center).norm();
        let x = (dd * dd - a.radius * a.radius - b.radius * b.radius) / (2.0 * a.radius * b.radius);
        if x <= 1.0 {
            0.0
        } else {
            x.acosh()
        }
    }

    /// Smallest distance between boundary geodesics of distinct discs. Every
    /// letter of a reduced word advances an orbit by at least this much.
    pub fn min_gap(&self) -> f64 {
        let n = self.n_letters();
        let mut g = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                g = g.min(self.disc_distance(i, j));
            }
        }
        g
    }

    /// Lower bound on the distance travelled across the transition
    /// `... a b ...` of a reduced word: the gap between `D_a` and `D_{b+p}`.
    pub fn transition_gap(&self, a: usize, b: usize) -> f64 {
        self.disc_distance(a, self.image_disc(b))
    }

    /// Coding intervals `I_i = D_i ∩ R` in canonical coordinates.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.discs.iter().map(Disc::interval).collect()
    }

    /// Ratio of the largest image disc `h_j(D_i)` to its target disc `D_{j+p}`,
    /// measured from the target's centre; the transfer operator contracts
    /// monomials at this rate.
    pub fn contraction_ratio(&self) -> f64 {
        let n = self.n_letters();
        let mut kappa: f64 = 0.0;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let (lo, hi) = self.discs[i].interval();
                let h = self.letter(j);
                let (u, v) = (h.apply_real(lo), h.apply_real(hi));
                let target = &self.discs[self.image_disc(j)];
                let c = 0.5 * (u + v);
                let r = 0.5 * (u - v).abs();
                kappa = kappa.max(((c - target.center.re).abs() + r) / target.radius);
            }
        }
        kappa
    }
}

fn isometric_circle_half_plane(m: &MoebiusMap, idx: usize) -> Result<(Disc, Disc)> {
    if m.c == 0.0 {
        return Err(Error::NoIsometricCircle(idx));
    }
    let r = 1.0 / m.c.abs();
    Ok((
        Disc::new(C64::new(-m.d / m.c, 0.0), r),
        Disc::new(C64::new(m.a / m.c, 0.0), r),
    ))
}

fn isometric_circle_disc(m: &MoebiusMap, idx: usize) -> Result<(Disc, Disc)> {
    let [al, _be, ga, de] = m.disc_coeffs();
    if ga.norm() < 1e-300 {
        return Err(Error::NoIsometricCircle(idx));
    }
    let r = 1.0 / ga.norm();
    Ok((Disc::new(-de / ga, r), Disc::new(al / ga, r)))
}

fn check_disjoint(discs: &[Disc]) -> Result<()> {
    for i in 0..discs.len() {
        for j in (i + 1)..discs.len() {
            if discs[i].gap(&discs[j]) <= DISJOINT_TOL {
                return Err(Error::CirclesIntersect(i + 1, j + 1));
            }
        }
    }
    Ok(())
}

fn wrap_angle(t: f64) -> f64 {
    t.rem_euclid(2.0 * PI)
}

/// Rotation angle that moves the midpoint of the widest gap between the
/// boundary arcs of `discs` (orthogonal to the unit circle) to angle 0.
fn widest_gap_rotation(discs: &[Disc]) -> f64 {
    let mut arcs: Vec<(f64, f64)> = discs
        .iter()
        .map(|d| {
            let phi = wrap_angle(d.center.arg());
            let half = d.radius.atan();
            (phi - half, phi + half)
        })
        .collect();
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = arcs.len();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..n {
        let end = arcs[k].1;
        let next = if k + 1 < n { arcs[k + 1].0 } else { arcs[0].0 + 2.0 * PI };
        let width = next - end;
        if width > best.0 + 1e-12 {
            best = (width, 0.5 * (end + next));
        }
    }
    -best.1
}

/// `group_from_matrices`: discs are the isometric circles of the generators
/// (`D_i`) and of their inverses (`D_{p+i}`) in the given model.
pub fn group_from_matrices(mats: &[MoebiusMap], model: Model) -> Result<SchottkyGroup> {
    if mats.is_empty() {
        return Err(Error::Domain("a Schottky group needs at least one generator".into()));
    }
    let p = mats.len();
    let mats: Vec<MoebiusMap> = mats
        .iter()
        .map(|m| m.normalized())
        .collect::<Result<_>>()?;
    for (k, m) in mats.iter().enumerate() {
        if mobius_classify(m).kind != IsometryKind::Hyperbolic {
            return Err(Error::NonHyperbolic {
                index: k + 1,
                trace: m.trace().abs(),
            });
        }
    }
    let circle = match model {
        Model::HalfPlane => isometric_circle_half_plane,
        Model::Disc => isometric_circle_disc,
    };
    let mut input_discs = vec![Disc::new(C64::new(0.0, 0.0), 0.0); 2 * p];
    for (k, m) in mats.iter().enumerate() {
        let (lo, hi) = circle(m, k + 1)?;
        input_discs[k] = lo;
        input_discs[k + p] = hi;
    }
    check_disjoint(&input_discs)?;

    let (rotation, generators, discs) = match model {
        Model::HalfPlane => (0.0, mats.clone(), input_discs.clone()),
        Model::Disc => {
            let t = widest_gap_rotation(&input_discs);
            let k = MoebiusMap::rotation(t);
            let gens = mats.iter().map(|m| m.conjugate_by(&k)).collect();
            let discs = input_discs
                .iter()
                .map(|d| {
                    let phi = d.center.arg() + t;
                    let half = d.radius.atan();
                    let lo = wrap_angle(phi - half);
                    let hi = lo + 2.0 * half;
                    let (x0, x1) = (boundary_angle_to_real(lo), boundary_angle_to_real(hi));
                    Disc::new(C64::new(0.5 * (x0 + x1), 0.0), 0.5 * (x1 - x0))
                })
                .collect();
            (t, gens, discs)
        }
    };
    let integer_trace = mats.iter().all(MoebiusMap::is_integral);
    Ok(SchottkyGroup {
        rank: p,
        model,
        input_generators: mats,
        input_discs,
        generators,
        discs,
        rotation,
        label: None,
        integer_trace,
    })
}

/// Trace of each generator of `symmetric_group(p, width)`.
pub fn symmetric_trace(width: f64) -> f64 {
    2.0 / width.sin()
}

/// Rotationally symmetric group in the disc model: `2p` discs orthogonal to the
/// unit circle centred at angles `kπ/p`, each cutting out a boundary arc of
/// half-angle `width`; `h_i` translates along the diameter through disc `i`
/// and pairs it with the opposite disc. Generator trace is `2/sin(width)`.
pub fn symmetric_group(p: usize, width: f64) -> Result<SchottkyGroup> {
    if p < 1 {
        return Err(Error::Domain("rank must be positive".into()));
    }
    let limit = PI / (2.0 * p as f64);
    if !(width > 0.0) || width >= limit {
        return Err(Error::GeometryInfeasible(format!(
            "width {width} must lie in (0, {limit}) for rank {p}"
        )));
    }
    // half-translation length a with cosh(a) = 1/sin(width)
    let a = (1.0 / width.sin()).acosh();
    let (ch, sh) = (a.cosh(), a.sinh());
    let mut gens = Vec::with_capacity(p);
    for k in 0..p {
        let theta = k as f64 * PI / p as f64;
        let e = C64::from_polar(1.0, theta);
        // R T R^-1 with T = [[ch, -sh], [-sh, ch]] and R = diag(e^{iθ/2}, e^{-iθ/2})
        let dc = [
            C64::new(ch, 0.0),
            -sh * e,
            -sh * e.conj(),
            C64::new(ch, 0.0),
        ];
        gens.push(MoebiusMap::from_disc_coeffs(dc)?);
    }
    let g = group_from_matrices(&gens, Model::Disc).map_err(|e| match e {
        Error::CirclesIntersect(..) => {
            Error::GeometryInfeasible(format!("discs of width {width} overlap"))
        }
        other => other,
    })?;
    Ok(g.with_label(format!("symmetric p={p} width={width}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub margin: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub suggestions: Vec<String>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every structural check on the canonical realization. Failures are
/// reported in the returned value, never raised.
pub fn validate_schottky(g: &SchottkyGroup) -> ValidationReport {
    let p = g.rank();
    let n = 2 * p;
    let mut checks = Vec::new();
    let mut suggestions = Vec::new();

    checks.push(Check {
        name: "rank".into(),
        passed: p >= 1 && g.discs.len() == n,
        margin: p as f64,
        threshold: 1.0,
    });
    if p == 1 {
        suggestions.push("rank 1: cylinder mode, dimension and pressure routines are unavailable".into());
    }

    let hyper = g
        .generators
        .iter()
        .map(|m| m.trace().abs() - 2.0)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "hyperbolic".into(),
        passed: hyper > crate::moebius::NEAR_PARABOLIC_TOL,
        margin: hyper,
        threshold: crate::moebius::NEAR_PARABOLIC_TOL,
    });

    let mut disjoint = f64::INFINITY;
    for i in 0..g.discs.len() {
        for j in (i + 1)..g.discs.len() {
            disjoint = disjoint.min(g.discs[i].gap(&g.discs[j]));
        }
    }
    checks.push(Check {
        name: "disjoint".into(),
        passed: disjoint > DISJOINT_TOL,
        margin: disjoint,
        threshold: DISJOINT_TOL,
    });

    let ortho = g
        .discs
        .iter()
        .map(|d| d.center.im.abs())
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "orthogonal".into(),
        passed: ortho <= 1e-8,
        margin: ortho,
        threshold: 1e-8,
    });

    let mut pairing: f64 = 0.0;
    let mut interior = f64::INFINITY;
    if g.discs.len() == n {
        for i in 0..p {
            let h = g.generators[i];
            let (src, dst) = (g.discs[i], g.discs[i + p]);
            for k in 0..PAIRING_SAMPLES {
                let w = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / PAIRING_SAMPLES as f64);
                if let Ok(img) = h.apply_c(src.center + src.radius * w) {
                    pairing = pairing.max(((img - dst.center).norm() - dst.radius).abs());
                } else {
                    pairing = f64::INFINITY;
                }
                for rho in [0.3, 0.6, 0.9] {
                    if let Ok(img) = h.apply_c(src.center + rho * src.radius * w) {
                        interior = interior.min((img - dst.center).norm() / dst.radius - 1.0);
                    }
                }
            }
        }
    } else {
        pairing = f64::INFINITY;
        interior = f64::NEG_INFINITY;
    }
    checks.push(Check {
        name: "pairing".into(),
        passed: pairing < PAIRING_TOL,
        margin: pairing,
        threshold: PAIRING_TOL,
    });
    checks.push(Check {
        name: "interior_to_exterior".into(),
        passed: interior > 0.0,
        margin: interior,
        threshold: 0.0,
    });

    if disjoint > DISJOINT_TOL && disjoint < 1e3 * DISJOINT_TOL {
        suggestions.push(format!("disc gap {disjoint:.3e} is within 1000x of the disjointness tolerance"));
    }
    if pairing < PAIRING_TOL && pairing > 1e-2 * PAIRING_TOL {
        suggestions.push(format!(
            "pairing deviation {pairing:.3e} is close to tolerance; supply generators with more digits"
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    ValidationReport {
        passed,
        checks,
        suggestions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenStep {
    pub image: f64,
    /// Index `i` (0-based) of the interval containing the input.
    pub branch: usize,
    /// `|B'(x)|`.
    pub expansion: f64,
}

/// One step of the Bowen–Series map on the canonical real boundary.
pub fn bowen_map(g: &SchottkyGroup, x: f64) -> Result<BowenStep> {
    let branch = g
        .discs
        .iter()
        .position(|d| (x - d.center.re).abs() <= d.radius)
        .ok_or(Error::NotInCodingDomain(x))?;
    let h = g.letter(branch);
    let den = h.c * x + h.d;
    Ok(BowenStep {
        image: h.apply_real(x),
        branch,
        expansion: 1.0 / (den * den),
    })
}

/// Fixed points `(attracting, repelling)` of a hyperbolic real map on the
/// boundary. Infinity is reported as `f64::INFINITY`.
pub fn fixed_points(m: &MoebiusMap) -> (f64, f64) {
    let t = m.trace();
    let disc = (t * t - 4.0).max(0.0).sqrt();
    if m.c == 0.0 {
        let finite = m.b / (m.d - m.a);
        return if m.a.abs() > m.d.abs() {
            (f64::INFINITY, finite)
        } else {
            (finite, f64::INFINITY)
        };
    }
    let x1 = (m.a - m.d + disc) / (2.0 * m.c);
    let x2 = (m.a - m.d - disc) / (2.0 * m.c);
    let deriv = |x: f64| 1.0 / (m.c * x + m.d).powi(2);
    if deriv(x1) < deriv(x2) {
        (x1, x2)
    } else {
        (x2, x1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cylinder() -> SchottkyGroup {
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        group_from_matrices(&[MoebiusMap::new(c, s, s, c).unwrap()], Model::HalfPlane).unwrap()
    }

    #[test]
    fn symmetric_group_validates() {
        for p in 2..=4 {
            for w in [0.05, 0.2, 0.35] {
                if w >= PI / (2.0 * p as f64) {
                    continue;
                }
                let g = symmetric_group(p, w).unwrap();
                let rep = validate_schottky(&g);
                assert!(rep.passed, "p={p} w={w}: {rep:?}");
            }
        }
    }

    #[test]
    fn symmetric_trace_inversion() {
        // invert 2/sin(w) = 2cosh(2) by bisection, independently of the closed form
        let target = 2.0 * 2f64.cosh();
        let (mut lo, mut hi) = (1e-6, PI / 4.0 - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if symmetric_trace(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g = symmetric_group(2, 0.5 * (lo + hi)).unwrap();
        for m in g.generators() {
            let l = mobius_classify(m).translation_length.unwrap();
            assert!((l - 4.0).abs() < 1e-9, "length {l}");
        }
    }

    #[test]
    fn infeasible_width_is_rejected() {
        assert!(matches!(symmetric_group(2, 0.8), Err(Error::GeometryInfeasible(_))));
        assert!(matches!(symmetric_group(3, -0.1), Err(Error::GeometryInfeasible(_))));
    }

    #[test]
    fn overlapping_discs_fail_validation() {
        let g = symmetric_group(2, 0.3).unwrap();
        let mut discs = g.discs().to_vec();
        discs[1] = Disc::new(discs[0].center + 0.5 * discs[0].radius, discs[1].radius);
        let bad = SchottkyGroup::from_parts(g.generators().to_vec(), discs);
        let rep = validate_schottky(&bad);
        assert!(!rep.passed);
        assert!(rep.check("disjoint").unwrap().margin < 0.0);
    }

    #[test]
    fn swapped_pairing_fails_validation() {
        let g = symmetric_group(2, 0.3).unwrap();
        let mut discs = g.discs().to_vec();
        discs.swap(0, 2);
        let bad = SchottkyGroup::from_parts(g.generators().to_vec(), discs);
        let rep = validate_schottky(&bad);
        assert!(!rep.check("pairing").unwrap().passed);
        assert!(!rep.passed);
    }

    #[test]
    fn cylinder_from_single_matrix() {
        let g = cylinder();
        assert_eq!(g.rank(), 1);
        assert!(g.is_cylinder());
        let d = g.discs();
        assert!((d[0].center.re + 1f64.cosh() / 1f64.sinh()).abs() < 1e-14);
        assert!((d[0].radius - 1.0 / 1f64.sinh()).abs() < 1e-14);
        assert!(validate_schottky(&g).passed);
        // isometric circles are perpendicular to the axis: their distance is the length
        assert!((g.disc_distance(0, 1) - 2.0).abs() < 1e-12);
    }

    /// Exhaustive search over small integer matrices for a pair with disjoint
    /// isometric circles.
    fn integer_pair_search() -> Option<(MoebiusMap, MoebiusMap)> {
        let mut mats = Vec::new();
        for a in -9i32..=9 {
            for c in 1i32..=2 {
                for d in -9i32..=9 {
                    // b = (ad - 1)/c must be an integer
                    if (a * d - 1) % c != 0 {
                        continue;
                    }
                    let b = (a * d - 1) / c;
                    if (a + d).abs() >= 3 {
                        mats.push(MoebiusMap::new(a as f64, b as f64, c as f64, d as f64).unwrap());
                    }
                }
            }
        }
        for (i, m1) in mats.iter().enumerate() {
            for m2 in &mats[i + 1..] {
                if let Ok(g) = group_from_matrices(&[*m1, *m2], Model::HalfPlane) {
                    if validate_schottky(&g).passed {
                        return Some((*m1, *m2));
                    }
                }
            }
        }
        None
    }

    #[test]
    fn integer_pair_gives_integer_trace_group() {
        let (m1, m2) = integer_pair_search().expect("search finds a pair");
        let g = group_from_matrices(&[m1, m2], Model::HalfPlane).unwrap();
        assert!(g.integer_trace());
        assert!(validate_schottky(&g).passed);
    }

    #[test]
    fn shared_isometric_circle_is_rejected() {
        let m = MoebiusMap::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let m2 = MoebiusMap::new(3.0, 2.0, 1.0, 1.0).unwrap();
        // both have isometric circle centred at -1 with radius 1
        assert!(matches!(
            group_from_matrices(&[m, m2], Model::HalfPlane),
            Err(Error::CirclesIntersect(..))
        ));
        let para = MoebiusMap::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            group_from_matrices(&[para], Model::HalfPlane),
            Err(Error::NonHyperbolic { .. })
        ));
    }

    #[test]
    fn pairing_on_sample_points() {
        let g = symmetric_group(3, 0.25).unwrap();
        let p = g.rank();
        for i in 0..2 * p {
            let h = g.letter(i);
            let src = g.discs()[i];
            let dst = g.discs()[g.image_disc(i)];
            for k in 0..64 {
                let z = src.center + 0.7 * src.radius * C64::from_polar(1.0, 0.1 + k as f64 * PI / 32.0);
                let w = h.apply_c(z).unwrap();
                assert!((w - dst.center).norm() > dst.radius);
            }
        }
    }

    #[test]
    fn bowen_map_fixed_point_and_errors() {
        let g = symmetric_group(2, 0.3).unwrap();
        let p = g.rank();
        for i in 0..2 * p {
            // attracting fixed point of h_{i+p} lies in I_i and is fixed by B
            let (att, _) = fixed_points(&g.letter(g.inverse_letter(i)));
            let step = bowen_map(&g, att).unwrap();
            assert_eq!(step.branch, i);
            assert!((step.image - att).abs() < 1e-9 * (1.0 + att.abs()));
            assert!(step.expansion > 1.0);
        }
        // a point between two intervals
        let iv = g.intervals();
        let mut ends: Vec<f64> = iv.iter().flat_map(|&(a, b)| [a, b]).collect();
        ends.sort_by(f64::total_cmp);
        let gap_point = 0.5 * (ends[1] + ends[2]);
        assert!(matches!(bowen_map(&g, gap_point), Err(Error::NotInCodingDomain(_))));
    }

    #[test]
    fn disc_and_halfplane_realizations_agree() {
        let g = symmetric_group(2, 0.3).unwrap();
        assert_eq!(g.model(), Model::Disc);
        assert!(g.rotation() != 0.0);
        for (m, c) in g.input_generators().iter().zip(g.generators()) {
            assert!((m.trace() - c.trace()).abs() < 1e-12);
        }
        // canonical discs are bounded and sit on the real axis
        for d in g.discs() {
            assert!(d.radius.is_finite() && d.center.im == 0.0);
        }
    }
}
