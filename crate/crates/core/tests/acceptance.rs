//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always reach the test log. The exit
//! status is nonzero if any criterion fails in a way other than the known
//! coverage limit of criterion 5 (see `KNOWN_FAILURES`).

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resonance_lab::lattice::{default_points, orbit_count, orbit_counts};
use resonance_lab::moebius::{Model, MoebiusMap, PointH};
use resonance_lab::schottky::{group_from_matrices, symmetric_group, Disc, SchottkyGroup};
use resonance_lab::thermo::{hausdorff_dimension, pressure, default_n_max, DEFAULT_TOL};
use resonance_lab::trace_formula::{
    bump, cylinder_resonances, geodesic_side_from, mean_square_from, moment_ladder, psi_eval,
    resonance_check, with_conjugates, TestFunction, TraceCheckOptions,
};
use resonance_lab::words::{length_spectrum, word_element, Word, DEFAULT_BIN_TOL};
use resonance_lab::zeta::{
    default_order, dimension_by_eigenvalue, find_resonances, strip_census, theorem_strip, CycleExpansion,
    FredholmEvaluator, Rect, ResonanceSearch, zeta_cycle, zeta_fredholm,
};
use resonance_lab::Error;

/// Criteria allowed to print FAIL without failing the run, each with the
/// condition it must fail under.
const KNOWN_FAILURES: &[usize] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
    /// Failure is the documented, expected one.
    known: bool,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome { pass: ok, detail, known: false }
}

fn cylinder(l0: f64) -> SchottkyGroup {
    let (c, s) = ((0.5 * l0).cosh(), (0.5 * l0).sinh());
    group_from_matrices(&[MoebiusMap::new(c, s, s, c).unwrap()], Model::HalfPlane).unwrap()
}

fn p2() -> SchottkyGroup {
    symmetric_group(2, 0.3).unwrap()
}

fn int3() -> SchottkyGroup {
    let ms = [
        MoebiusMap::new(-1.0, 7.0, 1.0, -8.0).unwrap(),
        MoebiusMap::new(11.0, 54.0, 1.0, 5.0).unwrap(),
        MoebiusMap::new(2.0, -11.0, 1.0, -5.0).unwrap(),
    ];
    group_from_matrices(&ms, Model::HalfPlane).unwrap()
}

fn generic2() -> SchottkyGroup {
    let ms = [
        MoebiusMap::new(-4.9, 2.43, 1.0, -0.7).unwrap(),
        MoebiusMap::new(6.5, 8.1, 1.0, 1.4).unwrap(),
    ];
    group_from_matrices(&ms, Model::HalfPlane).unwrap()
}

/// Every zero search run by the suite, for the argument-principle check.
#[derive(Default)]
struct Searches(Vec<(String, ResonanceSearch)>);

impl Searches {
    fn run(&mut self, name: &str, g: &SchottkyGroup, rect: Rect, step: f64) -> ResonanceSearch {
        let r = find_resonances(g, &rect, step, default_order(g)).unwrap();
        self.0.push((name.to_string(), r.clone()));
        r
    }
}

fn criterion_1(searches: &mut Searches) -> Outcome {
    let start = Instant::now();
    let g = cylinder(2.0);
    let res = searches.run("cylinder", &g, Rect::new(-0.5, 0.5, 0.0, 7.0).unwrap(), 0.05);
    let mut ok = res.zeros.len() == 3;
    let mut worst_pos = 0.0f64;
    let mut worst_val = 0.0f64;
    for (m, z) in res.zeros.iter().enumerate() {
        let exact = C64::new(0.0, PI * m as f64);
        worst_pos = worst_pos.max((z.s - exact).norm());
        ok &= z.order == 2;
        for v in [
            zeta_cycle(&g, exact, 24).unwrap().value,
            zeta_fredholm(&g, exact, default_order(&g)).unwrap().value,
        ] {
            worst_val = worst_val.max(v.norm());
        }
    }
    let elapsed = start.elapsed();
    ok &= worst_pos <= 1e-8 && worst_val <= 1e-8 && elapsed < Duration::from_secs(60);
    check(
        ok,
        format!(
            "cylinder zeros {:?}, orders {:?}, max position error {worst_pos:.1e}, max |Z| {worst_val:.1e}, {:.1}s",
            res.zeros.iter().map(|z| format!("{:.6}", z.s)).collect::<Vec<_>>(),
            res.zeros.iter().map(|z| z.order).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(delta: f64) -> Outcome {
    let start = Instant::now();
    let g = p2();
    let n = default_n_max(2);
    let ce = CycleExpansion::new(&g, n);
    let fe = FredholmEvaluator::new(&g, default_order(&g)).unwrap();
    let mut worst_ratio = 0.0f64;
    let mut worst_rel = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let s = C64::new(delta - 0.3 + 0.15 * i as f64, 2.5 * j as f64);
            let a = ce.eval(s, n).unwrap();
            let b = fe.eval(s).unwrap();
            let diff = (a.value - b.value).norm();
            worst_ratio = worst_ratio.max(diff / (a.error_estimate + b.error_estimate));
            if b.value.norm() > 1e-3 {
                worst_rel = worst_rel.max(diff / b.value.norm());
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst_ratio <= 3.0 && worst_rel <= 1e-6 && elapsed < Duration::from_secs(300),
        format!(
            "max |cycle-fredholm|/(sum of estimates) {worst_ratio:.2}, max relative difference {worst_rel:.1e} (N={n}, M={}), {:.1}s",
            default_order(&g),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3(searches: &mut Searches) -> (Outcome, f64) {
    let g = p2();
    let d = hausdorff_dimension(&g, DEFAULT_TOL).unwrap();
    let eig = dimension_by_eigenvalue(&g, default_order(&g), 1e-12).unwrap();
    let route_gap = (d.delta - eig).abs();
    let res = searches.run("real axis", &g, Rect::new(-0.2, 1.0, -0.05, 0.05).unwrap(), 0.05);
    let largest = res
        .zeros
        .iter()
        .filter(|z| z.s.im.abs() < 1e-8)
        .map(|z| (z.s.re, z.order))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let p0 = pressure(&g, 0.0, default_n_max(2)).unwrap().value;
    let p0_err = (p0 - 3f64.ln()).abs();
    (
        check(
            route_gap <= 1e-5 && (largest.0 - eig).abs() <= 1e-6 && largest.1 == 1 && p0_err <= 1e-6,
            format!(
                "δ pressure {:.10} vs eigenvalue {eig:.10} (gap {route_gap:.1e}); largest real zero {:.10} order {} (gap {:.1e}); |P(0)-log 3| {p0_err:.1e}",
                d.delta,
                largest.0,
                largest.1,
                (largest.0 - eig).abs()
            ),
        ),
        eig,
    )
}

fn criterion_4(delta: f64) -> Outcome {
    let start = Instant::now();
    let g = p2();
    let spec = length_spectrum(&g, 20.0, DEFAULT_BIN_TOL);
    let t = spec.certified;
    let ratio = spec.prime_count(t) as f64 / ((delta * t).exp() / (delta * t));
    let elapsed = start.elapsed();
    check(
        t >= 10.0 && (0.5..=2.0).contains(&ratio) && elapsed < Duration::from_secs(600),
        format!(
            "π(T)/(e^(δT)/(δT)) = {ratio:.3} at certified T = {t}, {} primes, {:.1}s",
            spec.prime_count(t),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5(delta: f64, searches: &mut Searches) -> Outcome {
    // cylinder: both sides in closed form
    let l0 = 2.0;
    let g = cylinder(l0);
    let spec = length_spectrum(&g, 12.0, DEFAULT_BIN_TOL);
    let rho = -0.25;
    let zeros = cylinder_resonances(l0, rho, 400.0);
    let opts = TraceCheckOptions::new(0.0, 400.0);
    let mut cyl_ok = true;
    let mut cyl = Vec::new();
    for t in [6.0, 8.0, 10.0] {
        let r = resonance_check(&spec, &TestFunction::new(0.0, t), rho, &zeros, &opts, None).unwrap();
        cyl_ok &= r.residual.norm() <= r.bound_estimate + 1e-6;
        cyl.push(format!("T={t}: {:.1e} <= {:.2}", r.residual.norm(), r.bound_estimate));
    }

    // p=2: only s=δ has Re s > ρ inside the certified search window
    let g = p2();
    // the next zero, 0.3245+5.0567i, lies 0.0085 below δ
    let rho = delta - 0.005;
    let height = 10.0;
    let res = searches.run("right of rho", &g, Rect::new(rho, delta + 0.1, 0.0, height).unwrap(), 0.05);
    let found: Vec<C64> = res.zeros.iter().map(|z| z.s).collect();
    let only_delta = found.len() == 1 && (found[0] - delta).norm() < 1e-8;
    let spec = length_spectrum(&g, 16.0, DEFAULT_BIN_TOL);
    let opts = TraceCheckOptions::new(delta, height);
    let fe = FredholmEvaluator::new(&g, default_order(&g)).unwrap();
    let z = |s: C64| fe.value(s);
    let check6 = resonance_check(
        &spec,
        &TestFunction::new(0.0, 6.0),
        rho,
        &with_conjugates(&res.zeros),
        &opts,
        Some(&z),
    );
    let coverage = match check6 {
        Err(Error::Coverage { have, need }) => Some((have, need)),
        _ => None,
    };
    // scaling diagnostic without the coverage precondition
    let resid = |t: f64| {
        let tf = TestFunction::new(0.0, t);
        (geodesic_side_from(&spec, &tf).unwrap() - psi_eval(&tf, C64::new(delta, 0.0))).norm()
    };
    let (t1, t2) = (6.0, 14.0);
    let ratio = (resid(t2) / resid(t1)) / (rho * (t2 - t1)).exp();
    let scaling_ok = (1.0 / 3.0..=3.0).contains(&ratio);

    let mut out = check(
        cyl_ok && only_delta && coverage.is_none() && scaling_ok,
        format!(
            "cylinder residual vs bound [{}]; p=2 zeros right of ρ up to height {height}: {found:.6?}; {}; uncertified scaling ratio (T={t1},{t2}) {ratio:.2}",
            cyl.join(", "),
            match coverage {
                Some((have, need)) => format!(
                    "coverage error: resonances certified to |Im s| <= {have}, tail tolerance needs {need:.1}"
                ),
                None => "coverage satisfied".into(),
            }
        ),
    );
    out.known = cyl_ok && only_delta && coverage.is_some() && scaling_ok;
    out
}

fn criterion_6() -> Outcome {
    let g = p2();
    let spec = length_spectrum(&g, 12.0, DEFAULT_BIN_TOL);
    // direct definition: √σ ∫ e^{-σξ²} |Σ a_ℓ φ(ℓ-T) e^{-iξℓ}|² dξ by the trapezoid rule
    let direct = |sigma: f64, t: f64| {
        let terms: Vec<(f64, f64)> = spec
            .entries
            .iter()
            .filter(|e| (e.ell - t).abs() < 2.0)
            .map(|e| (e.ell, e.weight / (1.0 - (-e.ell).exp()) * bump(e.ell - t)))
            .collect();
        let cut = (40.0 / sigma).sqrt();
        let n = 40_000;
        let h = 2.0 * cut / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let xi = -cut + k as f64 * h;
            let s: C64 = terms.iter().map(|&(l, a)| a * C64::from_polar(1.0, -xi * l)).sum();
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * (-sigma * xi * xi).exp() * s.norm_sqr();
        }
        sigma.sqrt() * acc * h
    };
    let (sigma, t) = (0.5, 7.5);
    let ms = mean_square_from(&spec, sigma, t).unwrap();
    let d = direct(sigma, t);
    let rel = (ms.g - d).abs() / ms.g.max(1.0);
    let mut positive = true;
    for t in [5.0, 6.5, 8.0, 9.5] {
        for sigma in [0.01, 0.1, 1.0, 10.0] {
            let m = mean_square_from(&spec, sigma, t).unwrap();
            positive &= m.g >= m.diagonal;
        }
    }
    check(
        rel <= 1e-6 && positive,
        format!("closed form {:.10} vs quadrature {d:.10} (rel {rel:.1e}); G >= diagonal on 16 (σ,T): {positive}", ms.g),
    )
}

fn criterion_7(searches: &Searches) -> Outcome {
    let ts: Vec<f64> = (0..9).map(|k| 8.0 + 0.75 * k as f64).collect();
    let int = moment_ladder(&length_spectrum(&int3(), 15.0, DEFAULT_BIN_TOL), &ts).unwrap();
    let gen = moment_ladder(&length_spectrum(&generic2(), 15.0, DEFAULT_BIN_TOL), &ts).unwrap();
    let distinct = int.distinct_exponent.unwrap();
    let (m2_int, m2_gen) = (int.m2_exponent.unwrap(), gen.m2_exponent.unwrap());
    let cluster = int.windows.iter().filter_map(|w| w.cluster_max).max().unwrap_or(0);
    let bad: Vec<String> = searches
        .0
        .iter()
        .filter(|(_, r)| !r.consistent || r.winding != r.zero_count as i64)
        .map(|(n, r)| format!("{n}: winding {} vs {} zeros", r.winding, r.zero_count))
        .collect();
    check(
        distinct <= 0.6 && m2_int > m2_gen && bad.is_empty(),
        format!(
            "integer group: distinct-count exponent {distinct:.3}, Σm² exponent {m2_int:.3}, cluster max {cluster}; generic Σm² exponent {m2_gen:.3}; {} searched rectangles, mismatches {bad:?}",
            searches.0.len()
        ),
    )
}

/// `d(z, γz')` from `cosh d = 1 + |z-w|²/(2 Im z Im w)`, internal frame.
fn cosh_distance(a: C64, b: C64) -> f64 {
    (1.0 + (a - b).norm_sqr() / (2.0 * a.im * b.im)).acosh()
}

/// Brute-force count. Words are enumerated depth-first; a branch is closed
/// only when its Euclidean disc is so small that every point in it lies
/// farther than `T + d(z,z0) + d(z',z0)` from a base point `z0` outside all
/// discs, using `d(z0, w) >= log(Im z0 / Im w)`.
fn brute_force_count(g: &SchottkyGroup, z: PointH, zp: PointH, t: f64) -> u64 {
    let zi = g.to_internal(z).unwrap();
    let zpi = g.to_internal(zp).unwrap();
    let top = g.discs().iter().map(|d| d.center.re.abs() + d.radius).fold(0.0, f64::max);
    let z0 = C64::new(0.0, 1.0 + top);
    let reach = t + cosh_distance(zi, z0) + cosh_distance(zpi, z0);
    let r_min = z0.im * (-reach).exp();
    let p = g.rank();
    let mut count = (cosh_distance(zi, zpi) <= t) as u64;
    let mut stack: Vec<Word> = (0..2 * p).map(|a| Word::new(vec![a])).collect();
    while let Some(w) = stack.pop() {
        let m = word_element(g, &w).map;
        let b = m.apply_c(zpi).unwrap();
        if cosh_distance(zi, b) <= t {
            count += 1;
        }
        let last = *w.letters.last().unwrap();
        let prefix = word_element(g, &Word::new(w.letters[..w.len() - 1].to_vec())).map;
        let d: &Disc = &g.discs()[(last + p) % (2 * p)];
        let (x0, x1) = d.interval();
        let r = 0.5 * (prefix.apply_real(x1) - prefix.apply_real(x0)).abs();
        if r < r_min {
            continue;
        }
        for a in 0..2 * p {
            if a != (last + p) % (2 * p) {
                let mut l = w.letters.clone();
                l.push(a);
                stack.push(Word::new(l));
            }
        }
    }
    count
}

fn criterion_8(delta: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let groups = [p2(), symmetric_group(3, 0.2).unwrap()];
    let mut mismatches = Vec::new();
    let mut asym = 0;
    for k in 0..20 {
        let g = &groups[k % 2];
        let mut pt = || {
            let (r, a): (f64, f64) = (0.8 * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>());
            PointH::disc(C64::from_polar(r, a)).unwrap()
        };
        let (z, zp) = (pt(), pt());
        let t = 8.0 * rng.random::<f64>();
        let fast = orbit_count(g, z, zp, t).unwrap().count;
        let oracle = brute_force_count(g, z, zp, t);
        if fast != oracle {
            mismatches.push(format!("T={t:.3}: {fast} vs {oracle}"));
        }
        if orbit_count(g, zp, z, t).unwrap().count != fast {
            asym += 1;
        }
    }
    // growth exponent: least-squares slope of log N against T on [10, 14]
    let (z, zp) = default_points();
    let g = p2();
    let ts: Vec<f64> = (0..=16).map(|k| 10.0 + 0.25 * k as f64).collect();
    let counts = orbit_counts(&g, z, zp, &ts).unwrap();
    let back = orbit_counts(&g, zp, z, &ts).unwrap();
    asym += counts.iter().zip(&back).filter(|(a, b)| a.count != b.count).count();
    let pts: Vec<(f64, f64)> = counts.iter().map(|c| (c.t, (c.count as f64).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    check(
        mismatches.is_empty() && asym == 0 && (slope - delta).abs() <= 0.1,
        format!(
            "20 random cases, oracle mismatches {mismatches:?}; growth exponent on T in [10,14] {slope:.4} vs δ {delta:.4}; asymmetric counts {asym}"
        ),
    )
}

fn criterion_9(delta: f64, searches: &mut Searches) -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..100 {
        let d = k as f64 / 100.0;
        let b = theorem_strip(d).unwrap();
        let expect = if d <= 0.5 { d * (1.0 - 2.0 * d) / 2.0 } else { d / 2.0 - 0.25 };
        worst = worst.max((b.theorem - expect).abs()).max((b.conjectural - d / 2.0).abs());
    }
    let g = p2();
    let res = searches.run("strip", &g, Rect::new(delta - 0.2, delta + 0.5, 0.0, 6.0).unwrap(), 0.05);
    let census = strip_census(&res.zeros, delta + 1e-9, 6.0);
    let right = searches.run("right of delta", &g, Rect::new(delta + 1e-3, delta + 1.0, 0.0, 10.0).unwrap(), 0.1);
    let at = strip_census(&res.zeros, delta - 1e-8, 6.0).count;
    check(
        worst <= f64::EPSILON && census.count == 0 && right.zeros.is_empty() && at == 1,
        format!(
            "max formula deviation {worst:.1e} over 99 values; census right of δ {} (at δ {at}); zeros in [δ+1e-3, δ+1]x[0,10]: {}",
            census.count,
            right.zeros.len()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut searches = Searches::default();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push((1, criterion_1(&mut searches)));
    let (c3, delta) = criterion_3(&mut searches);
    results.push((2, criterion_2(delta)));
    results.push((3, c3));
    results.push((4, criterion_4(delta)));
    results.push((5, criterion_5(delta, &mut searches)));
    results.push((6, criterion_6()));
    results.push((8, criterion_8(delta)));
    results.push((9, criterion_9(delta, &mut searches)));
    results.push((7, criterion_7(&searches)));
    results.sort_by_key(|r| r.0);

    let mut unexpected = Vec::new();
    for (id, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {tag}: {}", o.detail);
        if !o.pass && !(o.known && KNOWN_FAILURES.contains(id)) {
            unexpected.push(*id);
        }
    }
    println!(
        "acceptance: {} of {} pass, {:.1}s",
        results.iter().filter(|r| r.1.pass).count(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
