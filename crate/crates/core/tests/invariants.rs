use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use resonance_lab::lattice::{orbit_count, point};
use resonance_lab::schottky::{symmetric_group, SchottkyGroup};
use resonance_lab::thermo::pressure_from_table;
use resonance_lab::trace_formula::{bump, mean_square_from, moment_window, psi_eval, TestFunction};
use resonance_lab::words::{length_spectrum, word_element, LengthSpectrum, Word, DEFAULT_BIN_TOL};
use resonance_lab::zeta::{default_order, theorem_strip, CycleExpansion, FredholmEvaluator};

fn group() -> &'static SchottkyGroup {
    static G: OnceLock<SchottkyGroup> = OnceLock::new();
    G.get_or_init(|| symmetric_group(2, 0.3).unwrap())
}

fn fredholm() -> &'static FredholmEvaluator {
    static F: OnceLock<FredholmEvaluator> = OnceLock::new();
    F.get_or_init(|| FredholmEvaluator::new(group(), default_order(group())).unwrap())
}

fn cycles() -> &'static CycleExpansion {
    static C: OnceLock<CycleExpansion> = OnceLock::new();
    C.get_or_init(|| CycleExpansion::new(group(), 10))
}

fn spectrum() -> &'static LengthSpectrum {
    static S: OnceLock<LengthSpectrum> = OnceLock::new();
    S.get_or_init(|| length_spectrum(group(), 12.0, DEFAULT_BIN_TOL))
}

/// Reduced word from a first letter and a list of "not the inverse" choices.
fn reduced_word(first: usize, steps: &[usize]) -> Word {
    let mut letters = vec![first];
    for &c in steps {
        let prev = *letters.last().unwrap();
        let inv = (prev + 2) % 4;
        let next = (0..4).filter(|&a| a != inv).nth(c).unwrap();
        letters.push(next);
    }
    Word::new(letters)
}

fn close(a: C64, b: C64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zeta_is_real_on_conjugates(re in -0.2f64..1.0, im in 0.0f64..12.0) {
        let s = C64::new(re, im);
        let f = fredholm();
        prop_assert!(close(f.value(s.conj()), f.value(s).conj(), 1e-12));
        let c = cycles();
        let a = c.eval(s, 10).unwrap().value;
        let b = c.eval(s.conj(), 10).unwrap().value;
        prop_assert!(close(b, a.conj(), 1e-10));
    }

    #[test]
    fn length_is_a_class_invariant(first in 0usize..4, steps in prop::collection::vec(0usize..3, 1..9), k in 0usize..10) {
        let w = reduced_word(first, &steps);
        prop_assume!(w.is_cyclically_reduced(2));
        let l = word_element(group(), &w).length.unwrap();
        let lr = word_element(group(), &w.rotated(k % w.len())).length.unwrap();
        let li = word_element(group(), &w.inverse(2)).length.unwrap();
        prop_assert!((l - lr).abs() <= 1e-9 * l.max(1.0));
        prop_assert!((l - li).abs() <= 1e-9 * l.max(1.0));
    }

    #[test]
    fn orbit_count_symmetric_and_monotone(
        r1 in 0.0f64..0.7, a1 in 0.0f64..6.28,
        r2 in 0.0f64..0.7, a2 in 0.0f64..6.28,
        t in 0.5f64..6.0,
    ) {
        let g = group();
        let z = point(g, C64::from_polar(r1, a1)).unwrap();
        let zp = point(g, C64::from_polar(r2, a2)).unwrap();
        let n = orbit_count(g, z, zp, t).unwrap().count;
        prop_assert_eq!(n, orbit_count(g, zp, z, t).unwrap().count);
        prop_assert!(orbit_count(g, z, zp, t + 0.5).unwrap().count >= n);
    }

    #[test]
    fn bump_is_even_and_bounded(x in -3.0f64..3.0) {
        let b = bump(x);
        prop_assert!((0.0..=1.0).contains(&b));
        prop_assert_eq!(b, bump(-x));
        if x.abs() <= 1.0 { prop_assert_eq!(b, 1.0); }
        if x.abs() >= 2.0 { prop_assert_eq!(b, 0.0); }
    }

    #[test]
    fn bump_is_monotone_off_plateau(x in 1.0f64..2.0, dx in 0.0f64..0.5) {
        prop_assert!(bump(x + dx) <= bump(x));
    }

    #[test]
    fn psi_is_linear_in_the_test_function(
        xi in -3.0f64..3.0, t in 2.0f64..10.0, c in -4.0f64..4.0,
        re in -0.5f64..1.0, im in -20.0f64..20.0,
    ) {
        let tf = TestFunction::new(xi, t);
        let s = C64::new(re, im);
        prop_assert!(close(psi_eval(&tf.scaled(c), s), psi_eval(&tf, s) * c, 1e-12));
    }

    #[test]
    fn strip_bound_below_conjectural_value(d in 0.001f64..0.999) {
        let b = theorem_strip(d).unwrap();
        prop_assert!(b.theorem > 0.0 || (d - 0.5).abs() < 1e-12);
        prop_assert!(b.theorem <= b.conjectural);
    }

    #[test]
    fn moment_windows_satisfy_schwarz(t in 2.0f64..11.0) {
        let w = moment_window(spectrum(), t).unwrap();
        prop_assert!(w.m2_sum * w.distinct as f64 >= w.m_sum * w.m_sum * (1.0 - 1e-12));
        prop_assert!(w.m2_sum >= w.m_sum);
    }

    #[test]
    fn mean_square_dominates_diagonal(sigma in 0.01f64..5.0, t in 2.0f64..10.0) {
        let m = mean_square_from(spectrum(), sigma, t).unwrap();
        prop_assert!(m.g >= m.diagonal * (1.0 - 1e-12));
    }

    #[test]
    fn pressure_decreases(x in 0.0f64..1.5, dx in 0.05f64..0.5) {
        let table = cycles().table();
        let p1 = pressure_from_table(table, x, 10).unwrap().value;
        let p2 = pressure_from_table(table, x + dx, 10).unwrap().value;
        prop_assert!(p2 < p1);
    }
}

#[test]
fn strip_bound_is_continuous_at_one_half() {
    let below = theorem_strip(0.5 - 1e-12).unwrap().theorem;
    let above = theorem_strip(0.5 + 1e-12).unwrap().theorem;
    assert!((below - above).abs() < 1e-11);
}
