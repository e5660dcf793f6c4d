//! Reduced words, group elements and the length spectrum.
//!
//! Letters are 0-based: `j < p` is `h_j`, `j >= p` is `h_{j-p}^-1`. Words are
//! printed 1-based and dash-separated.
//!
//! Primitive conjugacy classes are enumerated as Lyndon words (strictly
//! smallest among their rotations) that are cyclically reduced. The search is
//! a depth-first walk over prenecklace prefixes that carries the prefix
//! product and a lower bound for the translation length of any closed
//! completion: a cyclically reduced word `a_1..a_n` translates by at least
//! the sum of the hyperbolic gaps between `D_{a_k}` and `D_{a_{k+1}+p}`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::moebius::MoebiusMap;
use crate::schottky::SchottkyGroup;

pub const DEFAULT_BIN_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_WORD_LEN: usize = 64;
const RESCALE_AT: f64 = 1e150;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Word {
    pub letters: Vec<usize>,
}

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self, p: usize) -> bool {
        self.letters.windows(2).all(|w| w[1] != (w[0] + p) % (2 * p))
    }

    pub fn is_cyclically_reduced(&self, p: usize) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&a), Some(&z)) => self.is_reduced(p) && z != (a + p) % (2 * p),
            _ => false,
        }
    }

    pub fn is_primitive(&self) -> bool {
        let n = self.len();
        n > 0 && (1..n).filter(|d| n % d == 0).all(|d| self.letters[d..] != self.letters[..n - d])
    }

    pub fn rotated(&self, k: usize) -> Word {
        let mut l = self.letters.clone();
        if !l.is_empty() {
            let k = k % l.len();
            l.rotate_left(k);
        }
        Word::new(l)
    }

    pub fn inverse(&self, p: usize) -> Word {
        Word::new(self.letters.iter().rev().map(|&a| (a + p) % (2 * p)).collect())
    }

    /// Smallest rotation (the class representative used in the spectrum).
    pub fn min_rotation(&self) -> Word {
        (0..self.len().max(1))
            .map(|k| self.rotated(k))
            .min()
            .unwrap_or_else(|| self.clone())
    }

    pub fn repeated(&self, k: usize) -> Word {
        Word::new(self.letters.repeat(k))
    }

    /// Parses the dash-separated 1-based form.
    pub fn parse(s: &str) -> Option<Word> {
        s.split('-')
            .map(|t| t.trim().parse::<usize>().ok().filter(|&x| x >= 1).map(|x| x - 1))
            .collect::<Option<Vec<_>>>()
            .map(Word::new)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|a| (a + 1).to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordMode {
    Reduced,
    CyclicallyReduced,
}

/// Iterator over all words of one length in lexicographic order.
pub struct WordIter {
    p: usize,
    n: usize,
    mode: WordMode,
    cur: Option<Vec<usize>>,
}

impl WordIter {
    fn ok(&self, l: &[usize], k: usize) -> bool {
        k == 0 || l[k] != (l[k - 1] + self.p) % (2 * self.p)
    }

    /// Smallest valid completion of `l[..=k]`, in place.
    fn fill_from(&self, l: &mut [usize], k: usize) {
        for i in (k + 1)..self.n {
            l[i] = 0;
            if !self.ok(l, i) {
                l[i] = 1;
            }
        }
    }

    fn advance(&self, l: &mut Vec<usize>) -> bool {
        let q = 2 * self.p;
        let mut k = self.n;
        while k > 0 {
            k -= 1;
            loop {
                l[k] += 1;
                if l[k] >= q {
                    break;
                }
                if self.ok(l, k) {
                    self.fill_from(l, k);
                    return true;
                }
            }
        }
        false
    }
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        loop {
            let cur = self.cur.as_mut()?.clone();
            let mut nxt = cur.clone();
            self.cur = if self.advance(&mut nxt) { Some(nxt) } else { None };
            let w = Word::new(cur);
            if self.mode == WordMode::Reduced || w.is_cyclically_reduced(self.p) {
                return Some(w);
            }
        }
    }
}

pub fn enumerate_words(g: &SchottkyGroup, n: usize, mode: WordMode) -> WordIter {
    let p = g.rank();
    let mut it = WordIter {
        p,
        n,
        mode,
        cur: None,
    };
    if n >= 1 {
        let mut l = vec![0; n];
        it.fill_from(&mut l, 0);
        it.cur = Some(l);
    }
    it
}

/// Product of the letter matrices kept as `exp(log_scale) * map`.
#[derive(Debug, Clone, Copy)]
pub struct WordElement {
    pub map: MoebiusMap,
    pub log_scale: f64,
    /// `2 arccosh(|trace|/2)`; `None` when the element is not hyperbolic.
    pub length: Option<f64>,
}

fn rescale(m: &mut MoebiusMap, log_scale: &mut f64) {
    let big = m.a.abs().max(m.b.abs()).max(m.c.abs()).max(m.d.abs());
    if big > RESCALE_AT {
        let k = big.recip();
        m.a *= k;
        m.b *= k;
        m.c *= k;
        m.d *= k;
        *log_scale += big.ln();
    }
}

/// Translation length of a matrix whose true trace is `exp(log_scale) * t`.
pub fn length_from_scaled_trace(t: f64, log_scale: f64) -> Option<f64> {
    let t = t.abs();
    if log_scale == 0.0 {
        return (t > 2.0).then(|| crate::moebius::length_from_trace(t));
    }
    // 2 arccosh(X) = 2 ln X + 2 ln(1 + sqrt(1 - X^-2)), X = |trace|/2
    let ln_x = log_scale + (0.5 * t).ln();
    if ln_x <= 0.0 {
        return None;
    }
    let inv2 = (-2.0 * ln_x).exp();
    Some(2.0 * ln_x + 2.0 * (1.0 + (1.0 - inv2).sqrt()).ln())
}

pub fn word_element(g: &SchottkyGroup, w: &Word) -> WordElement {
    let mut m = MoebiusMap::IDENTITY;
    let mut log_scale = 0.0;
    for &a in &w.letters {
        m = m * g.letter(a);
        rescale(&mut m, &mut log_scale);
    }
    WordElement {
        map: m,
        log_scale,
        length: length_from_scaled_trace(m.trace(), log_scale),
    }
}

/// A primitive conjugacy class found by the search.
#[derive(Debug, Clone)]
pub struct PrimeClass {
    pub word: Word,
    pub length: f64,
    /// Exact `|trace|` for integer-matrix groups.
    pub trace: Option<i128>,
}

type IMat = [i128; 4];

fn imul(x: &IMat, y: &IMat) -> IMat {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

struct Search {
    p: usize,
    t_max: f64,
    max_len: usize,
    g_min: f64,
    gaps: Vec<Vec<f64>>,
    letters: Vec<MoebiusMap>,
    int_letters: Option<Vec<IMat>>,
}

#[derive(Clone)]
struct Node {
    word: Vec<usize>,
    map: MoebiusMap,
    log_scale: f64,
    imap: Option<IMat>,
    partial: f64,
    period: usize,
}

impl Search {
    fn new(g: &SchottkyGroup, t_max: f64, max_len: usize) -> Self {
        let n = g.n_letters();
        let gaps = (0..n)
            .map(|a| (0..n).map(|b| g.transition_gap(a, b)).collect())
            .collect();
        let int_letters = g.input_generators().iter().all(MoebiusMap::is_integral).then(|| {
            (0..n)
                .map(|j| {
                    let m = if j < g.rank() {
                        g.input_generators()[j]
                    } else {
                        g.input_generators()[j - g.rank()].inverse()
                    };
                    [m.a as i128, m.b as i128, m.c as i128, m.d as i128]
                })
                .collect()
        });
        Search {
            p: g.rank(),
            t_max,
            max_len,
            g_min: g.min_gap(),
            gaps,
            letters: (0..n).map(|j| g.letter(j)).collect(),
            int_letters,
        }
    }

    fn root(&self, a: usize) -> Node {
        Node {
            word: vec![a],
            map: self.letters[a],
            log_scale: 0.0,
            imap: self.int_letters.as_ref().map(|l| l[a]),
            partial: 0.0,
            period: 1,
        }
    }

    /// Child of `node` by letter `c`, or `None` when the prefix is not reduced,
    /// not a prenecklace, or cannot close up within `t_max`.
    fn child(&self, node: &Node, c: usize) -> Option<Node> {
        let k = node.word.len();
        let last = node.word[k - 1];
        if c == (last + self.p) % (2 * self.p) || k >= self.max_len {
            return None;
        }
        let cmp = node.word[k - node.period];
        if c < cmp {
            return None;
        }
        let partial = node.partial + self.gaps[last][c];
        if partial + self.g_min > self.t_max {
            return None;
        }
        let mut map = node.map * self.letters[c];
        let mut log_scale = node.log_scale;
        rescale(&mut map, &mut log_scale);
        let imap = match (&node.imap, &self.int_letters) {
            (Some(x), Some(l)) => Some(imul(x, &l[c])),
            _ => None,
        };
        let mut word = node.word.clone();
        word.push(c);
        Some(Node {
            word,
            map,
            log_scale,
            imap,
            partial,
            period: if c == cmp { node.period } else { k + 1 },
        })
    }

    fn emit(&self, node: &Node, out: &mut Vec<PrimeClass>) {
        let k = node.word.len();
        if node.period != k || node.word[k - 1] == (node.word[0] + self.p) % (2 * self.p) {
            return;
        }
        if let Some(length) = length_from_scaled_trace(node.map.trace(), node.log_scale) {
            if length <= self.t_max {
                out.push(PrimeClass {
                    word: Word::new(node.word.clone()),
                    length,
                    trace: node.imap.map(|m| (m[0] + m[3]).abs()),
                });
            }
        }
    }

    fn walk(&self, node: &Node, out: &mut Vec<PrimeClass>) {
        self.emit(node, out);
        for c in node.word[0]..2 * self.p {
            if let Some(ch) = self.child(node, c) {
                self.walk(&ch, out);
            }
        }
    }

    /// All primitive classes, split into independent subtrees by the first
    /// two letters and concatenated in a fixed order.
    fn run(&self) -> Vec<PrimeClass> {
        let n = 2 * self.p;
        let mut seeds = Vec::new();
        let mut out = Vec::new();
        for a in 0..n {
            let root = self.root(a);
            if self.g_min > self.t_max {
                continue;
            }
            self.emit(&root, &mut out);
            for c in a..n {
                if let Some(ch) = self.child(&root, c) {
                    seeds.push(ch);
                }
            }
        }
        let parts: Vec<Vec<PrimeClass>> = seeds
            .par_iter()
            .map(|s| {
                let mut v = Vec::new();
                self.walk(s, &mut v);
                v
            })
            .collect();
        out.extend(parts.into_iter().flatten());
        out
    }
}

/// Primitive oriented conjugacy classes with translation length `<= t_max`
/// and word length `<= max_len`, sorted by (length, word).
pub fn primitive_classes(g: &SchottkyGroup, t_max: f64, max_len: usize) -> Vec<PrimeClass> {
    let mut v = Search::new(g, t_max, max_len).run();
    v.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.word.cmp(&b.word)));
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthEntry {
    pub ell: f64,
    /// Prime length of the representative.
    pub prime_length: f64,
    pub k: usize,
    pub multiplicity: usize,
    pub representative: Word,
    /// Sum of the prime lengths of all merged pairs `(k, γ)`; equals
    /// `prime_length * multiplicity` when every member shares the same prime length.
    pub weight: f64,
    /// Number of merged pairs with `k = 1`.
    pub primes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthSpectrum {
    pub entries: Vec<LengthEntry>,
    pub t_max: f64,
    /// Every length `<= certified` is present.
    pub certified: f64,
    pub max_word_len: usize,
    pub exact_keys: bool,
    pub warnings: Vec<String>,
}

impl LengthSpectrum {
    /// Number of primitive classes with length `<= t`.
    pub fn prime_count(&self, t: f64) -> usize {
        self.entries.iter().filter(|e| e.ell <= t).map(|e| e.primes).sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["ell", "prime_length", "k", "multiplicity", "word"])?;
        for e in &self.entries {
            wr.write_record([
                format!("{:.15e}", e.ell),
                format!("{:.15e}", e.prime_length),
                e.k.to_string(),
                e.multiplicity.to_string(),
                e.representative.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Word length needed so that every class of length `<= t` has been seen.
pub fn required_word_len(g: &SchottkyGroup, t: f64) -> usize {
    (t / g.min_gap()).floor() as usize
}

pub fn length_spectrum(g: &SchottkyGroup, t_max: f64, bin_tol: f64) -> LengthSpectrum {
    length_spectrum_with(g, t_max, bin_tol, DEFAULT_MAX_WORD_LEN)
}

struct Member {
    ell: f64,
    prime: f64,
    k: usize,
    word: Word,
    key: Option<i128>,
}

/// `|trace(γ^k)|` from `|trace(γ)|` by `t_k = t t_{k-1} - t_{k-2}`.
fn power_trace(t: i128, k: usize) -> Option<i128> {
    let (mut prev, mut cur) = (2i128, t);
    for _ in 1..k {
        let next = t.checked_mul(cur)?.checked_sub(prev)?;
        prev = cur;
        cur = next;
    }
    Some(cur)
}

pub fn length_spectrum_with(
    g: &SchottkyGroup,
    t_max: f64,
    bin_tol: f64,
    max_word_len: usize,
) -> LengthSpectrum {
    let mut warnings = Vec::new();
    let need = required_word_len(g, t_max);
    let (cap, certified) = if need > max_word_len {
        let cert = (max_word_len + 1) as f64 * g.min_gap();
        warnings.push(format!(
            "completeness up to {t_max} needs words of length {need}, above the cap {max_word_len}; spectrum certified only to {cert:.4}"
        ));
        (max_word_len, cert.min(t_max))
    } else {
        (need.max(1), t_max)
    };
    let classes = primitive_classes(g, t_max, cap);

    let rounding = g.integer_trace() && classes.iter().any(|c| c.trace.is_none());
    let exact = g.integer_trace() || classes.iter().all(|c| c.trace.is_some()) && !classes.is_empty();
    let mut members = Vec::new();
    for c in &classes {
        let base = c.trace.or_else(|| {
            rounding
                .then(|| {
                    let t = 2.0 * (0.5 * c.length).cosh();
                    ((t - t.round()).abs() < 1e-6 * t.max(1.0)).then(|| t.round() as i128)
                })
                .flatten()
        });
        let mut k = 1;
        while k as f64 * c.length <= t_max {
            members.push(Member {
                ell: k as f64 * c.length,
                prime: c.length,
                k,
                word: c.word.clone(),
                key: if exact { base.and_then(|t| power_trace(t, k)) } else { None },
            });
            k += 1;
        }
    }
    let exact = exact && members.iter().all(|m| m.key.is_some());
    if g.integer_trace() && !exact {
        warnings.push("integer-trace flag set but some traces are not integral; merged by tolerance".into());
    }
    members.sort_by(|a, b| {
        if exact {
            a.key.cmp(&b.key).then_with(|| a.ell.total_cmp(&b.ell))
        } else {
            a.ell.total_cmp(&b.ell)
        }
        .then_with(|| a.word.cmp(&b.word))
    });

    let mut entries: Vec<LengthEntry> = Vec::new();
    let mut start = 0;
    while start < members.len() {
        let mut end = start + 1;
        while end < members.len()
            && if exact {
                members[end].key == members[start].key
            } else {
                members[end].ell - members[start].ell <= bin_tol
            }
        {
            end += 1;
        }
        let grp = &members[start..end];
        let rep = grp
            .iter()
            .min_by(|a, b| a.ell.total_cmp(&b.ell).then_with(|| a.word.cmp(&b.word)))
            .unwrap();
        entries.push(LengthEntry {
            ell: rep.ell,
            prime_length: rep.prime,
            k: rep.k,
            multiplicity: grp.len(),
            representative: rep.word.clone(),
            weight: grp.iter().map(|m| m.prime).sum(),
            primes: grp.iter().filter(|m| m.k == 1).count(),
        });
        start = end;
    }
    entries.sort_by(|a, b| {
        a.ell
            .total_cmp(&b.ell)
            .then_with(|| a.representative.cmp(&b.representative))
    });
    LengthSpectrum {
        entries,
        t_max,
        certified,
        max_word_len: cap,
        exact_keys: exact,
        warnings,
    }
}

/// Lengths of all cyclically reduced words, grouped by word length, for
/// word-sum traces `Σ_{|α|=n} f(l_α)`. Entry `(l, w)` stands for `w` words of
/// translation length `l`.
#[derive(Debug, Clone)]
pub struct CycleTable {
    pub n_max: usize,
    levels: Vec<Vec<(f64, f64)>>,
}

impl CycleTable {
    pub fn build(g: &SchottkyGroup, n_max: usize) -> Self {
        let classes = Search::new(g, f64::INFINITY, n_max).run();
        let mut levels: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_max + 1];
        for c in &classes {
            let q = c.word.len();
            let mut r = 1;
            while q * r <= n_max {
                levels[q * r].push((c.length * r as f64, q as f64));
                r += 1;
            }
        }
        for lv in levels.iter_mut() {
            lv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut merged: Vec<(f64, f64)> = Vec::with_capacity(lv.len());
            for &(l, w) in lv.iter() {
                match merged.last_mut() {
                    Some(last) if l - last.0 <= 1e-13 * l => last.1 += w,
                    _ => merged.push((l, w)),
                }
            }
            *lv = merged;
        }
        CycleTable { n_max, levels }
    }

    /// `(length, count)` pairs for words of length `n`, sorted by length.
    pub fn level(&self, n: usize) -> &[(f64, f64)] {
        &self.levels[n]
    }

    pub fn word_count(&self, n: usize) -> f64 {
        self.levels[n].iter().map(|x| x.1).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::Model;
    use crate::schottky::{group_from_matrices, symmetric_group};

    fn sym() -> SchottkyGroup {
        symmetric_group(2, 0.3).unwrap()
    }

    fn cylinder() -> SchottkyGroup {
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        group_from_matrices(&[MoebiusMap::new(c, s, s, c).unwrap()], Model::HalfPlane).unwrap()
    }

    /// Reduced words by explicit filtering of all sequences.
    fn brute(p: usize, n: usize, cyclic: bool) -> Vec<Word> {
        let q = 2 * p;
        let mut out = Vec::new();
        for code in 0..q.pow(n as u32) {
            let mut l = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                l.push(c % q);
                c /= q;
            }
            l.reverse();
            let w = Word::new(l);
            if (cyclic && w.is_cyclically_reduced(p)) || (!cyclic && w.is_reduced(p)) {
                out.push(w);
            }
        }
        out
    }

    #[test]
    fn reduced_word_counts() {
        let g = sym();
        assert_eq!(enumerate_words(&g, 1, WordMode::Reduced).count(), 4);
        assert_eq!(enumerate_words(&g, 3, WordMode::Reduced).count(), 36);
        for n in 1..6 {
            assert_eq!(
                enumerate_words(&g, n, WordMode::Reduced).count(),
                4 * 3usize.pow(n as u32 - 1)
            );
            let got: Vec<Word> = enumerate_words(&g, n, WordMode::CyclicallyReduced).collect();
            assert_eq!(got, brute(2, n, true));
        }
    }

    #[test]
    fn cyclic_count_matches_adjacency_trace() {
        // adjacency A[a][b] = 1 unless b is the inverse of a; count = tr(A^2)
        let p = 2;
        let q = 2 * p;
        let a: Vec<Vec<u64>> = (0..q)
            .map(|i| (0..q).map(|j| u64::from(j != (i + p) % q)).collect())
            .collect();
        let mut tr = 0;
        for i in 0..q {
            for k in 0..q {
                tr += a[i][k] * a[k][i];
            }
        }
        let g = sym();
        assert_eq!(enumerate_words(&g, 2, WordMode::CyclicallyReduced).count() as u64, tr);
    }

    #[test]
    fn word_flags() {
        let w = Word::new(vec![0, 1, 0, 1]);
        assert!(!w.is_primitive());
        assert!(Word::new(vec![0, 1, 1]).is_primitive());
        assert!(!Word::new(vec![0, 2]).is_reduced(2));
        assert!(Word::new(vec![0, 1, 2]).is_reduced(2));
        assert!(!Word::new(vec![0, 1, 2]).is_cyclically_reduced(2));
        assert_eq!(Word::parse("1-2-4").unwrap(), Word::new(vec![0, 1, 3]));
        assert_eq!(Word::new(vec![0, 1, 3]).to_string(), "1-2-4");
    }

    #[test]
    fn single_letter_and_square() {
        let g = sym();
        for i in 0..4 {
            let e = word_element(&g, &Word::new(vec![i]));
            let direct = crate::moebius::mobius_classify(&g.letter(i)).translation_length.unwrap();
            assert!((e.length.unwrap() - direct).abs() < 1e-12);
        }
        let w = Word::new(vec![0, 1, 2, 1]);
        let l1 = word_element(&g, &w).length.unwrap();
        let l2 = word_element(&g, &w.repeated(2)).length.unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-9);
    }

    #[test]
    fn rotations_are_conjugate() {
        let g = symmetric_group(3, 0.2).unwrap();
        let w = Word::new(vec![0, 1, 5, 1, 2, 2]);
        let e = word_element(&g, &w);
        for k in 1..w.len() {
            // explicit conjugation by the first k letters
            let u = word_element(&g, &Word::new(w.letters[..k].to_vec())).map;
            let conj = u.inverse() * e.map * u;
            let r = word_element(&g, &w.rotated(k));
            assert!((r.length.unwrap() - e.length.unwrap()).abs() < 1e-10);
            assert!((conj.trace() - r.map.trace()).abs() < 1e-8 * r.map.trace().abs());
        }
    }

    #[test]
    fn rescaled_lengths_match_direct() {
        let g = symmetric_group(2, 0.02).unwrap();
        let w = Word::new(vec![0, 1, 0, 3]).repeated(60);
        let e = word_element(&g, &w);
        assert!(e.log_scale > 0.0);
        let l1 = word_element(&g, &Word::new(vec![0, 1, 0, 3])).length.unwrap();
        assert!((e.length.unwrap() - 60.0 * l1).abs() < 1e-9 * 60.0 * l1);
    }

    #[test]
    fn transition_gaps_bound_lengths() {
        for g in [sym(), symmetric_group(3, 0.15).unwrap(), cylinder()] {
            let p = g.rank();
            for n in 1..=6 {
                for w in enumerate_words(&g, n, WordMode::CyclicallyReduced) {
                    let l = word_element(&g, &w).length.unwrap();
                    let bound: f64 = (0..n)
                        .map(|k| g.transition_gap(w.letters[k], w.letters[(k + 1) % n]))
                        .sum();
                    assert!(l >= bound - 1e-9, "{w} (p={p}): {l} < {bound}");
                    assert!(l >= n as f64 * g.min_gap() - 1e-9);
                }
            }
        }
    }

    #[test]
    fn cylinder_spectrum() {
        let g = cylinder();
        let s = length_spectrum(&g, 3.5 * 2.0, DEFAULT_BIN_TOL);
        let got: Vec<(f64, usize)> = s.entries.iter().map(|e| (e.ell, e.multiplicity)).collect();
        assert_eq!(got.len(), 3);
        for (k, (l, m)) in got.iter().enumerate() {
            assert!((l - 2.0 * (k + 1) as f64).abs() < 1e-12);
            assert_eq!(*m, 2);
        }
        assert_eq!(s.prime_count(7.0), 2);
    }

    #[test]
    fn symmetric_shortest_entries_tie() {
        let g = sym();
        let s = length_spectrum(&g, 2.0 * g.min_gap() + 6.0, DEFAULT_BIN_TOL);
        let first = &s.entries[0];
        // both generators and their inverses share the shortest length
        assert_eq!(first.multiplicity, 4);
        assert_eq!(first.k, 1);
    }

    #[test]
    fn spectrum_complete_against_brute_force() {
        for g in [sym(), symmetric_group(3, 0.2).unwrap()] {
            let p = g.rank();
            let t = 3.2 * g.min_gap();
            let s = length_spectrum(&g, t, 0.0);
            let nmax = required_word_len(&g, t) + 1;
            let mut classes = std::collections::BTreeMap::new();
            for n in 1..=nmax {
                for w in enumerate_words(&g, n, WordMode::CyclicallyReduced) {
                    if w.is_primitive() {
                        let l = word_element(&g, &w).length.unwrap();
                        if l <= t {
                            classes.insert(w.min_rotation(), l);
                        }
                    }
                }
            }
            let found = primitive_classes(&g, t, nmax);
            assert_eq!(found.len(), classes.len(), "p={p}");
            for c in &found {
                assert!((classes[&c.word] - c.length).abs() < 1e-10);
            }
            let total: usize = s.entries.iter().map(|e| e.multiplicity).sum();
            let with_powers: usize = classes
                .values()
                .map(|l| (t / l).floor() as usize)
                .sum();
            assert_eq!(total, with_powers);
        }
    }

    #[test]
    fn class_count_times_length_counts_primitive_words() {
        let g = sym();
        for n in 1..=7 {
            let classes = primitive_classes(&g, f64::INFINITY, n)
                .into_iter()
                .filter(|c| c.word.len() == n)
                .count();
            let prim = enumerate_words(&g, n, WordMode::CyclicallyReduced)
                .filter(Word::is_primitive)
                .count();
            assert_eq!(classes * n, prim);
        }
    }

    #[test]
    fn inverse_classes_raise_multiplicity() {
        let g = symmetric_group(3, 0.22).unwrap();
        let p = g.rank();
        let s = length_spectrum(&g, 3.0 * g.min_gap(), 1e-9);
        for c in primitive_classes(&g, 3.0 * g.min_gap(), 8) {
            let inv = c.word.inverse(p).min_rotation();
            // explicit conjugacy search: is the inverse a rotation of the word?
            let self_inverse = (0..c.word.len()).any(|k| c.word.rotated(k) == inv);
            let e = s
                .entries
                .iter()
                .find(|e| (e.ell - c.length).abs() < 1e-9)
                .unwrap();
            if !self_inverse {
                assert!(e.multiplicity >= 2);
            }
        }
    }

    #[test]
    fn cycle_table_counts_words() {
        let g = sym();
        let t = CycleTable::build(&g, 8);
        for n in 1..=8 {
            let brute = enumerate_words(&g, n, WordMode::CyclicallyReduced).count();
            assert_eq!(t.word_count(n), brute as f64);
        }
        // the length-weighted sum agrees with direct evaluation
        let direct: f64 = enumerate_words(&g, 5, WordMode::CyclicallyReduced)
            .map(|w| (-0.4 * word_element(&g, &w).length.unwrap()).exp())
            .sum();
        let tab: f64 = t.level(5).iter().map(|(l, c)| c * (-0.4 * l).exp()).sum();
        assert!((direct - tab).abs() < 1e-12 * direct);
    }

    #[test]
    fn csv_export() {
        let s = length_spectrum(&cylinder(), 5.0, DEFAULT_BIN_TOL);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "ell,prime_length,k,multiplicity,word");
        assert_eq!(lines.count(), 2);
    }
}
