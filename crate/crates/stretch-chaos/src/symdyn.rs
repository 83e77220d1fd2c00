//! Symbol sequences, transition and adjacency matrices, subshifts of finite
//! type, Perron eigenvalues and itinerary coding.

use crate::geometry::{Point, RegionPredicate};
use crate::stretching::PlanarMap;
use nalgebra::DMatrix;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymdynError {
    #[error("matrix must be square and nonempty")]
    NotSquare,
    #[error("transition matrix entries must be 0 or 1")]
    NotBinary,
    #[error("matrix is identically zero")]
    Zero,
    #[error("symbol {symbol} outside alphabet of size {m}")]
    Alphabet { symbol: u8, m: usize },
    #[error("empty symbol sequence")]
    EmptySequence,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Transition,
    Adjacency,
}

/// Square nonnegative integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolMatrix {
    n: usize,
    entries: Vec<u64>,
    kind: MatrixKind,
}

impl SymbolMatrix {
    pub fn new(rows: Vec<Vec<u64>>, kind: MatrixKind) -> Result<Self, SymdynError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(SymdynError::NotSquare);
        }
        let entries: Vec<u64> = rows.into_iter().flatten().collect();
        if kind == MatrixKind::Transition && entries.iter().any(|&e| e > 1) {
            return Err(SymdynError::NotBinary);
        }
        Ok(SymbolMatrix { n, entries, kind })
    }

    pub fn transition(rows: Vec<Vec<u64>>) -> Result<Self, SymdynError> {
        Self::new(rows, MatrixKind::Transition)
    }

    pub fn adjacency(rows: Vec<Vec<u64>>) -> Result<Self, SymdynError> {
        Self::new(rows, MatrixKind::Adjacency)
    }

    /// The full shift on `m` symbols.
    pub fn full(m: usize) -> Self {
        SymbolMatrix { n: m, entries: vec![1; m * m], kind: MatrixKind::Transition }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn get(&self, i: usize, k: usize) -> u64 {
        self.entries[i * self.n + k]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// Whitespace-separated integer grid, one row per line. The kind is
    /// transition when all entries are 0/1, adjacency otherwise.
    pub fn parse(text: &str) -> Result<Self, SymdynError> {
        let rows: Vec<Vec<u64>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<u64>().map_err(|_| SymdynError::Parse(format!("bad entry {t:?}"))))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let binary = rows.iter().flatten().all(|&e| e <= 1);
        let kind = if binary { MatrixKind::Transition } else { MatrixKind::Adjacency };
        Self::new(rows, kind).map_err(|e| SymdynError::Parse(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    pub fn is_permutation(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).map(|k| self.get(i, k)).sum::<u64>() == 1 && (0..self.n).map(|k| self.get(k, i)).sum::<u64>() == 1
        })
    }
}

/// A finite word over `{0,…,m-1}`; when `periodic` it repeats forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    pub symbols: Vec<u8>,
    pub periodic: bool,
}

impl SymbolSequence {
    pub fn finite(symbols: Vec<u8>) -> Self {
        SymbolSequence { symbols, periodic: false }
    }

    pub fn periodic(symbols: Vec<u8>) -> Self {
        SymbolSequence { symbols, periodic: true }
    }

    /// Parses a plain digit string such as `"0110"`.
    pub fn parse(word: &str, periodic: bool) -> Result<Self, SymdynError> {
        let symbols = word
            .trim()
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| SymdynError::Parse(format!("bad symbol {c:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if symbols.is_empty() {
            return Err(SymdynError::EmptySequence);
        }
        Ok(SymbolSequence { symbols, periodic })
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        if self.periodic {
            Some(self.symbols[i % self.symbols.len()])
        } else {
            self.symbols.get(i).copied()
        }
    }

    pub fn as_string(&self) -> String {
        self.symbols.iter().map(|s| char::from(b'0' + *s)).collect()
    }

    fn check(&self, m: usize) -> Result<(), SymdynError> {
        if self.symbols.is_empty() {
            return Err(SymdynError::EmptySequence);
        }
        match self.symbols.iter().find(|&&s| s as usize >= m) {
            Some(&symbol) => Err(SymdynError::Alphabet { symbol, m }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceMetric {
    /// `Σ |s'_i - s''_i| / m^{i+1}`.
    Absolute,
    /// `Σ [s'_i ≠ s''_i] / m^{i+1}`.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftDistance {
    pub value: f64,
    /// Upper bound for the neglected part of the series.
    pub tail_bound: f64,
    pub terms: usize,
}

/// Truncated one-sided sequence distance with a bound on the omitted tail.
/// Terms unknown for a finite, non-periodic word are charged to the tail.
pub fn shift_distance(
    s1: &SymbolSequence,
    s2: &SymbolSequence,
    m: usize,
    horizon: usize,
    metric: SequenceMetric,
) -> Result<ShiftDistance, SymdynError> {
    s1.check(m)?;
    s2.check(m)?;
    let horizon = horizon.max(1);
    let mf = m as f64;
    let mut value = 0.0;
    let mut weight = 1.0 / mf;
    let mut terms = 0;
    for i in 0..horizon {
        let (Some(a), Some(b)) = (s1.get(i), s2.get(i)) else { break };
        let d = match metric {
            SequenceMetric::Absolute => (a as f64 - b as f64).abs(),
            SequenceMetric::Discrete => (a != b) as u8 as f64,
        };
        value += d * weight;
        weight /= mf;
        terms = i + 1;
    }
    // Σ_{i ≥ terms} (m-1)/m^{i+1} = m^{-terms}; the discrete metric needs only 1/(m-1) of it.
    let max_term = match metric {
        SequenceMetric::Absolute => 1.0,
        SequenceMetric::Discrete => 1.0 / (mf - 1.0).max(1.0),
    };
    let tail_bound = max_term * mf.powi(-(terms as i32));
    Ok(ShiftDistance { value, tail_bound, terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerronMethod {
    PowerIteration,
    PermutationExact,
    ShiftedEigenvalues,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerronResult {
    pub lambda: f64,
    pub entropy: f64,
    pub iterations: usize,
    pub method: PerronMethod,
}

/// Largest real eigenvalue of a nonnegative matrix and its logarithm.
pub fn perron_eigenvalue(m: &SymbolMatrix) -> Result<PerronResult, SymdynError> {
    if m.entries.iter().all(|&e| e == 0) {
        return Err(SymdynError::Zero);
    }
    if m.is_permutation() {
        return Ok(PerronResult { lambda: 1.0, entropy: 0.0, iterations: 0, method: PerronMethod::PermutationExact });
    }
    let n = m.n;
    let mut done = vec![false; n];
    let (mut lambda, mut iterations, mut method) = (0.0_f64, 0, PerronMethod::PowerIteration);
    for start in 0..n {
        if done[start] {
            continue;
        }
        let (fwd, bwd) = (reach(m, start, false), reach(m, start, true));
        let class: Vec<usize> = (0..n).filter(|&i| fwd[i] && bwd[i]).collect();
        for &i in &class {
            done[i] = true;
        }
        if class.iter().all(|&i| class.iter().all(|&k| m.get(i, k) == 0)) {
            continue;
        }
        let (l, it, meth) = block_radius(m, &class);
        if l > lambda {
            (lambda, method) = (l, meth);
        }
        iterations += it;
    }
    let entropy = if lambda > 0.0 { lambda.ln() } else { f64::NEG_INFINITY };
    Ok(PerronResult { lambda, entropy, iterations, method })
}

/// Spectral radius of an irreducible block, by power iteration on `B + I`
/// until the Collatz–Wielandt bounds meet.
fn block_radius(m: &SymbolMatrix, class: &[usize]) -> (f64, usize, PerronMethod) {
    const MAX_ITER: usize = 100_000;
    let k = class.len();
    let b: Vec<f64> = class.iter().flat_map(|&i| class.iter().map(move |&j| m.get(i, j) as f64)).collect();
    let mut v = vec![1.0; k];
    let mut w = vec![0.0; k];
    for it in 1..=MAX_ITER {
        for i in 0..k {
            w[i] = v[i] + (0..k).map(|j| b[i * k + j] * v[j]).sum::<f64>();
        }
        let (lo, hi) = (0..k).map(|i| w[i] / v[i]).fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return (0.5 * (lo + hi) - 1.0, it, PerronMethod::PowerIteration);
        }
        let top = w.iter().cloned().fold(0.0_f64, f64::max);
        for i in 0..k {
            v[i] = w[i] / top;
        }
    }
    let radius = DMatrix::from_row_slice(k, k, &b).complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    (radius, MAX_ITER, PerronMethod::ShiftedEigenvalues)
}

fn reach(m: &SymbolMatrix, start: usize, reverse: bool) -> Vec<bool> {
    let n = m.n;
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for k in 0..n {
            let e = if reverse { m.get(k, i) } else { m.get(i, k) };
            if e > 0 && !seen[k] {
                seen[k] = true;
                stack.push(k);
            }
        }
    }
    seen
}

/// Strong connectivity of the graph with an edge `i → k` whenever `M(i,k) > 0`.
pub fn is_irreducible(m: &SymbolMatrix) -> bool {
    reach(m, 0, false).iter().all(|&s| s) && reach(m, 0, true).iter().all(|&s| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub initial: usize,
    pub terminal: usize,
    pub copy: u64,
}

/// Edge shift of an adjacency matrix: one symbol per edge (row-major, with
/// multiplicity) and `T'(e, f) = 1` iff `e` ends where `f` starts.
pub fn edge_subshift(a: &SymbolMatrix) -> Result<(SymbolMatrix, Vec<EdgeLabel>), SymdynError> {
    let mut edges = Vec::new();
    for i in 0..a.n {
        for k in 0..a.n {
            for copy in 0..a.get(i, k) {
                edges.push(EdgeLabel { initial: i, terminal: k, copy });
            }
        }
    }
    if edges.is_empty() {
        return Err(SymdynError::Zero);
    }
    let rows = edges
        .iter()
        .map(|e| edges.iter().map(|f| (e.terminal == f.initial) as u64).collect())
        .collect();
    Ok((SymbolMatrix::transition(rows)?, edges))
}

/// Number of admissible words of length `n`: the sum of the entries of `T^{n-1}`.
pub fn count_admissible_words(t: &SymbolMatrix, n: usize) -> BigUint {
    let k = t.n;
    if n == 0 {
        return BigUint::from(1u8);
    }
    let mut v: Vec<BigUint> = vec![BigUint::from(1u8); k];
    for _ in 1..n {
        v = (0..k)
            .map(|i| (0..k).filter(|&j| t.get(i, j) > 0).map(|j| &v[j] * t.get(i, j)).sum())
            .collect();
    }
    v.into_iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItineraryFailure {
    OutsideRegions,
    Ambiguous,
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryResult {
    pub word: SymbolSequence,
    /// Step at which coding stopped, if it did.
    pub failure: Option<(usize, ItineraryFailure)>,
}

/// Distance band inside which a point counts as near a region.
pub const AMBIGUITY_BAND: f64 = 1e-9;

fn near(region: &RegionPredicate, p: Point, band: f64) -> bool {
    region.contains(p)
        || [(band, 0.0), (-band, 0.0), (0.0, band), (0.0, -band)]
            .iter()
            .any(|&(dx, dy)| region.contains(Point::new(p.x + dx, p.y + dy)))
}

/// Codes the first `n` iterates of `z0` by the regions they visit.
pub fn itinerary(map: &dyn PlanarMap, regions: &[RegionPredicate], z0: Point, n: usize) -> ItineraryResult {
    let mut symbols = Vec::with_capacity(n);
    let mut z = z0;
    for i in 0..n {
        let inside: Vec<&RegionPredicate> = regions.iter().filter(|r| r.contains(z)).collect();
        let fail = match inside.as_slice() {
            [] => Some(ItineraryFailure::OutsideRegions),
            [r] => {
                let others_near = regions.iter().any(|o| o.label != r.label && near(o, z, AMBIGUITY_BAND));
                if others_near {
                    Some(ItineraryFailure::Ambiguous)
                } else {
                    symbols.push(r.label as u8);
                    None
                }
            }
            _ => Some(ItineraryFailure::Ambiguous),
        };
        if let Some(f) = fail {
            return ItineraryResult { word: SymbolSequence::finite(symbols), failure: Some((i, f)) };
        }
        if i + 1 < n {
            match map.apply(z) {
                Ok(next) => z = next,
                Err(e) => {
                    return ItineraryResult {
                        word: SymbolSequence::finite(symbols),
                        failure: Some((i + 1, ItineraryFailure::Domain(e.0))),
                    }
                }
            }
        }
    }
    ItineraryResult { word: SymbolSequence::finite(symbols), failure: None }
}

/// Primitive cyclic words (Lyndon words) of length `1..=max_len` over `m`
/// symbols, one representative per necklace class.
pub fn primitive_necklaces(m: usize, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if m == 0 || max_len == 0 {
        return out;
    }
    // Duval's generation of Lyndon words in lexicographic order.
    let mut w: Vec<i64> = vec![-1];
    while !w.is_empty() {
        let last = w.len() - 1;
        w[last] += 1;
        out.push(w.iter().map(|&s| s as u8).collect());
        let len = w.len();
        while w.len() < max_len {
            let s = w[w.len() - len];
            w.push(s);
        }
        while let Some(&l) = w.last() {
            if l == m as i64 - 1 {
                w.pop();
            } else {
                break;
            }
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Whether the cyclic word uses only transitions allowed by `t`.
pub fn is_cyclically_admissible(t: &SymbolMatrix, word: &[u8]) -> bool {
    let k = word.len();
    (0..k).all(|i| t.get(word[i] as usize, word[(i + 1) % k] as usize) > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_entropy() {
        let t = SymbolMatrix::transition(vec![vec![0, 1], vec![1, 1]]).unwrap();
        let r = perron_eigenvalue(&t).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r.lambda - phi).abs() < 1e-12);
        assert!((r.entropy - 0.481211825).abs() < 1e-9);
        assert_eq!(r.method, PerronMethod::PowerIteration);
    }

    #[test]
    fn full_shift_and_permutation() {
        let r = perron_eigenvalue(&SymbolMatrix::full(2)).unwrap();
        assert!((r.entropy - 2f64.ln()).abs() < 1e-12);
        let p = SymbolMatrix::transition(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let r = perron_eigenvalue(&p).unwrap();
        assert_eq!((r.lambda, r.entropy), (1.0, 0.0));
    }

    #[test]
    fn zero_matrix_rejected() {
        let z = SymbolMatrix::transition(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(perron_eigenvalue(&z), Err(SymdynError::Zero));
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&SymbolMatrix::full(2)));
        assert!(!is_irreducible(&SymbolMatrix::transition(vec![vec![1, 0], vec![0, 1]]).unwrap()));
        assert!(is_irreducible(&SymbolMatrix::transition(vec![vec![0, 1], vec![1, 1]]).unwrap()));
    }

    #[test]
    fn word_counts() {
        assert_eq!(count_admissible_words(&SymbolMatrix::full(2), 5), BigUint::from(32u8));
        let gm = SymbolMatrix::transition(vec![vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(count_admissible_words(&gm, 5), BigUint::from(13u8));
        assert_eq!(count_admissible_words(&gm, 1), BigUint::from(2u8));
        let p = SymbolMatrix::transition(vec![vec![0, 1], vec![1, 0]]).unwrap();
        for n in 1..10 {
            assert_eq!(count_admissible_words(&p, n), BigUint::from(2u8));
        }
        let big = count_admissible_words(&SymbolMatrix::full(2), 200);
        assert_eq!(big, BigUint::from(1u8) << 200);
    }

    #[test]
    fn edge_shift_examples() {
        let (t, e) = edge_subshift(&SymbolMatrix::adjacency(vec![vec![2]]).unwrap()).unwrap();
        assert_eq!(t.rows(), vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(e[1], EdgeLabel { initial: 0, terminal: 0, copy: 1 });
        let (t, _) = edge_subshift(&SymbolMatrix::adjacency(vec![vec![0, 1], vec![1, 0]]).unwrap()).unwrap();
        assert_eq!(t.rows(), vec![vec![0, 1], vec![1, 0]]);
        assert!(edge_subshift(&SymbolMatrix::adjacency(vec![vec![0]]).unwrap()).is_err());
    }

    #[test]
    fn distances() {
        let a = SymbolSequence::periodic(vec![0]);
        let d = shift_distance(&a, &a, 2, 64, SequenceMetric::Absolute).unwrap();
        assert_eq!(d.value, 0.0);
        let mut one = vec![0u8; 64];
        one[0] = 1;
        let d = shift_distance(&a, &SymbolSequence::finite(one), 2, 64, SequenceMetric::Absolute).unwrap();
        assert_eq!(d.value, 0.5);
        let d = shift_distance(
            &SymbolSequence::periodic(vec![0, 1]),
            &SymbolSequence::periodic(vec![1, 0]),
            2,
            64,
            SequenceMetric::Absolute,
        )
        .unwrap();
        assert!((d.value - 1.0).abs() < 1e-15 && d.tail_bound < 1e-18);
        assert!(shift_distance(&SymbolSequence::finite(vec![2]), &a, 2, 4, SequenceMetric::Absolute).is_err());
        let d = shift_distance(
            &SymbolSequence::periodic(vec![0]),
            &SymbolSequence::periodic(vec![2]),
            3,
            40,
            SequenceMetric::Discrete,
        )
        .unwrap();
        assert!((d.value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn necklaces_small() {
        let w = primitive_necklaces(2, 4);
        let s: Vec<String> = w.iter().map(|v| v.iter().map(|d| char::from(b'0' + d)).collect()).collect();
        assert_eq!(s, vec!["0", "1", "01", "001", "011", "0001", "0011", "0111"]);
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = SymbolMatrix::parse("0 1\n1 1\n").unwrap();
        assert_eq!(m.kind(), MatrixKind::Transition);
        assert_eq!(SymbolMatrix::parse(&m.to_text()).unwrap(), m);
        assert_eq!(SymbolMatrix::parse("2").unwrap().kind(), MatrixKind::Adjacency);
        assert!(SymbolMatrix::parse("1 x\n0 1").is_err());
        assert!(SymbolMatrix::parse("1 1\n0").is_err());
    }
}
