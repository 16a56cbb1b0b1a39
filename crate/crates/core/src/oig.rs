//! Hypercube vertices, the one-inclusion graph of a projected class, random-walk
//! potentials and the orientation they induce.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::data::{BinaryLabel, Rational};
use crate::error::{contract, Error, Result};
use crate::oracle::ConsistencyOracle;

/// A point of `{0,1}^m`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    words: Vec<u64>,
    len: usize,
}

impl Vertex {
    pub fn zeros(len: usize) -> Self {
        Vertex { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Bit `i` of `index` becomes coordinate `i`.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "from_index supports at most 64 coordinates");
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = if len == 64 { index } else { index & ((1u64 << len) - 1) };
        }
        v
    }

    pub fn from_labels(labels: &[BinaryLabel]) -> Result<Self> {
        let bits = labels
            .iter()
            .map(|y| y.bit().ok_or_else(|| contract("vertices cannot hold the undefined label")))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "coordinate {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "coordinate {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "coordinate {i} out of range {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut v = self.clone();
        v.flip(i);
        v
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn to_labels(&self) -> Vec<BinaryLabel> {
        self.bits().map(BinaryLabel::from_bit).collect()
    }

    /// Low 64 coordinates as an integer.
    pub fn index(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({self})")
    }
}

/// Membership in a vertex set `W`, possibly answered by an oracle.
pub trait Membership {
    fn dimension(&self) -> usize;
    fn contains(&mut self, v: &Vertex) -> Result<bool>;
}

/// An explicit vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    dimension: usize,
    vertices: HashSet<Vertex>,
}

impl VertexSet {
    pub fn new(dimension: usize, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let vertices: HashSet<Vertex> = vertices.into_iter().collect();
        if let Some(v) = vertices.iter().find(|v| v.len() != dimension) {
            return Err(contract(format!("vertex {v} is not in dimension {dimension}")));
        }
        Ok(VertexSet { dimension, vertices })
    }

    /// Vertices given as the low `dimension` bits of integers.
    pub fn from_indices(dimension: usize, indices: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::new(dimension, indices.into_iter().map(|i| Vertex::from_index(dimension, i)))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn has(&self, v: &Vertex) -> bool {
        self.vertices.contains(v)
    }

    /// Vertices in increasing order.
    pub fn sorted(&self) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self.vertices.iter().cloned().collect();
        out.sort();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter()
    }

    /// Undirected edges `(v, i)` with `v` below `v ^ e_i`, both in the set.
    pub fn edges(&self) -> Vec<(Vertex, usize)> {
        let mut out = Vec::new();
        for v in self.sorted() {
            for i in 0..self.dimension {
                if !v.get(i) && self.has(&v.flipped(i)) {
                    out.push((v.clone(), i));
                }
            }
        }
        out
    }
}

impl Membership for VertexSet {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn contains(&mut self, v: &Vertex) -> Result<bool> {
        Ok(self.has(v))
    }
}

/// `W = H|_X` answered by a consistency oracle: `v` is in `W` iff the sample
/// `(x_i, v_i)` is realizable.
pub struct OracleMembership<'a, X, O: ?Sized> {
    points: &'a [X],
    oracle: &'a O,
    memo: Option<HashMap<Vertex, bool>>,
    queries: u64,
}

impl<'a, X: Clone, O: ConsistencyOracle<X, BinaryLabel> + ?Sized> OracleMembership<'a, X, O> {
    /// Repeated vertices are answered from a cache.
    pub fn memoized(points: &'a [X], oracle: &'a O) -> Self {
        OracleMembership { points, oracle, memo: Some(HashMap::new()), queries: 0 }
    }

    /// Every membership test reaches the oracle.
    pub fn raw(points: &'a [X], oracle: &'a O) -> Self {
        OracleMembership { points, oracle, memo: None, queries: 0 }
    }

    /// Oracle calls issued so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    fn ask(&mut self, v: &Vertex) -> Result<bool> {
        let sample: Vec<_> = self
            .points
            .iter()
            .cloned()
            .zip(v.bits().map(BinaryLabel::from_bit))
            .collect();
        self.queries += 1;
        self.oracle.is_realizable(&sample)
    }
}

impl<X: Clone, O: ConsistencyOracle<X, BinaryLabel> + ?Sized> Membership for OracleMembership<'_, X, O> {
    fn dimension(&self) -> usize {
        self.points.len()
    }

    fn contains(&mut self, v: &Vertex) -> Result<bool> {
        if v.len() != self.points.len() {
            return Err(contract("vertex dimension differs from the number of points"));
        }
        if let Some(&hit) = self.memo.as_ref().and_then(|m| m.get(v)) {
            return Ok(hit);
        }
        let answer = self.ask(v)?;
        if let Some(memo) = self.memo.as_mut() {
            memo.insert(v.clone(), answer);
        }
        Ok(answer)
    }
}

/// Discount, horizon and rollout count for the flip walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub gamma: f64,
    pub horizon: usize,
    pub trials: usize,
}

impl WalkParams {
    /// Uses [`default_horizon`].
    pub fn new(gamma: f64, trials: usize) -> Result<Self> {
        Self::with_horizon(gamma, default_horizon(gamma)?, trials)
    }

    pub fn with_horizon(gamma: f64, horizon: usize, trials: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(contract(format!("discount {gamma} outside (0, 1)")));
        }
        if trials == 0 {
            return Err(contract("need at least one rollout"));
        }
        Ok(WalkParams { gamma, horizon, trials })
    }
}

/// `ceil(log(32e / (1 - gamma)) / log(1 / gamma))`: truncation at this depth
/// moves the estimate by at most `(1 - gamma) / (32e)`.
pub fn default_horizon(gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(contract(format!("discount {gamma} outside (0, 1)")));
    }
    let l = (32.0 * std::f64::consts::E / (1.0 - gamma)).ln() / (1.0 / gamma).ln();
    Ok(l.ceil().max(1.0) as usize)
}

/// Converts a flip-walk discount to the lazy-walk discount with the same potential.
pub fn lazy_discount(flip_gamma: f64) -> f64 {
    2.0 * flip_gamma / (1.0 + flip_gamma)
}

/// Inverse of [`lazy_discount`].
pub fn flip_discount(lazy_gamma: f64) -> f64 {
    lazy_gamma / (2.0 - lazy_gamma)
}

/// Moves to a uniformly chosen neighbor; returns the flipped coordinate.
pub fn flip_step<R: Rng + ?Sized>(v: &mut Vertex, rng: &mut R) -> usize {
    let i = rng.gen_range(0..v.len());
    v.flip(i);
    i
}

/// First time the walk from `start` is outside `W`, capped at `horizon`.
/// Tests membership at times `0..=min(exit, horizon)`.
pub fn hitting_time<M: Membership + ?Sized, R: Rng + ?Sized>(
    start: &Vertex,
    w: &mut M,
    horizon: usize,
    rng: &mut R,
) -> Result<usize> {
    if start.is_empty() {
        return Err(contract("walk on the zero-dimensional cube"));
    }
    let mut v = start.clone();
    for t in 0..=horizon {
        if !w.contains(&v)? {
            return Ok(t);
        }
        if t < horizon {
            flip_step(&mut v, rng);
        }
    }
    Ok(horizon)
}

/// Monte-Carlo estimate of `E[gamma^T]` for the truncated flip walk.
pub fn estimate_potential<M: Membership + ?Sized, R: Rng + ?Sized>(
    start: &Vertex,
    w: &mut M,
    params: &WalkParams,
    rng: &mut R,
) -> Result<f64> {
    let powers: Vec<f64> = std::iter::successors(Some(1.0f64), |p| Some(p * params.gamma))
        .take(params.horizon + 1)
        .collect();
    let mut total = 0.0;
    for _ in 0..params.trials {
        total += powers[hitting_time(start, w, params.horizon, rng)?];
    }
    Ok(total / params.trials as f64)
}

/// Vertices of `W` reachable from `start` along edges of `W`.
pub fn component<M: Membership + ?Sized>(start: &Vertex, w: &mut M) -> Result<Vec<Vertex>> {
    if !w.contains(start)? {
        return Ok(Vec::new());
    }
    let mut seen: HashSet<Vertex> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    let mut order = Vec::new();
    while let Some(v) = queue.pop_front() {
        for i in 0..v.len() {
            let u = v.flipped(i);
            if !seen.contains(&u) && w.contains(&u)? {
                seen.insert(u.clone());
                queue.push_back(u);
            }
        }
        order.push(v);
    }
    order.sort();
    Ok(order)
}

/// Potential `M(v) = E[gamma^T]` of the lazy walk, with `M = 1` off `W`.
#[derive(Debug, Clone)]
pub struct GeneratingFunction {
    gamma: f64,
    dimension: usize,
    values: HashMap<Vertex, f64>,
}

const DIRECT_SOLVE_LIMIT: usize = 2048;

impl GeneratingFunction {
    /// Solves `M(v) = gamma/((2-gamma) m) * sum_i M(v ^ e_i)` on `W`.
    pub fn solve(w: &VertexSet, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(contract(format!("discount {gamma} outside (0, 1)")));
        }
        let m = w.dimension();
        if m == 0 {
            return Err(contract("generating function on the zero-dimensional cube"));
        }
        let order = w.sorted();
        let index: HashMap<&Vertex, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let c = gamma / ((2.0 - gamma) * m as f64);
        let n = order.len();
        let mut rhs = DVector::zeros(n);
        let mut neighbours: Vec<Vec<usize>> = Vec::with_capacity(n);
        for (r, v) in order.iter().enumerate() {
            let mut inside = Vec::new();
            for i in 0..m {
                match index.get(&v.flipped(i)) {
                    Some(&col) => inside.push(col),
                    None => rhs[r] += c,
                }
            }
            neighbours.push(inside);
        }
        let solution = if n <= DIRECT_SOLVE_LIMIT {
            let mut a = DMatrix::identity(n, n);
            for (r, cols) in neighbours.iter().enumerate() {
                for &col in cols {
                    a[(r, col)] -= c;
                }
            }
            a.lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numerical("singular potential system".into()))?
        } else {
            gauss_seidel(&neighbours, &rhs, c)
        };
        let values = order.into_iter().zip(solution.iter().copied()).collect();
        Ok(GeneratingFunction { gamma, dimension: m, values })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn value(&self, v: &Vertex) -> f64 {
        self.values.get(v).copied().unwrap_or(1.0)
    }

    pub fn values(&self) -> &HashMap<Vertex, f64> {
        &self.values
    }

    /// Smallest value on `W` (1 when `W` is empty).
    pub fn min(&self) -> f64 {
        self.values.values().copied().fold(1.0, f64::min)
    }

    /// Largest violation of the defining recursion on `W`.
    pub fn residual(&self) -> f64 {
        let c = self.gamma / ((2.0 - self.gamma) * self.dimension as f64);
        self.values
            .iter()
            .map(|(v, &mv)| {
                let sum: f64 = (0..self.dimension).map(|i| self.value(&v.flipped(i))).sum();
                (mv - c * sum).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn gauss_seidel(neighbours: &[Vec<usize>], rhs: &DVector<f64>, c: f64) -> DVector<f64> {
    let mut x = DVector::from_element(rhs.len(), 1.0);
    loop {
        let mut delta: f64 = 0.0;
        for (r, cols) in neighbours.iter().enumerate() {
            let next = rhs[r] + c * cols.iter().map(|&j| x[j]).sum::<f64>();
            delta = delta.max((next - x[r]).abs());
            x[r] = next;
        }
        if delta < 1e-15 {
            return x;
        }
    }
}

const EXACT_SOLVE_LIMIT: usize = 96;

/// The same potential in exact arithmetic, for small `W`.
pub fn solve_exact(w: &VertexSet, gamma: Rational) -> Result<BTreeMap<Vertex, BigRational>> {
    if !(gamma > Rational::zero() && gamma < Rational::one()) {
        return Err(contract(format!("discount {gamma} outside (0, 1)")));
    }
    let m = w.dimension();
    if m == 0 {
        return Err(contract("generating function on the zero-dimensional cube"));
    }
    if w.len() > EXACT_SOLVE_LIMIT {
        return Err(contract(format!(
            "exact solve limited to {EXACT_SOLVE_LIMIT} vertices, got {}",
            w.len()
        )));
    }
    // Integer form of the recursion with gamma = p/q:
    // (2q - p) m M(v) - p * sum_{u in W} M(u) = p * #{i : v ^ e_i not in W}.
    let (p, q) = (BigInt::from(*gamma.numer()), BigInt::from(*gamma.denom()));
    let diagonal = (BigInt::from(2) * &q - &p) * BigInt::from(m);
    let order = w.sorted();
    let index: HashMap<&Vertex, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let n = order.len();
    let mut a = vec![vec![BigInt::zero(); n + 1]; n];
    for (r, v) in order.iter().enumerate() {
        a[r][r] = diagonal.clone();
        for i in 0..m {
            match index.get(&v.flipped(i)) {
                Some(&col) => a[r][col] -= &p,
                None => a[r][n] += &p,
            }
        }
    }
    // Fraction-free (Bareiss) elimination; diagonal dominance keeps every pivot nonzero.
    let mut previous = BigInt::one();
    for k in 0..n {
        for r in k + 1..n {
            for col in k + 1..=n {
                let value = (&a[r][col] * &a[k][k] - &a[r][k] * &a[k][col]) / &previous;
                a[r][col] = value;
            }
            a[r][k] = BigInt::zero();
        }
        previous = a[k][k].clone();
    }
    let mut x = vec![BigRational::zero(); n];
    for k in (0..n).rev() {
        let mut acc = BigRational::from_integer(a[k][n].clone());
        for col in k + 1..n {
            if !a[k][col].is_zero() {
                acc -= &x[col] * BigRational::from_integer(a[k][col].clone());
            }
        }
        x[k] = acc / BigRational::from_integer(a[k][k].clone());
    }
    Ok(order.into_iter().zip(x).collect())
}

/// Probability the orientation assigns to `v` on the edge `{v, v'}`:
/// `(1 + lambda (F(v') - F(v))) / 2`.
pub fn orientation_mass(f_v: f64, f_other: f64, lambda: f64) -> f64 {
    (1.0 + lambda * (f_other - f_v)) / 2.0
}

/// Mass the edge `{v, v ^ e_i}` sends away from `v`, or `None` if the edge is not in `W`.
pub fn orientation_probability<M: Membership + ?Sized>(
    w: &mut M,
    f: &dyn Fn(&Vertex) -> f64,
    lambda: f64,
    v: &Vertex,
    coordinate: usize,
) -> Result<Option<f64>> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(contract(format!("lambda {lambda} outside (0, 1]")));
    }
    let u = v.flipped(coordinate);
    if !w.contains(v)? || !w.contains(&u)? {
        return Ok(None);
    }
    Ok(Some(1.0 - orientation_mass(f(v), f(&u), lambda)))
}

/// Total mass oriented away from `v` over edges of `W`.
pub fn out_degree<M: Membership + ?Sized>(
    w: &mut M,
    f: &dyn Fn(&Vertex) -> f64,
    lambda: f64,
    v: &Vertex,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..v.len() {
        if let Some(p) = orientation_probability(w, f, lambda, v, i)? {
            total += p;
        }
    }
    Ok(total)
}
