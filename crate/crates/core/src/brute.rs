//! Exhaustive reference computations for small instances.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::classes::Enumerable;
use crate::data::{BinaryLabel, Example, Label, MulticlassLabel, Rational, RealLabel};
use crate::error::{contract, Error, Result};
use crate::oig::{orientation_mass, GeneratingFunction, Vertex, VertexSet};
use crate::oracle::RangeQuery;

/// Largest domain the dimension searches accept.
pub const MAX_DOMAIN: usize = 64;

/// Distinct label patterns of the class on `points`, in first-seen order.
pub fn project<X, L, C>(class: &C, points: &[X]) -> Vec<Vec<L>>
where
    L: Clone + Eq + Hash,
    C: Enumerable<X, L> + ?Sized,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for h in 0..class.num_hypotheses() {
        let pattern: Vec<L> = points.iter().map(|x| class.evaluate(h, x)).collect();
        if seen.insert(pattern.clone()) {
            out.push(pattern);
        }
    }
    out
}

/// `H|_X` restricted to total patterns, as a vertex set.
pub fn projection_vertices<X, C>(class: &C, points: &[X]) -> Result<VertexSet>
where
    C: Enumerable<X, BinaryLabel> + ?Sized,
{
    let vertices = project(class, points)
        .into_iter()
        .filter(|p| p.iter().all(|y| *y != BinaryLabel::Star))
        .map(|p| Vertex::from_labels(&p))
        .collect::<Result<Vec<_>>>()?;
    VertexSet::new(points.len(), vertices)
}

pub fn brute_consistency<X, L: Label, C: Enumerable<X, L> + ?Sized>(class: &C, sample: &[Example<X, L>]) -> bool {
    (0..class.num_hypotheses())
        .any(|h| sample.iter().all(|(x, y)| !y.is_star() && class.evaluate(h, x) == *y))
}

/// Minimum mean loss and every hypothesis attaining it.
pub fn brute_erm<X, L: Label, C: Enumerable<X, L> + ?Sized>(class: &C, sample: &[Example<X, L>]) -> Result<(Rational, Vec<usize>)> {
    if sample.is_empty() {
        return Err(contract("ERM of an empty sample"));
    }
    let losses: Vec<Rational> = (0..class.num_hypotheses())
        .map(|h| sample.iter().fold(Rational::zero(), |acc, (x, y)| acc + y.loss(&class.evaluate(h, x))))
        .collect();
    let best = *losses.iter().min().ok_or_else(|| contract("empty class"))?;
    let argmins = (0..losses.len()).filter(|&h| losses[h] == best).collect();
    Ok((best / sample.len() as i64, argmins))
}

pub fn brute_range<X, C: Enumerable<X, RealLabel> + ?Sized>(class: &C, queries: &[RangeQuery<X>]) -> bool {
    (0..class.num_hypotheses()).any(|h| {
        queries.iter().all(|q| {
            let v = class.evaluate(h, &q.x).value();
            q.lower <= v && v <= q.upper
        })
    })
}

fn check_domain(n: usize) -> Result<()> {
    if n > MAX_DOMAIN {
        return Err(contract(format!("domain of {n} points exceeds the brute-force limit {MAX_DOMAIN}")));
    }
    Ok(())
}

/// Calls `f` on every `d`-subset of `0..n` until it returns true.
fn any_subset(n: usize, d: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == d {
            return f(cur);
        }
        for i in start..n {
            if n - i < d - cur.len() {
                break;
            }
            cur.push(i);
            if go(i + 1, n, d, cur, f) {
                return true;
            }
            cur.pop();
        }
        false
    }
    go(0, n, d, &mut Vec::with_capacity(d), f)
}

/// Largest `d` such that some `d`-subset passes `shattered`; subsets of a
/// shattered set are shattered, so the search stops at the first empty level.
fn largest_shattered(n: usize, shattered: &mut dyn FnMut(&[usize]) -> bool) -> usize {
    let mut d = 0;
    while d < n && any_subset(n, d + 1, shattered) {
        d += 1;
    }
    d
}

/// VC dimension over `domain`; undefined labels never count as shattering.
pub fn vc_dimension<X, C: Enumerable<X, BinaryLabel> + ?Sized>(class: &C, domain: &[X]) -> Result<usize> {
    check_domain(domain.len())?;
    let columns: Vec<Vec<BinaryLabel>> = domain
        .iter()
        .map(|x| (0..class.num_hypotheses()).map(|h| class.evaluate(h, x)).collect())
        .collect();
    let hyps = class.num_hypotheses();
    Ok(largest_shattered(domain.len(), &mut |subset| {
        let mut seen = HashSet::new();
        for h in 0..hyps {
            let mut mask = 0u64;
            let mut total = true;
            for (k, &i) in subset.iter().enumerate() {
                match columns[i][h] {
                    BinaryLabel::One => mask |= 1 << k,
                    BinaryLabel::Zero => {}
                    BinaryLabel::Star => {
                        total = false;
                        break;
                    }
                }
            }
            if total {
                seen.insert(mask);
            }
        }
        seen.len() == 1usize << subset.len()
    }))
}

/// `|H|_X| <= (e m / d)^d` with `d` the VC dimension over `points`.
pub fn sauer_shelah_holds<X, C: Enumerable<X, BinaryLabel> + ?Sized>(class: &C, points: &[X]) -> Result<bool> {
    let d = vc_dimension(class, points)?;
    let size = projection_vertices(class, points)?.len() as f64;
    let bound = if d == 0 {
        1.0
    } else {
        (std::f64::consts::E * points.len() as f64 / d as f64).powi(d as i32)
    };
    Ok(size <= bound)
}

pub fn natarajan_dimension<X, C: Enumerable<X, MulticlassLabel> + ?Sized>(class: &C, domain: &[X]) -> Result<usize> {
    check_domain(domain.len())?;
    let columns: Vec<Vec<u32>> = domain
        .iter()
        .map(|x| (0..class.num_hypotheses()).map(|h| class.evaluate(h, x).value()).collect())
        .collect();
    let hyps = class.num_hypotheses();
    Ok(largest_shattered(domain.len(), &mut |subset| {
        let patterns: HashSet<Vec<u32>> = (0..hyps)
            .map(|h| subset.iter().map(|&i| columns[i][h]).collect())
            .collect();
        let d = subset.len();
        patterns.iter().any(|a| {
            patterns.iter().any(|b| {
                a.iter().zip(b).all(|(u, v)| u != v)
                    && (0..1u64 << d).all(|bits| {
                        let mix: Vec<u32> = (0..d).map(|k| if bits >> k & 1 == 1 { b[k] } else { a[k] }).collect();
                        patterns.contains(&mix)
                    })
            })
        })
    }))
}

/// Fat-shattering dimension at scale `gamma`. Witness levels range over the
/// points where some hypothesis value crosses `s +- gamma`, plus 0 and 1;
/// every other level is dominated by one of these.
pub fn fat_shattering_dimension<X, C: Enumerable<X, RealLabel> + ?Sized>(
    class: &C,
    domain: &[X],
    gamma: Rational,
) -> Result<usize> {
    check_domain(domain.len())?;
    if gamma <= Rational::zero() {
        return Err(contract("scale must be positive"));
    }
    let hyps = class.num_hypotheses();
    let values: Vec<Vec<Rational>> = domain
        .iter()
        .map(|x| (0..hyps).map(|h| class.evaluate(h, x).value()).collect())
        .collect();
    // For each point, the (above, below) masks induced by each useful level.
    let splits: Vec<Vec<(Vec<bool>, Vec<bool>)>> = values
        .iter()
        .map(|vals| {
            let mut levels: Vec<Rational> = vals
                .iter()
                .flat_map(|&v| [v - gamma, v + gamma])
                .chain([Rational::zero(), Rational::one()])
                .filter(|s| *s >= Rational::zero() && *s <= Rational::one())
                .collect();
            levels.sort();
            levels.dedup();
            let mut seen = HashSet::new();
            levels
                .into_iter()
                .map(|s| {
                    let up: Vec<bool> = vals.iter().map(|&v| v >= s + gamma).collect();
                    let down: Vec<bool> = vals.iter().map(|&v| v <= s - gamma).collect();
                    (up, down)
                })
                .filter(|(up, down)| up.contains(&true) && down.contains(&true))
                .filter(|pair| seen.insert(pair.clone()))
                .collect()
        })
        .collect();
    Ok(largest_shattered(domain.len(), &mut |subset| {
        let d = subset.len();
        let mut choice = vec![0usize; d];
        if subset.iter().any(|&i| splits[i].is_empty()) {
            return false;
        }
        loop {
            let mut seen = HashSet::new();
            for h in 0..hyps {
                let mut mask = 0u64;
                let mut ok = true;
                for (k, &i) in subset.iter().enumerate() {
                    let (up, down) = &splits[i][choice[k]];
                    if up[h] {
                        mask |= 1 << k;
                    } else if !down[h] {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    seen.insert(mask);
                }
            }
            if seen.len() == 1usize << d {
                return true;
            }
            let mut k = 0;
            loop {
                if k == d {
                    return false;
                }
                choice[k] += 1;
                if choice[k] < splits[subset[k]].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
        }
    }))
}

/// `E[gamma^min(T, horizon)]` for the flip walk from `start`, by dynamic programming.
pub fn truncated_flip_potential(w: &VertexSet, start: &Vertex, gamma: f64, horizon: usize) -> f64 {
    if !w.has(start) {
        return 1.0;
    }
    let order = w.sorted();
    let index: HashMap<&Vertex, usize> = order.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let m = w.dimension();
    let neighbours: Vec<Vec<Option<usize>>> = order
        .iter()
        .map(|v| (0..m).map(|i| index.get(&v.flipped(i)).copied()).collect())
        .collect();
    let mut mass = vec![0.0; order.len()];
    mass[index[start]] = 1.0;
    let mut value = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        discount *= gamma;
        let mut next = vec![0.0; order.len()];
        let mut exit = 0.0;
        for (v, &p) in mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let share = p / m as f64;
            for n in &neighbours[v] {
                match n {
                    Some(u) => next[*u] += share,
                    None => exit += share,
                }
            }
        }
        value += discount * exit;
        mass = next;
    }
    value + discount * mass.iter().sum::<f64>()
}

/// Exact orientation statistics at one vertex of `G(W)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexAudit {
    pub vertex: String,
    pub out_degree: f64,
    pub bound: f64,
    pub slack: f64,
}

/// Checks `outdeg(v) <= m/2 - (1 - gamma) lambda m min F` at every vertex of `W`,
/// with `F` the lazy-walk potential at discount `gamma`.
pub fn audit_out_degrees(w: &VertexSet, gamma: f64, lambda: f64) -> Result<Vec<VertexAudit>> {
    let gf = GeneratingFunction::solve(w, gamma)?;
    let m = w.dimension() as f64;
    let bound = m / 2.0 - (1.0 - gamma) * lambda * m * gf.min();
    Ok(w.sorted()
        .into_iter()
        .map(|v| {
            let out: f64 = (0..w.dimension())
                .map(|i| v.flipped(i))
                .filter(|u| w.has(u))
                .map(|u| 1.0 - orientation_mass(gf.value(&v), gf.value(&u), lambda))
                .sum();
            VertexAudit { vertex: v.to_string(), out_degree: out, bound, slack: bound - out }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransductiveAudit {
    /// `|H|_X|` for the sample points.
    pub projection_size: usize,
    /// Away-mass on each edge at the true labeling, by coordinate.
    pub edge_mass: Vec<Option<f64>>,
    pub out_degree: f64,
    /// Leave-one-out error of the exact orientation: `out_degree / m`.
    pub loo_error: f64,
    pub bound: f64,
    pub slack: f64,
    pub min_potential: f64,
}

/// Exact leave-one-out behaviour of the potential orientation on a realizable sample.
pub fn exact_transductive_audit<X, C: Enumerable<X, BinaryLabel> + ?Sized>(
    class: &C,
    sample: &[Example<X, BinaryLabel>],
    gamma: f64,
    lambda: f64,
) -> Result<TransductiveAudit> {
    if sample.is_empty() {
        return Err(contract("audit needs a nonempty sample"));
    }
    let points: Vec<&X> = sample.iter().map(|(x, _)| x).collect();
    let w = {
        let vertices = (0..class.num_hypotheses())
            .filter_map(|h| {
                let labels: Vec<BinaryLabel> = points.iter().map(|x| class.evaluate(h, x)).collect();
                Vertex::from_labels(&labels).ok()
            })
            .collect::<Vec<_>>();
        VertexSet::new(sample.len(), vertices)?
    };
    let labels: Vec<BinaryLabel> = sample.iter().map(|(_, y)| *y).collect();
    let y = Vertex::from_labels(&labels)?;
    if !w.has(&y) {
        return Err(Error::Realizability("audited sample is not realizable".into()));
    }
    let gf = GeneratingFunction::solve(&w, gamma)?;
    let m = sample.len() as f64;
    let edge_mass: Vec<Option<f64>> = (0..sample.len())
        .map(|i| {
            let u = y.flipped(i);
            w.has(&u).then(|| 1.0 - orientation_mass(gf.value(&y), gf.value(&u), lambda))
        })
        .collect();
    let out_degree = edge_mass.iter().flatten().fold(0.0, |a, b| a + b);
    let min_potential = gf.min();
    let bound = m / 2.0 - (1.0 - gamma) * lambda * m * min_potential;
    Ok(TransductiveAudit {
        projection_size: w.len(),
        edge_mass,
        out_degree,
        loo_error: out_degree / m,
        bound,
        slack: bound - out_degree,
        min_potential,
    })
}
