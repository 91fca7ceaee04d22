//! Induced subgraph games: coalition value is the sum of pairwise weights
//! among members.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coalition::{dense_values, Coalition, Game};
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::rng::rng;

/// Largest agent count accepted by [`fit_isg`].
pub const FIT_CAP: usize = 20;
pub const DEFAULT_SIGMA: f64 = 0.2;
pub const DEFAULT_DENSITY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsgSource {
    Fitted,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsgMeta {
    pub source: IsgSource,
    /// Generating std-dev for random instances; sample std-dev of the
    /// nonzero weights for fitted ones.
    pub sigma: Option<f64>,
    /// Realized fraction of nonzero upper-triangle entries.
    pub density: f64,
    pub seed: Option<u64>,
    /// Root-mean-square fit residual over all nonzero coalitions.
    pub residual: Option<f64>,
}

/// Symmetric pairwise weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct IsgInstance {
    n: usize,
    weights: Vec<f64>,
    pub meta: IsgMeta,
}

impl IsgInstance {
    /// Builds an instance from upper-triangle entries. Entries with `i == j`,
    /// out-of-range indices, or repeated pairs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], meta: IsgMeta) -> Result<Self> {
        let mut weights = vec![0.0; n * n];
        let mut seen = vec![false; n * n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::AgentOutOfRange { index: i.max(j), n });
            }
            if i == j {
                return Err(Error::InvalidParam(format!("self-weight on agent {i}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidParam(format!("weight ({i},{j}) is not finite")));
            }
            let (a, b) = (i.min(j), i.max(j));
            if seen[a * n + b] {
                return Err(Error::InvalidParam(format!("pair ({a},{b}) listed twice")));
            }
            seen[a * n + b] = true;
            weights[a * n + b] = w;
            weights[b * n + a] = w;
        }
        Ok(IsgInstance { n, weights, meta })
    }

    fn from_dense(n: usize, weights: Vec<f64>, meta: IsgMeta) -> Self {
        let mut inst = IsgInstance { n, weights, meta };
        inst.meta.density = inst.density();
        inst
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Row `i` of the dense weight matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    /// Nonzero upper-triangle entries in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n).filter_map(move |j| {
                let w = self.weight(i, j);
                (w != 0.0).then_some((i, j, w))
            })
        })
    }

    pub fn density(&self) -> f64 {
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        if pairs == 0 {
            return 0.0;
        }
        self.edges().count() as f64 / pairs as f64
    }

    /// Sum of absolute upper-triangle weights.
    pub fn total_abs_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w.abs()).sum()
    }

    pub fn to_json(&self) -> String {
        let file =
            IsgFile { n: self.n, weights: self.edges().map(|(i, j, w)| (i, j, w)).collect(), meta: self.meta.clone() };
        serde_json::to_string_pretty(&file).expect("isg serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: IsgFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        for &(i, j, _) in &file.weights {
            if i >= j {
                return Err(format!("weight entry ({i}, {j}) must have i < j"));
            }
        }
        IsgInstance::from_edges(file.n, &file.weights, file.meta).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        IsgInstance::from_json(&text).map_err(|m| Error::format(path, m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsgFile {
    n: usize,
    weights: Vec<(usize, usize, f64)>,
    meta: IsgMeta,
}

/// Sum of pairwise weights over the members of `coalition`.
pub fn isg_value(instance: &IsgInstance, coalition: &Coalition) -> Result<f64> {
    let n = instance.n;
    if let Some(&bad) = coalition.members().iter().find(|&&i| i >= n) {
        return Err(Error::AgentOutOfRange { index: bad, n });
    }
    Ok(coalition.pairs().map(|(i, j)| instance.weight(i, j)).sum())
}

impl Game for IsgInstance {
    fn num_agents(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        isg_value(self, coalition)
    }
}

/// Index of pair `(i, j)`, `i < j`, in row-major upper-triangle order.
pub(crate) fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub(crate) fn pair_list(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Normal-equation matrix entry for pairs `p` and `q`: the number of
/// coalitions of `n` agents containing both pairs.
pub fn gram_entry(n: usize, p: (usize, usize), q: (usize, usize)) -> f64 {
    let mut touched = [p.0, p.1, q.0, q.1];
    touched.sort_unstable();
    let distinct = 1 + touched.windows(2).filter(|w| w[0] != w[1]).count();
    (1u64 << (n - distinct)) as f64
}

/// Least-squares pair weights approximating `game` over all nonempty
/// coalitions.
pub fn fit_isg<G: Game + ?Sized>(game: &G) -> Result<IsgInstance> {
    let n = game.num_agents();
    if n < 2 {
        return Err(Error::NoPairsToFit(n));
    }
    let values = dense_values(game, FIT_CAP, "fit")?;
    let weights = fit_from_values(n, &values)?;
    let residual = rms_residual(n, &weights, &values);

    let nonzero: Vec<f64> = weights.iter().copied().filter(|&w| w != 0.0).collect();
    let sigma = (!nonzero.is_empty()).then(|| {
        let mean = nonzero.iter().sum::<f64>() / nonzero.len() as f64;
        (nonzero.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / nonzero.len() as f64).sqrt()
    });

    let mut dense = vec![0.0; n * n];
    for (p, &(i, j)) in pair_list(n).iter().enumerate() {
        dense[i * n + j] = weights[p];
        dense[j * n + i] = weights[p];
    }
    let meta = IsgMeta { source: IsgSource::Fitted, sigma, density: 0.0, seed: None, residual: Some(residual) };
    Ok(IsgInstance::from_dense(n, dense, meta))
}

/// Solves the normal equations given the dense value table (index = mask).
fn fit_from_values(n: usize, values: &[f64]) -> Result<Vec<f64>> {
    let pairs = pair_list(n);
    let m = pairs.len();

    // Superset sums: totals[S] = sum of v(C) over C containing S.
    let mut totals = values.to_vec();
    for bit in 0..n {
        let b = 1usize << bit;
        for mask in 0..totals.len() {
            if mask & b == 0 {
                totals[mask] += totals[mask | b];
            }
        }
    }
    let mut rhs: Vec<f64> = pairs.iter().map(|&(i, j)| totals[(1 << i) | (1 << j)]).collect();

    let mut gram = vec![0.0; m * m];
    for (p, &a) in pairs.iter().enumerate() {
        for (q, &b) in pairs.iter().enumerate() {
            gram[p * m + q] = gram_entry(n, a, b);
        }
    }
    cholesky_solve(&mut gram, m, &mut rhs)?;
    Ok(rhs)
}

fn rms_residual(n: usize, pair_weights: &[f64], values: &[f64]) -> f64 {
    let full = 1usize << n;
    let mut isg = vec![0.0; full];
    let mut sq = 0.0;
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut v = isg[rest];
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            v += pair_weights[pair_index(n, low, j)];
            r &= r - 1;
        }
        isg[mask] = v;
        sq += (values[mask] - v).powi(2);
    }
    (sq / (full - 1) as f64).sqrt()
}

/// Random instance: each upper-triangle pair draws a Normal(0, sigma^2)
/// weight and keeps it with probability `density`.
pub fn random_isg(n: usize, sigma: f64, density: f64, seed: u64) -> Result<IsgInstance> {
    if n < 2 {
        return Err(Error::InvalidParam(format!("random instance needs n >= 2, got {n}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!("sigma must be > 0, got {sigma}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParam(format!("density must lie in (0, 1], got {density}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let mut rng = rng(seed);
    let mut dense = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let w = normal.sample(&mut rng);
            let keep = rng.random::<f64>() < density;
            if keep {
                dense[i * n + j] = w;
                dense[j * n + i] = w;
            }
        }
    }
    let meta =
        IsgMeta { source: IsgSource::Random, sigma: Some(sigma), density: 0.0, seed: Some(seed), residual: None };
    Ok(IsgInstance::from_dense(n, dense, meta))
}
