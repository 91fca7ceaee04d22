//! Bipartition objective for a coalition's induced subgraph.
//!
//! For symmetric weights the ordered double sum
//! `sum_{i != j} w_ij x_i (1 - x_j)` is the weight of the cut between the
//! `x = 0` and `x = 1` sides. It is stored in reduced form
//! `offset + sum_i h_i x_i + sum_{i<j} q_ij x_i x_j` with `h_i = sum_j w_ij`
//! and `q_ij = -2 w_ij`.

use std::cmp::Ordering;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::isg::IsgInstance;

/// A binary vector; bit `i` has weight `2^i` when ordering assignments as
/// unsigned integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn zeros(m: usize) -> Self {
        Assignment { bits: vec![false; m] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    /// Low `m` bits of `k`, bit 0 first.
    pub fn from_index(k: u64, m: usize) -> Self {
        Assignment { bits: (0..m).map(|i| i < 64 && (k >> i) & 1 == 1).collect() }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn complement(&self) -> Self {
        Assignment { bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Compares as unsigned integers (highest index most significant).
    pub fn cmp_uint(&self, other: &Assignment) -> Ordering {
        debug_assert_eq!(self.len(), other.len());
        for i in (0..self.len()).rev() {
            match self.bits[i].cmp(&other.bits[i]) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// Returns true when `(energy, x)` beats `(best_energy, best)`: lower energy,
/// ties going to the smaller unsigned-integer assignment.
pub(crate) fn improves(energy: f64, x: &Assignment, best_energy: f64, best: &Assignment) -> bool {
    energy < best_energy || (energy == best_energy && x.cmp_uint(best) == Ordering::Less)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    size: usize,
    linear: Vec<f64>,
    quadratic: Vec<(usize, usize, f64)>,
    offset: f64,
    var_map: Vec<usize>,
    // symmetric dense copy of `quadratic`, size * size
    dense: Vec<f64>,
}

impl QuboInstance {
    /// Builds a QUBO from upper-triangle terms. Terms are sorted by `(i, j)`;
    /// repeated keys are summed.
    pub fn new(
        linear: Vec<f64>,
        quadratic: Vec<(usize, usize, f64)>,
        offset: f64,
        var_map: Vec<usize>,
    ) -> Result<Self> {
        let size = linear.len();
        if var_map.len() != size {
            return Err(Error::LengthMismatch { expected: size, got: var_map.len() });
        }
        let mut terms: Vec<(usize, usize, f64)> = Vec::with_capacity(quadratic.len());
        let mut sorted = quadratic;
        for t in &sorted {
            if t.0 >= t.1 || t.1 >= size {
                return Err(Error::InvalidParam(format!(
                    "quadratic key ({}, {}) must satisfy i < j < {size}",
                    t.0, t.1
                )));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (i, j, q) in sorted {
            match terms.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += q,
                _ => terms.push((i, j, q)),
            }
        }
        let mut dense = vec![0.0; size * size];
        for &(i, j, q) in &terms {
            dense[i * size + j] = q;
            dense[j * size + i] = q;
        }
        Ok(QuboInstance { size, linear, quadratic: terms, offset, var_map, dense })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &[(usize, usize, f64)] {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn var_map(&self) -> &[usize] {
        &self.var_map
    }

    /// Coupling between local variables `i` and `j` (zero on the diagonal).
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.size + j]
    }

    #[inline]
    pub(crate) fn coupling_row(&self, i: usize) -> &[f64] {
        &self.dense[i * self.size..(i + 1) * self.size]
    }

    /// Exact objective value of `x`.
    pub fn energy(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.size {
            return Err(Error::LengthMismatch { expected: self.size, got: x.len() });
        }
        Ok(self.energy_unchecked(x.bits()))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[bool]) -> f64 {
        let mut e = self.offset;
        for (i, &h) in self.linear.iter().enumerate() {
            if bits[i] {
                e += h;
            }
        }
        for &(i, j, q) in &self.quadratic {
            if bits[i] && bits[j] {
                e += q;
            }
        }
        e
    }

    /// `h_i + sum_j q_ij x_j` for every variable; flipping `i` changes the
    /// energy by `(1 - 2 x_i) * field_i`.
    pub(crate) fn local_fields(&self, bits: &[bool]) -> Vec<f64> {
        (0..self.size)
            .map(|i| {
                let row = self.coupling_row(i);
                self.linear[i] + bits.iter().zip(row).filter(|(&b, _)| b).map(|(_, &q)| q).sum::<f64>()
            })
            .collect()
    }

    /// Root-mean-square of the quadratic coefficients, halved: for split
    /// QUBOs this is the RMS edge weight. Falls back to the linear terms when
    /// there are no couplings, and to 1 for an all-zero problem.
    pub fn weight_scale(&self) -> f64 {
        let quad: Vec<f64> = self.quadratic.iter().map(|t| t.2 / 2.0).filter(|q| *q != 0.0).collect();
        let scale = if quad.is_empty() {
            let lin: Vec<f64> = self.linear.iter().copied().filter(|h| *h != 0.0).collect();
            rms(&lin)
        } else {
            rms(&quad)
        };
        if scale > 0.0 {
            scale
        } else {
            1.0
        }
    }

    /// Spin form via `x = (1 + s) / 2`.
    pub fn to_ising(&self) -> IsingInstance {
        let mut fields: Vec<f64> = self.linear.iter().map(|h| h / 2.0).collect();
        let mut offset = self.offset + self.linear.iter().sum::<f64>() / 2.0;
        let mut couplings = Vec::with_capacity(self.quadratic.len());
        for &(i, j, q) in &self.quadratic {
            fields[i] += q / 4.0;
            fields[j] += q / 4.0;
            offset += q / 4.0;
            couplings.push((i, j, q / 4.0));
        }
        IsingInstance { fields, couplings, offset }
    }
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Min-cut QUBO over the subgraph induced by `coalition`. Local variable `k`
/// stands for agent `coalition.members()[k]`.
pub fn build_split_qubo(instance: &IsgInstance, coalition: &Coalition) -> Result<QuboInstance> {
    if coalition.len() < 2 {
        return Err(Error::NothingToSplit(coalition.len()));
    }
    let n = instance.n();
    if let Some(&bad) = coalition.members().iter().find(|&&i| i >= n) {
        return Err(Error::AgentOutOfRange { index: bad, n });
    }
    let members = coalition.members();
    let m = members.len();
    let mut linear = vec![0.0; m];
    let mut quadratic = Vec::new();
    for a in 0..m {
        let row = instance.row(members[a]);
        for b in 0..m {
            if a != b {
                linear[a] += row[members[b]];
            }
        }
        for b in a + 1..m {
            let w = row[members[b]];
            if w != 0.0 {
                quadratic.push((a, b, -2.0 * w));
            }
        }
    }
    QuboInstance::new(linear, quadratic, 0.0, members.to_vec())
}

/// Spin Hamiltonian `offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingInstance {
    pub fields: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

impl IsingInstance {
    pub fn size(&self) -> usize {
        self.fields.len()
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let mut e = self.offset;
        for (h, &s) in self.fields.iter().zip(spins) {
            e += h * s as f64;
        }
        for &(i, j, c) in &self.couplings {
            e += c * (spins[i] * spins[j]) as f64;
        }
        e
    }
}

pub fn spins_of(x: &Assignment) -> Vec<i8> {
    x.bits().iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn assignment_of(spins: &[i8]) -> Assignment {
    Assignment::from_bits(spins.iter().map(|&s| s > 0).collect())
}
