//! Interchangeable QUBO minimizers.
//!
//! Every solver is single-threaded and deterministic in `(qubo, params,
//! seed)`. The dispatcher always scores the all-zeros assignment as well, so
//! on split QUBOs the reported energy is never positive.

mod decomposed;
mod exhaustive;
mod random;
mod sa;
mod sqa;
mod tabu;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{improves, Assignment, QuboInstance};

pub use decomposed::decomposed_solve;
pub use exhaustive::{exhaustive, EXHAUSTIVE_CAP};
pub use random::random_sampler;
pub use sa::simulated_annealing;
pub use sqa::sqa;
pub use tabu::tabu_search;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaParams {
    #[serde(default = "defaults::sa_sweeps")]
    pub sweeps: usize,
    /// Initial temperature; `None` means `2 * scale * m` where `scale` is the
    /// RMS edge weight of the problem.
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default = "defaults::sa_t_end")]
    pub t_end: f64,
    #[serde(default = "defaults::sa_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabuParams {
    /// Recency tabu length; `None` means `min(20, ceil(m / 4))`.
    #[serde(default)]
    pub tenure: Option<usize>,
    /// Non-improving iterations before a restart ends; `None` means `50 * m`.
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default = "defaults::tabu_restarts")]
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomParams {
    #[serde(default = "defaults::shots")]
    pub shots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposedParams {
    #[serde(default = "defaults::subproblem_size")]
    pub subproblem_size: usize,
    #[serde(default = "defaults::inner")]
    pub inner: Box<SolverParams>,
    #[serde(default = "defaults::max_rounds")]
    pub max_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqaParams {
    /// Trotter slices.
    #[serde(default = "defaults::slices")]
    pub slices: usize,
    /// `None` means `3 * scale`.
    #[serde(default)]
    pub gamma_start: Option<f64>,
    #[serde(default = "defaults::gamma_end")]
    pub gamma_end: f64,
    /// Inverse temperature; `None` means `10 / scale`.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "defaults::sqa_sweeps")]
    pub sweeps: usize,
}

mod defaults {
    use super::*;

    pub fn sa_sweeps() -> usize {
        200
    }
    pub fn sa_t_end() -> f64 {
        1e-3
    }
    pub fn sa_restarts() -> usize {
        8
    }
    pub fn tabu_restarts() -> usize {
        4
    }
    pub fn shots() -> usize {
        1 << 12
    }
    pub fn subproblem_size() -> usize {
        40
    }
    pub fn inner() -> Box<SolverParams> {
        Box::new(SolverParams::Tabu(TabuParams::default()))
    }
    pub fn max_rounds() -> usize {
        10
    }
    pub fn slices() -> usize {
        32
    }
    pub fn gamma_end() -> f64 {
        1e-2
    }
    pub fn sqa_sweeps() -> usize {
        200
    }
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams {
            sweeps: defaults::sa_sweeps(),
            t_start: None,
            t_end: defaults::sa_t_end(),
            restarts: defaults::sa_restarts(),
        }
    }
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams { tenure: None, max_iters: None, restarts: defaults::tabu_restarts() }
    }
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { shots: defaults::shots() }
    }
}

impl Default for DecomposedParams {
    fn default() -> Self {
        DecomposedParams {
            subproblem_size: defaults::subproblem_size(),
            inner: defaults::inner(),
            max_rounds: defaults::max_rounds(),
        }
    }
}

impl Default for SqaParams {
    fn default() -> Self {
        SqaParams {
            slices: defaults::slices(),
            gamma_start: None,
            gamma_end: defaults::gamma_end(),
            beta: None,
            sweeps: defaults::sqa_sweeps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverParams {
    Exhaustive,
    Sa(SaParams),
    Tabu(TabuParams),
    Random(RandomParams),
    Decomposed(DecomposedParams),
    Sqa(SqaParams),
}

/// Names accepted by [`SolverParams::by_name`].
pub const SOLVER_NAMES: [&str; 6] = ["exhaustive", "sa", "tabu", "random", "qbsolv", "sqa"];

impl SolverParams {
    /// Default parameters for a solver label.
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "exhaustive" => SolverParams::Exhaustive,
            "sa" => SolverParams::Sa(SaParams::default()),
            "tabu" => SolverParams::Tabu(TabuParams::default()),
            "random" => SolverParams::Random(RandomParams::default()),
            "qbsolv" | "decomposed" => SolverParams::Decomposed(DecomposedParams::default()),
            "sqa" => SolverParams::Sqa(SqaParams::default()),
            _ => return None,
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolverParams::Exhaustive => "exhaustive",
            SolverParams::Sa(_) => "sa",
            SolverParams::Tabu(_) => "tabu",
            SolverParams::Random(_) => "random",
            SolverParams::Decomposed(_) => "qbsolv",
            SolverParams::Sqa(_) => "sqa",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.to_string()));
        match self {
            SolverParams::Exhaustive => Ok(()),
            SolverParams::Sa(p) => {
                if p.sweeps == 0 || p.restarts == 0 {
                    return bad("sa: sweeps and restarts must be >= 1");
                }
                if !(p.t_end > 0.0) {
                    return bad("sa: t_end must be > 0");
                }
                match p.t_start {
                    Some(t) if !(t > p.t_end) => bad("sa: t_start must exceed t_end"),
                    _ => Ok(()),
                }
            }
            SolverParams::Tabu(p) => {
                if p.restarts == 0 || p.tenure == Some(0) || p.max_iters == Some(0) {
                    return bad("tabu: tenure, max_iters and restarts must be >= 1");
                }
                Ok(())
            }
            SolverParams::Random(p) => {
                if p.shots == 0 {
                    return bad("random: shots must be >= 1");
                }
                Ok(())
            }
            SolverParams::Decomposed(p) => {
                if p.subproblem_size < 2 {
                    return bad("qbsolv: subproblem_size must be >= 2");
                }
                if p.max_rounds == 0 {
                    return bad("qbsolv: max_rounds must be >= 1");
                }
                p.inner.validate()
            }
            SolverParams::Sqa(p) => {
                if p.slices == 0 || p.sweeps == 0 {
                    return bad("sqa: slices and sweeps must be >= 1");
                }
                if !(p.gamma_end > 0.0) {
                    return bad("sqa: gamma_end must be > 0");
                }
                if let Some(g) = p.gamma_start {
                    if !(g > p.gamma_end) {
                        return bad("sqa: gamma_start must exceed gamma_end");
                    }
                }
                if let Some(b) = p.beta {
                    if !(b > 0.0) {
                        return bad("sqa: beta must be > 0");
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub best_x: Assignment,
    pub best_energy: f64,
    pub evaluations: u64,
    /// Seconds.
    pub wall_time: f64,
    pub seed: u64,
    pub solver_name: String,
}

impl SolverResult {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &SolverResult) -> bool {
        self.best_x == other.best_x
            && self.best_energy.to_bits() == other.best_energy.to_bits()
            && self.evaluations == other.evaluations
            && self.seed == other.seed
            && self.solver_name == other.solver_name
    }
}

/// What a variant hands back before the shared bookkeeping.
pub(crate) struct Candidate {
    pub x: Assignment,
    pub evaluations: u64,
}

pub fn solve(qubo: &QuboInstance, params: &SolverParams, seed: u64) -> Result<SolverResult> {
    match params {
        SolverParams::Exhaustive => exhaustive(qubo),
        SolverParams::Sa(p) => simulated_annealing(qubo, p, seed),
        SolverParams::Tabu(p) => tabu_search(qubo, p, seed),
        SolverParams::Random(p) => random_sampler(qubo, p, seed),
        SolverParams::Decomposed(p) => decomposed_solve(qubo, p, seed),
        SolverParams::Sqa(p) => sqa(qubo, p, seed),
    }
}

/// Shared wrapper: validation, timing, the all-zeros candidate and exact
/// re-evaluation of the winner.
pub(crate) fn run(
    qubo: &QuboInstance,
    params: &SolverParams,
    seed: u64,
    body: impl FnOnce() -> Result<Candidate>,
) -> Result<SolverResult> {
    params.validate()?;
    let start = Instant::now();
    let zeros = Assignment::zeros(qubo.size());
    let zero_energy = qubo.energy_unchecked(zeros.bits());
    let trivial = qubo.linear().iter().all(|&h| h == 0.0) && qubo.quadratic().iter().all(|t| t.2 == 0.0);
    let cand = if trivial || qubo.size() == 0 { Candidate { x: zeros.clone(), evaluations: 1 } } else { body()? };

    let energy = qubo.energy(&cand.x)?;
    let (best_x, best_energy) =
        if improves(zero_energy, &zeros, energy, &cand.x) { (zeros, zero_energy) } else { (cand.x, energy) };
    Ok(SolverResult {
        best_x,
        best_energy,
        evaluations: cand.evaluations + 1,
        wall_time: start.elapsed().as_secs_f64(),
        seed,
        solver_name: params.label().to_string(),
    })
}

/// Running minimum over assignments produced by a local search.
pub(crate) struct Incumbent {
    pub x: Assignment,
    pub energy: f64,
}

impl Incumbent {
    pub fn new(m: usize) -> Self {
        Incumbent { x: Assignment::zeros(m), energy: f64::INFINITY }
    }

    pub fn offer(&mut self, bits: &[bool], energy: f64) -> bool {
        if energy < self.energy {
            self.energy = energy;
            self.x.bits_mut().copy_from_slice(bits);
            true
        } else {
            false
        }
    }
}

/// Applies flip of variable `k` to local fields.
#[inline]
pub(crate) fn flip_update(qubo: &QuboInstance, fields: &mut [f64], bits: &mut [bool], k: usize) {
    let sign = if bits[k] { -1.0 } else { 1.0 };
    bits[k] = !bits[k];
    for (f, q) in fields.iter_mut().zip(qubo.coupling_row(k)) {
        *f += sign * q;
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::coalition::Coalition;
    use crate::isg::{random_isg, IsgInstance, IsgMeta, IsgSource};
    use crate::qubo::{build_split_qubo, Assignment, QuboInstance};

    pub fn pair(w: f64) -> QuboInstance {
        let meta = IsgMeta { source: IsgSource::Random, sigma: None, density: 1.0, seed: None, residual: None };
        let g = IsgInstance::from_edges(2, &[(0, 1, w)], meta).unwrap();
        build_split_qubo(&g, &Coalition::grand(2)).unwrap()
    }

    pub fn three_node() -> QuboInstance {
        let meta = IsgMeta { source: IsgSource::Random, sigma: None, density: 1.0, seed: None, residual: None };
        let g = IsgInstance::from_edges(3, &[(0, 1, 1.0), (0, 2, -0.5), (1, 2, -0.5)], meta).unwrap();
        build_split_qubo(&g, &Coalition::grand(3)).unwrap()
    }

    pub fn random_split(m: usize, seed: u64) -> QuboInstance {
        let g = random_isg(m, 0.2, 0.95, seed).unwrap();
        build_split_qubo(&g, &Coalition::grand(m)).unwrap()
    }

    /// Full 2^m enumeration with no symmetry reduction.
    pub fn brute_min(q: &QuboInstance) -> f64 {
        let m = q.size();
        (0..1u64 << m).map(|k| q.energy(&Assignment::from_index(k, m)).unwrap()).fold(f64::INFINITY, f64::min)
    }

    pub fn zero_weights(m: usize) -> QuboInstance {
        QuboInstance::new(vec![0.0; m], vec![], 0.0, (0..m).collect()).unwrap()
    }
}
