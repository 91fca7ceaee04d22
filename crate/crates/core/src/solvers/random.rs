use rand::Rng as _;

use super::{run, Candidate, RandomParams, SolverParams, SolverResult};
use crate::error::Result;
use crate::qubo::{improves, Assignment, QuboInstance};
use crate::rng::rng;

/// Best of `shots` uniformly drawn assignments.
pub fn random_sampler(qubo: &QuboInstance, params: &RandomParams, seed: u64) -> Result<SolverResult> {
    run(qubo, &SolverParams::Random(params.clone()), seed, || {
        let m = qubo.size();
        let mut rng = rng(seed);
        let mut best = Assignment::zeros(m);
        let mut best_energy = f64::INFINITY;
        let mut x = Assignment::zeros(m);
        for _ in 0..params.shots {
            for b in x.bits_mut() {
                *b = rng.random_bool(0.5);
            }
            let e = qubo.energy_unchecked(x.bits());
            if improves(e, &x, best_energy, &best) {
                best_energy = e;
                best.clone_from(&x);
            }
        }
        Ok(Candidate { x: best, evaluations: params.shots as u64 })
    })
}
