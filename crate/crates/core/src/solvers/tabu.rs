use rand::Rng as _;

use super::{flip_update, run, Candidate, Incumbent, SolverParams, SolverResult, TabuParams};
use crate::error::Result;
use crate::qubo::QuboInstance;
use crate::rng::{rng, Rng};

pub(crate) fn default_tenure(m: usize) -> usize {
    20.min(m.div_ceil(4)).max(1)
}

/// Steepest single-flip descent with a recency tabu list. A tabu flip is
/// still taken when it would beat the best energy seen so far.
pub fn tabu_search(qubo: &QuboInstance, params: &TabuParams, seed: u64) -> Result<SolverResult> {
    run(qubo, &SolverParams::Tabu(params.clone()), seed, || Ok(search(qubo, params, seed, &mut 0.0)))
}

#[cfg(test)]
pub(crate) fn tabu_with_drift(qubo: &QuboInstance, params: &TabuParams, seed: u64) -> f64 {
    let mut drift = 0.0;
    search(qubo, params, seed, &mut drift);
    drift
}

const RESYNC: u64 = 1000;

fn search(qubo: &QuboInstance, params: &TabuParams, seed: u64, drift: &mut f64) -> Candidate {
    let m = qubo.size();
    let tenure = params.tenure.unwrap_or_else(|| default_tenure(m));
    let patience = params.max_iters.unwrap_or(50 * m);
    let mut rng: Rng = rng(seed);
    let mut best = Incumbent::new(m);
    let mut evaluations = 0u64;
    let mut flips = 0u64;

    for _ in 0..params.restarts {
        let mut bits: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
        let mut fields = qubo.local_fields(&bits);
        let mut energy = qubo.energy_unchecked(&bits);
        let mut run_best = energy;
        best.offer(&bits, energy);
        let mut tabu_until = vec![0usize; m];
        let mut stale = 0usize;
        let mut iter = 0usize;

        while stale < patience {
            iter += 1;
            let mut pick: Option<(usize, f64)> = None;
            let mut fallback: Option<(usize, f64)> = None;
            for i in 0..m {
                evaluations += 1;
                let delta = if bits[i] { -fields[i] } else { fields[i] };
                let allowed = tabu_until[i] <= iter || energy + delta < best.energy;
                let slot = if allowed { &mut pick } else { &mut fallback };
                if slot.map_or(true, |(_, d)| delta < d) {
                    *slot = Some((i, delta));
                }
            }
            // every move tabu and none aspirates: take the best tabu move
            let (k, delta) = pick.or(fallback).expect("m >= 1");
            flip_update(qubo, &mut fields, &mut bits, k);
            energy += delta;
            flips += 1;
            if flips % RESYNC == 0 {
                let exact = qubo.energy_unchecked(&bits);
                *drift = f64::max(*drift, (exact - energy).abs());
                energy = exact;
                fields = qubo.local_fields(&bits);
            }
            tabu_until[k] = iter + tenure + 1;
            best.offer(&bits, energy);
            if energy < run_best {
                run_best = energy;
                stale = 0;
            } else {
                stale += 1;
            }
        }
    }
    Candidate { x: best.x, evaluations }
}
