use rand::Rng as _;

use super::{flip_update, run, Candidate, Incumbent, SaParams, SolverParams, SolverResult};
use crate::error::Result;
use crate::qubo::QuboInstance;
use crate::rng::{rng, Rng};

/// Single-flip Metropolis sweeps under a geometric cooling schedule, best
/// state tracked across restarts.
pub fn simulated_annealing(qubo: &QuboInstance, params: &SaParams, seed: u64) -> Result<SolverResult> {
    run(qubo, &SolverParams::Sa(params.clone()), seed, || Ok(anneal(qubo, params, seed, &mut 0.0)))
}

#[cfg(test)]
pub(crate) fn anneal_with_drift(qubo: &QuboInstance, params: &SaParams, seed: u64) -> f64 {
    let mut drift = 0.0;
    anneal(qubo, params, seed, &mut drift);
    drift
}

pub(crate) fn temperatures(params: &SaParams, qubo: &QuboInstance) -> Vec<f64> {
    let m = qubo.size() as f64;
    let t_end = params.t_end;
    let t_start = params.t_start.unwrap_or(2.0 * qubo.weight_scale() * m).max(t_end);
    let sweeps = params.sweeps;
    if sweeps == 1 {
        return vec![t_end];
    }
    let ratio = t_end / t_start;
    (0..sweeps).map(|k| t_start * ratio.powf(k as f64 / (sweeps - 1) as f64)).collect()
}

/// Incremental energies are re-synced to a full evaluation every this many
/// accepted flips.
const RESYNC: u64 = 1000;

fn anneal(qubo: &QuboInstance, params: &SaParams, seed: u64, drift: &mut f64) -> Candidate {
    let m = qubo.size();
    let schedule = temperatures(params, qubo);
    let mut rng: Rng = rng(seed);
    let mut best = Incumbent::new(m);
    let mut evaluations = 0u64;
    let mut accepted = 0u64;

    for _ in 0..params.restarts {
        let mut bits: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
        let mut fields = qubo.local_fields(&bits);
        let mut energy = qubo.energy_unchecked(&bits);
        best.offer(&bits, energy);
        for &temp in &schedule {
            for i in 0..m {
                evaluations += 1;
                let delta = if bits[i] { -fields[i] } else { fields[i] };
                let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp();
                if !accept {
                    continue;
                }
                flip_update(qubo, &mut fields, &mut bits, i);
                energy += delta;
                accepted += 1;
                if accepted % RESYNC == 0 {
                    let exact = qubo.energy_unchecked(&bits);
                    *drift = f64::max(*drift, (exact - energy).abs());
                    energy = exact;
                    fields = qubo.local_fields(&bits);
                }
                if delta < 0.0 {
                    best.offer(&bits, energy);
                }
            }
        }
    }
    Candidate { x: best.x, evaluations }
}

#[cfg(test)]
mod tests {
    use super::super::exhaustive;
    use super::super::test_support::*;
    use super::*;

    #[test]
    fn schedule_is_geometric() {
        let q = pair(-1.0);
        let t = temperatures(&SaParams { sweeps: 3, t_start: Some(1.0), t_end: 0.01, restarts: 1 }, &q);
        assert!((t[0] - 1.0).abs() < 1e-15);
        assert!((t[1] - 0.1).abs() < 1e-12);
        assert!((t[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn frozen_run_ends_in_local_minimum() {
        let q = random_split(16, 9);
        let p = SaParams { sweeps: 20, t_start: Some(1e-12), t_end: 1e-13, restarts: 1 };
        let r = simulated_annealing(&q, &p, 4).unwrap();
        let fields = q.local_fields(r.best_x.bits());
        for (i, f) in fields.iter().enumerate() {
            let delta = if r.best_x.get(i) { -f } else { *f };
            assert!(delta >= -1e-12, "flip {i} still improves by {delta}");
        }
        assert!(r.best_energy <= 0.0);
    }

    #[test]
    fn matches_exhaustive_on_small_instances() {
        let mut hits = 0;
        for seed in 0..20 {
            let q = random_split(12, 100 + seed);
            let exact = exhaustive(&q).unwrap().best_energy;
            let r = simulated_annealing(&q, &SaParams::default(), seed).unwrap();
            if (r.best_energy - exact).abs() <= 1e-9 * exact.abs().max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 18, "sa matched exhaustive on {hits}/20");
    }

    #[test]
    fn incremental_energy_does_not_drift() {
        let q = random_split(40, 2);
        let drift = anneal_with_drift(&q, &SaParams { sweeps: 500, ..Default::default() }, 1);
        assert!(drift < 1e-9 * 40.0 * q.weight_scale(), "drift {drift}");
    }
}
