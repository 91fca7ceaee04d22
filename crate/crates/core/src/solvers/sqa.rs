//! Simulated quantum annealing: path-integral Monte Carlo on the
//! transverse-field Ising model. A classical stand-in for an annealer, not
//! a model of any hardware's runtime.

use rand::Rng as _;

use super::{run, Candidate, SolverParams, SolverResult, SqaParams};
use crate::error::Result;
use crate::qubo::{assignment_of, QuboInstance};
use crate::rng::{rng, Rng};

/// Inter-slice coupling for transverse field `gamma` at inverse temperature
/// `beta` with `slices` Trotter slices.
pub(crate) fn slice_coupling(gamma: f64, beta: f64, slices: usize) -> f64 {
    let p = slices as f64;
    -(p / (2.0 * beta)) * (beta * gamma / p).tanh().ln()
}

pub fn sqa(qubo: &QuboInstance, params: &SqaParams, seed: u64) -> Result<SolverResult> {
    run(qubo, &SolverParams::Sqa(params.clone()), seed, || Ok(anneal(qubo, params, seed)))
}

fn anneal(qubo: &QuboInstance, params: &SqaParams, seed: u64) -> Candidate {
    let ising = qubo.to_ising();
    let m = ising.size();
    let slices = params.slices;
    let scale = qubo.weight_scale();
    let gamma_end = params.gamma_end;
    let gamma_start = params.gamma_start.unwrap_or(3.0 * scale).max(gamma_end);
    let beta = params.beta.unwrap_or(10.0 / scale);
    let slice_beta = beta / slices as f64;

    let mut coupling = vec![0.0; m * m];
    for &(i, j, c) in &ising.couplings {
        coupling[i * m + j] += c;
        coupling[j * m + i] += c;
    }

    let mut rng: Rng = rng(seed);
    let mut spins: Vec<Vec<i8>> =
        (0..slices).map(|_| (0..m).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()).collect();
    // fields[k][i] = h_i + sum_j J_ij s_kj
    let mut fields: Vec<Vec<f64>> = spins
        .iter()
        .map(|s| {
            (0..m).map(|i| ising.fields[i] + (0..m).map(|j| coupling[i * m + j] * s[j] as f64).sum::<f64>()).collect()
        })
        .collect();

    let slice_energy = |s: &[i8], f: &[f64]| {
        let mut e = 0.0;
        for i in 0..m {
            e += s[i] as f64 * (ising.fields[i] + f[i]);
        }
        ising.offset + e / 2.0
    };
    let mut best_energy = f64::INFINITY;
    let mut best_spins = vec![-1i8; m];
    let mut evaluations = 0u64;

    let flip = |s: &mut [i8], f: &mut [f64], i: usize| {
        let old = s[i] as f64;
        s[i] = -s[i];
        for (fj, c) in f.iter_mut().zip(&coupling[i * m..(i + 1) * m]) {
            *fj -= 2.0 * old * c;
        }
    };

    for sweep in 0..params.sweeps {
        let progress = if params.sweeps > 1 { sweep as f64 / (params.sweeps - 1) as f64 } else { 1.0 };
        let gamma = gamma_start + (gamma_end - gamma_start) * progress;
        let j_perp = if slices > 1 { slice_coupling(gamma, beta, slices) } else { 0.0 };

        // local moves
        for k in 0..slices {
            let prev = (k + slices - 1) % slices;
            let next = (k + 1) % slices;
            for i in 0..m {
                evaluations += 1;
                let s = spins[k][i] as f64;
                let neighbours = (spins[prev][i] + spins[next][i]) as f64;
                let delta = -2.0 * s * fields[k][i] + 2.0 * j_perp * s * neighbours;
                if delta <= 0.0 || rng.random::<f64>() < (-slice_beta * delta).exp() {
                    let (s_k, f_k) = (&mut spins[k], &mut fields[k]);
                    flip(s_k, f_k, i);
                }
            }
        }
        // global moves: flip one spin in every slice
        for i in 0..m {
            evaluations += 1;
            let delta: f64 = (0..slices).map(|k| -2.0 * spins[k][i] as f64 * fields[k][i]).sum();
            if delta <= 0.0 || rng.random::<f64>() < (-slice_beta * delta).exp() {
                for k in 0..slices {
                    flip(&mut spins[k], &mut fields[k], i);
                }
            }
        }

        for k in 0..slices {
            let e = slice_energy(&spins[k], &fields[k]);
            if e < best_energy {
                best_energy = e;
                best_spins.copy_from_slice(&spins[k]);
            }
        }
    }
    Candidate { x: assignment_of(&best_spins), evaluations }
}
