use super::{run, solve, Candidate, DecomposedParams, SolverParams, SolverResult};
use crate::error::Result;
use crate::qubo::{Assignment, QuboInstance};
use crate::rng::derive_seed;

/// Upper bound on passes, on top of the no-improvement stop.
const MAX_PASSES: usize = 1000;

/// QBsolv-style decomposition. The inner solver first runs on the whole
/// problem. Each pass then ranks variables by the magnitude of their flip
/// impact at the incumbent, walks the ranking in chunks of
/// `subproblem_size`, and re-solves each chunk with everything else clamped,
/// keeping a chunk solution only if it lowers the full energy.
pub fn decomposed_solve(qubo: &QuboInstance, params: &DecomposedParams, seed: u64) -> Result<SolverResult> {
    run(qubo, &SolverParams::Decomposed(params.clone()), seed, || decompose(qubo, params, seed))
}

fn decompose(qubo: &QuboInstance, params: &DecomposedParams, seed: u64) -> Result<Candidate> {
    let m = qubo.size();
    let first = solve(qubo, &params.inner, seed)?;
    let mut evaluations = first.evaluations;
    let mut x = first.best_x;
    let mut energy = first.best_energy;
    if params.subproblem_size >= m {
        return Ok(Candidate { x, evaluations });
    }

    let mut stale = 0;
    let mut stream = 0u64;
    for _ in 0..MAX_PASSES {
        if stale >= params.max_rounds {
            break;
        }
        let fields = qubo.local_fields(x.bits());
        let mut order: Vec<usize> = (0..m).collect();
        let impact = |i: usize| fields[i].abs();
        order.sort_by(|&a, &b| impact(b).total_cmp(&impact(a)).then(a.cmp(&b)));

        let mut improved = false;
        for chunk in order.chunks(params.subproblem_size) {
            let mut vars = chunk.to_vec();
            vars.sort_unstable();
            let sub = clamp(qubo, &x, &vars)?;
            stream += 1;
            let r = solve(&sub, &params.inner, derive_seed(seed, stream))?;
            evaluations += r.evaluations;
            let mut trial = x.clone();
            for (k, &v) in vars.iter().enumerate() {
                trial.bits_mut()[v] = r.best_x.get(k);
            }
            let e = qubo.energy_unchecked(trial.bits());
            if e < energy {
                x = trial;
                energy = e;
                improved = true;
            }
        }
        stale = if improved { 0 } else { stale + 1 };
    }
    Ok(Candidate { x, evaluations })
}

/// Sub-QUBO over `vars` (ascending) with every other variable fixed at its
/// value in `x`. Energies of the sub-problem equal full energies.
pub(crate) fn clamp(qubo: &QuboInstance, x: &Assignment, vars: &[usize]) -> Result<QuboInstance> {
    let m = qubo.size();
    let mut local = vec![usize::MAX; m];
    for (k, &v) in vars.iter().enumerate() {
        local[v] = k;
    }
    let mut fixed = x.bits().to_vec();
    for &v in vars {
        fixed[v] = false;
    }
    let offset = qubo.energy_unchecked(&fixed);

    let mut linear: Vec<f64> = vars.iter().map(|&v| qubo.linear()[v]).collect();
    let mut quadratic = Vec::new();
    for &(i, j, q) in qubo.quadratic() {
        match (local[i], local[j]) {
            (usize::MAX, usize::MAX) => {}
            (a, usize::MAX) => {
                if fixed[j] {
                    linear[a] += q;
                }
            }
            (usize::MAX, b) => {
                if fixed[i] {
                    linear[b] += q;
                }
            }
            (a, b) => quadratic.push((a, b, q)),
        }
    }
    let var_map = vars.iter().map(|&v| qubo.var_map()[v]).collect();
    QuboInstance::new(linear, quadratic, offset, var_map)
}
