use super::{flip_update, run, Candidate, SolverParams, SolverResult};
use crate::error::{Error, Result};
use crate::qubo::{Assignment, QuboInstance};

pub const EXHAUSTIVE_CAP: usize = 28;

/// Global minimum by Gray-code enumeration of the `2^(m-1)` assignments with
/// `x_0 = 0`. Split QUBOs are invariant under complement, so this covers
/// every cut. Ties go to the smallest assignment read as an unsigned integer.
pub fn exhaustive(qubo: &QuboInstance) -> Result<SolverResult> {
    let m = qubo.size();
    if m > EXHAUSTIVE_CAP {
        return Err(Error::ExhaustiveCap(m));
    }
    run(qubo, &SolverParams::Exhaustive, 0, || Ok(enumerate(qubo)))
}

fn enumerate(qubo: &QuboInstance) -> Candidate {
    let m = qubo.size();
    if m <= 1 {
        return Candidate { x: Assignment::zeros(m), evaluations: 1 };
    }
    let tol = 1e-12 * qubo.weight_scale() * m as f64;
    let mut bits = vec![false; m];
    let mut fields = qubo.local_fields(&bits);
    let mut energy = qubo.energy_unchecked(&bits);
    let mut best_energy = energy;
    let mut best_code: u64 = 0;

    let total = 1u64 << (m - 1);
    for k in 1..total {
        let var = k.trailing_zeros() as usize + 1;
        let delta = if bits[var] { -fields[var] } else { fields[var] };
        flip_update(qubo, &mut fields, &mut bits, var);
        energy += delta;
        if k & 0xFFFFF == 0 {
            energy = qubo.energy_unchecked(&bits);
        }
        let code = (k ^ (k >> 1)) << 1;
        if energy < best_energy - tol {
            best_energy = energy;
            best_code = code;
        } else if energy <= best_energy + tol {
            // near tie: settle on exact energies
            let exact = qubo.energy_unchecked(&bits);
            let incumbent = qubo.energy_unchecked(Assignment::from_index(best_code, m).bits());
            if exact < incumbent || (exact == incumbent && code < best_code) {
                best_energy = exact;
                best_code = code;
            }
        }
    }
    Candidate { x: Assignment::from_index(best_code, m), evaluations: total }
}
