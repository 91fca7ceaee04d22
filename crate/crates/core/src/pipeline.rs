//! Hierarchical splitting: start from the grand coalition and keep cutting
//! coalitions in two while some cut has negative weight.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::path::Path;

use serde::Serialize;

use crate::coalition::{Coalition, Game};
use crate::error::{Error, Result};
use crate::isg::{isg_value, IsgInstance};
use crate::qubo::build_split_qubo;
use crate::rng::derive_seed;
use crate::solvers::{solve, SolverParams, SolverResult};

/// A partition of the agents together with its value under some game.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionStructure {
    pub coalitions: Vec<Coalition>,
    pub value: f64,
}

impl CoalitionStructure {
    /// Checks that the coalitions are disjoint and cover `0..n`.
    pub fn check_partition(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for c in &self.coalitions {
            for &i in c.members() {
                if i >= n {
                    return Err(Error::NotAPartition(format!("agent {i} outside 0..{n}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::NotAPartition(format!("agent {i} appears twice")));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::NotAPartition(format!("agent {i} is not covered")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStep {
    pub coalition: Coalition,
    pub solver_result: SolverResult,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitTrace {
    pub steps: Vec<SplitStep>,
}

impl SplitTrace {
    pub fn qubo_solves(&self) -> usize {
        self.steps.len()
    }

    pub fn accepted_splits(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }
}

/// Default acceptance tolerance: a cut must beat `-1e-9 * sum |w_ij|`.
pub fn default_tolerance(instance: &IsgInstance) -> f64 {
    1e-9 * instance.total_abs_weight()
}

/// Splits coalitions largest-first until no cut with energy below
/// `-tolerance` remains. The solver for step `k` is seeded with
/// `derive_seed(seed, k)`.
pub fn iterative_split(
    instance: &IsgInstance,
    params: &SolverParams,
    seed: u64,
    tolerance: f64,
) -> Result<(CoalitionStructure, SplitTrace)> {
    let n = instance.n();
    if n == 0 {
        return Err(Error::InvalidParam("instance has no agents".into()));
    }
    params.validate()?;

    let mut work = BinaryHeap::new();
    work.push((1usize.max(n), Reverse(Coalition::grand(n))));
    let mut done = Vec::new();
    let mut trace = SplitTrace::default();

    while let Some((_, Reverse(coalition))) = work.pop() {
        if coalition.len() < 2 {
            done.push(coalition);
            continue;
        }
        let step = trace.steps.len() as u64;
        let attach = |e: Error| Error::SplitFailed { coalition: coalition.members().to_vec(), source: Box::new(e) };
        let qubo = build_split_qubo(instance, &coalition).map_err(attach)?;
        let result = solve(&qubo, params, derive_seed(seed, step)).map_err(attach)?;
        let accepted = result.best_energy < -tolerance;

        if accepted {
            let (zeros, ones): (Vec<_>, Vec<_>) =
                qubo.var_map().iter().zip(result.best_x.bits()).partition(|(_, &b)| !b);
            if zeros.is_empty() || ones.is_empty() {
                return Err(Error::Internal(format!("negative cut {} with one empty side", result.best_energy)));
            }
            let left = Coalition::new(zeros.into_iter().map(|(&i, _)| i).collect(), n)?;
            let right = Coalition::new(ones.into_iter().map(|(&i, _)| i).collect(), n)?;
            check_bookkeeping(instance, &coalition, &left, &right, result.best_energy)?;
            work.push((left.len(), Reverse(left)));
            work.push((right.len(), Reverse(right)));
        } else {
            done.push(coalition.clone());
        }
        trace.steps.push(SplitStep { coalition, solver_result: result, accepted });
    }

    done.sort_by_key(|c| c.members()[0]);
    let value = done.iter().map(|c| isg_value(instance, c)).sum::<Result<f64>>()?;
    Ok((CoalitionStructure { coalitions: done, value }, trace))
}

/// `v(C) = v(A) + v(B) + cut(A, B)` for an accepted split.
fn check_bookkeeping(instance: &IsgInstance, whole: &Coalition, a: &Coalition, b: &Coalition, cut: f64) -> Result<()> {
    let lhs = isg_value(instance, whole)?;
    let rhs = isg_value(instance, a)? + isg_value(instance, b)? + cut;
    let scale: f64 = whole.pairs().map(|(i, j)| instance.weight(i, j).abs()).sum::<f64>().max(1.0);
    if (lhs - rhs).abs() > 1e-9 * scale {
        return Err(Error::Internal(format!("split bookkeeping off: v(C) = {lhs}, parts + cut = {rhs}")));
    }
    Ok(())
}

/// Sum of coalition values under `game`; rejects non-partitions.
pub fn structure_value<G: Game + ?Sized>(structure: &CoalitionStructure, game: &G) -> Result<f64> {
    structure.check_partition(game.num_agents())?;
    structure.coalitions.iter().map(|c| game.value(c)).sum()
}

/// `candidate / reference`, or `None` when the reference is zero.
pub fn quality_ratio(candidate: f64, reference: f64) -> Option<f64> {
    (reference != 0.0).then(|| candidate / reference)
}

#[derive(Serialize)]
struct StructureFile<'a> {
    coalitions: Vec<&'a [usize]>,
    value: f64,
    trace: Vec<TraceEntry<'a>>,
}

#[derive(Serialize)]
struct TraceEntry<'a> {
    coalition: &'a [usize],
    cut: f64,
    accepted: bool,
}

/// Structure JSON; `trace` may be empty (exact solvers have none).
pub fn structure_json(structure: &CoalitionStructure, trace: Option<&SplitTrace>) -> String {
    let file = StructureFile {
        coalitions: structure.coalitions.iter().map(|c| c.members()).collect(),
        value: structure.value,
        trace: trace
            .map(|t| {
                t.steps
                    .iter()
                    .map(|s| TraceEntry {
                        coalition: s.coalition.members(),
                        cut: s.solver_result.best_energy,
                        accepted: s.accepted,
                    })
                    .collect()
            })
            .unwrap_or_default(),
    };
    serde_json::to_string_pretty(&file).expect("structure serializes")
}

pub fn save_structure(path: &Path, structure: &CoalitionStructure, trace: Option<&SplitTrace>) -> Result<()> {
    std::fs::write(path, structure_json(structure, trace) + "\n").map_err(|e| Error::io(path, e))
}
