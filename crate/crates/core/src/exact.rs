//! Exact coalition structure generation.

use crate::coalition::{dense_values, Coalition, Game};
use crate::error::{Error, Result};
use crate::pipeline::CoalitionStructure;

pub const IDP_CAP: usize = 22;
pub const BRUTE_FORCE_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct CsgSolution {
    pub structure: CoalitionStructure,
    pub value: f64,
    /// Splits (for DP) or partitions (for brute force) examined.
    pub subsets_explored: u64,
}

/// Optimal coalition structure by dynamic programming over subsets.
///
/// `best[C] = max(v(C), max best[A] + best[C \ A])` where `A` ranges over
/// proper subsets of `C` containing its lowest member, so each unordered
/// split is visited once. Keeping `C` whole wins ties.
pub fn idp_solve<G: Game + ?Sized>(game: &G) -> Result<CsgSolution> {
    let n = game.num_agents();
    if n == 0 {
        return Err(Error::InvalidParam("no agents".into()));
    }
    let values = dense_values(game, IDP_CAP, "exact")?;
    let full = 1usize << n;
    let mut best = values.clone();
    // 0 = keep whole, otherwise the part containing the lowest member
    let mut choice = vec![0u32; full];
    let mut explored = 0u64;

    for mask in 1..full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        if rest == 0 {
            continue;
        }
        let mut top = best[mask];
        let mut pick = 0usize;
        // proper submasks of `rest`, each joined with `low`
        let mut sub = (rest - 1) & rest;
        loop {
            let part = low | sub;
            let other = mask ^ part;
            explored += 1;
            let split = best[part] + best[other];
            if split > top + 1e-12 * (1.0 + top.abs()) {
                top = split;
                pick = part;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        best[mask] = top;
        choice[mask] = pick as u32;
    }

    let mut blocks = Vec::new();
    let mut stack = vec![full - 1];
    while let Some(mask) = stack.pop() {
        match choice[mask] as usize {
            0 => blocks.push(mask),
            part => {
                stack.push(part);
                stack.push(mask ^ part);
            }
        }
    }
    finish(blocks, &values, explored)
}

/// Exhaustive search over all set partitions via restricted-growth strings.
/// Ties go to the lexicographically smallest string.
pub fn brute_force_partitions<G: Game + ?Sized>(game: &G) -> Result<CsgSolution> {
    let n = game.num_agents();
    if n == 0 {
        return Err(Error::InvalidParam("no agents".into()));
    }
    let values = dense_values(game, BRUTE_FORCE_CAP, "brute-force")?;

    let mut rgs = vec![0usize; n];
    let mut best_value = f64::NEG_INFINITY;
    let mut best_rgs = rgs.clone();
    let mut count = 0u64;
    let mut blocks = vec![0usize; n];
    loop {
        count += 1;
        blocks.iter_mut().for_each(|b| *b = 0);
        for (i, &g) in rgs.iter().enumerate() {
            blocks[g] |= 1 << i;
        }
        let value: f64 = blocks.iter().filter(|&&b| b != 0).map(|&b| values[b]).sum();
        if value > best_value {
            best_value = value;
            best_rgs.copy_from_slice(&rgs);
        }
        if !next_rgs(&mut rgs) {
            break;
        }
    }

    let mut masks = vec![0usize; n];
    for (i, &g) in best_rgs.iter().enumerate() {
        masks[g] |= 1 << i;
    }
    masks.retain(|&b| b != 0);
    finish(masks, &values, count)
}

/// Advances a restricted-growth string (`a[0] = 0`, `a[i] <= 1 + max(a[..i])`)
/// in lexicographic order.
fn next_rgs(a: &mut [usize]) -> bool {
    let n = a.len();
    for i in (1..n).rev() {
        let bound = a[..i].iter().copied().max().unwrap_or(0) + 1;
        if a[i] < bound {
            a[i] += 1;
            for x in &mut a[i + 1..] {
                *x = 0;
            }
            return true;
        }
    }
    false
}

fn finish(mut masks: Vec<usize>, values: &[f64], explored: u64) -> Result<CsgSolution> {
    masks.sort_by_key(|&m| m.trailing_zeros());
    let value: f64 = masks.iter().map(|&m| values[m]).sum();
    let coalitions = masks.iter().map(|&m| Coalition::from_mask(m as u64)).collect();
    Ok(CsgSolution { structure: CoalitionStructure { coalitions, value }, value, subsets_explored: explored })
}

/// Bell number `B(n)`, for enumeration sanity checks.
pub fn bell(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}
