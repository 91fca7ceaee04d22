//! Coalitions of agents and the games that assign them a value.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonempty set of agent indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coalition {
    members: Vec<usize>,
}

impl Coalition {
    /// Builds a coalition from arbitrary member order. Rejects empty input,
    /// duplicates and indices `>= n`.
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyCoalition);
        }
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateAgent(w[0]));
            }
        }
        if let Some(&last) = members.last() {
            if last >= n {
                return Err(Error::AgentOutOfRange { index: last, n });
            }
        }
        Ok(Coalition { members })
    }

    pub fn singleton(i: usize) -> Self {
        Coalition { members: vec![i] }
    }

    pub fn grand(n: usize) -> Self {
        assert!(n > 0, "grand coalition of zero agents");
        Coalition { members: (0..n).collect() }
    }

    /// Members of a nonzero bitmask, bit `i` standing for agent `i`.
    pub fn from_mask(mask: u64) -> Self {
        assert!(mask != 0, "empty mask");
        Coalition { members: iter_bits(mask).collect() }
    }

    pub fn mask(&self) -> Option<u64> {
        if *self.members.last()? >= 64 {
            return None;
        }
        Some(self.members.iter().fold(0u64, |m, &i| m | (1 << i)))
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// All unordered member pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().enumerate().flat_map(move |(a, &i)| self.members[a + 1..].iter().map(move |&j| (i, j)))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn iter_bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

/// A characteristic function over coalitions of `num_agents()` agents.
pub trait Game: Sync {
    fn num_agents(&self) -> usize;
    fn value(&self, coalition: &Coalition) -> Result<f64>;
}

impl<G: Game + ?Sized> Game for &G {
    fn num_agents(&self) -> usize {
        (**self).num_agents()
    }
    fn value(&self, coalition: &Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
}

/// Evaluates `game` on every nonempty subset of its agents. Index = bitmask;
/// entry 0 is unused and left at zero.
pub(crate) fn dense_values<G: Game + ?Sized>(game: &G, cap: usize, what: &'static str) -> Result<Vec<f64>> {
    let n = game.num_agents();
    if n > cap {
        return Err(Error::CapExceeded { what, n, cap });
    }
    let full = 1usize << n;
    let mut values = vec![0.0; full];
    for (mask, slot) in values.iter_mut().enumerate().skip(1) {
        *slot = game.value(&Coalition::from_mask(mask as u64))?;
    }
    Ok(values)
}
