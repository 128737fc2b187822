//! Permutations and hidden ground-truth lines.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PermutationError {
    #[error("item {item} out of range for length {len}")]
    OutOfRange { item: usize, len: usize },
    #[error("item {0} appears more than once")]
    Duplicate(usize),
    #[error("positions must be finite and at least 1 apart once sorted")]
    GapTooSmall,
}

/// An ordering of the items `0..n` with O(1) rank lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self, PermutationError> {
        let len = order.len();
        let mut rank = vec![usize::MAX; len];
        for (pos, &item) in order.iter().enumerate() {
            if item >= len {
                return Err(PermutationError::OutOfRange { item, len });
            }
            if rank[item] != usize::MAX {
                return Err(PermutationError::Duplicate(item));
            }
            rank[item] = pos;
        }
        Ok(Self { order, rank })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            rank: (0..n).collect(),
        }
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self::new(order).expect("shuffled identity")
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of `item` in the order.
    pub fn rank(&self, item: usize) -> usize {
        self.rank[item]
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        Self::new(order).expect("reversal of a permutation")
    }

    /// Orients the order so that `order[0] < order[n-1]`.
    pub fn canonical(self) -> Self {
        match (self.order.first(), self.order.last()) {
            (Some(a), Some(b)) if a > b => self.reversed(),
            _ => self,
        }
    }

    /// True when `self` equals `other` read in either direction.
    pub fn matches_up_to_reversal(&self, other: &Permutation) -> bool {
        self.order == other.order || self.order.iter().eq(other.order.iter().rev())
    }

    /// Consecutive pairs `(order[i], order[i+1])`.
    pub fn path_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.order.windows(2).map(|w| (w[0], w[1]))
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = PermutationError;
    fn try_from(order: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.order
    }
}

/// Hidden 1-D coordinates of the items together with their sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthLine {
    positions: Vec<f64>,
    true_perm: Permutation,
}

impl GroundTruthLine {
    /// Validates unit normalization: distinct finite positions whose sorted
    /// adjacent gaps are all at least 1.
    pub fn from_positions(positions: Vec<f64>) -> Result<Self, PermutationError> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(PermutationError::GapTooSmall);
        }
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]).then(a.cmp(&b)));
        if order
            .windows(2)
            .any(|w| positions[w[1]] - positions[w[0]] < 1.0)
        {
            return Err(PermutationError::GapTooSmall);
        }
        Ok(Self {
            positions,
            true_perm: Permutation::new(order)?,
        })
    }

    /// Unit-spaced line whose item labels are a uniformly random permutation
    /// of the positions, so item ids carry no order information.
    pub fn unit_spaced(n: usize, rng: &mut impl Rng) -> Self {
        Self::from_order(Permutation::random(n, rng))
    }

    /// Unit-spaced line that visits items in the given order.
    pub fn from_order(true_perm: Permutation) -> Self {
        let mut positions = vec![0.0; true_perm.len()];
        for (pos, &item) in true_perm.order().iter().enumerate() {
            positions[item] = pos as f64;
        }
        Self {
            positions,
            true_perm,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, item: usize) -> f64 {
        self.positions[item]
    }

    pub fn true_perm(&self) -> &Permutation {
        &self.true_perm
    }

    /// `|v_u - v_v|`.
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        (self.positions[u] - self.positions[v]).abs()
    }

    /// Separation of `u` and `v` in the true order.
    pub fn index_distance(&self, u: usize, v: usize) -> usize {
        self.true_perm.rank(u).abs_diff(self.true_perm.rank(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_bijections() {
        assert_eq!(
            Permutation::new(vec![0, 0]),
            Err(PermutationError::Duplicate(0))
        );
        assert_eq!(
            Permutation::new(vec![0, 2]),
            Err(PermutationError::OutOfRange { item: 2, len: 2 })
        );
    }

    #[test]
    fn canonical_orientation() {
        let p = Permutation::new(vec![3, 1, 0, 2]).unwrap().canonical();
        assert_eq!(p.order(), &[2, 0, 1, 3]);
        assert!(p.matches_up_to_reversal(&Permutation::new(vec![3, 1, 0, 2]).unwrap()));
    }

    #[test]
    fn truth_from_positions() {
        let t = GroundTruthLine::from_positions(vec![5.0, 0.0, 2.5]).unwrap();
        assert_eq!(t.true_perm().order(), &[1, 2, 0]);
        assert_eq!(t.index_distance(1, 0), 2);
        assert_eq!(t.distance(1, 0), 5.0);
        assert!(GroundTruthLine::from_positions(vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn unit_line_gaps() {
        let t = GroundTruthLine::unit_spaced(50, &mut ChaCha8Rng::seed_from_u64(1));
        let order = t.true_perm().order();
        for w in order.windows(2) {
            assert_eq!(t.position(w[1]) - t.position(w[0]), 1.0);
        }
    }

    proptest! {
        #[test]
        fn order_and_rank_are_inverse(seed in any::<u64>(), n in 0usize..64) {
            let p = Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
            for (pos, &item) in p.order().iter().enumerate() {
                prop_assert_eq!(p.rank(item), pos);
            }
            let back: Permutation = serde_json_like(&p);
            prop_assert_eq!(back, p);
        }
    }

    fn serde_json_like(p: &Permutation) -> Permutation {
        let raw: Vec<usize> = p.clone().into();
        Permutation::try_from(raw).unwrap()
    }
}
