//! Constructive achievement: greedy tail sums, absolutely convergent cone
//! selections, reduction-property stages, and the exact oracles that check them.

mod absolute;
mod greedy;
mod oracle;
mod reduction;
mod steer;
mod thirds;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use absolute::{
    achieve_abs_plane, build_absolute_selection, build_absolute_selection_after, check_plan, selection_tail_norm,
    AbsPlaneResult, PlanChecks, PlanStage, SelectionPlan, StageChecks, TailNormReport,
};
pub use greedy::{greedy_tail_sum, GreedySum};
pub use oracle::{
    brute_subsums, nearest_subsum, pattern_string, unique_positive_representation_check, SubsumHit,
    UniqueRepresentationReport, MAX_BRUTE_TERMS,
};
pub use reduction::{
    achieve_via_reduction, build_reduction_set, find_y_correction, AchievementCertificate, CertificateStage,
    ReductionWitness, StageKind, YCorrection, A0_BEAM_WIDTH,
};
pub use steer::{steer_rearrangement, steer_rearrangement_with_pool, SteerReport};
pub use thirds::{thirds_exclusion_check, DistanceCheck, TailCheck, ThirdsReport};

/// Strictly increasing finite list of term indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSelection(Vec<u64>);

impl IndexSelection {
    pub fn empty() -> Self {
        IndexSelection(Vec::new())
    }

    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if let Some(p) = indices.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::IndexNotIncreasing { position: p as u64 + 1 });
        }
        if indices.first() == Some(&0) {
            return Err(Error::Precondition("term indices start at 1".into()));
        }
        Ok(IndexSelection(indices))
    }

    /// Union of two selections, which must not share an index.
    pub fn merge(&self, other: &IndexSelection) -> Result<Self> {
        let mut all: Vec<u64> = self.0.iter().chain(&other.0).copied().collect();
        all.sort_unstable();
        IndexSelection::new(all)
    }

    pub fn indices(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> Option<u64> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.0.last().copied()
    }

    pub fn restrict(&self, upto: u64) -> IndexSelection {
        IndexSelection(self.0.iter().copied().filter(|&i| i <= upto).collect())
    }

    /// Pattern bitmask over `1..=n`; bit `i-1` is index `i`.
    pub fn mask(&self, n: u64) -> u64 {
        self.0.iter().filter(|&&i| i <= n).fold(0, |m, &i| m | 1 << (i - 1))
    }
}

/// `true` when every index of `b` exceeds every index of `a` (vacuous if either is empty).
pub(crate) fn strictly_after(a: &IndexSelection, b: &IndexSelection) -> bool {
    match (a.max(), b.min()) {
        (Some(hi), Some(lo)) => lo > hi,
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_rejects_unsorted() {
        assert!(IndexSelection::new(vec![1, 3, 2]).is_err());
        assert!(IndexSelection::new(vec![2, 2]).is_err());
        assert!(IndexSelection::new(vec![0, 2]).is_err());
        let s = IndexSelection::new(vec![1, 3, 20]).unwrap();
        assert_eq!(s.mask(4), 0b101);
        assert_eq!(s.restrict(3).indices(), &[1, 3]);
        assert!(s.merge(&IndexSelection::new(vec![3]).unwrap()).is_err());
        assert!(strictly_after(&s, &IndexSelection::new(vec![21]).unwrap()));
        assert!(strictly_after(&s, &IndexSelection::empty()));
    }
}
