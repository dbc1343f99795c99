use serde::{Deserialize, Serialize};

use super::{BoundaryNode, Region};
use crate::{Error, Result};

/// Detector patch Γ ⊂ ∂Ω: the boundary samples whose normalised parameter
/// falls in one of the closed `arcs`, together with the unmeasured rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPatch {
    region_id: u64,
    arcs: Vec<[f64; 2]>,
    sample_indices: Vec<usize>,
    samples: Vec<BoundaryNode>,
    complement_indices: Vec<usize>,
    complement: Vec<BoundaryNode>,
}

impl BoundaryPatch {
    /// Overlapping or touching intervals are merged; an empty list gives Γ = ∅.
    pub fn new(region: &Region, arcs: &[[f64; 2]]) -> Result<Self> {
        for &[start, end] in arcs {
            if !(start.is_finite() && end.is_finite() && 0.0 <= start && start <= end && end <= 1.0) {
                return Err(Error::InvalidArc { start, end });
            }
        }
        let mut sorted = arcs.to_vec();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let mut merged: Vec<[f64; 2]> = Vec::with_capacity(sorted.len());
        for arc in sorted {
            match merged.last_mut() {
                Some(last) if arc[0] <= last[1] => last[1] = last[1].max(arc[1]),
                _ => merged.push(arc),
            }
        }

        let mut patch = Self {
            region_id: region.id(),
            arcs: merged,
            sample_indices: Vec::new(),
            samples: Vec::new(),
            complement_indices: Vec::new(),
            complement: Vec::new(),
        };
        for (k, node) in region.boundary().iter().enumerate() {
            if patch.arcs.iter().any(|a| a[0] <= node.param && node.param <= a[1]) {
                patch.sample_indices.push(k);
                patch.samples.push(*node);
            } else {
                patch.complement_indices.push(k);
                patch.complement.push(*node);
            }
        }
        Ok(patch)
    }

    /// Γ = ∂Ω.
    pub fn full(region: &Region) -> Self {
        Self::new(region, &[[0.0, 1.0]]).expect("full range is valid")
    }

    pub fn arcs(&self) -> &[[f64; 2]] {
        &self.arcs
    }

    pub fn samples(&self) -> &[BoundaryNode] {
        &self.samples
    }

    /// Indices of Γ samples in the region's boundary list.
    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    pub fn complement(&self) -> &[BoundaryNode] {
        &self.complement
    }

    pub fn complement_indices(&self) -> &[usize] {
        &self.complement_indices
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn boundary_len(&self) -> usize {
        self.samples.len() + self.complement.len()
    }

    pub fn region_id(&self) -> u64 {
        self.region_id
    }

    pub fn belongs_to(&self, region: &Region) -> bool {
        self.region_id == region.id() && self.boundary_len() == region.boundary().len()
    }

    pub(crate) fn check_region(&self, region: &Region) -> Result<()> {
        if self.belongs_to(region) {
            Ok(())
        } else {
            Err(Error::PatchMismatch)
        }
    }

    /// Is every Γ sample of `self` also a Γ sample of `other`?
    pub fn is_subset_of(&self, other: &BoundaryPatch) -> bool {
        self.region_id == other.region_id
            && self.sample_indices.iter().all(|k| other.sample_indices.binary_search(k).is_ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_region, GridSpec, Shape};

    fn disk() -> Region {
        let g = GridSpec::square(-2.0, 2.0, 256).unwrap();
        make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap()
    }

    #[test]
    fn full_and_empty_patches() {
        let r = disk();
        let full = BoundaryPatch::new(&r, &[[0.0, 1.0]]).unwrap();
        assert!(full.complement().is_empty());
        assert_eq!(full.samples().len(), r.boundary().len());
        let empty = BoundaryPatch::new(&r, &[]).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.complement().len(), r.boundary().len());
    }

    #[test]
    fn half_arc_splits_evenly() {
        let r = disk();
        let half = BoundaryPatch::new(&r, &[[0.0, 0.5]]).unwrap();
        let diff = half.samples().len() as i64 - half.complement().len() as i64;
        assert!(diff.abs() <= 2);
        assert!(half.samples().iter().all(|b| b.position[1] >= -1e-12));
    }

    #[test]
    fn overlapping_arcs_merge_and_bad_arcs_fail() {
        let r = disk();
        let p = BoundaryPatch::new(&r, &[[0.3, 0.6], [0.1, 0.35], [0.8, 0.9]]).unwrap();
        assert_eq!(p.arcs(), &[[0.1, 0.6], [0.8, 0.9]]);
        assert!(BoundaryPatch::new(&r, &[[0.5, 0.2]]).is_err());
        assert!(BoundaryPatch::new(&r, &[[-0.1, 0.2]]).is_err());
        assert!(BoundaryPatch::new(&r, &[[0.1, 1.2]]).is_err());
    }

    #[test]
    fn subset_relation() {
        let r = disk();
        let small = BoundaryPatch::new(&r, &[[0.1, 0.2]]).unwrap();
        let big = BoundaryPatch::new(&r, &[[0.0, 0.5]]).unwrap();
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
    }
}
