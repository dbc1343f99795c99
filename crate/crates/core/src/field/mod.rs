//! Shared geometric substrate: grids, sound speed, domains, detector patches
//! and phantoms.
//!
//! All types are immutable after construction.

mod grid;
pub mod io;
mod patch;
mod phantom;
mod region;
mod speed;

pub use grid::{CellLocation, GridSpec};
pub use patch::BoundaryPatch;
pub use phantom::{bump_gap, make_phantom, Bump, Phantom};
pub use region::{make_region, BoundaryNode, Region, Shape};
pub use speed::SpeedField;

pub type Point = [f64; 2];

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// FNV-1a over the bit patterns of a float slice. Used as a cheap identity
/// for regions so patches can be matched to the region they came from.
pub(crate) fn fingerprint(values: &[f64]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}
