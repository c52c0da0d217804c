//! Periodic grids, sampled fields, the cutoff pair and the dyadic blocks.

pub mod cutoff;
pub mod dyadic;
pub mod field;
pub mod grid;
pub mod transform;

pub use cutoff::{build_cutoffs, CutoffPair};
pub use dyadic::{
    check_almost_orthogonality, decompose, dyadic_block, low_freq_cutoff, partition_residual,
    DyadicDecomposition, OrthogonalityReport,
};
pub use field::{Field, VectorField};
pub use grid::TorusGrid;
pub use transform::{RustFftTransform, Transform};
