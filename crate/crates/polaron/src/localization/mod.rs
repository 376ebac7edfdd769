//! Partition of unity for localising the impurity in cubes of side ℓ and the
//! companion inside/outside split for the other particles.

mod partition;
mod vpartition;

pub use partition::{
    build_partition, ims_overlap_bound, Bump, CellStats, ImsOverlap, Partition, PartitionField,
    PartitionSpec,
};
pub use vpartition::{build_v_partition, default_v_profile, VPartition};
