//! P-tensors: permutation-covariant tensors anchored to ordered reference
//! domains, the complete family of equivariant linear maps between them
//! (including maps between partially overlapping domains), independent
//! counting and null-space oracles for that family, and a small
//! higher-order message-passing engine on graphs built from those maps.
//!
//! Module map:
//!
//! * [`combinatorics`]: set partitions, Bell numbers, map-space counts.
//! * [`tensor`]: atoms, reference domains, permutations, [`PTensor`].
//! * [`maps`]: basis map enumeration, application, adjoints, matrices, layers.
//! * [`oracle`]: Burnside dimension counts, exact null spaces, direct loops.
//! * [`gnn`]: graphs, domain policies, message-passing layers, readout.
//! * [`verify`]: self-checking suites shared by the CLI and the test suite.

pub mod combinatorics;
pub mod error;
pub mod gnn;
pub mod limits;
pub mod linalg;
pub mod maps;
pub mod oracle;
pub mod scalar;
pub mod tensor;
pub mod verify;

pub use combinatorics::{
    avg_fixed_power, bell, classify_partition, count_overlap, count_same_domain,
    enumerate_partitions, BellTable, BlockKind, PartitionType, SetPartition,
};
pub use error::{Error, Result};
pub use limits::Limits;
pub use maps::{
    apply_adjoint, apply_map, describe_spec, enumerate_specs, layer_forward, parse_description,
    realize_matrix, span_rank, BasisMapSpec, EquivariantLayerSpec, Flag, Geometry, MapMode,
    Nonlinearity,
};
pub use oracle::{burnside_dimension, compare_span, nullspace_basis, BlockGeometry};
pub use scalar::Scalar;
pub use tensor::{align_domains, Atom, DomainAlignment, PTensor, Permutation, RefDomain};
