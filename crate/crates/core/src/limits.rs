/// Size caps shared by every bounded operation.
///
/// The free functions in each module use [`Limits::default`]; the `*_with`
/// variants take an explicit set so callers such as the CLI can raise them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest `m` accepted by the Bell table.
    pub max_bell: usize,
    /// Largest set size whose partitions may be materialized.
    pub max_partition_elements: usize,
    /// Largest `k_in + k_out` for spec enumeration.
    pub max_spec_order: usize,
    /// Largest number of group elements any exhaustive average may visit.
    pub max_group_elements: u128,
    /// Largest unknown count for the equivariance null space.
    pub max_nullspace_unknowns: u128,
    /// Largest entry count of a realized map matrix.
    pub max_matrix_entries: u128,
    /// Largest entry count of a single tensor.
    pub max_tensor_entries: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_bell: 30,
            max_partition_elements: 12,
            max_spec_order: 8,
            max_group_elements: 10_000_000,
            max_nullspace_unknowns: 4096,
            max_matrix_entries: 10_000_000,
            max_tensor_entries: 100_000_000,
        }
    }
}
