//! Equivariant linear maps between P-tensors.
//!
//! A basis map is a partition of the `k_out + k_in` tensor modes (output modes
//! first) plus, for every block that touches only output modes or only input
//! modes, a flag saying whether that broadcast or sum ranges over the common
//! atoms only or over the whole domain. When both domains coincide the flags
//! make no difference and every spec carries [`Flag::All`].
//!
//! All application routines assume both tensors are realigned common-first
//! (see [`align_domains`](crate::align_domains)); [`message`] does the
//! realignment for callers that hold tensors in arbitrary domain order.

mod describe;
mod kernel;
mod layer;
mod spec;

pub use describe::{describe_spec, parse_description};
pub use kernel::{
    apply_adjoint, apply_adjoint_values, apply_map, apply_map_values, realize_matrix,
    realize_matrix_with, span_rank, span_rank_with,
};
pub use layer::{layer_forward, message, EquivariantLayerSpec, Nonlinearity};
pub use spec::{enumerate_specs, enumerate_specs_with, BasisMapSpec, Flag, Geometry, MapMode};
