//! Higher-order message passing on graphs.
//!
//! Every neuron is a P-tensor whose reference domain is a set of vertices.
//! A layer builds its output domains from a [`DomainPolicy`], picks the input
//! neurons that contribute to each output neuron, sums the equivariant
//! messages from all contributors, then adds a bias and applies the
//! nonlinearity once. Layer kinds differ only in how contributors are chosen:
//!
//! * `mpnn`: zeroth-order vertex neurons receive from their graph neighbours.
//! * `edge`, `subgraph`: every input neuron whose domain meets the output domain.
//! * `unite`: every input neuron whose domain lies inside the output ball; the
//!   union of those domains must be the ball itself.

mod config;
mod graph;
mod model;

pub use config::{DomainPolicy, LayerConfig, LayerKind, ModelConfig};
pub use graph::{build_domains, parse_features, parse_graph, Graph};
pub use model::{
    edge_message_maps, invariant_readout, model_forward, mpnn_forward, EdgeDirection, Model,
};
