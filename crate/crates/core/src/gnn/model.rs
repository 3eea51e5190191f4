use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Error, Result};
use crate::maps::{
    apply_map, enumerate_specs, message, BasisMapSpec, EquivariantLayerSpec, MapMode, Nonlinearity,
};
use crate::scalar::Scalar;
use crate::tensor::{align_domains, PTensor, RefDomain};

use super::config::{LayerConfig, LayerKind, ModelConfig};
use super::graph::{build_domains, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeDirection {
    /// Zeroth-order vertex neuron to first-order edge neuron.
    VertexToEdge,
    /// First-order edge neuron to zeroth-order vertex neuron.
    EdgeToVertex,
    /// First-order edge neuron to a first-order edge neuron sharing one vertex.
    EdgeToEdge,
}

/// Equivariant maps available to an edge network for one message direction.
pub fn edge_message_maps(direction: EdgeDirection) -> Vec<BasisMapSpec> {
    let (k_in, k_out) = match direction {
        EdgeDirection::VertexToEdge => (0, 1),
        EdgeDirection::EdgeToVertex => (1, 0),
        EdgeDirection::EdgeToEdge => (1, 1),
    };
    enumerate_specs(k_in, k_out, MapMode::Overlap).expect("small orders")
}

/// Classical message passing: `f_i <- eta(W . sum_{j ~ i} f_j + bias)`.
/// `w` is row-major `c_out x c_in`.
pub fn mpnn_forward<S: Scalar>(
    graph: &Graph,
    features: &[Vec<S>],
    w: &[S],
    bias: &[S],
    nonlinearity: Nonlinearity,
) -> Result<Vec<Vec<S>>> {
    if features.len() != graph.num_vertices() {
        return Err(contract(format!(
            "{} feature rows for {} vertices",
            features.len(),
            graph.num_vertices()
        )));
    }
    let c_in = features.first().map_or(0, Vec::len);
    if features.iter().any(|f| f.len() != c_in) {
        return Err(contract("feature rows differ in length"));
    }
    let c_out = bias.len();
    if w.len() != c_in * c_out {
        return Err(contract(format!("weights must be {c_out}x{c_in}")));
    }
    Ok((0..graph.num_vertices())
        .map(|i| {
            let mut agg = vec![S::ZERO; c_in];
            for &j in graph.neighbors(i) {
                agg.iter_mut().zip(&features[j]).for_each(|(a, &f)| *a += f);
            }
            (0..c_out)
                .map(|o| {
                    let row = &w[o * c_in..(o + 1) * c_in];
                    let z = row.iter().zip(&agg).map(|(&a, &b)| a * b).sum::<S>() + bias[o];
                    nonlinearity.apply(z)
                })
                .collect()
        })
        .collect())
}

/// Sum over neurons of every order-`k` to order-0 contraction, channel by
/// channel. The result has `B(k) * channels` entries, grouped by contraction.
pub fn invariant_readout<S: Scalar>(
    neurons: &[PTensor<S>],
    order: usize,
    channels: usize,
) -> Result<Vec<S>> {
    let specs = enumerate_specs(order, 0, MapMode::SameDomain)?;
    let mut out = vec![S::ZERO; specs.len() * channels];
    for n in neurons {
        if n.order() != order || n.channels() != channels {
            return Err(contract(format!(
                "readout expects order {order} with {channels} channels, got order {} with {}",
                n.order(),
                n.channels()
            )));
        }
        let alignment = align_domains(n.domain(), n.domain())?;
        for (s, spec) in specs.iter().enumerate() {
            let v = apply_map(spec, n, &alignment, n.domain())?;
            for (slot, &x) in out[s * channels..(s + 1) * channels]
                .iter_mut()
                .zip(v.values())
            {
                *slot += x;
            }
        }
    }
    Ok(out)
}

/// A configured model with its weights drawn.
#[derive(Debug, Clone)]
pub struct Model<S> {
    config: ModelConfig,
    input_channels: usize,
    layers: Vec<EquivariantLayerSpec<S>>,
}

fn init_layer<S: Scalar>(
    cfg: &LayerConfig,
    k_in: usize,
    c_in: usize,
) -> Result<EquivariantLayerSpec<S>> {
    let specs = enumerate_specs(k_in, cfg.order, MapMode::Overlap)?;
    let c_out = cfg.channels;
    let fan_in = c_in * specs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights = specs
        .iter()
        .map(|_| {
            (0..c_in * c_out)
                .map(|_| S::sample_weight(&mut rng, fan_in))
                .collect()
        })
        .collect();
    let bias = (0..c_out)
        .map(|_| S::sample_weight(&mut rng, fan_in))
        .collect();
    EquivariantLayerSpec::new(specs, weights, bias, cfg.nonlinearity, c_in, c_out)
}

impl<S: Scalar> Model<S> {
    /// Validates `config` and draws every layer's weights from its seed.
    pub fn new(config: &ModelConfig, input_channels: usize) -> Result<Self> {
        if input_channels == 0 {
            return Err(contract("input features need at least one channel"));
        }
        config.validate()?;
        let mut layers = Vec::with_capacity(config.layers.len());
        let (mut k, mut c) = (0, input_channels);
        for cfg in &config.layers {
            layers.push(init_layer(cfg, k, c)?);
            (k, c) = (cfg.order, cfg.channels);
        }
        Ok(Self {
            config: config.clone(),
            input_channels,
            layers,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[EquivariantLayerSpec<S>] {
        &self.layers
    }

    /// Order and channel count of the final neurons.
    pub fn output_shape(&self) -> (usize, usize) {
        self.config
            .layers
            .last()
            .map_or((0, self.input_channels), |l| (l.order, l.channels))
    }

    /// Neurons of the last layer.
    pub fn neurons(&self, graph: &Graph, features: &[Vec<S>]) -> Result<Vec<PTensor<S>>> {
        if features.len() != graph.num_vertices() {
            return Err(contract(format!(
                "{} feature rows for {} vertices",
                features.len(),
                graph.num_vertices()
            )));
        }
        let mut neurons = features
            .iter()
            .enumerate()
            .map(|(v, f)| {
                if f.len() != self.input_channels {
                    return Err(contract(format!(
                        "vertex {v} has {} features, expected {}",
                        f.len(),
                        self.input_channels
                    )));
                }
                PTensor::new(RefDomain::from_ids([v as u64])?, 0, f.len(), f.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, (cfg, layer)) in self.config.layers.iter().zip(&self.layers).enumerate() {
            neurons = self.layer_forward(i, cfg, layer, graph, &neurons)?;
        }
        Ok(neurons)
    }

    /// Graph embedding: the invariant readout of the last layer.
    pub fn forward(&self, graph: &Graph, features: &[Vec<S>]) -> Result<Vec<S>> {
        let (order, channels) = self.output_shape();
        invariant_readout(&self.neurons(graph, features)?, order, channels)
    }

    fn layer_forward(
        &self,
        index: usize,
        cfg: &LayerConfig,
        layer: &EquivariantLayerSpec<S>,
        graph: &Graph,
        input: &[PTensor<S>],
    ) -> Result<Vec<PTensor<S>>> {
        if cfg.kind == LayerKind::Mpnn {
            let features: Vec<Vec<S>> = input.iter().map(|n| n.values().to_vec()).collect();
            let out = mpnn_forward(
                graph,
                &features,
                &layer.weights[0],
                &layer.bias,
                layer.nonlinearity,
            )?;
            return out
                .into_iter()
                .enumerate()
                .map(|(v, f)| PTensor::new(RefDomain::from_ids([v as u64])?, 0, f.len(), f))
                .collect();
        }
        let domains = build_domains(graph, &cfg.policy).map_err(|e| Error::Config {
            layer: index,
            message: e.to_string(),
        })?;
        domains
            .iter()
            .enumerate()
            .map(|(o, domain)| {
                let contributors: Vec<&PTensor<S>> = input
                    .iter()
                    .filter(|n| match cfg.kind {
                        LayerKind::Unite => n.domain().is_subset_of(domain),
                        _ => n.domain().intersects(domain),
                    })
                    .collect();
                if contributors.is_empty() {
                    return Err(Error::IsolatedNeuron {
                        layer: index,
                        neuron: o,
                    });
                }
                if cfg.kind == LayerKind::Unite {
                    let covered = domain
                        .atoms()
                        .iter()
                        .all(|a| contributors.iter().any(|n| n.domain().contains(*a)));
                    if !covered {
                        return Err(Error::Config {
                            layer: index,
                            message: format!("inputs inside {domain} do not cover it"),
                        });
                    }
                }
                let mut acc: Option<PTensor<S>> = None;
                for n in contributors {
                    let m = message(layer, n, domain)?;
                    acc = Some(match acc {
                        None => m,
                        Some(a) => add(&a, &m),
                    });
                }
                Ok(layer.finish(&acc.expect("at least one contributor")))
            })
            .collect()
    }
}

fn add<S: Scalar>(a: &PTensor<S>, b: &PTensor<S>) -> PTensor<S> {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| x + y)
        .collect();
    PTensor::new(a.domain().clone(), a.order(), a.channels(), values).expect("same shape")
}

/// Builds the model for `config` and returns the graph embedding.
pub fn model_forward<S: Scalar>(
    graph: &Graph,
    features: &[Vec<S>],
    config: &ModelConfig,
) -> Result<Vec<S>> {
    let c0 = features.first().map_or(1, Vec::len);
    Model::new(config, c0)?.forward(graph, features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{parse_graph, DomainPolicy};
    use crate::maps::{layer_forward, realize_matrix, Geometry};
    use crate::tensor::Permutation;
    use rand::Rng;

    fn p3() -> Graph {
        parse_graph("3 2\n0 1\n1 2\n").unwrap()
    }

    fn cfg(
        kind: LayerKind,
        order: usize,
        channels: usize,
        policy: DomainPolicy,
        seed: u64,
    ) -> LayerConfig {
        LayerConfig {
            kind,
            order,
            channels,
            policy,
            nonlinearity: Nonlinearity::Relu,
            seed,
        }
    }

    fn three_kinds() -> ModelConfig {
        ModelConfig::new(vec![
            cfg(LayerKind::Mpnn, 0, 3, DomainPolicy::Vertices, 1),
            cfg(LayerKind::Edge, 1, 3, DomainPolicy::Edges, 2),
            cfg(LayerKind::Unite, 1, 2, DomainPolicy::Ball { radius: 1 }, 3),
        ])
    }

    #[test]
    fn mpnn_examples() {
        let g = p3();
        let f = vec![vec![1i64], vec![2], vec![3]];
        let once = mpnn_forward(&g, &f, &[1], &[0], Nonlinearity::Identity).unwrap();
        assert_eq!(once, vec![vec![2], vec![4], vec![2]]);
        let twice = mpnn_forward(&g, &f, &[2], &[0], Nonlinearity::Identity).unwrap();
        assert_eq!(twice, vec![vec![4], vec![8], vec![4]]);
        assert!(mpnn_forward(&g, &f, &[1, 1], &[0], Nonlinearity::Identity).is_err());
    }

    #[test]
    fn mpnn_relabels_with_the_graph() {
        let g = p3();
        let f = vec![vec![1i64, -1], vec![2, 5], vec![3, 0]];
        let w = [1, 2, -1, 3];
        let out = mpnn_forward(&g, &f, &w, &[1, -2], Nonlinearity::Relu).unwrap();
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let mut pf = vec![vec![]; 3];
        for v in 0..3 {
            pf[p.apply(v)] = f[v].clone();
        }
        let pout = mpnn_forward(
            &g.relabeled(&p).unwrap(),
            &pf,
            &w,
            &[1, -2],
            Nonlinearity::Relu,
        )
        .unwrap();
        for v in 0..3 {
            assert_eq!(pout[p.apply(v)], out[v]);
        }
    }

    #[test]
    fn mpnn_is_the_zeroth_order_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(1..8);
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.gen_bool(0.4))
                .collect();
            let g = Graph::new(n, edges).unwrap();
            let f: Vec<Vec<i64>> = (0..n)
                .map(|_| (0..2).map(|_| rng.gen_range(-5..=5)).collect())
                .collect();
            let specs = enumerate_specs(0, 0, MapMode::Overlap).unwrap();
            let w: Vec<i64> = (0..6).map(|_| rng.gen_range(-2..=2)).collect();
            let layer = EquivariantLayerSpec::new(
                specs,
                vec![w.clone()],
                vec![1, 0, -1],
                Nonlinearity::Relu,
                2,
                3,
            )
            .unwrap();
            let direct = mpnn_forward(&g, &f, &w, &[1, 0, -1], Nonlinearity::Relu).unwrap();
            for (v, want) in direct.iter().enumerate() {
                let d = RefDomain::from_ids([v as u64]).unwrap();
                let mut agg = vec![0i64; 2];
                for &j in g.neighbors(v) {
                    agg[0] += f[j][0];
                    agg[1] += f[j][1];
                }
                let x = PTensor::new(d.clone(), 0, 2, agg).unwrap();
                let a = align_domains(&d, &d).unwrap();
                assert_eq!(
                    layer_forward(&layer, &x, &a, &d).unwrap().values(),
                    &want[..]
                );
            }
        }
    }

    #[test]
    fn edge_map_counts() {
        assert_eq!(edge_message_maps(EdgeDirection::VertexToEdge).len(), 2);
        assert_eq!(edge_message_maps(EdgeDirection::EdgeToVertex).len(), 2);
        let ee = edge_message_maps(EdgeDirection::EdgeToEdge);
        assert_eq!(ee.len(), 5);
        let g = Geometry::new(1, 2, 2).unwrap();
        let mut distinct: Vec<_> = ee
            .iter()
            .map(|s| realize_matrix(s, g).unwrap().data)
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn readout_examples() {
        let d = RefDomain::from_ids([4, 9]).unwrap();
        let first = PTensor::new(d.clone(), 1, 1, vec![3i64, 5]).unwrap();
        assert_eq!(invariant_readout(&[first], 1, 1).unwrap(), vec![8]);
        let second = PTensor::new(d.clone(), 2, 1, vec![1i64, 2, 3, 4]).unwrap();
        let mut r = invariant_readout(&[second], 2, 1).unwrap();
        r.sort();
        assert_eq!(r, vec![5, 10]);
        let bad = PTensor::new(d, 1, 2, vec![0i64; 4]).unwrap();
        assert!(invariant_readout(&[bad], 1, 1).is_err());
        assert_eq!(invariant_readout::<i64>(&[], 3, 2).unwrap().len(), 5 * 2);
    }

    #[test]
    fn zero_layers_sum_features() {
        let f = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let e = model_forward(&p3(), &f, &ModelConfig::new(vec![])).unwrap();
        assert_eq!(e, vec![9.0, 12.0]);
    }

    #[test]
    fn three_kinds_on_path() {
        let f = vec![vec![1.0], vec![-0.5], vec![2.0]];
        let e = model_forward(&p3(), &f, &three_kinds()).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn unite_domain_is_the_ball() {
        let config = ModelConfig::new(vec![cfg(
            LayerKind::Unite,
            1,
            1,
            DomainPolicy::Ball { radius: 1 },
            0,
        )]);
        let model = Model::<i64>::new(&config, 1).unwrap();
        let out = model.neurons(&p3(), &[vec![1], vec![2], vec![3]]).unwrap();
        assert_eq!(out[1].domain(), &RefDomain::from_ids([1, 0, 2]).unwrap());
    }

    #[test]
    fn single_vertex_unite_is_a_self_message() {
        let g = Graph::new(1, []).unwrap();
        let config = ModelConfig::new(vec![LayerConfig {
            nonlinearity: Nonlinearity::Identity,
            ..cfg(LayerKind::Unite, 0, 2, DomainPolicy::Ball { radius: 2 }, 5)
        }]);
        let model = Model::<i64>::new(&config, 1).unwrap();
        let out = model.neurons(&g, &[vec![3]]).unwrap();
        let layer = &model.layers()[0];
        let expected: Vec<i64> = (0..2)
            .map(|o| layer.weights[0][o] * 3 + layer.bias[o])
            .collect();
        assert_eq!(out[0].values(), &expected[..]);
    }

    #[test]
    fn isolated_vertex_has_no_edge_contributors() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let config = ModelConfig::new(vec![
            cfg(LayerKind::Edge, 1, 1, DomainPolicy::Edges, 0),
            cfg(LayerKind::Unite, 1, 1, DomainPolicy::Ball { radius: 1 }, 0),
        ]);
        let err = model_forward(&g, &[vec![1i64], vec![1], vec![1]], &config).unwrap_err();
        assert_eq!(
            err,
            Error::IsolatedNeuron {
                layer: 1,
                neuron: 2
            }
        );
    }

    #[test]
    fn subgraph_layer_runs_and_relabels() {
        let g = parse_graph("4 4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
        let config = ModelConfig::new(vec![
            cfg(LayerKind::Edge, 1, 2, DomainPolicy::Edges, 1),
            cfg(
                LayerKind::Subgraph,
                2,
                2,
                DomainPolicy::Subgraphs {
                    subgraphs: vec![vec![0, 1, 2, 3], vec![2, 3]],
                },
                2,
            ),
        ]);
        let f: Vec<Vec<i64>> = vec![vec![1], vec![-2], vec![3], vec![0]];
        let base = model_forward(&g, &f, &config).unwrap();
        let p = Permutation::new(vec![3, 1, 0, 2]).unwrap();
        let mut pf = vec![vec![]; 4];
        for v in 0..4 {
            pf[p.apply(v)] = f[v].clone();
        }
        let moved = model_forward(&g.relabeled(&p).unwrap(), &pf, &config.relabeled(&p)).unwrap();
        assert_eq!(base, moved);
    }

    #[test]
    fn readout_is_relabeling_invariant_in_integer_mode() {
        let g = parse_graph("5 5\n0 1\n1 2\n2 3\n3 4\n1 3\n").unwrap();
        let f: Vec<Vec<i64>> = (0..5).map(|v| vec![v as i64 - 2, 1]).collect();
        let config = three_kinds();
        let base = model_forward(&g, &f, &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = Permutation::random(5, &mut rng);
            let mut pf = vec![vec![]; 5];
            for v in 0..5 {
                pf[p.apply(v)] = f[v].clone();
            }
            assert_eq!(
                model_forward(&g.relabeled(&p).unwrap(), &pf, &config).unwrap(),
                base
            );
        }
    }

    #[test]
    fn weights_follow_the_seed() {
        let a = Model::<f64>::new(&three_kinds(), 1).unwrap();
        let b = Model::<f64>::new(&three_kinds(), 1).unwrap();
        let c = Model::<f64>::new(&three_kinds().reseeded(99), 1).unwrap();
        assert_eq!(a.layers(), b.layers());
        assert_ne!(a.layers(), c.layers());
    }
}
