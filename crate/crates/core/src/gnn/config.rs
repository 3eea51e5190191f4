use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::Nonlinearity;
use crate::tensor::Permutation;

/// Highest tensor order a layer may produce.
pub const MAX_LAYER_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Mpnn,
    Edge,
    Unite,
    Subgraph,
}

/// Which reference domains a layer's output neurons live on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainPolicy {
    /// One singleton per vertex.
    Vertices,
    /// One pair per edge, ascending ids.
    Edges,
    /// The `radius`-hop ball around each vertex, the centre first.
    Ball { radius: usize },
    /// Explicit vertex lists, kept in the given order.
    Subgraphs { subgraphs: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub kind: LayerKind,
    pub order: usize,
    pub channels: usize,
    pub policy: DomainPolicy,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub v: u32,
    pub layers: Vec<LayerConfig>,
}

impl ModelConfig {
    pub fn new(layers: Vec<LayerConfig>) -> Self {
        Self { v: 1, layers }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ModelConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if config.v != 1 {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported config version {}", config.v),
            });
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Mixes `seed` into every layer seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.layers.iter_mut().for_each(|l| l.seed ^= seed);
        out
    }

    /// The same model for a graph whose vertex `v` was renamed to `perm(v)`.
    pub fn relabeled(&self, perm: &Permutation) -> Self {
        let mut out = self.clone();
        for layer in &mut out.layers {
            if let DomainPolicy::Subgraphs { subgraphs } = &mut layer.policy {
                for s in subgraphs.iter_mut() {
                    s.iter_mut()
                        .filter(|v| **v < perm.len())
                        .for_each(|v| *v = perm.apply(*v));
                }
            }
        }
        out
    }

    /// Checks every layer on its own and against the layer feeding it.
    /// The model input is zeroth-order vertex neurons.
    pub fn validate(&self) -> Result<()> {
        let mut prev_vertex_scalars = true;
        for (i, layer) in self.layers.iter().enumerate() {
            let err = |message: String| Error::Config { layer: i, message };
            if layer.order > MAX_LAYER_ORDER {
                return Err(err(format!(
                    "order {} exceeds {MAX_LAYER_ORDER}",
                    layer.order
                )));
            }
            if layer.channels == 0 {
                return Err(err("channels must be at least 1".into()));
            }
            let policy_ok = match layer.kind {
                LayerKind::Mpnn => matches!(layer.policy, DomainPolicy::Vertices),
                LayerKind::Edge => {
                    matches!(layer.policy, DomainPolicy::Vertices | DomainPolicy::Edges)
                }
                LayerKind::Unite => matches!(layer.policy, DomainPolicy::Ball { .. }),
                LayerKind::Subgraph => matches!(layer.policy, DomainPolicy::Subgraphs { .. }),
            };
            if !policy_ok {
                return Err(err(format!(
                    "{:?} layer cannot use policy {:?}",
                    layer.kind, layer.policy
                )));
            }
            if layer.kind == LayerKind::Mpnn {
                if layer.order != 0 {
                    return Err(err("mpnn layers are zeroth order".into()));
                }
                if !prev_vertex_scalars {
                    return Err(err(
                        "mpnn layers need zeroth-order vertex neurons as input".into()
                    ));
                }
            }
            prev_vertex_scalars = layer.order == 0 && layer.policy == DomainPolicy::Vertices;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(kind: LayerKind, order: usize, policy: DomainPolicy) -> LayerConfig {
        LayerConfig {
            kind,
            order,
            channels: 2,
            policy,
            nonlinearity: Nonlinearity::Relu,
            seed: 7,
        }
    }

    #[test]
    fn json_round_trip() {
        let config = ModelConfig::new(vec![
            layer(LayerKind::Mpnn, 0, DomainPolicy::Vertices),
            layer(LayerKind::Unite, 1, DomainPolicy::Ball { radius: 1 }),
            layer(
                LayerKind::Subgraph,
                2,
                DomainPolicy::Subgraphs {
                    subgraphs: vec![vec![0, 1, 2]],
                },
            ),
        ]);
        assert_eq!(ModelConfig::from_json(&config.to_json()).unwrap(), config);
    }

    #[test]
    fn json_defaults_and_format() {
        let text = r#"{"v":1,"layers":[{"kind":"edge","order":1,"channels":3,"policy":{"type":"edges"}}]}"#;
        let config = ModelConfig::from_json(text).unwrap();
        assert_eq!(config.layers[0].nonlinearity, Nonlinearity::Identity);
        assert_eq!(config.layers[0].seed, 0);
        for bad in [
            r#"{"v":2,"layers":[]}"#,
            r#"{"v":1,"layers":[{"kind":"conv","order":1,"channels":3,"policy":{"type":"edges"}}]}"#,
            r#"{"v":1,"layers":[],"extra":0}"#,
            r#"{"v":1,"layers":[{"kind":"unite","order":1,"channels":3,"policy":{"type":"ball"}}]}"#,
        ] {
            assert!(
                matches!(ModelConfig::from_json(bad), Err(Error::Parse { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn validation_names_the_layer() {
        let cases = [
            vec![layer(LayerKind::Edge, 4, DomainPolicy::Edges)],
            vec![LayerConfig {
                channels: 0,
                ..layer(LayerKind::Edge, 1, DomainPolicy::Edges)
            }],
            vec![layer(LayerKind::Unite, 1, DomainPolicy::Edges)],
            vec![layer(LayerKind::Mpnn, 1, DomainPolicy::Vertices)],
        ];
        for layers in cases {
            assert!(matches!(
                ModelConfig::new(layers).validate(),
                Err(Error::Config { layer: 0, .. })
            ));
        }
        let late = ModelConfig::new(vec![
            layer(LayerKind::Edge, 1, DomainPolicy::Edges),
            layer(LayerKind::Mpnn, 0, DomainPolicy::Vertices),
        ]);
        assert!(matches!(
            late.validate(),
            Err(Error::Config { layer: 1, .. })
        ));
    }

    #[test]
    fn relabel_maps_subgraphs() {
        let config = ModelConfig::new(vec![layer(
            LayerKind::Subgraph,
            1,
            DomainPolicy::Subgraphs {
                subgraphs: vec![vec![0, 2]],
            },
        )]);
        let p = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(
            config.relabeled(&p).layers[0].policy,
            DomainPolicy::Subgraphs {
                subgraphs: vec![vec![1, 0]]
            }
        );
    }
}
