use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::scalar::Scalar;
use crate::tensor::{align_domains, DomainAlignment, PTensor, RefDomain};

use super::kernel::apply_map;
use super::spec::BasisMapSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Identity,
    Relu,
}

impl Nonlinearity {
    pub fn apply<S: Scalar>(self, v: S) -> S {
        match self {
            Nonlinearity::Identity => v,
            Nonlinearity::Relu => v.relu(),
        }
    }
}

/// A learnable equivariant layer: one `c_out x c_in` weight matrix per basis
/// spec, a per-channel bias added to every entry, and an entrywise nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantLayerSpec<S> {
    pub specs: Vec<BasisMapSpec>,
    /// Row-major `c_out x c_in`, one per spec.
    pub weights: Vec<Vec<S>>,
    pub bias: Vec<S>,
    pub nonlinearity: Nonlinearity,
    pub c_in: usize,
    pub c_out: usize,
}

impl<S: Scalar> EquivariantLayerSpec<S> {
    pub fn new(
        specs: Vec<BasisMapSpec>,
        weights: Vec<Vec<S>>,
        bias: Vec<S>,
        nonlinearity: Nonlinearity,
        c_in: usize,
        c_out: usize,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(contract("a layer needs at least one spec"));
        }
        if weights.len() != specs.len() {
            return Err(contract(format!(
                "{} weight matrices for {} specs",
                weights.len(),
                specs.len()
            )));
        }
        if weights.iter().any(|w| w.len() != c_in * c_out) {
            return Err(contract(format!(
                "every weight matrix must be {c_out}x{c_in}"
            )));
        }
        if bias.len() != c_out {
            return Err(contract(format!("bias must have {c_out} entries")));
        }
        let (k_in, k_out) = (specs[0].k_in(), specs[0].k_out());
        if specs.iter().any(|s| s.k_in() != k_in || s.k_out() != k_out) {
            return Err(contract("all specs of a layer must share k_in and k_out"));
        }
        Ok(Self {
            specs,
            weights,
            bias,
            nonlinearity,
            c_in,
            c_out,
        })
    }

    pub fn k_in(&self) -> usize {
        self.specs[0].k_in()
    }

    pub fn k_out(&self) -> usize {
        self.specs[0].k_out()
    }

    /// `sum_spec W_spec . apply_map(spec, input)`, without bias or nonlinearity.
    pub fn linear(
        &self,
        input: &PTensor<S>,
        alignment: &DomainAlignment,
        out_domain: &RefDomain,
    ) -> Result<PTensor<S>> {
        if input.channels() != self.c_in {
            return Err(contract(format!(
                "layer expects {} input channels, got {}",
                self.c_in,
                input.channels()
            )));
        }
        let mut out = PTensor::zeros(out_domain.clone(), self.k_out(), self.c_out)?.into_values();
        for (spec, w) in self.specs.iter().zip(&self.weights) {
            let mapped = apply_map(spec, input, alignment, out_domain)?;
            mix_channels(&mut out, mapped.values(), w, self.c_in, self.c_out);
        }
        PTensor::new(out_domain.clone(), self.k_out(), self.c_out, out)
    }

    /// Adds the bias and applies the nonlinearity entrywise.
    pub fn finish(&self, pre: &PTensor<S>) -> PTensor<S> {
        let c = self.c_out;
        let values = pre
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| self.nonlinearity.apply(v + self.bias[i % c]))
            .collect();
        PTensor::new(pre.domain().clone(), pre.order(), c, values).expect("shape unchanged")
    }
}

/// `out[e, a] += sum_b w[a, b] * x[e, b]` for every spatial entry `e`.
fn mix_channels<S: Scalar>(out: &mut [S], x: &[S], w: &[S], c_in: usize, c_out: usize) {
    for (o, xi) in out.chunks_exact_mut(c_out).zip(x.chunks_exact(c_in)) {
        for (a, slot) in o.iter_mut().enumerate() {
            let row = &w[a * c_in..(a + 1) * c_in];
            *slot += row.iter().zip(xi).map(|(&wv, &xv)| wv * xv).sum::<S>();
        }
    }
}

/// `nonlinearity(sum_spec W_spec . apply_map(spec, input) + bias)` on a
/// realigned input.
pub fn layer_forward<S: Scalar>(
    layer: &EquivariantLayerSpec<S>,
    input: &PTensor<S>,
    alignment: &DomainAlignment,
    out_domain: &RefDomain,
) -> Result<PTensor<S>> {
    Ok(layer.finish(&layer.linear(input, alignment, out_domain)?))
}

/// Linear message from `input` (in any domain order) to a neuron on
/// `out_domain` (in any order): realign both, apply, and restore the
/// output's original order.
pub fn message<S: Scalar>(
    layer: &EquivariantLayerSpec<S>,
    input: &PTensor<S>,
    out_domain: &RefDomain,
) -> Result<PTensor<S>> {
    let alignment = align_domains(input.domain(), out_domain)?;
    let realigned = input.permute(&alignment.perm_in)?;
    let out = layer.linear(&realigned, &alignment, &alignment.aligned_out)?;
    let restored = out.permute(&alignment.perm_out.inverse())?;
    debug_assert_eq!(restored.domain(), out_domain);
    Ok(restored)
}
