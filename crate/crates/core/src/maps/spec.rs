use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    classify_partition, enumerate_partitions_with, BlockKind, SetPartition,
};
use crate::error::{check_cap, contract, Error, Result};
use crate::limits::Limits;

/// Range of a pure (broadcast or sum) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flag {
    /// Only the atoms shared by both domains.
    #[serde(rename = "common")]
    CommonOnly,
    /// Every atom of the tensor's own domain.
    #[serde(rename = "all")]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapMode {
    SameDomain,
    Overlap,
}

/// Sizes of an aligned domain pair: `d_cap` shared atoms, `d1` input atoms,
/// `d2` output atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub d_cap: usize,
    pub d1: usize,
    pub d2: usize,
}

impl Geometry {
    pub fn new(d_cap: usize, d1: usize, d2: usize) -> Result<Self> {
        if d_cap > d1 || d_cap > d2 {
            return Err(contract(format!(
                "common size {d_cap} exceeds a domain size ({d1}, {d2})"
            )));
        }
        Ok(Self { d_cap, d1, d2 })
    }

    pub fn same(d: usize) -> Self {
        Self {
            d_cap: d,
            d1: d,
            d2: d,
        }
    }
}

/// One basis element of the space of equivariant maps from order `k_in` to
/// order `k_out` P-tensors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct BasisMapSpec {
    k_in: usize,
    k_out: usize,
    partition: SetPartition,
    kinds: Vec<BlockKind>,
    /// Indexed by block; `None` exactly for transfer blocks.
    flags: Vec<Option<Flag>>,
}

impl BasisMapSpec {
    /// `pure_flags` lists one flag per broadcast or sum block, in block order.
    pub fn new(
        k_in: usize,
        k_out: usize,
        partition: SetPartition,
        pure_flags: &[Flag],
    ) -> Result<Self> {
        let (kinds, ty) = classify_partition(&partition, k_out, k_in)?;
        if pure_flags.len() != ty.pure_blocks() {
            return Err(contract(format!(
                "{} flags given for {} pure blocks",
                pure_flags.len(),
                ty.pure_blocks()
            )));
        }
        let mut given = pure_flags.iter();
        let flags = kinds
            .iter()
            .map(|k| k.is_pure().then(|| *given.next().expect("counted above")))
            .collect();
        Ok(Self {
            k_in,
            k_out,
            partition,
            kinds,
            flags,
        })
    }

    /// Same-domain spec: every pure block ranges over the whole domain.
    pub fn same_domain(k_in: usize, k_out: usize, partition: SetPartition) -> Result<Self> {
        let (_, ty) = classify_partition(&partition, k_out, k_in)?;
        Self::new(k_in, k_out, partition, &vec![Flag::All; ty.pure_blocks()])
    }

    pub fn k_in(&self) -> usize {
        self.k_in
    }

    pub fn k_out(&self) -> usize {
        self.k_out
    }

    pub fn partition(&self) -> &SetPartition {
        &self.partition
    }

    pub fn kinds(&self) -> &[BlockKind] {
        &self.kinds
    }

    pub fn flag(&self, block: usize) -> Option<Flag> {
        self.flags[block]
    }

    pub fn num_blocks(&self) -> usize {
        self.kinds.len()
    }

    /// Index range of a block's variable under `g`.
    pub(crate) fn block_range(&self, block: usize, g: Geometry) -> usize {
        match (self.kinds[block], self.flags[block]) {
            (BlockKind::Transfer, _) => g.d_cap,
            (_, Some(Flag::CommonOnly)) => g.d_cap,
            (BlockKind::Sum, _) => g.d1,
            (BlockKind::Broadcast, _) => g.d2,
        }
    }

    /// The spec with every flag set to `All`, as used on identical domains.
    pub fn normalized_same_domain(&self) -> Self {
        Self {
            flags: self.flags.iter().map(|f| f.map(|_| Flag::All)).collect(),
            ..self.clone()
        }
    }
}

impl fmt::Display for BasisMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::describe_spec(self))
    }
}

/// Wire form: `{"v":1,"k_in":..,"k_out":..,"rgs":[..],"flags":{"<min elt>":"common"|"all"}}`
/// with 1-based block minimum elements as keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    v: u32,
    k_in: usize,
    k_out: usize,
    rgs: Vec<usize>,
    flags: BTreeMap<usize, Flag>,
}

impl From<BasisMapSpec> for SpecJson {
    fn from(s: BasisMapSpec) -> Self {
        let blocks = s.partition.blocks();
        let flags = s
            .flags
            .iter()
            .zip(&blocks)
            .filter_map(|(f, b)| f.map(|f| (b[0] + 1, f)))
            .collect();
        SpecJson {
            v: 1,
            k_in: s.k_in,
            k_out: s.k_out,
            rgs: s.partition.rgs().to_vec(),
            flags,
        }
    }
}

impl TryFrom<SpecJson> for BasisMapSpec {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        if j.v != 1 {
            return Err(contract(format!("unsupported spec version {}", j.v)));
        }
        let partition = SetPartition::from_rgs(j.rgs)?;
        let (kinds, _) = classify_partition(&partition, j.k_out, j.k_in)?;
        let blocks = partition.blocks();
        let mut pure_flags = Vec::new();
        for (kind, block) in kinds.iter().zip(&blocks) {
            let key = block[0] + 1;
            match (kind.is_pure(), j.flags.get(&key)) {
                (true, Some(&f)) => pure_flags.push(f),
                (true, None) => return Err(contract(format!("missing flag for block {key}"))),
                (false, Some(_)) => {
                    return Err(contract(format!(
                        "transfer block {key} cannot carry a flag"
                    )))
                }
                (false, None) => {}
            }
        }
        BasisMapSpec::new(j.k_in, j.k_out, partition, &pure_flags)
    }
}

/// Every basis spec from order `k_in` to order `k_out`, ordered by partition
/// (lexicographic restricted-growth string), then by flags with
/// `CommonOnly < All` compared block by block.
pub fn enumerate_specs(k_in: usize, k_out: usize, mode: MapMode) -> Result<Vec<BasisMapSpec>> {
    enumerate_specs_with(k_in, k_out, mode, &Limits::default())
}

pub fn enumerate_specs_with(
    k_in: usize,
    k_out: usize,
    mode: MapMode,
    limits: &Limits,
) -> Result<Vec<BasisMapSpec>> {
    check_cap(
        "k_in + k_out",
        (k_in + k_out) as u128,
        limits.max_spec_order as u128,
    )?;
    let mut specs = Vec::new();
    for partition in enumerate_partitions_with(k_in + k_out, limits)? {
        let (_, ty) = classify_partition(&partition, k_out, k_in)?;
        let n = ty.pure_blocks();
        match mode {
            MapMode::SameDomain => specs.push(BasisMapSpec::same_domain(k_in, k_out, partition)?),
            MapMode::Overlap => {
                for mask in 0..1usize << n {
                    let flags: Vec<Flag> = (0..n)
                        .map(|j| {
                            if mask >> (n - 1 - j) & 1 == 1 {
                                Flag::All
                            } else {
                                Flag::CommonOnly
                            }
                        })
                        .collect();
                    specs.push(BasisMapSpec::new(k_in, k_out, partition.clone(), &flags)?);
                }
            }
        }
    }
    Ok(specs)
}
