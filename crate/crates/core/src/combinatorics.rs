//! Set partitions, Bell numbers, and the counting formulas for spaces of
//! equivariant maps.
//!
//! Partitions of `{0, .., m-1}` are stored as restricted-growth strings: the
//! label of element `i` is at most one more than the largest label among
//! elements `0..i`. Block labels therefore number blocks in order of their
//! smallest element, and enumeration in lexicographic label order visits
//! every partition exactly once.
//!
//! When a partition describes a map between tensors, elements `0..k_out` are
//! output modes and `k_out..k_out + k_in` are input modes.

use std::fmt;
use std::sync::OnceLock;

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{check_cap, contract, Error, Result};
use crate::limits::Limits;

/// Exact Bell numbers `B(0..=max)`.
#[derive(Debug, Clone)]
pub struct BellTable {
    values: Vec<BigUint>,
}

impl BellTable {
    /// Builds the table through the recurrence `B(m+1) = sum_j C(m,j) B(j)`.
    pub fn new(max: usize) -> Self {
        let mut values = vec![BigUint::one()];
        for m in 0..max {
            let next = (0..=m)
                .map(|j| binomial(BigUint::from(m), BigUint::from(j)) * &values[j])
                .sum();
            values.push(next);
        }
        Self { values }
    }

    pub fn max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, m: usize) -> Option<&BigUint> {
        self.values.get(m)
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }
}

fn shared_table() -> &'static BellTable {
    static TABLE: OnceLock<BellTable> = OnceLock::new();
    TABLE.get_or_init(|| BellTable::new(Limits::default().max_bell))
}

/// `B(m)`, the number of set partitions of an `m`-element set.
pub fn bell(m: usize) -> Result<BigUint> {
    bell_with(m, &Limits::default())
}

pub fn bell_with(m: usize, limits: &Limits) -> Result<BigUint> {
    check_cap("bell argument", m as u128, limits.max_bell as u128)?;
    match shared_table().get(m) {
        Some(b) => Ok(b.clone()),
        None => Ok(BellTable::new(m).values[m].clone()),
    }
}

/// A partition of `{0, .., m-1}` in restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    rgs: Vec<usize>,
    num_blocks: usize,
}

impl SetPartition {
    /// Validates a restricted-growth string.
    pub fn from_rgs(rgs: Vec<usize>) -> Result<Self> {
        let mut next_label = 0;
        for (i, &label) in rgs.iter().enumerate() {
            if label > next_label {
                return Err(contract(format!(
                    "label {label} at position {i} breaks restricted growth"
                )));
            }
            if label == next_label {
                next_label += 1;
            }
        }
        Ok(Self {
            rgs,
            num_blocks: next_label,
        })
    }

    /// Builds a partition from explicit blocks of 0-based elements.
    pub fn from_blocks(m: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut owner = vec![usize::MAX; m];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(contract("empty block"));
            }
            for &e in block {
                if e >= m {
                    return Err(contract(format!("element {e} outside 0..{m}")));
                }
                if owner[e] != usize::MAX {
                    return Err(contract(format!("element {e} appears twice")));
                }
                owner[e] = b;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(contract("blocks do not cover every element"));
        }
        // Relabel blocks in order of first appearance.
        let mut relabel = vec![usize::MAX; blocks.len()];
        let mut next = 0;
        let rgs = owner
            .iter()
            .map(|&b| {
                if relabel[b] == usize::MAX {
                    relabel[b] = next;
                    next += 1;
                }
                relabel[b]
            })
            .collect();
        Ok(Self {
            rgs,
            num_blocks: next,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.rgs.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn rgs(&self) -> &[usize] {
        &self.rgs
    }

    /// Block label of element `e`.
    pub fn block_of(&self, e: usize) -> usize {
        self.rgs[e]
    }

    /// Blocks as sorted element lists, ordered by smallest element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.num_blocks];
        for (e, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(e);
        }
        blocks
    }
}

impl fmt::Display for SetPartition {
    /// Writes the partition with 1-based elements, e.g. `{{1,3},{2}}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self
            .blocks()
            .iter()
            .map(|b| format!("{{{}}}", b.iter().map(|e| e + 1).join(",")))
            .join(",");
        write!(f, "{{{body}}}")
    }
}

/// Advances a restricted-growth string to its lexicographic successor.
/// `prefix_max[i]` caches `max(rgs[0..=i])`.
fn next_rgs(rgs: &mut [usize], prefix_max: &mut [usize]) -> bool {
    let m = rgs.len();
    for i in (1..m).rev() {
        if rgs[i] <= prefix_max[i - 1] {
            rgs[i] += 1;
            prefix_max[i] = prefix_max[i - 1].max(rgs[i]);
            for j in i + 1..m {
                rgs[j] = 0;
                prefix_max[j] = prefix_max[i];
            }
            return true;
        }
    }
    false
}

/// Calls `visit` on every restricted-growth string of length `m` in
/// lexicographic order, without allocating per partition.
pub fn for_each_rgs(m: usize, mut visit: impl FnMut(&[usize])) {
    let mut rgs = vec![0; m];
    let mut prefix_max = vec![0; m];
    loop {
        visit(&rgs);
        if !next_rgs(&mut rgs, &mut prefix_max) {
            break;
        }
    }
}

/// All partitions of an `m`-element set in lexicographic restricted-growth order.
pub fn enumerate_partitions(m: usize) -> Result<Vec<SetPartition>> {
    enumerate_partitions_with(m, &Limits::default())
}

pub fn enumerate_partitions_with(m: usize, limits: &Limits) -> Result<Vec<SetPartition>> {
    check_cap(
        "partition size",
        m as u128,
        limits.max_partition_elements as u128,
    )?;
    let mut out = Vec::new();
    for_each_rgs(m, |rgs| {
        let num_blocks = rgs.iter().max().map_or(0, |&x| x + 1);
        out.push(SetPartition {
            rgs: rgs.to_vec(),
            num_blocks,
        });
    });
    Ok(out)
}

/// Role of a block when a partition describes a map from order-`k_in` to
/// order-`k_out` tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// Output modes only: the result is broadcast along a diagonal.
    Broadcast,
    /// Output and input modes: a diagonal is transferred.
    Transfer,
    /// Input modes only: the input is summed along a diagonal.
    Sum,
}

impl BlockKind {
    pub fn is_pure(self) -> bool {
        self != BlockKind::Transfer
    }
}

/// Block counts `(p1, p2, p3)` = (broadcast, transfer, sum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PartitionType {
    pub p1: usize,
    pub p2: usize,
    pub p3: usize,
}

impl PartitionType {
    pub fn pure_blocks(&self) -> usize {
        self.p1 + self.p3
    }
}

fn kind_of(has_out: bool, has_in: bool) -> BlockKind {
    match (has_out, has_in) {
        (true, false) => BlockKind::Broadcast,
        (false, true) => BlockKind::Sum,
        _ => BlockKind::Transfer,
    }
}

/// Labels every block of `partition` and counts the three kinds.
pub fn classify_partition(
    partition: &SetPartition,
    k_out: usize,
    k_in: usize,
) -> Result<(Vec<BlockKind>, PartitionType)> {
    if partition.num_elements() != k_out + k_in {
        return Err(contract(format!(
            "partition has {} elements but k_out + k_in = {}",
            partition.num_elements(),
            k_out + k_in
        )));
    }
    let mut has_out = vec![false; partition.num_blocks()];
    let mut has_in = vec![false; partition.num_blocks()];
    for (e, &b) in partition.rgs.iter().enumerate() {
        if e < k_out {
            has_out[b] = true;
        } else {
            has_in[b] = true;
        }
    }
    let mut ty = PartitionType::default();
    let kinds = has_out
        .iter()
        .zip(&has_in)
        .map(|(&o, &i)| {
            let kind = kind_of(o, i);
            match kind {
                BlockKind::Broadcast => ty.p1 += 1,
                BlockKind::Transfer => ty.p2 += 1,
                BlockKind::Sum => ty.p3 += 1,
            }
            kind
        })
        .collect();
    Ok((kinds, ty))
}

/// Number of equivariant maps between P-tensors on the same domain.
pub fn count_same_domain(k_in: usize, k_out: usize) -> Result<BigUint> {
    bell(k_in + k_out)
}

pub fn count_same_domain_with(k_in: usize, k_out: usize, limits: &Limits) -> Result<BigUint> {
    bell_with(k_in + k_out, limits)
}

/// Closed form `sum_{p,q} C(k_in,p) C(k_out,q) B(p+q) B(k_in-p) B(k_out-q)`.
pub fn count_overlap_closed_form(k_in: usize, k_out: usize, limits: &Limits) -> Result<BigUint> {
    let mut total = BigUint::zero();
    for p in 0..=k_in {
        for q in 0..=k_out {
            total += binomial(BigUint::from(k_in), BigUint::from(p))
                * binomial(BigUint::from(k_out), BigUint::from(q))
                * bell_with(p + q, limits)?
                * bell_with(k_in - p, limits)?
                * bell_with(k_out - q, limits)?;
        }
    }
    Ok(total)
}

/// `sum over partitions P of 2^(p1 + p3)`, by direct enumeration.
pub fn count_overlap_variant_sum(k_in: usize, k_out: usize, limits: &Limits) -> Result<BigUint> {
    let m = k_in + k_out;
    check_cap(
        "partition size",
        m as u128,
        limits.max_partition_elements as u128,
    )?;
    let mut total = BigUint::zero();
    let mut has_out = vec![false; m];
    let mut has_in = vec![false; m];
    for_each_rgs(m, |rgs| {
        has_out.iter_mut().for_each(|x| *x = false);
        has_in.iter_mut().for_each(|x| *x = false);
        let mut blocks = 0;
        for (e, &b) in rgs.iter().enumerate() {
            blocks = blocks.max(b + 1);
            if e < k_out {
                has_out[b] = true;
            } else {
                has_in[b] = true;
            }
        }
        let pure = (0..blocks).filter(|&b| !(has_out[b] && has_in[b])).count();
        total += BigUint::one() << pure;
    });
    Ok(total)
}

/// Number of equivariant maps between P-tensors whose domains partially
/// overlap.
///
/// The closed form is cross-checked against the variant sum whenever the
/// partitions of `k_in + k_out` elements can be enumerated within `limits`.
pub fn count_overlap(k_in: usize, k_out: usize) -> Result<BigUint> {
    count_overlap_with(k_in, k_out, &Limits::default())
}

pub fn count_overlap_with(k_in: usize, k_out: usize, limits: &Limits) -> Result<BigUint> {
    let closed = count_overlap_closed_form(k_in, k_out, limits)?;
    if k_in + k_out <= limits.max_partition_elements {
        let by_variants = count_overlap_variant_sum(k_in, k_out, limits)?;
        if by_variants != closed {
            return Err(Error::Consistency(format!(
                "overlap count ({k_in},{k_out}): closed form {closed} != variant sum {by_variants}"
            )));
        }
    }
    Ok(closed)
}

/// `(1/z!) sum_{sigma in S_z} fix(sigma)^k`, by enumerating `S_z`.
pub fn avg_fixed_power(z: usize, k: u32) -> Result<BigRational> {
    avg_fixed_power_with(z, k, &Limits::default())
}

pub fn avg_fixed_power_with(z: usize, k: u32, limits: &Limits) -> Result<BigRational> {
    if z == 0 {
        return Err(contract("avg_fixed_power needs z >= 1"));
    }
    let order = factorial_capped(z, limits.max_group_elements)?;
    let mut total = BigInt::zero();
    for fixed in fixed_point_counts(z) {
        total += BigInt::from(fixed).pow(k);
    }
    Ok(BigRational::new(total, BigInt::from(order)))
}

/// `z!`, failing once it exceeds `cap`.
pub(crate) fn factorial_capped(z: usize, cap: u128) -> Result<u128> {
    let mut acc: u128 = 1;
    for i in 2..=z as u128 {
        acc = acc.saturating_mul(i);
        if acc > cap {
            return Err(Error::Size {
                what: "group order",
                value: acc,
                cap,
            });
        }
    }
    Ok(acc)
}

/// Fixed-point count of every permutation of `0..z`, one entry per permutation.
pub(crate) fn fixed_point_counts(z: usize) -> Vec<usize> {
    (0..z)
        .permutations(z)
        .map(|p| p.iter().enumerate().filter(|&(i, &x)| i == x).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(m: usize) -> Vec<Vec<Vec<usize>>> {
        enumerate_partitions(m)
            .unwrap()
            .iter()
            .map(SetPartition::blocks)
            .collect()
    }

    #[test]
    fn bell_values() {
        assert_eq!(bell(0).unwrap(), BigUint::from(1u32));
        assert_eq!(bell(4).unwrap(), BigUint::from(15u32));
        assert_eq!(bell(6).unwrap(), BigUint::from(203u32));
        assert_eq!(
            bell(30).unwrap(),
            "846749014511809332450147".parse::<BigUint>().unwrap()
        );
        assert!(matches!(bell(31), Err(Error::Size { .. })));
    }

    #[test]
    fn raised_bell_cap() {
        let limits = Limits {
            max_bell: 40,
            ..Limits::default()
        };
        let b31 = bell_with(31, &limits).unwrap();
        assert_eq!(b31, BellTable::new(31).values()[31]);
    }

    #[test]
    fn bell_table_is_monotone() {
        let t = BellTable::new(20);
        assert!(t.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn enumerate_small() {
        assert_eq!(parts(0), vec![Vec::<Vec<usize>>::new()]);
        assert_eq!(parts(2), vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]);
        assert_eq!(enumerate_partitions(5).unwrap().len(), 52);
        assert!(matches!(enumerate_partitions(13), Err(Error::Size { .. })));
    }

    #[test]
    fn enumeration_is_strictly_lexicographic() {
        let all = enumerate_partitions(6).unwrap();
        assert!(all.windows(2).all(|w| w[0].rgs() < w[1].rgs()));
    }

    #[test]
    fn rgs_validation() {
        assert!(SetPartition::from_rgs(vec![0, 2]).is_err());
        assert!(SetPartition::from_rgs(vec![1]).is_err());
        let p = SetPartition::from_rgs(vec![0, 1, 0, 2, 1, 1]).unwrap();
        assert_eq!(p.to_string(), "{{1,3},{2,5,6},{4}}");
    }

    #[test]
    fn from_blocks_rejects_bad_input() {
        assert!(SetPartition::from_blocks(3, &[vec![0, 1]]).is_err());
        assert!(SetPartition::from_blocks(2, &[vec![0, 1], vec![1]]).is_err());
        assert!(SetPartition::from_blocks(2, &[vec![0, 2]]).is_err());
        assert!(SetPartition::from_blocks(1, &[vec![0], vec![]]).is_err());
    }

    #[test]
    fn classify_worked_example() {
        // {{1,3},{2,5,6},{4}} with three output and three input modes.
        let p = SetPartition::from_blocks(6, &[vec![0, 2], vec![1, 4, 5], vec![3]]).unwrap();
        let (kinds, ty) = classify_partition(&p, 3, 3).unwrap();
        assert_eq!(
            kinds,
            vec![BlockKind::Broadcast, BlockKind::Transfer, BlockKind::Sum]
        );
        assert_eq!(
            ty,
            PartitionType {
                p1: 1,
                p2: 1,
                p3: 1
            }
        );
    }

    #[test]
    fn classify_extremes() {
        let singles = SetPartition::from_rgs((0..5).collect()).unwrap();
        let (_, ty) = classify_partition(&singles, 2, 3).unwrap();
        assert_eq!(
            ty,
            PartitionType {
                p1: 2,
                p2: 0,
                p3: 3
            }
        );
        let whole = SetPartition::from_rgs(vec![0; 5]).unwrap();
        let (_, ty) = classify_partition(&whole, 2, 3).unwrap();
        assert_eq!(
            ty,
            PartitionType {
                p1: 0,
                p2: 1,
                p3: 0
            }
        );
        assert!(matches!(
            classify_partition(&whole, 2, 2),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn same_domain_counts() {
        assert_eq!(count_same_domain(2, 2).unwrap(), BigUint::from(15u32));
        assert_eq!(count_same_domain(0, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(count_same_domain(3, 3).unwrap(), BigUint::from(203u32));
    }

    #[test]
    fn overlap_counts() {
        // Variant sums by hand: (1,1): 2^0 + 2^2.
        assert_eq!(count_overlap(0, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(count_overlap(1, 1).unwrap(), BigUint::from(5u32));
        assert_eq!(count_overlap(2, 2).unwrap(), BigUint::from(63u32));
        assert_eq!(count_overlap(1, 2).unwrap(), BigUint::from(17u32));
        assert_eq!(count_overlap(3, 3).unwrap(), BigUint::from(1277u32));
    }

    #[test]
    fn overlap_count_beyond_enumeration_cap_uses_closed_form() {
        // 7 + 7 elements cannot be enumerated under the default cap.
        let n = count_overlap(7, 7).unwrap();
        assert!(n > BigUint::from(1277u32));
    }

    #[test]
    fn avg_fixed_power_examples() {
        let r = |n: i64| BigRational::from_integer(BigInt::from(n));
        assert_eq!(avg_fixed_power(3, 3).unwrap(), r(5));
        assert_eq!(avg_fixed_power(1, 3).unwrap(), r(1));
        assert_eq!(avg_fixed_power(1, 2).unwrap(), r(1));
        assert!(avg_fixed_power(0, 1).is_err());
        let tight = Limits {
            max_group_elements: 100,
            ..Limits::default()
        };
        assert!(matches!(
            avg_fixed_power_with(6, 1, &tight),
            Err(Error::Size { .. })
        ));
    }
}
