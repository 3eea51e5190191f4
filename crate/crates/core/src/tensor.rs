//! Atoms, ordered reference domains, permutations, and the P-tensor container.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, contract, Error, Result};
use crate::limits::Limits;
use crate::scalar::Scalar;

/// An element of the global universe that permutations act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Atom(pub u64);

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered list of distinct atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct RefDomain {
    atoms: Vec<Atom>,
}

impl RefDomain {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(contract(format!("atom {a} repeated in reference domain")));
            }
        }
        Ok(Self { atoms })
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u64>) -> Result<Self> {
        Self::new(ids.into_iter().map(Atom).collect())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn position(&self, atom: Atom) -> Option<usize> {
        self.atoms.iter().position(|&a| a == atom)
    }

    pub fn contains(&self, atom: Atom) -> bool {
        self.atoms.contains(&atom)
    }

    /// Whether both domains hold the same atoms, in any order.
    pub fn same_set(&self, other: &RefDomain) -> bool {
        self.len() == other.len() && self.atoms.iter().all(|&a| other.contains(a))
    }

    pub fn is_subset_of(&self, other: &RefDomain) -> bool {
        self.atoms.iter().all(|&a| other.contains(a))
    }

    pub fn intersects(&self, other: &RefDomain) -> bool {
        self.atoms.iter().any(|&a| other.contains(a))
    }

    /// The domain reordered by `tau`: position `i` moves to `tau(i)`.
    pub fn permuted(&self, tau: &Permutation) -> Result<RefDomain> {
        if tau.len() != self.len() {
            return Err(contract(format!(
                "permutation of length {} applied to domain of size {}",
                tau.len(),
                self.len()
            )));
        }
        let mut atoms = vec![Atom(0); self.len()];
        for (i, &a) in self.atoms.iter().enumerate() {
            atoms[tau.apply(i)] = a;
        }
        Ok(RefDomain { atoms })
    }
}

impl TryFrom<Vec<Atom>> for RefDomain {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<RefDomain> for Vec<Atom> {
    fn from(d: RefDomain) -> Self {
        d.atoms
    }
}

impl fmt::Display for RefDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// A bijection on `0..n`, `i -> mapping[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &x in &mapping {
            if x >= n || seen[x] {
                return Err(contract(format!("{mapping:?} is not a permutation")));
            }
            seen[x] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    /// Swaps `i` and `j`, fixing everything else.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.swap(i, j);
        Self { mapping }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &x) in self.mapping.iter().enumerate() {
            inv[x] = i;
        }
        Self { mapping: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(
            self.len(),
            other.len(),
            "composing permutations of different sizes"
        );
        Self {
            mapping: other.mapping.iter().map(|&x| self.mapping[x]).collect(),
        }
    }

    /// Number of fixed points.
    pub fn fixed_points(&self) -> usize {
        self.mapping
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i == x)
            .count()
    }
}

/// Restricts a permutation of atom ids `0..n` to a reference domain.
///
/// Returns `Ok(None)` when `sigma` does not map the domain onto itself. Otherwise
/// returns `tau` with `sigma(x_j) = x_{tau(j)}` for every position `j`.
pub fn restrict_permutation(
    sigma: &Permutation,
    domain: &RefDomain,
) -> Result<Option<Permutation>> {
    let mut mapping = Vec::with_capacity(domain.len());
    for &atom in domain.atoms() {
        let id = usize::try_from(atom.0)
            .ok()
            .filter(|&id| id < sigma.len())
            .ok_or_else(|| contract(format!("atom {atom} outside the permuted universe")))?;
        let image = Atom(sigma.apply(id) as u64);
        match domain.position(image) {
            Some(pos) => mapping.push(pos),
            None => return Ok(None),
        }
    }
    Ok(Some(Permutation { mapping }))
}

/// Common-atoms-first realignment of two reference domains.
///
/// `perm_in` moves position `i` of the first domain to position
/// `perm_in(i)` of `aligned_in`; likewise `perm_out` for the second domain.
/// The first `d_cap` atoms of both aligned domains coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainAlignment {
    pub d_cap: usize,
    pub d1: usize,
    pub d2: usize,
    pub perm_in: Permutation,
    pub perm_out: Permutation,
    pub aligned_in: RefDomain,
    pub aligned_out: RefDomain,
}

/// Aligns two reference domains so their common atoms come first.
///
/// Common atoms keep their order in `d1`; the remaining atoms of each domain
/// follow in their original relative order. Fails on disjoint domains.
pub fn align_domains(d1: &RefDomain, d2: &RefDomain) -> Result<DomainAlignment> {
    let common: Vec<Atom> = d1
        .atoms()
        .iter()
        .copied()
        .filter(|&a| d2.contains(a))
        .collect();
    if common.is_empty() {
        return Err(Error::DisjointDomains);
    }
    let order = |d: &RefDomain| -> Vec<Atom> {
        common
            .iter()
            .copied()
            .chain(d.atoms().iter().copied().filter(|a| !common.contains(a)))
            .collect()
    };
    let aligned_in = RefDomain { atoms: order(d1) };
    let aligned_out = RefDomain { atoms: order(d2) };
    let moves = |from: &RefDomain, to: &RefDomain| Permutation {
        mapping: from
            .atoms()
            .iter()
            .map(|&a| to.position(a).expect("aligned domain holds every atom"))
            .collect(),
    };
    Ok(DomainAlignment {
        d_cap: common.len(),
        d1: d1.len(),
        d2: d2.len(),
        perm_in: moves(d1, &aligned_in),
        perm_out: moves(d2, &aligned_out),
        aligned_in,
        aligned_out,
    })
}

/// Row-major index bookkeeping for `d^k` tensors.
pub(crate) fn num_entries(d: usize, k: usize) -> Option<usize> {
    d.checked_pow(k as u32)
}

/// Maps every flat index of a `d^k` array to its flat index after each
/// mode's coordinate is sent through `tau`.
pub(crate) fn permuted_offsets(tau: &Permutation, k: usize) -> Vec<usize> {
    let d = tau.len();
    let n = d.pow(k as u32);
    let mut out = Vec::with_capacity(n);
    let mut digits = vec![0usize; k];
    for _ in 0..n {
        out.push(digits.iter().fold(0, |acc, &i| acc * d + tau.apply(i)));
        for m in (0..k).rev() {
            digits[m] += 1;
            if digits[m] < d {
                break;
            }
            digits[m] = 0;
        }
    }
    out
}

/// A `k`-th order tensor over a reference domain with `channels` channels.
///
/// Values are stored row-major over the `k` domain modes with the channel
/// mode last, so there are `d^k * channels` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct PTensor<S> {
    domain: RefDomain,
    order: usize,
    channels: usize,
    values: Vec<S>,
}

impl<S: Scalar> PTensor<S> {
    pub fn new(domain: RefDomain, order: usize, channels: usize, values: Vec<S>) -> Result<Self> {
        if channels == 0 {
            return Err(contract("a P-tensor needs at least one channel"));
        }
        let expected = num_entries(domain.len(), order)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| contract("tensor size overflows"))?;
        if values.len() != expected {
            return Err(contract(format!(
                "expected {expected} values for d={} k={order} C={channels}, got {}",
                domain.len(),
                values.len()
            )));
        }
        Ok(Self {
            domain,
            order,
            channels,
            values,
        })
    }

    pub fn zeros(domain: RefDomain, order: usize, channels: usize) -> Result<Self> {
        let n = num_entries(domain.len(), order)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| contract("tensor size overflows"))?;
        Self::new(domain, order, channels, vec![S::ZERO; n])
    }

    /// Deterministic random tensor; see [`Scalar::sample`] for the entry law.
    /// The generator is ChaCha8 seeded with `seed`.
    pub fn random(domain: RefDomain, order: usize, channels: usize, seed: u64) -> Result<Self> {
        Self::random_with(domain, order, channels, seed, &Limits::default())
    }

    pub fn random_with(
        domain: RefDomain,
        order: usize,
        channels: usize,
        seed: u64,
        limits: &Limits,
    ) -> Result<Self> {
        let entries = (domain.len() as u128)
            .checked_pow(order as u32)
            .and_then(|n| n.checked_mul(channels as u128))
            .unwrap_or(u128::MAX);
        check_cap("tensor entries", entries, limits.max_tensor_entries)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..entries).map(|_| S::sample(&mut rng)).collect();
        Self::new(domain, order, channels, values)
    }

    pub fn domain(&self) -> &RefDomain {
        &self.domain
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    /// Number of entries per channel, `d^k`.
    pub fn spatial_len(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn get(&self, index: &[usize], channel: usize) -> S {
        self.values[self.offset(index) * self.channels + channel]
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(
            index.len(),
            self.order,
            "index arity must equal tensor order"
        );
        let d = self.domain.len();
        index.iter().fold(0, |acc, &i| {
            assert!(i < d, "index {i} out of range for domain of size {d}");
            acc * d + i
        })
    }

    /// Same values anchored to another domain of equal size.
    pub fn with_domain(self, domain: RefDomain) -> Result<Self> {
        if domain.len() != self.domain.len() {
            return Err(contract("replacement domain has a different size"));
        }
        Ok(Self { domain, ..self })
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    fn permuted_values(&self, tau: &Permutation) -> Result<Vec<S>> {
        if tau.len() != self.domain.len() {
            return Err(contract(format!(
                "permutation of length {} applied to domain of size {}",
                tau.len(),
                self.domain.len()
            )));
        }
        let c = self.channels;
        let mut out = vec![S::ZERO; self.values.len()];
        for (src, dst) in permuted_offsets(tau, self.order).into_iter().enumerate() {
            out[dst * c..(dst + 1) * c].copy_from_slice(&self.values[src * c..(src + 1) * c]);
        }
        Ok(out)
    }

    /// Reindexes the tensor by `tau`: `out[i1..ik, c] = in[tau^-1(i1)..tau^-1(ik), c]`.
    ///
    /// The domain is reordered the same way, so every entry stays attached to
    /// the same atoms. This is a change of coordinates, not a change of object.
    pub fn permute(&self, tau: &Permutation) -> Result<Self> {
        Ok(Self {
            values: self.permuted_values(tau)?,
            domain: self.domain.permuted(tau)?,
            order: self.order,
            channels: self.channels,
        })
    }

    /// The permutation action on values with the domain order held fixed:
    /// this is how a global permutation fixing the domain transforms the tensor.
    pub fn act(&self, tau: &Permutation) -> Result<Self> {
        Ok(Self {
            values: self.permuted_values(tau)?,
            domain: self.domain.clone(),
            order: self.order,
            channels: self.channels,
        })
    }

    /// Frobenius inner product, one value per channel.
    pub fn dot(&self, other: &Self) -> Result<Vec<S>> {
        if self.values.len() != other.values.len() || self.channels != other.channels {
            return Err(contract("inner product of differently shaped tensors"));
        }
        let c = self.channels;
        let mut acc = vec![S::ZERO; c];
        for (i, (&a, &b)) in self.values.iter().zip(&other.values).enumerate() {
            acc[i % c] += a * b;
        }
        Ok(acc)
    }
}

/// Free-function form of [`PTensor::permute`].
pub fn permute_ptensor<S: Scalar>(t: &PTensor<S>, tau: &Permutation) -> Result<PTensor<S>> {
    t.permute(tau)
}

/// Free-function form of [`PTensor::random`].
pub fn random_ptensor<S: Scalar>(
    domain: RefDomain,
    order: usize,
    channels: usize,
    seed: u64,
) -> Result<PTensor<S>> {
    PTensor::random(domain, order, channels, seed)
}
