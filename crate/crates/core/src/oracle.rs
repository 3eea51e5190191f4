//! Ground truth that shares no code path with [`crate::maps`]: group-averaged
//! dimension counts, the exact null space of the equivariance constraints,
//! and hand-written loop versions of individual maps.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use crate::combinatorics::{factorial_capped, fixed_point_counts};
use crate::error::{check_cap, contract, Error, Result};
use crate::limits::Limits;
use crate::linalg::{Echelon, Matrix, SparseRow};
use crate::maps::Geometry;
use crate::tensor::{permuted_offsets, Permutation, RefDomain};

/// Sizes of the three parts of a union domain: `a` atoms only in the input
/// domain, `b` shared atoms, `c` atoms only in the output domain.
///
/// In aligned coordinates the input domain lists the shared atoms then the
/// input-only ones; the output domain lists the shared atoms then the
/// output-only ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockGeometry {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl BlockGeometry {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        Self { a, b, c }
    }

    pub fn d1(&self) -> usize {
        self.a + self.b
    }

    pub fn d2(&self) -> usize {
        self.b + self.c
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            d_cap: self.b,
            d1: self.d1(),
            d2: self.d2(),
        }
    }

    /// Aligned input and output domains over atoms `0..a+b+c`: shared atoms
    /// are `0..b`, input-only `b..b+a`, output-only `b+a..b+a+c`.
    pub fn domains(&self) -> (RefDomain, RefDomain) {
        let shared = 0..self.b as u64;
        let only_in = self.b as u64..(self.a + self.b) as u64;
        let only_out = (self.a + self.b) as u64..(self.a + self.b + self.c) as u64;
        let d1 = RefDomain::from_ids(shared.clone().chain(only_in)).expect("distinct ids");
        let d2 = RefDomain::from_ids(shared.chain(only_out)).expect("distinct ids");
        (d1, d2)
    }

    fn group_order(&self, cap: u128) -> Result<u128> {
        let order = factorial_capped(self.a, cap)?
            .checked_mul(factorial_capped(self.b, cap)?)
            .and_then(|x| x.checked_mul(factorial_capped(self.c, cap).ok()?))
            .unwrap_or(u128::MAX);
        check_cap("group order", order, cap)?;
        Ok(order)
    }
}

fn fixed_counts(z: usize) -> Vec<usize> {
    if z == 0 {
        vec![0]
    } else {
        fixed_point_counts(z)
    }
}

/// Dimension of the space of equivariant maps, by averaging the trace of the
/// permutation representation over `S_a x S_b x S_c`:
/// `(1/|G|) sum (f1+f2)^k_in (f2+f3)^k_out` with `f_i` fixed-point counts.
pub fn burnside_dimension(k_in: usize, k_out: usize, g: BlockGeometry) -> Result<BigUint> {
    burnside_dimension_with(k_in, k_out, g, &Limits::default())
}

pub fn burnside_dimension_with(
    k_in: usize,
    k_out: usize,
    g: BlockGeometry,
    limits: &Limits,
) -> Result<BigUint> {
    let order = g.group_order(limits.max_group_elements)?;
    let (fa, fb, fc) = (fixed_counts(g.a), fixed_counts(g.b), fixed_counts(g.c));
    let overflow = || Error::Consistency("Burnside sum overflowed u128".into());
    let mut total: u128 = 0;
    for &f1 in &fa {
        for &f2 in &fb {
            let left = ((f1 + f2) as u128)
                .checked_pow(k_in as u32)
                .ok_or_else(overflow)?;
            for &f3 in &fc {
                let right = ((f2 + f3) as u128)
                    .checked_pow(k_out as u32)
                    .ok_or_else(overflow)?;
                total = left
                    .checked_mul(right)
                    .and_then(|t| total.checked_add(t))
                    .ok_or_else(overflow)?;
            }
        }
    }
    if !total.is_multiple_of(order) {
        return Err(Error::Consistency(format!(
            "Burnside sum {total} is not divisible by the group order {order}"
        )));
    }
    Ok(BigUint::from(total / order))
}

/// Adjacent transpositions generating `S_a x S_b x S_c`, as permutations of
/// the aligned input and output positions.
fn generators(g: BlockGeometry) -> Vec<(Permutation, Permutation)> {
    let (d1, d2) = (g.d1(), g.d2());
    let mut gens = Vec::new();
    for i in 0..g.b.saturating_sub(1) {
        gens.push((
            Permutation::transposition(d1, i, i + 1),
            Permutation::transposition(d2, i, i + 1),
        ));
    }
    for i in g.b..(g.b + g.a).saturating_sub(1) {
        gens.push((
            Permutation::transposition(d1, i, i + 1),
            Permutation::identity(d2),
        ));
    }
    for i in g.b..(g.b + g.c).saturating_sub(1) {
        gens.push((
            Permutation::identity(d1),
            Permutation::transposition(d2, i, i + 1),
        ));
    }
    gens
}

/// Exact basis of all `d2^k_out x d1^k_in` matrices `M` with
/// `P_out M P_in^-1 = M` for every group generator.
pub fn nullspace_basis(
    k_in: usize,
    k_out: usize,
    g: BlockGeometry,
) -> Result<Vec<Matrix<BigRational>>> {
    nullspace_basis_with(k_in, k_out, g, &Limits::default())
}

pub fn nullspace_basis_with(
    k_in: usize,
    k_out: usize,
    g: BlockGeometry,
    limits: &Limits,
) -> Result<Vec<Matrix<BigRational>>> {
    let rows = (g.d2() as u128).checked_pow(k_out as u32);
    let cols = (g.d1() as u128).checked_pow(k_in as u32);
    let unknowns = rows
        .zip(cols)
        .and_then(|(r, c)| r.checked_mul(c))
        .unwrap_or(u128::MAX);
    check_cap(
        "null-space unknowns",
        unknowns,
        limits.max_nullspace_unknowns,
    )?;
    let rows = g.d2().pow(k_out as u32);
    let cols = g.d1().pow(k_in as u32);

    let mut constraints = Echelon::new();
    for (p_in, p_out) in generators(g) {
        let in_map = permuted_offsets(&p_in, k_in);
        let out_map = permuted_offsets(&p_out, k_out);
        for (o, &o_to) in out_map.iter().enumerate() {
            for (i, &i_to) in in_map.iter().enumerate() {
                let here = o * cols + i;
                let there = o_to * cols + i_to;
                if here != there {
                    let (lo, hi) = (here.min(there), here.max(there));
                    let row: SparseRow = vec![(lo, BigRational::one()), (hi, -BigRational::one())];
                    constraints.insert(row);
                }
            }
        }
    }
    Ok(constraints
        .nullspace(rows * cols)
        .into_iter()
        .map(|data| Matrix { rows, cols, data })
        .collect())
}

/// Whether two lists of equally shaped matrices span the same space.
pub fn compare_span(left: &[Matrix<BigRational>], right: &[Matrix<BigRational>]) -> Result<bool> {
    let mut shape = None;
    for m in left.iter().chain(right) {
        match shape {
            None => shape = Some((m.rows, m.cols)),
            Some(s) if s != (m.rows, m.cols) => {
                return Err(contract(format!(
                    "matrix shapes {:?} and {:?} differ",
                    s,
                    (m.rows, m.cols)
                )))
            }
            Some(_) => {}
        }
    }
    let span = |ms: &[Matrix<BigRational>]| {
        let mut e = Echelon::new();
        for m in ms {
            e.insert(m.vectorized());
        }
        e
    };
    let l = span(left);
    let r = span(right);
    if l.rank() != r.rank() {
        return Ok(false);
    }
    Ok(right.iter().all(|m| l.contains(&m.vectorized())))
}

/// Rank of a list of matrices, each flattened to a vector.
pub fn matrix_rank(ms: &[Matrix<BigRational>]) -> usize {
    let mut e = Echelon::new();
    for m in ms {
        e.insert(m.vectorized());
    }
    e.rank()
}

/// Hand-written loops for individual maps, used to check the generic kernel.
pub mod reference {
    use crate::gnn::EdgeDirection;
    use crate::linalg::Matrix;

    /// `out[a,b,a] = sum_c in[c,b,b]` between third-order tensors on aligned
    /// domains, with `b` over the common atoms. `sum_all` extends `c` over the
    /// whole input domain and `broadcast_all` extends `a` over the whole
    /// output domain; otherwise both stay on the common atoms.
    pub fn third_order_example(
        input: &[i64],
        d_cap: usize,
        d1: usize,
        d2: usize,
        sum_all: bool,
        broadcast_all: bool,
    ) -> Vec<i64> {
        assert_eq!(input.len(), d1 * d1 * d1);
        let c_end = if sum_all { d1 } else { d_cap };
        let a_end = if broadcast_all { d2 } else { d_cap };
        let mut out = vec![0; d2 * d2 * d2];
        for a in 0..a_end {
            for b in 0..d_cap {
                let mut s = 0;
                for c in 0..c_end {
                    s += input[(c * d1 + b) * d1 + b];
                }
                out[(a * d2 + b) * d2 + a] = s;
            }
        }
        out
    }

    /// Atom ids of the input and output domains the hand-listed maps use,
    /// with `v1, v2, v3 = 1, 2, 3`.
    pub fn edge_domains(direction: EdgeDirection) -> (Vec<u64>, Vec<u64>) {
        match direction {
            EdgeDirection::VertexToEdge => (vec![1], vec![1, 2]),
            EdgeDirection::EdgeToVertex => (vec![1, 2], vec![1]),
            EdgeDirection::EdgeToEdge => (vec![1, 2], vec![2, 3]),
        }
    }

    fn mat(rows: usize, cols: usize, data: &[i64]) -> Matrix<i64> {
        Matrix {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    /// The distinct edge-network maps written out entry by entry, in the
    /// original (unaligned) order of [`edge_domains`].
    pub fn edge_network_maps(direction: EdgeDirection) -> Vec<Matrix<i64>> {
        match direction {
            // T_i = T^{v_i}  and  T_i = T^{v1} + T^{v2}, seen from v1's message.
            EdgeDirection::VertexToEdge => vec![mat(2, 1, &[1, 0]), mat(2, 1, &[1, 1])],
            // T^{v1} = T_1  and  T^{v1} = T_1 + T_2.
            EdgeDirection::EdgeToVertex => vec![mat(1, 2, &[1, 0]), mat(1, 2, &[1, 1])],
            // out_1 = in_2;  out_i = in_2;  out_1 = in_1 + in_2;  out_i = in_1 + in_2.
            EdgeDirection::EdgeToEdge => vec![
                mat(2, 2, &[0, 1, 0, 0]),
                mat(2, 2, &[0, 1, 0, 1]),
                mat(2, 2, &[1, 1, 0, 0]),
                mat(2, 2, &[1, 1, 1, 1]),
            ],
        }
    }
}
