use crate::error::{check_cap, contract, Result};
use crate::limits::Limits;
use crate::linalg::{Echelon, Matrix};
use crate::scalar::Scalar;
use crate::tensor::{num_entries, DomainAlignment, PTensor, RefDomain};

use super::spec::{BasisMapSpec, Geometry};

/// Index bookkeeping for one spec at one geometry.
///
/// Each block owns one index variable. Its contribution to a flat output
/// offset is `value * out_stride`, where `out_stride` sums the row-major
/// strides of the block's output modes; likewise for the input side.
struct Plan {
    ranges: Vec<usize>,
    out_strides: Vec<usize>,
    in_strides: Vec<usize>,
}

impl Plan {
    fn new(spec: &BasisMapSpec, g: Geometry) -> Self {
        let k_out = spec.k_out();
        let k_in = spec.k_in();
        let nb = spec.num_blocks();
        let mut out_strides = vec![0; nb];
        let mut in_strides = vec![0; nb];
        for (mode, &b) in spec.partition().rgs().iter().enumerate() {
            if mode < k_out {
                out_strides[b] += g.d2.pow((k_out - 1 - mode) as u32);
            } else {
                in_strides[b] += g.d1.pow((k_in - 1 - (mode - k_out)) as u32);
            }
        }
        let ranges = (0..nb).map(|b| spec.block_range(b, g)).collect();
        Self {
            ranges,
            out_strides,
            in_strides,
        }
    }

    /// Visits every assignment of block variables as `(out_offset, in_offset)`.
    /// Distinct assignments give distinct offset pairs.
    fn for_each(&self, mut visit: impl FnMut(usize, usize)) {
        if self.ranges.contains(&0) {
            return;
        }
        let nb = self.ranges.len();
        let mut idx = vec![0usize; nb];
        let (mut out_off, mut in_off) = (0usize, 0usize);
        loop {
            visit(out_off, in_off);
            let mut b = nb;
            loop {
                if b == 0 {
                    return;
                }
                b -= 1;
                idx[b] += 1;
                out_off += self.out_strides[b];
                in_off += self.in_strides[b];
                if idx[b] < self.ranges[b] {
                    break;
                }
                out_off -= self.out_strides[b] * idx[b];
                in_off -= self.in_strides[b] * idx[b];
                idx[b] = 0;
            }
        }
    }
}

fn sizes(spec: &BasisMapSpec, g: Geometry) -> Result<(usize, usize)> {
    let out = num_entries(g.d2, spec.k_out()).ok_or_else(|| contract("output size overflows"))?;
    let inp = num_entries(g.d1, spec.k_in()).ok_or_else(|| contract("input size overflows"))?;
    Ok((out, inp))
}

/// Applies a spec to raw aligned values (`d1^k_in` entries times `channels`),
/// returning `d2^k_out * channels` values.
pub fn apply_map_values<S: Scalar>(
    spec: &BasisMapSpec,
    g: Geometry,
    input: &[S],
    channels: usize,
) -> Result<Vec<S>> {
    let (out_len, in_len) = sizes(spec, g)?;
    if input.len() != in_len * channels {
        return Err(contract(format!(
            "input holds {} values, expected {}",
            input.len(),
            in_len * channels
        )));
    }
    let mut out = vec![S::ZERO; out_len * channels];
    Plan::new(spec, g).for_each(|o, i| {
        let (o, i) = (o * channels, i * channels);
        for c in 0..channels {
            out[o + c] += input[i + c];
        }
    });
    Ok(out)
}

/// Transpose of [`apply_map_values`].
pub fn apply_adjoint_values<S: Scalar>(
    spec: &BasisMapSpec,
    g: Geometry,
    output: &[S],
    channels: usize,
) -> Result<Vec<S>> {
    let (out_len, in_len) = sizes(spec, g)?;
    if output.len() != out_len * channels {
        return Err(contract(format!(
            "adjoint input holds {} values, expected {}",
            output.len(),
            out_len * channels
        )));
    }
    let mut back = vec![S::ZERO; in_len * channels];
    Plan::new(spec, g).for_each(|o, i| {
        let (o, i) = (o * channels, i * channels);
        for c in 0..channels {
            back[i + c] += output[o + c];
        }
    });
    Ok(back)
}

fn check_aligned(
    alignment: &DomainAlignment,
    in_domain: &RefDomain,
    out_domain: &RefDomain,
) -> Result<Geometry> {
    if in_domain != &alignment.aligned_in || out_domain != &alignment.aligned_out {
        return Err(contract(format!(
            "domains {in_domain} -> {out_domain} are not the aligned pair {} -> {}",
            alignment.aligned_in, alignment.aligned_out
        )));
    }
    Geometry::new(alignment.d_cap, alignment.d1, alignment.d2)
}

/// Applies one basis map to a realigned input tensor.
///
/// Per channel, every block owns one index. Transfer blocks tie their output
/// and input modes over the common atoms; sum blocks tie their input modes and
/// are summed over the common atoms or the whole input domain; broadcast
/// blocks tie their output modes and range over the common atoms or the whole
/// output domain. Output entries no assignment reaches are zero.
pub fn apply_map<S: Scalar>(
    spec: &BasisMapSpec,
    input: &PTensor<S>,
    alignment: &DomainAlignment,
    out_domain: &RefDomain,
) -> Result<PTensor<S>> {
    if input.order() != spec.k_in() {
        return Err(contract(format!(
            "spec expects order {} input, got {}",
            spec.k_in(),
            input.order()
        )));
    }
    let g = check_aligned(alignment, input.domain(), out_domain)?;
    let values = apply_map_values(spec, g, input.values(), input.channels())?;
    PTensor::new(out_domain.clone(), spec.k_out(), input.channels(), values)
}

/// Adjoint of [`apply_map`] under the per-channel Frobenius pairing.
pub fn apply_adjoint<S: Scalar>(
    spec: &BasisMapSpec,
    output: &PTensor<S>,
    alignment: &DomainAlignment,
    in_domain: &RefDomain,
) -> Result<PTensor<S>> {
    if output.order() != spec.k_out() {
        return Err(contract(format!(
            "adjoint expects order {} tensor, got {}",
            spec.k_out(),
            output.order()
        )));
    }
    let g = check_aligned(alignment, in_domain, output.domain())?;
    let values = apply_adjoint_values(spec, g, output.values(), output.channels())?;
    PTensor::new(in_domain.clone(), spec.k_in(), output.channels(), values)
}

/// The `d2^k_out x d1^k_in` 0/1 matrix of a spec: column `j` is the image of
/// the `j`-th standard basis tensor.
pub fn realize_matrix(spec: &BasisMapSpec, g: Geometry) -> Result<Matrix<i64>> {
    realize_matrix_with(spec, g, &Limits::default())
}

pub fn realize_matrix_with(
    spec: &BasisMapSpec,
    g: Geometry,
    limits: &Limits,
) -> Result<Matrix<i64>> {
    let rows = (g.d2 as u128).checked_pow(spec.k_out() as u32);
    let cols = (g.d1 as u128).checked_pow(spec.k_in() as u32);
    let entries = rows
        .zip(cols)
        .and_then(|(r, c)| r.checked_mul(c))
        .unwrap_or(u128::MAX);
    check_cap("matrix entries", entries, limits.max_matrix_entries)?;
    let (rows, cols) = sizes(spec, g)?;
    let mut data = vec![0i64; rows * cols];
    Plan::new(spec, g).for_each(|o, i| data[o * cols + i] = 1);
    Ok(Matrix { rows, cols, data })
}

/// Exact rank of the span of the realized specs, each flattened to a vector.
pub fn span_rank(specs: &[BasisMapSpec], g: Geometry) -> Result<usize> {
    span_rank_with(specs, g, &Limits::default())
}

pub fn span_rank_with(specs: &[BasisMapSpec], g: Geometry, limits: &Limits) -> Result<usize> {
    let mut e = Echelon::new();
    for spec in specs {
        e.insert(
            realize_matrix_with(spec, g, limits)?
                .to_rational()
                .vectorized(),
        );
    }
    Ok(e.rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::SetPartition;
    use crate::maps::{enumerate_specs, Flag, MapMode};
    use crate::tensor::align_domains;

    fn dom(ids: &[u64]) -> RefDomain {
        RefDomain::from_ids(ids.iter().copied()).unwrap()
    }

    fn m(rows: usize, cols: usize, data: &[i64]) -> Matrix<i64> {
        Matrix {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    #[test]
    fn row_sums_via_transfer_and_sum() {
        // {{1,2},{3}}: output mode tied to first input mode, second summed.
        let p = SetPartition::from_rgs(vec![0, 0, 1]).unwrap();
        let spec = BasisMapSpec::same_domain(2, 1, p).unwrap();
        let out = apply_map_values(&spec, Geometry::same(2), &[1i64, 2, 3, 4], 1).unwrap();
        assert_eq!(out, vec![3, 7]);
    }

    #[test]
    fn worked_example_same_domain() {
        // out[a,b,a] = sum_c in[c,b,b] on d = 2 with inputs 1..8.
        let p = SetPartition::from_rgs(vec![0, 1, 0, 2, 1, 1]).unwrap();
        let spec = BasisMapSpec::same_domain(3, 3, p).unwrap();
        let input: Vec<i64> = (1..=8).collect();
        let out = apply_map_values(&spec, Geometry::same(2), &input, 1).unwrap();
        let mut expected = vec![0i64; 8];
        let at = |a: usize, b: usize, c: usize| a * 4 + b * 2 + c;
        expected[at(0, 0, 0)] = 6;
        expected[at(1, 0, 1)] = 6;
        expected[at(0, 1, 0)] = 12;
        expected[at(1, 1, 1)] = 12;
        assert_eq!(out, expected);
    }

    #[test]
    fn zero_in_zero_out() {
        for spec in enumerate_specs(2, 2, MapMode::Overlap).unwrap() {
            let g = Geometry::new(1, 2, 3).unwrap();
            let out = apply_map_values(&spec, g, &[0i64; 8], 2).unwrap();
            assert!(out.iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn first_order_same_domain_matrices() {
        let specs = enumerate_specs(1, 1, MapMode::SameDomain).unwrap();
        let g = Geometry::same(2);
        assert_eq!(
            realize_matrix(&specs[0], g).unwrap(),
            m(2, 2, &[1, 0, 0, 1])
        );
        assert_eq!(
            realize_matrix(&specs[1], g).unwrap(),
            m(2, 2, &[1, 1, 1, 1])
        );
    }

    #[test]
    fn first_order_overlap_matrices_at_single_common_atom() {
        let specs = enumerate_specs(1, 1, MapMode::Overlap).unwrap();
        let g = Geometry::new(1, 2, 2).unwrap();
        let got: Vec<_> = specs
            .iter()
            .map(|s| realize_matrix(s, g).unwrap())
            .collect();
        assert_eq!(
            got,
            vec![
                m(2, 2, &[1, 0, 0, 0]),
                m(2, 2, &[1, 0, 0, 0]),
                m(2, 2, &[1, 1, 0, 0]),
                m(2, 2, &[1, 0, 1, 0]),
                m(2, 2, &[1, 1, 1, 1]),
            ]
        );
    }

    #[test]
    fn span_ranks() {
        let over = enumerate_specs(1, 1, MapMode::Overlap).unwrap();
        assert_eq!(
            span_rank(&over, Geometry::new(1, 2, 2).unwrap()).unwrap(),
            4
        );
        assert_eq!(
            span_rank(&over, Geometry::new(2, 4, 4).unwrap()).unwrap(),
            5
        );
        let same = enumerate_specs(1, 1, MapMode::SameDomain).unwrap();
        assert_eq!(span_rank(&same, Geometry::same(1)).unwrap(), 1);
    }

    #[test]
    fn realize_cap() {
        let spec = &enumerate_specs(2, 2, MapMode::SameDomain).unwrap()[0];
        let limits = Limits {
            max_matrix_entries: 100,
            ..Limits::default()
        };
        assert!(realize_matrix_with(spec, Geometry::same(4), &limits).is_err());
    }

    #[test]
    fn sum_all_adjoint_is_broadcast_all() {
        let sum_all = &enumerate_specs(1, 0, MapMode::SameDomain).unwrap()[0];
        let bcast_all = &enumerate_specs(0, 1, MapMode::SameDomain).unwrap()[0];
        let g = Geometry::same(3);
        let y = [5i64];
        assert_eq!(
            apply_adjoint_values(sum_all, g, &y, 1).unwrap(),
            apply_map_values(bcast_all, g, &y, 1).unwrap()
        );
    }

    #[test]
    fn transfer_adjoint_is_itself() {
        let id = &enumerate_specs(1, 1, MapMode::SameDomain).unwrap()[0];
        let x = [3i64, -1, 4];
        assert_eq!(
            apply_adjoint_values(id, Geometry::same(3), &x, 1).unwrap(),
            x.to_vec()
        );
    }

    #[test]
    fn apply_map_requires_alignment() {
        let spec = &enumerate_specs(1, 1, MapMode::Overlap).unwrap()[0];
        let d1 = dom(&[1, 2]);
        let d2 = dom(&[2, 3]);
        let a = align_domains(&d1, &d2).unwrap();
        let t = PTensor::new(d1, 1, 1, vec![10i64, 20]).unwrap();
        // (1,2) realigns to (2,1), so the raw tensor is rejected.
        assert!(apply_map(spec, &t, &a, &d2).is_err());
        let t = t.permute(&a.perm_in).unwrap();
        let out = apply_map(spec, &t, &a, &a.aligned_out).unwrap();
        // Transfer over the shared atom 2: out at atom 2 gets in at atom 2.
        assert_eq!(out.values(), &[20, 0]);
    }

    #[test]
    fn flags_matter_only_off_the_common_block() {
        let p = SetPartition::from_rgs(vec![0, 1]).unwrap();
        let common =
            BasisMapSpec::new(1, 1, p.clone(), &[Flag::CommonOnly, Flag::CommonOnly]).unwrap();
        let all = BasisMapSpec::new(1, 1, p, &[Flag::All, Flag::All]).unwrap();
        let g = Geometry::same(3);
        assert_eq!(
            realize_matrix(&common, g).unwrap(),
            realize_matrix(&all, g).unwrap()
        );
    }
}
