use proptest::prelude::*;

use ptensors::maps::{enumerate_specs, message, EquivariantLayerSpec, MapMode, Nonlinearity};
use ptensors::tensor::restrict_permutation;
use ptensors::{
    align_domains, apply_map, bell, describe_spec, enumerate_partitions, parse_description,
    BasisMapSpec, BlockGeometry, PTensor, Permutation, RefDomain,
};

fn spec_strategy() -> impl Strategy<Value = BasisMapSpec> {
    (0usize..=3, 0usize..=3, any::<prop::sample::Index>()).prop_map(|(k_in, k_out, i)| {
        let specs = enumerate_specs(k_in, k_out, MapMode::Overlap).unwrap();
        specs[i.index(specs.len())].clone()
    })
}

/// Two domains over ids `0..10` sharing at least one atom.
fn overlapping_domains() -> impl Strategy<Value = (RefDomain, RefDomain)> {
    (
        Just((0u64..10).collect::<Vec<_>>()).prop_shuffle(),
        1usize..=3,
        0usize..=2,
        0usize..=2,
    )
        .prop_map(|(ids, shared, only_in, only_out)| {
            let d1 = ids[..shared + only_in].to_vec();
            let mut d2: Vec<u64> = ids[..shared].to_vec();
            d2.extend(&ids[shared + only_in..shared + only_in + only_out]);
            d2.reverse();
            (
                RefDomain::from_ids(d1).unwrap(),
                RefDomain::from_ids(d2).unwrap(),
            )
        })
}

fn unit_layer(spec: &BasisMapSpec) -> EquivariantLayerSpec<i64> {
    EquivariantLayerSpec::new(
        vec![spec.clone()],
        vec![vec![1]],
        vec![0],
        Nonlinearity::Identity,
        1,
        1,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partitions_are_distinct_and_counted(m in 0usize..=7) {
        let parts = enumerate_partitions(m).unwrap();
        prop_assert_eq!(parts.len() as u64, bell(m).unwrap().try_into().unwrap_or(u64::MAX));
        let mut rgs: Vec<_> = parts.iter().map(|p| p.rgs().to_vec()).collect();
        prop_assert!(rgs.windows(2).all(|w| w[0] < w[1]));
        rgs.dedup();
        prop_assert_eq!(rgs.len(), parts.len());
    }

    #[test]
    fn spec_text_and_json_round_trip(spec in spec_strategy()) {
        prop_assert_eq!(parse_description(&describe_spec(&spec)).unwrap(), spec.clone());
        let json = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(serde_json::from_str::<BasisMapSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn maps_are_linear(spec in spec_strategy(), seed in any::<u64>(), a in -3i64..=3, b in -3i64..=3) {
        let (d1, d2) = BlockGeometry::new(1, 2, 1).domains();
        let al = align_domains(&d1, &d2).unwrap();
        let x = PTensor::<i64>::random(d1.clone(), spec.k_in(), 2, seed).unwrap();
        let y = PTensor::<i64>::random(d1.clone(), spec.k_in(), 2, seed ^ 1).unwrap();
        let combo: Vec<i64> = x.values().iter().zip(y.values()).map(|(p, q)| a * p + b * q).collect();
        let combo = PTensor::new(d1.clone(), spec.k_in(), 2, combo).unwrap();
        let lhs = apply_map(&spec, &combo, &al, &d2).unwrap();
        let fx = apply_map(&spec, &x, &al, &d2).unwrap();
        let fy = apply_map(&spec, &y, &al, &d2).unwrap();
        let rhs: Vec<i64> = fx.values().iter().zip(fy.values()).map(|(p, q)| a * p + b * q).collect();
        prop_assert_eq!(lhs.values(), &rhs[..]);
    }

    #[test]
    fn alignment_puts_common_atoms_first((d1, d2) in overlapping_domains()) {
        let al = align_domains(&d1, &d2).unwrap();
        let common = al.d_cap;
        prop_assert_eq!(&al.aligned_in.atoms()[..common], &al.aligned_out.atoms()[..common]);
        prop_assert!(al.aligned_in.same_set(&d1) && al.aligned_out.same_set(&d2));
        prop_assert_eq!(d1.permuted(&al.perm_in).unwrap(), al.aligned_in.clone());
        prop_assert_eq!(d2.permuted(&al.perm_out).unwrap(), al.aligned_out.clone());
        let again = align_domains(&al.aligned_in, &al.aligned_out).unwrap();
        prop_assert!(again.perm_in.is_identity() && again.perm_out.is_identity());
    }

    #[test]
    fn messages_ignore_presentation_order(
        spec in spec_strategy(),
        (d1, d2) in overlapping_domains(),
        seed in any::<u64>(),
    ) {
        let layer = unit_layer(&spec);
        let x = PTensor::<i64>::random(d1.clone(), spec.k_in(), 1, seed).unwrap();
        let base = message(&layer, &x, &d2).unwrap();
        let n_in = d1.len();
        let n_out = d2.len();
        let shift_in = Permutation::new((0..n_in).map(|i| (i + 1) % n_in).collect()).unwrap();
        let shift_out = Permutation::new((0..n_out).map(|i| (i + 1) % n_out).collect()).unwrap();
        let out_dom = d2.permuted(&shift_out).unwrap();
        let moved = message(&layer, &x.permute(&shift_in).unwrap(), &out_dom).unwrap();
        prop_assert_eq!(moved, base.permute(&shift_out).unwrap());
    }

    #[test]
    fn messages_commute_with_global_relabeling(
        spec in spec_strategy(),
        (d1, d2) in overlapping_domains(),
        images in Just((0usize..10).collect::<Vec<_>>()).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        // Renaming every atom and carrying the tensor along leaves the message
        // attached to the same (renamed) atoms.
        let sigma = Permutation::new(images).unwrap();
        let rename = |d: &RefDomain| RefDomain::from_ids(d.atoms().iter().map(|a| sigma.apply(a.0 as usize) as u64)).unwrap();
        let layer = unit_layer(&spec);
        let x = PTensor::<i64>::random(d1.clone(), spec.k_in(), 1, seed).unwrap();
        let base = message(&layer, &x, &d2).unwrap();
        let renamed_x = x.clone().with_domain(rename(&d1)).unwrap();
        let renamed = message(&layer, &renamed_x, &rename(&d2)).unwrap();
        prop_assert_eq!(renamed.values(), base.values());
    }
}

#[test]
fn equivariance_check_catches_a_non_equivariant_map() {
    // Reading off the first input entry is linear but not equivariant.
    let (d1, _) = BlockGeometry::new(1, 2, 1).domains();
    let x = PTensor::<i64>::new(d1.clone(), 1, 1, vec![1, 2, 3]).unwrap();
    let first = |t: &PTensor<i64>| t.values()[0];
    let sigma = Permutation::new(vec![1, 0, 2, 3]).unwrap();
    let tau = restrict_permutation(&sigma, &d1).unwrap().unwrap();
    assert_ne!(first(&x.act(&tau).unwrap()), first(&x));
}
