//! Self-checks that compare independent computations of the same quantity.
//!
//! Each check returns a [`Report`]; a suite bundles the checks for one area.
//! Suites are deterministic given their seed.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{
    avg_fixed_power, bell, count_overlap, count_overlap_closed_form, count_overlap_variant_sum,
    count_same_domain, SetPartition,
};
use crate::error::{contract, Result};
use crate::gnn::{
    model_forward, DomainPolicy, EdgeDirection, Graph, LayerConfig, LayerKind, ModelConfig,
};
use crate::limits::Limits;
use crate::linalg::Matrix;
use crate::maps::{
    apply_adjoint, apply_map, enumerate_specs, message, realize_matrix, span_rank, BasisMapSpec,
    EquivariantLayerSpec, Flag, MapMode, Nonlinearity,
};
use crate::oracle::{burnside_dimension, compare_span, nullspace_basis, reference, BlockGeometry};
use crate::tensor::{
    align_domains, restrict_permutation, DomainAlignment, PTensor, Permutation, RefDomain,
};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: &'static str,
    /// Individual comparisons made.
    pub cases: usize,
    pub failed: usize,
    /// Descriptions of the first few failed comparisons.
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

const MAX_LISTED_FAILURES: usize = 20;

impl Report {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} cases, {} failures, {:.2}s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failed,
            self.elapsed.as_secs_f64()
        )?;
        for line in &self.failures {
            write!(f, "\n    {line}")?;
        }
        Ok(())
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failed: usize,
    failures: Vec<String>,
    start: Instant,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failed: 0,
            failures: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_LISTED_FAILURES {
                self.failures.push(what());
            }
        }
    }

    fn eq<T: PartialEq + fmt::Debug>(&mut self, got: T, want: T, what: impl FnOnce() -> String) {
        let ok = got == want;
        self.check(ok, || format!("{}: got {got:?}, want {want:?}", what()));
    }

    fn finish(self) -> Report {
        Report {
            name: self.name,
            cases: self.cases,
            failed: self.failed,
            failures: self.failures,
            elapsed: self.start.elapsed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Counts,
    Burnside,
    Rank,
    Equivariance,
    Gnn,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Counts,
        Suite::Burnside,
        Suite::Rank,
        Suite::Equivariance,
        Suite::Gnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Counts => "counts",
            Suite::Burnside => "burnside",
            Suite::Rank => "rank",
            Suite::Equivariance => "equivariance",
            Suite::Gnn => "gnn",
        }
    }
}

impl FromStr for Suite {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| contract(format!("unknown suite {s:?}")))
    }
}

/// Runs every check of a suite.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Report>> {
    Ok(match suite {
        Suite::Counts => vec![same_domain_counts(), counting_identity()?],
        Suite::Burnside => vec![burnside_agreement()?, bell_trace()?],
        Suite::Rank => vec![nullspace_agreement()?, worked_maps(seed)?],
        Suite::Equivariance => vec![equivariance(seed)?, adjoint_pairing(seed)?],
        Suite::Gnn => vec![gnn_invariance(seed, 100, 100)?],
    })
}

/// Same-domain basis sizes against the known Bell numbers.
pub fn same_domain_counts() -> Report {
    let mut t = Tally::new("same-domain counts");
    for (k_in, k_out, want) in [
        (0, 0, 1u32),
        (1, 1, 2),
        (1, 2, 5),
        (2, 2, 15),
        (2, 3, 52),
        (3, 3, 203),
    ] {
        t.eq(
            count_same_domain(k_in, k_out).ok(),
            Some(BigUint::from(want)),
            || format!("({k_in},{k_out})"),
        );
    }
    t.finish()
}

/// Closed-form overlap count against the per-partition `2^(p1+p3)` sum.
pub fn counting_identity() -> Result<Report> {
    let mut t = Tally::new("counting identity");
    let limits = Limits::default();
    for k_in in 0..=5 {
        for k_out in 0..=5 {
            let closed = count_overlap_closed_form(k_in, k_out, &limits)?;
            let summed = count_overlap_variant_sum(k_in, k_out, &limits)?;
            t.eq(&closed, &summed, || format!("({k_in},{k_out})"));
        }
    }
    for (k, want) in [(1, 5u32), (2, 63), (3, 1277)] {
        t.eq(count_overlap(k, k)?, BigUint::from(want), || {
            format!("({k},{k})")
        });
    }
    Ok(t.finish())
}

/// Group-averaging dimension against the closed-form count once every block
/// is large enough for all partitions to be realized.
pub fn burnside_agreement() -> Result<Report> {
    let mut t = Tally::new("burnside agreement");
    for (k_in, k_out, m) in [(1, 1, 2), (1, 2, 3), (2, 2, 4)] {
        let g = BlockGeometry::new(m, m, m);
        t.eq(
            burnside_dimension(k_in, k_out, g)?,
            count_overlap(k_in, k_out)?,
            || format!("({k_in},{k_out}) at ({m},{m},{m})"),
        );
    }
    Ok(t.finish())
}

/// Average of `fix(sigma)^k` over `S_z` equals `B(k)` exactly when `k <= z`.
pub fn bell_trace() -> Result<Report> {
    let mut t = Tally::new("bell trace");
    for z in 1..=7 {
        for k in 1..=z {
            let b = BigRational::from_integer(bell(k)?.into());
            t.eq(avg_fixed_power(z, k as u32)?, b, || format!("z={z} k={k}"));
        }
    }
    for k in 2..=6 {
        for z in 1..k {
            let b = BigRational::from_integer(bell(k)?.into());
            let avg = avg_fixed_power(z, k as u32)?;
            t.check(avg < b, || format!("z={z} k={k}: {avg} not below {b}"));
        }
    }
    Ok(t.finish())
}

fn rational(ms: Vec<Matrix<i64>>) -> Vec<Matrix<BigRational>> {
    ms.iter().map(Matrix::to_rational).collect()
}

/// Exact null space of the equivariance constraints against Burnside and
/// against the span of the enumerated maps.
pub fn nullspace_agreement() -> Result<Report> {
    let mut t = Tally::new("null-space agreement");
    for (m, want) in [(1, 4usize), (2, 5)] {
        let g = BlockGeometry::new(m, m, m);
        let ns = nullspace_basis(1, 1, g)?;
        t.eq(ns.len(), want, || {
            format!("null-space dimension at ({m},{m},{m})")
        });
        t.eq(burnside_dimension(1, 1, g)?, BigUint::from(want), || {
            format!("burnside at ({m},{m},{m})")
        });
        let specs = enumerate_specs(1, 1, MapMode::Overlap)?;
        t.eq(span_rank(&specs, g.geometry())?, want, || {
            format!("span rank at ({m},{m},{m})")
        });
        let realized = specs
            .iter()
            .map(|s| realize_matrix(s, g.geometry()))
            .collect::<Result<Vec<_>>>()?;
        t.check(compare_span(&rational(realized), &ns)?, || {
            format!("realized maps and null space differ at ({m},{m},{m})")
        });
    }
    Ok(t.finish())
}

fn random_ints(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(-8..=8)).collect()
}

/// The third-order example map and its variants, and the edge-network maps,
/// against hand-written loops.
pub fn worked_maps(seed: u64) -> Result<Report> {
    let mut t = Tally::new("worked maps");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partition = SetPartition::from_rgs(vec![0, 1, 0, 2, 1, 1])?;
    let g = BlockGeometry::new(2, 2, 2);
    let (d1, d2) = g.domains();
    let alignment = align_domains(&d1, &d2)?;
    for (broadcast_all, sum_all) in [(false, false), (false, true), (true, false), (true, true)] {
        let flag = |all: bool| if all { Flag::All } else { Flag::CommonOnly };
        let spec = BasisMapSpec::new(
            3,
            3,
            partition.clone(),
            &[flag(broadcast_all), flag(sum_all)],
        )?;
        for _ in 0..20 {
            let x = random_ints(&mut rng, 64);
            let want = reference::third_order_example(&x, 2, 4, 4, sum_all, broadcast_all);
            let got = apply_map(&spec, &PTensor::new(d1.clone(), 3, 1, x)?, &alignment, &d2)?;
            t.eq(got.values(), &want[..], || {
                format!("third-order map, sum_all={sum_all} broadcast_all={broadcast_all}")
            });
        }
    }
    for direction in [
        EdgeDirection::VertexToEdge,
        EdgeDirection::EdgeToVertex,
        EdgeDirection::EdgeToEdge,
    ] {
        let specs = crate::gnn::edge_message_maps(direction);
        let (din, dout) = reference::edge_domains(direction);
        let (din, dout) = (RefDomain::from_ids(din)?, RefDomain::from_ids(dout)?);
        let mut got = specs
            .iter()
            .map(|s| original_matrix(s, &din, &dout))
            .collect::<Result<Vec<_>>>()?;
        got.sort_by(|a, b| a.data.cmp(&b.data));
        got.dedup();
        let mut want = reference::edge_network_maps(direction);
        want.sort_by(|a, b| a.data.cmp(&b.data));
        t.eq(got, want, || format!("{direction:?} maps"));
    }
    Ok(t.finish())
}

/// Matrix of a single spec between two domains in their given order, built by
/// sending standard basis tensors through the message path.
fn original_matrix(spec: &BasisMapSpec, din: &RefDomain, dout: &RefDomain) -> Result<Matrix<i64>> {
    let layer = EquivariantLayerSpec::new(
        vec![spec.clone()],
        vec![vec![1i64]],
        vec![0],
        Nonlinearity::Identity,
        1,
        1,
    )?;
    let cols = din.len().pow(spec.k_in() as u32);
    let rows = dout.len().pow(spec.k_out() as u32);
    let mut data = vec![0; rows * cols];
    for j in 0..cols {
        let mut e = vec![0i64; cols];
        e[j] = 1;
        let out = message(&layer, &PTensor::new(din.clone(), spec.k_in(), 1, e)?, dout)?;
        for (i, &v) in out.values().iter().enumerate() {
            data[i * cols + j] = v;
        }
    }
    Ok(Matrix { rows, cols, data })
}

const EQUIVARIANCE_GEOMETRIES: [(usize, usize, usize); 3] = [(1, 1, 1), (2, 2, 2), (1, 2, 3)];

fn small_specs() -> Result<Vec<BasisMapSpec>> {
    let mut all = Vec::new();
    for k_in in 0..=2 {
        for k_out in 0..=2 {
            all.extend(enumerate_specs(k_in, k_out, MapMode::Overlap)?);
        }
    }
    Ok(all)
}

/// Which of the three atom blocks an atom id falls in.
fn block_of(g: BlockGeometry, atom: usize) -> usize {
    if atom < g.b {
        0
    } else if atom < g.b + g.a {
        1
    } else {
        2
    }
}

/// `sigma` in `S_A x S_B x S_C`, drawn uniformly.
fn random_block_permutation(g: BlockGeometry, rng: &mut ChaCha8Rng) -> Permutation {
    let mut mapping = Vec::with_capacity(g.a + g.b + g.c);
    let mut offset = 0;
    for size in [g.b, g.a, g.c] {
        let p = Permutation::random(size, rng);
        mapping.extend(p.mapping().iter().map(|&x| x + offset));
        offset += size;
    }
    Permutation::new(mapping).expect("block permutation")
}

fn equivariant_under(
    spec: &BasisMapSpec,
    x: &PTensor<i64>,
    alignment: &DomainAlignment,
    tau_in: &Permutation,
    tau_out: &Permutation,
) -> Result<bool> {
    let d2 = &alignment.aligned_out;
    let moved_first = apply_map(spec, &x.act(tau_in)?, alignment, d2)?;
    let moved_after = apply_map(spec, x, alignment, d2)?.act(tau_out)?;
    Ok(moved_first == moved_after)
}

/// `phi(sigma . T) == sigma . phi(T)` for every permutation of the atoms that
/// fixes both domains, and for sampled block permutations.
pub fn equivariance(seed: u64) -> Result<Report> {
    let mut t = Tally::new("equivariance");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = small_specs()?;
    for (a, b, c) in EQUIVARIANCE_GEOMETRIES {
        let g = BlockGeometry::new(a, b, c);
        let (d1, d2) = g.domains();
        let alignment = align_domains(&d1, &d2)?;
        let n = a + b + c;
        let mut stabilizer = Vec::new();
        for images in (0..n).permutations(n) {
            let sigma = Permutation::new(images)?;
            let restricted = (
                restrict_permutation(&sigma, &d1)?,
                restrict_permutation(&sigma, &d2)?,
            );
            let keeps_blocks = (0..n).all(|i| block_of(g, i) == block_of(g, sigma.apply(i)));
            let fixes_domains = restricted.0.is_some() && restricted.1.is_some();
            t.eq(fixes_domains, keeps_blocks, || {
                format!("domain stabilizer vs blocks at ({a},{b},{c})")
            });
            if let (Some(ti), Some(to)) = restricted {
                stabilizer.push((ti, to));
            }
        }
        for spec in &specs {
            let x = PTensor::<i64>::random_with(
                d1.clone(),
                spec.k_in(),
                1,
                rng.gen(),
                &Default::default(),
            )?;
            for (ti, to) in &stabilizer {
                t.check(equivariant_under(spec, &x, &alignment, ti, to)?, || {
                    format!("{spec} at ({a},{b},{c}), exhaustive")
                });
            }
            for _ in 0..1000 {
                let sigma = random_block_permutation(g, &mut rng);
                let ti = restrict_permutation(&sigma, &d1)?.expect("block permutation fixes D1");
                let to = restrict_permutation(&sigma, &d2)?.expect("block permutation fixes D2");
                let x = PTensor::<i64>::random_with(
                    d1.clone(),
                    spec.k_in(),
                    1,
                    rng.gen(),
                    &Default::default(),
                )?;
                t.check(equivariant_under(spec, &x, &alignment, &ti, &to)?, || {
                    format!("{spec} at ({a},{b},{c}), sampled")
                });
            }
        }
    }
    Ok(t.finish())
}

/// `<M x, y> == <x, M* y>` on random integer tensors.
pub fn adjoint_pairing(seed: u64) -> Result<Report> {
    let mut t = Tally::new("adjoint pairing");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xad);
    for spec in small_specs()? {
        for (a, b, c) in EQUIVARIANCE_GEOMETRIES {
            let (d1, d2) = BlockGeometry::new(a, b, c).domains();
            let alignment = align_domains(&d1, &d2)?;
            let pairs = 500 / EQUIVARIANCE_GEOMETRIES.len() + 1;
            for _ in 0..pairs {
                let x = PTensor::<i64>::random(d1.clone(), spec.k_in(), 2, rng.gen())?;
                let y = PTensor::<i64>::random(d2.clone(), spec.k_out(), 2, rng.gen())?;
                let lhs = apply_map(&spec, &x, &alignment, &d2)?.dot(&y)?;
                let rhs = x.dot(&apply_adjoint(&spec, &y, &alignment, &d1)?)?;
                t.eq(lhs, rhs, || format!("{spec} at ({a},{b},{c})"));
            }
        }
    }
    Ok(t.finish())
}

/// The three-kind model used by the invariance check.
pub fn invariance_model(seed: u64) -> ModelConfig {
    let layer = |kind, order, channels, policy, offset: u64| LayerConfig {
        kind,
        order,
        channels,
        policy,
        nonlinearity: Nonlinearity::Relu,
        seed: seed.wrapping_add(offset),
    };
    ModelConfig::new(vec![
        layer(LayerKind::Mpnn, 0, 4, DomainPolicy::Vertices, 1),
        layer(LayerKind::Edge, 1, 4, DomainPolicy::Edges, 2),
        layer(LayerKind::Unite, 1, 3, DomainPolicy::Ball { radius: 1 }, 3),
    ])
}

/// Connected random graph on `n >= 1` vertices: a random tree plus extra edges.
pub fn random_connected_graph(n: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    let extra = rng.gen_range(0.0..0.4);
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.gen_bool(extra) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("valid edges")
}

/// Features and graph renamed by `perm`.
fn relabel<S: Clone>(
    graph: &Graph,
    features: &[Vec<S>],
    perm: &Permutation,
) -> (Graph, Vec<Vec<S>>) {
    let mut moved = features.to_vec();
    for (v, f) in features.iter().enumerate() {
        moved[perm.apply(v)] = f.clone();
    }
    (graph.relabeled(perm).expect("same size"), moved)
}

fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= rel * scale.max(f64::MIN_POSITIVE))
}

/// One graph's worth of the invariance check; returns failure descriptions.
fn gnn_case(index: usize, seed: u64, relabelings: usize) -> Result<(usize, Vec<String>)> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64).wrapping_mul(0x9e37_79b9));
    let n = rng.gen_range(2..=12);
    let graph = random_connected_graph(n, &mut rng);
    let config = invariance_model(rng.gen());
    let ints: Vec<Vec<i64>> = (0..n).map(|_| random_ints(&mut rng, 2)).collect();
    let floats: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let int_model = crate::gnn::Model::<i64>::new(&config, 2)?;
    let float_model = crate::gnn::Model::<f64>::new(&config, 2)?;
    let base_int = int_model.forward(&graph, &ints)?;
    let base_float = float_model.forward(&graph, &floats)?;
    let mut failures = Vec::new();
    for r in 0..relabelings {
        let perm = Permutation::random(n, &mut rng);
        let (g, f) = relabel(&graph, &ints, &perm);
        if int_model.forward(&g, &f)? != base_int {
            failures.push(format!(
                "graph {index} relabeling {r}: integer readout changed"
            ));
        }
        let (g, f) = relabel(&graph, &floats, &perm);
        let moved = float_model.forward(&g, &f)?;
        if !close(&moved, &base_float, 1e-9) {
            failures.push(format!(
                "graph {index} relabeling {r}: float readout moved beyond 1e-9"
            ));
        }
    }
    Ok((2 * relabelings, failures))
}

/// Readout of the three-kind model is unchanged by vertex relabeling: exactly
/// with integer weights and features, to 1e-9 relative with floats.
pub fn gnn_invariance(seed: u64, graphs: usize, relabelings: usize) -> Result<Report> {
    let start = Instant::now();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(graphs.max(1));
    let results: Vec<Result<(usize, Vec<String>)>> = std::thread::scope(|scope| {
        let handles = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..graphs)
                        .step_by(workers)
                        .map(|i| gnn_case(i, seed, relabelings))
                        .collect::<Vec<_>>()
                })
            })
            .collect::<Vec<_>>();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut report = Report {
        name: "gnn invariance",
        cases: 0,
        failed: 0,
        failures: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for r in results {
        let (cases, failures) = r?;
        report.cases += cases;
        report.failed += failures.len();
        report.failures.extend(failures);
    }
    report.failures.truncate(MAX_LISTED_FAILURES);
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Readout of `config` on `graph` before and after `relabelings` random
/// vertex renamings; returns the largest relative deviation seen.
pub fn relabeling_deviation(
    graph: &Graph,
    features: &[Vec<f64>],
    config: &ModelConfig,
    relabelings: usize,
    seed: u64,
) -> Result<f64> {
    let base = model_forward(graph, features, config)?;
    let scale = base
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..relabelings {
        let perm = Permutation::random(graph.num_vertices(), &mut rng);
        let (g, f) = relabel(graph, features, &perm);
        let moved = model_forward(&g, &f, &config.relabeled(&perm))?;
        for (x, y) in moved.iter().zip(&base) {
            worst = worst.max((x - y).abs() / scale);
        }
    }
    Ok(worst)
}
