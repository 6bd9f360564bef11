use hybrid_nogo::channels::{
    decohered_cnot, entangling_cnot, is_cq_preserving, leak_copy, reversibility, Channel, ReversibleCQInteraction,
};
use hybrid_nogo::hilbert::{dephase, partial_trace, trace_distance, CQState, ClassicalDistribution, DensityMatrix};
use hybrid_nogo::linalg::{self, CMatrix};
use hybrid_nogo::nogo::decompose_reversible;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Channel from a Haar isometry into output (x) environment. The
/// environment is enlarged if needed to fit the input.
fn stinespring<R: Rng>(d_in: usize, d_out: usize, env: usize, rng: &mut R) -> Channel {
    let env = env.max(d_in.div_ceil(d_out));
    let u = linalg::haar_unitary(d_out * env, rng);
    let v = u.columns(0, d_in).into_owned();
    let kraus: Vec<CMatrix> = (0..env).map(|k| v.rows(k * d_out, d_out).into_owned()).collect();
    Channel::new(vec![d_in], vec![d_out], kraus).unwrap()
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dephasing_is_idempotent(seed: u64, n in 1usize..=4, d in 1usize..=4) {
        let rho = DensityMatrix::random(n * d, &mut rng(seed));
        let once = dephase(&rho, &[n, d], 0).unwrap();
        let twice = dephase(&once, &[n, d], 0).unwrap();
        prop_assert!(linalg::max_abs(&(once.entries() - twice.entries())) <= 1e-15);
        prop_assert!((once.trace().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn channels_contract_trace_distance(seed: u64, d_in in 1usize..=4, d_out in 1usize..=4, env in 1usize..=3) {
        let mut r = rng(seed);
        let c = stinespring(d_in, d_out, env, &mut r);
        let rho = DensityMatrix::random(d_in, &mut r);
        let sigma = DensityMatrix::random(d_in, &mut r);
        let before = trace_distance(&rho, &sigma).unwrap();
        let after = trace_distance(&c.apply(&rho).unwrap(), &c.apply(&sigma).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-12, "{after} > {before}");
    }

    #[test]
    fn partial_trace_preserves_trace(seed: u64, dims in dims_strategy(), mask: u8) {
        let total: usize = dims.iter().product();
        let keep: Vec<usize> = (0..dims.len()).filter(|f| mask & (1 << f) != 0).collect();
        prop_assume!(!keep.is_empty());
        let rho = DensityMatrix::random(total, &mut rng(seed));
        let reduced = partial_trace(&rho, &dims, &keep).unwrap();
        let kept: usize = keep.iter().map(|&f| dims[f]).product();
        prop_assert_eq!(reduced.dim(), kept);
        prop_assert!((reduced.trace().re - 1.0).abs() <= 1e-12);
        prop_assert!(linalg::min_eigenvalue(reduced.entries()).unwrap() >= -1e-12);
    }

    #[test]
    fn partial_trace_of_product_is_factor(seed: u64, a in 1usize..=4, b in 1usize..=4) {
        let mut r = rng(seed);
        let rho = DensityMatrix::random(a, &mut r);
        let sigma = DensityMatrix::random(b, &mut r);
        let joint = hybrid_nogo::hilbert::tensor(&rho, &sigma).unwrap();
        let left = partial_trace(&joint, &[a, b], &[0]).unwrap();
        let right = partial_trace(&joint, &[a, b], &[1]).unwrap();
        prop_assert!(linalg::max_abs(&(left.entries() - rho.entries())) <= 1e-12);
        prop_assert!(linalg::max_abs(&(right.entries() - sigma.entries())) <= 1e-12);
    }

    #[test]
    fn cq_state_round_trips(seed: u64, n in 1usize..=4, d in 1usize..=4) {
        let mut r = rng(seed);
        let weights = ClassicalDistribution::random(n, &mut r);
        let states = (0..n).map(|_| DensityMatrix::random(d, &mut r)).collect();
        let state = CQState::new(weights, states).unwrap();
        let back = CQState::extract(&state.embed(), n, d).unwrap();
        for ((p, rho), (q, sigma)) in state.branches().zip(back.branches()) {
            prop_assert!((p - q).abs() <= 1e-14);
            if p > 1e-12 {
                prop_assert!(linalg::max_abs(&(rho.entries() - sigma.entries())) <= 1e-10);
            }
        }
    }

    #[test]
    fn stinespring_channels_are_cptp(seed: u64, d_in in 1usize..=4, d_out in 1usize..=4, env in 1usize..=3) {
        let c = stinespring(d_in, d_out, env, &mut rng(seed));
        prop_assert!(c.tp_defect() <= 1e-12);
        prop_assert!(c.choi_min_eigenvalue().unwrap() >= -1e-12);
        prop_assert!(c.kraus().len() <= env.max(d_in.div_ceil(d_out)));
    }

    #[test]
    fn choi_application_matches_kraus(seed: u64, d_in in 1usize..=4, d_out in 1usize..=4, env in 1usize..=4) {
        let mut r = rng(seed);
        let c = stinespring(d_in, d_out, env, &mut r);
        let x = linalg::random_ginibre(d_in, d_in, &mut r);
        prop_assert!(linalg::max_abs(&(c.apply_op(&x) - c.apply_via_choi(&x))) <= 1e-11);
    }

    #[test]
    fn reversible_interactions_invert(seed: u64, n in 1usize..=3, d in 1usize..=4) {
        let i = ReversibleCQInteraction::random(n, d, &mut rng(seed));
        let r = i.to_channel();
        let id = Channel::identity(vec![n, d]).unwrap();
        let explicit = Channel::compose(&i.inverse().to_channel(), &r).unwrap();
        prop_assert!(explicit.distance_on_basis(&id).unwrap() <= 1e-10);
        let rev = reversibility(&r, 1e-9).unwrap();
        let inverse = rev.inverse().expect("reversible");
        let computed = Channel::compose(inverse, &r).unwrap();
        prop_assert!(computed.distance_on_basis(&id).unwrap() <= 1e-10);
        prop_assert!(is_cq_preserving(&r, 0, 1e-9).unwrap().preserving);
    }

    #[test]
    fn normal_form_recovers_interaction(seed: u64, n in 1usize..=3, d in 1usize..=4) {
        let i = ReversibleCQInteraction::random(n, d, &mut rng(seed));
        let nf = decompose_reversible(&i.to_channel(), 1e-8).unwrap();
        prop_assert!(nf.residual <= 1e-8);
        prop_assert_eq!(nf.perm.as_slice(), i.perm());
        // each unitary is fixed up to a phase
        for (u, v) in i.unitaries().iter().zip(nf.interaction.unitaries()) {
            let overlap = (u.adjoint() * v).trace().norm();
            prop_assert!((overlap - d as f64).abs() <= 1e-8);
        }
    }

    #[test]
    fn leaked_copy_has_the_input_marginals(seed: u64, n in 1usize..=5) {
        let p = ClassicalDistribution::random(n, &mut rng(seed));
        let out = leak_copy(n).unwrap().apply(&p.to_density()).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-14);
        for keep in [0, 1] {
            let m = partial_trace(&out, &[n, n], &[keep]).unwrap();
            prop_assert!(linalg::max_abs(&(m.entries() - p.to_density().entries())) <= 1e-14);
        }
    }
}

#[test]
fn fixture_channels_are_cptp() {
    for c in [entangling_cnot(), decohered_cnot()] {
        assert!(c.tp_defect() <= 1e-12);
        assert!(c.choi_min_eigenvalue().unwrap() >= -1e-12);
    }
}
