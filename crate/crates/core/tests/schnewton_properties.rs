use hybrid_nogo::schnewton::{evolve, Kernel, SNParams, WaveFunctionGrid};
use proptest::prelude::*;

const N: usize = 256;
const DX: f64 = 0.1;

fn packet(center: f64, width: f64, momentum: f64) -> WaveFunctionGrid {
    WaveFunctionGrid::gaussian(N, DX, center, width, momentum).unwrap()
}

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    prop_oneof![Just(Kernel::SoftCoulomb), Just(Kernel::Linear1d)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_is_conserved(
        center in -2.0f64..2.0,
        width in 0.6f64..1.5,
        momentum in -2.0f64..2.0,
        coupling in 0.0f64..2.0,
        kernel in kernel_strategy(),
    ) {
        let psi = packet(center, width, momentum);
        let mut p = SNParams::for_grid(&psi).with_coupling(coupling);
        p.kernel = kernel;
        let out = evolve(&psi, &p, 200).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn linear_evolution_preserves_inner_products(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        width in 0.6f64..1.5,
        momentum in -1.0f64..1.0,
    ) {
        let psi1 = packet(a, width, momentum);
        let psi2 = packet(b, width, -momentum);
        let p = SNParams::for_grid(&psi1);
        let before = psi1.overlap(&psi2).unwrap();
        let after = evolve(&psi1, &p, 300).unwrap().overlap(&evolve(&psi2, &p, 300).unwrap()).unwrap();
        // modulus and phase
        prop_assert!((after - before).norm() <= 1e-10, "{before} -> {after}");
    }

    // The potential is not periodic, so equivariance is exact only while the
    // packet tails at the wrap point are negligible; hence the wider box.
    #[test]
    fn evolution_commutes_with_translation(
        shift in -20isize..=20,
        width in 0.6f64..1.2,
        coupling in 0.0f64..2.0,
        kernel in kernel_strategy(),
    ) {
        let psi = WaveFunctionGrid::gaussian(2 * N, DX, 0.0, width, 0.3).unwrap();
        let mut p = SNParams::for_grid(&psi).with_coupling(coupling);
        p.kernel = kernel;
        let moved_then_evolved = evolve(&psi.translate(shift), &p, 50).unwrap();
        let evolved_then_moved = evolve(&psi, &p, 50).unwrap().translate(shift);
        prop_assert!(moved_then_evolved.l2_distance(&evolved_then_moved).unwrap() <= 1e-12);
    }
}
