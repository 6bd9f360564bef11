//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hybrid_nogo::channels::{
    fixtures, is_cq_preserving, reversibility, Channel, FixtureId, ReversibleCQInteraction,
};
use hybrid_nogo::hilbert::{partial_trace, ClassicalDistribution, DensityMatrix};
use hybrid_nogo::linalg::{self, kron, CMatrix, C64};
use hybrid_nogo::nogo::{
    adversarial_search, effective_observables, run_campaign, sector_factorization_residual,
    sector_interaction, theorem_report, CampaignConfig, Condition, SearchConfig, DEFAULT_TOL,
    FACTORIZATION_MAX, FEASIBILITY_TOL, NONDISTURBANCE_MAX, POINTER_MAX, SIGNALLING_MAX,
};
use hybrid_nogo::schnewton::{
    energy, evolve, free_gaussian, gravitational_potential, max_overlap_deviation, overlap_drift, SNParams,
    WaveFunctionGrid,
};
use hybrid_nogo::sectors::{block_algebra_generators, decompose};
use hybrid_nogo::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one check: pass flag and a one-line summary.
struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn conjugate(ops: &[CMatrix], u: &CMatrix) -> Vec<CMatrix> {
    ops.iter().map(|g| u * g * u.adjoint()).collect()
}

fn fixture_table(violations: &mut usize) -> Outcome {
    let expected = [
        (FixtureId::EntanglingCnot, vec![Condition::GClassical]),
        (FixtureId::DecoheredCnot, vec![Condition::Reversible]),
        (FixtureId::SectorMeasurement, vec![Condition::FullyNonclassical]),
    ];
    let all = fixtures();
    let mut parts = Vec::new();
    let mut pass = true;
    for (id, want) in expected {
        let fx = all.iter().find(|f| f.id == id).expect("fixture exists");
        match theorem_report(&fx.channel, &fx.generators, DEFAULT_TOL) {
            Ok(v) => {
                let labels: Vec<&str> = v.violated.iter().map(|c| c.label()).collect();
                parts.push(format!("{}={{{}}}", id.name(), labels.join(",")));
                pass &= v.violated == want;
            }
            Err(Error::TheoremViolation(_)) => {
                *violations += 1;
                pass = false;
            }
            Err(e) => {
                parts.push(format!("{}: {e}", id.name()));
                pass = false;
            }
        }
    }
    Outcome::new(pass, parts.join(" "))
}

fn theorem_campaign(violations: &mut usize) -> Outcome {
    let cfg = CampaignConfig { samples: 167, seed: 42, ..Default::default() };
    let start = Instant::now();
    let report = match run_campaign(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("campaign error: {e}")),
    };
    let elapsed = start.elapsed();
    *violations += report.theorem_violations;
    let m = report.max;
    let pass = report.samples >= 1000
        && report.passed()
        && m.signalling <= SIGNALLING_MAX
        && m.nondisturbance <= NONDISTURBANCE_MAX
        && m.pointer_independence <= POINTER_MAX
        && m.factorization <= FACTORIZATION_MAX
        && elapsed <= Duration::from_secs(60);
    Outcome::new(
        pass,
        format!(
            "{} samples in {:.1}s; max signalling {:.1e}, nondisturbance {:.1e}, pointer {:.1e}, factorization {:.1e}",
            report.samples,
            elapsed.as_secs_f64(),
            m.signalling,
            m.nondisturbance,
            m.pointer_independence,
            m.factorization
        ),
    )
}

/// Theorem verdicts over assorted interactions, reversible or not, CQ or
/// not, reducible or not.
fn falsification_sweep(violations: &mut usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFA15);
    let mut checked = 0;
    let mut errors = 0;
    let mut record = |r: hybrid_nogo::Result<hybrid_nogo::nogo::TheoremVerdict>| match r {
        Ok(_) => checked += 1,
        Err(Error::TheoremViolation(_)) => {
            checked += 1;
            *violations += 1;
        }
        Err(_) => errors += 1,
    };
    for fx in fixtures() {
        record(theorem_report(&fx.channel, &fx.generators, DEFAULT_TOL));
    }
    for k in 0..60 {
        let (n, d) = (2 + k % 2, 2 + k % 3);
        let full = Channel::unitary(vec![n, d], linalg::haar_unitary(n * d, &mut rng)).unwrap();
        record(theorem_report(&full, &[], DEFAULT_TOL));
        let dephase = Channel::dephasing(vec![n, d], 0).unwrap();
        let cq = Channel::compose(&dephase, &Channel::compose(&full, &dephase).unwrap()).unwrap();
        record(theorem_report(&cq, &[], DEFAULT_TOL));
        let rev = ReversibleCQInteraction::random(n, d, &mut rng).to_channel();
        record(theorem_report(&rev, &[], DEFAULT_TOL));
    }
    // reversible interactions over the hidden-basis [1, 3] system
    for _ in 0..20 {
        let u = linalg::haar_unitary(4, &mut rng);
        let gens = conjugate(&block_algebra_generators(&[1, 3]), &u);
        let dec = decompose(&gens).unwrap();
        let r = random_sector_interaction(&dec, 2, &mut rng);
        record(theorem_report(&r, &gens, DEFAULT_TOL));
    }
    let pass = *violations == 0 && errors == 0;
    Outcome::new(pass, format!("{checked} verdicts, {} with all four conditions true, {errors} errors", *violations))
}

fn random_sector_interaction<R: Rng>(dec: &hybrid_nogo::sectors::SectorDecomposition, n: usize, rng: &mut R) -> Channel {
    let perms: Vec<Vec<usize>> = (0..dec.num_blocks())
        .map(|_| ReversibleCQInteraction::random(n, 1, rng).perm().to_vec())
        .collect();
    let unitaries: Vec<Vec<CMatrix>> = dec
        .block_dims()
        .iter()
        .map(|&di| (0..n).map(|_| linalg::haar_unitary(di, rng)).collect())
        .collect();
    sector_interaction(dec, &perms, &unitaries).unwrap()
}

fn adversarial() -> Outcome {
    let start = Instant::now();
    let constrained = adversarial_search(&SearchConfig::new(2, 2, 20, 1e4, 42));
    let unconstrained = adversarial_search(&SearchConfig::new(2, 2, 20, 0.0, 42));
    let elapsed = start.elapsed();
    let (Ok(c), Ok(u)) = (constrained, unconstrained) else {
        return Outcome::new(false, "search failed to run");
    };
    let feasible = c.feasible_signalling.unwrap_or(f64::INFINITY);
    let pass = c.best_irreversibility <= FEASIBILITY_TOL
        && c.best_signalling <= 1e-6
        && feasible <= 1e-6
        && u.best_signalling >= 0.9
        && elapsed <= Duration::from_secs(120);
    Outcome::new(
        pass,
        format!(
            "penalty 1e4: signalling {:.1e} at irreversibility {:.1e}, best reversible signalling {:.1e}; penalty 0: signalling {:.4} at irreversibility {:.1}; {:.1}s",
            c.best_signalling,
            c.best_irreversibility,
            feasible,
            u.best_signalling,
            u.best_irreversibility,
            elapsed.as_secs_f64()
        ),
    )
}

fn sector_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC);
    let mut worst = 0.0_f64;
    let mut mismatches = 0;
    let layouts: [&[usize]; 3] = [&[1, 3], &[2, 2], &[1, 1, 2]];
    for blocks in layouts {
        let d: usize = blocks.iter().sum();
        for _ in 0..20 {
            let u = linalg::haar_unitary(d, &mut rng);
            let gens = conjugate(&block_algebra_generators(blocks), &u);
            match decompose(&gens) {
                Ok(dec) => {
                    if dec.block_dims() != blocks {
                        mismatches += 1;
                    }
                    for g in &gens {
                        worst = worst.max(dec.off_block_residual(g));
                    }
                }
                Err(_) => mismatches += 1,
            }
        }
    }
    Outcome::new(
        mismatches == 0 && worst <= 1e-8,
        format!("60 hidden bases, {mismatches} block mismatches, max off-block {worst:.1e}"),
    )
}

fn reducible_refinement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5);
    let mut worst = 0.0_f64;
    let mut invalid = 0;
    for k in 0..40 {
        let n = 2 + k % 2;
        let u = linalg::haar_unitary(4, &mut rng);
        let gens = conjugate(&block_algebra_generators(&[1, 3]), &u);
        let dec = decompose(&gens).unwrap();
        let r = random_sector_interaction(&dec, n, &mut rng);
        if !reversibility(&r, DEFAULT_TOL).unwrap().is_reversible() {
            invalid += 1;
            continue;
        }
        match sector_factorization_residual(&r, &dec) {
            Ok(f) => {
                worst = worst.max(f.residual);
                if f.which_sector_map(&ClassicalDistribution::random(n, &mut rng)).is_err() {
                    invalid += 1;
                }
            }
            Err(_) => invalid += 1,
        }
    }
    Outcome::new(
        invalid == 0 && worst <= 1e-8,
        format!("40 interactions, max residual {worst:.1e}, {invalid} invalid"),
    )
}

fn schrodinger_newton() -> Outcome {
    let (n, dx, sigma) = (1024, 0.1, 1.0);
    let mut notes = Vec::new();
    let mut pass = true;

    // free spreading until the width doubles
    let t_double = 2.0 * 3.0_f64.sqrt() * sigma * sigma;
    let steps = 7000;
    let psi0 = WaveFunctionGrid::gaussian(n, dx, 0.0, sigma, 0.0).unwrap();
    let free = SNParams::for_grid(&psi0).with_dt(t_double / steps as f64);
    let out = evolve(&psi0, &free, steps).unwrap();
    let exact = free_gaussian(n, dx, sigma, 1.0, t_double).unwrap();
    let l2 = out.l2_distance(&exact).unwrap();
    pass &= l2 <= 1e-4 && out.edge_mass(0.1) <= 1e-10;
    notes.push(format!("free L2 {l2:.1e}"));

    // self-gravitating packet
    let p = SNParams::for_grid(&psi0).with_coupling(1.0);
    let e0 = energy(&psi0, &p).unwrap();
    let a = evolve(&psi0, &p, 1000).unwrap();
    let half = p.clone().with_dt(p.dt / 2.0);
    let b = evolve(&psi0, &half, 2000).unwrap();
    let norm_drift = (a.norm() - 1.0).abs().max((b.norm() - 1.0).abs());
    let drift_a = (energy(&a, &p).unwrap() - e0) / e0.abs();
    let drift_b = (energy(&b, &p).unwrap() - e0) / e0.abs();
    let energy_ratio = drift_a / drift_b;
    pass &= norm_drift <= 1e-8 && drift_a.abs() <= 1e-6 && (3.5..=4.5).contains(&energy_ratio);
    notes.push(format!("norm {norm_drift:.1e}, energy {:.1e} (ratio {energy_ratio:.2})", drift_a.abs()));

    let fine = p.clone().with_dt(p.dt / 8.0);
    let reference = evolve(&psi0, &fine, 8000).unwrap();
    let conv = a.l2_distance(&reference).unwrap() / b.l2_distance(&reference).unwrap();
    pass &= (3.5..=4.5).contains(&conv);
    notes.push(format!("order ratio {conv:.2}"));

    // overlap of two packets two widths apart
    let shifted = psi0.translate((2.0 * sigma / dx).round() as isize);
    let linear = max_overlap_deviation(&overlap_drift(&psi0, &shifted, &SNParams::for_grid(&psi0), 1000, 10).unwrap());
    let nonlinear = max_overlap_deviation(&overlap_drift(&psi0, &shifted, &p, 1000, 10).unwrap());
    pass &= linear <= 1e-8 && nonlinear >= 1e-3;
    notes.push(format!("overlap drift {linear:.1e} linear, {nonlinear:.1e} coupled"));

    Outcome::new(pass, notes.join("; "))
}

/// Partial trace by explicit multi-index contraction.
fn partial_trace_oracle(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let digits = |mut k: usize| -> Vec<usize> {
        let mut out = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            out[f] = k % dims[f];
            k /= dims[f];
        }
        out
    };
    let kept_index = |idx: &[usize]| keep.iter().fold(0, |acc, &f| acc * dims[f] + idx[f]);
    let kept_dim: usize = keep.iter().map(|&f| dims[f]).product();
    let mut out = linalg::zeros(kept_dim, kept_dim);
    for r in 0..total {
        let ri = digits(r);
        for c in 0..total {
            let ci = digits(c);
            let traced_equal = (0..dims.len()).filter(|f| !keep.contains(f)).all(|f| ri[f] == ci[f]);
            if traced_equal {
                out[(kept_index(&ri), kept_index(&ci))] += m[(r, c)];
            }
        }
    }
    out
}

fn oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E);

    let mut pt_err = 0.0_f64;
    for _ in 0..60 {
        let factors = rng.random_range(1..=3);
        let dims: Vec<usize> = (0..factors).map(|_| rng.random_range(1..=4)).collect();
        let total: usize = dims.iter().product();
        let keep: Vec<usize> = (0..factors).filter(|_| rng.random_bool(0.5)).collect();
        let rho = DensityMatrix::random(total, &mut rng);
        if keep.is_empty() {
            continue;
        }
        let fast = partial_trace(&rho, &dims, &keep).unwrap();
        let slow = partial_trace_oracle(rho.entries(), &dims, &keep);
        pt_err = pt_err.max(linalg::max_abs(&(fast.entries() - slow)));
    }

    let n = 128;
    let dx = 0.1;
    let amps: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let psi = WaveFunctionGrid::normalized(amps, dx).unwrap();
    let p = SNParams::for_grid(&psi).with_coupling(1.3);
    let fast = gravitational_potential(&psi, &p).unwrap();
    let rho = psi.density();
    let mut conv_err = 0.0_f64;
    for (i, phi) in fast.iter().enumerate() {
        let direct: f64 = (0..n)
            .map(|j| {
                let r = (i as f64 - j as f64) * dx;
                dx * rho[j] / (r * r + p.softening * p.softening).sqrt()
            })
            .sum::<f64>()
            * -p.coupling;
        conv_err = conv_err.max((phi - direct).abs());
    }

    let mut obs_err = 0.0_f64;
    let dephase = Channel::dephasing(vec![3, 2], 0).unwrap();
    let u = Channel::unitary(vec![3, 2], linalg::haar_unitary(6, &mut rng)).unwrap();
    let r = Channel::compose(&dephase, &Channel::compose(&u, &dephase).unwrap()).unwrap();
    assert!(is_cq_preserving(&r, 0, 1e-9).unwrap().preserving);
    let f = effective_observables(&r, 0).unwrap();
    for _ in 0..100 {
        let rho = linalg::random_density_op(2, &mut rng);
        for x in 0..3 {
            let out = r.apply_op(&kron(&linalg::matrix_unit(3, x, x), &rho));
            let g = linalg::partial_trace_op(&out, &[3, 2], &[0]).unwrap();
            let q = f.outcome_distribution(x, &rho);
            for (y, qy) in q.iter().enumerate() {
                obs_err = obs_err.max((g[(y, y)].re - qy).abs());
            }
        }
    }

    Outcome::new(
        pt_err <= 1e-12 && conv_err <= 1e-10 && obs_err <= 1e-11,
        format!("partial trace {pt_err:.1e}, potential {conv_err:.1e}, observables {obs_err:.1e}"),
    )
}

fn main() -> ExitCode {
    let mut violations = 0;
    let mut results = vec![
        ("1", "fixture condition table", fixture_table(&mut violations)),
        ("2", "reversible-interaction campaign", theorem_campaign(&mut violations)),
    ];
    let sweep = falsification_sweep(&mut violations);
    results.push(("4", "adversarial search", adversarial()));
    results.push(("5", "hidden-basis sector recovery", sector_recovery()));
    results.push(("6", "which-sector factorization", reducible_refinement()));
    results.push(("7", "Schrodinger-Newton integrator", schrodinger_newton()));
    results.push(("8", "oracle equivalences", oracles()));
    let falsification = Outcome::new(
        sweep.pass && violations == 0,
        format!("{}; {violations} in total across all checks", sweep.detail),
    );
    results.insert(2, ("3", "no all-four-true verdict", falsification));

    let mut failed = BTreeSet::new();
    for (id, name, outcome) in &results {
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("acceptance {id} [{status}] {name}: {}", outcome.detail);
        if !outcome.pass {
            failed.insert(*id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
