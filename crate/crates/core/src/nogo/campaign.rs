//! Randomized verification over reversible CQ interactions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::composite::{build_composite_with_inverse, factorization_residual_of, nondisturbance_residual, pointer_state_of};
use super::{assess, Condition};
use crate::channels::{ReversibleCQInteraction, Reversibility};
use crate::error::{Error, Result};
use crate::hilbert::{ClassicalDistribution, DensityMatrix};
use crate::sectors::clock_shift_generators;
use crate::seed::derive_seed;

pub const SIGNALLING_MAX: f64 = 1e-10;
pub const NONDISTURBANCE_MAX: f64 = 1e-9;
pub const POINTER_MAX: f64 = 1e-9;
pub const FACTORIZATION_MAX: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CampaignConfig {
    /// `(n, d)` pairs: classical and quantum dimension.
    pub dims: Vec<(usize, usize)>,
    /// Samples per dims pair.
    pub samples: usize,
    pub seed: u64,
    /// Tolerance of the condition tests.
    pub tol: f64,
    /// Random probe states per sample, on top of the computational basis.
    pub random_probes: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            dims: vec![(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)],
            samples: 100,
            seed: 42,
            tol: super::DEFAULT_TOL,
            random_probes: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SampleResiduals {
    pub signalling: f64,
    pub nondisturbance: f64,
    pub pointer_independence: f64,
    pub factorization: f64,
    pub irreversibility: f64,
}

impl SampleResiduals {
    fn max(self, o: Self) -> Self {
        Self {
            signalling: self.signalling.max(o.signalling),
            nondisturbance: self.nondisturbance.max(o.nondisturbance),
            pointer_independence: self.pointer_independence.max(o.pointer_independence),
            factorization: self.factorization.max(o.factorization),
            irreversibility: self.irreversibility.max(o.irreversibility),
        }
    }

    /// Names of the residuals above their thresholds.
    pub fn breaches(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !(self.signalling <= SIGNALLING_MAX) {
            out.push("signalling");
        }
        if !(self.nondisturbance <= NONDISTURBANCE_MAX) {
            out.push("nondisturbance");
        }
        if !(self.pointer_independence <= POINTER_MAX) {
            out.push("pointer_independence");
        }
        if !(self.factorization <= FACTORIZATION_MAX) {
            out.push("factorization");
        }
        out
    }
}

/// One sample, with everything needed to replay it.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub n: usize,
    pub d: usize,
    pub index: usize,
    pub seed: u64,
    pub residuals: SampleResiduals,
    pub violated: Vec<Condition>,
    /// Set when all four conditions held at once.
    pub theorem_violation: bool,
    pub reversible: bool,
}

impl SampleRecord {
    pub fn failed(&self) -> bool {
        self.theorem_violation || !self.reversible || !self.residuals.breaches().is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairSummary {
    pub n: usize,
    pub d: usize,
    pub samples: usize,
    pub max: SampleResiduals,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub samples: usize,
    pub pairs: Vec<PairSummary>,
    pub max: SampleResiduals,
    pub theorem_violations: usize,
    pub failures: Vec<SampleRecord>,
}

impl CampaignReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Draws the interaction, the classical preparation and the probes of one
/// sample from `seed`, and measures all certificates.
pub fn evaluate_sample(n: usize, d: usize, index: usize, seed: u64, cfg: &CampaignConfig) -> Result<SampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interaction = ReversibleCQInteraction::random(n, d, &mut rng);
    let s = ClassicalDistribution::random(n, &mut rng);
    let mut probes: Vec<DensityMatrix> = (0..d).map(|i| DensityMatrix::basis(d, i)).collect::<Result<_>>()?;
    probes.extend((0..cfg.random_probes).map(|_| DensityMatrix::random(d, &mut rng)));

    let r = interaction.to_channel();
    let mut record = SampleRecord {
        n,
        d,
        index,
        seed,
        residuals: SampleResiduals::default(),
        violated: Vec::new(),
        theorem_violation: false,
        reversible: false,
    };
    let assessment = match assess(&r, &clock_shift_generators(d), cfg.tol) {
        Ok(a) => a,
        Err(Error::TheoremViolation(_)) => {
            record.theorem_violation = true;
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    let v = &assessment.verdict;
    record.violated = v.violated.clone();
    record.residuals.signalling = v.residuals["signalling_bound"];
    record.residuals.irreversibility = v.residuals["irreversibility"];
    let Reversibility::Reversible { inverse } = assessment.reversibility else {
        return Ok(record);
    };
    record.reversible = true;
    let e = build_composite_with_inverse(&r, &inverse, &s)?;
    record.residuals.nondisturbance = nondisturbance_residual(&e)?;
    record.residuals.pointer_independence = pointer_state_of(&e, &probes)?.1;
    record.residuals.factorization = factorization_residual_of(&e)?;
    Ok(record)
}

/// Runs `cfg.samples` samples per dims pair in parallel. Sample `k` (counted
/// across pairs in order) uses the seed `derive_seed(cfg.seed, k)`, so the
/// report does not depend on scheduling.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    for &(n, d) in &cfg.dims {
        if n < 1 || d < 1 {
            return Err(Error::Parameter(format!("invalid dims {n}x{d}")));
        }
    }
    let jobs: Vec<(usize, usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&(n, d)| (0..cfg.samples).map(move |i| (n, d, i)))
        .collect();
    let records = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(n, d, i))| evaluate_sample(n, d, i, derive_seed(cfg.seed, k as u64), cfg))
        .collect::<Result<Vec<_>>>()?;

    let pairs = cfg
        .dims
        .iter()
        .enumerate()
        .map(|(p, &(n, d))| PairSummary {
            n,
            d,
            samples: cfg.samples,
            max: records[p * cfg.samples..(p + 1) * cfg.samples]
                .iter()
                .fold(SampleResiduals::default(), |acc, r| acc.max(r.residuals)),
        })
        .collect();
    let max = records.iter().fold(SampleResiduals::default(), |acc, r| acc.max(r.residuals));
    let theorem_violations = records.iter().filter(|r| r.theorem_violation).count();
    let failures = records.into_iter().filter(SampleRecord::failed).collect();
    Ok(CampaignReport { samples: jobs.len(), pairs, max, theorem_violations, failures })
}
