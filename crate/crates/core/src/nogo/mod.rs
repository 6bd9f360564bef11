//! The classification engine: which of the four conditions (irreducible
//! quantum system, reversible interaction, quantum-to-classical signalling,
//! classical `G`) an interaction satisfies, and the certificates behind the
//! verdict.
//!
//! Interactions are bipartite channels on `[G, S]` with the classical
//! factor first.

mod campaign;
mod composite;
mod normal_form;
mod observables;
mod search;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channels::reversibility::classify;
use crate::channels::{inverse_diagnostics, is_cq_preserving_on, Channel, Reversibility};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::sectors::{algebra_closure, decompose, full_algebra_generators, SectorDecomposition};

pub use campaign::{
    evaluate_sample, run_campaign, CampaignConfig, CampaignReport, PairSummary, SampleRecord,
    SampleResiduals, FACTORIZATION_MAX, NONDISTURBANCE_MAX, POINTER_MAX, SIGNALLING_MAX,
};
pub use composite::{
    build_composite, build_composite_with_inverse, factorization_residual, factorization_residual_of,
    nondisturbance_residual, pointer_state, pointer_state_of, sector_factorization_residual,
    SectorFactorization,
};
pub use normal_form::{decompose_reversible, NormalForm};
pub use observables::{effective_observables, signalling_bound, EffectiveObservables};
pub use search::{
    adversarial_search, search_from, SearchConfig, SearchOutcome, SearchPoint, TracePoint, FEASIBILITY_TOL,
};

/// Default tolerance for the condition tests.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `S` is irreducible.
    #[serde(rename = "i")]
    FullyNonclassical,
    /// The interaction has a physical inverse.
    #[serde(rename = "ii")]
    Reversible,
    /// `S` signals to `G`.
    #[serde(rename = "iii")]
    Signalling,
    /// `G` stays classical.
    #[serde(rename = "iv")]
    GClassical,
}

impl Condition {
    pub const ALL: [Condition; 4] =
        [Condition::FullyNonclassical, Condition::Reversible, Condition::Signalling, Condition::GClassical];

    pub fn label(self) -> &'static str {
        match self {
            Condition::FullyNonclassical => "i",
            Condition::Reversible => "ii",
            Condition::Signalling => "iii",
            Condition::GClassical => "iv",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremVerdict {
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_iii: bool,
    pub cond_iv: bool,
    pub violated: Vec<Condition>,
    pub sectors: Vec<usize>,
    pub residuals: BTreeMap<String, f64>,
}

impl TheoremVerdict {
    fn new(conds: [bool; 4], sectors: Vec<usize>, residuals: BTreeMap<String, f64>) -> Result<Self> {
        let violated: Vec<Condition> = Condition::ALL
            .iter()
            .zip(conds)
            .filter(|(_, holds)| !holds)
            .map(|(c, _)| *c)
            .collect();
        if violated.is_empty() {
            return Err(Error::TheoremViolation(format!(
                "all four conditions hold; residuals {}",
                serde_json::to_string(&residuals).unwrap_or_default()
            )));
        }
        let [cond_i, cond_ii, cond_iii, cond_iv] = conds;
        Ok(Self { cond_i, cond_ii, cond_iii, cond_iv, violated, sectors, residuals })
    }
}

/// Verdict plus the reversibility outcome it was based on.
pub(crate) struct Assessment {
    pub verdict: TheoremVerdict,
    pub reversibility: Reversibility,
}

/// Evaluates the four conditions.
///
/// `generators` generate the operator algebra of `S` (empty means the full
/// matrix algebra). When `S` is reducible, signalling and CQ preservation
/// are judged on inputs from that algebra only, since coherences between
/// sectors are not physical states. Fails with
/// [`Error::TheoremViolation`] if all four conditions hold.
pub fn theorem_report(r: &Channel, generators: &[CMatrix], tol: f64) -> Result<TheoremVerdict> {
    Ok(assess(r, generators, tol)?.verdict)
}

pub(crate) fn assess(r: &Channel, generators: &[CMatrix], tol: f64) -> Result<Assessment> {
    if r.in_dims().len() != 2 || r.in_dims() != r.out_dims() {
        return Err(Error::Dimension(format!(
            "expected an interaction [n, d] -> [n, d], got {:?} -> {:?}",
            r.in_dims(),
            r.out_dims()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let d = r.in_dims()[1];
    let owned;
    let generators = if generators.is_empty() {
        owned = full_algebra_generators(d);
        &owned
    } else {
        generators
    };
    if generators.iter().any(|g| g.nrows() != d || g.ncols() != d) {
        return Err(Error::Dimension(format!("generators must be {d}x{d}")));
    }

    let sectors: SectorDecomposition = decompose(generators)?;
    let cond_i = sectors.num_blocks() == 1;
    let algebra = if cond_i { full_algebra_generators(d) } else { algebra_closure(generators, d * d)? };

    let cq = is_cq_preserving_on(r, 0, &algebra, tol)?;
    let diag = inverse_diagnostics(r)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("irreversibility".to_string(), diag.residual());
    residuals.insert("smallest_singular_value".to_string(), diag.smallest_singular_value);
    if !diag.singular() {
        residuals.insert("inverse_min_choi_eigenvalue".to_string(), diag.min_choi_eigenvalue);
        residuals.insert("inverse_tp_defect".to_string(), diag.tp_defect);
    }
    let reversibility = classify(r, diag, tol)?;

    let mut effects = observables::observables_unchecked(r, 0)?;
    if !cond_i {
        effects = effects.restricted_to(&algebra);
    }
    let signalling = signalling_bound(&effects);
    residuals.insert("signalling_bound".to_string(), signalling);
    residuals.insert("cq_residual".to_string(), cq.residual);

    let conds = [cond_i, reversibility.is_reversible(), signalling > tol, cq.preserving];
    let verdict = TheoremVerdict::new(conds, sectors.block_dims().to_vec(), residuals)?;
    Ok(Assessment { verdict, reversibility })
}

/// `sum_{x,i} |perms[i][x]><x| (x) V_i U_{x,i} V_i^†`: a reversible
/// interaction over a superselected system that may permute `G` differently
/// in each sector. `unitaries[i][x]` acts on sector `i`.
pub fn sector_interaction(
    sectors: &SectorDecomposition,
    perms: &[Vec<usize>],
    unitaries: &[Vec<CMatrix>],
) -> Result<Channel> {
    let k = sectors.num_blocks();
    if perms.len() != k || unitaries.len() != k {
        return Err(Error::Dimension(format!("need data for {k} sectors")));
    }
    let n = perms[0].len();
    let d = sectors.dim();
    let mut u = linalg::zeros(n * d, n * d);
    for i in 0..k {
        let v = sectors.block_basis(i);
        if perms[i].len() != n || unitaries[i].len() != n {
            return Err(Error::Dimension(format!("sector {i} needs {n} labels and unitaries")));
        }
        for x in 0..n {
            let w = &v * &unitaries[i][x] * v.adjoint();
            let y = perms[i][x];
            if y >= n {
                return Err(Error::Dimension(format!("label {y} out of range")));
            }
            let mut blk = u.view_mut((y * d, x * d), (d, d));
            blk += w;
        }
    }
    Channel::unitary(vec![n, d], u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::fixtures;

    #[test]
    fn fixtures_reproduce_the_condition_table() {
        for fx in fixtures() {
            let v = theorem_report(&fx.channel, &fx.generators, DEFAULT_TOL).unwrap();
            assert_eq!(v.violated, fx.expected_violated, "{}", fx.id.name());
        }
    }

    #[test]
    fn sector_fixture_reports_its_blocks() {
        let fx = fixtures().into_iter().find(|f| f.id == crate::channels::FixtureId::SectorMeasurement).unwrap();
        let v = theorem_report(&fx.channel, &fx.generators, DEFAULT_TOL).unwrap();
        assert_eq!(v.sectors, vec![1, 3]);
        assert!(v.cond_ii && v.cond_iii && v.cond_iv && !v.cond_i);
    }

    #[test]
    fn condition_labels_serialize_as_roman_numerals() {
        let s = serde_json::to_string(&Condition::ALL).unwrap();
        assert_eq!(s, r#"["i","ii","iii","iv"]"#);
    }

    #[test]
    fn all_true_verdicts_are_refused() {
        let r = TheoremVerdict::new([true; 4], vec![2], BTreeMap::new());
        assert!(matches!(r, Err(Error::TheoremViolation(_))));
    }

    #[test]
    fn non_square_interactions_are_rejected() {
        let leak = crate::channels::leak_copy(2).unwrap();
        assert!(theorem_report(&leak, &[], DEFAULT_TOL).is_err());
    }
}
