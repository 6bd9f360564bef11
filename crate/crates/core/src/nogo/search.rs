//! Derivative-free search for CQ channels that signal from `S` to `G`
//! while remaining reversible.
//!
//! A channel is parameterized by one complex `d x d` matrix `B_{yx}` per
//! pair of classical labels. Normalizing `A_{yx} = B_{yx} M_x^{-1/2}` with
//! `M_x = sum_y B_{yx}^† B_{yx}` gives the CQ channel
//! `|x><x| (x) rho -> sum_y |y><y| (x) A_{yx} rho A_{yx}^†`.
//! The objective is `signalling - penalty * irreversibility`, maximized by
//! compass pattern search at three decreasing scales.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::observables::{signalling_bound, EffectiveObservables};
use crate::channels::{CqMap, ReversibleCQInteraction, SINGULAR_RESIDUAL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::seed::derive_seed;

/// Irreversibility at or below which a point counts as reversible.
pub const FEASIBILITY_TOL: f64 = 1e-8;

const NORMALIZATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig {
    pub n: usize,
    pub d: usize,
    pub restarts: usize,
    pub penalty: f64,
    pub seed: u64,
    /// Initial step of each refinement stage.
    pub scales: Vec<f64>,
    /// Iterations per stage.
    pub iterations: usize,
}

impl SearchConfig {
    pub fn new(n: usize, d: usize, restarts: usize, penalty: f64, seed: u64) -> Self {
        Self { n, d, restarts, penalty, seed, scales: vec![0.5, 0.05, 0.005], iterations: 200 }
    }

    fn dim(&self) -> usize {
        2 * self.n * self.n * self.d * self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchPoint {
    pub signalling: f64,
    pub irreversibility: f64,
    pub objective: f64,
}

/// Best point of a restart at the end of each stage.
#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub restart: usize,
    pub stage: usize,
    pub start: &'static str,
    pub evaluations: usize,
    pub best: SearchPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    /// Signalling at the best objective found.
    pub best_signalling: f64,
    /// Irreversibility at the best objective found.
    pub best_irreversibility: f64,
    pub best_objective: f64,
    /// Largest signalling among all evaluated points with irreversibility
    /// at most [`FEASIBILITY_TOL`]; `None` if no such point was seen.
    pub feasible_signalling: Option<f64>,
    pub evaluations: usize,
    pub trace: Vec<TracePoint>,
}

fn conditional_kraus(params: &[f64], n: usize, d: usize) -> Option<Vec<CMatrix>> {
    let dd = d * d;
    let b: Vec<CMatrix> = (0..n * n)
        .map(|k| CMatrix::from_fn(d, d, |i, j| {
            let o = 2 * (k * dd + i * d + j);
            C64::new(params[o], params[o + 1])
        }))
        .collect();
    let mut ops = vec![linalg::zeros(d, d); n * n];
    for x in 0..n {
        let mut m = linalg::zeros(d, d);
        for y in 0..n {
            m += b[y * n + x].adjoint() * &b[y * n + x];
        }
        let (vals, vecs) = linalg::eigh(&m).ok()?;
        if vals[0] <= NORMALIZATION_FLOOR * vals[d - 1].max(1.0) {
            return None;
        }
        let inv_sqrt = CMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|k| vecs[(i, k)] * vecs[(j, k)].conj() / vals[k].sqrt()).sum::<C64>()
        });
        for y in 0..n {
            ops[y * n + x] = &b[y * n + x] * &inv_sqrt;
        }
    }
    Some(ops)
}

/// Signalling and irreversibility of the channel with parameters `params`.
pub fn evaluate(params: &[f64], n: usize, d: usize, penalty: f64) -> SearchPoint {
    let Some(ops) = conditional_kraus(params, n, d) else {
        return SearchPoint { signalling: 0.0, irreversibility: SINGULAR_RESIDUAL, objective: -penalty * SINGULAR_RESIDUAL };
    };
    let map = CqMap::from_conditional_kraus(n, d, &ops).expect("shapes match");
    let signalling = EffectiveObservables::from_parts(map.observables())
        .map(|f| signalling_bound(&f))
        .unwrap_or(0.0);
    let irreversibility = map
        .inverse_diagnostics()
        .map(|diag| diag.residual())
        .unwrap_or(SINGULAR_RESIDUAL)
        .min(SINGULAR_RESIDUAL);
    let objective = signalling - penalty * irreversibility;
    SearchPoint { signalling, irreversibility, objective: if objective.is_nan() { f64::NEG_INFINITY } else { objective } }
}

fn params_of(interaction: &ReversibleCQInteraction) -> Vec<f64> {
    let (n, d) = (interaction.n(), interaction.d());
    let mut p = vec![0.0; 2 * n * n * d * d];
    for x in 0..n {
        let k = interaction.perm()[x] * n + x;
        let u = &interaction.unitaries()[x];
        for i in 0..d {
            for j in 0..d {
                let o = 2 * (k * d * d + i * d + j);
                p[o] = u[(i, j)].re;
                p[o + 1] = u[(i, j)].im;
            }
        }
    }
    p
}

struct LocalResult {
    best: SearchPoint,
    feasible_signalling: Option<f64>,
    evaluations: usize,
    trace: Vec<TracePoint>,
}

fn local_search(start: Vec<f64>, cfg: &SearchConfig, restart: usize, label: &'static str) -> LocalResult {
    let (n, d, penalty) = (cfg.n, cfg.d, cfg.penalty);
    let mut x = start;
    let mut best = evaluate(&x, n, d, penalty);
    let mut evaluations = 1;
    let mut feasible = None::<f64>;
    let mut note = |p: &SearchPoint| {
        if p.irreversibility <= FEASIBILITY_TOL {
            feasible = Some(feasible.map_or(p.signalling, |f: f64| f.max(p.signalling)));
        }
    };
    note(&best);
    let mut trace = Vec::new();
    for (stage, &scale) in cfg.scales.iter().enumerate() {
        let mut step = scale;
        for _ in 0..cfg.iterations {
            let mut improved = false;
            'poll: for k in 0..x.len() {
                for sign in [1.0, -1.0] {
                    let old = x[k];
                    x[k] = old + sign * step;
                    let p = evaluate(&x, n, d, penalty);
                    evaluations += 1;
                    note(&p);
                    if p.objective > best.objective {
                        best = p;
                        improved = true;
                        break 'poll;
                    }
                    x[k] = old;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        trace.push(TracePoint { restart, stage, start: label, evaluations, best });
    }
    LocalResult { best, feasible_signalling: feasible, evaluations, trace }
}

fn merge(results: Vec<LocalResult>) -> SearchOutcome {
    let mut best: Option<SearchPoint> = None;
    let mut feasible: Option<f64> = None;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    for r in results {
        if best.is_none_or(|b| r.best.objective > b.objective) {
            best = Some(r.best);
        }
        if let Some(f) = r.feasible_signalling {
            feasible = Some(feasible.map_or(f, |g| g.max(f)));
        }
        evaluations += r.evaluations;
        trace.extend(r.trace);
    }
    let best = best.unwrap_or(SearchPoint {
        signalling: 0.0,
        irreversibility: SINGULAR_RESIDUAL,
        objective: f64::NEG_INFINITY,
    });
    SearchOutcome {
        best_signalling: best.signalling,
        best_irreversibility: best.irreversibility,
        best_objective: best.objective,
        feasible_signalling: feasible,
        evaluations,
        trace,
    }
}

/// Runs `restarts` independent local searches, each seeded with
/// `derive_seed(seed, restart)`. Even restarts start at a random reversible
/// interaction, odd ones at random Gaussian parameters.
pub fn adversarial_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.n < 2 || cfg.d < 2 {
        return Err(Error::Parameter(format!("search needs n, d >= 2, got {}x{}", cfg.n, cfg.d)));
    }
    if !(cfg.penalty >= 0.0) || cfg.scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Parameter("penalty must be nonnegative and scales positive".into()));
    }
    let results = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r as u64));
            if r % 2 == 0 {
                let start = ReversibleCQInteraction::random(cfg.n, cfg.d, &mut rng);
                local_search(params_of(&start), cfg, r, "reversible")
            } else {
                let start = (0..cfg.dim()).map(|_| rng.sample(StandardNormal)).collect();
                local_search(start, cfg, r, "random")
            }
        })
        .collect();
    Ok(merge(results))
}

/// A single local search started at `start`.
pub fn search_from(start: &ReversibleCQInteraction, cfg: &SearchConfig) -> Result<SearchOutcome> {
    if start.n() != cfg.n || start.d() != cfg.d {
        return Err(Error::Dimension("start point does not match the search dims".into()));
    }
    Ok(merge(vec![local_search(params_of(start), cfg, 0, "given")]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversible_parameters_evaluate_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = ReversibleCQInteraction::random(2, 2, &mut rng);
        let p = evaluate(&params_of(&r), 2, 2, 1e4);
        assert!(p.signalling < 1e-12);
        assert!(p.irreversibility < 1e-12);
    }

    #[test]
    fn decohered_cnot_parameters() {
        // A_{yx} = |x xor y><x xor y|
        let mut p = vec![0.0; 32];
        for x in 0..2 {
            for y in 0..2 {
                let s = x ^ y;
                let k = y * 2 + x;
                p[2 * (k * 4 + s * 2 + s)] = 1.0;
            }
        }
        // B blocks are singular per y, but M_x = I
        let pt = evaluate(&p, 2, 2, 0.0);
        assert!((pt.signalling - 1.0).abs() < 1e-12);
        assert_eq!(pt.irreversibility, SINGULAR_RESIDUAL);
    }

    #[test]
    fn degenerate_parameters_are_penalized() {
        let pt = evaluate(&vec![0.0; 32], 2, 2, 1.0);
        assert_eq!(pt.irreversibility, SINGULAR_RESIDUAL);
    }

    #[test]
    fn small_search_is_deterministic() {
        let mut cfg = SearchConfig::new(2, 2, 2, 0.0, 7);
        cfg.iterations = 10;
        let a = adversarial_search(&cfg).unwrap();
        let b = adversarial_search(&cfg).unwrap();
        assert_eq!(a.best_objective, b.best_objective);
        assert!(adversarial_search(&SearchConfig::new(1, 2, 1, 0.0, 0)).is_err());
    }
}
