//! Checks a candidate against the two Lyapunov conditions with LPs and
//! extracts counterexamples.
//!
//! Positivity is searched facet by facet on the unit max-norm sphere: a point
//! with `V(x) ≤ 0` on some facet refutes it. Decrease is searched piece by
//! piece and mode by mode: a point where piece `i` is maximal with value 1,
//! lies in the domain of mode `q`, and has `c_iᵀA_q x ≥ 0` refutes it.
//! Programs are visited in a fixed order and the first feasible one wins, so
//! the verdict is deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::Candidate;
use crate::linalg::{dot, norm_inf, scale};
use crate::lp::{solve_lp_with, LinearProgram, LpConfig, LpOutcome};
use crate::system::{HybridSystem, MEMBERSHIP_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CounterexampleKind {
    Positivity,
    Decrease { witness_mode: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Offending state, scaled to `‖x‖∞ = 1`.
    pub x: Vec<f64>,
    /// Piece attaining `V(x)`.
    pub i: usize,
    #[serde(flatten)]
    pub kind: CounterexampleKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Valid,
    Refuted(Counterexample),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Valid => None,
            Verdict::Refuted(c) => Some(c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifierConfig {
    /// Tolerance used when re-checking a counterexample by direct arithmetic.
    pub tol_cex: f64,
    /// Safeguard box on the decrease programs; any feasible point is rescaled.
    pub x_max: f64,
    /// When set, `V(x) ≤ margin` on the unit sphere already refutes
    /// positivity. Off by default: only `V(x) ≤ 0` counts.
    pub positivity_margin: Option<f64>,
    pub lp: LpConfig,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            tol_cex: 1e-9,
            x_max: 1e6,
            positivity_margin: None,
            lp: LpConfig::default(),
        }
    }
}

pub fn check_positivity(c: &Candidate, cfg: &VerifierConfig) -> Result<Verdict> {
    check_positivity_counted(c, cfg, &mut 0)
}

pub fn check_positivity_counted(c: &Candidate, cfg: &VerifierConfig, lps: &mut usize) -> Result<Verdict> {
    let d = c.dim();
    let level = cfg.positivity_margin.unwrap_or(0.0);
    for facet in 0..2 * d {
        let k = facet / 2;
        let side = if facet % 2 == 0 { 1.0 } else { -1.0 };
        // Minimize t ≥ max_i c_iᵀx over the facet, with t ≤ level.
        let mut objective = vec![0.0; d + 1];
        objective[d] = -1.0;
        let mut lp = LinearProgram::new(d + 1).maximize(objective);
        for v in 0..d {
            lp.set_bounds(v, -1.0, 1.0);
        }
        lp.set_bounds(k, side, side);
        lp.set_bounds(d, f64::NEG_INFINITY, level);
        for piece in c.pieces() {
            let mut row = piece.clone();
            row.push(-1.0);
            lp.add_row(row, 0.0);
        }
        *lps += 1;
        let outcome =
            solve_lp_with(&lp, &cfg.lp).map_err(|e| e.context(format!("positivity program on facet {facet}")))?;
        let LpOutcome::Optimal { point, .. } = outcome else {
            continue;
        };
        let mut x = point[..d].to_vec();
        x[k] = side;
        let (value, i) = c.eval(&x)?;
        if value > level + cfg.tol_cex {
            return Err(Error::NumericalFailure(format!(
                "spurious positivity counterexample on facet {facet}: V(x) = {value:e}"
            )));
        }
        return Ok(Verdict::Refuted(Counterexample {
            x,
            i,
            kind: CounterexampleKind::Positivity,
        }));
    }
    Ok(Verdict::Valid)
}

/// Assumes positivity already holds, so every `{V ≤ 1}` slice is bounded.
pub fn check_decrease(c: &Candidate, sys: &HybridSystem, cfg: &VerifierConfig) -> Result<Verdict> {
    check_decrease_counted(c, sys, cfg, &mut 0)
}

pub fn check_decrease_counted(
    c: &Candidate,
    sys: &HybridSystem,
    cfg: &VerifierConfig,
    lps: &mut usize,
) -> Result<Verdict> {
    let d = c.dim();
    Error::check_dim(sys.dim(), d)?;
    for i in 0..c.num_pieces() {
        let ci = c.piece(i);
        for (q, mode) in sys.modes().iter().enumerate() {
            let lie = mode.flow().tr_mul_vec(ci);
            let mut lp = LinearProgram::new(d).maximize(lie.clone());
            lp.add_row(ci.to_vec(), 1.0);
            lp.add_row(scale(ci, -1.0), -1.0);
            for (j, cj) in c.pieces().iter().enumerate() {
                if j != i {
                    lp.add_row(cj.clone(), 1.0);
                }
            }
            for g in mode.domain() {
                lp.add_row(scale(g, -1.0), 0.0);
            }
            lp.add_row(scale(&lie, -1.0), 0.0);
            for k in 0..d {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                lp.add_row(e.clone(), cfg.x_max);
                e[k] = -1.0;
                lp.add_row(e, cfg.x_max);
            }
            *lps += 1;
            let outcome = solve_lp_with(&lp, &cfg.lp)
                .map_err(|e| e.context(format!("decrease program for piece {i}, mode {q}")))?;
            let LpOutcome::Optimal { point, .. } = outcome else {
                continue;
            };
            let n = norm_inf(&point);
            if !(n > 0.0) {
                return Err(Error::NumericalFailure(format!(
                    "decrease program for piece {i}, mode {q} returned the origin"
                )));
            }
            let x = scale(&point, 1.0 / n);
            // Violations of the raw point grow by 1/n under normalization.
            let tol = cfg.tol_cex * (1.0 / n).max(1.0);
            let derivative = dot(&lie, &x);
            let value = c.value(&x);
            let in_domain = mode.domain().iter().all(|g| dot(g, &x) >= -tol);
            if !in_domain || derivative < -tol || dot(ci, &x) < value - tol || value <= 0.0 {
                return Err(Error::NumericalFailure(format!(
                    "spurious decrease counterexample for piece {i}, mode {q} at {x:?}"
                )));
            }
            return Ok(Verdict::Refuted(Counterexample {
                x,
                i,
                kind: CounterexampleKind::Decrease { witness_mode: q },
            }));
        }
    }
    Ok(Verdict::Valid)
}

pub fn verify(c: &Candidate, sys: &HybridSystem, cfg: &VerifierConfig) -> Result<Verdict> {
    verify_counted(c, sys, cfg, &mut 0)
}

pub fn verify_counted(c: &Candidate, sys: &HybridSystem, cfg: &VerifierConfig, lps: &mut usize) -> Result<Verdict> {
    Error::check_dim(sys.dim(), c.dim())?;
    match check_positivity_counted(c, cfg, lps)? {
        Verdict::Valid => check_decrease_counted(c, sys, cfg, lps),
        refuted => Ok(refuted),
    }
}

/// A violation found by [`sampled_check`].
#[derive(Clone, Debug, PartialEq)]
pub enum SampleViolation {
    NotPositive {
        x: Vec<f64>,
        value: f64,
    },
    NotDecreasing {
        x: Vec<f64>,
        piece: usize,
        mode: usize,
        derivative: f64,
    },
}

/// Arithmetic spot check of both conditions at the given states, independent
/// of any LP. At each state every piece within `tie_tol` of the maximum is
/// checked against every active mode.
pub fn sampled_check<I>(
    c: &Candidate,
    sys: &HybridSystem,
    states: I,
    tol: f64,
    tie_tol: f64,
) -> Result<Option<SampleViolation>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    for x in states {
        let value = c.value(&x);
        if value <= 0.0 {
            return Ok(Some(SampleViolation::NotPositive { x, value }));
        }
        for (q, v) in sys.flow_set(&x, MEMBERSHIP_TOL)? {
            for (i, ci) in c.pieces().iter().enumerate() {
                if dot(ci, &x) < value - tie_tol {
                    continue;
                }
                let derivative = dot(ci, &v);
                if derivative >= tol {
                    return Ok(Some(SampleViolation::NotDecreasing {
                        x,
                        piece: i,
                        mode: q,
                        derivative,
                    }));
                }
            }
        }
    }
    Ok(None)
}
