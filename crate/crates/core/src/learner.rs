//! The learning side of the loop: candidate polyhedral functions and the
//! coefficient polytope `S(Y)` carved out by a set of constraint triples.
//!
//! Coefficients are stacked as `(c_1, …, c_m)` in `ℝ^{md}`; LP rows built here
//! carry one extra trailing variable, the shared strictness margin `τ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, scale};
use crate::lp::{
    analytic_center, chebyshev_center_with, solve_lp_with, Halfspace, LinearProgram, LpConfig, LpOutcome, Polytope,
};
use crate::system::{HybridSystem, MEMBERSHIP_TOL};

const BOX_TOL: f64 = 1e-9;

/// `V(x) = max_i c_iᵀx` with every coefficient in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CandidateFile", into = "CandidateFile")]
pub struct Candidate {
    pieces: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CandidateFile {
    pieces: Vec<Vec<f64>>,
}

impl TryFrom<CandidateFile> for Candidate {
    type Error = Error;
    fn try_from(f: CandidateFile) -> Result<Self> {
        Candidate::new(f.pieces)
    }
}

impl From<Candidate> for CandidateFile {
    fn from(c: Candidate) -> Self {
        CandidateFile { pieces: c.pieces }
    }
}

impl Candidate {
    pub fn new(pieces: Vec<Vec<f64>>) -> Result<Self> {
        if pieces.len() < 2 {
            return Err(Error::MalformedInput(format!(
                "a candidate needs at least 2 pieces, got {}",
                pieces.len()
            )));
        }
        let d = pieces[0].len();
        if d == 0 {
            return Err(Error::MalformedInput("pieces must be non-empty".into()));
        }
        for (i, c) in pieces.iter().enumerate() {
            Error::check_dim(d, c.len()).map_err(|e| e.context(format!("piece {i}")))?;
            if c.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + BOX_TOL) {
                return Err(Error::MalformedInput(format!(
                    "piece {i} has a coefficient outside [-1, 1]"
                )));
            }
        }
        Ok(Candidate { pieces })
    }

    /// Splits a stacked coefficient vector of length `m·d`, clamping each
    /// entry into the box.
    pub fn from_stacked(z: &[f64], m: usize, d: usize) -> Result<Self> {
        Error::check_dim(m * d, z.len())?;
        Candidate::new(
            z.chunks(d)
                .map(|c| c.iter().map(|v| v.clamp(-1.0, 1.0)).collect())
                .collect(),
        )
    }

    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn piece(&self, i: usize) -> &[f64] {
        &self.pieces[i]
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].len()
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.pieces.concat()
    }

    /// `(V(x), smallest i with c_iᵀx = V(x))`.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, usize)> {
        Error::check_dim(self.dim(), x.len())?;
        let mut best = (dot(&self.pieces[0], x), 0);
        for (i, c) in self.pieces.iter().enumerate().skip(1) {
            let v = dot(c, x);
            if v > best.0 {
                best = (v, i);
            }
        }
        Ok(best)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.pieces.iter().map(|c| dot(c, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("candidate serializes")
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        serde_json::from_slice(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }
}

/// Alias kept for call sites that read better as a free function.
pub fn eval_candidate(c: &Candidate, x: &[f64]) -> Result<(f64, usize)> {
    c.eval(x)
}

/// One disjunct of the Lyapunov condition to enforce at `x`: piece `j`
/// strictly dominates piece `i` when `i ≠ j`, or piece `i` is positive and
/// strictly decreasing along every flow at `x` when `i = j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintTriple {
    pub x: Vec<f64>,
    pub i: usize,
    pub j: usize,
}

impl ConstraintTriple {
    /// Builds a triple, rescaling `x` to unit max-norm.
    pub fn new(x: &[f64], i: usize, j: usize) -> Result<Self> {
        let n = norm_inf(x);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidConstraint("constraint state must be nonzero".into()));
        }
        Ok(ConstraintTriple {
            x: scale(x, 1.0 / n),
            i,
            j,
        })
    }

    /// Whether the stacked coefficients satisfy this clause strictly, with
    /// margin larger than `tol`.
    pub fn holds_for(&self, c: &Candidate, sys: &HybridSystem, tol: f64) -> Result<bool> {
        let ci_x = dot(c.piece(self.i), &self.x);
        if self.i != self.j {
            return Ok(dot(c.piece(self.j), &self.x) - ci_x > tol);
        }
        if ci_x <= tol {
            return Ok(false);
        }
        for (_, v) in sys.flow_set(&self.x, MEMBERSHIP_TOL)? {
            if dot(c.piece(self.i), &v) >= -tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// An ordered multiset of triples, tied to the system whose flows expand the
/// decrease clauses.
#[derive(Clone, Debug)]
pub struct ConstraintSet<'a> {
    pub system: &'a HybridSystem,
    pub triples: Vec<ConstraintTriple>,
}

impl<'a> ConstraintSet<'a> {
    pub fn new(system: &'a HybridSystem, triples: Vec<ConstraintTriple>) -> Self {
        ConstraintSet { system, triples }
    }

    pub fn empty(system: &'a HybridSystem) -> Self {
        ConstraintSet::new(system, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// LP rows over `(c_1, …, c_m, τ)` encoding every triple of `y`, followed by
/// the coefficient box `|c_ik| ≤ 1`.
pub fn constraint_rows(y: &ConstraintSet<'_>, m: usize) -> Result<Vec<Halfspace>> {
    let d = y.system.dim();
    let n = m * d + 1;
    let mut rows = Vec::new();
    for (t, triple) in y.triples.iter().enumerate() {
        if triple.i >= m || triple.j >= m {
            return Err(Error::InvalidConstraint(format!(
                "triple {t} references piece ({}, {}) but m = {m}",
                triple.i, triple.j
            )));
        }
        Error::check_dim(d, triple.x.len()).map_err(|e| e.context(format!("triple {t}")))?;
        let x = scale(&triple.x, 1.0 / norm_inf(&triple.x));
        let put = |piece: usize, v: &[f64], sign: f64, row: &mut Vec<f64>| {
            for (k, vk) in v.iter().enumerate() {
                row[piece * d + k] += sign * vk;
            }
        };
        if triple.i != triple.j {
            // c_iᵀx - c_jᵀx + τ ≤ 0
            let mut row = vec![0.0; n];
            put(triple.i, &x, 1.0, &mut row);
            put(triple.j, &x, -1.0, &mut row);
            row[n - 1] = 1.0;
            rows.push(Halfspace::new(row, 0.0));
            continue;
        }
        let flows = y.system.flow_set(&x, MEMBERSHIP_TOL)?;
        if flows.is_empty() {
            return Err(Error::InvalidConstraint(format!(
                "triple {t}: state {x:?} lies in no mode domain"
            )));
        }
        // -c_iᵀx + τ ≤ 0
        let mut row = vec![0.0; n];
        put(triple.i, &x, -1.0, &mut row);
        row[n - 1] = 1.0;
        rows.push(Halfspace::new(row, 0.0));
        // c_iᵀ(A_q x) + τ ≤ 0 for every active mode
        for (_, v) in flows {
            let mut row = vec![0.0; n];
            put(triple.i, &v, 1.0, &mut row);
            row[n - 1] = 1.0;
            rows.push(Halfspace::new(row, 0.0));
        }
    }
    for k in 0..m * d {
        let mut row = vec![0.0; n];
        row[k] = 1.0;
        rows.push(Halfspace::new(row.clone(), 1.0));
        row[k] = -1.0;
        rows.push(Halfspace::new(row, 1.0));
    }
    Ok(rows)
}

/// Which interior point of `S(Y)` becomes the candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterMethod {
    /// Center of the largest inscribed Euclidean ball. Not unique when the
    /// ball is pinned by a few rows, and the search can then stall on cuts
    /// that barely move it.
    Chebyshev,
    /// Analytic center of `S(Y)`, started from the Chebyshev center.
    #[default]
    Analytic,
    /// Maximum-volume inscribed ellipsoid. Needs a semidefinite solver, which
    /// this crate does not ship; selecting it is an error.
    Mve,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerConfig {
    /// `S(Y)` counts as empty when the best shared margin is at most this.
    pub tau_min: f64,
    pub center: CenterMethod,
    pub lp: LpConfig,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            tau_min: 1e-7,
            center: CenterMethod::default(),
            lp: LpConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LearnerOutcome {
    Candidate {
        candidate: Candidate,
        /// Inscribed-ball radius of `S(Y)` in the stacked coefficient space.
        radius: f64,
        /// Smallest slack of the candidate over the encoded clause rows.
        margin: f64,
    },
    Infeasible {
        tau: f64,
    },
    BelowRadius {
        radius: f64,
    },
}

impl LearnerOutcome {
    pub fn radius(&self) -> Option<f64> {
        match self {
            LearnerOutcome::Candidate { radius, .. } | LearnerOutcome::BelowRadius { radius } => Some(*radius),
            LearnerOutcome::Infeasible { .. } => None,
        }
    }

    /// Number of LPs solved to produce this outcome.
    pub fn lp_count(&self) -> usize {
        match self {
            LearnerOutcome::Infeasible { .. } => 1,
            _ => 2,
        }
    }
}

/// Picks the next candidate in `S(Y)`.
///
/// First the shared margin `τ` is maximized; if it cannot exceed `tau_min`
/// the strict system is empty. Otherwise the Chebyshev ball of the closure of
/// `S(Y)` is computed; a radius below `epsilon` prunes the node, else its
/// center is the candidate. The center satisfies every clause row with slack
/// at least `radius · ‖row‖₂`, so strictness is preserved.
pub fn candidate_from(y: &ConstraintSet<'_>, m: usize, epsilon: f64, cfg: &LearnerConfig) -> Result<LearnerOutcome> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    if m < 2 {
        return Err(Error::Precondition(format!("need at least 2 pieces, got {m}")));
    }
    if cfg.center == CenterMethod::Mve {
        return Err(Error::Unsupported(
            "the MVE center requires a semidefinite solver".into(),
        ));
    }
    let d = y.system.dim();
    let n = m * d;
    let rows = constraint_rows(y, m)?;

    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(n + 1).maximize(objective);
    lp.set_bounds(n, 0.0, 1.0);
    for r in &rows {
        lp.add_row(r.normal.clone(), r.offset);
    }
    let tau = match solve_lp_with(&lp, &cfg.lp)? {
        LpOutcome::Optimal { value, .. } => value,
        // τ = 0, c = 0 is always feasible and τ is bounded.
        other => return Err(Error::NumericalFailure(format!("margin program returned {other:?}"))),
    };
    if tau <= cfg.tau_min {
        return Ok(LearnerOutcome::Infeasible { tau });
    }

    let mut poly = Polytope::new(n);
    for r in &rows {
        poly.push(r.normal[..n].to_vec(), r.offset);
    }
    let ball = chebyshev_center_with(&poly, &cfg.lp)?;
    if ball.radius < epsilon {
        return Ok(LearnerOutcome::BelowRadius { radius: ball.radius });
    }
    let center = match cfg.center {
        CenterMethod::Analytic => analytic_center(&poly, &ball.center).unwrap_or_else(|e| {
            log::debug!("keeping the Chebyshev center: {e}");
            ball.center.clone()
        }),
        _ => ball.center.clone(),
    };
    let candidate = Candidate::from_stacked(&center, m, d)?;
    let z = candidate.stacked();
    let clause_rows = rows.len() - 2 * n;
    let margin = rows[..clause_rows]
        .iter()
        .map(|r| r.offset - dot(&r.normal[..n], &z))
        .fold(f64::INFINITY, f64::min);
    Ok(LearnerOutcome::Candidate {
        candidate,
        radius: ball.radius,
        margin,
    })
}
