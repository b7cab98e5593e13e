//! Hybrid linear systems: modes with polyhedral-cone domains and linear flows.
//!
//! The dynamics are the set-valued map `F(x) = {A_q x : x ∈ H_q}` where each
//! domain `H_q = {x : gᵀx ≥ 0 for every row g}` is a closed cone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix};

/// Default membership tolerance, scaled by `‖x‖∞` at the query point.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    domain: Vec<Vec<f64>>,
    flow: Matrix,
}

impl Mode {
    pub fn new(domain: Vec<Vec<f64>>, flow: Matrix) -> Result<Self> {
        let d = flow.nrows();
        Error::check_dim(d, flow.ncols()).map_err(|e| e.context("flow matrix is not square"))?;
        for (k, g) in domain.iter().enumerate() {
            Error::check_dim(d, g.len()).map_err(|e| e.context(format!("domain row {k}")))?;
        }
        Ok(Mode { domain, flow })
    }

    pub fn domain(&self) -> &[Vec<f64>] {
        &self.domain
    }

    pub fn flow(&self) -> &Matrix {
        &self.flow
    }

    pub fn dim(&self) -> usize {
        self.flow.nrows()
    }

    /// `x ∈ H` up to `tol · ‖x‖∞`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let slack = tol * norm_inf(x);
        self.domain.iter().all(|g| dot(g, x) >= -slack)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridSystem {
    dim: usize,
    modes: Vec<Mode>,
}

impl HybridSystem {
    pub fn new(dim: usize, modes: Vec<Mode>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedInput("state dimension must be at least 1".into()));
        }
        if modes.is_empty() {
            return Err(Error::MalformedInput("system has no modes".into()));
        }
        for (q, mode) in modes.iter().enumerate() {
            Error::check_dim(dim, mode.dim()).map_err(|e| e.context(format!("mode {q}")))?;
        }
        Ok(HybridSystem { dim, modes })
    }

    /// A single mode over all of ℝ^d.
    pub fn single_mode(flow: Matrix) -> Result<Self> {
        let d = flow.nrows();
        HybridSystem::new(d, vec![Mode::new(Vec::new(), flow)?])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, q: usize) -> &Mode {
        &self.modes[q]
    }

    /// Indices of every mode whose domain contains `x`, ascending.
    pub fn active_modes(&self, x: &[f64], tol: f64) -> Result<Vec<usize>> {
        Error::check_dim(self.dim, x.len())?;
        Ok(self
            .modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.contains(x, tol))
            .map(|(q, _)| q)
            .collect())
    }

    /// `F(x)` as `(mode, A_q x)` pairs.
    pub fn flow_set(&self, x: &[f64], tol: f64) -> Result<Vec<(usize, Vec<f64>)>> {
        Ok(self
            .active_modes(x, tol)?
            .into_iter()
            .map(|q| (q, self.modes[q].flow.mul_vec(x)))
            .collect())
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let file: SystemFile = serde_json::from_slice(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        file.into_system()
    }

    pub fn to_json(&self) -> String {
        let file = SystemFile {
            dim: self.dim,
            modes: self
                .modes
                .iter()
                .map(|m| ModeFile {
                    domain: m.domain.clone(),
                    flow: m.flow.to_rows(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("system serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    dim: usize,
    modes: Vec<ModeFile>,
}

#[derive(Serialize, Deserialize)]
struct ModeFile {
    #[serde(default)]
    domain: Vec<Vec<f64>>,
    flow: Vec<Vec<f64>>,
}

impl SystemFile {
    fn into_system(self) -> Result<HybridSystem> {
        let d = self.dim;
        let parse_err = |location: String, message: String| Error::Parse { location, message };
        if d == 0 {
            return Err(parse_err("dim".into(), "dimension must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(parse_err("modes".into(), "mode list is empty".into()));
        }
        let mut modes = Vec::with_capacity(self.modes.len());
        for (q, m) in self.modes.into_iter().enumerate() {
            if m.flow.len() != d || m.flow.iter().any(|r| r.len() != d) {
                let shape = format!("{}x{}", m.flow.len(), m.flow.first().map_or(0, Vec::len));
                return Err(parse_err(
                    format!("modes[{q}].flow"),
                    format!("expected a {d}x{d} matrix, found {shape}"),
                ));
            }
            if let Some(k) = m.domain.iter().position(|g| g.len() != d) {
                return Err(parse_err(
                    format!("modes[{q}].domain[{k}]"),
                    format!("expected {d} entries, found {}", m.domain[k].len()),
                ));
            }
            let flow = Matrix::from_rows(m.flow)?;
            modes.push(Mode::new(m.domain, flow)?);
        }
        HybridSystem::new(d, modes)
    }
}

/// Systems used throughout the tests, benchmarks and documentation.
pub mod catalog {
    use super::*;

    fn quadrant(sx: f64, sy: f64) -> Vec<Vec<f64>> {
        vec![vec![sx, 0.0], vec![0.0, sy]]
    }

    fn m2(rows: [[f64; 2]; 2]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).expect("2x2")
    }

    /// Four-mode piecewise linear damped oscillator with quadrant domains.
    /// Mode `q` (0-based) lives on quadrant `q + 1`, counted clockwise from
    /// the nonnegative orthant.
    pub fn quadrant_oscillator() -> HybridSystem {
        let a1 = m2([[0.5, 1.0], [-1.0, -1.5]]);
        let a2 = m2([[-1.0, 1.0], [-1.0, 1.0]]);
        let a3 = m2([[1.01, 1.0], [-1.0, -0.99]]);
        let modes = vec![
            Mode::new(quadrant(1.0, 1.0), a1).unwrap(),
            Mode::new(quadrant(1.0, -1.0), a2.clone()).unwrap(),
            Mode::new(quadrant(-1.0, -1.0), a3).unwrap(),
            Mode::new(quadrant(-1.0, 1.0), a2).unwrap(),
        ];
        HybridSystem::new(2, modes).unwrap()
    }

    /// Two-mode rotating spiral split along the horizontal axis.
    pub fn half_plane_rotation() -> HybridSystem {
        let upper = m2([[-0.5, 1.0], [-1.0, -0.5]]);
        let lower = m2([[-0.75, 1.0], [-1.0, -0.75]]);
        let modes = vec![
            Mode::new(vec![vec![0.0, 1.0]], upper).unwrap(),
            Mode::new(vec![vec![0.0, -1.0]], lower).unwrap(),
        ];
        HybridSystem::new(2, modes).unwrap()
    }

    /// `ẋ = scale · x` on all of ℝ^d.
    pub fn scalar(d: usize, scale: f64) -> HybridSystem {
        HybridSystem::single_mode(Matrix::identity(d).scaled(scale)).unwrap()
    }
}
