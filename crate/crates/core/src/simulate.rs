//! Fixed-step trajectory simulation of a hybrid linear system.
//!
//! The differential inclusion admits many solutions; a [`ModePolicy`] picks
//! one active mode per step and that mode's linear field is integrated with
//! classical RK4. Switches are only detected at step boundaries.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::system::{HybridSystem, MEMBERSHIP_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModePolicy {
    /// Smallest active mode index.
    #[default]
    LowestIndex,
    /// The given mode whenever it is active, otherwise the lowest index.
    Prefer(usize),
}

impl ModePolicy {
    fn select(&self, active: &[usize]) -> Option<usize> {
        match *self {
            ModePolicy::Prefer(q) if active.contains(&q) => Some(q),
            _ => active.first().copied(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Mode integrated on step `k`, i.e. on `[times[k], times[k + 1]]`.
    pub mode_log: Vec<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has an initial state")
    }

    /// CSV with header `t,x1,...,xd,mode`. The last row has an empty mode.
    pub fn to_csv(&self) -> String {
        let d = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for k in 1..=d {
            write!(out, ",x{k}").unwrap();
        }
        out.push_str(",mode\n");
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            write!(out, "{t:.16e}").unwrap();
            for v in x {
                write!(out, ",{v:.16e}").unwrap();
            }
            match self.mode_log.get(k) {
                Some(q) => writeln!(out, ",{q}").unwrap(),
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

fn rk4_step(a: &Matrix, x: &[f64], h: f64) -> Vec<f64> {
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + s * ki).collect() };
    let k1 = a.mul_vec(x);
    let k2 = a.mul_vec(&axpy(x, &k1, h / 2.0));
    let k3 = a.mul_vec(&axpy(x, &k2, h / 2.0));
    let k4 = a.mul_vec(&axpy(x, &k3, h));
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

pub fn simulate(sys: &HybridSystem, x0: &[f64], dt: f64, horizon: f64, policy: ModePolicy) -> Result<Trajectory> {
    Error::check_dim(sys.dim(), x0.len())?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
    }
    if !(horizon >= dt) {
        return Err(Error::Precondition(format!(
            "horizon {horizon} is shorter than the time step {dt}"
        )));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        mode_log: Vec::with_capacity(steps),
    };
    let mut x = x0.to_vec();
    traj.times.push(0.0);
    traj.states.push(x.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = if k + 1 == steps { horizon - t } else { dt };
        let active = sys.active_modes(&x, MEMBERSHIP_TOL)?;
        let q = policy.select(&active).ok_or_else(|| Error::SimulationStuck {
            time: t,
            state: x.clone(),
        })?;
        x = rk4_step(sys.mode(q).flow(), &x, h);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("state diverged at t={}", t + h)));
        }
        traj.times.push(if k + 1 == steps { horizon } else { t + h });
        traj.states.push(x.clone());
        traj.mode_log.push(q);
    }
    Ok(traj)
}
