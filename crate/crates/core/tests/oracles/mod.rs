//! Brute-force references for the LP kernel. Shared with the acceptance
//! binary of the CLI crate, so nothing here depends on test-only crates
//! besides `rand`.
#![allow(dead_code)]

use polylyap::lp::{LinearProgram, Polytope};
use rand::Rng;

/// A 2-variable LP `max cᵀz` over explicit halfspaces `aᵀz ≤ b`.
#[derive(Clone, Debug)]
pub struct Lp2 {
    pub objective: [f64; 2],
    pub rows: Vec<([f64; 2], f64)>,
    /// Box `[-bound, bound]²`, given to the solver as variable bounds.
    pub bound: f64,
}

impl Lp2 {
    pub fn to_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(2).maximize(self.objective.to_vec());
        for (a, b) in &self.rows {
            lp.add_row(a.to_vec(), *b);
        }
        lp.with_bounds(0, -self.bound, self.bound)
            .with_bounds(1, -self.bound, self.bound)
    }

    fn all_rows(&self) -> Vec<([f64; 2], f64)> {
        let mut rows = self.rows.clone();
        rows.push(([1.0, 0.0], self.bound));
        rows.push(([-1.0, 0.0], self.bound));
        rows.push(([0.0, 1.0], self.bound));
        rows.push(([0.0, -1.0], self.bound));
        rows
    }
}

/// Optimal value by enumerating every pairwise intersection of boundary
/// lines; `None` when no vertex is feasible.
pub fn vertex_optimum(lp: &Lp2, tol: f64) -> Option<f64> {
    let rows = lp.all_rows();
    let mut best: Option<f64> = None;
    for (p, (a, b)) in rows.iter().enumerate() {
        for (c, d) in &rows[p + 1..] {
            let det = a[0] * c[1] - a[1] * c[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let z = [(b * c[1] - a[1] * d) / det, (a[0] * d - b * c[0]) / det];
            let feasible = rows
                .iter()
                .all(|(r, s)| r[0] * z[0] + r[1] * z[1] <= s + tol * (1.0 + s.abs()));
            if feasible {
                let v = lp.objective[0] * z[0] + lp.objective[1] * z[1];
                best = Some(best.map_or(v, |w: f64| w.max(v)));
            }
        }
    }
    best
}

fn unit2(rng: &mut impl Rng) -> [f64; 2] {
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    [t.cos(), t.sin()]
}

/// Four in five instances are feasible by construction (every row passes
/// above a common point); the rest have arbitrary offsets.
pub fn random_lp2(rng: &mut impl Rng) -> Lp2 {
    let bound = rng.gen_range(1.0..5.0);
    let k = rng.gen_range(1..7);
    let anchored = rng.gen_bool(0.8);
    let p = [rng.gen_range(-bound..bound), rng.gen_range(-bound..bound)];
    let rows = (0..k)
        .map(|_| {
            let a = unit2(rng);
            let scale = rng.gen_range(0.1..3.0);
            let a = [a[0] * scale, a[1] * scale];
            let b = if anchored {
                a[0] * p[0] + a[1] * p[1] + rng.gen_range(0.0..1.0)
            } else {
                rng.gen_range(-2.0..1.0)
            };
            (a, b)
        })
        .collect();
    let objective = unit2(rng);
    Lp2 { objective, rows, bound }
}

/// Distance from `z` to the nearest boundary plane (negative outside).
pub fn inscribed_radius_at(p: &Polytope, z: &[f64]) -> f64 {
    p.rows()
        .iter()
        .map(|h| {
            let norm = h.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            (h.offset - h.normal.iter().zip(z).map(|(a, x)| a * x).sum::<f64>()) / norm
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest inscribed radius seen over uniform samples of `[lo, hi]^n`.
pub fn sampled_inscribed_radius(p: &Polytope, lo: f64, hi: f64, samples: usize, rng: &mut impl Rng) -> (Vec<f64>, f64) {
    let mut best = (vec![0.0; p.dim()], f64::NEG_INFINITY);
    for _ in 0..samples {
        let z: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(lo..hi)).collect();
        let r = inscribed_radius_at(p, &z);
        if r > best.1 {
            best = (z, r);
        }
    }
    best
}

/// The unit cube cut by random halfspaces that keep a random interior point.
pub fn random_polytope(rng: &mut impl Rng, dim: usize) -> Polytope {
    let mut p = Polytope::cube(dim, -1.0, 1.0);
    let anchor: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.8..0.8)).collect();
    for _ in 0..rng.gen_range(1..(3 * dim + 2)) {
        let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.iter().zip(&anchor).map(|(x, y)| x * y).sum::<f64>() + rng.gen_range(0.0..0.5);
        p.push(a, b);
    }
    p
}
