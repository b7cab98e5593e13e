//! Planar 1-sublevel sets of polyhedral functions.

use crate::error::{Error, Result};
use crate::learner::Candidate;
use crate::verifier::{check_positivity, Verdict, VerifierConfig};

const VERTEX_TOL: f64 = 1e-9;

/// Vertices of `{x ∈ ℝ² : max_i c_iᵀx = 1}` in counterclockwise order.
///
/// Every vertex is the intersection of two piece lines `c_iᵀx = 1 = c_jᵀx`
/// that no other piece exceeds. The candidate must be positive off the origin
/// so that the set is a bounded polygon.
pub fn sublevel_polygon(c: &Candidate) -> Result<Vec<[f64; 2]>> {
    if c.dim() != 2 {
        return Err(Error::Precondition(format!(
            "sublevel polygons are planar; candidate has dimension {}",
            c.dim()
        )));
    }
    if let Verdict::Refuted(cex) = check_positivity(c, &VerifierConfig::default())? {
        return Err(Error::Precondition(format!(
            "candidate is not positive at {:?}, its sublevel set is unbounded",
            cex.x
        )));
    }
    let pieces = c.pieces();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            let (a, b) = (&pieces[i], &pieces[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-14 {
                continue;
            }
            let v = [(b[1] - a[1]) / det, (a[0] - b[0]) / det];
            if c.value(&v) > 1.0 + VERTEX_TOL {
                continue;
            }
            let scale = 1.0 + v[0].abs().max(v[1].abs());
            if !vertices
                .iter()
                .any(|w| (w[0] - v[0]).abs() <= VERTEX_TOL * scale && (w[1] - v[1]).abs() <= VERTEX_TOL * scale)
            {
                vertices.push(v);
            }
        }
    }
    vertices.sort_by(|p, q| p[1].atan2(p[0]).total_cmp(&q[1].atan2(q[0])));
    Ok(vertices)
}
