//! Dense linear programming and Chebyshev centers.
//!
//! Every LP in the synthesis loop goes through [`solve_lp`]: a two-phase
//! tableau simplex. The problems are tiny (at most a few dozen variables), so
//! the tableau is stored densely and rebuilt from scratch on every call.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, scale};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpConfig {
    /// Primal feasibility tolerance, in units of the row-normalized problem.
    pub tol_feas: f64,
    /// Reduced-cost optimality tolerance.
    pub tol_obj: f64,
    /// Smallest magnitude accepted as a pivot element.
    pub pivot_tol: f64,
    /// Iteration cap is `iteration_factor * (rows + cols)`.
    pub iteration_factor: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            tol_feas: 1e-9,
            tol_obj: 1e-9,
            pivot_tol: 1e-10,
            iteration_factor: 50,
        }
    }
}

/// A halfspace `normalᵀ z ≤ offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Halfspace { normal, offset }
    }

    /// `normalᵀ z - offset`; non-positive when `z` is inside.
    pub fn excess(&self, z: &[f64]) -> f64 {
        dot(&self.normal, z) - self.offset
    }
}

/// `maximize objectiveᵀ z` subject to `rows` and per-variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Halfspace>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// A program over `n` free variables with a zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            rows: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn maximize(mut self, objective: Vec<f64>) -> Self {
        self.objective = objective;
        self
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        self.objective = objective;
    }

    pub fn add_row(&mut self, normal: Vec<f64>, offset: f64) {
        self.rows.push(Halfspace::new(normal, offset));
    }

    pub fn with_row(mut self, normal: Vec<f64>, offset: f64) -> Self {
        self.add_row(normal, offset);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn with_bounds(mut self, var: usize, lo: f64, hi: f64) -> Self {
        self.set_bounds(var, lo, hi);
        self
    }

    /// Same program with the row order reversed.
    pub fn reversed_rows(&self) -> Self {
        let mut lp = self.clone();
        lp.rows.reverse();
        lp
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::MalformedInput("linear program has no variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.bounds.len(),
            });
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.normal.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.normal.len(),
                }
                .context(format!("row {k}")));
            }
            if row.normal.iter().any(|v| !v.is_finite()) || row.offset.is_nan() {
                return Err(Error::MalformedInput(format!("row {k} has non-finite entries")));
            }
        }
        for (k, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::MalformedInput(format!(
                    "variable {k} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedInput("objective has non-finite entries".into()));
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `z`, in the unscaled units of
    /// the program. Zero or negative means feasible.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let s = norm_inf(&r.normal);
            if s > 0.0 {
                r.excess(z) / s
            } else {
                -r.offset
            }
        });
        let bounds = self.bounds.iter().zip(z).map(|(&(lo, hi), &v)| (lo - v).max(v - hi));
        rows.chain(bounds).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { point: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    solve_lp_with(lp, &LpConfig::default())
}

pub fn solve_lp_with(lp: &LinearProgram, cfg: &LpConfig) -> Result<LpOutcome> {
    lp.validate()?;
    let standard = StandardForm::build(lp);
    let outcome = standard.solve(cfg)?;
    if let LpOutcome::Optimal { point, .. } = &outcome {
        let violation = lp.max_violation(point);
        if violation > 1e3 * cfg.tol_feas * (1.0 + norm_inf(point)) {
            return Err(Error::NumericalFailure(format!(
                "simplex returned a point violating the program by {violation:e}"
            )));
        }
    }
    Ok(outcome)
}

/// How one original variable is expressed in nonnegative columns:
/// `z = offset + sign * y[col] - y[neg]`.
#[derive(Clone, Copy, Debug)]
struct VarMap {
    offset: f64,
    col: usize,
    sign: f64,
    neg: Option<usize>,
}

/// `maximize cᵀy s.t. A y ≤ b, y ≥ 0` with every row scaled to unit max-norm.
struct StandardForm<'a> {
    lp: &'a LinearProgram,
    vars: Vec<VarMap>,
    ncols: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl<'a> StandardForm<'a> {
    fn build(lp: &'a LinearProgram) -> Self {
        let mut vars = Vec::with_capacity(lp.num_vars());
        let mut ncols = 0;
        let mut range_rows = Vec::new();
        for &(lo, hi) in &lp.bounds {
            let map = match (lo.is_finite(), hi.is_finite()) {
                (true, _) => {
                    if hi.is_finite() {
                        range_rows.push((ncols, hi - lo));
                    }
                    VarMap {
                        offset: lo,
                        col: ncols,
                        sign: 1.0,
                        neg: None,
                    }
                }
                (false, true) => VarMap {
                    offset: hi,
                    col: ncols,
                    sign: -1.0,
                    neg: None,
                },
                (false, false) => {
                    ncols += 1;
                    VarMap {
                        offset: 0.0,
                        col: ncols - 1,
                        sign: 1.0,
                        neg: Some(ncols),
                    }
                }
            };
            ncols += 1;
            vars.push(map);
        }

        let mut a = Vec::with_capacity(lp.rows.len() + range_rows.len());
        let mut b = Vec::with_capacity(a.capacity());
        for row in &lp.rows {
            let scale = norm_inf(&row.normal);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let mut coeffs = vec![0.0; ncols];
            let mut rhs = row.offset;
            for (v, &coef) in vars.iter().zip(&row.normal) {
                rhs -= coef * v.offset;
                coeffs[v.col] += coef * v.sign;
                if let Some(neg) = v.neg {
                    coeffs[neg] -= coef;
                }
            }
            a.push(coeffs.into_iter().map(|x| x / scale).collect());
            b.push(rhs / scale);
        }
        for (col, width) in range_rows {
            let mut coeffs = vec![0.0; ncols];
            coeffs[col] = 1.0;
            a.push(coeffs);
            b.push(width);
        }

        let mut c = vec![0.0; ncols];
        for (v, &coef) in vars.iter().zip(&lp.objective) {
            c[v.col] += coef * v.sign;
            if let Some(neg) = v.neg {
                c[neg] -= coef;
            }
        }
        let cs = norm_inf(&c);
        if cs > 0.0 {
            c.iter_mut().for_each(|x| *x /= cs);
        }

        StandardForm {
            lp,
            vars,
            ncols,
            a,
            b,
            c,
        }
    }

    fn solve(&self, cfg: &LpConfig) -> Result<LpOutcome> {
        let mut t = Tableau::new(self);
        let cap = cfg.iteration_factor * (t.nrows + t.width);
        let mut iterations = 0;

        if t.art_start < t.width {
            if t.optimize(cfg, t.width, &mut iterations, cap)?.is_some() {
                // Phase one is bounded below by zero; an unbounded ray here means
                // the tableau has lost all accuracy.
                return Err(Error::NumericalFailure("phase one reported unbounded".into()));
            }
            if t.obj[t.width] > cfg.tol_feas {
                return Ok(LpOutcome::Infeasible);
            }
            t.evict_artificials(cfg);
        }

        t.install_objective(&self.c);
        if t.optimize(cfg, t.art_start, &mut iterations, cap)?.is_some() {
            return Ok(LpOutcome::Unbounded);
        }

        let y = t.primal();
        let point: Vec<f64> = self
            .vars
            .iter()
            .zip(&self.lp.bounds)
            .map(|(v, &(lo, hi))| {
                let mut z = v.offset + v.sign * y[v.col];
                if let Some(neg) = v.neg {
                    z -= y[neg];
                }
                z.clamp(lo, hi)
            })
            .collect();
        let value = dot(&self.lp.objective, &point);
        Ok(LpOutcome::Optimal { point, value })
    }
}

struct Tableau {
    nrows: usize,
    /// Column count excluding the right-hand side, which lives at index `width`.
    width: usize,
    /// First artificial column; columns `art_start..width` are artificial.
    art_start: usize,
    cells: Vec<f64>,
    /// Reduced costs for maximization, with `-objective value` in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(sf: &StandardForm<'_>) -> Self {
        let nrows = sf.a.len();
        let ny = sf.ncols;
        let nart = sf.b.iter().filter(|&&b| b < 0.0).count();
        let art_start = ny + nrows;
        let width = art_start + nart;
        let stride = width + 1;
        let mut cells = vec![0.0; nrows * stride];
        let mut basis = Vec::with_capacity(nrows);
        let mut obj = vec![0.0; stride];
        let mut next_art = art_start;
        for (i, (row, &rhs)) in sf.a.iter().zip(&sf.b).enumerate() {
            let cell = &mut cells[i * stride..(i + 1) * stride];
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            for (dst, &src) in cell.iter_mut().zip(row) {
                *dst = sign * src;
            }
            cell[ny + i] = sign;
            cell[width] = sign * rhs;
            if rhs < 0.0 {
                cell[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
                // Phase-one objective: maximize -sum(artificials).
                for (o, &v) in obj.iter_mut().zip(cell.iter()) {
                    *o += v;
                }
            } else {
                basis.push(ny + i);
            }
        }
        for o in &mut obj[art_start..width] {
            *o -= 1.0;
        }
        Tableau {
            nrows,
            width,
            art_start,
            cells,
            obj,
            basis,
        }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.stride() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let stride = self.stride();
        let p = self.at(r, e);
        let pivot_row: Vec<f64> = self.cells[r * stride..(r + 1) * stride].iter().map(|v| v / p).collect();
        for i in 0..self.nrows {
            let row = &mut self.cells[i * stride..(i + 1) * stride];
            if i == r {
                row.copy_from_slice(&pivot_row);
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (dst, &src) in row.iter_mut().zip(&pivot_row) {
                    *dst -= f * src;
                }
                row[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (dst, &src) in self.obj.iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Primal simplex over columns `0..allowed`. Returns the entering column
    /// of an unbounded ray, or `None` at optimality.
    ///
    /// Pricing is Dantzig's largest reduced cost with a Harris ratio test,
    /// which prefers large pivots among near-tied rows. Past a fifth of the
    /// iteration cap it falls back to Bland's rule, which cannot cycle.
    fn optimize(
        &mut self,
        cfg: &LpConfig,
        allowed: usize,
        iterations: &mut usize,
        cap: usize,
    ) -> Result<Option<usize>> {
        loop {
            let bland = *iterations > cap / 5;
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] > cfg.tol_obj)
            } else {
                (0..allowed)
                    .filter(|&j| self.obj[j] > cfg.tol_obj)
                    .max_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]).then(b.cmp(&a)))
            };
            let Some(e) = entering else {
                return Ok(None);
            };
            let leave = if bland {
                self.bland_row(e, cfg)
            } else {
                self.harris_row(e, cfg)
            };
            let Some(r) = leave else {
                return Ok(Some(e));
            };
            *iterations += 1;
            if *iterations > cap {
                return Err(Error::NumericalFailure(format!("simplex exceeded {cap} iterations")));
            }
            self.pivot(r, e);
        }
    }

    /// Minimum-ratio row for column `e`, ties to the smallest basic index.
    fn bland_row(&self, e: usize, cfg: &LpConfig) -> Option<usize> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.nrows {
            let a = self.at(i, e);
            if a <= cfg.pivot_tol {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            leave = match leave {
                Some((bi, br)) if !(ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])) => {
                    Some((bi, br))
                }
                _ => Some((i, ratio)),
            };
        }
        leave.map(|(r, _)| r)
    }

    /// Two-pass Harris test: bound the step using rows relaxed by `tol_feas`,
    /// then take the largest pivot among rows whose ratio fits in that step.
    fn harris_row(&self, e: usize, cfg: &LpConfig) -> Option<usize> {
        let mut step = f64::INFINITY;
        for i in 0..self.nrows {
            let a = self.at(i, e);
            if a > cfg.pivot_tol {
                step = step.min((self.rhs(i).max(0.0) + cfg.tol_feas) / a);
            }
        }
        if !step.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.nrows {
            let a = self.at(i, e);
            if a > cfg.pivot_tol && self.rhs(i).max(0.0) / a <= step {
                let better = match best {
                    None => true,
                    Some((bi, ba)) => a > ba || (a == ba && self.basis[i] < self.basis[bi]),
                };
                if better {
                    best = Some((i, a));
                }
            }
        }
        best.map(|(r, _)| r)
    }

    /// Pivots zero-valued artificials out of the basis after phase one. Rows
    /// where that is impossible are redundant and keep their artificial at 0.
    fn evict_artificials(&mut self, cfg: &LpConfig) {
        for r in 0..self.nrows {
            if self.basis[r] < self.art_start {
                continue;
            }
            let best = (0..self.art_start)
                .map(|j| (j, self.at(r, j).abs()))
                .filter(|&(_, v)| v > cfg.pivot_tol)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, _)) = best {
                self.pivot(r, j);
            }
        }
    }

    fn install_objective(&mut self, c: &[f64]) {
        let cost = |j: usize| c.get(j).copied().unwrap_or(0.0);
        self.obj.iter_mut().for_each(|o| *o = 0.0);
        self.obj[..c.len()].copy_from_slice(c);
        for i in 0..self.nrows {
            let cb = cost(self.basis[i]);
            if cb == 0.0 {
                continue;
            }
            for j in 0..=self.width {
                let v = self.at(i, j);
                self.obj[j] -= cb * v;
            }
        }
        for i in 0..self.nrows {
            self.obj[self.basis[i]] = 0.0;
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.art_start];
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < self.art_start {
                y[bv] = self.rhs(i).max(0.0);
            }
        }
        y
    }
}

/// A polytope `{z : aᵀz ≤ b for every row}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    dim: usize,
    rows: Vec<Halfspace>,
}

impl Polytope {
    pub fn new(dim: usize) -> Self {
        Polytope { dim, rows: Vec::new() }
    }

    /// The box `[lo, hi]^dim` as explicit rows.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        let mut p = Polytope::new(dim);
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            p.push(e.clone(), hi);
            e[k] = -1.0;
            p.push(e, -lo);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Halfspace] {
        &self.rows
    }

    pub fn push(&mut self, normal: Vec<f64>, offset: f64) {
        self.rows.push(Halfspace::new(normal, offset));
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|r| r.excess(z) <= tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

pub fn chebyshev_center(p: &Polytope) -> Result<Ball> {
    chebyshev_center_with(p, &LpConfig::default())
}

/// Largest Euclidean ball inside `p`, by maximizing `r` subject to
/// `aᵀz + r‖a‖₂ ≤ b` for every row.
pub fn chebyshev_center_with(p: &Polytope, cfg: &LpConfig) -> Result<Ball> {
    if p.rows.is_empty() {
        return Err(Error::MalformedInput("polytope has no rows".into()));
    }
    let n = p.dim;
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(n + 1).maximize(objective);
    lp.set_bounds(n, 0.0, f64::INFINITY);
    for (k, row) in p.rows.iter().enumerate() {
        Error::check_dim(n, row.normal.len()).map_err(|e| e.context(format!("polytope row {k}")))?;
        let mut normal = row.normal.clone();
        normal.push(norm2(&row.normal));
        lp.add_row(normal, row.offset);
    }
    match solve_lp_with(&lp, cfg)? {
        LpOutcome::Optimal { mut point, .. } => {
            let radius = point.pop().unwrap_or(0.0).max(0.0);
            Ok(Ball { center: point, radius })
        }
        LpOutcome::Infeasible => Err(Error::InfeasiblePolytope),
        LpOutcome::Unbounded => Err(Error::MalformedInput("polytope is unbounded".into())),
    }
}

/// Analytic center of `p`: the minimizer of `−Σ log(b_k − a_kᵀz)`, found by
/// damped Newton steps from `start`, which must lie strictly inside.
pub fn analytic_center(p: &Polytope, start: &[f64]) -> Result<Vec<f64>> {
    let n = p.dim;
    Error::check_dim(n, start.len())?;
    let mut rows = Vec::with_capacity(p.rows.len());
    for (k, row) in p.rows.iter().enumerate() {
        Error::check_dim(n, row.normal.len()).map_err(|e| e.context(format!("polytope row {k}")))?;
        let norm = norm2(&row.normal);
        if norm > 0.0 {
            rows.push((scale(&row.normal, 1.0 / norm), row.offset / norm));
        }
    }
    let slacks = |z: &[f64]| -> Vec<f64> { rows.iter().map(|(a, b)| b - dot(a, z)).collect() };
    let mut z = start.to_vec();
    let mut s = slacks(&z);
    if s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Precondition(
            "analytic center needs a strictly interior start".into(),
        ));
    }
    for _ in 0..ANALYTIC_MAX_STEPS {
        let mut grad = nalgebra::DVector::<f64>::zeros(n);
        let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
        for ((a, _), &sk) in rows.iter().zip(&s) {
            let a = nalgebra::DVector::from_column_slice(a);
            grad.axpy(1.0 / sk, &a, 1.0);
            hess.ger(1.0 / (sk * sk), &a, &a, 1.0);
        }
        let chol = hess
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("barrier Hessian is singular; polytope is unbounded".into()))?;
        let step = -chol.solve(&grad);
        let decrement = -grad.dot(&step);
        if decrement <= ANALYTIC_TOL {
            break;
        }
        let mut t = if decrement > 0.0625 {
            1.0 / (1.0 + decrement.sqrt())
        } else {
            1.0
        };
        loop {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(zi, di)| zi + t * di).collect();
            let st = slacks(&trial);
            if st.iter().all(|&v| v > 0.0) {
                z = trial;
                s = st;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NumericalFailure("analytic center line search stalled".into()));
            }
        }
    }
    Ok(z)
}

const ANALYTIC_MAX_STEPS: usize = 100;
const ANALYTIC_TOL: f64 = 1e-20;
