//! Reduction from NAE-3SAT to existence of a 2-piece polyhedral Lyapunov
//! function.
//!
//! For `n` propositions the state is `(x̄_1, …, x̄_n, x̂, x̃)` with `d = n + 2`.
//! Each proposition gets a gadget on the `x̄_k` axis and each clause a gadget
//! on the `x̂` axis. Absolute values in the flows are realized by splitting
//! every gadget into a nonnegative and a nonpositive half.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::Candidate;
use crate::linalg::Matrix;
use crate::system::{HybridSystem, Mode};

/// Coefficient given to `x̃` by the witness candidate.
pub const WITNESS_TILDE: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Literal {
    /// Proposition index, 0-based.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nae3Instance {
    n: usize,
    clauses: Vec<[Literal; 3]>,
}

impl Nae3Instance {
    pub fn new(n: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("instance needs at least one proposition".into()));
        }
        for (l, clause) in clauses.iter().enumerate() {
            for lit in clause {
                if lit.var >= n {
                    return Err(Error::Precondition(format!(
                        "clause {l} references proposition {} of {n}",
                        lit.var + 1
                    )));
                }
            }
            let [a, b, c] = clause.map(|lit| lit.var);
            if a == b || b == c || a == c {
                return Err(Error::Precondition(format!("clause {l} repeats a proposition")));
            }
        }
        Ok(Nae3Instance { n, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    /// Parses `p nae3 n L` followed by `L` lines of three nonzero signed
    /// 1-based literals. Lines starting with `c` are comments and a trailing
    /// `0` on a clause line is ignored.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            location: format!("line {line}"),
            message,
        };
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<_> = line.split_whitespace().collect();
                if header.is_some() || parts.len() != 4 || parts[1] != "nae3" {
                    return Err(err(line_no, format!("bad header `{line}`")));
                }
                let n = parts[2].parse().map_err(|e| err(line_no, format!("{e}")))?;
                let l = parts[3].parse().map_err(|e| err(line_no, format!("{e}")))?;
                header = Some((n, l));
                continue;
            }
            let Some((n, _)) = header else {
                return Err(err(line_no, "clause before header".into()));
            };
            let mut lits: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse::<i64>().map_err(|e| err(line_no, format!("`{t}`: {e}"))))
                .collect::<Result<_>>()?;
            if lits.len() == 4 && lits[3] == 0 {
                lits.pop();
            }
            if lits.len() != 3 {
                return Err(err(line_no, format!("expected 3 literals, found {}", lits.len())));
            }
            let mut clause = [Literal::pos(0); 3];
            for (slot, &v) in clause.iter_mut().zip(&lits) {
                if v == 0 || v.unsigned_abs() as usize > n {
                    return Err(err(line_no, format!("literal {v} out of range for n = {n}")));
                }
                *slot = Literal {
                    var: v.unsigned_abs() as usize - 1,
                    negated: v < 0,
                };
            }
            clauses.push(clause);
        }
        let Some((n, l)) = header else {
            return Err(err(0, "missing `p nae3 n L` header".into()));
        };
        if clauses.len() != l {
            return Err(err(0, format!("header announces {l} clauses, found {}", clauses.len())));
        }
        Nae3Instance::new(n, clauses).map_err(|e| err(0, e.to_string()))
    }

    /// Every clause has a true literal and a false literal.
    pub fn nae_satisfied(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|clause| {
            let values = clause.map(|lit| lit.eval(assignment));
            values.contains(&true) && values.contains(&false)
        })
    }

    /// `σ_{l,k}`: +1 if clause `l` contains `p_k`, -1 if it contains `¬p_k`.
    pub fn sigma(&self, l: usize) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for lit in &self.clauses[l] {
            s[lit.var] = if lit.negated { -1.0 } else { 1.0 };
        }
        s
    }
}

/// Coordinate and mode layout of an encoded instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GadgetIndex {
    pub dim: usize,
    /// Coordinates of `x̄_1..x̄_n`.
    pub bar: Vec<usize>,
    pub hat: usize,
    pub tilde: usize,
    /// `[nonnegative half, nonpositive half]` mode indices per proposition.
    pub variable_modes: Vec<[usize; 2]>,
    /// `[nonnegative half, nonpositive half]` mode indices per clause.
    pub clause_modes: Vec<[usize; 2]>,
}

#[derive(Clone, Debug)]
pub struct GadgetSystem {
    pub system: HybridSystem,
    pub index: GadgetIndex,
    pub instance: Nae3Instance,
}

fn unit(d: usize, k: usize, s: f64) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[k] = s;
    e
}

/// Paired rows `±e_k` forcing `x_k = 0`.
fn pin(d: usize, coords: impl IntoIterator<Item = usize>) -> Vec<Vec<f64>> {
    coords
        .into_iter()
        .flat_map(|k| [unit(d, k, 1.0), unit(d, k, -1.0)])
        .collect()
}

pub fn encode_naesat3(inst: &Nae3Instance) -> Result<GadgetSystem> {
    let n = inst.n;
    let d = n + 2;
    let (hat, tilde) = (n, n + 1);
    let mut modes = Vec::with_capacity(2 * n + 2 * inst.clauses.len());
    let mut variable_modes = Vec::with_capacity(n);
    for k in 0..n {
        let mut halves = [0; 2];
        for (h, s) in [1.0, -1.0].into_iter().enumerate() {
            // x̄_k' = 0 (k' ≠ k), x̂ = x̃ = 0, s·x̄_k ≥ 0.
            let mut domain = pin(d, (0..d).filter(|&c| c != k));
            domain.push(unit(d, k, s));
            // d/dt x̄_k = -x̄_k and d/dt x̃ = |x̄_k| = s·x̄_k on this half.
            let mut flow = Matrix::zeros(d, d);
            flow[(k, k)] = -1.0;
            flow[(tilde, k)] = s;
            halves[h] = modes.len();
            modes.push(Mode::new(domain, flow)?);
        }
        variable_modes.push(halves);
    }
    let mut clause_modes = Vec::with_capacity(inst.clauses.len());
    for l in 0..inst.clauses.len() {
        let sigma = inst.sigma(l);
        let mut halves = [0; 2];
        for (h, s) in [1.0, -1.0].into_iter().enumerate() {
            // x̄ = 0, x̃ = 0, s·x̂ ≥ 0.
            let mut domain = pin(d, (0..n).chain([tilde]));
            domain.push(unit(d, hat, s));
            // d/dt x̄_k = σ_{l,k}|x̂| and d/dt x̃ = -3|x̂|, with |x̂| = s·x̂.
            let mut flow = Matrix::zeros(d, d);
            for (k, &sk) in sigma.iter().enumerate() {
                flow[(k, hat)] = sk * s;
            }
            flow[(tilde, hat)] = -3.0 * s;
            halves[h] = modes.len();
            modes.push(Mode::new(domain, flow)?);
        }
        clause_modes.push(halves);
    }
    Ok(GadgetSystem {
        system: HybridSystem::new(d, modes)?,
        index: GadgetIndex {
            dim: d,
            bar: (0..n).collect(),
            hat,
            tilde,
            variable_modes,
            clause_modes,
        },
        instance: inst.clone(),
    })
}

/// The witness pair `(f, g)` built from a truth assignment.
pub fn explicit_candidate(inst: &Nae3Instance, assignment: &[bool]) -> Result<Candidate> {
    Error::check_dim(inst.n, assignment.len())?;
    let mut f: Vec<f64> = assignment.iter().map(|&p| if p { -1.0 } else { 1.0 }).collect();
    f.push(1.0);
    f.push(WITNESS_TILDE);
    let mut g: Vec<f64> = f[..inst.n].iter().map(|v| -v).collect();
    g.push(-1.0);
    g.push(WITNESS_TILDE);
    Candidate::new(vec![f, g])
}

/// `p_k` is true exactly when `f̄_k < 0`.
pub fn decode_assignment(c: &Candidate, n: usize) -> Result<Vec<bool>> {
    if c.num_pieces() != 2 {
        return Err(Error::Precondition(format!(
            "gadget candidates have 2 pieces, got {}",
            c.num_pieces()
        )));
    }
    Error::check_dim(n + 2, c.dim())?;
    let f = c.piece(0);
    (0..n)
        .map(|k| {
            if f[k] == 0.0 {
                Err(Error::Undecodable(k))
            } else {
                Ok(f[k] < 0.0)
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum GadgetViolation {
    /// `f̄_k ḡ_k < 0` fails.
    VariableSigns { k: usize },
    /// `|f̄_k| > f̃` fails.
    VariableF { k: usize },
    /// `|ḡ_k| > g̃` fails.
    VariableG { k: usize },
    /// `f̂ ĝ < 0` fails.
    ClauseSigns { l: usize },
    /// `Σ_k σ_{l,k} f̄_k − 3 f̃ < 0` fails.
    ClauseF { l: usize },
    /// `Σ_k σ_{l,k} ḡ_k − 3 g̃ < 0` fails.
    ClauseG { l: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GadgetVerdict {
    Valid,
    Refuted(GadgetViolation),
}

impl GadgetVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, GadgetVerdict::Valid)
    }
}

/// Evaluates the closed-form conditions each gadget imposes on a 2-piece
/// candidate `(f, g)`. Reports the first violated one, variables first.
pub fn check_gadget_conditions(c: &Candidate, gs: &GadgetSystem) -> Result<GadgetVerdict> {
    if c.num_pieces() != 2 {
        return Err(Error::Precondition(format!(
            "gadget candidates have 2 pieces, got {}",
            c.num_pieces()
        )));
    }
    Error::check_dim(gs.index.dim, c.dim())?;
    let (f, g) = (c.piece(0), c.piece(1));
    let idx = &gs.index;
    let (ft, gt) = (f[idx.tilde], g[idx.tilde]);
    for &k in &idx.bar {
        if !(f[k] * g[k] < 0.0) {
            return Ok(GadgetVerdict::Refuted(GadgetViolation::VariableSigns { k }));
        }
        if !(f[k].abs() > ft) {
            return Ok(GadgetVerdict::Refuted(GadgetViolation::VariableF { k }));
        }
        if !(g[k].abs() > gt) {
            return Ok(GadgetVerdict::Refuted(GadgetViolation::VariableG { k }));
        }
    }
    for l in 0..gs.instance.clauses.len() {
        let sigma = gs.instance.sigma(l);
        if !(f[idx.hat] * g[idx.hat] < 0.0) {
            return Ok(GadgetVerdict::Refuted(GadgetViolation::ClauseSigns { l }));
        }
        let sf: f64 = sigma.iter().zip(f).map(|(s, v)| s * v).sum();
        if !(sf - 3.0 * ft < 0.0) {
            return Ok(GadgetVerdict::Refuted(GadgetViolation::ClauseF { l }));
        }
        let sg: f64 = sigma.iter().zip(g).map(|(s, v)| s * v).sum();
        if !(sg - 3.0 * gt < 0.0) {
            return Ok(GadgetVerdict::Refuted(GadgetViolation::ClauseG { l }));
        }
    }
    Ok(GadgetVerdict::Valid)
}
