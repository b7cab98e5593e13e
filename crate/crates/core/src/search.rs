//! Counterexample-guided tree search over constraint sets.
//!
//! Each node owns the constraint multiset `Y` of its root path. Exploring a
//! node asks the learner for a candidate in `S(Y)`; nodes whose set is empty
//! or too thin (inscribed radius below `ε`) are closed as infeasible. A
//! candidate that passes verification ends the search; otherwise its
//! counterexample `(x, i)` spawns `m` children, child `j` adding `(x, i, j)`.
//! If every leaf closes, no `ε`-robust `m`-piece function exists.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::{candidate_from, Candidate, ConstraintSet, ConstraintTriple, LearnerConfig, LearnerOutcome};
use crate::system::HybridSystem;
use crate::verifier::{verify_counted, Counterexample, CounterexampleKind, Verdict, VerifierConfig};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Unexplored,
    Infeasible,
    Expanded,
    /// Explored, and its candidate passed verification.
    Certified,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    /// The triple this node adds to its parent's set; `None` at the root.
    pub added: Option<ConstraintTriple>,
    pub status: NodeStatus,
    pub depth: usize,
    /// Inscribed radius of `S(Y)`, set once the node is explored.
    pub cached_radius: Option<f64>,
    pub candidate: Option<Candidate>,
    pub counterexample: Option<Counterexample>,
    pub children: Vec<NodeId>,
}

/// Which unexplored leaf the search picks next.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeafOrder {
    /// Largest parent radius first, ties in creation order.
    #[default]
    BestFirst,
    /// Deepest leaf first; siblings in piece order.
    DepthFirst,
}

/// The search tree. Constraint sets are stored as one triple per edge and
/// rebuilt on demand from the root path.
#[derive(Clone, Debug, Default)]
pub struct Tree {
    nodes: Vec<Node>,
    frontier: BinaryHeap<LeafKey>,
    order: LeafOrder,
    expansions: u64,
}

/// Larger `primary` first, then larger `batch`, then smaller id.
#[derive(Clone, Copy, Debug)]
struct LeafKey {
    primary: f64,
    batch: u64,
    id: NodeId,
}

impl PartialEq for LeafKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for LeafKey {}

impl PartialOrd for LeafKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LeafKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then_with(|| self.batch.cmp(&other.batch))
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl Tree {
    pub fn new() -> Self {
        Tree::with_order(LeafOrder::default())
    }

    pub fn with_order(order: LeafOrder) -> Self {
        let mut tree = Tree {
            order,
            ..Tree::default()
        };
        tree.push(None, None, 0, f64::INFINITY);
        tree
    }

    pub fn order(&self) -> LeafOrder {
        self.order
    }

    fn push(
        &mut self,
        parent: Option<NodeId>,
        added: Option<ConstraintTriple>,
        depth: usize,
        parent_radius: f64,
    ) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            parent,
            added,
            status: NodeStatus::Unexplored,
            depth,
            cached_radius: None,
            candidate: None,
            counterexample: None,
            children: Vec::new(),
        });
        let key = match self.order {
            LeafOrder::BestFirst => LeafKey {
                primary: parent_radius,
                batch: 0,
                id,
            },
            LeafOrder::DepthFirst => LeafKey {
                primary: depth as f64,
                batch: self.expansions,
                id,
            },
        };
        self.frontier.push(key);
        id
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Y(u)`, in root-to-node order.
    pub fn triples(&self, id: NodeId) -> Vec<ConstraintTriple> {
        let mut out = Vec::with_capacity(self.nodes[id].depth);
        let mut cur = Some(id);
        while let Some(u) = cur {
            if let Some(t) = &self.nodes[u].added {
                out.push(t.clone());
            }
            cur = self.nodes[u].parent;
        }
        out.reverse();
        out
    }

    pub fn constraint_set<'a>(&self, id: NodeId, system: &'a HybridSystem) -> ConstraintSet<'a> {
        ConstraintSet::new(system, self.triples(id))
    }

    /// The next leaf under the tree's [`LeafOrder`].
    pub fn select_leaf(&self) -> Option<NodeId> {
        self.frontier.peek().map(|k| k.id)
    }

    fn pop_leaf(&mut self) -> Option<NodeId> {
        self.frontier.pop().map(|k| k.id)
    }

    pub fn unexplored(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.status == NodeStatus::Unexplored)
    }

    pub fn mark_infeasible(&mut self, id: NodeId) {
        self.nodes[id].status = NodeStatus::Infeasible;
    }

    /// Creates `m` children of `u`, child `j` adding `(cex.x, cex.i, j)`.
    pub fn expand_node(&mut self, u: NodeId, cex: &Counterexample, m: usize) -> Result<Vec<NodeId>> {
        self.expand_node_with(u, cex, m, false)
    }

    /// Piece indices mentioned by some triple of `Y(u)`.
    pub fn used_pieces(&self, u: NodeId, m: usize) -> Vec<bool> {
        let mut used = vec![false; m];
        let mut cur = Some(u);
        while let Some(v) = cur {
            if let Some(t) = &self.nodes[v].added {
                used[t.i] = true;
                used[t.j] = true;
            }
            cur = self.nodes[v].parent;
        }
        used
    }

    /// Like [`Tree::expand_node`], but with `symmetric` set, only the first
    /// of the indices `j` that neither `Y(u)` nor `cex.i` mention gets a
    /// child. Pieces are interchangeable, so the children for the other fresh
    /// indices hold relabelled copies of the same candidates.
    pub fn expand_node_with(
        &mut self,
        u: NodeId,
        cex: &Counterexample,
        m: usize,
        symmetric: bool,
    ) -> Result<Vec<NodeId>> {
        if cex.i >= m {
            return Err(Error::Precondition(format!(
                "counterexample piece {} out of range for m = {m}",
                cex.i
            )));
        }
        let node = &self.nodes[u];
        if node.status != NodeStatus::Unexplored && node.status != NodeStatus::Expanded {
            return Err(Error::Precondition(format!("node {u} cannot be expanded")));
        }
        if !node.children.is_empty() {
            return Err(Error::Precondition(format!("node {u} is already expanded")));
        }
        let depth = node.depth + 1;
        let radius = node.cached_radius.unwrap_or(f64::INFINITY);
        let mut used = if symmetric {
            self.used_pieces(u, m)
        } else {
            vec![true; m]
        };
        used[cex.i] = true;
        self.expansions += 1;
        let mut fresh_taken = false;
        let mut children = Vec::with_capacity(m);
        for (j, &in_use) in used.iter().enumerate() {
            if !in_use {
                if fresh_taken {
                    continue;
                }
                fresh_taken = true;
            }
            let triple = ConstraintTriple::new(&cex.x, cex.i, j)?;
            children.push(self.push(Some(u), Some(triple), depth, radius));
        }
        let node = &mut self.nodes[u];
        node.status = NodeStatus::Expanded;
        node.counterexample = Some(cex.clone());
        node.children = children.clone();
        // The node may still be queued if it was expanded without being popped.
        self.frontier.retain(|k| k.id != u);
        Ok(children)
    }
}

/// Depth bound of the cutting-plane argument under MVE centers:
/// `⌊ r log ε / log(1 − 1/r) ⌋` with `r = m·d`.
pub fn depth_bound(m: usize, d: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let r = (m * d) as f64;
    if r < 2.0 {
        return Err(Error::Precondition(format!("m·d must be at least 2, got {r}")));
    }
    Ok((r * epsilon.ln() / (1.0 - 1.0 / r).ln()).floor() as usize)
}

pub const MAX_NODES_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub max_nodes: usize,
    pub max_time: Duration,
}

impl Budget {
    /// `m^(depth_bound + 1)` nodes capped at one million, and ten minutes.
    pub fn default_for(m: usize, d: usize, epsilon: f64) -> Self {
        let max_nodes = depth_bound(m, d, epsilon)
            .ok()
            .and_then(|depth| u32::try_from(depth + 1).ok())
            .and_then(|e| m.checked_pow(e))
            .map_or(MAX_NODES_CAP, |n| n.min(MAX_NODES_CAP));
        Budget {
            max_nodes,
            max_time: Duration::from_secs(600),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub pieces: usize,
    pub epsilon: f64,
    pub budget: Budget,
    pub learner: LearnerConfig,
    pub verifier: VerifierConfig,
    pub leaf_order: LeafOrder,
    /// Skip children that differ only by relabelling unused pieces.
    pub symmetry_breaking: bool,
}

impl SearchConfig {
    pub fn new(pieces: usize, epsilon: f64, dim: usize) -> Self {
        SearchConfig {
            pieces,
            epsilon,
            budget: Budget::default_for(pieces, dim, epsilon),
            learner: LearnerConfig::default(),
            verifier: VerifierConfig::default(),
            leaf_order: LeafOrder::default(),
            symmetry_breaking: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub nodes_explored: usize,
    pub max_depth: usize,
    pub lp_count: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynthesisOutcome {
    Found(Candidate, SearchStats),
    NoRobustLyapunov(SearchStats),
    BudgetExhausted(SearchStats),
}

impl SynthesisOutcome {
    pub fn stats(&self) -> &SearchStats {
        match self {
            SynthesisOutcome::Found(_, s)
            | SynthesisOutcome::NoRobustLyapunov(s)
            | SynthesisOutcome::BudgetExhausted(s) => s,
        }
    }

    pub fn candidate(&self) -> Option<&Candidate> {
        match self {
            SynthesisOutcome::Found(c, _) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventVerdict {
    Infeasible,
    BelowRadius,
    Refuted,
    Valid,
}

/// One explored node, as written to the JSON-lines trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchEvent {
    pub node: NodeId,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub radius: Option<f64>,
    pub verdict: EventVerdict,
    /// The triple this node added to its parent's constraints.
    pub added: Option<ConstraintTriple>,
    pub candidate: Option<Vec<Vec<f64>>>,
    pub counterexample: Option<Counterexample>,
}

pub struct Synthesizer<'a> {
    system: &'a HybridSystem,
    config: SearchConfig,
    tree: Tree,
    stats: SearchStats,
}

impl<'a> Synthesizer<'a> {
    pub fn new(system: &'a HybridSystem, config: SearchConfig) -> Result<Self> {
        if config.pieces < 2 {
            return Err(Error::Precondition(format!(
                "need at least 2 pieces, got {}",
                config.pieces
            )));
        }
        if !(config.epsilon > 0.0) {
            return Err(Error::Precondition(format!(
                "epsilon must be positive, got {}",
                config.epsilon
            )));
        }
        Ok(Synthesizer {
            system,
            tree: Tree::with_order(config.leaf_order),
            config,
            stats: SearchStats::default(),
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn run(&mut self) -> Result<SynthesisOutcome> {
        self.run_with(|_, _| {})
    }

    /// Runs the search, calling `observe` after every explored node with the
    /// tree state and the event describing that node.
    pub fn run_with<F>(&mut self, mut observe: F) -> Result<SynthesisOutcome>
    where
        F: FnMut(&Tree, &SearchEvent),
    {
        let started = Instant::now();
        loop {
            self.stats.wall_time = started.elapsed();
            if self.tree.select_leaf().is_none() {
                return Ok(SynthesisOutcome::NoRobustLyapunov(self.stats.clone()));
            }
            if self.stats.nodes_explored >= self.config.budget.max_nodes
                || self.stats.wall_time >= self.config.budget.max_time
            {
                return Ok(SynthesisOutcome::BudgetExhausted(self.stats.clone()));
            }
            let u = self.tree.pop_leaf().expect("frontier is non-empty");
            self.stats.nodes_explored += 1;
            let depth = self.tree.node(u).depth;
            self.stats.max_depth = self.stats.max_depth.max(depth);

            let event = self.explore(u).map_err(|e| {
                let triples = self.tree.triples(u);
                e.context(format!("while exploring node {u} with Y = {triples:?}"))
            })?;
            log::debug!(
                "node {} depth {} radius {:?} -> {:?}",
                u,
                depth,
                event.radius,
                event.verdict
            );
            observe(&self.tree, &event);
            if event.verdict == EventVerdict::Valid {
                let candidate = self
                    .tree
                    .node(u)
                    .candidate
                    .clone()
                    .expect("certified node has a candidate");
                self.stats.wall_time = started.elapsed();
                return Ok(SynthesisOutcome::Found(candidate, self.stats.clone()));
            }
        }
    }

    fn learn(&mut self, u: NodeId) -> Result<LearnerOutcome> {
        let y = self.tree.constraint_set(u, self.system);
        let learned = candidate_from(&y, self.config.pieces, self.config.epsilon, &self.config.learner)?;
        self.stats.lp_count += learned.lp_count();
        Ok(learned)
    }

    fn explore(&mut self, u: NodeId) -> Result<SearchEvent> {
        let m = self.config.pieces;
        let learned = self.learn(u)?;
        let node = self.tree.node(u);
        let mut event = SearchEvent {
            node: u,
            parent: node.parent,
            depth: node.depth,
            radius: learned.radius(),
            verdict: EventVerdict::Infeasible,
            added: node.added.clone(),
            candidate: None,
            counterexample: None,
        };
        self.tree.nodes[u].cached_radius = learned.radius();
        let candidate = match learned {
            LearnerOutcome::Infeasible { .. } => {
                self.tree.mark_infeasible(u);
                return Ok(event);
            }
            LearnerOutcome::BelowRadius { .. } => {
                self.tree.mark_infeasible(u);
                event.verdict = EventVerdict::BelowRadius;
                return Ok(event);
            }
            LearnerOutcome::Candidate { candidate, .. } => candidate,
        };
        event.candidate = Some(candidate.pieces().to_vec());
        let mut lps = 0;
        let verdict = verify_counted(&candidate, self.system, &self.config.verifier, &mut lps);
        self.stats.lp_count += lps;
        self.tree.nodes[u].candidate = Some(candidate.clone());
        match verdict? {
            Verdict::Valid => {
                // Certify once more on a fresh pass before reporting.
                let again = verify_counted(&candidate, self.system, &self.config.verifier, &mut self.stats.lp_count)?;
                if !again.is_valid() {
                    return Err(Error::NumericalFailure("candidate failed re-verification".into()));
                }
                self.tree.nodes[u].status = NodeStatus::Certified;
                event.verdict = EventVerdict::Valid;
            }
            Verdict::Refuted(cex) => {
                self.tree.expand_node_with(u, &cex, m, self.config.symmetry_breaking)?;
                event.verdict = EventVerdict::Refuted;
                event.counterexample = Some(cex);
            }
        }
        Ok(event)
    }
}

pub fn synthesize(system: &HybridSystem, config: SearchConfig) -> Result<SynthesisOutcome> {
    Synthesizer::new(system, config)?.run()
}

/// Whether `candidate` fails the clause `(cex.x, cex.i, j)` for every `j`,
/// i.e. no child of the node that produced `cex` still admits it. A clause
/// counts as failed unless it holds with slack above `tol`; ties at the
/// arg-max are failures of the strict inequality.
pub fn excluded_by_all_children(
    candidate: &Candidate,
    cex: &Counterexample,
    system: &HybridSystem,
    tol: f64,
) -> Result<bool> {
    for j in 0..candidate.num_pieces() {
        let t = ConstraintTriple::new(&cex.x, cex.i, j)?;
        if t.holds_for(candidate, system, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

impl CounterexampleKind {
    pub fn is_positivity(&self) -> bool {
        matches!(self, CounterexampleKind::Positivity)
    }
}
