//! Nested EG regression tree over `[0,1]^d`.
//!
//! Each leaf owns a bin of the covariate space and an [`EgState`]. A step
//! routes the covariate to its leaf, predicts with the leaf's EG instance and,
//! once the outcome arrives, updates that instance. When the leaf's count
//! satisfies `count + 1 ≥ diam⁻²` it is split at the midpoint of coordinate
//! `h mod d` (0-based), the left child taking `[lo, τ)` and the right child
//! `[τ, hi)`, or `[τ, 1]` when the bin touches 1. The leaf that triggered the
//! split keeps its statistics and becomes an inner node; children start empty.
//!
//! Nodes are labelled `(h, i)` with children `(h+1, 2i−1)` and `(h+1, 2i)`.
//! Indices grow as `2^h`, so they are stored as big integers.
//!
//! With `effective_range` enabled the splitting condition uses the diameter
//! of the bounding box of the covariates a node has actually received
//! (including the current one) instead of the bin diameter. A node that has
//! only ever seen a single point therefore never splits.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::{check_unit, EgState, Error, LossSpec, Result};

/// One coordinate of a bin: `[lo, hi)` or `[lo, hi]` when `closed_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && (v < self.hi || (self.closed_hi && v == self.hi))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Hyper-rectangle region of a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub intervals: Vec<Interval>,
}

impl Bin {
    pub fn unit(dim: usize) -> Self {
        Self { intervals: vec![Interval { lo: 0.0, hi: 1.0, closed_hi: true }; dim] }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// Squared Euclidean diameter, `Σ_j (hi_j − lo_j)²`.
    pub fn diameter_sq(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.width() * iv.width()).sum()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter_sq().sqrt()
    }

    /// Midpoint split along `coord`: `(left, right, threshold)`.
    pub fn split(&self, coord: usize) -> (Bin, Bin, f64) {
        let iv = self.intervals[coord];
        let tau = 0.5 * (iv.lo + iv.hi);
        let mut left = self.clone();
        let mut right = self.clone();
        left.intervals[coord] = Interval { lo: iv.lo, hi: tau, closed_hi: false };
        right.intervals[coord] = Interval { lo: tau, hi: iv.hi, closed_hi: iv.closed_hi };
        (left, right, tau)
    }
}

/// `(h, i)` position of a node: depth and 1-based index within the level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeLabel {
    pub depth: u32,
    pub index: BigUint,
}

impl NodeLabel {
    pub fn root() -> Self {
        Self { depth: 0, index: BigUint::from(1u32) }
    }

    pub fn new(depth: u32, index: u64) -> Self {
        Self { depth, index: BigUint::from(index) }
    }

    pub fn left_child(&self) -> Self {
        Self { depth: self.depth + 1, index: (&self.index << 1u32) - 1u32 }
    }

    pub fn right_child(&self) -> Self {
        Self { depth: self.depth + 1, index: &self.index << 1u32 }
    }

    /// Parses the `"(h,i)"` form produced by `Display`.
    pub fn parse(s: &str) -> Option<Self> {
        let inner = s.trim().strip_prefix('(')?.strip_suffix(')')?;
        let (h, i) = inner.split_once(',')?;
        Some(Self { depth: h.trim().parse().ok()?, index: i.trim().parse().ok()? })
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.depth, self.index)
    }
}

/// Per-coordinate bounding box of the covariates a node has received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeTracker {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl RangeTracker {
    fn from_point(x: &[f64]) -> Self {
        Self { min: x.to_vec(), max: x.to_vec() }
    }

    fn include(&mut self, x: &[f64]) {
        for ((lo, hi), &v) in self.min.iter_mut().zip(self.max.iter_mut()).zip(x) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }

    pub fn diameter_sq(&self) -> f64 {
        self.min.iter().zip(&self.max).map(|(lo, hi)| (hi - lo) * (hi - lo)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    label: NodeLabel,
    bin: Bin,
    count: u64,
    eg: EgState,
    children: Option<[usize; 2]>,
    range: Option<RangeTracker>,
}

impl TreeNode {
    fn fresh(label: NodeLabel, bin: Bin, eg: EgState) -> Self {
        Self { label, bin, count: 0, eg, children: None, range: None }
    }

    pub fn label(&self) -> &NodeLabel {
        &self.label
    }

    pub fn depth(&self) -> u32 {
        self.label.depth
    }

    pub fn bin(&self) -> &Bin {
        &self.bin
    }

    /// Number of observations predicted by this node's EG instance.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn eg(&self) -> &EgState {
        &self.eg
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Arena indices of the `(left, right)` children, if any.
    pub fn children(&self) -> Option<[usize; 2]> {
        self.children
    }

    pub fn observed_range(&self) -> Option<&RangeTracker> {
        self.range.as_ref()
    }
}

/// Handle to the leaf selected for a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafRef {
    pub node: usize,
    pub depth: u32,
}

/// Result of [`NestedEgTree::predict`]; hand it back to [`NestedEgTree::update`].
#[derive(Debug, Clone)]
pub struct TreePrediction {
    pub value: f64,
    pub leaf: LeafRef,
    point: Vec<f64>,
    step: u64,
}

impl TreePrediction {
    pub fn point(&self) -> &[f64] {
        &self.point
    }
}

/// Read-only snapshot of the tree size.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub nodes: usize,
    pub height: u32,
    pub total_steps: u64,
    pub leaves: Vec<(NodeLabel, u64)>,
}

#[derive(Debug, Clone)]
pub struct NestedEgTree {
    dim: usize,
    loss: LossSpec,
    effective_range: bool,
    nodes: Vec<TreeNode>,
    height: u32,
    total_steps: u64,
}

impl NestedEgTree {
    pub fn new(dim: usize, loss: LossSpec, effective_range: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("tree dimension must be at least 1".into()));
        }
        loss.validate()?;
        let root = TreeNode::fresh(NodeLabel::root(), Bin::unit(dim), EgState::for_loss(&loss));
        Ok(Self { dim, loss, effective_range, nodes: vec![root], height: 0, total_steps: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn effective_range(&self) -> bool {
        self.effective_range
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Maximal leaf depth.
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, leaf: LeafRef) -> &TreeNode {
        &self.nodes[leaf.node]
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        x.iter().try_for_each(|&v| check_unit("covariate", v))
    }

    /// Leaf whose bin contains `x`, in `O(height)` comparisons.
    pub fn route(&self, x: &[f64]) -> Result<LeafRef> {
        self.check_point(x)?;
        let mut id = 0;
        while let Some([left, right]) = self.nodes[id].children {
            let coord = self.nodes[id].label.depth as usize % self.dim;
            let tau = self.nodes[left].bin.intervals[coord].hi;
            id = if x[coord] >= tau { right } else { left };
        }
        debug_assert!(self.nodes[id].bin.contains(x), "leaf bin must contain the routed point");
        Ok(LeafRef { node: id, depth: self.nodes[id].label.depth })
    }

    pub fn predict(&self, x: &[f64]) -> Result<TreePrediction> {
        let leaf = self.route(x)?;
        Ok(TreePrediction {
            value: self.nodes[leaf.node].eg.predict(),
            leaf,
            point: x.to_vec(),
            step: self.total_steps,
        })
    }

    /// Feeds `outcome` to the leaf that produced `pred`, splitting it when the
    /// count-vs-diameter condition holds. Returns whether a split happened.
    pub fn update(&mut self, pred: &TreePrediction, outcome: f64) -> Result<bool> {
        if pred.step != self.total_steps {
            return Err(Error::ContractViolation(format!(
                "prediction was issued at step {} but the tree is at step {}",
                pred.step, self.total_steps
            )));
        }
        let id = pred.leaf.node;
        match self.nodes.get(id) {
            Some(node) if node.is_leaf() => {}
            _ => {
                return Err(Error::ContractViolation(format!(
                    "stale leaf reference to node {id}"
                )))
            }
        }
        let loss = self.loss;
        let node = &mut self.nodes[id];
        node.eg = node.eg.update(pred.value, outcome, &loss)?;
        node.count += 1;
        self.total_steps += 1;
        if self.effective_range {
            match node.range.as_mut() {
                Some(r) => r.include(&pred.point),
                None => node.range = Some(RangeTracker::from_point(&pred.point)),
            }
        }
        let diam_sq = if self.effective_range {
            node.range.as_ref().map_or(0.0, RangeTracker::diameter_sq)
        } else {
            node.bin.diameter_sq()
        };
        // count + 1 ≥ diam⁻², with diam = 0 read as an infinite threshold.
        let should_split = diam_sq > 0.0 && (node.count + 1) as f64 * diam_sq >= 1.0;
        if should_split {
            self.split(id);
        }
        Ok(should_split)
    }

    fn split(&mut self, id: usize) {
        let node = &self.nodes[id];
        let coord = node.label.depth as usize % self.dim;
        let (left_bin, right_bin, _) = node.bin.split(coord);
        let eg = EgState::for_loss(&self.loss);
        let left = TreeNode::fresh(node.label.left_child(), left_bin, eg);
        let right = TreeNode::fresh(node.label.right_child(), right_bin, eg);
        let child_depth = left.label.depth;
        let base = self.nodes.len();
        self.nodes.push(left);
        self.nodes.push(right);
        self.nodes[id].children = Some([base, base + 1]);
        self.height = self.height.max(child_depth);
    }

    pub fn stats(&self) -> TreeStats {
        TreeStats {
            nodes: self.nodes.len(),
            height: self.height,
            total_steps: self.total_steps,
            leaves: self
                .nodes
                .iter()
                .filter(|n| n.is_leaf())
                .map(|n| (n.label.clone(), n.count))
                .collect(),
        }
    }

    /// Number of inner nodes at each depth, indexed by depth.
    pub fn inner_nodes_per_depth(&self) -> Vec<u64> {
        let mut per_depth = vec![0u64; self.height as usize + 1];
        for n in self.nodes.iter().filter(|n| !n.is_leaf()) {
            per_depth[n.label.depth as usize] += 1;
        }
        per_depth
    }

    pub fn snapshot(&self) -> TreeSnapshot {
        TreeSnapshot {
            dim: self.dim,
            loss: self.loss,
            effective_range: self.effective_range,
            total_steps: self.total_steps,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSnapshot {
                    depth: n.label.depth,
                    index: n.label.index.to_string(),
                    bin: n.bin.clone(),
                    count: n.count,
                    eg: n.eg,
                    children: n.children,
                    range: n.range.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a tree from a snapshot, checking its structure.
    pub fn from_snapshot(snap: TreeSnapshot) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("tree snapshot: {msg}"));
        let mut tree = Self::new(snap.dim, snap.loss, snap.effective_range)?;
        if snap.nodes.is_empty() {
            return Err(bad("no nodes".into()));
        }
        let mut nodes = Vec::with_capacity(snap.nodes.len());
        for (k, n) in snap.nodes.iter().enumerate() {
            let index: BigUint =
                n.index.parse().map_err(|_| bad(format!("node {k}: bad index {:?}", n.index)))?;
            if n.bin.dim() != snap.dim {
                return Err(bad(format!("node {k}: bin dimension {}", n.bin.dim())));
            }
            nodes.push(TreeNode {
                label: NodeLabel { depth: n.depth, index },
                bin: n.bin.clone(),
                count: n.count,
                eg: n.eg,
                children: n.children,
                range: n.range.clone(),
            });
        }
        if nodes[0].label != NodeLabel::root() || nodes[0].bin != Bin::unit(snap.dim) {
            return Err(bad("node 0 is not the unit-cube root".into()));
        }
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        let mut height = 0;
        for k in 0..nodes.len() {
            let Some([l, r]) = nodes[k].children else { continue };
            if l >= nodes.len() || r >= nodes.len() || seen[l] || seen[r] || l == r {
                return Err(bad(format!("node {k}: invalid children {l}, {r}")));
            }
            seen[l] = true;
            seen[r] = true;
            let coord = nodes[k].label.depth as usize % snap.dim;
            let (lb, rb, _) = nodes[k].bin.split(coord);
            if nodes[l].label != nodes[k].label.left_child()
                || nodes[r].label != nodes[k].label.right_child()
                || nodes[l].bin != lb
                || nodes[r].bin != rb
            {
                return Err(bad(format!("node {k}: children do not split its bin")));
            }
            height = height.max(nodes[l].label.depth);
        }
        if seen.iter().any(|s| !s) {
            return Err(bad("unreachable nodes".into()));
        }
        let total: u64 = nodes.iter().map(|n| n.count).sum();
        if total != snap.total_steps {
            return Err(bad(format!("counts sum to {total}, expected {}", snap.total_steps)));
        }
        tree.nodes = nodes;
        tree.height = height;
        tree.total_steps = snap.total_steps;
        Ok(tree)
    }
}

/// JSON form of a tree: a node list with `(h, i, bin, count, EgState)` and
/// arena indices of children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub dim: usize,
    pub loss: LossSpec,
    pub effective_range: bool,
    pub total_steps: u64,
    pub nodes: Vec<NodeSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub depth: u32,
    /// Decimal string; indices exceed 64 bits on deep trees.
    pub index: String,
    pub bin: Bin,
    pub count: u64,
    pub eg: EgState,
    pub children: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeTracker>,
}

/// Upper bound on the node count after `steps` steps: `1 + 8(d·T)^{d/(d+2)}`.
pub fn node_count_bound(dim: usize, steps: u64) -> f64 {
    let d = dim as f64;
    1.0 + 8.0 * (d * steps as f64).powf(d / (d + 2.0))
}

/// Upper bound on the height after `steps` steps: `1 + (d/2)·log₂(4dT)`.
pub fn height_bound(dim: usize, steps: u64) -> f64 {
    let d = dim as f64;
    1.0 + 0.5 * d * (4.0 * d * steps as f64).log2()
}

/// Upper bound on the diameter of a depth-`h` bin: `√(2d)·2^{−h/d}`.
pub fn diameter_bound(dim: usize, depth: u32) -> f64 {
    let d = dim as f64;
    (2.0 * d).sqrt() * (-(depth as f64) / d).exp2()
}

/// Exact width of coordinate `coord` (0-based) for a bin at `depth`:
/// with `h = kd + r`, coordinates `j < r` have width `2^{−(k+1)}`, the others `2^{−k}`.
pub fn expected_coordinate_width(dim: usize, depth: u32, coord: usize) -> f64 {
    let k = depth as usize / dim;
    let r = depth as usize % dim;
    let halvings = if coord < r { k + 1 } else { k };
    (-(halvings as f64)).exp2()
}

/// `M(3+L)(√T + 2(3d)^{d/(2(d+2))}·T^{(d+1)/(d+2)})`.
pub fn lipschitz_regret_bound(lipschitz: f64, l: f64, dim: usize, steps: u64) -> f64 {
    let d = dim as f64;
    let t = steps as f64;
    lipschitz
        * (3.0 + l)
        * (t.sqrt() + 2.0 * (3.0 * d).powf(d / (2.0 * (d + 2.0))) * t.powf((d + 1.0) / (d + 2.0)))
}
