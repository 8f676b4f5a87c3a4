//! Genealogical trees as rooted, edge-weighted real trees.
//!
//! Each node carries the edge supporting one particle's lifetime;
//! children are grafted on the parent edge at their birth offset. Edge
//! lengths are exact integers when built from a discrete run and become
//! floating point only through [`GenealogyTree::rescale`]. Beyond
//! construction the module provides truncation to the label set
//! `U_h` (words over `{1..h}` of length at most `h`), height / length /
//! diameter statistics, and certified two-sided Gromov–Hausdorff
//! bounds between rooted trees.

use crate::branching::{Label, SystemRun};
use crate::rng;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use std::collections::HashMap;
use std::ops::Add;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenealogyError {
    #[error("run is not extinct (exploded: {exploded}); its genealogy is not a finite tree")]
    NotExtinct { exploded: bool },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Edge length scalar: `u64` for exact discrete trees, `f64` after
/// rescaling.
pub trait EdgeLength:
    Copy + PartialOrd + Add<Output = Self> + Zero + ToPrimitive + std::fmt::Debug + 'static
{
}
impl EdgeLength for u64 {}
impl EdgeLength for f64 {}

#[derive(Debug, Clone)]
pub struct TreeNode<L> {
    pub label: Label,
    pub parent: Option<usize>,
    /// Position on the parent edge where this node grafts.
    pub graft_offset: L,
    pub edge_length: L,
    pub children: Vec<usize>,
}

/// A rooted edge-weighted tree; `nodes[0]` is the root, parents precede
/// children.
#[derive(Debug, Clone)]
pub struct GenealogyTree<L> {
    pub nodes: Vec<TreeNode<L>>,
}

impl<L: EdgeLength> GenealogyTree<L> {
    pub fn with_root(edge_length: L) -> Self {
        Self {
            nodes: vec![TreeNode {
                label: Label::new(),
                parent: None,
                graft_offset: L::zero(),
                edge_length,
                children: Vec::new(),
            }],
        }
    }

    /// Adds a child grafted at `offset` on `parent`'s edge, returning
    /// its node index. `rank` extends the parent's label.
    pub fn add_child(&mut self, parent: usize, rank: u32, offset: L, edge_length: L) -> usize {
        debug_assert!(offset <= self.nodes[parent].edge_length);
        let mut label = self.nodes[parent].label.clone();
        label.push(rank);
        let idx = self.nodes.len();
        self.nodes.push(TreeNode {
            label,
            parent: Some(parent),
            graft_offset: offset,
            edge_length,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Depth of each node's start (graft) point.
    fn start_depths(&self) -> Vec<L> {
        let mut depth = vec![L::zero(); self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                depth[i] = depth[p] + node.graft_offset;
            }
        }
        depth
    }

    /// Height: largest root distance over the whole tree (attained at
    /// an edge tip). Exact in integer arithmetic for `L = u64`.
    pub fn height(&self) -> L {
        let depths = self.start_depths();
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| depths[i] + n.edge_length)
            .fold(L::zero(), |acc, d| if d > acc { d } else { acc })
    }

    /// Multiplies every length by `factor`. The only lossy step.
    pub fn rescale(&self, factor: f64) -> GenealogyTree<f64> {
        assert!(factor > 0.0, "rescale factor must be positive");
        GenealogyTree {
            nodes: self
                .nodes
                .iter()
                .map(|n| TreeNode {
                    label: n.label.clone(),
                    parent: n.parent,
                    graft_offset: n.graft_offset.to_f64().expect("finite length") * factor,
                    edge_length: n.edge_length.to_f64().expect("finite length") * factor,
                    children: n.children.clone(),
                })
                .collect(),
        }
    }

    /// Restriction to labels in `U_h`: child ranks at most `h`, depth at
    /// most `h`. The result is a metric subspace of the original.
    pub fn truncate(&self, h: u64) -> GenealogyTree<L> {
        let mut out = Self::with_root(self.nodes[0].edge_length);
        let mut map = HashMap::new();
        map.insert(0usize, 0usize);
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            let rank = *node.label.last().expect("non-root") as u64;
            if rank > h || node.label.len() as u64 > h {
                continue;
            }
            let Some(&new_parent) = map.get(&node.parent.expect("non-root")) else {
                continue;
            };
            let idx = out.add_child(
                new_parent,
                *node.label.last().unwrap(),
                node.graft_offset,
                node.edge_length,
            );
            map.insert(i, idx);
        }
        out
    }

    /// Upper bound on the Gromov–Hausdorff distance between the tree
    /// and its `U_h` truncation: the Hausdorff excess of the pruned
    /// subtrees in the common embedding, `max` over maximal pruned
    /// subtrees of their height above the graft point. Non-increasing
    /// in `h` by construction.
    pub fn truncation_gh_upper(&self, h: u64) -> f64 {
        let depths = self.start_depths();
        let mut kept = vec![false; self.nodes.len()];
        kept[0] = true;
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            let rank = *node.label.last().unwrap() as u64;
            kept[i] = kept[node.parent.unwrap()] && rank <= h && node.label.len() as u64 <= h;
        }
        // Subtree max tip depth; children come after parents so scan back.
        let mut reach: Vec<f64> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (depths[i] + n.edge_length).to_f64().unwrap())
            .collect();
        for i in (1..self.nodes.len()).rev() {
            let p = self.nodes[i].parent.unwrap();
            if reach[i] > reach[p] {
                reach[p] = reach[i];
            }
        }
        let mut worst = 0.0f64;
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            if !kept[i] && kept[node.parent.unwrap()] {
                let graft_depth = depths[i].to_f64().unwrap();
                worst = worst.max(reach[i] - graft_depth);
            }
        }
        worst
    }
}

/// Summary statistics of a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeStats {
    pub height: f64,
    pub total_length: f64,
    pub leaves: u64,
    /// Largest number of children grafted on one edge.
    pub max_degree: u64,
    pub diameter: f64,
}

/// Builds the genealogical tree of an extinct run: one node per
/// particle, edge length its lifetime, children grafted at their birth
/// offsets in ranked order.
pub fn build_tree(run: &SystemRun) -> Result<GenealogyTree<u64>, GenealogyError> {
    if !run.extinct {
        return Err(GenealogyError::NotExtinct {
            exploded: run.exploded,
        });
    }
    let root = &run.particles[&Label::new()];
    let mut tree = GenealogyTree::with_root(root.path.lifetime().expect("extinct"));
    let mut index: HashMap<Label, usize> = HashMap::new();
    index.insert(Label::new(), 0);
    // BTreeMap order puts every parent before its children.
    for (label, particle) in &run.particles {
        if label.is_empty() {
            continue;
        }
        let parent_label = label[..label.len() - 1].to_vec();
        let parent_idx = index[&parent_label];
        let parent_birth = run.particles[&parent_label].birth_time;
        let idx = tree.add_child(
            parent_idx,
            *label.last().unwrap(),
            particle.birth_time - parent_birth,
            particle.path.lifetime().expect("extinct"),
        );
        index.insert(label.clone(), idx);
    }
    Ok(tree)
}

/// Expanded metric graph: every node start and tip is a vertex, edges
/// subdivided at graft points. Used for exact diameter sweeps.
fn metric_graph<L: EdgeLength>(tree: &GenealogyTree<L>) -> Vec<Vec<(usize, f64)>> {
    let n = tree.nodes.len();
    // Vertex ids: start(i) = i, tip(i) = n + i.
    let mut adj = vec![Vec::new(); 2 * n];
    for (i, node) in tree.nodes.iter().enumerate() {
        let mut grafts: Vec<(f64, usize)> = node
            .children
            .iter()
            .map(|&c| (tree.nodes[c].graft_offset.to_f64().unwrap(), c))
            .collect();
        grafts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut prev = (i, 0.0);
        for (offset, child) in grafts {
            let seg = offset - prev.1;
            adj[prev.0].push((child, seg));
            adj[child].push((prev.0, seg));
            prev = (child, offset);
        }
        let len = node.edge_length.to_f64().unwrap();
        let seg = len - prev.1;
        adj[prev.0].push((n + i, seg));
        adj[n + i].push((prev.0, seg));
    }
    adj
}

fn farthest(adj: &[Vec<(usize, f64)>], from: usize) -> (usize, f64, Vec<f64>) {
    let mut dist = vec![f64::NEG_INFINITY; adj.len()];
    let mut stack = vec![from];
    dist[from] = 0.0;
    while let Some(v) = stack.pop() {
        for &(w, len) in &adj[v] {
            if dist[w] == f64::NEG_INFINITY {
                dist[w] = dist[v] + len;
                stack.push(w);
            }
        }
    }
    let (arg, best) = dist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    (arg, *best, dist)
}

/// Height, total length, leaf count, max degree and exact diameter.
pub fn tree_stats<L: EdgeLength>(tree: &GenealogyTree<L>) -> TreeStats {
    let height = tree.height().to_f64().unwrap();
    let total_length: f64 = tree
        .nodes
        .iter()
        .map(|n| n.edge_length.to_f64().unwrap())
        .sum();
    let leaves = tree.nodes.iter().filter(|n| n.children.is_empty()).count() as u64;
    let max_degree = tree
        .nodes
        .iter()
        .map(|n| n.children.len() as u64)
        .max()
        .unwrap_or(0);
    let adj = metric_graph(tree);
    let (a, _, _) = farthest(&adj, 0);
    let (_, diameter, _) = farthest(&adj, a);
    TreeStats {
        height,
        total_length,
        leaves,
        max_degree,
        diameter,
    }
}

/// A point of the tree: on node `node`'s edge, `offset` from its start.
#[derive(Debug, Clone, Copy)]
struct TreePoint {
    node: usize,
    offset: f64,
}

/// Distance oracle over tree points.
struct PointMetric {
    start_depth: Vec<f64>,
    parent: Vec<Option<usize>>,
    graft: Vec<f64>,
    level: Vec<u32>,
}

impl PointMetric {
    fn new<L: EdgeLength>(tree: &GenealogyTree<L>) -> Self {
        let n = tree.nodes.len();
        let mut start_depth = vec![0.0; n];
        let mut level = vec![0u32; n];
        let mut parent = vec![None; n];
        let mut graft = vec![0.0; n];
        for (i, node) in tree.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                parent[i] = Some(p);
                graft[i] = node.graft_offset.to_f64().unwrap();
                start_depth[i] = start_depth[p] + graft[i];
                level[i] = level[p] + 1;
            }
        }
        Self {
            start_depth,
            parent,
            graft,
            level,
        }
    }

    fn depth(&self, p: TreePoint) -> f64 {
        self.start_depth[p.node] + p.offset
    }

    /// Exact path distance between two points.
    fn dist(&self, p: TreePoint, q: TreePoint) -> f64 {
        if p.node == q.node {
            return (p.offset - q.offset).abs();
        }
        let (mut u, mut v) = (p.node, q.node);
        // Climb the deeper side; if it reaches the other's node, the
        // paths meet on that edge at the exit graft.
        while self.level[u] > self.level[v] {
            let exit = self.graft[u];
            u = self.parent[u].unwrap();
            if u == q.node {
                return (self.depth(p) - (self.start_depth[u] + exit))
                    + (q.offset - exit).abs();
            }
        }
        while self.level[v] > self.level[u] {
            let exit = self.graft[v];
            v = self.parent[v].unwrap();
            if v == p.node {
                return (self.depth(q) - (self.start_depth[v] + exit))
                    + (p.offset - exit).abs();
            }
        }
        if u == v {
            // Same node at equal level can only happen for p.node == q.node,
            // already handled; defensive fall-through.
            return (self.depth(p) - self.depth(q)).abs();
        }
        loop {
            let (ou, ov) = (self.graft[u], self.graft[v]);
            let (pu, pv) = (self.parent[u].unwrap(), self.parent[v].unwrap());
            if pu == pv {
                return (self.depth(p) - (self.start_depth[pu] + ou))
                    + (self.depth(q) - (self.start_depth[pv] + ov))
                    + (ou - ov).abs();
            }
            u = pu;
            v = pv;
        }
    }
}

/// Two-sided Gromov–Hausdorff bounds between rooted trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Subtree heights measured from each node's graft point.
fn subtree_reach<L: EdgeLength>(tree: &GenealogyTree<L>, metric: &PointMetric) -> Vec<f64> {
    let n = tree.nodes.len();
    let mut reach: Vec<f64> = (0..n)
        .map(|i| metric.start_depth[i] + tree.nodes[i].edge_length.to_f64().unwrap())
        .collect();
    for i in (1..n).rev() {
        let p = tree.nodes[i].parent.unwrap();
        if reach[i] > reach[p] {
            reach[p] = reach[i];
        }
    }
    (0..n).map(|i| reach[i] - metric.start_depth[i]).collect()
}

fn skeleton_points<L: EdgeLength>(tree: &GenealogyTree<L>) -> Vec<TreePoint> {
    let mut pts = vec![TreePoint {
        node: 0,
        offset: 0.0,
    }];
    for (i, node) in tree.nodes.iter().enumerate() {
        pts.push(TreePoint {
            node: i,
            offset: node.edge_length.to_f64().unwrap(),
        });
        if i > 0 {
            pts.push(TreePoint {
                node: node.parent.unwrap(),
                offset: node.graft_offset.to_f64().unwrap(),
            });
        }
    }
    pts
}

/// Half the largest gap between consecutive marked points along any
/// edge: the covering radius of the skeleton in the tree.
fn skeleton_mesh<L: EdgeLength>(tree: &GenealogyTree<L>) -> f64 {
    let mut worst = 0.0f64;
    for node in &tree.nodes {
        let mut offsets: Vec<f64> = node
            .children
            .iter()
            .map(|&c| tree.nodes[c].graft_offset.to_f64().unwrap())
            .collect();
        offsets.push(0.0);
        offsets.push(node.edge_length.to_f64().unwrap());
        offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in offsets.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    worst / 2.0
}

struct GreedyCorrespondence {
    pairs: Vec<(TreePoint, TreePoint)>,
    /// Largest length mismatch among affinely paired edges and largest
    /// collapsed edge; bounds the extra distortion of interior points.
    stretch: f64,
}

fn collect_subtree<L: EdgeLength>(tree: &GenealogyTree<L>, root: usize, out: &mut Vec<usize>) {
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        out.push(i);
        stack.extend_from_slice(&tree.nodes[i].children);
    }
}

fn greedy_correspondence<L: EdgeLength>(
    t1: &GenealogyTree<L>,
    t2: &GenealogyTree<L>,
    reach1: &[f64],
    reach2: &[f64],
) -> GreedyCorrespondence {
    let mut pairs = vec![(
        TreePoint { node: 0, offset: 0.0 },
        TreePoint { node: 0, offset: 0.0 },
    )];
    let mut stretch = 0.0f64;
    let mut stack = vec![(0usize, 0usize)];
    while let Some((i1, i2)) = stack.pop() {
        let (n1, n2) = (&t1.nodes[i1], &t2.nodes[i2]);
        let (len1, len2) = (
            n1.edge_length.to_f64().unwrap(),
            n2.edge_length.to_f64().unwrap(),
        );
        stretch = stretch.max((len1 - len2).abs());
        pairs.push((
            TreePoint { node: i1, offset: len1 },
            TreePoint { node: i2, offset: len2 },
        ));
        let order = |tree: &GenealogyTree<L>, reach: &[f64], kids: &[usize]| -> Vec<usize> {
            let mut kids = kids.to_vec();
            kids.sort_by(|&a, &b| {
                reach[b]
                    .partial_cmp(&reach[a])
                    .unwrap()
                    .then(
                        tree.nodes[a]
                            .graft_offset
                            .partial_cmp(&tree.nodes[b].graft_offset)
                            .unwrap_or(std::cmp::Ordering::Equal),
                    )
                    .then(a.cmp(&b))
            });
            kids
        };
        let kids1 = order(t1, reach1, &n1.children);
        let kids2 = order(t2, reach2, &n2.children);
        let matched = kids1.len().min(kids2.len());
        for k in 0..matched {
            let (c1, c2) = (kids1[k], kids2[k]);
            pairs.push((
                TreePoint { node: c1, offset: 0.0 },
                TreePoint { node: c2, offset: 0.0 },
            ));
            stack.push((c1, c2));
        }
        // Unmatched subtrees collapse onto the image of their graft.
        for &c in &kids1[matched..] {
            let graft = t1.nodes[c].graft_offset.to_f64().unwrap();
            let anchor = TreePoint {
                node: i2,
                offset: graft.min(len2),
            };
            let mut sub = Vec::new();
            collect_subtree(t1, c, &mut sub);
            for idx in sub {
                let len = t1.nodes[idx].edge_length.to_f64().unwrap();
                stretch = stretch.max(len);
                for offset in [0.0, len] {
                    pairs.push((TreePoint { node: idx, offset }, anchor));
                }
            }
        }
        for &c in &kids2[matched..] {
            let graft = t2.nodes[c].graft_offset.to_f64().unwrap();
            let anchor = TreePoint {
                node: i1,
                offset: graft.min(len1),
            };
            let mut sub = Vec::new();
            collect_subtree(t2, c, &mut sub);
            for idx in sub {
                let len = t2.nodes[idx].edge_length.to_f64().unwrap();
                stretch = stretch.max(len);
                for offset in [0.0, len] {
                    pairs.push((anchor, TreePoint { node: idx, offset }));
                }
            }
        }
    }
    GreedyCorrespondence { pairs, stretch }
}

/// Deterministically sub-samples points, spread by depth.
fn landmarks(pts: &[TreePoint], metric: &PointMetric, cap: usize) -> Vec<TreePoint> {
    if pts.len() <= cap {
        return pts.to_vec();
    }
    let mut by_depth: Vec<usize> = (0..pts.len()).collect();
    by_depth.sort_by(|&a, &b| {
        metric
            .depth(pts[a])
            .partial_cmp(&metric.depth(pts[b]))
            .unwrap()
            .then(a.cmp(&b))
    });
    (0..cap)
        .map(|k| pts[by_depth[k * (pts.len() - 1) / (cap - 1)]])
        .collect()
}

/// Largest distance from any skeleton point to the landmark set.
fn landmark_defect(pts: &[TreePoint], lms: &[TreePoint], metric: &PointMetric) -> f64 {
    pts.iter()
        .map(|&p| {
            lms.iter()
                .map(|&l| metric.dist(p, l))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

const GH_LANDMARK_CAP: usize = 14;
const GH_TRIPLE_SAMPLES: usize = 160;

/// Sampled three-point lower bound with mesh correction:
/// `max(0, S - 2 delta) / 2`, where `S` maximizes over sampled triples
/// of `t1` the minimal sup-norm gap to distance matrices of landmark
/// triples of `t2`, and `delta` covers `t2` by the landmark set.
/// Restricting the outer sup keeps the bound valid.
fn three_point_lower(
    pts1: &[TreePoint],
    m1: &PointMetric,
    pts2: &[TreePoint],
    m2: &PointMetric,
    mesh2: f64,
    seed: u64,
) -> f64 {
    if pts1.len() < 3 || pts2.len() < 3 {
        return 0.0;
    }
    let lms2 = landmarks(pts2, m2, GH_LANDMARK_CAP);
    let delta2 = landmark_defect(pts2, &lms2, m2) + mesh2;
    let k = lms2.len();
    let mut d2 = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            d2[i * k + j] = m2.dist(lms2[i], lms2[j]);
        }
    }
    let mut rng = rng::stream(seed, &[0x6768]);
    let mut s = 0.0f64;
    for _ in 0..GH_TRIPLE_SAMPLES {
        let i1 = rng.random_range(0..pts1.len());
        let i2 = rng.random_range(0..pts1.len());
        let i3 = rng.random_range(0..pts1.len());
        let (x1, x2, x3) = (pts1[i1], pts1[i2], pts1[i3]);
        let (a, b, c) = (m1.dist(x1, x2), m1.dist(x1, x3), m1.dist(x2, x3));
        let mut best = f64::INFINITY;
        for i in 0..k {
            for j in 0..k {
                let gap_a = (a - d2[i * k + j]).abs();
                if gap_a >= best {
                    continue;
                }
                for l in 0..k {
                    let gap = gap_a
                        .max((b - d2[i * k + l]).abs())
                        .max((c - d2[j * k + l]).abs());
                    if gap < best {
                        best = gap;
                    }
                }
            }
        }
        s = s.max(best);
    }
    ((s - 2.0 * delta2) / 2.0).max(0.0)
}

/// Certified lower/upper bounds on the rooted Gromov–Hausdorff
/// distance.
///
/// Lower: max of half the height gap, half the diameter gap, and the
/// sampled three-point bound. Upper: half the exact distortion of a
/// root-preserving greedy correspondence (children matched by
/// descending subtree height, unmatched subtrees collapsed to their
/// graft image) plus the affine-interpolation stretch.
pub fn gh_bounds<L: EdgeLength>(t1: &GenealogyTree<L>, t2: &GenealogyTree<L>) -> GhBounds {
    let m1 = PointMetric::new(t1);
    let m2 = PointMetric::new(t2);
    let reach1 = subtree_reach(t1, &m1);
    let reach2 = subtree_reach(t2, &m2);

    let h1 = t1.height().to_f64().unwrap();
    let h2 = t2.height().to_f64().unwrap();
    let s1 = tree_stats(t1);
    let s2 = tree_stats(t2);
    let mut lower = ((h1 - h2).abs() / 2.0).max((s1.diameter - s2.diameter).abs() / 2.0);

    let pts1 = skeleton_points(t1);
    let pts2 = skeleton_points(t2);
    let mesh1 = skeleton_mesh(t1);
    let mesh2 = skeleton_mesh(t2);
    lower = lower
        .max(three_point_lower(&pts1, &m1, &pts2, &m2, mesh2, 0x3f))
        .max(three_point_lower(&pts2, &m2, &pts1, &m1, mesh1, 0x3f));

    let corr = greedy_correspondence(t1, t2, &reach1, &reach2);
    let mut dis = 0.0f64;
    for i in 0..corr.pairs.len() {
        for j in (i + 1)..corr.pairs.len() {
            let (p1, q1) = corr.pairs[i];
            let (p2, q2) = corr.pairs[j];
            let gap = (m1.dist(p1, p2) - m2.dist(q1, q2)).abs();
            if gap > dis {
                dis = gap;
            }
        }
    }
    let upper = dis / 2.0 + corr.stretch;
    GhBounds {
        lower: lower.min(upper),
        upper,
    }
}

/// Random tree generator for tests and calibration: grafts geometric
/// batches of children with decaying lengths.
pub fn random_tree(seed: u64, max_nodes: usize) -> GenealogyTree<f64> {
    let mut rng = rng::stream(seed, &[0x7472_6565]);
    let mut tree = GenealogyTree::with_root(rng.random_range(0.2..4.0));
    let mut frontier = vec![0usize];
    while tree.len() < max_nodes && !frontier.is_empty() {
        let parent = frontier.remove(0);
        let kids = rng.random_range(0..4usize);
        let plen = tree.nodes[parent].edge_length;
        for rank in 1..=kids {
            if tree.len() >= max_nodes {
                break;
            }
            let offset = rng.random_range(0.0..=plen);
            let len = rng.random_range(0.05..1.5) * plen.max(0.1);
            let idx = tree.add_child(parent, rank as u32, offset, len);
            frontier.push(idx);
        }
    }
    tree
}
