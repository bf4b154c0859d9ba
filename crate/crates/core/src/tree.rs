//! Rooted, locally finite trees stored in breadth-first edge order.
//!
//! Edges are the primary objects. Edge `0` is the root edge `ω`, and the sons
//! of every edge occupy a contiguous range of ids, in the order in which they
//! were specified. Vertices are derived from edges: vertex `0` is the root
//! vertex `o = b(ω)` and vertex `α + 1` is the end vertex `e(α)`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EdgeId = usize;
pub type VertexId = usize;

/// The root edge `ω`.
pub const ROOT: EdgeId = 0;
/// The root vertex `o = b(ω)`.
pub const ROOT_VERTEX: VertexId = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    parent: Vec<Option<EdgeId>>,
    first_child: Vec<EdgeId>,
    child_count: Vec<usize>,
    level: Vec<usize>,
    leaves: Vec<EdgeId>,
    leaf_slot: Vec<Option<usize>>,
}

impl Tree {
    /// Builds a tree from arbitrary son lists, renumbering breadth-first from
    /// `root` while keeping the order of each son list.
    ///
    /// Returns the tree and, for every new id, the raw id it came from.
    pub fn from_son_lists(sons: &[Vec<usize>], root: usize) -> Result<(Tree, Vec<usize>)> {
        let n = sons.len();
        if root >= n {
            return Err(Error::structure(format!(
                "root {root} out of range for {n} edges"
            )));
        }
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut parent = Vec::with_capacity(n);
        let mut first_child = vec![0; n];
        let mut child_count = vec![0; n];
        let mut level = Vec::with_capacity(n);

        seen[root] = true;
        order.push(root);
        parent.push(None);
        level.push(0);
        let mut head = 0;
        while head < order.len() {
            let raw = order[head];
            first_child[head] = order.len();
            child_count[head] = sons[raw].len();
            for &s in &sons[raw] {
                if s >= n {
                    return Err(Error::structure(format!("son {s} out of range")));
                }
                if seen[s] {
                    return Err(Error::structure(format!("edge {s} reached twice")));
                }
                seen[s] = true;
                order.push(s);
                parent.push(Some(head));
                level.push(level[head] + 1);
            }
            head += 1;
        }
        if order.len() != n {
            return Err(Error::structure(format!(
                "{} of {n} edges are not reachable from the root",
                n - order.len()
            )));
        }
        Ok((
            Self::assemble(parent, first_child, child_count, level),
            order,
        ))
    }

    fn assemble(
        parent: Vec<Option<EdgeId>>,
        first_child: Vec<EdgeId>,
        child_count: Vec<usize>,
        level: Vec<usize>,
    ) -> Tree {
        let mut leaf_slot = vec![None; parent.len()];
        let mut leaves = Vec::new();
        for (e, &k) in child_count.iter().enumerate() {
            if k == 0 {
                leaf_slot[e] = Some(leaves.len());
                leaves.push(e);
            }
        }
        Tree {
            parent,
            first_child,
            child_count,
            level,
            leaves,
            leaf_slot,
        }
    }

    /// Level-by-level generator: `degree(k)` sons for every edge at level `k - 1`,
    /// down to level `depth`.
    fn by_levels(depth: usize, degree: impl Fn(usize) -> usize) -> Tree {
        let mut parent = vec![None];
        let mut level = vec![0];
        let mut first_child = Vec::new();
        let mut child_count = Vec::new();
        let mut frontier = 0..1;
        for k in 1..=depth {
            let d = degree(k);
            let start = parent.len();
            for e in frontier.clone() {
                first_child.push(parent.len());
                child_count.push(d);
                for _ in 0..d {
                    parent.push(Some(e));
                    level.push(k);
                }
            }
            frontier = start..parent.len();
        }
        for _ in frontier {
            first_child.push(parent.len());
            child_count.push(0);
        }
        Self::assemble(parent, first_child, child_count, level)
    }

    /// Homogeneous tree: every edge has `q` sons, leaves at level `depth`.
    pub fn homogeneous(q: usize, depth: usize) -> Result<Tree> {
        Self::spherical(&[q], depth)
    }

    /// Spherically symmetric tree. Edges at level `k - 1` have `degrees[k - 1]`
    /// sons; the last degree repeats when `degrees` is shorter than `depth`.
    pub fn spherical(degrees: &[usize], depth: usize) -> Result<Tree> {
        if depth < 1 {
            return Err(Error::parameter("depth must be at least 1"));
        }
        if degrees.is_empty() {
            return Err(Error::parameter("at least one degree is required"));
        }
        if degrees.iter().any(|&d| d < 1) {
            return Err(Error::parameter("degrees must be at least 1"));
        }
        Ok(Self::by_levels(depth, |k| degree_at(degrees, k)))
    }

    /// A path with `length` edges.
    pub fn path(length: usize) -> Result<Tree> {
        if length < 1 {
            return Err(Error::parameter("a path needs at least one edge"));
        }
        Ok(Self::by_levels(length - 1, |_| 1))
    }

    /// Tree from a nested description: the root array is `ω`, and each array
    /// lists the sons of its edge.
    pub fn explicit(root: &Nested) -> Result<Tree> {
        let mut sons: Vec<Vec<usize>> = vec![Vec::new()];
        let mut stack = vec![(0usize, root)];
        while let Some((id, node)) = stack.pop() {
            for child in &node.0 {
                let cid = sons.len();
                sons.push(Vec::new());
                sons[id].push(cid);
                stack.push((cid, child));
            }
        }
        Ok(Self::from_son_lists(&sons, 0)?.0)
    }

    pub fn edge_count(&self) -> usize {
        self.parent.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len() + 1
    }

    pub fn parent(&self, e: EdgeId) -> Option<EdgeId> {
        self.parent[e]
    }

    pub fn children(&self, e: EdgeId) -> Range<EdgeId> {
        self.first_child[e]..self.first_child[e] + self.child_count[e]
    }

    pub fn child_count(&self, e: EdgeId) -> usize {
        self.child_count[e]
    }

    pub fn level(&self, e: EdgeId) -> usize {
        self.level[e]
    }

    /// Largest edge level.
    pub fn depth(&self) -> usize {
        self.level.last().copied().unwrap_or(0)
    }

    pub fn is_leaf(&self, e: EdgeId) -> bool {
        self.child_count[e] == 0
    }

    /// Leaf edges in increasing id order.
    pub fn leaves(&self) -> &[EdgeId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Position of a leaf edge in [`Tree::leaves`].
    pub fn leaf_slot(&self, e: EdgeId) -> Option<usize> {
        self.leaf_slot[e]
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        e < self.edge_count()
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::InvalidEdge(e))
        }
    }

    /// `b(α)`.
    pub fn begin_vertex(&self, e: EdgeId) -> VertexId {
        self.parent[e].map_or(ROOT_VERTEX, |p| p + 1)
    }

    /// `e(α)`.
    pub fn end_vertex(&self, e: EdgeId) -> VertexId {
        e + 1
    }

    /// The edge ending at `v`, or `None` for the root vertex.
    pub fn edge_into(&self, v: VertexId) -> Option<EdgeId> {
        v.checked_sub(1)
    }

    /// Number of graph neighbours of a vertex.
    pub fn vertex_degree(&self, v: VertexId) -> usize {
        match self.edge_into(v) {
            None => 1,
            Some(e) => 1 + self.child_count[e],
        }
    }

    /// Index of `e` among the sons of its parent.
    pub fn son_index(&self, e: EdgeId) -> Option<usize> {
        self.parent[e].map(|p| e - self.first_child[p])
    }

    /// The geodesic `[ω, α]`.
    pub fn geodesic_to(&self, e: EdgeId) -> Result<Vec<EdgeId>> {
        self.check_edge(e)?;
        let mut path = Vec::with_capacity(self.level[e] + 1);
        let mut cur = Some(e);
        while let Some(c) = cur {
            path.push(c);
            cur = self.parent[c];
        }
        path.reverse();
        Ok(path)
    }

    /// Son indices along `[ω, α]`, excluding `ω` itself.
    pub fn son_path(&self, e: EdgeId) -> Result<Vec<usize>> {
        Ok(self
            .geodesic_to(e)?
            .into_iter()
            .skip(1)
            .map(|x| self.son_index(x).expect("non-root edge has a parent"))
            .collect())
    }

    /// Follows son indices from `ω`; `None` if the path leaves the tree.
    pub fn edge_at(&self, sons: &[usize]) -> Option<EdgeId> {
        let mut e = ROOT;
        for &s in sons {
            if s >= self.child_count[e] {
                return None;
            }
            e = self.first_child[e] + s;
        }
        Some(e)
    }

    /// `β ≥ α` in the tree order.
    pub fn is_descendant(&self, beta: EdgeId, alpha: EdgeId) -> bool {
        if self.level[beta] < self.level[alpha] {
            return false;
        }
        let mut cur = beta;
        while self.level[cur] > self.level[alpha] {
            cur = self.parent[cur].expect("positive level has a parent");
        }
        cur == alpha
    }

    /// `N_k = #{α : |α| = k}` for `k = 0..=depth`.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.depth() + 1];
        for &l in &self.level {
            counts[l] += 1;
        }
        counts
    }

    /// Edges of the subtree `T_α` in increasing id order.
    pub fn descendants(&self, alpha: EdgeId) -> Vec<EdgeId> {
        let mut out = vec![alpha];
        let mut head = 0;
        while head < out.len() {
            let e = out[head];
            out.extend(self.children(e));
            head += 1;
        }
        out
    }

    /// The subtree `T_α`, re-indexed with `α` as its root edge.
    pub fn tent(&self, alpha: EdgeId) -> Result<Tent> {
        self.check_edge(alpha)?;
        let origin = self.descendants(alpha);
        debug_assert!(origin.windows(2).all(|w| w[0] < w[1]));
        let to_local = |e: EdgeId| origin.binary_search(&e).expect("edge inside the tent");
        let base = self.level[alpha];
        let mut parent = Vec::with_capacity(origin.len());
        let mut first_child = Vec::with_capacity(origin.len());
        let mut child_count = Vec::with_capacity(origin.len());
        let mut level = Vec::with_capacity(origin.len());
        for &e in &origin {
            parent.push(if e == alpha {
                None
            } else {
                self.parent[e].map(to_local)
            });
            let k = self.child_count[e];
            first_child.push(if k > 0 {
                to_local(self.first_child[e])
            } else {
                origin.len()
            });
            child_count.push(k);
            level.push(self.level[e] - base);
        }
        let tree = Self::assemble(parent, first_child, child_count, level);
        let boundary = BoundarySet::full(&tree);
        Ok(Tent {
            tree,
            boundary,
            origin,
        })
    }
}

fn degree_at(degrees: &[usize], k: usize) -> usize {
    degrees[(k - 1).min(degrees.len() - 1)]
}

/// A subtree together with the original ids of its edges.
#[derive(Debug, Clone)]
pub struct Tent {
    pub tree: Tree,
    /// All leaves of the subtree.
    pub boundary: BoundarySet,
    /// `origin[i]` is the id in the parent tree of local edge `i`.
    pub origin: Vec<EdgeId>,
}

impl Tent {
    /// `E_α = E ∩ ∂T_α`, expressed in local ids.
    pub fn restrict(&self, set: &BoundarySet) -> BoundarySet {
        let members = self
            .tree
            .leaves()
            .iter()
            .copied()
            .filter(|&l| set.contains(self.origin[l]))
            .collect();
        BoundarySet { members }
    }
}

/// Nested-array tree description: each node lists its sons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nested(pub Vec<Nested>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Homogeneous,
    Spherical,
    Explicit,
    Counterexample,
}

/// Serializable recipe for a tree.
///
/// `depth` is the level of the leaves for the homogeneous and spherical
/// generators, and the number of dyadic generations below each branch for the
/// counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub kind: TreeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degrees: Vec<usize>,
    #[serde(default)]
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spine_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Nested>,
}

impl TreeSpec {
    pub fn homogeneous(q: usize, depth: usize) -> Self {
        Self::spherical(vec![q], depth)
    }

    pub fn spherical(degrees: Vec<usize>, depth: usize) -> Self {
        TreeSpec {
            kind: if degrees.len() == 1 {
                TreeKind::Homogeneous
            } else {
                TreeKind::Spherical
            },
            degrees,
            depth,
            spine_depth: None,
            children: None,
        }
    }

    pub fn explicit(children: Nested) -> Self {
        TreeSpec {
            kind: TreeKind::Explicit,
            degrees: Vec::new(),
            depth: 0,
            spine_depth: None,
            children: Some(children),
        }
    }

    pub fn counterexample(spine_depth: usize, generations: usize) -> Self {
        TreeSpec {
            kind: TreeKind::Counterexample,
            degrees: Vec::new(),
            depth: generations,
            spine_depth: Some(spine_depth),
            children: None,
        }
    }

    /// Same recipe at another truncation depth.
    pub fn with_depth(&self, depth: usize) -> Self {
        TreeSpec {
            depth,
            ..self.clone()
        }
    }

    pub fn build(&self) -> Result<Tree> {
        match self.kind {
            TreeKind::Homogeneous => match self.degrees.as_slice() {
                [q] => Tree::homogeneous(*q, self.depth),
                _ => Err(Error::parameter(
                    "homogeneous spec needs exactly one degree",
                )),
            },
            TreeKind::Spherical => Tree::spherical(&self.degrees, self.depth),
            TreeKind::Explicit => {
                let children = self
                    .children
                    .as_ref()
                    .ok_or_else(|| Error::structure("explicit spec without children"))?;
                Tree::explicit(children)
            }
            TreeKind::Counterexample => {
                let spine = self
                    .spine_depth
                    .ok_or_else(|| Error::parameter("counterexample spec needs spine_depth"))?;
                if self.depth < 1 {
                    return Err(Error::parameter("depth must be at least 1"));
                }
                Ok(crate::counterexample::Counterexample::new(spine, self.depth)?.tree)
            }
        }
    }
}

/// A set of leaves of a truncated tree; each leaf stands for the tent it subtends.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundarySet {
    members: Vec<EdgeId>,
}

impl BoundarySet {
    pub fn new(tree: &Tree, mut members: Vec<EdgeId>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members
            .iter()
            .find(|&&e| !tree.contains(e) || !tree.is_leaf(e))
        {
            return Err(Error::validation(format!("edge {bad} is not a leaf")));
        }
        Ok(BoundarySet { members })
    }

    pub fn empty() -> Self {
        BoundarySet::default()
    }

    /// The whole realized boundary.
    pub fn full(tree: &Tree) -> Self {
        BoundarySet {
            members: tree.leaves().to_vec(),
        }
    }

    /// Leaves beneath any of the given edges.
    pub fn under(tree: &Tree, tents: &[EdgeId]) -> Result<Self> {
        let mut members = Vec::new();
        for &t in tents {
            tree.check_edge(t)?;
            members.extend(tree.descendants(t).into_iter().filter(|&e| tree.is_leaf(e)));
        }
        Self::new(tree, members)
    }

    pub fn members(&self) -> &[EdgeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.members.binary_search(&e).is_ok()
    }

    /// Per-edge flags: `true` on members.
    pub fn mask(&self, tree: &Tree) -> Vec<bool> {
        let mut mask = vec![false; tree.edge_count()];
        for &m in &self.members {
            mask[m] = true;
        }
        mask
    }

    /// Per-edge flags: `true` on edges with at least one member beneath.
    pub fn reach(&self, tree: &Tree) -> Vec<bool> {
        let mut reach = self.mask(tree);
        for e in (1..tree.edge_count()).rev() {
            if reach[e] {
                let p = tree.parent(e).expect("non-root edge");
                reach[p] = true;
            }
        }
        reach
    }
}

/// Rule choosing one son per edge, defining a boundary point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RayRule {
    Leftmost,
    Rightmost,
    /// Listed son indices first, then the leftmost son.
    Sons(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicRay {
    pub rule: RayRule,
}

impl GeodesicRay {
    pub fn leftmost() -> Self {
        GeodesicRay {
            rule: RayRule::Leftmost,
        }
    }

    pub fn rightmost() -> Self {
        GeodesicRay {
            rule: RayRule::Rightmost,
        }
    }

    pub fn sons(sons: Vec<usize>) -> Self {
        GeodesicRay {
            rule: RayRule::Sons(sons),
        }
    }

    fn choose(&self, depth: usize, sons: usize) -> usize {
        match &self.rule {
            RayRule::Leftmost => 0,
            RayRule::Rightmost => sons - 1,
            RayRule::Sons(list) => list.get(depth).copied().unwrap_or(0).min(sons - 1),
        }
    }

    /// Edges `α_0 = ω, α_1, …` of the ray down to a leaf of the truncation.
    pub fn realize(&self, tree: &Tree) -> Vec<EdgeId> {
        let mut prefix = vec![ROOT];
        let mut e = ROOT;
        while !tree.is_leaf(e) {
            let s = self.choose(prefix.len() - 1, tree.child_count(e));
            e = tree.children(e).start + s;
            prefix.push(e);
        }
        prefix
    }
}
