//! Truncations of the subdyadic tree carrying a nonzero charge whose potential
//! vanishes at every boundary point except the leftmost one.
//!
//! Layout: a spine of edges `1, 2, …, S` (spine edge `n` carries `M = 1 − 2^{-n}`).
//! At the end vertex of spine edge `n < S` hangs a branch made of
//! `r = (n − 1)·2^{n+1}` series edges with `M = −2^{-(n+1)}`, followed by a
//! dyadic subtree whose root edge carries `M = −2^{-(n+1)}` and whose masses
//! halve at every generation. The spine is always the leftmost son.

use serde::Serialize;

use crate::calculus::Charge;
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::tree::{EdgeId, Tree};

/// Largest supported spine depth; the branch at spine vertex 15 already has
/// 917 504 series edges.
pub const MAX_SPINE_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum EdgeRole {
    /// Spine edge `n` (1-based), ending at spine vertex `n`.
    Spine { n: usize },
    /// `index`-th series edge of the branch hanging at spine vertex `branch`.
    Series { branch: usize, index: usize },
    /// Edge of the dyadic subtree of a branch, `generation` 0 being its root edge.
    Dyadic { branch: usize, generation: usize },
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub tree: Tree,
    /// Exact co-potential on every edge.
    pub copotential: Vec<Dyadic>,
    pub roles: Vec<EdgeRole>,
    /// Leaf masses as floating point numbers.
    pub charge: Charge,
    pub spine_depth: usize,
    pub generations: usize,
}

/// `r = (n − 1)·2^{n+1}` series edges at spine vertex `n`.
pub fn series_repetitions(n: usize) -> usize {
    (n - 1) << (n + 1)
}

/// Truncation with one dyadic generation below each branch root.
pub fn counterexample(spine_depth: usize) -> Result<(Tree, Charge)> {
    let c = Counterexample::new(spine_depth, 1)?;
    Ok((c.tree, c.charge))
}

impl Counterexample {
    /// `generations` counts dyadic levels below each branch root edge.
    pub fn new(spine_depth: usize, generations: usize) -> Result<Self> {
        if spine_depth < 2 {
            return Err(Error::parameter("spine depth must be at least 2"));
        }
        if spine_depth > MAX_SPINE_DEPTH {
            return Err(Error::parameter(format!(
                "spine depth {spine_depth} exceeds {MAX_SPINE_DEPTH}"
            )));
        }
        if generations > 20 {
            return Err(Error::parameter(
                "at most 20 dyadic generations are supported",
            ));
        }

        let mut sons: Vec<Vec<usize>> = Vec::new();
        let mut masses = Vec::new();
        let mut roles = Vec::new();
        let mut push = |sons: &mut Vec<Vec<usize>>, m: Dyadic, r: EdgeRole| {
            sons.push(Vec::new());
            masses.push(m);
            roles.push(r);
            sons.len() - 1
        };

        let spine: Vec<usize> = (1..=spine_depth)
            .map(|n| {
                push(
                    &mut sons,
                    Dyadic::ONE - Dyadic::inv_pow2(n as u32),
                    EdgeRole::Spine { n },
                )
            })
            .collect();
        for w in spine.windows(2) {
            sons[w[0]].push(w[1]);
        }

        for n in 1..spine_depth {
            let m = -Dyadic::inv_pow2(n as u32 + 1);
            let mut tip = spine[n - 1];
            for index in 0..series_repetitions(n) {
                let e = push(&mut sons, m, EdgeRole::Series { branch: n, index });
                sons[tip].push(e);
                tip = e;
            }
            let root = push(
                &mut sons,
                m,
                EdgeRole::Dyadic {
                    branch: n,
                    generation: 0,
                },
            );
            sons[tip].push(root);
            let mut frontier = vec![(root, m)];
            for generation in 1..=generations {
                let mut next = Vec::with_capacity(frontier.len() * 2);
                for (parent, pm) in frontier {
                    for _ in 0..2 {
                        let e = push(
                            &mut sons,
                            pm.half(),
                            EdgeRole::Dyadic {
                                branch: n,
                                generation,
                            },
                        );
                        sons[parent].push(e);
                        next.push((e, pm.half()));
                    }
                }
                frontier = next;
            }
        }

        let (tree, order) = Tree::from_son_lists(&sons, spine[0])?;
        let copotential: Vec<Dyadic> = order.iter().map(|&raw| masses[raw]).collect();
        let roles: Vec<EdgeRole> = order.iter().map(|&raw| roles[raw]).collect();
        let charge = Charge::new(
            tree.leaves()
                .iter()
                .map(|&l| copotential[l].to_f64())
                .collect(),
        );
        Ok(Counterexample {
            tree,
            copotential,
            roles,
            charge,
            spine_depth,
            generations,
        })
    }

    /// Exact leaf masses, in leaf order.
    pub fn exact_leaf_masses(&self) -> Vec<Dyadic> {
        self.tree
            .leaves()
            .iter()
            .map(|&l| self.copotential[l])
            .collect()
    }

    /// Largest `|M(α) − Σ_{β∈s(α)} M(β)|` over interior edges, exactly.
    pub fn forward_defect_exact(&self) -> Dyadic {
        (0..self.tree.edge_count())
            .filter(|&e| !self.tree.is_leaf(e))
            .map(|e| {
                let sons: Dyadic = self.tree.children(e).map(|c| self.copotential[c]).sum();
                (self.copotential[e] - sons).abs()
            })
            .max()
            .unwrap_or(Dyadic::ZERO)
    }

    pub fn spine_leaf(&self) -> EdgeId {
        *self
            .tree
            .leaves()
            .iter()
            .find(|&&l| matches!(self.roles[l], EdgeRole::Spine { .. }))
            .expect("the spine ends in a leaf")
    }

    /// Potential `IM` at the end vertex of a leaf, summed exactly along `[ω, leaf]`.
    pub fn leaf_potential_exact(&self, leaf: EdgeId) -> Result<Dyadic> {
        Ok(self
            .tree
            .geodesic_to(leaf)?
            .into_iter()
            .map(|e| self.copotential[e])
            .sum())
    }

    /// `IM(ζ)` for the boundary points of the untruncated tree through `leaf`.
    ///
    /// Below a dyadic leaf the untruncated tree continues dyadically with
    /// halving masses, which adds `M(leaf)` along every ray. Returns `None`
    /// on the spine, where the potential diverges.
    pub fn boundary_potential_exact(&self, leaf: EdgeId) -> Result<Option<Dyadic>> {
        if !self.tree.contains(leaf) || !self.tree.is_leaf(leaf) {
            return Err(Error::validation(format!("edge {leaf} is not a leaf")));
        }
        match self.roles[leaf] {
            EdgeRole::Spine { .. } => Ok(None),
            _ => Ok(Some(
                self.leaf_potential_exact(leaf)? + self.copotential[leaf],
            )),
        }
    }
}
