//! Region graphs with non-negative counting numbers, and weighted chain
//! decompositions for the tree-reweighted solvers.
//!
//! A region carries a scope, a counting number `c ≥ 0` and `theta0`, its
//! share of the model energy. Builders split the energy so that
//! `Σ_regions theta0_α(x_α) = θ(x)` for every `x`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::math::{next_assignment, strides};
use crate::model::{Assignment, DiscreteModel};

/// Star tables larger than this are rejected by [`build_star_edge`].
const MAX_REGION_TABLE: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub scope: Vec<usize>,
    pub cards: Vec<usize>,
    pub counting: f64,
    pub theta0: Vec<f64>,
}

impl Region {
    pub fn table_len(&self) -> usize {
        self.theta0.len()
    }

    pub(crate) fn index_of(&self, x: &[usize]) -> usize {
        self.scope
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&v, &c)| acc * c + x[v])
    }
}

/// A parent → child edge with a precomputed map from each parent table
/// index to the child table index it restricts to.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionEdge {
    pub parent: usize,
    pub child: usize,
    pub child_index: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    regions: Vec<Region>,
    edges: Vec<RegionEdge>,
    parent_edges: Vec<Vec<usize>>,
    child_edges: Vec<Vec<usize>>,
}

/// Input to [`RegionGraph::new`].
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub scope: Vec<usize>,
    pub counting: f64,
    pub theta0: Vec<f64>,
}

impl RegionGraph {
    /// Validates scopes, table sizes, counting numbers and that every edge
    /// goes from a region to a subset of its scope.
    pub fn new(cardinalities: &[usize], specs: Vec<RegionSpec>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut regions = Vec::with_capacity(specs.len());
        for (r, spec) in specs.into_iter().enumerate() {
            if spec.scope.iter().any(|&v| v >= cardinalities.len()) {
                return Err(Error::InvalidInput(format!("region {r} scope {:?} out of range", spec.scope)));
            }
            let mut sorted = spec.scope.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!("region {r} repeats a variable")));
            }
            if !(spec.counting >= 0.0 && spec.counting.is_finite()) {
                return Err(Error::InvalidCountingNumbers(format!(
                    "region {r} has counting number {} (must be finite and non-negative)",
                    spec.counting
                )));
            }
            let cards: Vec<usize> = spec.scope.iter().map(|&v| cardinalities[v]).collect();
            let len: usize = cards.iter().product();
            if spec.theta0.len() != len {
                return Err(Error::DimensionMismatch(format!(
                    "region {r} table has {} entries, scope requires {len}",
                    spec.theta0.len()
                )));
            }
            regions.push(Region { scope: spec.scope, cards, counting: spec.counting, theta0: spec.theta0 });
        }
        let mut parent_edges = vec![Vec::new(); regions.len()];
        let mut child_edges = vec![Vec::new(); regions.len()];
        let mut built = Vec::with_capacity(edges.len());
        for (e, (p, c)) in edges.into_iter().enumerate() {
            if p >= regions.len() || c >= regions.len() || p == c {
                return Err(Error::InvalidInput(format!("edge {e} ({p} -> {c}) is not between two regions")));
            }
            let parent = &regions[p];
            let child = &regions[c];
            if child.scope.len() > parent.scope.len() || !child.scope.iter().all(|v| parent.scope.contains(v)) {
                return Err(Error::InvalidInput(format!(
                    "edge {e}: child scope {:?} is not contained in parent scope {:?}",
                    child.scope, parent.scope
                )));
            }
            let child_index = restriction_map(parent, child);
            parent_edges[c].push(e);
            child_edges[p].push(e);
            built.push(RegionEdge { parent: p, child: c, child_index });
        }
        Ok(Self { regions, edges: built, parent_edges, child_edges })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, r: usize) -> &Region {
        &self.regions[r]
    }

    pub fn edges(&self) -> &[RegionEdge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &RegionEdge {
        &self.edges[e]
    }

    /// Edges whose child is `r`.
    pub fn parent_edges(&self, r: usize) -> &[usize] {
        &self.parent_edges[r]
    }

    /// Edges whose parent is `r`.
    pub fn child_edges(&self, r: usize) -> &[usize] {
        &self.child_edges[r]
    }

    /// Regions with at least one parent, in index order.
    pub fn intersections(&self) -> Vec<usize> {
        (0..self.regions.len()).filter(|&r| !self.parent_edges[r].is_empty()).collect()
    }

    /// True when every edge runs from a two-variable region to a
    /// one-variable region.
    pub fn is_pair_singleton(&self) -> bool {
        self.edges.iter().all(|e| {
            self.regions[e.parent].scope.len() == 2
                && self.regions[e.child].scope.len() == 1
                && self.parent_edges[e.parent].is_empty()
        }) && self.regions.iter().all(|r| r.scope.len() <= 2)
    }

    /// `max_x |Σ_α theta0_α(x_α) − θ(x)|` over the given assignments.
    pub fn split_residual(&self, model: &DiscreteModel, probes: &[Assignment]) -> f64 {
        probes
            .iter()
            .map(|x| {
                let split: f64 = self.regions.iter().map(|r| r.theta0[r.index_of(x.values())]).sum();
                (split - model.energy_unchecked(x.values())).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn restriction_map(parent: &Region, child: &Region) -> Vec<usize> {
    let child_strides = strides(&child.cards);
    let pos: Vec<usize> = child
        .scope
        .iter()
        .map(|v| parent.scope.iter().position(|p| p == v).expect("child scope inside parent"))
        .collect();
    let mut map = Vec::with_capacity(parent.table_len());
    let mut x = vec![0; parent.scope.len()];
    loop {
        map.push(pos.iter().zip(&child_strides).map(|(&k, &s)| x[k] * s).sum());
        if !next_assignment(&mut x, &parent.cards) {
            break;
        }
    }
    map
}

/// One singleton region per variable (indices `0..n`), then one pair region
/// per pairwise factor in factor order. Each pair receives its table plus a
/// `1/deg` share of both endpoints' unary tables; isolated variables keep
/// their unary table on the singleton.
pub fn build_pair_singleton(model: &DiscreteModel, c_pair: f64, c_singleton: f64) -> Result<RegionGraph> {
    if !(c_pair > 0.0 && c_pair.is_finite()) {
        return Err(Error::InvalidCountingNumbers(format!("pair counting number {c_pair} must be positive")));
    }
    if !(c_singleton >= 0.0 && c_singleton.is_finite()) {
        return Err(Error::InvalidCountingNumbers(format!(
            "singleton counting number {c_singleton} must be non-negative"
        )));
    }
    let pw = model.pairwise()?;
    let n = pw.var_count();
    let mut specs = Vec::with_capacity(n + pw.edges.len());
    for v in 0..n {
        let theta0 = if pw.degree(v) == 0 { pw.unary[v].clone() } else { vec![0.0; pw.cards[v]] };
        specs.push(RegionSpec { scope: vec![v], counting: c_singleton, theta0 });
    }
    let mut edges = Vec::with_capacity(2 * pw.edges.len());
    for (e, edge) in pw.edges.iter().enumerate() {
        let (ci, cj) = (pw.cards[edge.i], pw.cards[edge.j]);
        let (di, dj) = (pw.degree(edge.i) as f64, pw.degree(edge.j) as f64);
        let mut theta0 = edge.table.clone();
        for xi in 0..ci {
            for xj in 0..cj {
                theta0[xi * cj + xj] += pw.unary[edge.i][xi] / di + pw.unary[edge.j][xj] / dj;
            }
        }
        specs.push(RegionSpec { scope: vec![edge.i, edge.j], counting: c_pair, theta0 });
        edges.push((n + e, edge.i));
        edges.push((n + e, edge.j));
    }
    RegionGraph::new(model.cardinalities(), specs, edges)
}

/// One star region per variable (indices `0..n`, scope `[i, neighbors...]`
/// with neighbors ascending, `c = 1`, table `θ_i + ½ Σ_j θ_ij`), then one
/// edge region per pairwise factor (`c = 0`, zero table) with an edge from
/// each endpoint's star.
///
/// For a degree-one variable the star and the edge region share a scope.
pub fn build_star_edge(model: &DiscreteModel) -> Result<RegionGraph> {
    let pw = model.pairwise()?;
    let n = pw.var_count();
    let mut specs = Vec::with_capacity(n + pw.edges.len());
    for v in 0..n {
        let mut nbrs: Vec<(usize, usize)> = pw.adjacency[v].clone();
        nbrs.sort_unstable();
        let mut scope = vec![v];
        scope.extend(nbrs.iter().map(|&(u, _)| u));
        let cards: Vec<usize> = scope.iter().map(|&u| pw.cards[u]).collect();
        let len = cards.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
        let len = match len {
            Some(len) if len <= MAX_REGION_TABLE => len,
            _ => {
                return Err(Error::UnsupportedStructure(format!(
                    "star of variable {v} (degree {}) is too large to tabulate",
                    nbrs.len()
                )))
            }
        };
        let mut theta0 = Vec::with_capacity(len);
        let mut x = vec![0; scope.len()];
        loop {
            let xv = x[0];
            let mut t = pw.unary[v][xv];
            for (k, &(u, e)) in nbrs.iter().enumerate() {
                let edge = &pw.edges[e];
                let xu = x[k + 1];
                let (xi, xj) = if edge.i == v { (xv, xu) } else { (xu, xv) };
                t += 0.5 * edge.at(xi, xj, pw.cards[edge.j]);
                debug_assert_eq!(if edge.i == v { edge.j } else { edge.i }, u);
            }
            theta0.push(t);
            if !next_assignment(&mut x, &cards) {
                break;
            }
        }
        specs.push(RegionSpec { scope, counting: 1.0, theta0 });
    }
    let mut edges = Vec::with_capacity(2 * pw.edges.len());
    for (e, edge) in pw.edges.iter().enumerate() {
        specs.push(RegionSpec {
            scope: vec![edge.i, edge.j],
            counting: 0.0,
            theta0: vec![0.0; pw.cards[edge.i] * pw.cards[edge.j]],
        });
        edges.push((edge.i, n + e));
        edges.push((edge.j, n + e));
    }
    RegionGraph::new(model.cardinalities(), specs, edges)
}

/// A forest over model variables with its weight `ρ_τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    pub edges: Vec<(usize, usize)>,
    pub weight: f64,
}

/// A distribution over spanning forests plus a node ordering. Every forest
/// spans all variables; variables without edges in a forest are singleton
/// components of it.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDecomposition {
    var_count: usize,
    trees: Vec<WeightedTree>,
    node_order: Vec<usize>,
    rho_edge: BTreeMap<(usize, usize), f64>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TreeDecomposition {
    pub fn new(var_count: usize, trees: Vec<WeightedTree>, node_order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; var_count];
        if node_order.len() != var_count || node_order.iter().any(|&v| v >= var_count || std::mem::replace(&mut seen[v], true)) {
            return Err(Error::InvalidInput("node order must be a permutation of the variables".into()));
        }
        if trees.is_empty() {
            return Err(Error::InvalidInput("a decomposition needs at least one tree".into()));
        }
        let total: f64 = trees.iter().map(|t| t.weight).sum();
        if trees.iter().any(|t| !(t.weight > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("tree weights must be positive and sum to 1 (sum {total})")));
        }
        let mut rho_edge = BTreeMap::new();
        for (k, tree) in trees.iter().enumerate() {
            let mut uf: Vec<usize> = (0..var_count).collect();
            fn find(uf: &mut [usize], mut a: usize) -> usize {
                while uf[a] != a {
                    uf[a] = uf[uf[a]];
                    a = uf[a];
                }
                a
            }
            for &(a, b) in &tree.edges {
                if a >= var_count || b >= var_count || a == b {
                    return Err(Error::InvalidInput(format!("tree {k} has invalid edge ({a}, {b})")));
                }
                let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
                if ra == rb {
                    return Err(Error::NotATree(format!("tree {k}: edge ({a}, {b}) closes a cycle")));
                }
                uf[ra] = rb;
                *rho_edge.entry(edge_key(a, b)).or_insert(0.0) += tree.weight;
            }
        }
        Ok(Self { var_count, trees, node_order, rho_edge })
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn trees(&self) -> &[WeightedTree] {
        &self.trees
    }

    pub fn node_order(&self) -> &[usize] {
        &self.node_order
    }

    /// Edge appearance probability `ρ_ij`.
    pub fn rho(&self, a: usize, b: usize) -> Option<f64> {
        self.rho_edge.get(&edge_key(a, b)).copied()
    }

    pub fn rho_edges(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.rho_edge
    }

    /// Position of each variable in the node order.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.var_count];
        for (k, &v) in self.node_order.iter().enumerate() {
            pos[v] = k;
        }
        pos
    }

    /// Checks that the forests cover exactly the model's pairwise edges.
    pub fn check_covers(&self, model: &DiscreteModel) -> Result<()> {
        let pw = model.pairwise()?;
        if pw.var_count() != self.var_count {
            return Err(Error::InvalidInput("decomposition and model disagree on variable count".into()));
        }
        for edge in &pw.edges {
            if self.rho(edge.i, edge.j).is_none() {
                return Err(Error::UnsupportedStructure(format!(
                    "model edge ({}, {}) appears in no tree",
                    edge.i, edge.j
                )));
            }
        }
        for &(a, b) in self.rho_edge.keys() {
            if pw.edge_between(a, b).is_none() {
                return Err(Error::UnsupportedStructure(format!("tree edge ({a}, {b}) is not a model edge")));
            }
        }
        Ok(())
    }

    /// Single forest made of all the model's pairwise edges, `ρ = 1`. The
    /// node order walks each component from its lowest-numbered endpoint, so
    /// chain models get a monotonic order.
    pub fn spanning_forest(model: &DiscreteModel) -> Result<Self> {
        let pw = model.pairwise()?;
        let n = pw.var_count();
        let edges: Vec<(usize, usize)> = pw.edges.iter().map(|e| (e.i, e.j)).collect();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let starts = (0..n).filter(|&v| pw.degree(v) <= 1).chain(0..n);
        for start in starts {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                order.push(v);
                let mut nbrs: Vec<usize> = pw.adjacency[v].iter().map(|&(u, _)| u).filter(|&u| !seen[u]).collect();
                nbrs.sort_unstable_by(|a, b| b.cmp(a));
                for u in nbrs {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        Self::new(n, vec![WeightedTree { edges, weight: 1.0 }], order)
    }
}

/// True when the model's pairwise edges all join 4-neighbors of a
/// `rows × cols` grid numbered row-major.
pub fn is_grid(model: &DiscreteModel, rows: usize, cols: usize) -> bool {
    if model.var_count() != rows * cols || model.max_arity() > 2 {
        return false;
    }
    model.factors().iter().filter(|f| f.arity() == 2).all(|f| {
        let (a, b) = edge_key(f.scope[0], f.scope[1]);
        (b == a + 1 && a / cols == b / cols) || b == a + cols
    })
}

/// Uniform distribution over the horizontal-chain forest and the
/// vertical-chain forest, row-major node order. On a full grid each forest
/// gets `ρ_τ = ½`; a family with no edges (the vertical chains of a single
/// row, say) is left out, so a `1 × n` grid is one chain with `ρ = 1`.
pub fn build_grid_chain_decomposition(model: &DiscreteModel, rows: usize, cols: usize) -> Result<TreeDecomposition> {
    if rows == 0 || cols == 0 || !is_grid(model, rows, cols) {
        return Err(Error::UnsupportedStructure(format!("model is not a {rows}x{cols} grid")));
    }
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for f in model.factors().iter().filter(|f| f.arity() == 2) {
        let (a, b) = edge_key(f.scope[0], f.scope[1]);
        if b == a + 1 && a / cols == b / cols {
            horizontal.push((a, b));
        } else {
            vertical.push((a, b));
        }
    }
    horizontal.sort_unstable();
    vertical.sort_unstable();
    let mut families: Vec<Vec<(usize, usize)>> = [horizontal, vertical].into_iter().filter(|f| !f.is_empty()).collect();
    if families.is_empty() {
        families.push(Vec::new());
    }
    let weight = 1.0 / families.len() as f64;
    let trees = families.into_iter().map(|edges| WeightedTree { edges, weight }).collect();
    TreeDecomposition::new(rows * cols, trees, (0..rows * cols).collect())
}

/// Finds grid dimensions that make the model a grid, preferring fewer rows.
/// Only full grids (every 4-neighbor pair present) qualify when more than one
/// shape fits.
pub fn infer_grid_shape(model: &DiscreteModel) -> Option<(usize, usize)> {
    let n = model.var_count();
    let pairs = model.factors().iter().filter(|f| f.arity() == 2).count();
    let candidates: Vec<(usize, usize)> = (1..=n)
        .filter(|r| n.is_multiple_of(*r))
        .map(|r| (r, n / r))
        .filter(|&(r, c)| is_grid(model, r, c))
        .collect();
    candidates
        .iter()
        .copied()
        .find(|&(r, c)| pairs == r * (c - 1) + c * (r - 1))
        .or_else(|| candidates.first().copied())
}

/// True iff every chain, read from its endpoint that comes first in the node
/// order, visits nodes in strictly increasing order. Fails with
/// `UnsupportedStructure` if some tree is not a union of chains.
pub fn check_monotonic(decomp: &TreeDecomposition) -> Result<bool> {
    let pos = decomp.positions();
    let n = decomp.var_count();
    for (k, tree) in decomp.trees().iter().enumerate() {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &tree.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        if let Some(v) = (0..n).find(|&v| adj[v].len() > 2) {
            return Err(Error::UnsupportedStructure(format!("tree {k} branches at node {v}; not a chain")));
        }
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] || adj[start].len() > 1 {
                continue;
            }
            // walk the chain from this endpoint
            let mut chain = vec![start];
            seen[start] = true;
            let mut prev = usize::MAX;
            let mut cur = start;
            while let Some(&next) = adj[cur].iter().find(|&&u| u != prev) {
                seen[next] = true;
                chain.push(next);
                prev = cur;
                cur = next;
            }
            if pos[chain[0]] > pos[*chain.last().unwrap()] {
                chain.reverse();
            }
            if chain.windows(2).any(|w| pos[w[0]] >= pos[w[1]]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_spin_glass, Factor};

    fn all_assignments(model: &DiscreteModel) -> Vec<Assignment> {
        let mut out = Vec::new();
        let mut x = vec![0; model.var_count()];
        loop {
            out.push(Assignment(x.clone()));
            if !next_assignment(&mut x, model.cardinalities()) {
                break;
            }
        }
        out
    }

    #[test]
    fn pair_singleton_on_2x2() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
        let pairs = g.regions().iter().filter(|r| r.scope.len() == 2).count();
        let singles = g.regions().iter().filter(|r| r.scope.len() == 1).count();
        assert_eq!((pairs, singles, g.edges().len()), (4, 4, 8));
        assert!(g.is_pair_singleton());
        assert!(g.split_residual(&m, &all_assignments(&m)) < 1e-12);
    }

    #[test]
    fn pair_singleton_single_variable() {
        let m = DiscreteModel::new(vec![2], vec![Factor::new(vec![0], vec![0.5, -0.5])]).unwrap();
        let g = build_pair_singleton(&m, 1.0, 0.0).unwrap();
        assert_eq!(g.regions().len(), 1);
        assert_eq!(g.region(0).theta0, vec![0.5, -0.5]);
    }

    #[test]
    fn pair_singleton_rejects_higher_order_and_bad_counts() {
        let m = DiscreteModel::new(vec![2, 2, 2], vec![Factor::new(vec![0, 1, 2], vec![0.0; 8])]).unwrap();
        assert!(matches!(build_pair_singleton(&m, 1.0, 1.0), Err(Error::UnsupportedStructure(_))));
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        assert!(matches!(build_pair_singleton(&m, 0.0, 1.0), Err(Error::InvalidCountingNumbers(_))));
        assert!(matches!(build_pair_singleton(&m, 1.0, -1.0), Err(Error::InvalidCountingNumbers(_))));
    }

    #[test]
    fn star_edge_on_2x2() {
        let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
        let g = build_star_edge(&m).unwrap();
        assert_eq!(g.regions().len(), 8);
        for r in 4..8 {
            assert_eq!(g.region(r).counting, 0.0);
            assert_eq!(g.parent_edges(r).len(), 2);
        }
        for r in 0..4 {
            assert_eq!(g.region(r).counting, 1.0);
            assert_eq!(g.region(r).scope.len(), 3);
        }
        assert!(g.split_residual(&m, &all_assignments(&m)) < 1e-12);
    }

    #[test]
    fn star_edge_single_edge_splits_in_half() {
        let table = vec![0.0, 1.0, 3.0, -2.0];
        let m = DiscreteModel::new(vec![2, 2], vec![Factor::new(vec![0, 1], table.clone())]).unwrap();
        let g = build_star_edge(&m).unwrap();
        assert_eq!(g.region(0).scope, vec![0, 1]);
        assert_eq!(g.region(1).scope, vec![1, 0]);
        let half: Vec<f64> = table.iter().map(|t| t / 2.0).collect();
        assert_eq!(g.region(0).theta0, half);
        // star 1 is indexed (x1, x0)
        assert_eq!(g.region(1).theta0, vec![half[0], half[2], half[1], half[3]]);
        assert!(!g.is_pair_singleton());
    }

    #[test]
    fn grid_decomposition_weights() {
        let m = gen_spin_glass(10, 10, 9.0, 1.0, 1).unwrap();
        let d = build_grid_chain_decomposition(&m, 10, 10).unwrap();
        assert_eq!(d.trees().len(), 2);
        assert_eq!(d.rho_edges().len(), 180);
        assert!(d.rho_edges().values().all(|&r| r == 0.5));
        assert!(check_monotonic(&d).unwrap());

        let m = gen_spin_glass(1, 2, 9.0, 1.0, 1).unwrap();
        let d = build_grid_chain_decomposition(&m, 1, 2).unwrap();
        assert_eq!(d.trees().len(), 1);
        assert_eq!(d.trees()[0].edges, vec![(0, 1)]);
        assert_eq!(d.rho(0, 1), Some(1.0));

        let m = gen_spin_glass(1, 1, 9.0, 1.0, 1).unwrap();
        let d = build_grid_chain_decomposition(&m, 1, 1).unwrap();
        assert_eq!(d.trees().len(), 1);
        assert!(d.trees()[0].edges.is_empty());

        let m = gen_spin_glass(2, 2, 9.0, 1.0, 1).unwrap();
        let d = build_grid_chain_decomposition(&m, 2, 2).unwrap();
        assert_eq!(d.trees()[0].edges, vec![(0, 1), (2, 3)]);
        assert_eq!(d.trees()[1].edges, vec![(0, 2), (1, 3)]);
    }

    #[test]
    fn grid_decomposition_rejects_non_grids() {
        let m = gen_spin_glass(3, 3, 9.0, 1.0, 1).unwrap();
        assert!(matches!(build_grid_chain_decomposition(&m, 1, 9), Err(Error::UnsupportedStructure(_))));
        let diag = DiscreteModel::new(vec![2; 4], vec![Factor::new(vec![0, 3], vec![0.0; 4])]).unwrap();
        assert!(matches!(build_grid_chain_decomposition(&diag, 2, 2), Err(Error::UnsupportedStructure(_))));
    }

    #[test]
    fn grid_shape_inference() {
        let m = gen_spin_glass(3, 4, 9.0, 1.0, 1).unwrap();
        assert_eq!(infer_grid_shape(&m), Some((3, 4)));
        let m = gen_spin_glass(1, 2, 9.0, 1.0, 1).unwrap();
        assert!(infer_grid_shape(&m).is_some());
    }

    #[test]
    fn monotonic_chains() {
        let order = |o: Vec<usize>| o;
        // chain 3 - 1 - 2 (0-based: 2 - 0 - 1) under order 0 < 1 < 2
        let d = TreeDecomposition::new(
            3,
            vec![WeightedTree { edges: vec![(2, 0), (0, 1)], weight: 1.0 }],
            order(vec![0, 1, 2]),
        )
        .unwrap();
        assert!(!check_monotonic(&d).unwrap());
        let d = TreeDecomposition::new(1, vec![WeightedTree { edges: vec![], weight: 1.0 }], vec![0]).unwrap();
        assert!(check_monotonic(&d).unwrap());
        let star = TreeDecomposition::new(
            4,
            vec![WeightedTree { edges: vec![(0, 1), (0, 2), (0, 3)], weight: 1.0 }],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        assert!(matches!(check_monotonic(&star), Err(Error::UnsupportedStructure(_))));
    }

    #[test]
    fn decomposition_validation() {
        let cyc = TreeDecomposition::new(
            3,
            vec![WeightedTree { edges: vec![(0, 1), (1, 2), (2, 0)], weight: 1.0 }],
            vec![0, 1, 2],
        );
        assert!(matches!(cyc, Err(Error::NotATree(_))));
        let bad_weights = TreeDecomposition::new(2, vec![WeightedTree { edges: vec![(0, 1)], weight: 0.7 }], vec![0, 1]);
        assert!(bad_weights.is_err());
        let bad_order = TreeDecomposition::new(2, vec![WeightedTree { edges: vec![], weight: 1.0 }], vec![0, 0]);
        assert!(bad_order.is_err());
    }

    #[test]
    fn spanning_forest_orders_chains_monotonically() {
        // chain 2 - 0 - 3 - 1
        let f = |a, b| Factor::new(vec![a, b], vec![0.0; 4]);
        let m = DiscreteModel::new(vec![2; 4], vec![f(2, 0), f(0, 3), f(3, 1)]).unwrap();
        let d = TreeDecomposition::spanning_forest(&m).unwrap();
        assert!(check_monotonic(&d).unwrap());
        d.check_covers(&m).unwrap();
    }
}
