//! Exact reference computations: enumeration for small models and dynamic
//! programming on forests.

use crate::error::{Error, Result};
use crate::math::{argmax, log_sum_exp, next_assignment, normalize_log};
use crate::model::{Assignment, DiscreteModel, PairEdge};
use crate::Mode;

/// Largest state space [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub log_partition: f64,
    pub map_value: f64,
    pub map_assignment: Assignment,
    pub marginals: Vec<Vec<f64>>,
}

/// Exact `log Z`, MAP and single-variable marginals by enumerating every
/// assignment in lexicographic order (last variable fastest). The first
/// maximizer in that order wins ties.
pub fn brute_force(model: &DiscreteModel) -> Result<ExactResult> {
    let states = model.state_space_size();
    if states > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::StateSpaceTooLarge { states, limit: BRUTE_FORCE_LIMIT });
    }
    let cards = model.cardinalities();
    let n = cards.len();
    let mut energies = Vec::with_capacity(states as usize);
    let mut x = vec![0; n];
    let mut best = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    loop {
        let e = model.energy_unchecked(&x);
        if e > best_value {
            best_value = e;
            best.clone_from(&x);
        }
        energies.push(e);
        if !next_assignment(&mut x, cards) {
            break;
        }
    }
    let log_partition = log_sum_exp(&energies);
    let mut marginals: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut x = vec![0; n];
    for e in &energies {
        let p = (e - log_partition).exp();
        for (v, &s) in x.iter().enumerate() {
            marginals[v][s] += p;
        }
        next_assignment(&mut x, cards);
    }
    for m in &mut marginals {
        let total: f64 = m.iter().sum();
        m.iter_mut().for_each(|p| *p /= total);
    }
    Ok(ExactResult {
        log_partition,
        map_value: best_value,
        map_assignment: Assignment(best),
        marginals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeDpResult {
    /// Log-partition in sum mode, maximum total potential in max mode.
    pub value: f64,
    /// A maximizing assignment (max mode only); ties go to lower states.
    pub assignment: Option<Assignment>,
}

struct Forest {
    /// Per component: nodes in BFS order from the component's smallest node.
    components: Vec<Vec<usize>>,
    /// `(parent, edge index, node is the edge's i endpoint)` for non-roots.
    parent: Vec<Option<(usize, usize, bool)>>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

fn build_forest(node_potentials: &[Vec<f64>], edges: &[PairEdge]) -> Result<Forest> {
    let n = node_potentials.len();
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut a: usize) -> usize {
        while uf[a] != a {
            uf[a] = uf[uf[a]];
            a = uf[a];
        }
        a
    }
    let mut adjacency = vec![Vec::new(); n];
    for (e, edge) in edges.iter().enumerate() {
        if edge.i >= n || edge.j >= n {
            return Err(Error::InvalidInput(format!("edge {e} references a node outside 0..{n}")));
        }
        let expected = node_potentials[edge.i].len() * node_potentials[edge.j].len();
        if edge.table.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "edge {e} table has {} entries, expected {expected}",
                edge.table.len()
            )));
        }
        let (a, b) = (find(&mut uf, edge.i), find(&mut uf, edge.j));
        if a == b {
            return Err(Error::NotATree(format!("edge ({}, {}) closes a cycle", edge.i, edge.j)));
        }
        uf[a] = b;
        adjacency[edge.i].push((edge.j, e));
        adjacency[edge.j].push((edge.i, e));
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(u, e) in &adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some((v, e, edges[e].i == u));
                    order.push(u);
                }
            }
        }
        components.push(order);
    }
    Ok(Forest { components, parent, adjacency })
}

/// Potential of edge `e` with `child` at state `xc` and its parent at `xp`.
fn edge_value(edge: &PairEdge, child_is_i: bool, xc: usize, xp: usize, cards: (usize, usize)) -> f64 {
    // cards = (card of edge.i, card of edge.j)
    if child_is_i {
        edge.table[xc * cards.1 + xp]
    } else {
        edge.table[xp * cards.1 + xc]
    }
}

/// Exact log-partition (sum) or maximum (max) of
/// `Σ_v θ_v(x_v) + Σ_(ij) θ_ij(x_i, x_j)` over a forest. Components are
/// solved independently and their values added.
pub fn tree_dp(node_potentials: &[Vec<f64>], edges: &[PairEdge], mode: Mode) -> Result<TreeDpResult> {
    let forest = build_forest(node_potentials, edges)?;
    let n = node_potentials.len();
    // incoming[v] accumulates child-to-v messages
    let mut incoming: Vec<Vec<f64>> = node_potentials.to_vec();
    let mut backpointer: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut value = 0.0;
    let mut assignment = vec![0; n];
    for order in &forest.components {
        for &v in order.iter().rev() {
            let Some((p, e, v_is_i)) = forest.parent[v] else { continue };
            let edge = &edges[e];
            let cards = (node_potentials[edge.i].len(), node_potentials[edge.j].len());
            let cv = node_potentials[v].len();
            let cp = node_potentials[p].len();
            let mut msg = vec![0.0; cp];
            let mut back = vec![0; cp];
            let mut scratch = vec![0.0; cv];
            for xp in 0..cp {
                for xv in 0..cv {
                    scratch[xv] = incoming[v][xv] + edge_value(edge, v_is_i, xv, xp, cards);
                }
                msg[xp] = mode.reduce(&scratch);
                back[xp] = argmax(&scratch);
            }
            for xp in 0..cp {
                incoming[p][xp] += msg[xp];
            }
            backpointer[v] = back;
        }
        let root = order[0];
        value += mode.reduce(&incoming[root]);
        if mode == Mode::Max {
            assignment[root] = argmax(&incoming[root]);
            for &v in &order[1..] {
                let (p, _, _) = forest.parent[v].expect("non-root");
                assignment[v] = backpointer[v][assignment[p]];
            }
        }
    }
    Ok(TreeDpResult {
        value,
        assignment: (mode == Mode::Max).then_some(Assignment(assignment)),
    })
}

/// Exact single-node marginals on a forest by sum-product in both
/// directions.
pub fn tree_marginals(node_potentials: &[Vec<f64>], edges: &[PairEdge]) -> Result<Vec<Vec<f64>>> {
    let forest = build_forest(node_potentials, edges)?;
    let n = node_potentials.len();
    // msg[e] = (message into edge.i, message into edge.j)
    let mut to_i: Vec<Vec<f64>> = edges.iter().map(|e| vec![0.0; node_potentials[e.i].len()]).collect();
    let mut to_j: Vec<Vec<f64>> = edges.iter().map(|e| vec![0.0; node_potentials[e.j].len()]).collect();

    let send = |from: usize,
                e: usize,
                to_i: &[Vec<f64>],
                to_j: &[Vec<f64>],
                adjacency: &[Vec<(usize, usize)>]|
     -> Vec<f64> {
        let edge = &edges[e];
        let from_is_i = edge.i == from;
        let to = if from_is_i { edge.j } else { edge.i };
        let mut base = node_potentials[from].clone();
        for &(_, f) in &adjacency[from] {
            if f == e {
                continue;
            }
            let m = if edges[f].i == from { &to_i[f] } else { &to_j[f] };
            base.iter_mut().zip(m).for_each(|(b, x)| *b += x);
        }
        let cards = (node_potentials[edge.i].len(), node_potentials[edge.j].len());
        let mut out = vec![0.0; node_potentials[to].len()];
        let mut scratch = vec![0.0; base.len()];
        for (xt, o) in out.iter_mut().enumerate() {
            for (xf, s) in scratch.iter_mut().enumerate() {
                *s = base[xf] + edge_value(edge, from_is_i, xf, xt, cards);
            }
            *o = log_sum_exp(&scratch);
        }
        out
    };

    for order in &forest.components {
        for &v in order.iter().rev() {
            if let Some((_, e, v_is_i)) = forest.parent[v] {
                let m = send(v, e, &to_i, &to_j, &forest.adjacency);
                if v_is_i {
                    to_j[e] = m;
                } else {
                    to_i[e] = m;
                }
            }
        }
        for &v in order {
            if let Some((p, e, v_is_i)) = forest.parent[v] {
                let m = send(p, e, &to_i, &to_j, &forest.adjacency);
                if v_is_i {
                    to_i[e] = m;
                } else {
                    to_j[e] = m;
                }
            }
        }
    }
    Ok((0..n)
        .map(|v| {
            let mut log_b = node_potentials[v].clone();
            for &(_, e) in &forest.adjacency[v] {
                let m = if edges[e].i == v { &to_i[e] } else { &to_j[e] };
                log_b.iter_mut().zip(m).for_each(|(b, x)| *b += x);
            }
            normalize_log(&log_b)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Factor;

    fn chain_model(node: &[Vec<f64>], edges: &[PairEdge]) -> DiscreteModel {
        let cards = node.iter().map(Vec::len).collect();
        let mut factors: Vec<Factor> = node
            .iter()
            .enumerate()
            .map(|(v, t)| Factor::new(vec![v], t.clone()))
            .collect();
        factors.extend(edges.iter().map(|e| Factor::new(vec![e.i, e.j], e.table.clone())));
        DiscreteModel::new(cards, factors).unwrap()
    }

    #[test]
    fn single_binary_variable() {
        let m = DiscreteModel::new(vec![2], vec![Factor::new(vec![0], vec![0.0, 0.0])]).unwrap();
        let r = brute_force(&m).unwrap();
        assert!((r.log_partition - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.map_value, 0.0);
        assert_eq!(r.map_assignment, Assignment(vec![0]));
    }

    #[test]
    fn independent_variables_factorize() {
        let m = DiscreteModel::new(
            vec![2, 2],
            vec![Factor::new(vec![0], vec![0.0, 1.0]), Factor::new(vec![1], vec![0.0, 1.0])],
        )
        .unwrap();
        let r = brute_force(&m).unwrap();
        let want = 2.0 * (1.0 + 1f64.exp()).ln();
        assert!((r.log_partition - want).abs() < 1e-12);
        assert_eq!(r.map_value, 2.0);
        assert_eq!(r.map_assignment, Assignment(vec![1, 1]));
        let p1 = 1f64.exp() / (1.0 + 1f64.exp());
        assert!((r.marginals[0][1] - p1).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_state_spaces() {
        let m = DiscreteModel::new(vec![2; 21], vec![]).unwrap();
        assert!(matches!(brute_force(&m), Err(Error::StateSpaceTooLarge { .. })));
    }

    #[test]
    fn tree_dp_small_cases() {
        let r = tree_dp(&[vec![1.0, 3.0]], &[], Mode::Max).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.assignment, Some(Assignment(vec![1])));
        let zeros = vec![vec![0.0; 2], vec![0.0; 2]];
        let edge = PairEdge { i: 0, j: 1, table: vec![0.0; 4] };
        let r = tree_dp(&zeros, &[edge], Mode::Sum).unwrap();
        assert!((r.value - 4f64.ln()).abs() < 1e-15);
        assert!(r.assignment.is_none());
    }

    #[test]
    fn tree_dp_rejects_cycles() {
        let nodes = vec![vec![0.0; 2]; 3];
        let e = |i, j| PairEdge { i, j, table: vec![0.0; 4] };
        let r = tree_dp(&nodes, &[e(0, 1), e(1, 2), e(2, 0)], Mode::Sum);
        assert!(matches!(r, Err(Error::NotATree(_))));
    }

    #[test]
    fn tree_dp_handles_reversed_edges_and_forests() {
        // edge stored as (2, 0) plus an isolated node 1 and mixed cardinalities
        let nodes = vec![vec![0.2, -0.4, 1.1], vec![0.3, 0.0], vec![-1.0, 0.5]];
        let edge = PairEdge { i: 2, j: 0, table: vec![0.1, 2.0, -0.3, 0.7, -1.5, 0.4] };
        let m = chain_model(&nodes, std::slice::from_ref(&edge));
        let exact = brute_force(&m).unwrap();
        let sum = tree_dp(&nodes, std::slice::from_ref(&edge), Mode::Sum).unwrap();
        assert!((sum.value - exact.log_partition).abs() < 1e-12);
        let max = tree_dp(&nodes, std::slice::from_ref(&edge), Mode::Max).unwrap();
        assert!((max.value - exact.map_value).abs() < 1e-12);
        assert_eq!(max.assignment.unwrap(), exact.map_assignment);
        let marg = tree_marginals(&nodes, &[edge]).unwrap();
        for (a, b) in marg.iter().flatten().zip(exact.marginals.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
