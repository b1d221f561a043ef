//! Reference implementations used as test oracles. They deliberately avoid
//! the library's cached structures (approver lists, tip set, weights) and
//! work from the parent edges alone.

#![allow(dead_code)]

use std::collections::BTreeMap;

use tangle_sim::{TangleState, TxId};

/// Nine transactions; tips 6, 7 and 8.
///
/// ```text
/// 1:(0,0) 2:(0,0) 3:(1,2) 4:(1,1) 5:(2,3) 6:(3,4) 7:(4,4) 8:(5,1)
/// ```
pub const FIXED_DAG: &str = "\
0 0 0 - -
1 0.1 1.1 0 0
2 0.2 1.2 0 0
3 1.3 2.3 1 2
4 1.4 2.4 1 1
5 2.5 3.5 2 3
6 2.6 3.6 3 4
7 2.7 3.7 4 4
8 3.6 4.6 5 1
";

pub fn fixed_dag(maintain_weights: bool) -> TangleState {
    TangleState::from_edge_list(FIXED_DAG, maintain_weights, f64::INFINITY).unwrap()
}

/// tx1 and tx2 approve the genesis, tx3 approves both.
pub fn diamond() -> TangleState {
    TangleState::from_edge_list("0 0 0 - -\n1 0.1 1.1 0 0\n2 0.2 1.2 0 0\n3 1.5 2.5 1 2\n", true, f64::INFINITY)
        .unwrap()
}

fn parent_edges(state: &TangleState, y: TxId) -> Vec<TxId> {
    match state.parents(y) {
        Some([a, b]) if a == b => vec![a],
        Some([a, b]) => vec![a, b],
        None => vec![],
    }
}

/// Revealed direct approvers of every node, rebuilt from parent edges.
pub fn approvers_from_parents(state: &TangleState) -> Vec<Vec<TxId>> {
    let mut out = vec![Vec::new(); state.len()];
    for y in state.ids() {
        if state.is_revealed(y) {
            for p in parent_edges(state, y) {
                out[p.index()].push(y);
            }
        }
    }
    out
}

/// `reach[y][x]`: y indirectly approves x (reflexive), by Floyd–Warshall
/// style closure over the adjacency matrix. Cubic; keep n small.
pub fn transitive_closure(state: &TangleState) -> Vec<Vec<bool>> {
    let n = state.len();
    let mut reach = vec![vec![false; n]; n];
    for y in state.ids() {
        reach[y.index()][y.index()] = true;
        for p in parent_edges(state, y) {
            reach[y.index()][p.index()] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                let via = reach[k].clone();
                for (r, v) in reach[i].iter_mut().zip(via) {
                    *r |= v;
                }
            }
        }
    }
    reach
}

/// Cumulative weights by enumerating, for every revealed transaction, its
/// whole set of ancestors and crediting each one.
pub fn ancestor_count_weights(state: &TangleState) -> Vec<u64> {
    let n = state.len();
    let mut weight = vec![1u64; n];
    let mut seen = vec![usize::MAX; n];
    for y in state.ids().skip(1) {
        if !state.is_revealed(y) {
            continue;
        }
        let mut stack = parent_edges(state, y);
        while let Some(a) = stack.pop() {
            if seen[a.index()] == y.index() {
                continue;
            }
            seen[a.index()] = y.index();
            weight[a.index()] += 1;
            stack.extend(parent_edges(state, a));
        }
    }
    weight
}

/// Tips from the definition: revealed, and no revealed transaction names
/// them as a parent.
pub fn tips_from_definition(state: &TangleState) -> Vec<TxId> {
    let approvers = approvers_from_parents(state);
    state.ids().filter(|&x| state.is_revealed(x) && approvers[x.index()].is_empty()).collect()
}

/// Exit probability of every tip under the walk with bias `alpha`, by
/// enumerating every genesis-to-tip path and multiplying step
/// probabilities. Weights come from [`ancestor_count_weights`].
pub fn path_enumeration_exit(state: &TangleState, alpha: f64) -> BTreeMap<TxId, f64> {
    let approvers = approvers_from_parents(state);
    let weights = ancestor_count_weights(state);
    let mut exit = BTreeMap::new();

    fn walk(x: TxId, mass: f64, alpha: f64, approvers: &[Vec<TxId>], weights: &[u64], exit: &mut BTreeMap<TxId, f64>) {
        let next = &approvers[x.index()];
        if next.is_empty() {
            *exit.entry(x).or_insert(0.0) += mass;
            return;
        }
        let top = next.iter().map(|z| weights[z.index()]).max().unwrap() as f64;
        let terms: Vec<f64> = next.iter().map(|z| (alpha * (weights[z.index()] as f64 - top)).exp()).collect();
        let total: f64 = terms.iter().sum();
        for (z, t) in next.iter().zip(terms) {
            walk(*z, mass * t / total, alpha, approvers, weights, exit);
        }
    }

    walk(TxId::GENESIS, 1.0, alpha, &approvers, &weights, &mut exit);
    exit
}

/// Three standard errors of a proportion estimated from `n` draws.
pub fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
