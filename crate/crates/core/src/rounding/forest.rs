//! Cycle cancellation on the support of an equilibrium allocation.

use num_traits::{Signed, Zero};

use crate::equilibrium::state::MarketState;
use crate::error::{Error, Result};
use crate::instance::Allocation;
use crate::rational::Rational;

/// Removes every cycle from the support graph of `alloc`.
///
/// Works in money units `p̂_j·x_ij` where `p̂` is the price (the shadow
/// price for frozen goods). Around a support cycle, alternate edges gain and
/// lose the same amount, so every buyer's spending and every good's sales
/// stay fixed; since all support edges are MBB at `p̂`, utilities stay fixed
/// as well. Each cancellation empties at least one edge.
pub fn flow_to_forest(state: &MarketState, alloc: &Allocation) -> Result<Allocation> {
    let n = alloc.buyers();
    let m = alloc.goods();
    let mut money = vec![vec![Rational::zero(); m]; n];
    for i in 0..n {
        for j in 0..m {
            let x = alloc.get(i, j);
            if x.is_positive() {
                let p = state.shadow_price(j);
                if !p.is_positive() {
                    return Err(Error::internal(format!(
                        "good {} is allocated but has no positive (shadow) price",
                        j + 1
                    )));
                }
                money[i][j] = x * p;
            }
        }
    }
    while let Some(cycle) = find_cycle(&money) {
        // cycle = [(i0, j0), (i1, j0), (i1, j1), ...]: even positions lose.
        let delta = cycle
            .iter()
            .step_by(2)
            .map(|&(i, j)| money[i][j].clone())
            .min()
            .expect("non-empty cycle");
        for (k, &(i, j)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                money[i][j] -= &delta;
            } else {
                money[i][j] += &delta;
            }
        }
    }
    let mut out = Allocation::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if money[i][j].is_positive() {
                out.set(i, j, &money[i][j] / state.shadow_price(j));
            }
        }
    }
    Ok(out)
}

/// A cycle in the bipartite support graph as its edge sequence, starting at
/// a buyer: `(i0,j0), (i1,j0), (i1,j1), …, (i0,j_last)`.
pub fn find_cycle(weights: &[Vec<Rational>]) -> Option<Vec<(usize, usize)>> {
    let n = weights.len();
    let m = weights.first().map_or(0, Vec::len);
    let nodes = n + m;
    let neighbors = |v: usize| -> Vec<usize> {
        if v < n {
            (0..m)
                .filter(|&j| weights[v][j].is_positive())
                .map(|j| n + j)
                .collect()
        } else {
            (0..n)
                .filter(|&i| weights[i][v - n].is_positive())
                .collect()
        }
    };
    let mut visited = vec![false; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for w in neighbors(v) {
                if w == parent[v] {
                    continue;
                }
                if visited[w] {
                    // Non-tree edge closes a cycle through the lowest common ancestor.
                    return Some(close_cycle(v, w, &parent, &depth, n));
                }
                visited[w] = true;
                parent[w] = v;
                depth[w] = depth[v] + 1;
                stack.push(w);
            }
        }
    }
    None
}

fn close_cycle(
    v: usize,
    w: usize,
    parent: &[usize],
    depth: &[usize],
    n: usize,
) -> Vec<(usize, usize)> {
    let mut a = v;
    let mut b = w;
    let mut left = vec![a];
    let mut right = vec![b];
    while a != b {
        if depth[a] >= depth[b] {
            a = parent[a];
            left.push(a);
        } else {
            b = parent[b];
            right.push(b);
        }
    }
    // v … lca … w, closed by the edge w–v.
    right.pop();
    let mut seq = left;
    seq.extend(right.into_iter().rev());
    let pos = seq
        .iter()
        .position(|&x| x < n)
        .expect("bipartite cycle has a buyer");
    seq.rotate_left(pos);
    let len = seq.len();
    (0..len)
        .map(|k| {
            let x = seq[k];
            let y = seq[(k + 1) % len];
            if x < n {
                (x, y - n)
            } else {
                (y, x - n)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn acyclic_support_is_unchanged() {
        let state = MarketState::new(vec![int(1), int(1)], vec![vec![int(0); 2]; 2]);
        let alloc =
            Allocation::from_matrix(vec![vec![int(1), frac(1, 2)], vec![int(0), frac(1, 2)]]);
        assert_eq!(flow_to_forest(&state, &alloc).unwrap(), alloc);
    }

    #[test]
    fn square_cycle_loses_an_edge() {
        let state = MarketState::new(vec![int(1), int(1)], vec![vec![int(0); 2]; 2]);
        let half = frac(1, 2);
        let alloc = Allocation::from_matrix(vec![
            vec![half.clone(), half.clone()],
            vec![half.clone(), half],
        ]);
        let out = flow_to_forest(&state, &alloc).unwrap();
        let support = out
            .matrix()
            .iter()
            .flatten()
            .filter(|x| x.is_positive())
            .count();
        assert_eq!(support, 2);
        for i in 0..2 {
            let row: Rational = out.row(i).iter().sum();
            assert_eq!(row, int(1));
            assert_eq!(out.sold(i), int(1));
        }
    }
}
