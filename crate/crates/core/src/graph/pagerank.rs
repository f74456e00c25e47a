//! PageRank by power iteration.
//!
//! Dangling mass is redistributed uniformly each sweep, parallel edges each
//! carry their own share of a node's outgoing mass, and iteration stops when
//! the L1 change drops below the tolerance. The score vector always sums to 1.

use crate::numeric::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankOutcome<F> {
    pub scores: Vec<F>,
    pub converged: bool,
    pub iterations: usize,
}

/// Runs power iteration over `n` nodes and the given directed `edges`
/// (duplicated entries count twice in the source's out-degree).
pub fn power_iteration<F: Scalar>(
    n: usize,
    edges: &[(u32, u32)],
    damping: F,
    tolerance: F,
    max_iterations: usize,
) -> PageRankOutcome<F> {
    if n == 0 {
        return PageRankOutcome {
            scores: Vec::new(),
            converged: true,
            iterations: 0,
        };
    }
    let nf = F::from_usize(n).expect("node count fits scalar");
    let uniform = F::one() / nf;
    let base = (F::one() - damping) / nf;

    let mut out_degree = vec![0usize; n];
    for &(s, _) in edges {
        out_degree[s as usize] += 1;
    }

    let mut cur = vec![uniform; n];
    let mut next = vec![F::zero(); n];
    for iteration in 1..=max_iterations {
        for slot in next.iter_mut() {
            *slot = base;
        }
        let mut dangling = F::zero();
        for (i, &deg) in out_degree.iter().enumerate() {
            if deg == 0 {
                dangling = dangling + cur[i];
            }
        }
        let dangling_share = damping * dangling / nf;
        for slot in next.iter_mut() {
            *slot = *slot + dangling_share;
        }
        for &(s, o) in edges {
            let share = cur[s as usize] / F::from_usize(out_degree[s as usize]).unwrap();
            next[o as usize] = next[o as usize] + damping * share;
        }

        let mut delta = F::zero();
        for (a, b) in cur.iter().zip(&next) {
            delta = delta + (*a - *b).abs();
        }
        std::mem::swap(&mut cur, &mut next);
        if delta < tolerance {
            return PageRankOutcome {
                scores: cur,
                converged: true,
                iterations: iteration,
            };
        }
    }
    PageRankOutcome {
        scores: cur,
        converged: false,
        iterations: max_iterations,
    }
}
