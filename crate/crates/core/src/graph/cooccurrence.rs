//! Relation affinity from co-occurrence of edges in the graph.
//!
//! Two edges co-occur when they share at least one endpoint; every unordered
//! pair of distinct edges is counted exactly once, even when the edges share
//! both endpoints. Counts are damped with log1p and each relation's count row
//! becomes its profile; affinity is the cosine between profiles, floored at
//! epsilon, with the diagonal forced to exactly 1.

use super::CompactEdge;
use crate::numeric::cosine;

/// Builds the row-major `n_relations x n_relations` affinity matrix.
pub(crate) fn affinity_matrix(
    n_relations: usize,
    n_nodes: usize,
    edges: &[CompactEdge],
    epsilon: f64,
) -> Vec<f64> {
    let nr = n_relations;
    if nr == 0 {
        return Vec::new();
    }

    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
    for (i, e) in edges.iter().enumerate() {
        incident[e.s as usize].push(i as u32);
        if e.o != e.s {
            incident[e.o as usize].push(i as u32);
        }
    }

    let endpoints = |ix: u32| -> (u32, u32) {
        let e = &edges[ix as usize];
        (e.s.min(e.o), e.s.max(e.o))
    };

    let mut counts = vec![0u64; nr * nr];
    for (v, list) in incident.iter().enumerate() {
        let v = v as u32;
        for (i, &e) in list.iter().enumerate() {
            for &f in &list[i + 1..] {
                // a pair sharing both endpoints shows up at two nodes; count
                // it only at the smaller shared one
                let (ea, eb) = endpoints(e);
                let (fa, fb) = endpoints(f);
                let same_endpoints = ea == fa && eb == fb && ea != eb;
                if same_endpoints && v != ea {
                    continue;
                }
                let r1 = edges[e as usize].r as usize;
                let r2 = edges[f as usize].r as usize;
                counts[r1 * nr + r2] += 1;
                if r1 != r2 {
                    counts[r2 * nr + r1] += 1;
                }
            }
        }
    }

    let rows: Vec<Vec<f64>> = (0..nr)
        .map(|i| {
            (0..nr)
                .map(|j| (1.0 + counts[i * nr + j] as f64).ln())
                .collect()
        })
        .collect();

    let mut matrix = vec![0.0f64; nr * nr];
    for i in 0..nr {
        matrix[i * nr + i] = 1.0;
        for j in i + 1..nr {
            let u = cosine(&rows[i], &rows[j]).max(epsilon);
            matrix[i * nr + j] = u;
            matrix[j * nr + i] = u;
        }
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BuildParams, GraphBuilder};

    const EPS: f64 = 1e-4;

    fn edge(s: u32, r: u32, o: u32) -> CompactEdge {
        CompactEdge { s, r, o }
    }

    #[test]
    fn single_relation_diagonal_is_one() {
        let edges = [edge(0, 0, 1), edge(1, 0, 2)];
        let m = affinity_matrix(1, 3, &edges, EPS);
        assert_eq!(m, vec![1.0]);
    }

    #[test]
    fn disjoint_relations_floor_at_epsilon() {
        // two components that never touch: zero count rows, cosine 0 -> eps
        let edges = [edge(0, 0, 1), edge(2, 1, 3)];
        let m = affinity_matrix(2, 4, &edges, EPS);
        assert_eq!(m[0 * 2 + 0], 1.0);
        assert_eq!(m[1 * 2 + 1], 1.0);
        assert_eq!(m[0 * 2 + 1], EPS);
        assert_eq!(m[1 * 2 + 0], EPS);
    }

    #[test]
    fn hand_worked_three_relation_fixture() {
        // nodes 0..4 = A,B,C,D; relations 0,1,2 = r,s,t
        // A -r-> B, B -s-> C, B -t-> D, C -r-> D
        // pair counts: c(r,s)=2, c(r,t)=2, c(s,t)=1, diagonals 0
        let edges = [edge(0, 0, 1), edge(1, 1, 2), edge(1, 2, 3), edge(2, 0, 3)];
        let m = affinity_matrix(3, 4, &edges, EPS);

        let ln2 = 2.0f64.ln();
        let ln3 = 3.0f64.ln();
        // profiles over [r,s,t]: r -> [0, ln3, ln3], s -> [ln3, 0, ln2], t -> [ln3, ln2, 0]
        let u_rs = (ln3 * ln2) / ((ln3 * 2.0f64.sqrt()) * (ln3 * ln3 + ln2 * ln2).sqrt());
        let u_st = (ln3 * ln3) / (ln3 * ln3 + ln2 * ln2);

        assert!((m[0 * 3 + 1] - u_rs).abs() < 1e-9, "u(r,s) = {}", m[1]);
        assert!((m[0 * 3 + 2] - u_rs).abs() < 1e-9);
        assert!((m[1 * 3 + 2] - u_st).abs() < 1e-9);
        for i in 0..3 {
            assert_eq!(m[i * 3 + i], 1.0);
        }
    }

    #[test]
    fn pair_sharing_both_endpoints_counts_once() {
        // 0 -r-> 1 and 1 -s-> 0 share both endpoints: c(r,s) must be 1
        let edges = [edge(0, 0, 1), edge(1, 1, 0)];
        let m = affinity_matrix(2, 2, &edges, EPS);
        // rows: r -> [0, ln2], s -> [ln2, 0]; cosine = 0 -> eps
        assert_eq!(m[1], EPS);

        // sanity check of the raw counting through a graph with 3 relations:
        // parallel pair (0-r->1, 1-s->0) plus 1 -t-> 2 touching node 1
        let edges = [edge(0, 0, 1), edge(1, 1, 0), edge(1, 2, 2)];
        let m = affinity_matrix(3, 3, &edges, EPS);
        // counts: c(r,s)=1, c(r,t)=1, c(s,t)=1, diag 0 -> all profiles are
        // permutations of [0, ln2, ln2]; u(r,s) = cos = (ln2*ln2)/(2ln2^2) = 0.5
        assert!((m[0 * 3 + 1] - 0.5).abs() < 1e-12);
        assert!((m[0 * 3 + 2] - 0.5).abs() < 1e-12);
        assert!((m[1 * 3 + 2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn self_loop_pairs_with_other_incident_edges() {
        // self loop at 0 (relation r) and 0 -s-> 1: share endpoint 0 once
        let edges = [edge(0, 0, 0), edge(0, 1, 1)];
        let m = affinity_matrix(2, 2, &edges, EPS);
        // c(r,s) = 1: rows r=[0,ln2], s=[ln2,0] -> cosine 0 -> eps
        assert_eq!(m[1], EPS);
    }

    #[test]
    fn matrix_is_symmetric_in_range_with_unit_diagonal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..30 {
            let n = rng.random_range(2..10usize);
            let nr = rng.random_range(1..5usize);
            let m_edges = rng.random_range(1..25usize);
            let edges: Vec<CompactEdge> = (0..m_edges)
                .map(|_| {
                    edge(
                        rng.random_range(0..n) as u32,
                        rng.random_range(0..nr) as u32,
                        rng.random_range(0..n) as u32,
                    )
                })
                .collect();
            let m = affinity_matrix(nr, n, &edges, EPS);
            let m2 = affinity_matrix(nr, n, &edges, EPS);
            assert_eq!(m, m2, "affinity must be deterministic");
            for i in 0..nr {
                assert_eq!(m[i * nr + i], 1.0);
                for j in 0..nr {
                    assert_eq!(m[i * nr + j], m[j * nr + i]);
                    assert!(m[i * nr + j] >= EPS && m[i * nr + j] <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn built_graph_exposes_affinity_by_label() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "r", "b", "B");
        b.add_edge("b", "B", "s", "c", "C");
        let g = b.build(BuildParams::default()).unwrap();
        assert_eq!(g.affinity("r", "r"), 1.0);
        assert_eq!(g.affinity("r", "s"), g.affinity("s", "r"));
        // unknown label: epsilon floor, never zero
        assert_eq!(g.affinity("r", "made_up"), g.epsilon());
    }
}
