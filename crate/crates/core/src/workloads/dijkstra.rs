use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::WorkloadError;

/// Distance reported for nodes the source cannot reach.
pub const UNREACHABLE: u64 = u64::MAX;

/// Directed graph with non-negative integer weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<(usize, u64)>>,
    edges: usize,
}

impl Graph {
    pub fn new(nodes: usize, edges: &[(usize, usize, i64)]) -> Result<Self, WorkloadError> {
        let mut adj = vec![Vec::new(); nodes];
        for &(from, to, weight) in edges {
            if from >= nodes || to >= nodes {
                return Err(WorkloadError::NodeOutOfRange { from, to, nodes });
            }
            if weight < 0 {
                return Err(WorkloadError::NegativeWeight { from, to, weight });
            }
            adj[from].push((to, weight as u64));
        }
        Ok(Graph {
            adj,
            edges: edges.len(),
        })
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, out)| out.iter().map(move |&(v, w)| (u, v, w)))
    }

    /// Single-source shortest distances.
    pub fn shortest_paths(&self, source: usize) -> Vec<u64> {
        self.shortest_paths_counted(source).0
    }

    /// Same as [`Graph::shortest_paths`], also returning the number of edge
    /// relaxations attempted (the unit of modeled work).
    pub fn shortest_paths_counted(&self, source: usize) -> (Vec<u64>, u64) {
        let mut dist = vec![UNREACHABLE; self.nodes()];
        let mut steps = 0;
        if source >= self.nodes() {
            return (dist, steps);
        }
        let mut heap = BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                steps += 1;
                let nd = d.saturating_add(w);
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        (dist, steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes() {
        let g = Graph::new(2, &[(0, 1, 5)]).unwrap();
        assert_eq!(g.shortest_paths(0), vec![0, 5]);
        assert_eq!(g.shortest_paths(1), vec![UNREACHABLE, 0]);
    }

    #[test]
    fn negative_weight_rejected() {
        assert_eq!(
            Graph::new(2, &[(0, 1, -1)]),
            Err(WorkloadError::NegativeWeight {
                from: 0,
                to: 1,
                weight: -1
            })
        );
    }

    #[test]
    fn prefers_cheaper_detour() {
        let g = Graph::new(3, &[(0, 2, 10), (0, 1, 2), (1, 2, 3)]).unwrap();
        assert_eq!(g.shortest_paths(0), vec![0, 2, 5]);
    }
}
