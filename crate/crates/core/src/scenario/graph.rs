//! Directed-graph queries over a scenario's edge list.

use std::collections::{BTreeSet, VecDeque};

use super::{EdgeSpec, ScenarioError, StructuredScenario};
use crate::NodeId;

fn check_node(s: &StructuredScenario, id: NodeId) -> Result<(), ScenarioError> {
    if id < s.num_nodes() {
        Ok(())
    } else {
        Err(ScenarioError::UnknownNode(id))
    }
}

/// Direct successors of `node`, in edge-list order.
pub fn successors(s: &StructuredScenario, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
    s.edges
        .iter()
        .filter(move |e| e.source == node)
        .map(|e| e.target)
}

/// Nodes reachable from `src` by a directed path of length >= 1, never
/// passing through `blocked`.
fn reach(s: &StructuredScenario, src: NodeId, blocked: Option<NodeId>) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<NodeId> = successors(s, src).collect();
    while let Some(n) = queue.pop_front() {
        if Some(n) == blocked || !seen.insert(n) {
            continue;
        }
        queue.extend(successors(s, n));
    }
    seen
}

/// Every node reachable from `src` through at least one edge.
pub fn reachable_from(s: &StructuredScenario, src: NodeId) -> Result<BTreeSet<NodeId>, ScenarioError> {
    check_node(s, src)?;
    Ok(reach(s, src, None))
}

/// Whether a directed path of length >= 1 leads from `src` to `tgt`.
pub fn reachable(s: &StructuredScenario, src: NodeId, tgt: NodeId) -> Result<bool, ScenarioError> {
    check_node(s, src)?;
    check_node(s, tgt)?;
    Ok(reach(s, src, None).contains(&tgt))
}

/// Whether a simple path of length >= 2 leads from `src` to `tgt` with every
/// intermediate node distinct from both endpoints. For `src == tgt` this is
/// cycle existence through `src`.
pub fn has_indirect_path(s: &StructuredScenario, src: NodeId, tgt: NodeId) -> Result<bool, ScenarioError> {
    check_node(s, src)?;
    check_node(s, tgt)?;
    for first in successors(s, src) {
        if first == src {
            continue;
        }
        if src == tgt {
            if reach(s, first, None).contains(&src) {
                return Ok(true);
            }
        } else if first != tgt && reach(s, first, Some(src)).contains(&tgt) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether the graph is connected once edge directions are ignored.
pub fn undirected_connected(s: &StructuredScenario) -> bool {
    let n = s.num_nodes();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for e in &s.edges {
            let other = if e.source == u {
                e.target
            } else if e.target == u {
                e.source
            } else {
                continue;
            };
            if !seen[other] {
                seen[other] = true;
                stack.push(other);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Arrival step of an event starting at `start` after traversing `path`.
pub fn event_arrival_time(start: u32, path: &[EdgeSpec]) -> Result<u32, ScenarioError> {
    let mut t = start;
    for (hop, pair) in path.windows(2).enumerate() {
        if pair[0].target != pair[1].source {
            return Err(ScenarioError::BrokenPath {
                hop: hop + 1,
                previous: pair[0].edge(),
                expected: pair[0].target,
            });
        }
    }
    for e in path {
        t += e.time_lag;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::showcase;
    use super::super::*;
    use proptest::prelude::*;

    fn lag_edge(source: NodeId, target: NodeId, lag: u32) -> EdgeSpec {
        EdgeSpec {
            source,
            target,
            relationship: String::new(),
            time_lag: lag,
        }
    }

    pub(crate) fn graph(n: usize, edges: &[(usize, usize)]) -> StructuredScenario {
        let mut s = showcase();
        s.nodes = (0..n)
            .map(|id| NodeSpec {
                id,
                node_type: NodeType::Propagation,
                name: format!("n{id}"),
                description: String::new(),
            })
            .collect();
        s.edges = edges.iter().map(|&(a, b)| lag_edge(a, b, 1)).collect();
        s
    }

    fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; n]; n];
        for &(a, b) in edges {
            m[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if m[i][k] && m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
        m
    }

    #[test]
    fn arrival_examples() {
        assert_eq!(event_arrival_time(15, &[lag_edge(0, 1, 1)]).unwrap(), 16);
        assert_eq!(event_arrival_time(15, &[]).unwrap(), 15);
        let path = [lag_edge(0, 1, 1), lag_edge(1, 3, 1), lag_edge(3, 2, 1)];
        assert_eq!(event_arrival_time(15, &path).unwrap(), 18);
        let broken = [lag_edge(0, 1, 1), lag_edge(2, 3, 1)];
        assert!(matches!(
            event_arrival_time(0, &broken),
            Err(ScenarioError::BrokenPath { hop: 1, .. })
        ));
    }

    #[test]
    fn showcase_reachability() {
        let s = showcase();
        assert!(reachable(&s, 0, 2).unwrap());
        assert!(reachable(&s, 0, 0).unwrap());
        assert!(matches!(reachable(&s, 0, 7), Err(ScenarioError::UnknownNode(7))));
        assert!(has_indirect_path(&s, 0, 2).unwrap());
        assert!(!has_indirect_path(&s, 0, 1).unwrap());
        // 0->1->0 is a two-hop cycle
        assert!(has_indirect_path(&s, 0, 0).unwrap());
        assert!(undirected_connected(&s));
    }

    #[test]
    fn chain_is_one_way() {
        let s = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(!reachable(&s, 4, 0).unwrap());
        assert!(reachable(&s, 0, 4).unwrap());
        assert!(!reachable(&s, 2, 2).unwrap());
    }

    fn edge_sets() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..=6).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
                .collect();
            let len = pairs.len();
            (Just(n), proptest::collection::vec(any::<bool>(), len)).prop_map(move |(n, mask)| {
                let edges = pairs
                    .iter()
                    .zip(mask)
                    .filter(|(_, keep)| *keep)
                    .map(|(p, _)| *p)
                    .collect();
                (n, edges)
            })
        })
    }

    proptest! {
        #[test]
        fn reachable_matches_closure((n, edges) in edge_sets()) {
            let s = graph(n, &edges);
            let m = closure(n, &edges);
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(reachable(&s, a, b).unwrap(), m[a][b]);
                }
            }
        }

        #[test]
        fn arrival_is_additive(start in 0u32..100, lags in proptest::collection::vec(0u32..5, 0..8), cut in 0usize..8) {
            let path: Vec<EdgeSpec> = lags.iter().enumerate().map(|(i, &l)| lag_edge(i, i + 1, l)).collect();
            let cut = cut.min(path.len());
            let (p1, p2) = path.split_at(cut);
            let whole = event_arrival_time(start, &path).unwrap();
            let split = event_arrival_time(event_arrival_time(start, p1).unwrap(), p2).unwrap();
            prop_assert_eq!(whole, split);
        }
    }
}
