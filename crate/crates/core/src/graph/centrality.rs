//! Centrality metrics used as voting weights.
//!
//! Every metric returns `1.0` for a single-node graph and rejects
//! disconnected input.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use super::{ExpertNetwork, NodeId};
use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 1_000;
const PAGERANK_DAMPING: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centrality {
    Degree,
    Betweenness,
    Closeness,
    #[default]
    Eigenvector,
    PageRank,
}

impl Centrality {
    pub const ALL: [Centrality; 5] = [
        Centrality::Degree,
        Centrality::Betweenness,
        Centrality::Closeness,
        Centrality::Eigenvector,
        Centrality::PageRank,
    ];
}

impl FromStr for Centrality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "degree" => Ok(Centrality::Degree),
            "betweenness" => Ok(Centrality::Betweenness),
            "closeness" => Ok(Centrality::Closeness),
            "eigenvector" => Ok(Centrality::Eigenvector),
            "pagerank" => Ok(Centrality::PageRank),
            other => Err(Error::Config(format!("unknown centrality metric {other:?}"))),
        }
    }
}

impl fmt::Display for Centrality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Centrality::Degree => "degree",
            Centrality::Betweenness => "betweenness",
            Centrality::Closeness => "closeness",
            Centrality::Eigenvector => "eigenvector",
            Centrality::PageRank => "pagerank",
        })
    }
}

/// Dense-indexed adjacency lists, nodes in ascending id order.
struct Indexed {
    ids: Vec<NodeId>,
    adj: Vec<Vec<usize>>,
}

impl Indexed {
    fn new(net: &ExpertNetwork) -> Self {
        let ids: Vec<NodeId> = net.ids().collect();
        let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let adj = ids
            .iter()
            .map(|&id| net.neighbors(id).map(|n| pos[&n]).collect())
            .collect();
        Self { ids, adj }
    }

    fn n(&self) -> usize {
        self.ids.len()
    }

    fn bfs(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

pub fn centrality(net: &ExpertNetwork, metric: Centrality) -> Result<BTreeMap<NodeId, f64>> {
    if net.is_empty() {
        return Err(Error::Graph("centrality of an empty network".into()));
    }
    if !net.is_connected() {
        return Err(Error::Graph("centrality requires a connected network".into()));
    }
    let g = Indexed::new(net);
    let scores = if g.n() == 1 {
        vec![1.0]
    } else {
        match metric {
            Centrality::Degree => g.adj.iter().map(|a| a.len() as f64).collect(),
            Centrality::Betweenness => betweenness(&g),
            Centrality::Closeness => closeness(&g),
            Centrality::Eigenvector => eigenvector(&g),
            Centrality::PageRank => pagerank(&g),
        }
    };
    Ok(g.ids.into_iter().zip(scores).collect())
}

fn closeness(g: &Indexed) -> Vec<f64> {
    let n = g.n();
    (0..n)
        .map(|v| {
            let total: usize = g.bfs(v).iter().sum();
            (n - 1) as f64 / total as f64
        })
        .collect()
}

/// Brandes' accumulation over unweighted shortest paths.
fn betweenness(g: &Indexed) -> Vec<f64> {
    let n = g.n();
    let mut cb = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![i64::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &g.adj[v] {
                if dist[w] == i64::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    if n < 3 {
        return vec![0.0; n];
    }
    // Each unordered pair was counted from both ends.
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    cb.into_iter().map(|c| c * scale).collect()
}

/// Principal eigenvector of the adjacency matrix by power iteration on
/// `A + I`. The shift keeps the same eigenvectors but makes the Perron root
/// strictly dominant, so bipartite graphs converge instead of oscillating.
fn eigenvector(g: &Indexed) -> Vec<f64> {
    let n = g.n();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..POWER_MAX_ITER {
        let mut next: Vec<f64> = (0..n)
            .map(|v| x[v] + g.adj[v].iter().map(|&u| x[u]).sum::<f64>())
            .collect();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let diff = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if diff < POWER_TOL {
            break;
        }
    }
    x
}

fn pagerank(g: &Indexed) -> Vec<f64> {
    let n = g.n();
    let teleport = (1.0 - PAGERANK_DAMPING) / n as f64;
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITER {
        let next: Vec<f64> = (0..n)
            .map(|v| {
                teleport
                    + PAGERANK_DAMPING
                        * g.adj[v]
                            .iter()
                            .map(|&u| x[u] / g.adj[u].len() as f64)
                            .sum::<f64>()
            })
            .collect();
        let diff: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if diff < POWER_TOL {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(net: &ExpertNetwork, m: Centrality) -> Vec<f64> {
        centrality(net, m).unwrap().into_values().collect()
    }

    #[test]
    fn single_node_scores_one() {
        let net = ExpertNetwork::from_edges(1, &[]).unwrap();
        for m in Centrality::ALL {
            assert_eq!(scores(&net, m), vec![1.0], "{m}");
        }
    }

    #[test]
    fn path_betweenness() {
        let net = ExpertNetwork::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(scores(&net, Centrality::Betweenness), vec![0.0, 1.0, 0.0]);
        assert_eq!(scores(&net, Centrality::Degree), vec![1.0, 2.0, 1.0]);
        let c = scores(&net, Centrality::Closeness);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_nodes_betweenness_is_zero() {
        let net = ExpertNetwork::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(scores(&net, Centrality::Betweenness), vec![0.0, 0.0]);
    }

    #[test]
    fn star_eigenvector_ratio() {
        let net = ExpertNetwork::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let e = scores(&net, Centrality::Eigenvector);
        assert!((e[0] / e[1] - 3f64.sqrt()).abs() < 1e-6);
        assert!((e.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn pagerank_sums_to_one_and_favours_hub() {
        let net = ExpertNetwork::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (3, 4)]).unwrap();
        let p = scores(&net, Centrality::PageRank);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p[0] > p[1] && p[3] > p[1]);
    }

    #[test]
    fn pagerank_regular_graph_is_uniform() {
        let net = ExpertNetwork::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        for v in scores(&net, Centrality::PageRank) {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_disconnected_and_empty() {
        let net = ExpertNetwork::from_edges(3, &[(0, 1)]).unwrap();
        assert!(centrality(&net, Centrality::Degree).is_err());
        let empty = ExpertNetwork::new(3, 2, 10).unwrap();
        assert!(centrality(&empty, Centrality::Degree).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Centrality::ALL {
            assert_eq!(m.to_string().parse::<Centrality>().unwrap(), m);
        }
        assert!("katz".parse::<Centrality>().is_err());
    }
}
