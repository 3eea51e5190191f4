use std::collections::VecDeque;

use crate::error::{contract, Error, Result};
use crate::tensor::{Permutation, RefDomain};

use super::config::DomainPolicy;

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Sorted, each pair `(u, v)` with `u < v`.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(contract(format!(
                    "edge ({u},{v}) leaves vertex range 0..{n}"
                )));
            }
            if u == v {
                return Err(contract(format!("self-loop at vertex {u}")));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(contract(format!("duplicate edge ({},{})", w[0].0, w[0].1)));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        adjacency.iter_mut().for_each(|a| a.sort_unstable());
        Ok(Self {
            n,
            edges: normalized,
            adjacency,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// The same graph with vertex `v` renamed to `perm(v)`.
    pub fn relabeled(&self, perm: &Permutation) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(contract("relabeling must cover every vertex"));
        }
        Graph::new(
            self.n,
            self.edges
                .iter()
                .map(|&(u, v)| (perm.apply(u), perm.apply(v))),
        )
    }

    /// Vertices within `radius` hops of `v`: `v` first, the rest ascending.
    pub fn ball(&self, v: usize, radius: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[v] = 0;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            if dist[u] == radius {
                continue;
            }
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        std::iter::once(v)
            .chain((0..self.n).filter(|&u| u != v && dist[u] != usize::MAX))
            .collect()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `n m` followed by `m` lines `u v` (0-based, whitespace separated).
/// Blank lines are skipped; reported line numbers are 1-based.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let nums = |line: usize, s: &str| -> Result<Vec<usize>> {
        s.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(line, format!("not a vertex count or id: {t:?}")))
            })
            .collect()
    };
    let (n, m) = match nums(header_line, header)?[..] {
        [n, m] => (n, m),
        _ => return Err(parse_err(header_line, "header must be 'n m'")),
    };
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, body) = lines.next().ok_or_else(|| {
            parse_err(
                header_line,
                format!("expected {m} edges, found {}", edges.len()),
            )
        })?;
        let (u, v) = match nums(line, body)?[..] {
            [u, v] => (u, v),
            _ => return Err(parse_err(line, "edge line must be 'u v'")),
        };
        if u >= n || v >= n {
            return Err(parse_err(line, format!("vertex out of range 0..{n}")));
        }
        if u == v {
            return Err(parse_err(line, "self-loop"));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(parse_err(line, format!("duplicate edge ({u},{v})")));
        }
        edges.push((u, v));
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected content after the last edge"));
    }
    Graph::new(n, edges)
}

/// Parses `n` lines of equally many decimal numbers.
pub fn parse_features(text: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| parse_err(i + 1, format!("not a number: {t:?}")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(parse_err(
                    i + 1,
                    format!("expected {first} values, got {}", row.len()),
                ));
            }
        }
        if row.is_empty() {
            return Err(parse_err(i + 1, "empty feature row"));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(parse_err(
            text.lines().count().max(1),
            format!("expected {n} feature rows, got {}", rows.len()),
        ));
    }
    Ok(rows)
}

/// Reference domains a policy assigns to a graph.
pub fn build_domains(graph: &Graph, policy: &DomainPolicy) -> Result<Vec<RefDomain>> {
    let ids = |vs: &[usize]| RefDomain::from_ids(vs.iter().map(|&v| v as u64));
    match policy {
        DomainPolicy::Vertices => (0..graph.n).map(|v| ids(&[v])).collect(),
        DomainPolicy::Edges => graph.edges.iter().map(|&(u, v)| ids(&[u, v])).collect(),
        DomainPolicy::Ball { radius } => {
            (0..graph.n).map(|v| ids(&graph.ball(v, *radius))).collect()
        }
        DomainPolicy::Subgraphs { subgraphs } => subgraphs
            .iter()
            .map(|s| {
                if s.is_empty() {
                    return Err(contract("empty subgraph"));
                }
                if let Some(&v) = s.iter().find(|&&v| v >= graph.n) {
                    return Err(contract(format!(
                        "subgraph vertex {v} out of range 0..{}",
                        graph.n
                    )));
                }
                ids(s)
            })
            .collect(),
    }
}
