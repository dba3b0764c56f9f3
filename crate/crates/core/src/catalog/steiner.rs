//! Minimum Steiner trees on unit-weight undirected graphs.
//!
//! Nodes are dense indices `0..n`. The exact solver uses Dreyfus–Wagner over
//! terminal subsets (or subset enumeration when terminals are many); the
//! approximate solver is the metric-closure / Kruskal construction.

use std::collections::VecDeque;

/// Result tree: node set plus the edges spanning it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// Two terminals with no connecting path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Disconnected(pub usize, pub usize);

const INF: usize = usize::MAX / 4;

/// Dreyfus–Wagner is used up to this many terminals; beyond it the exact
/// solver enumerates non-terminal subsets instead.
pub const DW_MAX_TERMINALS: usize = 12;

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn bfs(adj: &[Vec<usize>], src: usize) -> (Vec<usize>, Vec<usize>) {
    let mut dist = vec![INF; adj.len()];
    let mut parent = vec![usize::MAX; adj.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == INF {
                dist[v] = dist[u] + 1;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    (dist, parent)
}

fn path(parents: &[usize], to: usize) -> Vec<usize> {
    let mut out = vec![to];
    let mut cur = to;
    while parents[cur] != usize::MAX {
        cur = parents[cur];
        out.push(cur);
    }
    out
}

fn check_connected(adj: &[Vec<usize>], terminals: &[usize]) -> Result<(), Disconnected> {
    if let Some(&first) = terminals.first() {
        let (dist, _) = bfs(adj, first);
        if let Some(&t) = terminals.iter().find(|&&t| dist[t] == INF) {
            return Err(Disconnected(first, t));
        }
    }
    Ok(())
}

fn dedup(terminals: &[usize]) -> Vec<usize> {
    let mut t = terminals.to_vec();
    t.sort_unstable();
    t.dedup();
    t
}

/// BFS spanning tree of the subgraph induced by `nodes`, rooted at the
/// smallest node.
pub fn spanning_tree(adj: &[Vec<usize>], nodes: &[usize]) -> Tree {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    let mut inside = vec![false; adj.len()];
    for &n in &nodes {
        inside[n] = true;
    }
    let mut edges = Vec::new();
    if let Some(&root) = nodes.first() {
        let mut seen = vec![false; adj.len()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if inside[v] && !seen[v] {
                    seen[v] = true;
                    edges.push((u.min(v), u.max(v)));
                    queue.push_back(v);
                }
            }
        }
    }
    edges.sort_unstable();
    Tree { nodes, edges }
}

fn trivial(terminals: &[usize]) -> Option<Tree> {
    match terminals {
        [] => Some(Tree {
            nodes: vec![],
            edges: vec![],
        }),
        [t] => Some(Tree {
            nodes: vec![*t],
            edges: vec![],
        }),
        _ => None,
    }
}

/// Minimum Steiner tree.
pub fn exact(adj: &[Vec<usize>], terminals: &[usize]) -> Result<Tree, Disconnected> {
    let terminals = dedup(terminals);
    check_connected(adj, &terminals)?;
    if let Some(t) = trivial(&terminals) {
        return Ok(t);
    }
    let nodes = if terminals.len() <= DW_MAX_TERMINALS {
        dreyfus_wagner(adj, &terminals)
    } else {
        enumerate(adj, &terminals)
    };
    Ok(spanning_tree(adj, &nodes))
}

fn dreyfus_wagner(adj: &[Vec<usize>], terminals: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let k = terminals.len();
    let (dist, parents): (Vec<Vec<usize>>, Vec<Vec<usize>>) = (0..n).map(|s| bfs(adj, s)).unzip();
    let full = (1usize << k) - 1;
    let mut dp = vec![vec![INF; n]; full + 1];
    let mut via = vec![vec![usize::MAX; n]; full + 1];
    let mut split = vec![vec![0usize; n]; full + 1];
    let mut merged = vec![INF; n];
    for (i, &t) in terminals.iter().enumerate() {
        dp[1 << i][..n].copy_from_slice(&dist[t][..n]);
    }
    for set in 1..=full {
        if set.count_ones() < 2 {
            continue;
        }
        for u in 0..n {
            merged[u] = INF;
            let mut sub = (set - 1) & set;
            while sub > 0 {
                let cost = dp[sub][u].saturating_add(dp[set ^ sub][u]);
                if cost < merged[u] {
                    merged[u] = cost;
                    split[set][u] = sub;
                }
                sub = (sub - 1) & set;
            }
        }
        for v in 0..n {
            for u in 0..n {
                let cost = merged[u].saturating_add(dist[u][v]);
                if cost < dp[set][v] {
                    dp[set][v] = cost;
                    via[set][v] = u;
                }
            }
        }
    }
    let root = terminals[0];
    let mut nodes = Vec::new();
    let mut stack = vec![(full, root)];
    while let Some((set, v)) = stack.pop() {
        if set.count_ones() == 1 {
            let t = terminals[set.trailing_zeros() as usize];
            nodes.extend(path(&parents[t], v));
            continue;
        }
        let u = via[set][v];
        nodes.extend(path(&parents[u], v));
        let sub = split[set][u];
        stack.push((sub, u));
        stack.push((set ^ sub, u));
    }
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

fn connected_within(adj: &[Vec<usize>], inside: &[bool], start: usize, count: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut reached = 1;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if inside[v] && !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == count
}

fn enumerate(adj: &[Vec<usize>], terminals: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let others: Vec<usize> = (0..n).filter(|v| !terminals.contains(v)).collect();
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u64..(1u64 << others.len()) {
        let extra = mask.count_ones() as usize;
        if best.as_ref().is_some_and(|b| terminals.len() + extra >= b.len()) {
            continue;
        }
        let mut inside = vec![false; n];
        let mut nodes = terminals.to_vec();
        for &t in terminals {
            inside[t] = true;
        }
        for (i, &o) in others.iter().enumerate() {
            if mask >> i & 1 == 1 {
                inside[o] = true;
                nodes.push(o);
            }
        }
        if connected_within(adj, &inside, terminals[0], nodes.len()) {
            nodes.sort_unstable();
            best = Some(nodes);
        }
    }
    best.unwrap_or_default()
}

/// Metric-closure + Kruskal 2-approximation with non-terminal leaf pruning.
pub fn approximate(adj: &[Vec<usize>], terminals: &[usize]) -> Result<Tree, Disconnected> {
    let terminals = dedup(terminals);
    check_connected(adj, &terminals)?;
    if let Some(t) = trivial(&terminals) {
        return Ok(t);
    }
    let bfs_from: Vec<(Vec<usize>, Vec<usize>)> = terminals.iter().map(|&t| bfs(adj, t)).collect();
    let mut closure = Vec::new();
    for i in 0..terminals.len() {
        for j in i + 1..terminals.len() {
            closure.push((bfs_from[i].0[terminals[j]], i, j));
        }
    }
    closure.sort_unstable();
    let mut uf: Vec<usize> = (0..terminals.len()).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        uf[x] = r;
        r
    }
    let mut nodes = Vec::new();
    for (_, i, j) in closure {
        let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
        if ri != rj {
            uf[ri] = rj;
            nodes.extend(path(&bfs_from[i].1, terminals[j]));
        }
    }
    let mut tree = spanning_tree(adj, &nodes);
    prune_leaves(&mut tree, &terminals);
    Ok(tree)
}

fn prune_leaves(tree: &mut Tree, terminals: &[usize]) {
    loop {
        let leaf = tree.nodes.iter().copied().find(|&v| {
            !terminals.contains(&v) && tree.edges.iter().filter(|&&(a, b)| a == v || b == v).count() <= 1
        });
        let Some(leaf) = leaf else { return };
        tree.nodes.retain(|&v| v != leaf);
        tree.edges.retain(|&(a, b)| a != leaf && b != leaf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_prefers_direct_edge() {
        let adj = adjacency(3, &[(0, 1), (1, 2), (0, 2)]);
        let t = exact(&adj, &[0, 2]).unwrap();
        assert_eq!(t.nodes, vec![0, 2]);
        assert_eq!(t.edges, vec![(0, 2)]);
    }

    #[test]
    fn star_needs_center() {
        let adj = adjacency(4, &[(0, 3), (1, 3), (2, 3)]);
        let t = exact(&adj, &[0, 1, 2]).unwrap();
        assert_eq!(t.nodes, vec![0, 1, 2, 3]);
        assert_eq!(t.edges.len(), 3);
        assert_eq!(approximate(&adj, &[0, 1, 2]).unwrap().nodes.len(), 4);
    }

    #[test]
    fn disconnected_is_reported() {
        let adj = adjacency(3, &[(0, 1)]);
        assert_eq!(exact(&adj, &[0, 2]), Err(Disconnected(0, 2)));
    }

    #[test]
    fn enumeration_matches_dreyfus_wagner() {
        let edges: Vec<_> = (0..14).map(|i| (i, i + 1)).chain([(0, 7), (3, 12)]).collect();
        let adj = adjacency(15, &edges);
        let terms: Vec<usize> = (0..15).filter(|v| v % 2 == 0).collect();
        let a = spanning_tree(&adj, &enumerate(&adj, &terms));
        let b = spanning_tree(&adj, &dreyfus_wagner(&adj, &terms));
        assert_eq!(a.nodes.len(), b.nodes.len());
    }
}
