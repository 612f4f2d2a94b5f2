//! Hopcroft–Karp maximum matching on a bipartite graph.

use std::collections::VecDeque;

const FREE: usize = usize::MAX;

/// Maximum matching between `left` vertices `0..adj.len()` and right vertices
/// `0..right`. Returns `pair[u]`, the right partner of each left vertex, or
/// `None` where unmatched.
pub fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    let left = adj.len();
    let mut pair_l = vec![FREE; left];
    let mut pair_r = vec![FREE; right];
    let mut dist = vec![0usize; left];
    while bfs(adj, &pair_l, &pair_r, &mut dist) {
        for u in 0..left {
            if pair_l[u] == FREE {
                dfs(u, adj, &mut pair_l, &mut pair_r, &mut dist);
            }
        }
    }
    pair_l.into_iter().map(|v| (v != FREE).then_some(v)).collect()
}

/// Layers the graph from the free left vertices; true if some augmenting path
/// exists.
fn bfs(adj: &[Vec<usize>], pair_l: &[usize], pair_r: &[usize], dist: &mut [usize]) -> bool {
    let mut queue = VecDeque::new();
    for (u, d) in dist.iter_mut().enumerate() {
        if pair_l[u] == FREE {
            *d = 0;
            queue.push_back(u);
        } else {
            *d = usize::MAX;
        }
    }
    let mut found = false;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            match pair_r[v] {
                FREE => found = true,
                w if dist[w] == usize::MAX => {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
                _ => {}
            }
        }
    }
    found
}

fn dfs(u: usize, adj: &[Vec<usize>], pair_l: &mut [usize], pair_r: &mut [usize], dist: &mut [usize]) -> bool {
    for &v in &adj[u] {
        let w = pair_r[v];
        if w == FREE || (dist[w] == dist[u] + 1 && dfs(w, adj, pair_l, pair_r, dist)) {
            pair_l[u] = v;
            pair_r[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}
