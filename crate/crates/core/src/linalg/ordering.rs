//! Reverse Cuthill-McKee ordering. On the structured grids used here it
//! bounds the profile of the factor by the grid bandwidth.

use std::collections::VecDeque;

use super::SparseMatrixCsr;

/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrixCsr) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).0.iter().filter(|&&c| c != i).count())
        .collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut scratch = vec![usize::MAX; n];

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree, &mut scratch);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&c| !visited[c]));
            nbrs.sort_by_key(|&c| (degree[c], c));
            for &c in &nbrs {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

/// George-Liu style search: repeat BFS from the farthest, lowest-degree node
/// until the eccentricity stops growing.
fn pseudo_peripheral(
    a: &SparseMatrixCsr,
    seed: usize,
    degree: &[usize],
    level: &mut [usize],
) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let touched = bfs_levels(a, root, level);
        let far = touched.iter().map(|&v| level[v]).max().unwrap_or(0);
        let candidate = touched
            .iter()
            .copied()
            .filter(|&v| level[v] == far)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(root);
        for &v in &touched {
            level[v] = usize::MAX;
        }
        if far <= ecc {
            break;
        }
        ecc = far;
        root = candidate;
    }
    root
}

fn bfs_levels(a: &SparseMatrixCsr, root: usize, level: &mut [usize]) -> Vec<usize> {
    let mut touched = vec![root];
    level[root] = 0;
    let mut head = 0;
    while head < touched.len() {
        let v = touched[head];
        head += 1;
        for &c in a.row(v).0 {
            if level[c] == usize::MAX {
                level[c] = level[v] + 1;
                touched.push(c);
            }
        }
    }
    touched
}
