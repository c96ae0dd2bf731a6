//! HDBSCAN over euclidean mutual-reachability distances.
//!
//! Merges that happen at the same distance are collapsed into one n-ary node,
//! which makes the hierarchy (and so the clustering) independent of point
//! order even when mutual-reachability distances tie.

use std::collections::BTreeMap;

use super::{
    rank_by_centrality, squared_distance, CentroidKind, Cluster, ClustererConfig, Clustering,
    ReducedMatrix, Selection, NOISE,
};

struct TreeNode {
    children: Vec<usize>,
    distance: f64,
    size: usize,
}

struct CondensedCluster {
    parent: Option<usize>,
    birth: f64,
    children: Vec<usize>,
    size: usize,
    /// Points leaving this cluster and the lambda at which they leave.
    fallen: Vec<(usize, f64)>,
}

pub fn hdbscan(points: &ReducedMatrix, cfg: &ClustererConfig) -> Clustering {
    let n = points.len();
    let min_size = cfg.min_cluster_size.max(2);
    if n < min_size {
        return Clustering::all_noise(n);
    }
    let core = core_distances(points, min_size);
    let mst = prim_mst(points, &core);
    let tree = merge_tree(n, mst);
    let condensed = condense(&tree, n, min_size);
    let selected = match cfg.selection {
        Selection::Leaf => select_leaves(&condensed),
        Selection::Eom => select_eom(&condensed),
    };
    build_clustering(points, &condensed, &selected, cfg.centroid)
}

fn distance(points: &ReducedMatrix, i: usize, j: usize) -> f64 {
    squared_distance(points.row(i), points.row(j)).sqrt()
}

/// Distance to the `min_samples`-th nearest point, counting the point itself.
fn core_distances(points: &ReducedMatrix, min_samples: usize) -> Vec<f64> {
    let n = points.len();
    let kth = min_samples.min(n) - 1;
    let mut row = vec![0f64; n];
    (0..n)
        .map(|i| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = distance(points, i, j);
            }
            *row.select_nth_unstable_by(kth, f64::total_cmp).1
        })
        .collect()
}

fn prim_mst(points: &ReducedMatrix, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_weight = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let reach = distance(points, current, j).max(core[current]).max(core[j]);
            if reach < best[j] {
                best[j] = reach;
                from[j] = current;
            }
            if best[j] < next_weight || next == usize::MAX {
                next_weight = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, next_weight));
        current = next;
    }
    edges
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Builds the merge hierarchy; nodes `0..n` are points, the last node is the root.
fn merge_tree(n: usize, mut mst: Vec<(usize, usize, f64)>) -> Vec<TreeNode> {
    mst.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut nodes: Vec<TreeNode> = (0..n)
        .map(|_| TreeNode { children: Vec::new(), distance: 0.0, size: 1 })
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut node_of: Vec<usize> = (0..n).collect();

    let mut start = 0;
    while start < mst.len() {
        let weight = mst[start].2;
        let end = start + mst[start..].iter().take_while(|e| e.2 == weight).count();
        let group = &mst[start..end];

        let mut touched: Vec<(usize, usize)> = Vec::new();
        for &(a, b, _) in group {
            for p in [a, b] {
                let root = find(&mut parent, p);
                touched.push((root, node_of[root]));
            }
        }
        for &(a, b, _) in group {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut merged: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (old_root, node) in touched {
            let root = find(&mut parent, old_root);
            let children = merged.entry(root).or_default();
            if !children.contains(&node) {
                children.push(node);
            }
        }
        for (root, mut children) in merged {
            children.sort_unstable();
            let size = children.iter().map(|&c| nodes[c].size).sum();
            node_of[root] = nodes.len();
            nodes.push(TreeNode { children, distance: weight, size });
        }
        start = end;
    }
    nodes
}

fn subtree_points(tree: &[TreeNode], node: usize, n: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            stack.extend(tree[x].children.iter().copied());
        }
    }
}

fn condense(tree: &[TreeNode], n: usize, min_size: usize) -> Vec<CondensedCluster> {
    let root = tree.len() - 1;
    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth: 0.0,
        children: Vec::new(),
        size: tree[root].size,
        fallen: Vec::new(),
    }];
    let mut stack = vec![(root, 0usize)];
    let mut scratch = Vec::new();
    while let Some((node, cid)) = stack.pop() {
        let TreeNode { children, distance, .. } = &tree[node];
        let lambda = if *distance > 0.0 { 1.0 / distance } else { f64::INFINITY };
        if *distance == 0.0 {
            scratch.clear();
            subtree_points(tree, node, n, &mut scratch);
            clusters[cid].fallen.extend(scratch.iter().map(|&p| (p, lambda)));
            continue;
        }
        let (big, small): (Vec<usize>, Vec<usize>) =
            children.iter().partition(|&&c| tree[c].size >= min_size);
        for &c in &small {
            scratch.clear();
            subtree_points(tree, c, n, &mut scratch);
            clusters[cid].fallen.extend(scratch.iter().map(|&p| (p, lambda)));
        }
        match big.len() {
            0 => {}
            1 => stack.push((big[0], cid)),
            _ => {
                for &c in &big {
                    let child = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cid),
                        birth: lambda,
                        children: Vec::new(),
                        size: tree[c].size,
                        fallen: Vec::new(),
                    });
                    clusters[cid].children.push(child);
                    stack.push((c, child));
                }
            }
        }
    }
    clusters
}

/// Clusters without child clusters; the root counts only when it never splits.
fn select_leaves(clusters: &[CondensedCluster]) -> Vec<usize> {
    (0..clusters.len())
        .filter(|&c| clusters[c].children.is_empty())
        .collect()
}

fn select_eom(clusters: &[CondensedCluster]) -> Vec<usize> {
    let cap = finite_lambda_cap(clusters);
    let clamp = |l: f64| if l.is_finite() { l } else { cap };
    let stability: Vec<f64> = clusters
        .iter()
        .map(|c| {
            let birth = clamp(c.birth);
            let own: f64 = c.fallen.iter().map(|(_, l)| clamp(*l) - birth).sum();
            let kids: f64 = c
                .children
                .iter()
                .map(|&k| (clamp(clusters[k].birth) - birth) * clusters[k].size as f64)
                .sum();
            own + kids
        })
        .collect();

    // Children always have larger indices than their parent.
    let mut best = stability.clone();
    let mut chosen = vec![false; clusters.len()];
    for c in (0..clusters.len()).rev() {
        if clusters[c].children.is_empty() {
            chosen[c] = true;
            continue;
        }
        let below: f64 = clusters[c].children.iter().map(|&k| best[k]).sum();
        if c != 0 && stability[c] >= below {
            chosen[c] = true;
        } else {
            best[c] = below;
        }
    }
    // Keep only the topmost chosen cluster on each root-to-leaf path.
    (0..clusters.len())
        .filter(|&c| chosen[c] && !has_chosen_ancestor(clusters, &chosen, c))
        .collect()
}

fn has_chosen_ancestor(clusters: &[CondensedCluster], chosen: &[bool], mut c: usize) -> bool {
    while let Some(p) = clusters[c].parent {
        if chosen[p] {
            return true;
        }
        c = p;
    }
    false
}

fn finite_lambda_cap(clusters: &[CondensedCluster]) -> f64 {
    let cap = clusters
        .iter()
        .flat_map(|c| c.fallen.iter().map(|(_, l)| *l).chain([c.birth]))
        .filter(|l| l.is_finite())
        .fold(0.0f64, f64::max);
    if cap > 0.0 {
        cap
    } else {
        1.0
    }
}

fn build_clustering(
    points: &ReducedMatrix,
    condensed: &[CondensedCluster],
    selected: &[usize],
    centroid: CentroidKind,
) -> Clustering {
    let n = points.len();
    let cap = finite_lambda_cap(condensed);
    let mut groups: Vec<Vec<(usize, f64)>> = selected
        .iter()
        .map(|&root| {
            let mut members = Vec::new();
            let mut stack = vec![root];
            while let Some(c) = stack.pop() {
                members.extend(condensed[c].fallen.iter().copied());
                stack.extend(condensed[c].children.iter().copied());
            }
            members
        })
        .filter(|m| !m.is_empty())
        .collect();
    groups.sort_by_key(|m| m.iter().map(|(p, _)| *p).min());

    let mut clustering = Clustering::all_noise(n);
    for (cluster_id, members) in groups.into_iter().enumerate() {
        let clamped: Vec<f64> = members
            .iter()
            .map(|(_, l)| if l.is_finite() { *l } else { cap })
            .collect();
        let max_lambda = clamped.iter().copied().fold(0.0f64, f64::max);
        for (&(p, _), &l) in members.iter().zip(&clamped) {
            clustering.assignments[p] = cluster_id as i32;
            clustering.lambda[p] = if max_lambda > 0.0 { (l / max_lambda).min(1.0) } else { 1.0 };
        }
        let member_ids: Vec<usize> = members.iter().map(|(p, _)| *p).collect();
        let centre = match centroid {
            CentroidKind::Mean => mean(points, &member_ids),
            CentroidKind::Medoid => medoid(points, &member_ids),
        };
        clustering.clusters.push(Cluster { cluster_id, member_ids, centroid: centre });
    }
    debug_assert!(clustering.assignments.iter().all(|&a| a >= NOISE));
    rank_by_centrality(clustering)
}

fn mean(points: &ReducedMatrix, members: &[usize]) -> Vec<f32> {
    let mut acc = vec![0f64; points.dim()];
    for &m in members {
        for (a, v) in acc.iter_mut().zip(points.row(m)) {
            *a += f64::from(*v);
        }
    }
    acc.iter().map(|a| (a / members.len() as f64) as f32).collect()
}

fn medoid(points: &ReducedMatrix, members: &[usize]) -> Vec<f32> {
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let best = sorted
        .iter()
        .map(|&i| {
            let total: f64 = sorted.iter().map(|&j| distance(points, i, j)).sum();
            (total, i)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .expect("non-empty cluster");
    points.row(best).to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[[f32; 2]]) -> ReducedMatrix {
        ReducedMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn cfg(min_cluster_size: usize) -> ClustererConfig {
        ClustererConfig { min_cluster_size, ..ClustererConfig::default() }
    }

    #[test]
    fn too_few_points_are_all_noise() {
        let c = hdbscan(&matrix(&[[0.0, 0.0], [1.0, 1.0]]), &cfg(3));
        assert_eq!(c.assignments, [NOISE, NOISE]);
        assert!(c.clusters.is_empty());
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let c = hdbscan(&matrix(&[[1.0, 2.0]; 12]), &cfg(4));
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].member_ids, (0..12).collect::<Vec<_>>());
        assert!(c.lambda.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn tied_merges_collapse_into_one_node() {
        // Three points joined by two edges of equal weight.
        let tree = merge_tree(3, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(tree.len(), 4);
        assert_eq!(tree[3].children, [0, 1, 2]);
    }

    #[test]
    fn two_groups_split_into_two_leaves() {
        let mut rows = Vec::new();
        for i in 0..6 {
            rows.push([i as f32 * 0.1, 0.0]);
            rows.push([10.0 + i as f32 * 0.1, 0.0]);
        }
        let c = hdbscan(&matrix(&rows), &cfg(3));
        assert_eq!(c.clusters.len(), 2);
        assert_eq!(c.assignments[0], 0);
        assert_eq!(c.assignments[1], 1);
        assert!(c.assignments.iter().step_by(2).all(|&a| a == 0));
    }
}
