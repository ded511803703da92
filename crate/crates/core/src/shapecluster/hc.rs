use std::collections::HashMap;

use super::{ClusterError, DistanceMatrix, Result};

/// Average-linkage agglomerative clustering cut at `k` clusters.
///
/// Uses the nearest-neighbour chain algorithm with Lance–Williams updates.
/// Nearest-neighbour ties prefer the previous chain element, then the lowest
/// index; merges of equal height keep discovery order. Labels are numbered
/// by the lowest member index of each cluster.
pub fn hierarchical_cluster(d: &DistanceMatrix, k: usize) -> Result<Vec<usize>> {
    let n = d.len();
    if k == 0 || k > n {
        return Err(ClusterError::TooFewSamples { n, k });
    }
    let mut dist = d.clone();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();

    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let a = *chain.last().expect("non-empty chain");
        let prev = chain.len().checked_sub(2).map(|i| chain[i]);
        let mut best = prev.map(|p| (p, dist.get(a, p)));
        for c in (0..n).filter(|&c| active[c] && c != a) {
            let dc = dist.get(a, c);
            if best.is_none_or(|(_, bd)| dc < bd) {
                best = Some((c, dc));
            }
        }
        let (b, h) = best.expect("at least two active clusters");
        if Some(b) != prev {
            chain.push(b);
            continue;
        }
        chain.truncate(chain.len() - 2);
        let (lo, hi) = (a.min(b), a.max(b));
        let (sa, sb) = (size[lo] as f64, size[hi] as f64);
        for c in (0..n).filter(|&c| active[c] && c != lo && c != hi) {
            let v = (sa * dist.get(lo, c) + sb * dist.get(hi, c)) / (sa + sb);
            dist.set(lo, c, v);
        }
        active[hi] = false;
        size[lo] += size[hi];
        merges.push((h, lo, hi));
    }

    // Average linkage is monotone, so sorting by height is a valid merge order.
    merges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(_, a, b) in merges.iter().take(n - k) {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut ids: HashMap<usize, usize> = HashMap::new();
    Ok((0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect())
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let pairs = |x: f64| x * (x - 1.0) / 2.0;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ra: HashMap<usize, f64> = HashMap::new();
    let mut rb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *ra.entry(x).or_default() += 1.0;
        *rb.entry(y).or_default() += 1.0;
    }
    let index: f64 = joint.values().map(|&c| pairs(c)).sum();
    let sa: f64 = ra.values().map(|&c| pairs(c)).sum();
    let sb: f64 = rb.values().map(|&c| pairs(c)).sum();
    let expected = sa * sb / pairs(n as f64);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-15 {
        // both labelings trivial (one cluster, or all singletons)
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapecluster::chi2_matrix;

    fn naive_average_linkage(d: &DistanceMatrix, k: usize) -> Vec<usize> {
        // O(n³) reference: repeatedly merge the closest pair of clusters
        let n = d.len();
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        while clusters.len() > k {
            let mut best = (f64::INFINITY, 0, 0);
            for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    let mut s = 0.0;
                    for &p in &clusters[i] {
                        for &q in &clusters[j] {
                            s += d.get(p, q);
                        }
                    }
                    let avg = s / (clusters[i].len() * clusters[j].len()) as f64;
                    if avg < best.0 {
                        best = (avg, i, j);
                    }
                }
            }
            let moved = clusters.remove(best.2);
            clusters[best.1].extend(moved);
        }
        let mut labels = vec![0; n];
        let mut order: Vec<_> = clusters.iter().map(|c| *c.iter().min().unwrap()).enumerate().collect();
        order.sort_by_key(|&(_, m)| m);
        for (new, (ci, _)) in order.into_iter().enumerate() {
            for &p in &clusters[ci] {
                labels[p] = new;
            }
        }
        labels
    }

    #[test]
    fn matches_naive_reference() {
        // irregular 1-D points, distinct pairwise gaps so no ties
        let xs: Vec<f64> = (0..25).map(|i| ((i * 37 % 25) as f64).powf(1.3) + 0.01 * i as f64).collect();
        let d = DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs());
        for k in [1, 2, 3, 5, 8, 25] {
            assert_eq!(hierarchical_cluster(&d, k).unwrap(), naive_average_linkage(&d, k), "k={k}");
        }
    }

    #[test]
    fn duplicated_point_masses_split() {
        let mut data = Vec::new();
        for i in 0..10 {
            let mut row = vec![0.0; 6];
            row[if i % 2 == 0 { 0 } else { 3 }] = 1.0;
            data.extend(row);
        }
        let labels = hierarchical_cluster(&chi2_matrix(&data, 6), 2).unwrap();
        assert_eq!(labels, vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let d = DistanceMatrix::from_fn(6, |i, j| (i + j) as f64);
        assert_eq!(hierarchical_cluster(&d, 6).unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert!(matches!(
            hierarchical_cluster(&d, 7),
            Err(ClusterError::TooFewSamples { n: 6, k: 7 })
        ));
    }

    #[test]
    fn ari_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(ari < 0.0);
    }
}
