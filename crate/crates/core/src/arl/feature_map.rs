use serde::{Deserialize, Serialize};

/// Partition of feature indices into small, internally correlated clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub clusters: Vec<Vec<usize>>,
}

enum Dendrogram {
    Leaf(usize),
    Merge(Box<Dendrogram>, Box<Dendrogram>, usize),
}

impl Dendrogram {
    fn size(&self) -> usize {
        match self {
            Dendrogram::Leaf(_) => 1,
            Dendrogram::Merge(_, _, n) => *n,
        }
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            Dendrogram::Leaf(i) => out.push(*i),
            Dendrogram::Merge(l, r, _) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }

    fn split(self, max_size: usize, out: &mut Vec<Vec<usize>>) {
        if self.size() <= max_size {
            let mut leaves = Vec::new();
            self.leaves(&mut leaves);
            out.push(leaves);
            return;
        }
        if let Dendrogram::Merge(l, r, _) = self {
            l.split(max_size, out);
            r.split(max_size, out);
        }
    }
}

/// `1 - |pearson correlation|` between columns; constant columns are uncorrelated.
pub fn correlation_distance(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = samples.first().map_or(0, Vec::len);
    let n = samples.len() as f64;
    let means: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for s in samples {
        for i in 0..d {
            let di = s[i] - means[i];
            for j in i..d {
                cov[i][j] += di * (s[j] - means[j]);
            }
        }
    }
    let mut dist = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let denom = (cov[i][i] * cov[j][j]).sqrt();
            let corr = if denom > 0.0 { cov[i][j] / denom } else { 0.0 };
            let v = (1.0 - corr.abs()).clamp(0.0, 1.0);
            dist[i][j] = v;
            dist[j][i] = v;
        }
    }
    dist
}

impl FeatureMap {
    /// Single-linkage agglomerative clustering on correlation distance, cut
    /// top-down until every cluster has at most `max_size` features.
    pub fn build(samples: &[Vec<f64>], max_size: usize) -> FeatureMap {
        let d = samples.first().map_or(0, Vec::len);
        let max_size = max_size.max(1);
        if d == 0 {
            return FeatureMap { clusters: Vec::new() };
        }
        let dist = correlation_distance(samples);

        let mut active: Vec<(Vec<usize>, Dendrogram)> = (0..d).map(|i| (vec![i], Dendrogram::Leaf(i))).collect();
        while active.len() > 1 {
            let mut best = (f64::INFINITY, 0, 1);
            for a in 0..active.len() {
                for b in a + 1..active.len() {
                    let link = active[a]
                        .0
                        .iter()
                        .flat_map(|&i| active[b].0.iter().map(move |&j| (i, j)))
                        .map(|(i, j)| dist[i][j])
                        .fold(f64::INFINITY, f64::min);
                    if link < best.0 {
                        best = (link, a, b);
                    }
                }
            }
            let (_, a, b) = best;
            let (mb, tb) = active.remove(b);
            let (ma, ta) = active.remove(a);
            let size = ta.size() + tb.size();
            let members = ma.into_iter().chain(mb).collect();
            active.insert(a, (members, Dendrogram::Merge(Box::new(ta), Box::new(tb), size)));
        }
        let (_, root) = active.pop().expect("non-empty");
        let mut clusters = Vec::new();
        root.split(max_size, &mut clusters);
        FeatureMap { clusters }
    }

    /// Every index in `0..n` appears in exactly one cluster.
    pub fn is_partition(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for c in &self.clusters {
            if c.is_empty() {
                return false;
            }
            for &i in c {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn gather(&self, cluster: usize, x: &[f64]) -> Vec<f64> {
        self.clusters[cluster].iter().map(|&i| x[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlated_columns_cluster_together() {
        // Columns 0/2 move together, 1/3 move together, independently of each other.
        let samples: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let a = (i % 7) as f64;
                let b = ((i * 3) % 11) as f64;
                vec![a, b, 2.0 * a + 1.0, -b]
            })
            .collect();
        let map = FeatureMap::build(&samples, 2);
        assert!(map.is_partition(4));
        let mut clusters = map.clusters.clone();
        clusters.iter_mut().for_each(|c| c.sort());
        clusters.sort();
        assert_eq!(clusters, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn cluster_size_bound() {
        let samples: Vec<Vec<f64>> = (0..30).map(|i| (0..23).map(|j| ((i * (j + 1)) % 13) as f64).collect()).collect();
        let map = FeatureMap::build(&samples, 10);
        assert!(map.is_partition(23));
        assert!(map.max_cluster_size() <= 10);
    }

    #[test]
    fn constant_columns_are_still_covered() {
        let samples = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let map = FeatureMap::build(&samples, 10);
        assert!(map.is_partition(2));
    }
}
