/// One-dimensional Lloyd's k-means.
///
/// Centroids start at the `(j + 1/2) / k` quantiles of the sorted data and
/// the iteration stops at an assignment fixpoint or after 100 sweeps. An
/// emptied cluster keeps its previous centroid. Returns `(centroids, labels)`.
pub fn lloyd_1d(data: &[f64], k: usize) -> (Vec<f64>, Vec<usize>) {
    assert!(k >= 1 && k <= data.len(), "need 1 <= k <= n");
    let n = data.len();
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut centroids: Vec<f64> = (0..k)
        .map(|j| {
            let idx = (((j as f64 + 0.5) / k as f64) * n as f64).floor() as usize;
            sorted[idx.min(n - 1)]
        })
        .collect();

    let nearest = |y: f64, centroids: &[f64]| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.iter().enumerate() {
            let d = (y - c).abs();
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        best
    };

    let mut labels: Vec<usize> = data.iter().map(|&y| nearest(y, &centroids)).collect();
    for _ in 0..100 {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&y, &l) in data.iter().zip(&labels) {
            sums[l] += y;
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = data.iter().map(|&y| nearest(y, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    (centroids, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cluster_is_the_mean() {
        let data = [1.0, 2.0, 6.0];
        let (c, l) = lloyd_1d(&data, 1);
        assert_eq!(c, vec![3.0]);
        assert_eq!(l, vec![0, 0, 0]);
    }

    #[test]
    fn recovers_separated_spikes() {
        // Ten spikes of five points each; jitter is symmetric so every spike
        // mean equals its location exactly.
        let spikes: Vec<f64> = (0..10).map(|j| 100.0 * j as f64 - 250.0).collect();
        let mut data = Vec::new();
        for &s in &spikes {
            for d in [-0.2, -0.1, 0.0, 0.1, 0.2] {
                data.push(s + d);
            }
        }
        data.reverse();
        let (c, labels) = lloyd_1d(&data, 10);
        for (got, want) in c.iter().zip(&spikes) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        for (y, l) in data.iter().zip(&labels) {
            assert!((y - spikes[*l]).abs() < 1.0);
        }
    }

    #[test]
    fn galaxy_centroids_are_ordered_and_inside_range() {
        let d = crate::Dataset::galaxy();
        let (c, _) = lloyd_1d(d.values(), 10);
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.iter().all(|x| (d.min()..=d.max()).contains(x)));
    }
}
