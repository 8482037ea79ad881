use crate::scalar::wrap_angle;

/// Angular distance on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// DBSCAN on headings with the wrapped angular metric.
///
/// Returns one label per heading: `Some(cluster)` with clusters numbered from
/// zero in discovery order, or `None` for noise. A point's neighborhood
/// includes the point itself.
pub fn circular_dbscan(headings: &[f64], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = headings.len();
    let region = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| circular_distance(headings[i], headings[j]) <= eps)
            .collect()
    };
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next_cluster = 0;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = region(i);
        if seeds.len() < min_pts {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[i] = Some(cluster);
        let mut queue = seeds;
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            if labels[q].is_none() {
                labels[q] = Some(cluster);
            }
            if visited[q] {
                continue;
            }
            visited[q] = true;
            let more = region(q);
            if more.len() >= min_pts {
                queue.extend(more);
            }
        }
    }
    labels
}

pub fn cluster_count(labels: &[Option<usize>]) -> usize {
    labels.iter().flatten().max().map_or(0, |m| m + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identical_headings_single_cluster() {
        let l = circular_dbscan(&[0.7; 10], 0.1, 3);
        assert_eq!(cluster_count(&l), 1);
        assert!(l.iter().all(|x| *x == Some(0)));
    }

    #[test]
    fn opposite_bundles() {
        let mut h: Vec<f64> = (0..8).map(|k| 0.01 * k as f64).collect();
        h.extend((0..8).map(|k| PI - 0.01 * k as f64));
        let l = circular_dbscan(&h, 0.2, 3);
        assert_eq!(cluster_count(&l), 2);
        assert!(l[..8].iter().all(|x| *x == Some(0)));
        assert!(l[8..].iter().all(|x| *x == Some(1)));
    }

    #[test]
    fn cluster_spans_the_wrap() {
        let h = [3.10, -3.10, 3.12, 3.13, -3.12, -3.13];
        let l = circular_dbscan(&h, 0.2, 3);
        assert_eq!(cluster_count(&l), 1);
        assert!(l.iter().all(Option::is_some));
    }

    #[test]
    fn sparse_points_are_noise() {
        let h: Vec<f64> = (0..12).map(|k| -PI + 0.5 * k as f64).collect();
        let l = circular_dbscan(&h, 0.01, 5);
        assert_eq!(cluster_count(&l), 0);
        assert!(l.iter().all(Option::is_none));
    }

    #[test]
    fn border_point_joins_cluster() {
        // the last point has only one neighbor but that neighbor is core
        let h = [0.0, 0.05, 0.1, 0.15, 0.33];
        let l = circular_dbscan(&h, 0.2, 3);
        assert_eq!(l[4], Some(0));
    }

    #[test]
    fn invariant_to_full_turns() {
        let h = [0.1, 0.15, 2.0, 2.05, 2.1, -3.1, 3.1, 3.05];
        let shifted: Vec<f64> = h
            .iter()
            .enumerate()
            .map(|(i, x)| x + 2.0 * PI * (i % 3) as f64)
            .collect();
        assert_eq!(circular_dbscan(&h, 0.2, 2), circular_dbscan(&shifted, 0.2, 2));
    }
}
