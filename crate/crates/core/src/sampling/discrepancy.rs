use super::Bounds;

/// Star-discrepancy estimate of `points` after mapping `bounds` to the unit cube.
///
/// Anchored boxes `[0, t)` and `[0, t]` are scanned with corners `t` built from
/// the sample coordinates (and 1). In one and two dimensions every such corner
/// is visited, which gives the exact star discrepancy. In higher dimensions
/// only the corners at the sample points themselves are visited.
pub fn discrepancy_estimate(points: &[Vec<f64>], bounds: &Bounds) -> f64 {
    let unit: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            bounds
                .to_unit(p)
                .into_iter()
                .map(|v| v.clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    if unit.is_empty() {
        return 0.0;
    }
    match bounds.dim() {
        1 => scan_1d(unit.iter().map(|p| p[0]).collect()),
        2 => grid_scan_2d(&unit.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>()),
        _ => point_corner_scan(&unit),
    }
}

fn distinct_with_one(mut v: Vec<f64>) -> Vec<f64> {
    v.push(1.0);
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

fn scan_1d(mut xs: Vec<f64>) -> f64 {
    let n = xs.len() as f64;
    xs.sort_by(|a, b| a.total_cmp(b));
    let mut worst = 1.0 - xs.iter().filter(|x| **x < 1.0).count() as f64 / n;
    for (k, x) in xs.iter().enumerate() {
        let open = xs.partition_point(|v| v < x) as f64;
        worst = worst.max(x - open / n).max((k + 1) as f64 / n - x);
    }
    worst
}

fn grid_scan_2d(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len() as f64;
    let xs = distinct_with_one(pts.iter().map(|p| p[0]).collect());
    let ys = distinct_with_one(pts.iter().map(|p| p[1]).collect());
    let rank = |y: f64| ys.partition_point(|v| *v < y);
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|a, b| pts[*a][0].total_cmp(&pts[*b][0]));

    let mut hist = vec![0usize; ys.len()];
    let mut next = 0;
    let mut worst = 0.0f64;
    for &xt in &xs {
        // points strictly left of xt are in the histogram: open count
        let scan = |hist: &[usize], closed: bool, worst: &mut f64| {
            let mut below = 0usize;
            for (k, &yt) in ys.iter().enumerate() {
                let vol = xt * yt;
                if closed {
                    below += hist[k];
                    *worst = worst.max(below as f64 / n - vol);
                } else {
                    *worst = worst.max(vol - below as f64 / n);
                    below += hist[k];
                }
            }
        };
        scan(&hist, false, &mut worst);
        while next < order.len() && pts[order[next]][0] <= xt {
            hist[rank(pts[order[next]][1])] += 1;
            next += 1;
        }
        scan(&hist, true, &mut worst);
    }
    worst
}

fn point_corner_scan(pts: &[Vec<f64>]) -> f64 {
    let n = pts.len() as f64;
    let mut corners: Vec<Vec<f64>> = pts.to_vec();
    corners.push(vec![1.0; pts[0].len()]);
    let mut worst = 0.0f64;
    for t in &corners {
        let vol: f64 = t.iter().product();
        let closed = pts
            .iter()
            .filter(|p| p.iter().zip(t).all(|(a, b)| a <= b))
            .count() as f64;
        let open = pts
            .iter()
            .filter(|p| p.iter().zip(t).all(|(a, b)| a < b))
            .count() as f64;
        worst = worst.max(closed / n - vol).max(vol - open / n);
    }
    worst
}
