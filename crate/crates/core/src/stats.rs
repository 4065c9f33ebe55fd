//! Small statistics helpers shared by the Monte-Carlo cross-checks.

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Total-variation distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// 4-sigma envelope for the TV distance between an empirical multinomial
/// frequency vector over `draws` samples and its true law `p`: the sum of
/// per-coordinate 4-sigma deviations, halved.
pub fn tv_envelope(p: &[f64], draws: usize) -> f64 {
    let n = draws as f64;
    2.0 * p
        .iter()
        .map(|&pi| (pi.clamp(0.0, 1.0) * (1.0 - pi.clamp(0.0, 1.0)) / n).sqrt())
        .sum::<f64>()
}

/// Empirical frequencies of `draws` over `0..k`.
pub fn frequencies(draws: &[usize], k: usize) -> Vec<f64> {
    let mut counts = vec![0usize; k];
    for &d in draws {
        counts[d] += 1;
    }
    counts
        .into_iter()
        .map(|c| c as f64 / draws.len() as f64)
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Linear-interpolated percentile (`q` in `[0, 1]`) of unsorted data.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
