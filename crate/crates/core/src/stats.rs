//! Small estimators shared by the Monte-Carlo modules.

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Weighted mean with a jackknife standard error. Weights need not be
/// normalized.
pub fn weighted_jackknife(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let sw: f64 = weights.iter().sum();
    let swx: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    let mean = swx / sw;
    let n = values.len();
    if n < 2 {
        return (mean, 0.0);
    }
    let loo: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(v, w)| {
            let rest = sw - w;
            if rest > 0.0 {
                (swx - v * w) / rest
            } else {
                mean
            }
        })
        .collect();
    let m = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|x| (x - m).powi(2)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    (mean, var.sqrt())
}

/// Coefficient of determination of the least-squares line `y ~ a x + b`.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return if syy == 0.0 { 1.0 } else { 0.0 };
    }
    sxy * sxy / (sxx * syy)
}

/// Least-squares slope and intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_equal_weights_matches_standard_error() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let w = [1.0; 5];
        let (m1, s1) = weighted_jackknife(&xs, &w);
        let (m2, s2) = mean_stderr(xs.iter().copied());
        assert!((m1 - m2).abs() < 1e-12 && (s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn perfect_line_has_unit_r_squared() {
        assert!((r_squared(&[1.0, 2.0, 3.0], &[5.0, 3.0, 1.0]) - 1.0).abs() < 1e-12);
    }
}
