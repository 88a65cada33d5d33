//! Least-squares slopes and envelopes for the asymptotic checks.

/// Ordinary least squares `y = a + b x`; returns `(b, a)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((b, my - b * mx))
}

/// Slope of `log y` against `log x`. Nonpositive values are rejected.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly).map(|(b, _)| b)
}

/// `n` points from `a` to `b`, equally spaced in `log`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `sup` of `g` over `samples` equally spaced points of `[t, t + window]`.
pub fn windowed_sup(t: f64, window: f64, samples: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
    let samples = samples.max(2);
    (0..samples)
        .map(|i| g(t + window * i as f64 / (samples - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}
