//! Least-squares fits for convergence traces.

/// `y ≈ slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares on `(x, y)` pairs. `None` with fewer than two
/// points or constant `x`. `R² = 1` when `y` is constant and fitted exactly.
pub fn linear_fit(points: impl IntoIterator<Item = (f64, f64)>) -> Option<LinearFit> {
    let pts: alloc::vec::Vec<(f64, f64)> = points.into_iter().collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        points: n,
    })
}

/// Fit of `ln v` against index over the positive, finite entries of
/// `values[start..]`.
pub fn log_linear_fit(values: &[f64], start: usize) -> Option<LinearFit> {
    linear_fit(
        values
            .iter()
            .enumerate()
            .skip(start)
            .filter(|(_, v)| **v > 0.0 && v.is_finite())
            .map(|(k, v)| (k as f64, libm::log(*v))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn exact_line() {
        let f = linear_fit((0..10).map(|i| (i as f64, 3.0 * i as f64 - 2.0))).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_decay() {
        let v: Vec<f64> = (0..50).map(|k| 2.0 * libm::pow(0.9, k as f64)).collect();
        let f = log_linear_fit(&v, 10).unwrap();
        assert!((f.slope - libm::log(0.9)).abs() < 1e-12);
        assert_eq!(f.points, 40);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit([(1.0, 2.0)]).is_none());
        assert!(linear_fit([(1.0, 2.0), (1.0, 3.0)]).is_none());
        assert!(log_linear_fit(&[0.0, 0.0, 0.0], 0).is_none());
    }

    #[test]
    fn noisy_fit_has_lower_r2() {
        let f = linear_fit((0..20).map(|i| (i as f64, if i % 2 == 0 { 1.0 } else { -1.0 }))).unwrap();
        assert!(f.r_squared < 0.1);
    }
}
