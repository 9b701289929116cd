//! Least squares and small summary statistics.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the fit residuals.
    pub slope_se: f64,
    pub n: usize,
}

/// Ordinary least squares `y ~ slope * x + intercept`. Needs at least three
/// points with distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - slope * a - intercept;
            r * r
        })
        .sum();
    let slope_se = libm::sqrt(ss / (n as f64 - 2.0) / sxx);
    Some(LinearFit { slope, intercept, slope_se, n })
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_zero_error() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.0).abs() < 1e-14);
        assert!(fit.slope_se < 1e-12);
    }

    #[test]
    fn standard_error_matches_textbook_value() {
        // residuals +-0.1 alternating on x = 0..4
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.1, 0.9, 2.1, 2.9, 4.1];
        let fit = linear_fit(&x, &y).unwrap();
        let r: f64 = x.iter().zip(&y).map(|(a, b)| (b - fit.slope * a - fit.intercept).powi(2)).sum();
        let want = (r / 3.0 / 10.0).sqrt();
        assert!((fit.slope_se - want).abs() < 1e-14);
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_none());
    }
}
