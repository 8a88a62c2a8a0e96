//! Least-squares slope fits in log-log coordinates.

use serde::{Deserialize, Serialize};

/// An ordinary least-squares line through (log-radius, log-quantity) pairs.
/// `r2` is the usual goodness of fit; a degenerate fit (no variance in y,
/// e.g. a periodic point giving constant return times) reports r2 = 0 so it
/// is visibly flagged rather than spuriously perfect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub(crate) fn fit_line(points: Vec<(f64, f64)>) -> SlopeEstimate {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r2 = if ss_tot <= 1e-24 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    };
    SlopeEstimate {
        points,
        slope,
        intercept,
        r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line_recovered() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 + 2.0 * i as f64)).collect();
        let fit = fit_line(pts);
        assert_relative_eq!(fit.slope, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_y_is_flagged_degenerate() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 4.0)).collect();
        let fit = fit_line(pts);
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 0.0);
    }
}
