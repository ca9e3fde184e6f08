//! Least-squares line fits used for extrapolation and scaling exponents.

use serde::{Deserialize, Serialize};

/// Result of fitting `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

/// Ordinary least squares. Needs at least two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Some(LineFit {
        intercept,
        slope,
        rms_residual: (ss / nf).sqrt(),
    })
}

/// Outcome of a power-law fit `y ~ C x^p` in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExponentFit {
    Fitted {
        exponent: f64,
        log_prefactor: f64,
        rms_residual: f64,
    },
    /// All samples are (numerically) zero, so no exponent is defined.
    Degenerate,
}

impl ExponentFit {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            ExponentFit::Fitted { exponent, .. } => Some(*exponent),
            ExponentFit::Degenerate => None,
        }
    }
}

/// Fits `log|y|` against `log x`. Samples with `|y| <= floor` make the fit degenerate
/// when all of them are below it; otherwise they are dropped.
pub fn fit_exponent(xs: &[f64], ys: &[f64], floor: f64) -> ExponentFit {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.abs() > floor)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .unzip();
    match fit_line(&lx, &ly) {
        Some(fit) => ExponentFit::Fitted {
            exponent: fit.slope,
            log_prefactor: fit.intercept,
            rms_residual: fit.rms_residual,
        },
        None => ExponentFit::Degenerate,
    }
}
