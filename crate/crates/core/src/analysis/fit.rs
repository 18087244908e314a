//! Least-squares trend models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitModel {
    /// `y = sum coefficients[k] * x^(degree - k)`.
    Polynomial { degree: usize },
    /// `y = c * x^n`, coefficients `[c, n]`.
    PowerLaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        match self.model {
            FitModel::Polynomial { .. } => self.coefficients.iter().fold(0.0, |acc, &c| acc * x + c),
            FitModel::PowerLaw => self.coefficients[0] * x.powf(self.coefficients[1]),
        }
    }
}

/// Coefficient of determination; zero total variance counts as a perfect fit.
fn r_squared(ys: &[f64], predicted: impl Iterator<Item = f64>) -> f64 {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).min(1.0)
    }
}

fn check_lengths(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("fit data must be finite".into()));
    }
    Ok(())
}

/// Least-squares polynomial, highest power first.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<FitResult> {
    check_lengths(xs, ys)?;
    if degree == 0 {
        return Err(Error::InvalidArgument("polynomial degree must be at least 1".into()));
    }
    let cols = degree + 1;
    if xs.len() < cols {
        return Err(Error::SingularFit(format!("{} points cannot fix a degree {degree} polynomial", xs.len())));
    }
    let v = DMatrix::from_fn(xs.len(), cols, |r, c| xs[r].powi((degree - c) as i32));
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return Err(Error::SingularFit(format!(
            "Vandermonde matrix is rank deficient (condition {:.3e})",
            smax / smin
        )));
    }
    let coef = svd
        .solve(&DVector::from_column_slice(ys), 0.0)
        .map_err(|e| Error::SingularFit(e.to_string()))?;
    let fit = FitResult {
        model: FitModel::Polynomial { degree },
        coefficients: coef.iter().copied().collect(),
        r_squared: 0.0,
    };
    let r2 = r_squared(ys, xs.iter().map(|&x| fit.predict(x)));
    Ok(FitResult { r_squared: r2, ..fit })
}

/// `y = c x^n` by linear regression of `ln y` on `ln x`; `R^2` is in log space.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_lengths(xs, ys)?;
    if let Some(v) = xs.iter().chain(ys).find(|v| **v <= 0.0) {
        return Err(Error::NonPositiveData(format!("power-law data must be positive, got {v}")));
    }
    if xs.len() < 2 {
        return Err(Error::SingularFit("a power law needs at least two points".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::SingularFit("all x values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let n = sxy / sxx;
    let ln_c = my - n * mx;
    let r2 = r_squared(&ly, lx.iter().map(|x| ln_c + n * x));
    Ok(FitResult {
        model: FitModel::PowerLaw,
        coefficients: vec![ln_c.exp(), n],
        r_squared: r2,
    })
}
