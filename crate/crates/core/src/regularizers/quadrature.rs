use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Points and weights for integrating over `t` in the characteristic-function
/// distance.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Trapezoid rule on `T` evenly spaced points in `[-t_max, t_max]`, each
    /// weight multiplied by the standard normal density at its point.
    pub fn gaussian_trapezoid(num_points: usize, t_max: f64) -> Result<Self> {
        if num_points < 3 || num_points.is_multiple_of(2) || !(t_max > 0.0) {
            return Err(Error::Config(format!(
                "quadrature needs an odd point count >= 3 and t_max > 0, got {num_points}, {t_max}"
            )));
        }
        let step = 2.0 * t_max / (num_points - 1) as f64;
        let mid = (num_points / 2) as f64;
        let points: Vec<f64> = (0..num_points).map(|j| (j as f64 - mid) * step).collect();
        let weights = points
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let end = if j == 0 || j == num_points - 1 { 0.5 } else { 1.0 };
                end * step * (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
            })
            .collect();
        Ok(QuadratureGrid { points, weights })
    }

    /// Arbitrary grid; must be symmetric about zero with positive weights.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::Config("points and weights must be non-empty and equal length".into()));
        }
        let n = points.len();
        for j in 0..n {
            if (points[j] + points[n - 1 - j]).abs() > 1e-12 {
                return Err(Error::Config("quadrature points must be symmetric about 0".into()));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("quadrature weights must be strictly positive".into()));
        }
        Ok(QuadratureGrid { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
