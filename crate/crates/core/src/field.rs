use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Complex samples laid out in the order of [`GridSpec::positions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::structural(format!(
                "field has {} samples, grid {} needs {}",
                samples.len(),
                grid,
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::structural(format!("sample {i} is not finite")));
        }
        Ok(ComplexField { grid, samples })
    }

    /// Skips the finiteness scan; callers guarantee the length.
    pub(crate) fn from_raw(grid: GridSpec, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        ComplexField { grid, samples }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ComplexField::from_raw(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> Complex64) -> Result<Self> {
        let samples = grid.positions().into_iter().map(f).collect();
        ComplexField::new(grid, samples)
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        ComplexField::new(grid, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexField {
        ComplexField::from_raw(self.grid, self.samples.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, c: f64) -> ComplexField {
        self.map(|z| z * c)
    }

    pub fn modulus(&self) -> ComplexField {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    pub fn norm_sqr_values(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest pointwise modulus of the difference.
    pub fn sup_distance(&self, other: &ComplexField) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(ComplexField::from_raw(
            self.grid,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(ComplexField::from_raw(
            self.grid,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
        ))
    }
}

pub(crate) fn check_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::structural(format!("grid mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Coupling parameters of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub gamma: f64,
    pub mu: f64,
}

impl Params {
    pub fn new(gamma: f64, mu: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::config(format!("gamma must be positive, got {gamma}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::config(format!("mu must be positive, got {mu}")));
        }
        Ok(Params { gamma, mu })
    }
}

/// The pair `(u, v)` at one instant together with `(gamma, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub u: ComplexField,
    pub v: ComplexField,
    pub params: Params,
    pub time: f64,
}

impl StatePair {
    pub fn new(u: ComplexField, v: ComplexField, gamma: f64, mu: f64) -> Result<Self> {
        check_same_grid(u.grid(), v.grid())?;
        Ok(StatePair {
            u,
            v,
            params: Params::new(gamma, mu)?,
            time: 0.0,
        })
    }

    pub fn zeros(grid: GridSpec, gamma: f64, mu: f64) -> Result<Self> {
        StatePair::new(ComplexField::zeros(grid), ComplexField::zeros(grid), gamma, mu)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    pub fn scaled(&self, c: f64) -> StatePair {
        StatePair {
            u: self.u.scale(c),
            v: self.v.scale(c),
            params: self.params,
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// `max(sup|u - u'|, sup|v - v'|)`.
    pub fn sup_distance(&self, other: &StatePair) -> Result<f64> {
        Ok(self.u.sup_distance(&other.u)?.max(self.v.sup_distance(&other.v)?))
    }
}
