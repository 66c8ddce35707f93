//! Sampled fields on a periodic grid.
//!
//! A field stores complex samples together with a realness tag. Real-valued
//! model states (the unidirectional wave equations) keep the tag `Real` and
//! every operation that preserves realness writes exact zeros into the
//! imaginary parts, so the invariant is "identically zero", not "small".
//! The spectrum is computed lazily once and shared between consumers.

use num_complex::Complex64;
use std::sync::{Arc, OnceLock};

use crate::error::{CoreError, Result};
use crate::grid::Grid;

/// Whether a field is known to represent a real-valued function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
}

/// A grid function with cached spectrum.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    kind: FieldKind,
    values: Arc<Vec<Complex64>>,
    spectrum: Arc<OnceLock<Vec<Complex64>>>,
}

impl Field {
    /// Real field from real samples.
    pub fn real(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(CoreError::GridMismatch(grid.points(), values.len()));
        }
        let vals = values
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect();
        Ok(Field {
            grid: grid.clone(),
            kind: FieldKind::Real,
            values: Arc::new(vals),
            spectrum: Arc::new(OnceLock::new()),
        })
    }

    /// Complex field from complex samples.
    pub fn complex(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(CoreError::GridMismatch(grid.points(), values.len()));
        }
        Ok(Field {
            grid: grid.clone(),
            kind: FieldKind::Complex,
            values: Arc::new(values),
            spectrum: Arc::new(OnceLock::new()),
        })
    }

    /// Real field sampled from a closure of position.
    pub fn sample_real(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let vals = grid.nodes().iter().map(|&x| f(x)).collect();
        Field::real(grid, vals).expect("sampled length matches grid")
    }

    /// Complex field sampled from a closure of position.
    pub fn sample_complex(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let vals = grid.nodes().iter().map(|&x| f(x)).collect();
        Field::complex(grid, vals).expect("sampled length matches grid")
    }

    /// Field from an already-computed spectrum (FFT storage order, forward
    /// normalization). `kind` asserts what the caller knows about realness;
    /// a `Real` claim is enforced by conjugate-symmetrizing nothing, the
    /// inverse transform output simply has its imaginary dust dropped.
    pub fn from_spectrum(grid: &Grid, spectrum: Vec<Complex64>, kind: FieldKind) -> Result<Self> {
        if spectrum.len() != grid.points() {
            return Err(CoreError::GridMismatch(grid.points(), spectrum.len()));
        }
        let raw = grid.inverse(&spectrum);
        let values = match kind {
            FieldKind::Real => raw
                .into_iter()
                .map(|c| Complex64::new(c.re, 0.0))
                .collect(),
            FieldKind::Complex => raw,
        };
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Ok(Field {
            grid: grid.clone(),
            kind,
            values: Arc::new(values),
            spectrum: Arc::new(cell),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn is_real(&self) -> bool {
        self.kind == FieldKind::Real
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Real parts of the samples; valid as "the field" only when `is_real`.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    /// The field's spectrum in FFT storage order, computed once.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.values))
    }

    /// L2 inner product <u, v> = dx * sum conj(u_j) v_j.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.grid.same_as(other.grid())?;
        let dx = self.grid.dx();
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc * dx)
    }

    /// L2 norm, dx-weighted.
    pub fn norm_l2(&self) -> f64 {
        let dx = self.grid.dx();
        let s: f64 = self.values.iter().map(|c| c.norm_sqr()).sum();
        (s * dx).sqrt()
    }

    /// Max of |u_j| over the grid.
    pub fn norm_max(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Pointwise map preserving the realness tag; the closure must map real
    /// inputs to real outputs when the field is tagged real.
    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        if self.kind != FieldKind::Real {
            return Err(CoreError::ComplexField);
        }
        let vals = self.values.iter().map(|c| f(c.re)).collect();
        Field::real(&self.grid, vals)
    }

    /// Linear combination a*self + b*other; result is real only when both are.
    pub fn axpy(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.grid.same_as(other.grid())?;
        let vals: Vec<Complex64> = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(u, v)| u * a + v * b)
            .collect();
        if self.kind == FieldKind::Real && other.kind == FieldKind::Real {
            Field::real(&self.grid, vals.into_iter().map(|c| c.re).collect())
        } else {
            Field::complex(&self.grid, vals)
        }
    }

    /// Scalar multiple.
    pub fn scale(&self, a: f64) -> Field {
        match self.kind {
            FieldKind::Real => {
                let vals = self.values.iter().map(|c| c.re * a).collect();
                Field::real(&self.grid, vals).expect("same grid")
            }
            FieldKind::Complex => {
                let vals = self.values.iter().map(|c| c * a).collect();
                Field::complex(&self.grid, vals).expect("same grid")
            }
        }
    }

    /// Translate by tau via the spectral shift e^{-i xi tau}; exact for
    /// trigonometric interpolants and exactly periodic.
    pub fn translate(&self, tau: f64) -> Field {
        let xi = self.grid.wavenumbers();
        let shifted: Vec<Complex64> = self
            .spectrum()
            .iter()
            .zip(xi.iter())
            .map(|(c, &k)| c * Complex64::from_polar(1.0, -k * tau))
            .collect();
        Field::from_spectrum(&self.grid, shifted, self.kind).expect("same grid")
    }
}
