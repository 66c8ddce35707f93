//! Fourier multiplier operators: fractional derivatives, the Hilbert
//! transform, the spectral x-derivative, Sobolev seminorms, and the 2/3-rule
//! dealiasing mask.
//!
//! Odd symbols (i*xi and -i*sgn xi) zero the unpaired Nyquist mode so that
//! real inputs map to exactly real outputs; the even symbol |xi|^s keeps it.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::Field;
use crate::grid::Grid;

fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s >= 0.0 {
        Ok(())
    } else {
        Err(CoreError::BadOrder(s))
    }
}

fn apply_even_symbol(u: &Field, sym: impl Fn(f64) -> f64) -> Field {
    let grid = u.grid();
    let spec: Vec<Complex64> = u
        .spectrum()
        .iter()
        .zip(grid.wavenumbers().iter())
        .map(|(c, &xi)| c * sym(xi))
        .collect();
    Field::from_spectrum(grid, spec, u.kind()).expect("same grid")
}

fn apply_odd_symbol(u: &Field, sym: impl Fn(f64) -> f64) -> Field {
    let grid = u.grid();
    let nyq = grid.nyquist_index();
    let spec: Vec<Complex64> = u
        .spectrum()
        .iter()
        .zip(grid.wavenumbers().iter())
        .enumerate()
        .map(|(j, (c, &xi))| {
            if j == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, sym(xi))
            }
        })
        .collect();
    Field::from_spectrum(grid, spec, u.kind()).expect("same grid")
}

/// Riesz fractional derivative D^s with symbol |xi|^s. For s = 0 this is the
/// identity (the zero mode uses the convention 0^0 = 1).
pub fn fractional_derivative(u: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    Ok(apply_even_symbol(u, |xi| xi.abs().powf(s)))
}

/// Periodic Hilbert transform with symbol -i sgn(xi); sgn(0) = 0, so the mean
/// is annihilated. H(cos) = sin at any resolved wavenumber.
pub fn hilbert_transform(u: &Field) -> Field {
    apply_odd_symbol(u, |xi| -sgn(xi))
}

/// Spectral first derivative with symbol i xi.
pub fn derivative_x(u: &Field) -> Field {
    apply_odd_symbol(u, |xi| xi)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Homogeneous Sobolev seminorm |u|_{H^s} = sqrt(L * sum |xi|^{2s} |u_hat|^2),
/// equal to the L2 norm of D^s u with the zero mode discarded.
pub fn sobolev_seminorm(u: &Field, s: f64) -> Result<f64> {
    check_order(s)?;
    let grid = u.grid();
    let sum: f64 = u
        .spectrum()
        .iter()
        .zip(grid.wavenumbers().iter())
        .map(|(c, &xi)| {
            if xi == 0.0 {
                0.0
            } else {
                xi.abs().powf(2.0 * s) * c.norm_sqr()
            }
        })
        .sum();
    Ok((grid.length() * sum).sqrt())
}

/// Zeroes every spectral coefficient with integer wavenumber |k| >= N/3
/// in place (the 2/3 rule), which suppresses aliasing of quadratic products.
pub fn dealias_spectrum(grid: &Grid, spectrum: &mut [Complex64]) {
    let n = grid.points() as i64;
    let cutoff = n as f64 / 3.0;
    for (j, c) in spectrum.iter_mut().enumerate() {
        let k = if (j as i64) < n / 2 {
            j as i64
        } else {
            j as i64 - n
        };
        if (k.abs() as f64) >= cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Dealiased copy of a field.
pub fn dealias(u: &Field) -> Field {
    let grid = u.grid();
    let mut spec = u.spectrum().to_vec();
    dealias_spectrum(grid, &mut spec);
    Field::from_spectrum(grid, spec, u.kind()).expect("same grid")
}

/// The composite operator D = H d/dx, used by the Benjamin-Ono dispersion
/// term; agrees with `fractional_derivative(u, 1.0)` away from the Nyquist
/// mode.
pub fn hilbert_derivative(u: &Field) -> Field {
    derivative_x(&hilbert_transform(u))
}
