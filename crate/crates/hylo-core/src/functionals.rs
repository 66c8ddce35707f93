//! Conserved functionals: energy, hylenic charge (both conventions), the
//! hylenic ratio, and the variational gradient of the energy.
//!
//! The energy is E(u) = integral of 1/2 |D^s u|^2 + W(u) dx, where the
//! potential term reads F(u) for real fields and F(|psi|) for complex ones.
//! The two equation families normalize charge differently: the real-field
//! family uses C = 1/2 integral u^2, the complex one C = integral |psi|^2.
//! Both are kept and selected explicitly; Lagrange multipliers differ by a
//! factor 2 between them, so silent inference would corrupt multiplier
//! extraction downstream.

use crate::error::{CoreError, Result};
use crate::field::{Field, FieldKind};
use crate::nonlinearity::Nonlinearity;
use crate::spectral::{fractional_derivative, sobolev_seminorm};

/// Which charge normalization a computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeConvention {
    /// C = 1/2 integral u^2 dx (real unidirectional family).
    Fkdv,
    /// C = integral |psi|^2 dx (complex dispersive family).
    Fns,
}

impl ChargeConvention {
    pub fn charge(self, u: &Field) -> f64 {
        match self {
            ChargeConvention::Fkdv => charge_fkdv(u),
            ChargeConvention::Fns => charge_fns(u),
        }
    }
}

/// C = 1/2 integral u^2 dx; for complex input the modulus squared is used.
pub fn charge_fkdv(u: &Field) -> f64 {
    0.5 * charge_fns(u)
}

/// C = integral |psi|^2 dx.
pub fn charge_fns(u: &Field) -> f64 {
    let dx = u.grid().dx();
    let s: f64 = u.values().iter().map(|c| c.norm_sqr()).sum();
    s * dx
}

/// Gradient of the charge functional under the given convention: u for the
/// real family, 2 psi for the complex one.
pub fn charge_gradient(u: &Field, convention: ChargeConvention) -> Field {
    match convention {
        ChargeConvention::Fkdv => u.scale(1.0),
        ChargeConvention::Fns => u.scale(2.0),
    }
}

/// E(u) = integral 1/2 |D^s u|^2 + W(u) dx with Delta-x quadrature for the
/// potential term and the exact spectral sum for the derivative term.
pub fn energy(u: &Field, s: f64, w: &Nonlinearity) -> Result<f64> {
    let sn = sobolev_seminorm(u, s)?;
    let dx = u.grid().dx();
    let pot: f64 = match u.kind() {
        FieldKind::Real => u.values().iter().map(|c| w.f(c.re)).sum(),
        FieldKind::Complex => u.values().iter().map(|c| w.f(c.norm())).sum(),
    };
    Ok(0.5 * sn * sn + pot * dx)
}

/// The superquadratic part of the energy, integral N(u) dx, so that
/// energy = 1/2 seminorm^2 + e0 ||u||^2 + this.
pub fn nonlinear_energy(u: &Field, w: &Nonlinearity) -> f64 {
    let dx = u.grid().dx();
    let s: f64 = match u.kind() {
        FieldKind::Real => u.values().iter().map(|c| w.n(c.re)).sum(),
        FieldKind::Complex => u.values().iter().map(|c| w.n(c.norm())).sum(),
    };
    s * dx
}

/// Hylenic ratio Lambda = E / C under the chosen convention.
pub fn hylenic_ratio(
    u: &Field,
    s: f64,
    w: &Nonlinearity,
    convention: ChargeConvention,
) -> Result<f64> {
    let c = convention.charge(u);
    if c <= 0.0 {
        return Err(CoreError::ZeroNorm);
    }
    Ok(energy(u, s, w)? / c)
}

/// Variational gradient of the energy: D^{2s} u + W'(u), with the complex
/// gradient F'(|psi|) psi/|psi| extended by zero at psi = 0.
pub fn energy_gradient(u: &Field, s: f64, w: &Nonlinearity) -> Result<Field> {
    let disp = fractional_derivative(u, 2.0 * s)?;
    let nl = match u.kind() {
        FieldKind::Real => u.map_real(|r| w.w_prime_real(r))?,
        FieldKind::Complex => {
            let vals = u.values().iter().map(|&c| w.w_prime_complex(c)).collect();
            Field::complex(u.grid(), vals)?
        }
    };
    disp.axpy(1.0, &nl, 1.0)
}

/// Fraction of the L^2 mass sitting in the outer 10% of the box,
/// |x| >= 0.45 L. Zero for the zero field.
pub fn tail_mass(u: &Field) -> f64 {
    let l = u.grid().length();
    let mut outer = 0.0;
    let mut total = 0.0;
    for (x, c) in u.grid().nodes().iter().zip(u.values()) {
        let m = c.norm_sqr();
        total += m;
        if x.abs() >= 0.45 * l {
            outer += m;
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// Snapshot of the scalar diagnostics of a state. `ratio` is NaN when the
/// charge vanishes.
#[derive(Debug, Clone)]
pub struct FunctionalReport {
    pub energy: f64,
    pub charge: f64,
    pub ratio: f64,
    pub gradient_norm: f64,
    pub tail_mass: f64,
}

pub fn functional_report(
    u: &Field,
    s: f64,
    w: &Nonlinearity,
    convention: ChargeConvention,
) -> Result<FunctionalReport> {
    let e = energy(u, s, w)?;
    let c = convention.charge(u);
    let g = energy_gradient(u, s, w)?;
    Ok(FunctionalReport {
        energy: e,
        charge: c,
        ratio: if c > 0.0 { e / c } else { f64::NAN },
        gradient_norm: g.norm_l2(),
        tail_mass: tail_mass(u),
    })
}
