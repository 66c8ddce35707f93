//! Time integration for both equation families.
//!
//! The real unidirectional family u_t + d/dx [D^{2s} u + W'(u)] = 0 is
//! advanced by integrating-factor RK4: the stiff linear phase
//! e^{-i xi |xi|^{2s} dt} is applied exactly in spectral space and only the
//! nonlinear transport is handled by RK4, so dt is not slaved to the
//! N^{-(2s+1)} dispersive scale.
//!
//! The complex dispersive family i psi_t = 1/2 D^{2s} psi + 1/2 W'(psi) is
//! advanced by Strang splitting. The nonlinear sub-flow preserves |psi|
//! pointwise, so its half-steps are the exact phase rotation
//! e^{-i (dt/2) F'(|psi|) / (2 |psi|)}; the linear sub-flow is the exact
//! multiplier e^{-i |xi|^{2s} dt / 2}. Splitting with -dt inverts a step
//! exactly, which the reversibility tests exploit.

use num_complex::Complex64;
use thiserror::Error;

use crate::error::{CoreError, Result};
use crate::field::{Field, FieldKind};
use crate::functionals::{charge_fkdv, charge_fns, energy, tail_mass};
use crate::grid::Grid;
use crate::nonlinearity::Nonlinearity;
use crate::spectral::{dealias_spectrum, derivative_x, fractional_derivative};

/// Which equation family a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Fkdv,
    Fns,
}

/// Amplitude growth factor within a single step that is treated as blow-up.
pub const BLOW_UP_GROWTH: f64 = 1e6;

/// Tail-mass fraction above which a run warns that the box is too small.
pub const TAIL_WARNING_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(
        "blow-up detected at t = {time:.6} (step {step}): amplitude grew by more \
         than a factor {BLOW_UP_GROWTH:.0e} in one step or left the finite range"
    )]
    BlowUp {
        time: f64,
        step: usize,
        /// Everything sampled before the failure; its `final_state` is the
        /// last state with finite amplitude, for post-mortem inspection.
        partial: Box<EvolutionTrace>,
    },
}

/// Run configuration. The grid is part of the configuration and the initial
/// state must live on it.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub family: Family,
    pub s: f64,
    pub w: Nonlinearity,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    /// Sample energy, charge, tail mass and a snapshot every this many steps.
    pub snapshot_stride: usize,
    /// Apply the 2/3 rule before evaluating W'(u) in the real family.
    /// The complex family's nonlinear substep is an exact pointwise
    /// isometry, so it is never truncated and this flag does not affect it.
    pub dealias: bool,
}

/// Measured series from a run. Drifts are defined relative to the t = 0
/// values.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub charge: Vec<f64>,
    pub tail: Vec<f64>,
    pub snapshots: Vec<(f64, Field)>,
    pub warnings: Vec<String>,
    pub final_state: Field,
}

impl EvolutionTrace {
    fn relative_drift(series: &[f64]) -> f64 {
        let Some(&first) = series.first() else {
            return 0.0;
        };
        let scale = first.abs().max(f64::MIN_POSITIVE);
        series
            .iter()
            .map(|v| (v - first).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest relative excursion of the energy series from its t=0 value.
    pub fn energy_drift(&self) -> f64 {
        Self::relative_drift(&self.energy)
    }

    /// Largest relative excursion of the charge series from its t=0 value.
    pub fn charge_drift(&self) -> f64 {
        Self::relative_drift(&self.charge)
    }
}

/// Advisory time-step ceiling 1 / max |W''(u0)| for the nonlinear phase;
/// infinite when the potential is quadratic-free along the state.
pub fn dt_advisory(u: &Field, w: &Nonlinearity) -> f64 {
    let m = u
        .values()
        .iter()
        .map(|c| {
            let r = match u.kind() {
                FieldKind::Real => c.re,
                FieldKind::Complex => c.norm(),
            };
            w.f_second(r).abs()
        })
        .fold(0.0, f64::max);
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// Integrating-factor RK4 stepper for the real family, with the linear
/// phases precomputed for a fixed dt.
pub struct FkdvStepper {
    grid: Grid,
    w: Nonlinearity,
    dt: f64,
    dealias: bool,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
}

impl FkdvStepper {
    pub fn new(grid: &Grid, s: f64, w: &Nonlinearity, dt: f64, dealias: bool) -> Result<Self> {
        if !(s.is_finite() && s >= 0.5) {
            return Err(CoreError::Invalid(format!(
                "evolution requires fractional order s >= 0.5, got {s}"
            )));
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(CoreError::Invalid(format!(
                "time step must be finite and nonzero, got {dt}"
            )));
        }
        let nyq = grid.nyquist_index();
        let phase = |frac: f64| -> Vec<Complex64> {
            grid.wavenumbers()
                .iter()
                .enumerate()
                .map(|(j, &xi)| {
                    // The unpaired Nyquist mode carries no propagation
                    // direction; it is dropped so real states stay real.
                    if j == nyq {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::from_polar(1.0, -xi * xi.abs().powf(2.0 * s) * dt * frac)
                    }
                })
                .collect()
        };
        Ok(FkdvStepper {
            grid: grid.clone(),
            w: w.clone(),
            dt,
            dealias,
            e_half: phase(0.5),
            e_full: phase(1.0),
        })
    }

    /// Spectral image of -d/dx W'(u) for the state with spectrum `spec`.
    fn nonlinear(&self, spec: &[Complex64]) -> Vec<Complex64> {
        let vals = self.grid.inverse(spec);
        let wp: Vec<Complex64> = vals
            .iter()
            .map(|c| Complex64::new(self.w.w_prime_real(c.re), 0.0))
            .collect();
        let mut out = self.grid.forward(&wp);
        if self.dealias {
            dealias_spectrum(&self.grid, &mut out);
        }
        let nyq = self.grid.nyquist_index();
        for (j, (o, &xi)) in out.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            *o = if j == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                *o * Complex64::new(0.0, -xi)
            };
        }
        out
    }

    /// One RK4 step in integrating-factor variables, in place on a spectrum.
    pub fn step_spectrum(&self, spec: &mut [Complex64]) {
        let n = spec.len();
        let dt = self.dt;
        let a = self.nonlinear(spec);

        let mut stage: Vec<Complex64> = (0..n)
            .map(|j| self.e_half[j] * (spec[j] + a[j] * (dt / 2.0)))
            .collect();
        let b = self.nonlinear(&stage);

        for (j, v) in stage.iter_mut().enumerate() {
            *v = self.e_half[j] * spec[j] + b[j] * (dt / 2.0);
        }
        let c = self.nonlinear(&stage);

        for (j, v) in stage.iter_mut().enumerate() {
            *v = self.e_full[j] * spec[j] + self.e_half[j] * c[j] * dt;
        }
        let d = self.nonlinear(&stage);

        for j in 0..n {
            spec[j] = self.e_full[j] * spec[j]
                + (self.e_full[j] * a[j]
                    + (b[j] + c[j]) * self.e_half[j] * 2.0
                    + d[j])
                    * (dt / 6.0);
        }
    }

    pub fn step_field(&self, u: &Field) -> Result<Field> {
        if !u.is_real() {
            return Err(CoreError::ComplexField);
        }
        self.grid.same_as(u.grid())?;
        let mut spec = u.spectrum().to_vec();
        self.step_spectrum(&mut spec);
        Field::from_spectrum(&self.grid, spec, FieldKind::Real)
    }
}

/// Strang splitting stepper for the complex family.
pub struct FnsStepper {
    grid: Grid,
    w: Nonlinearity,
    dt: f64,
    e_lin: Vec<Complex64>,
}

impl FnsStepper {
    pub fn new(grid: &Grid, s: f64, w: &Nonlinearity, dt: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.5) {
            return Err(CoreError::Invalid(format!(
                "evolution requires fractional order s >= 0.5, got {s}"
            )));
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(CoreError::Invalid(format!(
                "time step must be finite and nonzero, got {dt}"
            )));
        }
        let e_lin = grid
            .wavenumbers()
            .iter()
            .map(|&xi| Complex64::from_polar(1.0, -xi.abs().powf(2.0 * s) * dt / 2.0))
            .collect();
        Ok(FnsStepper {
            grid: grid.clone(),
            w: w.clone(),
            dt,
            e_lin,
        })
    }

    fn half_phase(&self, vals: &mut [Complex64]) {
        for v in vals.iter_mut() {
            let a = v.norm();
            if a > 0.0 {
                let rate = self.w.f_prime(a) / (2.0 * a);
                *v *= Complex64::from_polar(1.0, -rate * self.dt / 2.0);
            }
        }
    }

    /// One Strang step on physical-space values, in place.
    pub fn step_values(&self, vals: &mut [Complex64]) {
        self.half_phase(vals);
        let mut spec = self.grid.forward(vals);
        for (c, e) in spec.iter_mut().zip(self.e_lin.iter()) {
            *c *= e;
        }
        let back = self.grid.inverse(&spec);
        vals.copy_from_slice(&back);
        self.half_phase(vals);
    }

    pub fn step_field(&self, psi: &Field) -> Result<Field> {
        self.grid.same_as(psi.grid())?;
        let mut vals = psi.values().to_vec();
        self.step_values(&mut vals);
        Field::complex(&self.grid, vals)
    }
}

/// One integrating-factor RK4 step of the real family.
pub fn step_fkdv(u: &Field, dt: f64, s: f64, w: &Nonlinearity) -> Result<Field> {
    FkdvStepper::new(u.grid(), s, w, dt, true)?.step_field(u)
}

/// One Strang step of the complex family.
pub fn step_fns(psi: &Field, dt: f64, s: f64, w: &Nonlinearity) -> Result<Field> {
    FnsStepper::new(psi.grid(), s, w, dt)?.step_field(psi)
}

enum Stepper {
    Fkdv(FkdvStepper),
    Fns(FnsStepper),
}

/// Integrates the configured family from `u0`, sampling conserved
/// quantities every `snapshot_stride` steps and always at the endpoints.
pub fn run(config: &EvolutionConfig, u0: &Field) -> std::result::Result<EvolutionTrace, EvolveError> {
    config.grid.same_as(u0.grid()).map_err(CoreError::from)?;
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(CoreError::Invalid(format!(
            "run requires dt > 0, got {}",
            config.dt
        ))
        .into());
    }
    if !(config.t_end.is_finite() && config.t_end > 0.0) {
        return Err(CoreError::Invalid(format!(
            "run requires t_end > 0, got {}",
            config.t_end
        ))
        .into());
    }
    if config.snapshot_stride == 0 {
        return Err(CoreError::Invalid("snapshot stride must be at least 1".into()).into());
    }
    if config.family == Family::Fkdv && !u0.is_real() {
        return Err(CoreError::ComplexField.into());
    }

    let mut warnings = Vec::new();
    let n_steps = (config.t_end / config.dt).round().max(1.0) as usize;
    if ((n_steps as f64) * config.dt - config.t_end).abs() > 1e-9 * config.t_end.max(1.0) {
        warnings.push(format!(
            "t_end {} is not a multiple of dt {}; integrating to {}",
            config.t_end,
            config.dt,
            n_steps as f64 * config.dt
        ));
    }
    let advisory = dt_advisory(u0, &config.w);
    if config.dt > advisory {
        warnings.push(format!(
            "dt {} exceeds the advisory ceiling 1/max|W''(u0)| = {advisory:.6e}; \
             the nonlinear phase may be under-resolved",
            config.dt
        ));
    }

    let stepper = match config.family {
        Family::Fkdv => Stepper::Fkdv(FkdvStepper::new(
            &config.grid,
            config.s,
            &config.w,
            config.dt,
            config.dealias,
        )?),
        Family::Fns => Stepper::Fns(FnsStepper::new(
            &config.grid,
            config.s,
            &config.w,
            config.dt,
        )?),
    };

    let conserved_charge = match config.family {
        Family::Fkdv => charge_fkdv,
        Family::Fns => charge_fns,
    };

    let mut trace = EvolutionTrace {
        times: Vec::new(),
        energy: Vec::new(),
        charge: Vec::new(),
        tail: Vec::new(),
        snapshots: Vec::new(),
        warnings,
        final_state: u0.clone(),
    };
    let mut tail_warned = false;
    let mut sample = |trace: &mut EvolutionTrace, t: f64, state: &Field| -> Result<()> {
        let tm = tail_mass(state);
        trace.times.push(t);
        trace.energy.push(energy(state, config.s, &config.w)?);
        trace.charge.push(conserved_charge(state));
        trace.tail.push(tm);
        trace.snapshots.push((t, state.clone()));
        if tm > TAIL_WARNING_THRESHOLD && !tail_warned {
            tail_warned = true;
            trace.warnings.push(format!(
                "tail mass {tm:.3e} exceeds {TAIL_WARNING_THRESHOLD:.0e} at t = {t:.4}; \
                 the box is likely too small for this state"
            ));
        }
        Ok(())
    };

    sample(&mut trace, 0.0, u0)?;

    // The integrators work on their natural representation between samples.
    let mut spec: Vec<Complex64>;
    let mut vals: Vec<Complex64>;
    match &stepper {
        Stepper::Fkdv(_) => {
            spec = u0.spectrum().to_vec();
            vals = Vec::new();
        }
        Stepper::Fns(_) => {
            vals = u0.values().to_vec();
            spec = Vec::new();
        }
    }
    let mut prev_max = u0.norm_max();
    let mut last_finite = u0.clone();

    for step in 1..=n_steps {
        let state = match &stepper {
            Stepper::Fkdv(st) => {
                st.step_spectrum(&mut spec);
                Field::from_spectrum(&config.grid, spec.clone(), FieldKind::Real)?
            }
            Stepper::Fns(st) => {
                st.step_values(&mut vals);
                Field::complex(&config.grid, vals.clone())?
            }
        };
        let t = step as f64 * config.dt;
        let new_max = state.norm_max();
        if !new_max.is_finite() || (prev_max > 0.0 && new_max > BLOW_UP_GROWTH * prev_max) {
            // Close the partial record at the last finite state so callers
            // can emit a post-mortem report.
            let t_last = (step - 1) as f64 * config.dt;
            if trace.times.last() != Some(&t_last) {
                let _ = sample(&mut trace, t_last, &last_finite);
            }
            trace.final_state = last_finite;
            return Err(EvolveError::BlowUp {
                time: t,
                step,
                partial: Box::new(trace),
            });
        }
        prev_max = new_max;
        last_finite = state.clone();
        if step % config.snapshot_stride == 0 || step == n_steps {
            sample(&mut trace, t, &state)?;
        }
        trace.final_state = state;
    }
    Ok(trace)
}

/// Discrete weak-form residual for a snapshot pair: with the midpoint state
/// u = (prev + next)/2 and the central difference du = (next - prev)/dt,
///     residual(phi) = integral [ du phi - u d/dx D^{2s} phi
///                                - W'(u) d/dx phi ] dx,
/// which vanishes to O(dt^2) plus integrator error when the pair comes from
/// a solution of the real family and phi is a smooth test function.
pub fn weak_residual(
    prev: &Field,
    next: &Field,
    dt: f64,
    s: f64,
    w: &Nonlinearity,
    phi: &Field,
) -> Result<f64> {
    prev.grid().same_as(next.grid())?;
    prev.grid().same_as(phi.grid())?;
    if !(prev.is_real() && next.is_real() && phi.is_real()) {
        return Err(CoreError::ComplexField);
    }
    if !(dt.is_finite() && dt != 0.0) {
        return Err(CoreError::Invalid(format!(
            "weak residual needs a finite nonzero dt, got {dt}"
        )));
    }
    let du = next.axpy(1.0 / dt, prev, -1.0 / dt)?;
    let mid = next.axpy(0.5, prev, 0.5)?;
    let dphi = derivative_x(phi);
    let dispersed_phi = derivative_x(&fractional_derivative(phi, 2.0 * s)?);
    let wp = mid.map_real(|r| w.w_prime_real(r))?;
    let term1 = du.inner(phi)?.re;
    let term2 = mid.inner(&dispersed_phi)?.re;
    let term3 = wp.inner(&dphi)?.re;
    Ok(term1 - term2 - term3)
}
