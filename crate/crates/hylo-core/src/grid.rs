//! Periodic collocation grid and the transform plumbing behind it.
//!
//! Nodes are x_j = -L/2 + j L/N and the dual wavenumbers are xi_k = 2 pi k / L
//! with k running over -N/2 .. N/2-1 in FFT storage order. The forward
//! transform carries the 1/N normalization, so the discrete Parseval identity
//! reads dx * sum |u_j|^2 = L * sum |u_hat_k|^2 and quadrature sums with
//! weight dx are consistent with spectral sums weighted by L.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{CoreError, Result};

/// A uniform periodic grid on [-L/2, L/2).
#[derive(Debug, Clone)]
pub struct Grid {
    length: f64,
    points: usize,
    nodes: Arc<Vec<f64>>,
    wavenumbers: Arc<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.points == other.points
    }
}

/// Builds a grid; the point count must be even and at least 8 so the
/// wavenumber set splits symmetrically around zero with a single Nyquist mode.
pub fn make_grid(length: f64, points: usize) -> Result<Grid> {
    if !(length.is_finite() && length > 0.0) {
        return Err(CoreError::BadLength(length));
    }
    if points < 8 || points % 2 != 0 {
        return Err(CoreError::BadPointCount(points));
    }
    let n = points as i64;
    let dx = length / points as f64;
    let nodes: Vec<f64> = (0..n).map(|j| -length / 2.0 + j as f64 * dx).collect();
    let wavenumbers: Vec<f64> = (0..n)
        .map(|j| {
            let k = if j < n / 2 { j } else { j - n };
            2.0 * std::f64::consts::PI * k as f64 / length
        })
        .collect();
    Ok(Grid {
        length,
        points,
        nodes: Arc::new(nodes),
        wavenumbers: Arc::new(wavenumbers),
    })
}

impl Grid {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Node spacing L/N, also the quadrature weight.
    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Collocation nodes in physical order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers xi_k in FFT storage order (0, 1, .., N/2-1, -N/2, .., -1
    /// scaled by 2 pi / L). Index N/2 holds the unpaired Nyquist mode.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Index of the Nyquist mode in FFT storage order.
    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::GridMismatch(self.points, other.points))
        }
    }

    /// Forward transform with 1/N normalization.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let (fwd, _) = plan_pair(self.points);
        let mut buf = values.to_vec();
        fwd.process(&mut buf);
        let scale = 1.0 / self.points as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Inverse transform; exact inverse of `forward`.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let (_, inv) = plan_pair(self.points);
        let mut buf = spectrum.to_vec();
        inv.process(&mut buf);
        buf
    }
}

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plan_pair(n: usize) -> PlanPair {
    static PLANS: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            (fwd, inv)
        })
        .clone()
}
