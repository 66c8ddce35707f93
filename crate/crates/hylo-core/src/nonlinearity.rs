//! The nonlinear potential W and its catalog.
//!
//! A `Nonlinearity` stores a scalar potential F together with its first two
//! derivatives and the metadata the solvers need. The real-field models use
//! W(u) = F(u) evaluated at the signed amplitude; the complex-field models
//! use W(psi) = F(|psi|) with gradient W'(psi) = F'(|psi|) psi/|psi|, which
//! extends continuously by 0 at psi = 0 because F'(0) = 0.
//!
//! The potential splits as W(r) = e0 r^2 + N(r): `e0` is the quadratic
//! coefficient and N holds everything superquadratic. Quadratic shifts of W
//! leave N unchanged, which is why the shift combinators below can trade a
//! quadratic term against an explicit phase rotation or moving frame.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar potential with derivatives and solver-facing metadata.
#[derive(Clone)]
pub struct Nonlinearity {
    key: String,
    f: ScalarFn,
    fp: ScalarFn,
    fpp: ScalarFn,
    e0: f64,
    homogeneity: Option<f64>,
    descent_orientation: Option<f64>,
    growth_exponents: Option<(f64, f64)>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Nonlinearity")
            .field("key", &self.key)
            .field("e0", &self.e0)
            .field("homogeneity", &self.homogeneity)
            .field("descent_orientation", &self.descent_orientation)
            .finish()
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "{}", self.key)
    }
}

impl Nonlinearity {
    /// Quadratic-plus-cubic free potential F(r) = r^3/6, the Benjamin-Ono
    /// nonlinearity W'(u) = u^2/2.
    pub fn bo() -> Self {
        Nonlinearity {
            key: "bo".into(),
            f: Arc::new(|r| r * r * r / 6.0),
            fp: Arc::new(|r| r * r / 2.0),
            fpp: Arc::new(|r| r),
            e0: 0.0,
            homogeneity: Some(3.0),
            // N(r) = r^3/6 is negative only for r < 0.
            descent_orientation: Some(-1.0),
            growth_exponents: Some((3.0, 3.0)),
        }
    }

    /// F(r) = -r^3/6, the KdV-type cubic with W'(u) = -u^2/2.
    pub fn kdv() -> Self {
        Nonlinearity {
            key: "kdv".into(),
            f: Arc::new(|r| -r * r * r / 6.0),
            fp: Arc::new(|r| -r * r / 2.0),
            fpp: Arc::new(|r| -r),
            e0: 0.0,
            homogeneity: Some(3.0),
            descent_orientation: Some(1.0),
            growth_exponents: Some((3.0, 3.0)),
        }
    }

    /// Power-law potential F(r) = sign |r|^p / (p(p-1)), p > 2. The
    /// normalization makes F''(r) = sign |r|^{p-2}. `sign` must be +1 or -1;
    /// -1 is the focusing branch that supports solitary waves.
    pub fn power(p: f64, sign: f64) -> Result<Self> {
        if !(p.is_finite() && p > 2.0) {
            return Err(CoreError::Invalid(format!(
                "power-law exponent must be finite and > 2, got {p}"
            )));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(CoreError::Invalid(format!(
                "power-law sign must be +1 or -1, got {sign}"
            )));
        }
        let key = if sign > 0.0 {
            format!("power({p}, +)")
        } else {
            format!("power({p}, -)")
        };
        Ok(Nonlinearity {
            key,
            f: Arc::new(move |r: f64| sign * r.abs().powf(p) / (p * (p - 1.0))),
            fp: Arc::new(move |r: f64| sign * r.abs().powf(p - 1.0) * r.signum() / (p - 1.0)),
            fpp: Arc::new(move |r: f64| sign * r.abs().powf(p - 2.0)),
            e0: 0.0,
            homogeneity: Some(p),
            descent_orientation: if sign < 0.0 { Some(1.0) } else { None },
            growth_exponents: Some((p, p)),
        })
    }

    /// User-supplied analytic potential from closures: `f` is W, `f_prime`
    /// and `f_second` its first two derivatives, and `e0` the coefficient of
    /// r^2 at the origin (W''(0)/2). No homogeneity, descent-orientation, or
    /// growth metadata is attached, so methods requiring those report the
    /// potential as unsuitable rather than guessing.
    pub fn custom(
        key: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
        e0: f64,
    ) -> Self {
        Nonlinearity {
            key: key.into(),
            f: Arc::new(f),
            fp: Arc::new(f_prime),
            fpp: Arc::new(f_second),
            e0,
            homogeneity: None,
            descent_orientation: None,
            growth_exponents: None,
        }
    }

    /// Power-law potential in the simpler normalization F(r) = -|r|^p / p,
    /// whose gradient is the pure power W'(r) = -|r|^{p-2} r.
    pub fn pure_power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 2.0) {
            return Err(CoreError::Invalid(format!(
                "power-law exponent must be finite and > 2, got {p}"
            )));
        }
        Ok(Nonlinearity {
            key: format!("pure_power({p})"),
            f: Arc::new(move |r: f64| -r.abs().powf(p) / p),
            fp: Arc::new(move |r: f64| -r.abs().powf(p - 1.0) * r.signum()),
            fpp: Arc::new(move |r: f64| -(p - 1.0) * r.abs().powf(p - 2.0)),
            e0: 0.0,
            homogeneity: Some(p),
            descent_orientation: Some(1.0),
            growth_exponents: Some((p, p)),
        })
    }

    /// Attractive quartic F(r) = -r^4/4, the Gross-Pitaevskii-type cubic
    /// nonlinearity W'(psi) = -|psi|^2 psi.
    pub fn gpe() -> Self {
        Nonlinearity {
            key: "gpe".into(),
            f: Arc::new(|r| -r * r * r * r / 4.0),
            fp: Arc::new(|r| -r * r * r),
            fpp: Arc::new(|r| -3.0 * r * r),
            e0: 0.0,
            homogeneity: Some(4.0),
            descent_orientation: Some(1.0),
            growth_exponents: Some((4.0, 4.0)),
        }
    }

    /// The trivial potential W = 0, useful for isolating the dispersive part.
    pub fn zero() -> Self {
        Nonlinearity {
            key: "zero".into(),
            f: Arc::new(|_| 0.0),
            fp: Arc::new(|_| 0.0),
            fpp: Arc::new(|_| 0.0),
            e0: 0.0,
            homogeneity: None,
            descent_orientation: None,
            growth_exponents: None,
        }
    }

    /// Tabulated potential interpolated by a natural cubic spline. Samples
    /// must cover r = 0; F is shifted so F(0) = 0 and the slope at 0 must
    /// vanish to interpolation accuracy (the complex-field gradient requires
    /// it). Outside the sampled range the potential continues linearly.
    pub fn from_samples(key: String, r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let spline = Spline::fit(&r, &f)?;
        if spline.knots.first().copied().unwrap_or(1.0) > 0.0
            || spline.knots.last().copied().unwrap_or(-1.0) < 0.0
        {
            return Err(CoreError::Invalid(
                "tabulated potential must cover r = 0".into(),
            ));
        }
        let offset = spline.value(0.0);
        let slope0 = spline.slope(0.0);
        let slope_scale = 1.0 + spline.max_abs_slope();
        if slope0.abs() > 1e-6 * slope_scale {
            return Err(CoreError::Invalid(format!(
                "tabulated potential must have zero slope at r = 0, got {slope0:.3e}"
            )));
        }
        let e0 = 0.5 * spline.second(0.0);
        let orientation = spline.descent_orientation(e0);
        let s1 = spline.clone();
        let s2 = spline.clone();
        let s3 = spline;
        Ok(Nonlinearity {
            key,
            f: Arc::new(move |x| s1.value(x) - offset),
            fp: Arc::new(move |x| s2.slope(x)),
            fpp: Arc::new(move |x| s3.second(x)),
            e0,
            homogeneity: None,
            descent_orientation: orientation,
            growth_exponents: None,
        })
    }

    /// Loads a two-column whitespace-separated table of (r, F(r)) samples;
    /// `#` starts a comment.
    pub fn table(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Invalid(format!("cannot read table {path}: {e}")))?;
        let mut rs = Vec::new();
        let mut fs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let bad = || {
                CoreError::Invalid(format!(
                    "table {path}:{}: expected two numbers, got {line:?}",
                    lineno + 1
                ))
            };
            let r: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let f: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if parts.next().is_some() {
                return Err(bad());
            }
            rs.push(r);
            fs.push(f);
        }
        Nonlinearity::from_samples(format!("table({path})"), rs, fs)
    }

    /// Parses a catalog key: "bo", "kdv", "gpe", "zero", "power(p, sign)"
    /// with sign written as + or - (or +1/-1), or "table(path)".
    pub fn parse(key: &str) -> Result<Self> {
        let key = key.trim();
        match key {
            "bo" => return Ok(Nonlinearity::bo()),
            "kdv" => return Ok(Nonlinearity::kdv()),
            "gpe" => return Ok(Nonlinearity::gpe()),
            "zero" => return Ok(Nonlinearity::zero()),
            _ => {}
        }
        if let Some(args) = key.strip_prefix("power(").and_then(|s| s.strip_suffix(')')) {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(CoreError::Invalid(format!(
                    "power key must look like power(p, sign), got {key:?}"
                )));
            }
            let p: f64 = parts[0]
                .parse()
                .map_err(|_| CoreError::Invalid(format!("bad exponent {:?}", parts[0])))?;
            let sign = match parts[1] {
                "+" | "+1" | "1" => 1.0,
                "-" | "-1" => -1.0,
                other => {
                    return Err(CoreError::Invalid(format!(
                        "bad power-law sign {other:?}, expected + or -"
                    )))
                }
            };
            return Nonlinearity::power(p, sign);
        }
        if let Some(path) = key.strip_prefix("table(").and_then(|s| s.strip_suffix(')')) {
            return Nonlinearity::table(path.trim());
        }
        Err(CoreError::Invalid(format!(
            "unknown nonlinearity key {key:?}; expected bo, kdv, gpe, zero, power(p, sign) or table(path)"
        )))
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    /// Potential value F(r).
    pub fn f(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    /// First derivative F'(r).
    pub fn f_prime(&self, r: f64) -> f64 {
        (self.fp)(r)
    }

    /// Second derivative F''(r).
    pub fn f_second(&self, r: f64) -> f64 {
        (self.fpp)(r)
    }

    /// Quadratic coefficient e0 in W(r) = e0 r^2 + N(r).
    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// Superquadratic remainder N(r) = F(r) - e0 r^2.
    pub fn n(&self, r: f64) -> f64 {
        self.f(r) - self.e0 * r * r
    }

    /// Degree p when W' is homogeneous of degree p-1 (the power catalog and
    /// the quadratic-nonlinearity models); None otherwise.
    pub fn homogeneity(&self) -> Option<f64> {
        self.homogeneity
    }

    /// Sign of the amplitude direction in which N(r) < 0, when one exists.
    /// Ground-state seeds and plateau profiles use it so descent starts on
    /// the energy-lowering side.
    pub fn descent_orientation(&self) -> Option<f64> {
        self.descent_orientation
    }

    /// Growth exponents q1 <= q2 bounding |N'(r)| by c(r^{q1-1} + r^{q2-1});
    /// pure metadata with no role beyond the sampled coercivity check.
    pub fn growth_exponents(&self) -> Option<(f64, f64)> {
        self.growth_exponents
    }

    /// Attaches growth-exponent metadata; q1 <= q2 required.
    pub fn with_growth_exponents(mut self, q1: f64, q2: f64) -> Result<Self> {
        if !(q1.is_finite() && q2.is_finite() && q1 <= q2) {
            return Err(CoreError::Invalid(format!(
                "growth exponents must be finite with q1 <= q2, got ({q1}, {q2})"
            )));
        }
        self.growth_exponents = Some((q1, q2));
        Ok(self)
    }

    /// Gradient of W for real fields: W'(u) = F'(u).
    pub fn w_prime_real(&self, u: f64) -> f64 {
        self.f_prime(u)
    }

    /// Gradient of W for complex fields: W'(psi) = F'(|psi|) psi/|psi|,
    /// extended by 0 at psi = 0.
    pub fn w_prime_complex(&self, psi: Complex64) -> Complex64 {
        let a = psi.norm();
        if a == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            psi * (self.f_prime(a) / a)
        }
    }

    /// New potential with c r^2 added; N is unchanged, e0 becomes e0 + c.
    pub fn add_quadratic(&self, c: f64) -> Nonlinearity {
        let f = self.f.clone();
        let fp = self.fp.clone();
        let fpp = self.fpp.clone();
        Nonlinearity {
            key: format!("{}{:+}*r^2", self.key, c),
            f: Arc::new(move |r| f(r) + c * r * r),
            fp: Arc::new(move |r| fp(r) + 2.0 * c * r),
            fpp: Arc::new(move |r| fpp(r) + 2.0 * c),
            e0: self.e0 + c,
            homogeneity: if c == 0.0 { self.homogeneity } else { None },
            descent_orientation: self.descent_orientation,
            growth_exponents: self.growth_exponents,
        }
    }
}

/// Result of trading the quadratic part of W against a phase rotation in the
/// complex-field model.
pub struct FnsQuadraticShift {
    /// The potential with (1 - e0)/2 * r^2 added.
    pub shifted: Nonlinearity,
    /// Solutions map back as psi(t) = e^{i rate t} psi_shifted(t).
    pub phase_rate: f64,
}

/// Trades the quadratic part of W against a global phase: if psi_shifted
/// solves the equation with the shifted potential from the same initial
/// data, then e^{i phase_rate t} psi_shifted solves it with the original.
pub fn quadratic_shift_fns(w: &Nonlinearity) -> FnsQuadraticShift {
    let c = 0.5 * (1.0 - w.e0());
    FnsQuadraticShift {
        shifted: w.add_quadratic(c),
        phase_rate: c,
    }
}

/// Result of trading the quadratic part of W against a moving frame in the
/// real-field model.
pub struct FkdvQuadraticShift {
    /// The potential with (1 + e0) * r^2 added.
    pub shifted: Nonlinearity,
    /// Solutions map back as u(t, x) = u_shifted(t, x + frame_speed t).
    pub frame_speed: f64,
}

/// Trades a quadratic term in W against a Galilean frame: if u_shifted
/// solves the equation with the shifted potential from the same initial
/// data, then u(t, x) = u_shifted(t, x + frame_speed t) solves it with the
/// original.
pub fn quadratic_shift_fkdv(w: &Nonlinearity) -> FkdvQuadraticShift {
    let c = 1.0 + w.e0();
    FkdvQuadraticShift {
        shifted: w.add_quadratic(c),
        frame_speed: 2.0 * c,
    }
}

/// Natural cubic spline on strictly increasing knots, with linear
/// continuation outside the sampled range.
#[derive(Clone)]
struct Spline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl Spline {
    fn fit(r: &[f64], f: &[f64]) -> Result<Spline> {
        if r.len() != f.len() {
            return Err(CoreError::Invalid(format!(
                "table columns have different lengths ({} vs {})",
                r.len(),
                f.len()
            )));
        }
        let n = r.len();
        if n < 4 {
            return Err(CoreError::Invalid(format!(
                "tabulated potential needs at least 4 samples, got {n}"
            )));
        }
        for w in r.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Invalid(
                    "table abscissae must be strictly increasing".into(),
                ));
            }
        }
        if r.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::Invalid("table entries must be finite".into()));
        }
        // Natural spline: solve the tridiagonal system for interior second
        // derivatives with the Thomas algorithm; endpoints stay zero.
        let mut m = vec![0.0; n];
        let interior = n - 2;
        let mut diag = vec![0.0; interior];
        let mut upper = vec![0.0; interior];
        let mut rhs = vec![0.0; interior];
        for i in 1..n - 1 {
            let h0 = r[i] - r[i - 1];
            let h1 = r[i + 1] - r[i];
            diag[i - 1] = (h0 + h1) / 3.0;
            upper[i - 1] = h1 / 6.0;
            rhs[i - 1] = (f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0;
        }
        for i in 1..interior {
            let lower = (r[i + 1] - r[i]) / 6.0;
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m[n - 2] = rhs[interior - 1] / diag[interior - 1];
        for i in (1..n - 2).rev() {
            m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
        }
        Ok(Spline {
            knots: r.to_vec(),
            values: f.to_vec(),
            second: m,
        })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&x).expect("finite knots"))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    fn value(&self, x: f64) -> f64 {
        let lo = self.knots[0];
        let hi = *self.knots.last().expect("nonempty");
        if x < lo {
            return self.values[0] + self.slope(lo) * (x - lo);
        }
        if x > hi {
            let last = self.values.len() - 1;
            return self.values[last] + self.slope(hi) * (x - hi);
        }
        let i = self.segment(x);
        let (r0, r1) = (self.knots[i], self.knots[i + 1]);
        let h = r1 - r0;
        let (a, b) = (r1 - x, x - r0);
        self.second[i] * a * a * a / (6.0 * h)
            + self.second[i + 1] * b * b * b / (6.0 * h)
            + (self.values[i] / h - self.second[i] * h / 6.0) * a
            + (self.values[i + 1] / h - self.second[i + 1] * h / 6.0) * b
    }

    fn slope(&self, x: f64) -> f64 {
        let lo = self.knots[0];
        let hi = *self.knots.last().expect("nonempty");
        let x = x.clamp(lo, hi);
        let i = self.segment(x);
        let (r0, r1) = (self.knots[i], self.knots[i + 1]);
        let h = r1 - r0;
        let (a, b) = (r1 - x, x - r0);
        -self.second[i] * a * a / (2.0 * h)
            + self.second[i + 1] * b * b / (2.0 * h)
            + (self.values[i + 1] - self.values[i]) / h
            - (self.second[i + 1] - self.second[i]) * h / 6.0
    }

    fn second(&self, x: f64) -> f64 {
        let lo = self.knots[0];
        let hi = *self.knots.last().expect("nonempty");
        if x < lo || x > hi {
            return 0.0;
        }
        let i = self.segment(x);
        let (r0, r1) = (self.knots[i], self.knots[i + 1]);
        let h = r1 - r0;
        (self.second[i] * (r1 - x) + self.second[i + 1] * (x - r0)) / h
    }

    fn max_abs_slope(&self) -> f64 {
        self.knots
            .iter()
            .map(|&r| self.slope(r).abs())
            .fold(0.0, f64::max)
    }

    /// Sign of the knot minimizing N(r)/r^2 where N(r) = F(r) - e0 r^2 < 0;
    /// ties between the two sides prefer the positive one.
    fn descent_orientation(&self, e0: f64) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for &r in &self.knots {
            if r.abs() < 1e-9 {
                continue;
            }
            let n = self.value(r) - self.value(0.0) - e0 * r * r;
            let ratio = n / (r * r);
            if n >= 0.0 {
                continue;
            }
            let replace = match best {
                None => true,
                Some((b, s)) => {
                    let tol = 1e-12 * (1.0 + b.abs());
                    ratio < b - tol || (ratio < b + tol && r.signum() > s)
                }
            };
            if replace {
                best = Some((ratio, r.signum()));
            }
        }
        best.map(|(_, s)| s)
    }
}
