//! Small deterministic fitting toolkit: linear least squares on fixed
//! bases, golden-section search, and the specific curve families used by
//! the analysis modules.

use core::f64::consts::{PI, TAU};

use crate::error::invalid;
use crate::prelude::*;

/// Least squares `y ≈ Σ_k c_k basis_k` via normal equations with partial
/// pivoting. Returns coefficients and the residual sum of squares.
pub fn lstsq(basis: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = basis.len();
    if basis.iter().any(|b| b.len() != y.len()) {
        return Err(invalid("basis and data lengths differ"));
    }
    if y.len() < k {
        return Err(invalid(format!("{} points cannot fix {k} parameters", y.len())));
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = basis[i].iter().zip(&basis[j]).map(|(p, q)| p * q).sum();
        }
        a[i][k] = basis[i].iter().zip(y).map(|(p, q)| p * q).sum();
    }
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() <= 1e-13 * scale {
            return Err(Error::NumericalFailure {
                segment: "least squares".into(),
                reason: "singular normal equations".into(),
            });
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let coeffs: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    let rss = y
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let model: f64 = coeffs.iter().zip(basis).map(|(c, b)| c * b[n]).sum();
            (v - model).powi(2)
        })
        .sum();
    Ok((coeffs, rss))
}

/// Minimise a unimodal `f` on `[a, b]` to absolute tolerance `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Grid search over `[lo, hi)` followed by a golden-section polish around
/// the best grid point.
pub fn grid_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n_grid: usize, tol: f64) -> (f64, f64) {
    let step = (hi - lo) / n_grid as f64;
    let (best, _) = (0..n_grid)
        .map(|i| {
            let x = lo + step * i as f64;
            (x, f(x))
        })
        .fold((lo, f64::INFINITY), |acc, (x, v)| if v < acc.1 { (x, v) } else { acc });
    golden_section_min(f, best - step, best + step, tol)
}

/// `y ≈ offset + amplitude · cos(freq · (x − phase))` with `amplitude ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub rss: f64,
}

impl CosineFit {
    pub fn eval(&self, x: f64, freq: f64) -> f64 {
        self.offset + self.amplitude * (freq * (x - self.phase)).cos()
    }

    /// Largest value of the fitted curve.
    pub fn maximum(&self) -> f64 {
        self.offset + self.amplitude
    }
}

/// Linear least-squares cosine fit with the angular frequency held fixed.
pub fn fit_cosine(x: &[f64], y: &[f64], freq: f64) -> Result<CosineFit> {
    let basis = vec![
        vec![1.0; x.len()],
        x.iter().map(|v| (freq * v).cos()).collect(),
        x.iter().map(|v| (freq * v).sin()).collect(),
    ];
    let (c, rss) = lstsq(&basis, y)?;
    let amplitude = c[1].hypot(c[2]);
    let phase = if amplitude > 0.0 { c[2].atan2(c[1]) / freq } else { 0.0 };
    Ok(CosineFit { amplitude, phase: rem_euclid(phase, TAU / freq.abs()), offset: c[0], rss })
}

/// Angular dependences used for rotated-readout operator sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitForm {
    /// No α dependence; reported as `|mean|`.
    Constant,
    /// `A cos(α − α₀) + C`.
    Cos,
    /// `A cos(2(α − α₀)) + C`.
    Cos2,
    /// `A cos³(α − α₀) + C`.
    Cos3,
    /// `A (3√3/2) cos²(α − α₀) sin(α − α₀) + C`.
    Cos2Sin,
}

impl FitForm {
    fn shape(self, x: f64) -> f64 {
        match self {
            FitForm::Constant => 0.0,
            FitForm::Cos => x.cos(),
            FitForm::Cos2 => (2.0 * x).cos(),
            FitForm::Cos3 => x.cos().powi(3),
            FitForm::Cos2Sin => 1.5 * 3f64.sqrt() * x.cos().powi(2) * x.sin(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FitForm::Constant => "N/A",
            FitForm::Cos => "A cos(a-a0)+C",
            FitForm::Cos2 => "A cos(2(a-a0))+C",
            FitForm::Cos3 => "A cos^3(a-a0)+C",
            FitForm::Cos2Sin => "A (3sqrt3/2) cos^2(a-a0) sin(a-a0)+C",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormFit {
    pub form: FitForm,
    pub amplitude: f64,
    pub offset: f64,
    pub phase: f64,
    pub rss: f64,
}

impl FormFit {
    /// `|A| + |C|`, or `|C|` for the constant form.
    pub fn peak(&self) -> f64 {
        self.amplitude.abs() + self.offset.abs()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.amplitude * self.form.shape(x - self.phase)
    }
}

fn fit_form_at_phase(x: &[f64], y: &[f64], form: FitForm, phase: f64) -> Result<FormFit> {
    let basis = vec![vec![1.0; x.len()], x.iter().map(|v| form.shape(v - phase)).collect()];
    let (c, rss) = lstsq(&basis, y)?;
    Ok(FormFit { form, amplitude: c[1], offset: c[0], phase, rss })
}

/// Fit one of the [`FitForm`] families. Cosine and double-cosine forms are
/// linear; the cubic forms scan the phase on a 720-point grid and polish it
/// by golden section.
pub fn fit_form(x: &[f64], y: &[f64], form: FitForm) -> Result<FormFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(invalid("fit needs equally many, non-zero angles and values"));
    }
    match form {
        FitForm::Constant => {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let rss = y.iter().map(|v| (v - mean).powi(2)).sum();
            Ok(FormFit { form, amplitude: 0.0, offset: mean, phase: 0.0, rss })
        }
        FitForm::Cos | FitForm::Cos2 => {
            let freq = if form == FitForm::Cos { 1.0 } else { 2.0 };
            let c = fit_cosine(x, y, freq)?;
            Ok(FormFit { form, amplitude: c.amplitude, offset: c.offset, phase: c.phase, rss: c.rss })
        }
        FitForm::Cos3 | FitForm::Cos2Sin => {
            let rss_at = |p: f64| fit_form_at_phase(x, y, form, p).map(|f| f.rss).unwrap_or(f64::INFINITY);
            let (phase, _) = grid_then_golden(rss_at, 0.0, TAU, 720, 1e-12);
            let mut fit = fit_form_at_phase(x, y, form, phase)?;
            if fit.amplitude < 0.0 {
                // Both cubic shapes are odd under a half-turn shift.
                fit.amplitude = -fit.amplitude;
                fit.phase += PI;
            }
            fit.phase = rem_euclid(fit.phase, TAU);
            Ok(fit)
        }
    }
}

/// Parameters of `r(ϑ) = 2AB(B sin²(ϑ−ϑ*) + 2cos(ϑ−ϑ*))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RFit {
    pub a: f64,
    pub b: f64,
    pub theta_star: f64,
    pub rss: f64,
}

impl RFit {
    pub fn eval(&self, theta: f64) -> f64 {
        let x = theta - self.theta_star;
        2.0 * self.a * self.b * (self.b * x.sin().powi(2) + 2.0 * x.cos())
    }

    /// `W(ϑ) = [r(ϑ) + r(ϑ+π/2) + r(ϑ−π/2) − r(ϑ+π)]/4` of the fitted curve.
    pub fn w(&self, theta: f64) -> f64 {
        let h = PI / 2.0;
        (self.eval(theta) + self.eval(theta + h) + self.eval(theta - h) - self.eval(theta + PI)) / 4.0
    }

    /// `max_ϑ W(ϑ)` and its location.
    pub fn max_w(&self) -> (f64, f64) {
        let (x, v) = grid_then_golden(|t| -self.w(t), 0.0, TAU, 256, 1e-12);
        (-v, rem_euclid(x, TAU))
    }
}

/// For fixed `ϑ*` the model is linear in `u = AB²` and `v = AB`.
fn r_fit_at(theta: &[f64], r: &[f64], theta_star: f64) -> Result<(f64, f64, f64)> {
    let basis = vec![
        theta.iter().map(|t| 2.0 * (t - theta_star).sin().powi(2)).collect(),
        theta.iter().map(|t| 4.0 * (t - theta_star).cos()).collect(),
    ];
    let (c, rss) = lstsq(&basis, r)?;
    Ok((c[0], c[1], rss))
}

/// Fit the Bell coherence curve: 256-point `ϑ*` grid with the inner linear
/// solve for `(A, B)`, then a golden-section polish of `ϑ*`.
pub fn fit_r_curve(theta: &[f64], r: &[f64]) -> Result<RFit> {
    if theta.len() != r.len() {
        return Err(invalid("angle and value lengths differ"));
    }
    let rss_at = |ts: f64| r_fit_at(theta, r, ts).map(|(_, _, e)| e).unwrap_or(f64::INFINITY);
    let (ts, _) = grid_then_golden(rss_at, 0.0, TAU, 256, 1e-12);
    let (mut u, mut v, rss) = r_fit_at(theta, r, ts)?;
    let mut theta_star = ts;
    if v < 0.0 {
        // r(ϑ; A, B, ϑ*) with v < 0 is the same curve as (−v, ..., ϑ*+π)
        // only for the cos part; keep the sign convention A > 0 by shifting.
        theta_star += PI;
        let refit = r_fit_at(theta, r, theta_star)?;
        u = refit.0;
        v = refit.1;
    }
    let (a, b) = if u.abs() < 1e-300 || v.abs() < 1e-300 { (0.0, 0.0) } else { (v * v / u, u / v) };
    Ok(RFit { a, b, theta_star: rem_euclid(theta_star, TAU), rss })
}

/// Classical staggered magnetisation of the vacuum orbit after `k` pulses:
/// `0, 1, 1, 0, −1, −1, …`.
pub fn classical_magnetization(k: usize) -> f64 {
    [0.0, 1.0, 1.0, 0.0, -1.0, -1.0][k % 6]
}

/// `m_k ≈ a · classical_k · exp(−k/τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedFit {
    pub amplitude: f64,
    /// Decay constant in pulses.
    pub tau: f64,
    pub rss: f64,
}

/// Fit an exponentially damped classical trajectory. `τ` is scanned on a
/// logarithmic grid in `[0.5, 10⁶]` pulses and polished in `log τ`.
pub fn fit_damped_classical(m: &[f64], classical: &[f64]) -> Result<DampedFit> {
    if m.len() != classical.len() || m.len() < 3 {
        return Err(invalid("need at least three matched samples"));
    }
    let at = |log_tau: f64| -> (f64, f64) {
        let tau = log_tau.exp();
        let basis: Vec<f64> = classical
            .iter()
            .enumerate()
            .map(|(k, c)| c * (-(k as f64) / tau).exp())
            .collect();
        let bb: f64 = basis.iter().map(|b| b * b).sum();
        if bb == 0.0 {
            return (0.0, m.iter().map(|v| v * v).sum());
        }
        let a = basis.iter().zip(m).map(|(b, y)| b * y).sum::<f64>() / bb;
        let rss = basis.iter().zip(m).map(|(b, y)| (y - a * b).powi(2)).sum();
        (a, rss)
    };
    let (lo, hi) = (0.5f64.ln(), 1e6f64.ln());
    let (log_tau, rss) = grid_then_golden(|x| at(x).1, lo, hi, 400, 1e-10);
    let log_tau = log_tau.clamp(lo, hi);
    Ok(DampedFit { amplitude: at(log_tau).0, tau: log_tau.exp(), rss })
}

/// Guide-to-the-eye saturation curve `q(t) = q∞ (1 − e^{−t/τ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationFit {
    pub q_inf: f64,
    pub tau: f64,
    pub rss: f64,
}

pub fn fit_saturation(t: &[f64], q: &[f64]) -> Result<SaturationFit> {
    if t.len() != q.len() || t.len() < 2 {
        return Err(invalid("need at least two matched samples"));
    }
    let at = |log_tau: f64| -> (f64, f64) {
        let tau = log_tau.exp();
        let b: Vec<f64> = t.iter().map(|x| 1.0 - (-x / tau).exp()).collect();
        let bb: f64 = b.iter().map(|v| v * v).sum();
        let a = if bb > 0.0 { b.iter().zip(q).map(|(x, y)| x * y).sum::<f64>() / bb } else { 0.0 };
        (a, b.iter().zip(q).map(|(x, y)| (y - a * x).powi(2)).sum())
    };
    let (lo, hi) = (0.01f64.ln(), 1e4f64.ln());
    let (log_tau, rss) = grid_then_golden(|x| at(x).1, lo, hi, 300, 1e-10);
    Ok(SaturationFit { q_inf: at(log_tau).0, tau: log_tau.exp(), rss })
}
