//! Small dense complex matrices and Krylov propagation.

use crate::prelude::*;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.data[i * self.n + j] * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: C64) -> DenseMatrix {
        DenseMatrix { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        DenseMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(self)` by scaling and squaring with a degree-18 Taylor series.
    pub fn expm(&self) -> DenseMatrix {
        let norm = self.norm_inf();
        let mut s = 0u32;
        if norm > 0.5 {
            s = (norm / 0.5).log2().ceil() as u32;
        }
        let a = self.scale(C64::new(0.5f64.powi(s as i32), 0.0));
        let mut result = DenseMatrix::identity(self.n);
        let mut term = DenseMatrix::identity(self.n);
        for k in 1..=18 {
            term = term.mul(&a).scale(C64::new(1.0 / k as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..s {
            result = result.mul(&result);
        }
        result
    }
}

/// Outcome of one Krylov propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub matvecs: usize,
}

const KRYLOV_DIM: usize = 30;
const MAX_SUBSTEPS: usize = 200_000;

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `v ← exp(t·A) v` for a linear operator `A` given as `apply(x, out)`,
/// with Arnoldi projection and adaptive substeps so the local error
/// estimate stays below `tol · τ / t` per substep.
pub fn krylov_expm_apply<F>(apply: F, v: &mut [C64], t: f64, tol: f64) -> Result<KrylovStats>
where
    F: Fn(&[C64], &mut [C64]),
{
    let dim = v.len();
    let mut stats = KrylovStats { substeps: 0, matvecs: 0 };
    if t == 0.0 || dim == 0 {
        return Ok(stats);
    }
    let m_max = KRYLOV_DIM.min(dim);
    let mut t_done = 0.0;
    let mut tau = t;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m_max + 1);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    while t_done < t {
        if stats.substeps >= MAX_SUBSTEPS {
            return Err(Error::NumericalFailure {
                segment: String::new(),
                reason: "Krylov propagation exceeded the substep budget".into(),
            });
        }
        let beta = norm(v);
        if beta == 0.0 {
            return Ok(stats);
        }
        basis.clear();
        basis.push(v.iter().map(|a| a / beta).collect());
        let mut h = DenseMatrix::zeros(m_max + 2);
        let mut m = m_max;
        let mut happy = false;
        for j in 0..m_max {
            apply(&basis[j], &mut w);
            stats.matvecs += 1;
            for (i, b) in basis.iter().enumerate() {
                let hij: C64 = b.iter().zip(w.iter()).map(|(x, y)| x.conj() * y).sum();
                h.set(i, j, hij);
                for (wk, bk) in w.iter_mut().zip(b.iter()) {
                    *wk -= hij * bk;
                }
            }
            let hn = norm(&w);
            h.set(j + 1, j, C64::new(hn, 0.0));
            if hn < 1e-13 * beta.max(1.0) {
                m = j + 1;
                happy = true;
                break;
            }
            basis.push(w.iter().map(|a| a / hn).collect());
        }
        // Trim to an (m+1)×(m+1) Hessenberg for the error estimate.
        let size = if happy { m } else { m + 1 };
        let mut hm = DenseMatrix::zeros(size);
        for i in 0..size.min(m + 1) {
            for j in 0..m.min(size) {
                hm.set(i, j, h.get(i, j));
            }
        }
        loop {
            let e = hm.scale(C64::new(tau, 0.0)).expm();
            let err = if happy { 0.0 } else { beta * e.get(m, 0).norm() };
            let allowed = tol * tau / t;
            if err <= allowed || tau < 1e-14 * t {
                for x in v.iter_mut() {
                    *x = C64::new(0.0, 0.0);
                }
                for (j, b) in basis.iter().take(m).enumerate() {
                    let c = e.get(j, 0) * beta;
                    for (x, bk) in v.iter_mut().zip(b.iter()) {
                        *x += c * bk;
                    }
                }
                t_done += tau;
                stats.substeps += 1;
                // Grow the step for the next round, capped by the remainder.
                let grow = if err > 0.0 { (allowed / err).powf(1.0 / (m as f64 + 1.0)).min(2.0) } else { 2.0 };
                tau = (tau * grow.max(1.0)).min(t - t_done);
                break;
            }
            tau *= (0.9 * (allowed / err).powf(1.0 / (m as f64 + 1.0))).clamp(0.1, 0.9);
        }
        if t - t_done < 1e-15 * t {
            break;
        }
    }
    Ok(stats)
}

/// `J_0(x) … J_kmax(x)` for `x ≥ 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    let start = kmax.max(x as usize) + 40 + (x.sqrt() * 6.0) as usize;
    let mut vals = vec![0.0; start + 2];
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    for k in (0..=start).rev() {
        vals[k] = j;
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            for v in vals[k..].iter_mut() {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
        }
    }
    let mut sum = vals[0];
    for k in (2..=start).step_by(2) {
        sum += 2.0 * vals[k];
    }
    vals.truncate(kmax + 1);
    for v in vals.iter_mut() {
        *v /= sum;
    }
    vals
}

/// Largest `a·r` handled in one Chebyshev expansion.
const CHEB_MAX_ARG: f64 = 200.0;

/// `v ← exp(−2πi t K) v` for a nearly Hermitian `K` whose Hermitian part
/// has spectrum in `[e_min, e_max]` and whose anti-Hermitian part is small
/// and negative semidefinite. Chebyshev expansion in the Hermitian window,
/// truncated once the Bessel weights drop below `tol`.
pub fn chebyshev_expm_apply<F>(apply: F, v: &mut [C64], t: f64, e_min: f64, e_max: f64, tol: f64) -> Result<usize>
where
    F: Fn(&[C64], &mut [C64]),
{
    let dim = v.len();
    if t == 0.0 || dim == 0 {
        return Ok(0);
    }
    let c = 0.5 * (e_max + e_min);
    let r = (0.5 * (e_max - e_min)).max(1e-12);
    let total = core::f64::consts::TAU * t * r;
    let n_sub = (total / CHEB_MAX_ARG).ceil().max(1.0) as usize;
    let a = total / n_sub as f64;
    // Number of terms: past the turning point the weights fall off fast.
    let mut kmax = (a + 10.0 * a.cbrt() + 20.0) as usize;
    let mut bessel = bessel_j_sequence(a, kmax);
    while bessel[kmax].abs() > tol * 1e-3 {
        kmax += 10;
        bessel = bessel_j_sequence(a, kmax);
    }
    let shift = C64::from_polar(1.0, -core::f64::consts::TAU * t * c / n_sub as f64);
    let mut matvecs = 0usize;
    let mut w_prev = vec![C64::new(0.0, 0.0); dim];
    let mut w_cur = vec![C64::new(0.0, 0.0); dim];
    let mut w_next = vec![C64::new(0.0, 0.0); dim];
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    // X = (K − c)/r applied via `apply`.
    let apply_x = |x: &[C64], out: &mut [C64]| {
        apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = (*o - c * xi) / r;
        }
    };
    let mi_pow = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)];
    for _ in 0..n_sub {
        w_prev.copy_from_slice(v);
        for (s, x) in acc.iter_mut().zip(v.iter()) {
            *s = x * bessel[0];
        }
        apply_x(&w_prev, &mut w_cur);
        matvecs += 1;
        let coef = mi_pow[1] * (2.0 * bessel[1]);
        for (s, x) in acc.iter_mut().zip(&w_cur) {
            *s += coef * x;
        }
        for k in 2..=kmax {
            apply_x(&w_cur, &mut w_next);
            matvecs += 1;
            let coef = mi_pow[k % 4] * (2.0 * bessel[k]);
            for ((n, p), s) in w_next.iter_mut().zip(&w_prev).zip(acc.iter_mut()) {
                *n = 2.0 * *n - p;
                *s += coef * *n;
            }
            core::mem::swap(&mut w_prev, &mut w_cur);
            core::mem::swap(&mut w_cur, &mut w_next);
        }
        for (x, s) in v.iter_mut().zip(&acc) {
            *x = s * shift;
        }
        if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::NumericalFailure {
                segment: String::new(),
                reason: "Chebyshev propagation produced non-finite amplitudes".into(),
            });
        }
    }
    Ok(matvecs)
}
