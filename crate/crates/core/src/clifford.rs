//! Heisenberg propagation of Pauli strings through Clifford layers, and a
//! small stabilizer-state evaluator built on it.
//!
//! [`conjugate`] always computes `L† P L`. Forward-in-time propagation of
//! an operator (`U P U†`, how stabilizers and gliders move along with the
//! state) is [`propagate_forward`].

use core::f64::consts::{FRAC_PI_2, TAU};

use crate::error::invalid;
use crate::prelude::*;
use crate::statevec::{single_product, PauliFactor, PauliString};

/// Single-qubit Clifford gates, plus the nearest-neighbour CZ chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// `e^{-iπX/4}`.
    SqrtX,
    SqrtXdg,
    /// `e^{-iπY/4}`.
    SqrtY,
    SqrtYdg,
    /// `diag(1, i)`.
    S,
    Sdg,
    X,
    Z,
    H,
    /// CZ on each consecutive pair of the target list.
    CzChain,
}

impl LayerKind {
    pub fn inverse(self) -> LayerKind {
        use LayerKind::*;
        match self {
            SqrtX => SqrtXdg,
            SqrtXdg => SqrtX,
            SqrtY => SqrtYdg,
            SqrtYdg => SqrtY,
            S => Sdg,
            Sdg => S,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordLayer {
    pub kind: LayerKind,
    pub targets: Vec<usize>,
}

impl CliffordLayer {
    pub fn new(kind: LayerKind, targets: Vec<usize>) -> Self {
        CliffordLayer { kind, targets }
    }

    pub fn sqrtx_all(n: usize) -> Self {
        Self::new(LayerKind::SqrtX, (0..n).collect())
    }

    pub fn cz_chain(n: usize) -> Self {
        Self::new(LayerKind::CzChain, (0..n).collect())
    }

    /// `S` on the two end sites (applied twice when `n = 1`).
    pub fn s_boundary(n: usize) -> Self {
        Self::new(LayerKind::S, if n == 0 { vec![] } else { vec![0, n - 1] })
    }

    pub fn z_all(n: usize) -> Self {
        Self::new(LayerKind::Z, (0..n).collect())
    }

    pub fn x_all(n: usize) -> Self {
        Self::new(LayerKind::X, (0..n).collect())
    }

    /// Global `exp(-iπ/4 [cos φ X + sin φ Y])` for `φ` a multiple of π/2.
    pub fn quarter_rotation(n: usize, axis_phase: f64) -> Result<Self> {
        let k = rem_euclid(axis_phase, TAU) / FRAC_PI_2;
        let r = k.round();
        if (k - r).abs() > 1e-9 {
            return Err(Error::Unsupported(format!(
                "π/2 pulse about axis {axis_phase} is not Clifford"
            )));
        }
        let kind = match (r as i64) % 4 {
            0 => LayerKind::SqrtX,
            1 => LayerKind::SqrtY,
            2 => LayerKind::SqrtXdg,
            _ => LayerKind::SqrtYdg,
        };
        Ok(Self::new(kind, (0..n).collect()))
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.kind.inverse(), self.targets.clone())
    }
}

/// Circuit (in time order) of one graph-automaton step `∏CZ ∏√X`.
pub fn graph_step_layers(n: usize) -> Vec<CliffordLayer> {
    vec![CliffordLayer::sqrtx_all(n), CliffordLayer::cz_chain(n)]
}

/// Mediated layer at `α = π/2` as a Clifford circuit: CZ chain, Z on every
/// site, S on both ends, then the global X flip.
pub fn mediated_layer_layers(n: usize) -> Vec<CliffordLayer> {
    vec![
        CliffordLayer::cz_chain(n),
        CliffordLayer::z_all(n),
        CliffordLayer::s_boundary(n),
        CliffordLayer::x_all(n),
    ]
}

/// Hardware graph step: π/2 pulse about `axis_phase`, then the
/// uncorrected mediated layer.
pub fn protocol_step_layers(n: usize, axis_phase: f64) -> Result<Vec<CliffordLayer>> {
    let mut layers = vec![CliffordLayer::quarter_rotation(n, axis_phase)?];
    layers.extend(mediated_layer_layers(n));
    Ok(layers)
}

/// Heisenberg image `G† F G` of a single factor, as `(sign, factor)`.
fn single_heisenberg(kind: LayerKind, f: PauliFactor) -> (f64, PauliFactor) {
    use LayerKind as K;
    use PauliFactor::*;
    match (kind, f) {
        (_, I) => (1.0, I),
        (K::X, X) | (K::Z, Z) => (1.0, f),
        (K::X, _) | (K::Z, _) => (-1.0, f),
        (K::S, X) => (-1.0, Y),
        (K::S, Y) => (1.0, X),
        (K::Sdg, X) => (1.0, Y),
        (K::Sdg, Y) => (-1.0, X),
        (K::S | K::Sdg, Z) => (1.0, Z),
        (K::SqrtX, Z) => (1.0, Y),
        (K::SqrtX, Y) => (-1.0, Z),
        (K::SqrtXdg, Z) => (-1.0, Y),
        (K::SqrtXdg, Y) => (1.0, Z),
        (K::SqrtX | K::SqrtXdg, X) => (1.0, X),
        (K::SqrtY, Z) => (-1.0, X),
        (K::SqrtY, X) => (1.0, Z),
        (K::SqrtYdg, Z) => (1.0, X),
        (K::SqrtYdg, X) => (-1.0, Z),
        (K::SqrtY | K::SqrtYdg, Y) => (1.0, Y),
        (K::H, X) => (1.0, Z),
        (K::H, Z) => (1.0, X),
        (K::H, Y) => (-1.0, Y),
        (K::CzChain, _) | (_, R(_)) => unreachable!("handled by caller"),
    }
}

fn is_x_like(f: PauliFactor) -> bool {
    matches!(f, PauliFactor::X | PauliFactor::Y)
}

/// Heisenberg conjugation `L† P L` with exact sign tracking.
pub fn conjugate(pauli: &PauliString, layer: &CliffordLayer) -> Result<PauliString> {
    if pauli.has_rotated_factor() {
        return Err(Error::Unsupported(format!("cannot conjugate {pauli}: R(α) factor")));
    }
    let n = pauli.len().max(layer.targets.iter().map(|t| t + 1).max().unwrap_or(0));
    let mut factors: Vec<PauliFactor> = (0..n).map(|k| pauli.factor(k)).collect();
    let mut sign = pauli.sign();
    match layer.kind {
        LayerKind::CzChain => {
            for w in layer.targets.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a == b {
                    return Err(invalid(format!("CZ on repeated site {a}")));
                }
                let (fa, fb) = (factors[a], factors[b]);
                // X_a → X_a Z_b, X_b → Z_a X_b; the images commute.
                let z = PauliFactor::Z;
                let (pa, na) = if is_x_like(fb) { single_product(fa, z) } else { (C64::new(1.0, 0.0), fa) };
                let (pb, nb) = if is_x_like(fa) { single_product(z, fb) } else { (C64::new(1.0, 0.0), fb) };
                sign *= pa * pb;
                factors[a] = na;
                factors[b] = nb;
            }
        }
        kind => {
            for &t in &layer.targets {
                let (s, f) = single_heisenberg(kind, factors[t]);
                sign *= s;
                factors[t] = f;
            }
        }
    }
    Ok(PauliString::new(sign, factors))
}

/// `U† P U` for the circuit `layers` given in time order.
pub fn heisenberg(pauli: &PauliString, layers: &[CliffordLayer]) -> Result<PauliString> {
    layers.iter().rev().try_fold(pauli.clone(), |p, l| conjugate(&p, l))
}

/// `U P U†` for the circuit `layers` given in time order.
pub fn propagate_forward(pauli: &PauliString, layers: &[CliffordLayer]) -> Result<PauliString> {
    layers.iter().try_fold(pauli.clone(), |p, l| conjugate(&p, &l.inverse()))
}

/// Glider families on `n` sites. `U(k) = X_{k-1} Z_k` and `D(k) = Z_{k-1} X_k`
/// for `k = 0..=n`, with out-of-range factors dropped. A glider's
/// "X" slot accepts any equatorial Pauli (X or Y), and signs are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Glider {
    Up(usize),
    Down(usize),
}

impl Glider {
    /// Representative string with X in the equatorial slot.
    pub fn to_pauli(self, n: usize) -> PauliString {
        let (x_site, z_site) = match self {
            Glider::Up(k) => (k.checked_sub(1), k),
            Glider::Down(k) => (Some(k), k.wrapping_sub(1)),
        };
        let mut terms = Vec::new();
        if let Some(x) = x_site.filter(|&x| x < n) {
            terms.push((x, PauliFactor::X));
        }
        if z_site < n {
            terms.push((z_site, PauliFactor::Z));
        }
        PauliString::from_sparse(n, &terms)
    }
}

/// Identify `p` as a glider (up to sign and X↔Y in the equatorial slot).
pub fn classify_glider(p: &PauliString, n: usize) -> Option<Glider> {
    if (p.sign().im).abs() > 1e-12 {
        return None;
    }
    let pattern: Vec<char> = (0..n)
        .map(|k| match p.factor(k) {
            PauliFactor::X | PauliFactor::Y | PauliFactor::R(_) => 'R',
            other => other.letter(),
        })
        .collect();
    let matches = |g: Glider| {
        let rep = g.to_pauli(n);
        (0..n).all(|k| {
            let want = match rep.factor(k) {
                PauliFactor::X => 'R',
                other => other.letter(),
            };
            want == pattern[k]
        })
    };
    (0..=n)
        .map(Glider::Up)
        .chain((0..=n).map(Glider::Down))
        .find(|&g| matches(g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GliderStep {
    pub step: usize,
    pub op: PauliString,
    pub glider: Option<Glider>,
    /// True when the family changed (Up ↔ Down) relative to the previous
    /// step, i.e. the glider reflected at a boundary.
    pub reflected: bool,
}

/// Forward propagation of `initial` through `n_steps` graph-automaton
/// steps on `n` sites. Entry 0 is the initial operator.
pub fn glider_trajectory(initial: &PauliString, n: usize, n_steps: usize) -> Result<Vec<GliderStep>> {
    glider_trajectory_with(initial, n, n_steps, |_| Ok(graph_step_layers(n)))
}

/// As [`glider_trajectory`] with a caller-supplied circuit per step.
pub fn glider_trajectory_with(
    initial: &PauliString,
    n: usize,
    n_steps: usize,
    step_layers: impl Fn(usize) -> Result<Vec<CliffordLayer>>,
) -> Result<Vec<GliderStep>> {
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut op = initial.clone();
    let mut prev = classify_glider(&op, n);
    out.push(GliderStep { step: 0, op: op.clone(), glider: prev, reflected: false });
    for t in 0..n_steps {
        op = propagate_forward(&op, &step_layers(t)?)?;
        let glider = classify_glider(&op, n);
        let reflected = matches!(
            (prev, glider),
            (Some(Glider::Up(_)), Some(Glider::Down(_))) | (Some(Glider::Down(_)), Some(Glider::Up(_)))
        );
        out.push(GliderStep { step: t + 1, op: op.clone(), glider, reflected });
        prev = glider;
    }
    Ok(out)
}

/// Cluster-state stabilizers `X₀Z₁`, `Z_{i-1}X_iZ_{i+1}`, `Z_{n-2}X_{n-1}`.
pub fn cluster_stabilizers(n: usize) -> Result<Vec<PauliString>> {
    if n < 2 {
        return Err(invalid(format!("cluster state needs n ≥ 2, got {n}")));
    }
    Ok((0..n)
        .map(|i| {
            let mut terms = vec![(i, PauliFactor::X)];
            if i > 0 {
                terms.push((i - 1, PauliFactor::Z));
            }
            if i + 1 < n {
                terms.push((i + 1, PauliFactor::Z));
            }
            PauliString::from_sparse(n, &terms)
        })
        .collect())
}

/// Circuit preparing the ideal cluster state from `|0…0⟩`: a π/2 pulse about
/// Y (`|0⟩ → |+⟩`) and the CZ chain.
pub fn cluster_preparation(n: usize) -> Vec<CliffordLayer> {
    vec![CliffordLayer::new(LayerKind::SqrtY, (0..n).collect()), CliffordLayer::cz_chain(n)]
}

/// Pure stabilizer state described by `n` independent commuting generators.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerState {
    n: usize,
    generators: Vec<PauliString>,
}

fn symplectic(p: &PauliString, n: usize) -> Vec<bool> {
    let mut v = vec![false; 2 * n];
    for k in 0..n {
        let (x, z) = p.factor(k).xz().expect("R factors rejected earlier");
        v[k] = x;
        v[n + k] = z;
    }
    v
}

fn commutes(a: &PauliString, b: &PauliString, n: usize) -> bool {
    let anti = (0..n).filter(|&k| {
        let (ax, az) = a.factor(k).xz().unwrap_or((false, false));
        let (bx, bz) = b.factor(k).xz().unwrap_or((false, false));
        (ax && bz) ^ (az && bx)
    });
    anti.count() % 2 == 0
}

impl StabilizerState {
    /// `|0…0⟩` evolved by `layers` (time order).
    pub fn evolve_vacuum(n: usize, layers: &[CliffordLayer]) -> Result<Self> {
        let generators = (0..n)
            .map(|k| propagate_forward(&PauliString::single(n, k, PauliFactor::Z), layers))
            .collect::<Result<Vec<_>>>()?;
        Ok(StabilizerState { n, generators })
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// Apply more layers.
    pub fn evolve(&mut self, layers: &[CliffordLayer]) -> Result<()> {
        for g in &mut self.generators {
            *g = propagate_forward(g, layers)?;
        }
        Ok(())
    }

    /// `⟨P⟩ ∈ {−1, 0, +1}` for a Hermitian Pauli string.
    pub fn expect(&self, p: &PauliString) -> Result<f64> {
        let n = self.n;
        if p.has_rotated_factor() {
            return Err(Error::Unsupported("stabilizer expectation of R(α) factors".into()));
        }
        if p.len() > n {
            return Err(invalid(format!("string of length {} on {n} qubits", p.len())));
        }
        if !p.is_hermitian() {
            return Err(invalid(format!("{p} is not Hermitian")));
        }
        if self.generators.iter().any(|g| !commutes(g, p, n)) {
            return Ok(0.0);
        }
        // Solve Σ c_k g_k = p over GF(2) by elimination on an augmented
        // matrix whose columns are generators.
        let cols: Vec<Vec<bool>> = self.generators.iter().map(|g| symplectic(g, n)).collect();
        let target = symplectic(p, n);
        let rows = 2 * n;
        let m = cols.len();
        let mut a: Vec<Vec<bool>> = (0..rows)
            .map(|r| {
                let mut row: Vec<bool> = cols.iter().map(|c| c[r]).collect();
                row.push(target[r]);
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m {
            let Some(pr) = (r..rows).find(|&i| a[i][c]) else { continue };
            a.swap(r, pr);
            for i in 0..rows {
                if i != r && a[i][c] {
                    for j in c..=m {
                        let v = a[r][j];
                        a[i][j] ^= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        if (r..rows).any(|i| a[i][m]) {
            return Err(Error::Internal(format!("{p} commutes with the stabilizer but is not in it")));
        }
        let mut product = PauliString::identity(n);
        for (row, &c) in pivots.iter().enumerate() {
            if a[row][m] {
                product = product.try_mul(&self.generators[c])?;
            }
        }
        let ratio = p.sign() / product.sign();
        if (ratio.im).abs() > 1e-9 {
            return Err(Error::Internal(format!("non-real sign ratio for {p}")));
        }
        Ok(ratio.re.signum())
    }
}
