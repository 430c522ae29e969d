use core::fmt;
use core::str::FromStr;

use crate::error::invalid;
use crate::prelude::*;

/// Single-site factor of a Pauli string. `R(α) = cos α X + sin α Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PauliFactor {
    I,
    X,
    Y,
    Z,
    R(f64),
}

impl PauliFactor {
    /// Action on a computational basis bit: `(coefficient, flips)` such that
    /// `F|b⟩ = coefficient · |b ⊕ flips⟩`.
    #[inline]
    pub fn action(self, bit: bool) -> (C64, bool) {
        match self {
            PauliFactor::I => (C64::new(1.0, 0.0), false),
            PauliFactor::X => (C64::new(1.0, 0.0), true),
            PauliFactor::Y => (if bit { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) }, true),
            PauliFactor::Z => (C64::new(if bit { -1.0 } else { 1.0 }, 0.0), false),
            PauliFactor::R(a) => (C64::from_polar(1.0, if bit { -a } else { a }), true),
        }
    }

    pub fn is_identity(self) -> bool {
        matches!(self, PauliFactor::I)
    }

    pub fn letter(self) -> char {
        match self {
            PauliFactor::I => 'I',
            PauliFactor::X => 'X',
            PauliFactor::Y => 'Y',
            PauliFactor::Z => 'Z',
            PauliFactor::R(_) => 'R',
        }
    }

    /// Index in the `(x, z)` symplectic encoding; `None` for `R`.
    pub fn xz(self) -> Option<(bool, bool)> {
        match self {
            PauliFactor::I => Some((false, false)),
            PauliFactor::X => Some((true, false)),
            PauliFactor::Y => Some((true, true)),
            PauliFactor::Z => Some((false, true)),
            PauliFactor::R(_) => None,
        }
    }

    pub fn from_xz(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => PauliFactor::I,
            (true, false) => PauliFactor::X,
            (true, true) => PauliFactor::Y,
            (false, true) => PauliFactor::Z,
        }
    }
}

/// Signed tensor product of single-site factors. Sites beyond the stored
/// length are identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    sign: C64,
    factors: Vec<PauliFactor>,
}

impl PauliString {
    pub fn new(sign: C64, factors: Vec<PauliFactor>) -> Self {
        PauliString { sign, factors }
    }

    pub fn identity(n: usize) -> Self {
        PauliString::new(C64::new(1.0, 0.0), vec![PauliFactor::I; n])
    }

    /// Weight-one string with `factor` at `site`.
    pub fn single(n: usize, site: usize, factor: PauliFactor) -> Self {
        let mut p = Self::identity(n.max(site + 1));
        p.factors[site] = factor;
        p
    }

    /// Build from `(site, factor)` pairs on `n` sites.
    pub fn from_sparse(n: usize, terms: &[(usize, PauliFactor)]) -> Self {
        let mut p = Self::identity(n);
        for &(s, f) in terms {
            p.factors[s] = f;
        }
        p
    }

    /// Letters `I X Y Z R`, with every `R` set to angle `alpha`.
    pub fn from_template(template: &str, alpha: f64) -> Result<Self> {
        let factors = template
            .chars()
            .map(|c| match c {
                'I' => Ok(PauliFactor::I),
                'X' => Ok(PauliFactor::X),
                'Y' => Ok(PauliFactor::Y),
                'Z' => Ok(PauliFactor::Z),
                'R' => Ok(PauliFactor::R(alpha)),
                other => Err(invalid(format!("unknown Pauli letter '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::new(C64::new(1.0, 0.0), factors))
    }

    pub fn sign(&self) -> C64 {
        self.sign
    }

    pub fn with_sign(mut self, sign: C64) -> Self {
        self.sign = sign;
        self
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[PauliFactor] {
        &self.factors
    }

    pub fn factor(&self, site: usize) -> PauliFactor {
        self.factors.get(site).copied().unwrap_or(PauliFactor::I)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.iter().enumerate().filter(|(_, f)| !f.is_identity()).map(|(i, _)| i)
    }

    pub fn weight(&self) -> usize {
        self.support().count()
    }

    pub fn has_rotated_factor(&self) -> bool {
        self.factors.iter().any(|f| matches!(f, PauliFactor::R(_)))
    }

    /// Hermitian iff the sign is real.
    pub fn is_hermitian(&self) -> bool {
        self.sign.im.abs() < 1e-12
    }

    /// Letters only, without the sign.
    pub fn letters(&self) -> String {
        self.factors.iter().map(|f| f.letter()).collect()
    }

    /// Product `self · other` of two strings without `R` factors.
    pub fn try_mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.has_rotated_factor() || other.has_rotated_factor() {
            return Err(Error::Unsupported("product of strings with R factors".into()));
        }
        let n = self.len().max(other.len());
        let mut sign = self.sign * other.sign;
        let mut factors = Vec::with_capacity(n);
        for k in 0..n {
            let (phase, f) = single_product(self.factor(k), other.factor(k));
            sign *= phase;
            factors.push(f);
        }
        Ok(PauliString::new(sign, factors))
    }
}

pub(crate) fn single_product(a: PauliFactor, b: PauliFactor) -> (C64, PauliFactor) {
    use PauliFactor::*;
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match (a, b) {
        (I, f) | (f, I) => (one, f),
        (X, X) | (Y, Y) | (Z, Z) => (one, I),
        (X, Y) => (i, Z),
        (Y, X) => (-i, Z),
        (Y, Z) => (i, X),
        (Z, Y) => (-i, X),
        (Z, X) => (i, Y),
        (X, Z) => (-i, Y),
        _ => unreachable!("R factors rejected before multiplication"),
    }
}

fn sign_prefix(sign: C64) -> Option<&'static str> {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    match (sign.re, sign.im) {
        (r, i) if close(r, 1.0) && close(i, 0.0) => Some("+"),
        (r, i) if close(r, -1.0) && close(i, 0.0) => Some("-"),
        (r, i) if close(r, 0.0) && close(i, 1.0) => Some("+i"),
        (r, i) if close(r, 0.0) && close(i, -1.0) => Some("-i"),
        _ => None,
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match sign_prefix(self.sign) {
            Some(p) => f.write_str(p)?,
            None => write!(f, "({}{:+}i)", self.sign.re, self.sign.im)?,
        }
        for factor in &self.factors {
            match factor {
                PauliFactor::R(a) => write!(f, "R({a})")?,
                other => write!(f, "{}", other.letter())?,
            }
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `[+|-|+i|-i|i]` followed by letters `I X Y Z`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sign, rest) = if let Some(r) = s.strip_prefix("+i") {
            (C64::new(0.0, 1.0), r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (C64::new(0.0, -1.0), r)
        } else if let Some(r) = s.strip_prefix('+') {
            (C64::new(1.0, 0.0), r)
        } else if let Some(r) = s.strip_prefix('-') {
            (C64::new(-1.0, 0.0), r)
        } else if let Some(r) = s.strip_prefix('i') {
            (C64::new(0.0, 1.0), r)
        } else {
            (C64::new(1.0, 0.0), s)
        };
        if rest.contains('R') {
            return Err(invalid("R factors need an angle; use from_template"));
        }
        Ok(PauliString::from_template(rest, 0.0)?.with_sign(sign))
    }
}
