use super::Scalar;
use crate::{Error, Result};

/// Truncated univariate power series `sum_k coeffs[k] (t - base)^k`.
///
/// Coefficients are Taylor coefficients (`f^(k)(base) / k!`); use
/// [`Jet1D::derivative`] for raw derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1D {
    pub base: f64,
    pub coeffs: Vec<f64>,
}

impl Jet1D {
    pub fn constant(base: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet1D { base, coeffs }
    }

    /// The jet of `t` itself at `base`.
    pub fn identity(base: f64, order: usize) -> Self {
        let mut j = Jet1D::constant(base, base, order);
        if order >= 1 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(base: f64, coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a jet needs at least the value coefficient"
        );
        Jet1D { base, coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs.get(k).copied().unwrap_or(0.0) * fact
    }

    /// Evaluate the truncated polynomial at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let s = t - self.base;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn checked_add(&self, o: &Jet1D) -> Result<Jet1D> {
        self.check(o)?;
        Ok(self.plus(o))
    }

    pub fn checked_mul(&self, o: &Jet1D) -> Result<Jet1D> {
        self.check(o)?;
        Ok(self.times(o))
    }

    pub fn checked_div(&self, o: &Jet1D) -> Result<Jet1D> {
        self.check(o)?;
        if o.coeffs[0] == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.over(o))
    }

    fn check(&self, o: &Jet1D) -> Result<()> {
        if self.order() != o.order() {
            return Err(Error::OrderMismatch(self.order(), o.order()));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: Vec<f64>) -> Jet1D {
        Jet1D {
            base: self.base,
            coeffs,
        }
    }

    /// `outer ∘ inner`, where `outer` is expanded at `inner`'s value.
    pub fn compose(outer: &Jet1D, inner: &Jet1D) -> Result<Jet1D> {
        outer.check(inner)?;
        let gap = (outer.base - inner.coeffs[0]).abs();
        if gap > 1e-9 * (1.0 + outer.base.abs()) {
            return Err(Error::BaseMismatch(gap));
        }
        // Horner in the shifted inner series (zero constant term).
        let mut shifted = inner.clone();
        shifted.coeffs[0] = 0.0;
        let mut acc = inner.constant_like(0.0);
        for c in outer.coeffs.iter().rev() {
            acc = acc.times(&shifted);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Compositional inverse of a jet with nonzero linear term; the result
    /// is expanded at `self.value()` and maps back to `self.base`.
    pub fn reversion(&self) -> Result<Jet1D> {
        let n = self.order();
        let a1 = self.coeffs.get(1).copied().unwrap_or(0.0);
        if n == 0 || a1 == 0.0 {
            return Err(Error::Degenerate(
                "jet has no invertible linear term".into(),
            ));
        }
        let mut inv = vec![0.0; n + 1];
        inv[0] = self.base;
        inv[1] = 1.0 / a1;
        let mut shifted = self.clone();
        shifted.coeffs[0] = 0.0;
        // Solve order by order: [self(inv)]_k must vanish for k >= 2.
        for k in 2..=n {
            let mut g = Jet1D::from_coeffs(self.value(), inv.clone());
            g.coeffs[0] = 0.0;
            let mut acc = g.constant_like(0.0);
            for c in shifted.coeffs.iter().rev() {
                acc = acc.times(&g);
                acc.coeffs[0] += c;
            }
            inv[k] = -acc.coeffs[k] / a1;
        }
        Ok(Jet1D::from_coeffs(self.value(), inv))
    }
}

impl Scalar for Jet1D {
    fn constant_like(&self, c: f64) -> Self {
        Jet1D::constant(self.base, c, self.order())
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn plus(&self, o: &Self) -> Self {
        self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
    fn minus(&self, o: &Self) -> Self {
        self.with_coeffs(
            self.coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
    fn times(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let mut c = vec![0.0; n + 1];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|i| self.coeffs[i] * o.coeffs[k - i]).sum();
        }
        self.with_coeffs(c)
    }
    fn over(&self, o: &Self) -> Self {
        let n = self.order().min(o.order());
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let s: f64 = (1..=k).map(|i| o.coeffs[i] * q[k - i]).sum();
            q[k] = (self.coeffs[k] - s) / o.coeffs[0];
        }
        self.with_coeffs(q)
    }
    fn negate(&self) -> Self {
        self.scale(-1.0)
    }
    fn sine(&self) -> Self {
        sin_cos(self).0
    }
    fn cosine(&self) -> Self {
        sin_cos(self).1
    }
    fn expo(&self) -> Self {
        // e' = u' e
        let n = self.order();
        let u = &self.coeffs;
        let mut e = vec![0.0; n + 1];
        e[0] = u[0].exp();
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| j as f64 * u[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        self.with_coeffs(e)
    }
    fn scale(&self, s: f64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|c| c * s).collect())
    }
    fn all_finite(&self) -> bool {
        self.base.is_finite() && self.coeffs.iter().all(|c| c.is_finite())
    }
}

fn sin_cos(j: &Jet1D) -> (Jet1D, Jet1D) {
    // s' = u' c, c' = -u' s
    let n = j.order();
    let u = &j.coeffs;
    let mut s = vec![0.0; n + 1];
    let mut c = vec![0.0; n + 1];
    s[0] = u[0].sin();
    c[0] = u[0].cos();
    for k in 1..=n {
        let mut ss = 0.0;
        let mut cc = 0.0;
        for i in 1..=k {
            ss += i as f64 * u[i] * c[k - i];
            cc += i as f64 * u[i] * s[k - i];
        }
        s[k] = ss / k as f64;
        c[k] = -cc / k as f64;
    }
    (j.with_coeffs(s), j.with_coeffs(c))
}
