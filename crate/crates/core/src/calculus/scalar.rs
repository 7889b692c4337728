/// Number-like values the expression evaluator can run over.
///
/// Constants are created "like" an existing value so that runtime-sized
/// carriers (such as [`super::Jet1D`]) know their order.
pub trait Scalar: Clone + std::fmt::Debug {
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    /// Caller guarantees `o.value() != 0`.
    fn over(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn sine(&self) -> Self;
    fn cosine(&self) -> Self;
    fn expo(&self) -> Self;
    fn scale(&self, s: f64) -> Self;

    fn pow_int(&self, n: u32) -> Self {
        // square-and-multiply
        let mut acc = self.constant_like(1.0);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.times(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.times(&base);
            }
        }
        acc
    }

    /// True when every carried number is finite.
    fn all_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn sine(&self) -> Self {
        self.sin()
    }
    fn cosine(&self) -> Self {
        self.cos()
    }
    fn expo(&self) -> Self {
        self.exp()
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn pow_int(&self, n: u32) -> Self {
        self.powi(n as i32)
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

/// First-order forward-mode number with `N` seeded directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; N] }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Dual { v, d }
    }

    fn chain(&self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= dv;
        }
        Dual { v, d }
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn constant_like(&self, c: f64) -> Self {
        Dual::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn plus(&self, o: &Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d.iter()) {
            *x += y;
        }
        Dual { v: self.v + o.v, d }
    }
    fn minus(&self, o: &Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d.iter()) {
            *x -= y;
        }
        Dual { v: self.v - o.v, d }
    }
    fn times(&self, o: &Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Dual { v: self.v * o.v, d }
    }
    fn over(&self, o: &Self) -> Self {
        let v = self.v / o.v;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * o.d[i]) / o.v;
        }
        Dual { v, d }
    }
    fn negate(&self) -> Self {
        self.scale(-1.0)
    }
    fn sine(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cosine(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn expo(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn scale(&self, s: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= s;
        }
        Dual { v: self.v * s, d }
    }
    fn all_finite(&self) -> bool {
        self.v.is_finite() && self.d.iter().all(|x| x.is_finite())
    }
}
