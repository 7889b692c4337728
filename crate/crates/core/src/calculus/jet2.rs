use super::Scalar;

/// Second-order jet of a scalar function of three variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 {
            v,
            g: [0.0; 3],
            h: [[0.0; 3]; 3],
        }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut j = Jet2::constant(v);
        j.g[i] = 1.0;
        j
    }

    /// `phi(self)` given `phi`, `phi'`, `phi''` at the current value.
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Jet2::constant(f0);
        for i in 0..3 {
            out.g[i] = f1 * self.g[i];
            for j in 0..3 {
                out.h[i][j] = f1 * self.h[i][j] + f2 * (self.g[i] * self.g[j]);
            }
        }
        out
    }
}

impl Scalar for Jet2 {
    fn constant_like(&self, c: f64) -> Self {
        Jet2::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn plus(&self, o: &Self) -> Self {
        let mut r = *self;
        r.v += o.v;
        for i in 0..3 {
            r.g[i] += o.g[i];
            for j in 0..3 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
    fn minus(&self, o: &Self) -> Self {
        self.plus(&o.negate())
    }
    fn times(&self, o: &Self) -> Self {
        let mut r = Jet2::constant(self.v * o.v);
        for i in 0..3 {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..3 {
                // each summand is symmetric in (i, j) bit for bit
                r.h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + (self.g[i] * o.g[j] + self.g[j] * o.g[i]);
            }
        }
        r
    }
    fn over(&self, o: &Self) -> Self {
        let inv = 1.0 / o.v;
        let recip = o.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self.times(&recip)
    }
    fn negate(&self) -> Self {
        self.scale(-1.0)
    }
    fn sine(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cosine(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn expo(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        r.v *= s;
        for i in 0..3 {
            r.g[i] *= s;
            for j in 0..3 {
                r.h[i][j] *= s;
            }
        }
        r
    }
    fn all_finite(&self) -> bool {
        self.v.is_finite()
            && self.g.iter().all(|x| x.is_finite())
            && self.h.iter().flatten().all(|x| x.is_finite())
    }
}
