use super::Scalar;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Truncated second-order Taylor jet in one variable: value, first and second
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<S> {
    pub v: S,
    pub d1: S,
    pub d2: S,
}

impl<S: Scalar> Jet2<S> {
    pub fn new(v: S, d1: S, d2: S) -> Self {
        Self { v, d1, d2 }
    }

    /// Independent variable `x` scaled so that `d/dx` of the jet is `slope`.
    pub fn seed(v: S, slope: f64) -> Self {
        Self {
            v,
            d1: v.constant_like(slope),
            d2: v.constant_like(0.0),
        }
    }

    pub fn constant(c: S) -> Self {
        Self {
            v: c,
            d1: c.constant_like(0.0),
            d2: c.constant_like(0.0),
        }
    }

    /// Apply a scalar function given `f(v)`, `f'(v)`, `f''(v)`.
    pub fn compose(self, f0: S, f1: S, f2: S) -> Self {
        Self {
            v: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            v: self.v * c,
            d1: self.d1 * c,
            d2: self.d2 * c,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn ln(self) -> Self {
        let inv = self.v.constant_like(1.0) / self.v;
        self.compose(self.v.ln(), inv, -(inv * inv))
    }

    pub fn sin(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        self.compose(c, -s, -c)
    }

    pub fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        let f1 = r.constant_like(0.5) / r;
        let f2 = -(f1 / (self.v * 2.0));
        self.compose(r, f1, f2)
    }

    /// Logistic sigmoid; `σ' = σ(1-σ)`, `σ'' = σ'(1-2σ)`.
    pub fn sigmoid(self) -> Self {
        let s = self.v.sigmoid();
        let one = s.constant_like(1.0);
        let s1 = s * (one - s);
        let s2 = s1 * (one - s * 2.0);
        self.compose(s, s1, s2)
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl<S: Scalar> Mul for Jet2<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + self.d1 * o.d1 * 2.0 + self.v * o.d2,
        )
    }
}

impl<S: Scalar> Div for Jet2<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.constant_like(1.0) / o.v;
        let recip = o.compose(inv, -(inv * inv), inv * inv * inv * 2.0);
        self * recip
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d1, -self.d2)
    }
}

impl<S: Scalar> Add<f64> for Jet2<S> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Self::new(self.v + c, self.d1, self.d2)
    }
}

impl<S: Scalar> Mul<f64> for Jet2<S> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale(c)
    }
}
