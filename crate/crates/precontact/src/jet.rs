//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar with
//! respect to the seeded variables. A jet of dimension zero is a plain
//! constant and combines with jets of any dimension.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `dim x dim`.
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 { value, grad: Vec::new(), hess: Vec::new() }
    }

    pub fn constant_dim(value: f64, dim: usize) -> Self {
        Jet2 { value, grad: vec![0.0; dim], hess: vec![0.0; dim * dim] }
    }

    /// The `i`-th coordinate function at value `x`.
    pub fn variable(i: usize, x: f64, dim: usize) -> Self {
        let mut j = Self::constant_dim(x, dim);
        j.grad[i] = 1.0;
        j
    }

    /// Seed one variable per coordinate of `point`.
    pub fn seed(point: &[f64]) -> Vec<Jet2> {
        let n = point.len();
        point.iter().enumerate().map(|(i, &x)| Self::variable(i, x, n)).collect()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn d(&self, i: usize) -> f64 {
        self.grad.get(i).copied().unwrap_or(0.0)
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        let n = self.dim();
        if n == 0 {
            0.0
        } else {
            self.hess[i * n + j]
        }
    }

    /// Partial derivative along variable `i` as a jet. Its gradient is exact;
    /// its Hessian would need third derivatives and is filled with NaN.
    pub fn partial(&self, i: usize) -> Jet2 {
        let n = self.dim();
        if n == 0 {
            return Jet2::constant(0.0);
        }
        Jet2 {
            value: self.grad[i],
            grad: self.hess[i * n..(i + 1) * n].to_vec(),
            hess: vec![f64::NAN; n * n],
        }
    }

    /// Compose with a scalar function given its value and first two derivatives.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i * n + j];
            }
        }
        Jet2 { value: f0, grad, hess }
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Jet2 {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn sqrt(&self) -> Jet2 {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn recip(&self) -> Jet2 {
        let v = self.value;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn powi(&self, k: i32) -> Jet2 {
        let v = self.value;
        let kf = k as f64;
        let f1 = if k == 0 { 0.0 } else { kf * v.powi(k - 1) };
        let f2 = if k == 0 || k == 1 { 0.0 } else { kf * (kf - 1.0) * v.powi(k - 2) };
        self.chain(v.powi(k), f1, f2)
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            value: c * self.value,
            grad: self.grad.iter().map(|g| c * g).collect(),
            hess: self.hess.iter().map(|h| c * h).collect(),
        }
    }

    /// Largest asymmetry `|H_ij - H_ji|`.
    pub fn hess_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max((self.hess[i * n + j] - self.hess[j * n + i]).abs());
            }
        }
        m
    }

    fn zip(a: &Jet2, b: &Jet2, value: f64, fg: impl Fn(f64, f64) -> f64) -> Jet2 {
        let n = a.dim().max(b.dim());
        let ga = |i: usize| a.grad.get(i).copied().unwrap_or(0.0);
        let gb = |i: usize| b.grad.get(i).copied().unwrap_or(0.0);
        let ha = |k: usize| a.hess.get(k).copied().unwrap_or(0.0);
        let hb = |k: usize| b.hess.get(k).copied().unwrap_or(0.0);
        Jet2 {
            value,
            grad: (0..n).map(|i| fg(ga(i), gb(i))).collect(),
            hess: (0..n * n).map(|k| fg(ha(k), hb(k))).collect(),
        }
    }

    fn mul_ref(a: &Jet2, b: &Jet2) -> Jet2 {
        if a.dim() == 0 {
            return b.scale(a.value);
        }
        if b.dim() == 0 {
            return a.scale(b.value);
        }
        let n = a.dim();
        assert_eq!(n, b.dim(), "jet dimension mismatch");
        let grad = (0..n).map(|i| a.value * b.grad[i] + b.value * a.grad[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess[k] = a.value * b.hess[k]
                    + b.value * a.hess[k]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
            }
        }
        Jet2 { value: a.value * b.value, grad, hess }
    }
}

impl From<f64> for Jet2 {
    fn from(v: f64) -> Self {
        Jet2::constant(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet2> for &Jet2 {
            type Output = Jet2;
            fn $m(self, o: &Jet2) -> Jet2 {
                let f: fn(&Jet2, &Jet2) -> Jet2 = $body;
                f(self, o)
            }
        }
        impl $tr<Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, o: Jet2) -> Jet2 {
                (&self).$m(&o)
            }
        }
        impl $tr<&Jet2> for Jet2 {
            type Output = Jet2;
            fn $m(self, o: &Jet2) -> Jet2 {
                (&self).$m(o)
            }
        }
        impl $tr<Jet2> for &Jet2 {
            type Output = Jet2;
            fn $m(self, o: Jet2) -> Jet2 {
                self.$m(&o)
            }
        }
        impl $tr<f64> for Jet2 {
            type Output = Jet2;
            fn $m(self, o: f64) -> Jet2 {
                (&self).$m(&Jet2::constant(o))
            }
        }
        impl $tr<f64> for &Jet2 {
            type Output = Jet2;
            fn $m(self, o: f64) -> Jet2 {
                self.$m(&Jet2::constant(o))
            }
        }
        impl $tr<Jet2> for f64 {
            type Output = Jet2;
            fn $m(self, o: Jet2) -> Jet2 {
                (&Jet2::constant(self)).$m(&o)
            }
        }
        impl $tr<&Jet2> for f64 {
            type Output = Jet2;
            fn $m(self, o: &Jet2) -> Jet2 {
                (&Jet2::constant(self)).$m(o)
            }
        }
    };
}

binop!(Add, add, |a, b| Jet2::zip(a, b, a.value + b.value, |x, y| x + y));
binop!(Sub, sub, |a, b| Jet2::zip(a, b, a.value - b.value, |x, y| x - y));
binop!(Mul, mul, Jet2::mul_ref);
binop!(Div, div, |a, b| Jet2::mul_ref(a, &b.recip()));

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Neg for &Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

/// Sum of jets; empty sums are the zero constant.
pub fn sum<'a>(it: impl IntoIterator<Item = &'a Jet2>) -> Jet2 {
    it.into_iter().fold(Jet2::constant(0.0), |acc, j| acc + j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn product_rule_on_xy() {
        let v = Jet2::seed(&[2.0, 3.0]);
        let p = &v[0] * &v[1];
        assert_eq!(p.value, 6.0);
        assert_eq!(p.grad, vec![3.0, 2.0]);
        assert_eq!(p.hess, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn sin_of_square() {
        // f = sin(x^2): f' = 2x cos x^2, f'' = 2 cos x^2 - 4x^2 sin x^2
        let x = 0.7;
        let v = Jet2::seed(&[x]);
        let f = v[0].powi(2).sin();
        assert_abs_diff_eq!(f.grad[0], 2.0 * x * (x * x).cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            f.hess[0],
            2.0 * (x * x).cos() - 4.0 * x * x * (x * x).sin(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn quotient_and_log() {
        // f = ln(x)/y at (2, 4)
        let v = Jet2::seed(&[2.0, 4.0]);
        let f = v[0].ln() / &v[1];
        assert_abs_diff_eq!(f.grad[0], 1.0 / 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.grad[1], -(2f64.ln()) / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.h(0, 1), -1.0 / 32.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.h(1, 1), 2.0 * 2f64.ln() / 64.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_exposes_hessian_row() {
        let v = Jet2::seed(&[1.5, -0.5]);
        let f = &v[0] * &v[0] * &v[1];
        let fx = f.partial(0);
        assert_abs_diff_eq!(fx.value, 2.0 * 1.5 * -0.5);
        assert_eq!(fx.grad, vec![2.0 * -0.5, 2.0 * 1.5]);
        assert!(fx.hess.iter().all(|h| h.is_nan()));
    }

    #[test]
    fn constants_mix_with_any_dimension() {
        let v = Jet2::seed(&[1.0, 2.0, 3.0]);
        let f = 2.0 * &v[2] + 1.0;
        assert_eq!(f.grad, vec![0.0, 0.0, 2.0]);
        let g = Jet2::constant(4.0) - &v[0];
        assert_eq!(g.value, 3.0);
        assert_eq!(g.grad, vec![-1.0, 0.0, 0.0]);
    }
}
