//! Truncated univariate Taylor series, used to differentiate Hamiltonians
//! along rays exactly instead of by finite differences.

use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_ORDER: usize = 15;

/// Scalar arithmetic shared by `f64` and [`Jet`]; built-in Hamiltonians are
/// written once against this trait.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Add<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn sqrt(self) -> Self;
    /// Constant term.
    fn re(self) -> f64;

    fn sq(self) -> Self {
        self * self
    }

    fn powi(self, n: u32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn re(self) -> f64 {
        self
    }
}

/// `Σ c_j t^j` truncated after `order`. Constants carry the maximal order so
/// they never truncate the other operand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; MAX_ORDER + 1],
    order: usize,
}

impl Jet {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; MAX_ORDER + 1];
        c[0] = x;
        Self { c, order: MAX_ORDER }
    }

    /// `x0 + dx t`.
    pub fn variable(x0: f64, dx: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; MAX_ORDER + 1];
        c[0] = x0;
        if order >= 1 {
            c[1] = dx;
        }
        Self { c, order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, j: usize) -> f64 {
        if j <= self.order {
            self.c[j]
        } else {
            0.0
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut c = [0.0; MAX_ORDER + 1];
        for j in 0..=order {
            c[j] = self.c[j] + o.c[j];
        }
        Jet { c, order }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut c = [0.0; MAX_ORDER + 1];
        for i in 0..=order {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..=order - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c, order }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, s: f64) -> Jet {
        for x in self.c.iter_mut() {
            *x *= s;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, s: f64) -> Jet {
        self.c[0] += s;
        self
    }
}

impl Real for Jet {
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }

    /// Requires a positive constant term.
    fn sqrt(self) -> Self {
        let mut r = [0.0; MAX_ORDER + 1];
        let r0 = self.c[0].sqrt();
        r[0] = r0;
        for k in 1..=self.order {
            let mut s = self.c[k];
            for j in 1..k {
                s -= r[j] * r[k - j];
            }
            r[k] = s / (2.0 * r0);
        }
        Jet { c: r, order: self.order }
    }

    fn re(self) -> f64 {
        self.c[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_sqrt_round_trip() {
        let t = Jet::variable(2.0, 1.0, 6);
        let x = t * t + 1.0; // 5 + 4t + t²
        let r = x.sqrt();
        let back = r * r;
        for j in 0..=6 {
            assert!((back.coeff(j) - x.coeff(j)).abs() < 1e-13);
        }
    }

    #[test]
    fn sqrt_series_of_one_minus_t() {
        // √(1 - t) = 1 - t/2 - t²/8 - t³/16 ...
        let x = Jet::constant(1.0) - Jet::variable(0.0, 1.0, 4);
        let r = x.sqrt();
        let expect = [1.0, -0.5, -0.125, -0.0625, -0.0390625];
        for (j, e) in expect.iter().enumerate() {
            assert!((r.coeff(j) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_do_not_truncate() {
        let t = Jet::variable(0.0, 1.0, 3);
        let x = Jet::constant(2.0) * t;
        assert_eq!(x.order(), 3);
        assert_eq!(x.coeff(1), 2.0);
    }
}
