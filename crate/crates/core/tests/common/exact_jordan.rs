//! Exact semisimple part of a rational matrix.
//!
//! With `p` the squarefree part of the characteristic polynomial, the Newton
//! iteration `S <- S - p(S) p'(S)^{-1}` started at `A` reaches `A_s` in
//! finitely many steps, all in rational arithmetic.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    pub n: usize,
    pub a: Vec<Q>,
}

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

impl QMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![Q::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Q::one();
        }
        m
    }

    pub fn from_ints(n: usize, rows: &[i64]) -> Self {
        Self { n, a: rows.iter().map(|&x| q(x, 1)).collect() }
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, o: &QMat) -> QMat {
        let n = self.n;
        let mut out = QMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.get(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + x * o.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, o: &QMat) -> QMat {
        QMat { n: self.n, a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, o: &QMat) -> QMat {
        QMat { n: self.n, a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect() }
    }

    pub fn scale(&self, s: &Q) -> QMat {
        QMat { n: self.n, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn transpose(&self) -> QMat {
        let mut out = QMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn trace(&self) -> Q {
        (0..self.n).fold(Q::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|x| x.is_zero())
    }

    pub fn inverse(&self) -> Option<QMat> {
        let n = self.n;
        let mut m = self.clone();
        let mut inv = QMat::identity(n);
        for c in 0..n {
            let piv = (c..n).find(|&r| !m.get(r, c).is_zero())?;
            if piv != c {
                for j in 0..n {
                    m.a.swap(piv * n + j, c * n + j);
                    inv.a.swap(piv * n + j, c * n + j);
                }
            }
            let d = m.get(c, c).clone();
            for j in 0..n {
                let (x, y) = (m.get(c, j) / &d, inv.get(c, j) / &d);
                m.set(c, j, x);
                inv.set(c, j, y);
            }
            for r in 0..n {
                if r == c || m.get(r, c).is_zero() {
                    continue;
                }
                let f = m.get(r, c).clone();
                for j in 0..n {
                    let x = m.get(r, j) - &f * m.get(c, j);
                    let y = inv.get(r, j) - &f * inv.get(c, j);
                    m.set(r, j, x);
                    inv.set(r, j, y);
                }
            }
        }
        Some(inv)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).to_f64().unwrap())
    }

    pub fn max_abs(&self) -> Q {
        self.a.iter().map(|x| x.abs()).fold(Q::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<Q>);

impl Poly {
    fn trim(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().unwrap().is_zero() {
            self.0.pop();
        }
        self
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![Q::zero()]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * q(i as i64, 1))
                .collect(),
        )
        .trim()
    }

    /// Quotient and remainder.
    fn divmod(&self, d: &Poly) -> (Poly, Poly) {
        let d = d.clone().trim();
        let mut r = self.clone().trim();
        if r.degree() < d.degree() {
            return (Poly(vec![Q::zero()]), r);
        }
        let mut quo = vec![Q::zero(); r.degree() - d.degree() + 1];
        let lead = d.0.last().unwrap().clone();
        while !r.is_zero() && r.degree() >= d.degree() {
            let shift = r.degree() - d.degree();
            let f = r.0.last().unwrap() / &lead;
            for (i, c) in d.0.iter().enumerate() {
                let v = &r.0[i + shift] - &f * c;
                r.0[i + shift] = v;
            }
            quo[shift] = f;
            r = r.trim();
            if r.0.len() == 1 && r.0[0].is_zero() {
                break;
            }
        }
        (Poly(quo).trim(), r)
    }

    fn monic(self) -> Poly {
        let lead = self.0.last().unwrap().clone();
        Poly(self.0.iter().map(|c| c / &lead).collect())
    }

    pub fn gcd(&self, o: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone().trim(), o.clone().trim());
        while !b.is_zero() {
            let (_, r) = a.divmod(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn eval_matrix(&self, m: &QMat) -> QMat {
        let mut acc = QMat::zeros(m.n);
        for c in self.0.iter().rev() {
            acc = acc.mul(m).add(&QMat::identity(m.n).scale(c));
        }
        acc
    }
}

/// Faddeev–LeVerrier: `det(tI - A)`.
pub fn char_poly(a: &QMat) -> Poly {
    let n = a.n;
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    let mut m = QMat::zeros(n);
    for k in 1..=n {
        m = a.mul(&m).add(&QMat::identity(n).scale(&c[n - k + 1]));
        c[n - k] = -(a.mul(&m).trace()) / q(k as i64, 1);
    }
    Poly(c)
}

/// Exact semisimple part of `a`.
pub fn semisimple_part(a: &QMat) -> QMat {
    let chi = char_poly(a);
    let (p, _) = chi.divmod(&chi.gcd(&chi.derivative()));
    let dp = p.derivative();
    let mut s = a.clone();
    for _ in 0..64 {
        let ps = p.eval_matrix(&s);
        if ps.is_zero() {
            return s;
        }
        let inv = dp.eval_matrix(&s).inverse().expect("p'(S) invertible");
        s = s.sub(&ps.mul(&inv));
    }
    panic!("Newton iteration for the semisimple part did not terminate");
}

/// Canonical `Ω` as a rational matrix.
pub fn omega(n: usize) -> QMat {
    let h = n / 2;
    let mut w = QMat::zeros(n);
    for i in 0..h {
        w.set(i, h + i, Q::one());
        w.set(h + i, i, -Q::one());
    }
    w
}

/// Hamiltonian matrix `Ω H` of the quadratic form `½ vᵀ H v`.
pub fn hamiltonian_matrix(h: &QMat) -> QMat {
    omega(h.n).mul(h)
}

/// `[[I, S], [0, I]]` with `S` symmetric.
pub fn upper_shear(s: &[i64], half: usize, den: i64) -> QMat {
    let n = 2 * half;
    let mut t = QMat::identity(n);
    for i in 0..half {
        for j in 0..half {
            let v = q(s[i * half + j] + s[j * half + i], 2 * den);
            t.set(i, half + j, v);
        }
    }
    t
}

/// `[[I, 0], [S, I]]` with `S` symmetric.
pub fn lower_shear(s: &[i64], half: usize, den: i64) -> QMat {
    upper_shear(s, half, den).transpose()
}

/// `[[M, 0], [0, M^{-T}]]`.
pub fn block_transform(m: &[i64], half: usize) -> QMat {
    let mm = QMat::from_ints(half, m);
    let mit = mm.inverse().expect("invertible block").transpose();
    let n = 2 * half;
    let mut t = QMat::zeros(n);
    for i in 0..half {
        for j in 0..half {
            t.set(i, j, mm.get(i, j).clone());
            t.set(half + i, half + j, mit.get(i, j).clone());
        }
    }
    t
}

pub fn conjugate(a: &QMat, t: &QMat) -> QMat {
    t.mul(a).mul(&t.inverse().expect("invertible transform"))
}
