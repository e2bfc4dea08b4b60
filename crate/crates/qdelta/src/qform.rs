//! Classically integral ternary quadratic forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modarith::{is_square, jacobi, kronecker};

/// F(x) = a11 x1² + a22 x2² + a33 x3² + a12 x1x2 + a13 x1x3 + a23 x2x3,
/// with every cross coefficient even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QForm {
    coeffs: [i64; 6],
    #[serde(skip)]
    gram: [[i64; 3]; 3],
    #[serde(skip)]
    det: i128,
}

impl QForm {
    /// Coefficients in the order (a11, a22, a33, a12, a13, a23).
    pub fn new(coeffs: [i64; 6]) -> Result<Self> {
        let [a11, a22, a33, a12, a13, a23] = coeffs;
        for (name, v) in [("a12", a12), ("a13", a13), ("a23", a23)] {
            if v % 2 != 0 {
                return Err(Error::OddCrossTerm { name, value: v });
            }
        }
        let gram = [
            [a11, a12 / 2, a13 / 2],
            [a12 / 2, a22, a23 / 2],
            [a13 / 2, a23 / 2, a33],
        ];
        let det = det3(&gram.map(|r| r.map(|x| x as i128)));
        if det == 0 {
            return Err(Error::Degenerate);
        }
        Ok(Self { coeffs, gram, det })
    }

    pub fn diagonal(a: i64, b: i64, c: i64) -> Result<Self> {
        Self::new([a, b, c, 0, 0, 0])
    }

    pub fn coeffs(&self) -> [i64; 6] {
        self.coeffs
    }

    pub fn gram(&self) -> [[i64; 3]; 3] {
        self.gram
    }

    /// Δ_F = det of the Gram matrix.
    pub fn determinant(&self) -> i128 {
        self.det
    }

    /// Adjugate of the Gram matrix, M·adj(M) = Δ_F·I.
    pub fn adjugate(&self) -> [[i128; 3]; 3] {
        let m = self.gram.map(|r| r.map(|x| x as i128));
        let mut adj = [[0i128; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                adj[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            }
        }
        adj
    }

    /// Exact value, None on 128-bit overflow.
    pub fn evaluate(&self, x: [i128; 3]) -> Option<i128> {
        let [a11, a22, a33, a12, a13, a23] = self.coeffs.map(|c| c as i128);
        let terms = [
            a11.checked_mul(x[0].checked_mul(x[0])?)?,
            a22.checked_mul(x[1].checked_mul(x[1])?)?,
            a33.checked_mul(x[2].checked_mul(x[2])?)?,
            a12.checked_mul(x[0].checked_mul(x[1])?)?,
            a13.checked_mul(x[0].checked_mul(x[2])?)?,
            a23.checked_mul(x[1].checked_mul(x[2])?)?,
        ];
        terms.iter().try_fold(0i128, |acc, &t| acc.checked_add(t))
    }

    /// Unchecked evaluation for hot loops over small residues.
    #[inline]
    pub fn value(&self, x: [i64; 3]) -> i64 {
        let [a11, a22, a33, a12, a13, a23] = self.coeffs;
        a11 * x[0] * x[0]
            + a22 * x[1] * x[1]
            + a33 * x[2] * x[2]
            + a12 * x[0] * x[1]
            + a13 * x[0] * x[2]
            + a23 * x[1] * x[2]
    }

    #[inline]
    pub fn value_f64(&self, t: [f64; 3]) -> f64 {
        let [a11, a22, a33, a12, a13, a23] = self.coeffs.map(|c| c as f64);
        a11 * t[0] * t[0]
            + a22 * t[1] * t[1]
            + a33 * t[2] * t[2]
            + a12 * t[0] * t[1]
            + a13 * t[0] * t[2]
            + a23 * t[1] * t[2]
    }

    /// ∇F(t) = 2Mt.
    #[inline]
    pub fn gradient_f64(&self, t: [f64; 3]) -> [f64; 3] {
        let m = self.gram;
        let mut g = [0.0; 3];
        for i in 0..3 {
            g[i] = 2.0 * (m[i][0] as f64 * t[0] + m[i][1] as f64 * t[1] + m[i][2] as f64 * t[2]);
        }
        g
    }

    /// ∇F(x) = 2Mx over the integers.
    pub fn gradient(&self, x: [i128; 3]) -> [i128; 3] {
        let m = self.gram;
        let mut g = [0i128; 3];
        for i in 0..3 {
            g[i] = 2 * (m[i][0] as i128 * x[0] + m[i][1] as i128 * x[1] + m[i][2] as i128 * x[2]);
        }
        g
    }

    /// F*(c) = cᵀ adj(M) c.
    pub fn dual_value(&self, c: [i128; 3]) -> i128 {
        let adj = self.adjugate();
        let mut s = 0i128;
        for i in 0..3 {
            for j in 0..3 {
                s += c[i] * adj[i][j] * c[j];
            }
        }
        s
    }

    pub fn dual_form(&self) -> Result<QForm> {
        let adj = self.adjugate();
        let fit = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("dual form coefficient"));
        QForm::new([
            fit(adj[0][0])?,
            fit(adj[1][1])?,
            fit(adj[2][2])?,
            fit(2 * adj[0][1])?,
            fit(2 * adj[0][2])?,
            fit(2 * adj[1][2])?,
        ])
    }

    /// M·x.
    pub fn gram_apply(&self, x: [i128; 3]) -> [i128; 3] {
        let m = self.gram;
        let mut out = [0i128; 3];
        for i in 0..3 {
            out[i] = (0..3).map(|j| m[i][j] as i128 * x[j]).sum();
        }
        out
    }
}

fn det3(m: &[[i128; 3]; 3]) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The real character attached to −m₀Δ_F.
///
/// `value` is the Kronecker symbol of the fundamental discriminant of
/// ℚ(√(−m₀Δ_F)), so it is a primitive character and agrees with
/// `jacobi(−m₀Δ_F, n)` for odd n coprime to 2m₀Δ_F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Psi0 {
    pub radicand: i128,
    pub square: bool,
    pub discriminant: i128,
}

impl Psi0 {
    pub fn new(form: &QForm, m0: i64) -> Self {
        let radicand = -(m0 as i128) * form.determinant();
        assert!(radicand != 0, "m0 must be nonzero");
        let square = is_square(radicand);
        let discriminant = if square { 1 } else { fundamental_discriminant(radicand) };
        Self { radicand, square, discriminant }
    }

    pub fn is_principal(&self) -> bool {
        self.square
    }

    /// Conductor |d| of the primitive character.
    pub fn conductor(&self) -> u64 {
        self.discriminant.unsigned_abs() as u64
    }

    pub fn value(&self, n: u64) -> i32 {
        if self.square {
            return i32::from(n != 0);
        }
        kronecker(self.discriminant, n)
    }

    /// The literal symbol (−m₀Δ_F / n) for odd n coprime to 2m₀Δ_F, 0 otherwise.
    pub fn jacobi_value(&self, n: u64) -> i32 {
        if n % 2 == 0 || crate::modarith::gcd_i128(self.radicand, n as i128) != 1 {
            return 0;
        }
        jacobi(self.radicand, n).expect("odd n")
    }
}

fn fundamental_discriminant(d: i128) -> i128 {
    let sign = d.signum();
    let mut core = d.unsigned_abs();
    let mut p = 2u128;
    let mut sqfree = 1u128;
    while p * p <= core {
        let mut e = 0;
        while core % p == 0 {
            core /= p;
            e += 1;
        }
        if e % 2 == 1 {
            sqfree *= p;
        }
        p += 1;
    }
    sqfree *= core;
    let d0 = sign * sqfree as i128;
    if d0.rem_euclid(4) == 1 { d0 } else { 4 * d0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CClass {
    Zero,
    ExceptionalTypeI,
    ExceptionalTypeII,
    Ordinary,
}

impl CClass {
    pub fn tag(&self) -> &'static str {
        match self {
            CClass::Zero => "zero",
            CClass::ExceptionalTypeI => "type1",
            CClass::ExceptionalTypeII => "type2",
            CClass::Ordinary => "ordinary",
        }
    }
}

/// Exceptional when m₀Δ_F F*(c) is a square (Type II when F*(c) = 0).
pub fn classify_c(form: &QForm, m0: i64, c: [i128; 3]) -> CClass {
    if c == [0, 0, 0] {
        return CClass::Zero;
    }
    let dual = form.dual_value(c);
    if dual == 0 {
        return CClass::ExceptionalTypeII;
    }
    if is_square(m0 as i128 * form.determinant() * dual) {
        CClass::ExceptionalTypeI
    } else {
        CClass::Ordinary
    }
}
