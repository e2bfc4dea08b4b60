//! Congruence data and the problem instance Γ_w(N) is defined on.

use serde::Serialize;

use crate::arch::WeightSpec;
use crate::error::{Error, Result};
use crate::modarith::{is_prime, reduce};
use crate::qform::{Psi0, QForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CongruenceDatum {
    pub modulus: u64,
    pub residue: [i64; 3],
}

impl CongruenceDatum {
    pub fn trivial() -> Self {
        Self { modulus: 1, residue: [0; 3] }
    }

    pub fn new(form: &QForm, m0: i64, modulus: u64, residue: [i64; 3]) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Precondition("L must be positive".into()));
        }
        let residue = residue.map(|r| reduce(r as i128, modulus) as i64);
        let f = form.evaluate(residue.map(|r| r as i128)).ok_or(Error::Overflow("F(λ)"))?;
        if (f - m0 as i128).rem_euclid(modulus as i128) != 0 {
            return Err(Error::Precondition(format!("F(λ) = {f} is not ≡ m0 = {m0} mod L = {modulus}")));
        }
        Ok(Self { modulus, residue })
    }
}

/// Everything Γ_w(N) depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemInstance {
    pub form: QForm,
    pub m0: i64,
    pub p0: u64,
    pub h: u32,
    pub cong: CongruenceDatum,
    pub weight: WeightSpec,
}

impl ProblemInstance {
    pub fn new(form: QForm, m0: i64, p0: u64, h: u32, cong: CongruenceDatum, weight: WeightSpec) -> Result<Self> {
        if m0 == 0 {
            return Err(Error::Precondition("m0 must be nonzero".into()));
        }
        if !is_prime(p0) {
            return Err(Error::Precondition(format!("p0 = {p0} is not prime")));
        }
        if cong.modulus % p0 == 0 {
            return Err(Error::Precondition(format!("p0 = {p0} divides L = {}", cong.modulus)));
        }
        // re-validate F(λ) ≡ m0 mod L
        CongruenceDatum::new(&form, m0, cong.modulus, cong.residue)?;
        let inst = Self { form, m0, p0, h, cong, weight };
        inst.n_big_checked()?;
        Ok(inst)
    }

    pub fn with_h(&self, h: u32) -> Result<Self> {
        Self::new(self.form, self.m0, self.p0, h, self.cong, self.weight)
    }

    fn n_big_checked(&self) -> Result<i128> {
        (self.p0 as i128)
            .checked_pow(2 * self.h)
            .filter(|n| n.checked_mul(self.m0 as i128).is_some())
            .ok_or(Error::Overflow("N = p0^(2h)"))
    }

    pub fn l(&self) -> u64 {
        self.cong.modulus
    }

    /// N = p₀^{2h}.
    pub fn n_big(&self) -> i128 {
        (self.p0 as i128).pow(2 * self.h)
    }

    /// m₀N.
    pub fn target(&self) -> i128 {
        self.m0 as i128 * self.n_big()
    }

    pub fn sqrt_n(&self) -> f64 {
        (self.p0 as f64).powi(self.h as i32)
    }

    /// λ_N = p₀^h λ reduced to [0, L).
    pub fn lambda_n(&self) -> [i128; 3] {
        let l = self.l() as i128;
        let ph = (self.p0 as i128).pow(self.h) % l;
        self.cong.residue.map(|r| (ph * r as i128).rem_euclid(l))
    }

    /// Q = √N / L.
    pub fn q_param(&self) -> f64 {
        self.sqrt_n() / self.l() as f64
    }

    /// Ω = 2LΔ_F.
    pub fn omega(&self) -> i128 {
        2 * self.l() as i128 * self.form.determinant()
    }

    pub fn psi0(&self) -> Psi0 {
        Psi0::new(&self.form, self.m0)
    }
}
