//! Complete exponential sums attached to the delta expansion.
//!
//! Every brute-force evaluator sums in lexicographic residue order. The
//! a-sums over reduced residues are collapsed to Ramanujan sums, which is an
//! exact integer identity; the literal a-loop survives as
//! [`brute_s_literal`] and is checked against the collapsed form in tests.

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::modarith::{
    factorize, gcd, inv_mod, jacobi, ord_p, part_supported_on, quadratic_roots, reduce,
    characters_mod, DirichletCharacter,
};
use crate::numerics::{fft3, RootTable};
use crate::qform::QForm;

const MODULUS_BOUND: u64 = 10_000;
const CHARACTER_AVERAGE_BOUND: u64 = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexSum {
    pub value: Complex64,
    pub terms: u64,
}

impl ComplexSum {
    pub fn one() -> Self {
        Self { value: Complex64::new(1.0, 0.0), terms: 1 }
    }

    pub fn abs(&self) -> f64 {
        self.value.norm()
    }

    pub fn mul(&self, other: &ComplexSum) -> ComplexSum {
        ComplexSum { value: self.value * other.value, terms: self.terms * other.terms }
    }
}

/// Table of c_q(k) for k mod q.
fn ramanujan_table(q: u64) -> Vec<i64> {
    let mut table = vec![0i64; q as usize];
    let divisors = factorize(q).divisors();
    for (k, slot) in table.iter_mut().enumerate() {
        let g = gcd(k as u64, q);
        *slot = divisors.iter().filter(|&&d| g % d == 0).map(|&d| d as i64 * crate::modarith::moebius(q / d)).sum();
    }
    table
}

/// The shared kernel: Σ_{σ mod m} [d | P(σ)]·c_q(P(σ)/d)·e_m(c·σ) where
/// P(σ) = F(sσ + λ) − T.
#[derive(Debug, Clone, Copy)]
struct ProfileSpec<'a> {
    form: &'a QForm,
    m: u64,
    s: i128,
    lambda: [i128; 3],
    target: i128,
    d: u64,
    q: u64,
}

impl ProfileSpec<'_> {
    /// Hands each row R(i, j, ·) to `visit` in lexicographic order and
    /// returns the number of (a, σ) pairs summed.
    fn rows(&self, mut visit: impl FnMut(usize, usize, &[i32])) -> u64 {
        let Self { form, m, s, lambda, target, d, q } = *self;
        let big = q * d;
        let bi = big as i128;
        let table = ramanujan_table(q);
        // weight and pass flag by residue of P mod qd
        let lut: Vec<(i32, bool)> = (0..big)
            .map(|p| if p % d == 0 { (table[(p / d) as usize] as i32, true) } else { (0, false) })
            .collect();
        let mu = m as usize;
        let mut row = vec![0i32; mu];
        let mut passing = 0u64;
        let xs: Vec<[i128; 3]> = (0..m as i128)
            .map(|sig| [0, 1, 2].map(|i| (s * sig + lambda[i]).rem_euclid(bi)))
            .collect();
        let [a11, a22, a33, a12, a13, a23] = form.coeffs().map(|a| (a as i128).rem_euclid(bi));
        let t = target.rem_euclid(bi);
        let (s, l2) = (s.rem_euclid(bi), lambda[2].rem_euclid(bi));
        // along the last axis P(k) = A k² + B k + C mod qd, stepped by differences
        let a = a33 * s % bi * s % bi;
        // branch free: below `big` the subtraction wraps and min keeps the sum
        let add = |x: u64, y: u64| (x + y).min((x + y).wrapping_sub(big));
        for i in 0..mu {
            let x0 = xs[i][0];
            for j in 0..mu {
                let x1 = xs[j][1];
                let lin = (a13 * x0 + a23 * x1) % bi;
                let c0 = (a11 * x0 % bi * x0 + a22 * x1 % bi * x1 + a12 * x0 % bi * x1 + a33 * l2 % bi * l2 + lin * l2 - t)
                    .rem_euclid(bi);
                let b = (2 * a33 % bi * l2 % bi * s + lin * s) % bi;
                let mut p = c0 as u64;
                let mut diff = ((a + b) % bi) as u64;
                let step = (2 * a % bi) as u64;
                for w in row.iter_mut() {
                    let (value, pass) = lut[p as usize];
                    *w = value;
                    passing += pass as u64;
                    p = add(p, diff);
                    diff = add(diff, step);
                }
                visit(i, j, &row);
            }
        }
        passing * crate::modarith::euler_phi(q)
    }

    /// Values at several c, streamed without storing the profile.
    fn eval_many(&self, cs: &[[i128; 3]]) -> Vec<ComplexSum> {
        let roots = RootTable::new(self.m);
        let mu = self.m as usize;
        let cms: Vec<[usize; 3]> = cs.iter().map(|c| c.map(|x| reduce(x, self.m) as usize)).collect();
        let phases: Vec<Vec<Complex64>> =
            cms.iter().map(|cm| (0..mu).map(|k| roots.at(((cm[2] * k) % mu) as i128)).collect()).collect();
        let zero = Complex64::new(0.0, 0.0);
        let mut totals = vec![zero; cs.len()];
        let mut inner = vec![zero; cs.len()];
        let terms = self.rows(|i, j, row| {
            inner.fill(zero);
            for (k, &w) in row.iter().enumerate() {
                if w != 0 {
                    for (acc, phase) in inner.iter_mut().zip(&phases) {
                        *acc += phase[k] * w as f64;
                    }
                }
            }
            for ((total, acc), cm) in totals.iter_mut().zip(&inner).zip(&cms) {
                *total += acc * roots.at(((cm[0] * i + cm[1] * j) % mu) as i128);
            }
        });
        totals.into_iter().map(|value| ComplexSum { value, terms }).collect()
    }

    fn build(&self) -> RamanujanProfile {
        let mu = self.m as usize;
        let mut weights = Vec::with_capacity(mu * mu * mu);
        let terms = self.rows(|_, _, row| weights.extend_from_slice(row));
        RamanujanProfile { spec_m: self.m, weights, terms }
    }
}

/// A [`ProfileSpec`] with its weights R(σ) stored, for repeated evaluation.
#[derive(Debug, Clone)]
struct RamanujanProfile {
    spec_m: u64,
    /// R(σ) flattened in lexicographic order.
    weights: Vec<i32>,
    /// number of (a, σ) pairs summed
    terms: u64,
}

impl RamanujanProfile {
    fn eval(&self, c: [i128; 3]) -> ComplexSum {
        let m = self.spec_m;
        let roots = RootTable::new(m);
        let mu = m as usize;
        let cm = c.map(|x| reduce(x, m) as usize);
        let phase: Vec<Complex64> = (0..mu).map(|k| roots.at(((cm[2] * k) % mu) as i128)).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for (ij, row) in self.weights.chunks_exact(mu).enumerate() {
            let (i, j) = (ij / mu, ij % mu);
            let mut inner = Complex64::new(0.0, 0.0);
            for (&w, z) in row.iter().zip(&phase) {
                if w != 0 {
                    inner += z * w as f64;
                }
            }
            total += inner * roots.at(((cm[0] * i + cm[1] * j) % mu) as i128);
        }
        ComplexSum { value: total, terms: self.terms }
    }

    /// Values at every c mod m, index (c1·m + c2)·m + c3.
    fn table(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.weights.iter().map(|&w| Complex64::new(w as f64, 0.0)).collect();
        fft3(&mut data, self.spec_m as usize, FftDirection::Inverse);
        data
    }
}

fn check_bound(what: &'static str, value: u64, limit: u64) -> Result<()> {
    if value > limit {
        Err(Error::BoundExceeded { what, limit })
    } else {
        Ok(())
    }
}

fn dot(c: [i128; 3], v: [i128; 3]) -> i128 {
    c[0] * v[0] + c[1] * v[1] + c[2] * v[2]
}

fn profile_s(inst: &ProblemInstance, q: u64) -> ProfileSpec<'_> {
    let l = inst.l();
    ProfileSpec { form: &inst.form, m: q * l, s: l as i128, lambda: inst.lambda_n(), target: inst.target(), d: l * l, q }
}

/// S̃_q(c) from its definition.
pub fn brute_s(inst: &ProblemInstance, q: u64, c: [i128; 3]) -> Result<ComplexSum> {
    Ok(brute_s_at(inst, q, &[c])?[0])
}

/// [`brute_s`] at several c, sharing one pass over the residues.
pub fn brute_s_at(inst: &ProblemInstance, q: u64, cs: &[[i128; 3]]) -> Result<Vec<ComplexSum>> {
    if q == 0 {
        return Err(Error::Precondition("q must be positive".into()));
    }
    check_bound("q*L", q * inst.l(), MODULUS_BOUND)?;
    let profile = profile_s(inst, q);
    Ok(profile.eval_many(cs))
}

/// S̃_q(c) with the literal loop over reduced residues a mod q and exact
/// 128-bit values of F; an independent oracle for small q.
pub fn brute_s_literal(inst: &ProblemInstance, q: u64, c: [i128; 3]) -> Result<ComplexSum> {
    let l = inst.l() as i128;
    let m = q as i128 * l;
    check_bound("phi(q)*(qL)^3", (m * m * m * q as i128) as u64, 200_000_000)?;
    let roots = RootTable::new(m as u64);
    let lam = inst.lambda_n();
    let t = inst.target();
    let mut total = Complex64::new(0.0, 0.0);
    let mut terms = 0;
    for s0 in 0..m {
        for s1 in 0..m {
            for s2 in 0..m {
                let x = [l * s0 + lam[0], l * s1 + lam[1], l * s2 + lam[2]];
                let p = inst.form.evaluate(x).ok_or(Error::Overflow("F"))? - t;
                if p % (l * l) != 0 {
                    continue;
                }
                for a in 1..=q as i128 {
                    if gcd(a as u64, q) != 1 {
                        continue;
                    }
                    terms += 1;
                    total += roots.at(a * (p / l) + c[0] * s0 + c[1] * s1 + c[2] * s2);
                }
            }
        }
    }
    Ok(ComplexSum { value: total, terms })
}

/// S̃_q(c) at every c mod qL, index (c1·m + c2)·m + c3 with m = qL.
pub fn s_tilde_table(inst: &ProblemInstance, q: u64) -> Result<Vec<Complex64>> {
    check_bound("q*L", q * inst.l(), MODULUS_BOUND)?;
    Ok(profile_s(inst, q).build().table())
}

/// (q₁, q₂) with q₂ the Ω-part of q.
pub fn crt_split(inst: &ProblemInstance, q: u64) -> (u64, u64) {
    split_by_omega(inst.omega(), q)
}

pub fn split_by_omega(omega: i128, q: u64) -> (u64, u64) {
    let q2 = part_supported_on(q, omega.unsigned_abs() as u64);
    (q / q2, q2)
}

fn check_split(inst: &ProblemInstance, q1: u64, q2: u64) -> Result<()> {
    if q1 == 0 || q2 == 0 {
        return Err(Error::Precondition("q1, q2 must be positive".into()));
    }
    let q2_omega = (q2 as u128 * inst.omega().unsigned_abs()) % q1 as u128;
    if crate::modarith::gcd(q1, q2_omega as u64) != 1 {
        return Err(Error::Precondition(format!("gcd(q1 = {q1}, q2·Ω) != 1")));
    }
    Ok(())
}

/// S̃⁽¹⁾: Σ_{σ mod q₁} Σ*_{a mod q₁} e_{q₁}(a(F(q₂L²σ + λ_N) − m₀N) + c·σ).
pub fn brute_s1(inst: &ProblemInstance, q1: u64, q2: u64, c: [i128; 3]) -> Result<ComplexSum> {
    Ok(brute_s1_at(inst, q1, q2, &[c])?[0])
}

pub fn brute_s1_at(inst: &ProblemInstance, q1: u64, q2: u64, cs: &[[i128; 3]]) -> Result<Vec<ComplexSum>> {
    check_split(inst, q1, q2)?;
    check_bound("q1", q1, MODULUS_BOUND)?;
    Ok(profile_s1(inst, q1, q2).eval_many(cs))
}

/// S̃⁽¹⁾ at every c mod q₁.
pub fn s1_table(inst: &ProblemInstance, q1: u64, q2: u64) -> Result<Vec<Complex64>> {
    check_split(inst, q1, q2)?;
    check_bound("q1", q1, 1_000)?;
    Ok(profile_s1(inst, q1, q2).build().table())
}

fn profile_s1(inst: &ProblemInstance, q1: u64, q2: u64) -> ProfileSpec<'_> {
    let l = inst.l() as i128;
    ProfileSpec { form: &inst.form, m: q1, s: q2 as i128 * l * l, lambda: inst.lambda_n(), target: inst.target(), d: 1, q: q1 }
}

/// S̃⁽²⁾: Σ_{σ mod q₂L, L² | P} Σ*_{a mod q₂} e_{q₂L}(a·P/L + c·σ) with
/// P = F(Lq₁σ + λ_N) − m₀N.
pub fn brute_s2(inst: &ProblemInstance, q1: u64, q2: u64, c: [i128; 3]) -> Result<ComplexSum> {
    Ok(brute_s2_at(inst, q1, q2, &[c])?[0])
}

pub fn brute_s2_at(inst: &ProblemInstance, q1: u64, q2: u64, cs: &[[i128; 3]]) -> Result<Vec<ComplexSum>> {
    check_split(inst, q1, q2)?;
    check_bound("q2*L", q2 * inst.l(), MODULUS_BOUND)?;
    Ok(profile_s2(inst, q1, q2).eval_many(cs))
}

fn profile_s2(inst: &ProblemInstance, q1: u64, q2: u64) -> ProfileSpec<'_> {
    let l = inst.l();
    ProfileSpec { form: &inst.form, m: q2 * l, s: (l * q1) as i128, lambda: inst.lambda_n(), target: inst.target(), d: l * l, q: q2 }
}

/// S̃⁽²⁾ at every c mod q₂L.
pub fn s2_table(inst: &ProblemInstance, q1: u64, q2: u64) -> Result<Vec<Complex64>> {
    check_split(inst, q1, q2)?;
    check_bound("q2*L", q2 * inst.l(), MODULUS_BOUND)?;
    Ok(profile_s2(inst, q1, q2).build().table())
}

/// Closed form of S̃⁽¹⁾ for odd q₁ coprime to m₀N and q₂Ω:
///
/// e_{q₁}(−k̄·λ_N·c) · q₁² · (−m₀NΔ_F / q₁) · Σ_{u : (Δ_F u)² ≡ k̄²m₀NΔ_F F*(c)} e_{q₁}(u),
///
/// where k = q₂L² and k̄ is its inverse mod q₁.
pub fn lemma21_eval(inst: &ProblemInstance, q1: u64, q2: u64, c: [i128; 3]) -> Result<ComplexSum> {
    check_split(inst, q1, q2)?;
    if q1 % 2 == 0 {
        return Err(Error::Precondition(format!("q1 = {q1} must be odd")));
    }
    let target = inst.target();
    if crate::modarith::gcd_i128(q1 as i128, target) != 1 {
        return Err(Error::Precondition(format!("gcd(q1 = {q1}, m0 N) != 1")));
    }
    if q1 == 1 {
        return Ok(ComplexSum::one());
    }
    let l = inst.l() as i128;
    let delta = inst.form.determinant();
    let k = q2 as i128 * l * l;
    let k_inv = inv_mod(k, q1).expect("q1 coprime to q2 L") as i128;
    let delta_inv = inv_mod(delta, q1).expect("q1 coprime to Δ") as i128;
    let roots_table = RootTable::new(q1);
    let q1i = q1 as i128;
    let lam_dot = reduce(dot(inst.lambda_n(), c), q1) as i128;
    let front = roots_table.at(-(k_inv * lam_dot % q1i));
    let sign = jacobi(-(target % q1i) * (delta % q1i), q1)? as f64;
    let dual = reduce(inst.form.dual_value(c), q1) as i128;
    let rad = reduce(
        (k_inv * k_inv % q1i) * reduce(target, q1) as i128 % q1i * reduce(delta, q1) as i128 % q1i * dual,
        q1,
    );
    let mut root_sum = Complex64::new(0.0, 0.0);
    for v in quadratic_roots(rad as i128, q1) {
        root_sum += roots_table.at(delta_inv * v as i128 % q1i);
    }
    let value = front * root_sum * (q1 * q1) as f64 * sign;
    Ok(ComplexSum { value, terms: q1 * q1 * q1 * crate::modarith::euler_phi(q1) })
}

/// Evaluator of 𝒮_l(x; c) over the residue classes β ≡ λ mod L with
/// F(β) ≡ T mod L², for all x at once.
#[derive(Debug, Clone)]
pub struct CalSProfile {
    l: u64,
    big_l: u64,
    lambda: [i128; 3],
    profile: RamanujanProfile,
}

impl CalSProfile {
    fn build(form: &QForm, l: u64, big_l: u64, lambda: [i128; 3], target: i128) -> Result<Self> {
        check_bound("l*L^2", l * big_l * big_l, MODULUS_BOUND)?;
        let profile =
            ProfileSpec { form, m: l * big_l, s: big_l as i128, lambda, target, d: big_l * big_l, q: l }.build();
        Ok(Self { l, big_l, lambda, profile })
    }

    pub fn new(inst: &ProblemInstance, l: u64) -> Result<Self> {
        Self::build(&inst.form, l, inst.l(), inst.lambda_n(), inst.target())
    }

    pub fn modulus(&self) -> u64 {
        self.l * self.big_l * self.big_l
    }

    pub fn eval(&self, x: i128, c: [i128; 3]) -> Result<ComplexSum> {
        let full = self.modulus();
        let x_inv = inv_mod(x, full)
            .filter(|_| gcd(reduce(x, self.l * self.big_l), self.l * self.big_l) == 1)
            .ok_or_else(|| Error::Precondition(format!("x = {x} not a unit mod lL")))? as i128;
        // β = λ + Lγ: e_{lL²}(x̄c·β) = e_{lL²}(x̄c·λ)·e_{lL}(x̄c·γ)
        let xc = c.map(|ci| reduce(x_inv * reduce(ci, full) as i128, full) as i128);
        let front = crate::numerics::e(reduce(dot(xc, self.lambda), full) as f64 / full as f64);
        let inner = self.profile.eval(xc);
        Ok(ComplexSum { value: front * inner.value, terms: inner.terms })
    }

    /// 𝒮_l(x; c) at every unit x mod lL², from one transform of the profile.
    pub fn unit_values(&self, c: [i128; 3]) -> Vec<(u64, Complex64)> {
        let full = self.modulus();
        let m = self.l * self.big_l;
        let table = self.profile.table();
        (0..full)
            .filter(|&x| gcd(x, m) == 1 && gcd(x, full) == 1)
            .map(|x| {
                let x_inv = inv_mod(x as i128, full).expect("unit") as i128;
                let xc = c.map(|ci| reduce(x_inv * reduce(ci, full) as i128, full) as i128);
                let front = crate::numerics::e(reduce(dot(xc, self.lambda), full) as f64 / full as f64);
                let idx = xc.map(|v| (v as u64 % m) as usize);
                let mu = m as usize;
                (x, front * table[(idx[0] * mu + idx[1]) * mu + idx[2]])
            })
            .collect()
    }
}

/// 𝒮_l(x; c).
pub fn cal_s(inst: &ProblemInstance, l: u64, x: i128, c: [i128; 3]) -> Result<ComplexSum> {
    CalSProfile::new(inst, l)?.eval(x, c)
}

/// 𝒜_l(χ; c) = φ(lL²)⁻¹ Σ_x conj(χ(x))·𝒮_l(x; c).
pub fn cal_a(inst: &ProblemInstance, l: u64, chi: &DirichletCharacter, c: [i128; 3]) -> Result<ComplexSum> {
    let profile = CalSProfile::new(inst, l)?;
    cal_a_with(&profile, chi, c)
}

/// 𝒜_l(χ; c) for every character mod lL², in [`characters_mod`] order.
pub fn cal_a_all(inst: &ProblemInstance, l: u64, c: [i128; 3]) -> Result<Vec<(DirichletCharacter, Complex64)>> {
    let profile = CalSProfile::new(inst, l)?;
    let n = profile.modulus();
    check_bound("l*L^2", n, CHARACTER_AVERAGE_BOUND)?;
    let values = profile.unit_values(c);
    let chars = characters_mod(n)?;
    Ok(chars
        .into_iter()
        .map(|chi| {
            let terms: Vec<Complex64> = values.iter().map(|&(x, s)| chi.value(x as i128).conj() * s).collect();
            let a = crate::numerics::pairwise_sum_complex(&terms) / values.len() as f64;
            (chi, a)
        })
        .collect())
}

pub fn cal_a_with(profile: &CalSProfile, chi: &DirichletCharacter, c: [i128; 3]) -> Result<ComplexSum> {
    let n = profile.modulus();
    check_bound("l*L^2", n, CHARACTER_AVERAGE_BOUND)?;
    if chi.modulus() != n {
        return Err(Error::Precondition(format!("character modulus {} != lL^2 = {n}", chi.modulus())));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    let mut terms = 0u64;
    for x in 0..n {
        if gcd(x, n) != 1 {
            continue;
        }
        let s = profile.eval(x as i128, c)?;
        total += chi.value(x as i128).conj() * s.value;
        count += 1;
        terms = terms.max(s.terms);
    }
    Ok(ComplexSum { value: total / count as f64, terms })
}

fn p0_split(inst: &ProblemInstance, q2: u64) -> Result<(u64, u64, u32)> {
    let ord = ord_p(q2 as u128, inst.p0);
    if ord > inst.h {
        return Err(Error::Precondition(format!("ord_p0(q2) = {ord} exceeds h = {}", inst.h)));
    }
    let flat = inst.p0.pow(ord);
    Ok((flat, q2 / flat, ord))
}

/// 𝒯⁽¹⁾ over the p₀-part b of q₂: Σ*_{a mod b} Σ_{β mod b} e_b(a F(β) + x̄ c·β).
pub fn cal_t1(inst: &ProblemInstance, q2: u64, x: i128, c: [i128; 3]) -> Result<ComplexSum> {
    let (flat, _, _) = p0_split(inst, q2)?;
    if flat == 1 {
        return Ok(ComplexSum::one());
    }
    let x_inv = inv_mod(x, flat).ok_or_else(|| Error::Precondition("x not a unit mod p0-part".into()))? as i128;
    let spec = ProfileSpec { form: &inst.form, m: flat, s: 1, lambda: [0; 3], target: 0, d: 1, q: flat };
    Ok(spec.eval_many(&[c.map(|ci| ci * x_inv)])[0])
}

/// 𝒯⁽²⁾ over the p₀-free part n of q₂:
/// Σ*_{a mod n} Σ_{β mod nL², F(β) ≡ m₀ mod L², β ≡ λ mod L} e_{nL²}(a(F(β) − m₀) + x̄ c·β).
pub fn cal_t2(inst: &ProblemInstance, q2: u64, x: i128, c: [i128; 3]) -> Result<ComplexSum> {
    let (_, sharp, _) = p0_split(inst, q2)?;
    let lambda = inst.cong.residue.map(|r| r as i128);
    CalSProfile::build(&inst.form, sharp, inst.l(), lambda, inst.m0 as i128)?.eval(x, c)
}

/// The argument p₀^{−(h − ord_{p₀} q₂)}·x at which 𝒯⁽²⁾ enters the
/// factorization of 𝒮_{q₂}(x; c).
pub fn cal_t2_argument(inst: &ProblemInstance, q2: u64, x: i128) -> Result<i128> {
    let (_, sharp, ord) = p0_split(inst, q2)?;
    let l = inst.l();
    let modulus = sharp * l * l;
    let p_inv = inv_mod(inst.p0 as i128, modulus).expect("p0 coprime to q2-sharp L") as i128;
    let mut arg = reduce(x, modulus) as i128;
    for _ in 0..(inst.h - ord) {
        arg = arg * p_inv % modulus as i128;
    }
    Ok(arg)
}
