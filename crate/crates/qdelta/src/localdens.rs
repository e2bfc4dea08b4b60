//! p-adic local densities, the modified singular series and L(1, ψ₀).
//!
//! Solutions mod p^K are counted by walking the tree of solutions digit by
//! digit. A node x mod p^j with v = ord_p ∇F(x) and j ≥ max(2v + 1, v + e)
//! (e = ord_p L, below which digits are pinned to λ) has every class mod
//! p^{j−v} lifting uniformly, so it contributes p^{2(K−j)} and is not
//! expanded further.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::modarith::{kronecker, ord_p, primes_up_to};
use crate::qform::QForm;

/// p^{3k} above which sigma_p does not re-enumerate level k* + 1 as a check.
const RECHECK_NODES: u128 = 20_000_000;
const MAX_MODULUS: u128 = 1 << 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDensity {
    pub p: u64,
    pub k_star: u32,
    /// solutions mod p^{k*} (primitive ones for the cone density)
    pub count: u128,
    pub numerator: u128,
    pub denominator: u128,
    pub value: f64,
    /// solutions mod p^{k*+1} when that level was enumerated independently
    pub count_next: Option<u128>,
}

impl LocalDensity {
    fn from_ratio(p: u64, k_star: u32, count: u128, num: u128, den: u128, count_next: Option<u128>) -> Self {
        let g = gcd_u128(num, den).max(1);
        let (numerator, denominator) = if num == 0 { (0, 1) } else { (num / g, den / g) };
        Self { p, k_star, count, numerator, denominator, value: num as f64 / den as f64, count_next }
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A congruence-counting problem: x mod p^K with F(x) ≡ T mod p^K and
/// x ≡ λ mod p^e.
#[derive(Debug, Clone, Copy)]
pub struct LocalProblem<'a> {
    pub form: &'a QForm,
    pub target: i128,
    pub p: u64,
    pub lambda: [i128; 3],
    pub e: u32,
    /// restrict to x ≢ 0 mod p
    pub primitive: bool,
}

#[derive(Debug, Clone, Copy)]
struct Tally {
    count: u128,
    deepest: u32,
    uncertified: u64,
}

impl<'a> LocalProblem<'a> {
    pub fn new(form: &'a QForm, target: i128, p: u64) -> Self {
        Self { form, target, p, lambda: [0; 3], e: 0, primitive: false }
    }

    pub fn with_congruence(mut self, lambda: [i128; 3], e: u32) -> Self {
        self.lambda = lambda;
        self.e = e;
        self
    }

    pub fn primitive(mut self) -> Self {
        self.primitive = true;
        self
    }

    fn certified(&self, x: [i128; 3], j: u32) -> bool {
        let g = self.form.gradient(x);
        let v = g.iter().filter(|&&c| c != 0).map(|&c| ord_p(c.unsigned_abs(), self.p)).min();
        match v {
            Some(v) if v < j => j >= (2 * v + 1).max(v + self.e),
            _ => false,
        }
    }

    fn walk(&self, x: [i128; 3], j: u32, level: u32, floor: u32, tally: &mut Tally) -> Result<()> {
        let p = self.p as i128;
        let pj = p.pow(j);
        if j == level {
            tally.count += 1;
            if j >= floor && self.certified(x, j) {
                tally.deepest = tally.deepest.max(j);
            } else {
                tally.uncertified += 1;
            }
            return Ok(());
        }
        if j >= floor && self.certified(x, j) {
            tally.count += (self.p as u128).pow(2 * (level - j));
            tally.deepest = tally.deepest.max(j);
            return Ok(());
        }
        let next = pj * p;
        if next as u128 > MAX_MODULUS {
            return Err(Error::NoStabilization { p: self.p, limit: j as u64 });
        }
        let digit_range = |i: usize| -> (i128, i128) {
            if j < self.e {
                let d = self.lambda[i].rem_euclid(p.pow(self.e)) / pj % p;
                (d, d + 1)
            } else {
                (0, p)
            }
        };
        let (r0, r1, r2) = (digit_range(0), digit_range(1), digit_range(2));
        let mut alive = false;
        for d0 in r0.0..r0.1 {
            for d1 in r1.0..r1.1 {
                for d2 in r2.0..r2.1 {
                    if self.primitive && j == 0 && d0 == 0 && d1 == 0 && d2 == 0 {
                        continue;
                    }
                    let y = [x[0] + pj * d0, x[1] + pj * d1, x[2] + pj * d2];
                    let fy = self.form.evaluate(y).ok_or(Error::Overflow("F in local count"))?;
                    if (fy - self.target).rem_euclid(next) == 0 {
                        alive = true;
                        self.walk(y, j + 1, level, floor, tally)?;
                    }
                }
            }
        }
        if !alive {
            // no lift survives: the count is 0 from level j + 1 on
            tally.deepest = tally.deepest.max(j + 1);
        }
        Ok(())
    }

    /// Number of solutions mod p^level. Nodes below `floor` are always
    /// expanded, so `floor = level` is plain enumeration.
    pub fn count_with_floor(&self, level: u32, floor: u32) -> Result<u128> {
        let mut tally = Tally { count: 0, deepest: 0, uncertified: 0 };
        self.walk([0; 3], 0, level, floor, &mut tally)?;
        Ok(tally.count)
    }

    pub fn count(&self, level: u32) -> Result<u128> {
        self.count_with_floor(level, 0)
    }

    /// Deepest level at which a certificate was needed; counts scale by p²
    /// per level from there on.
    pub fn stable_level(&self, limit: u32) -> Result<(u32, u128)> {
        let mut tally = Tally { count: 0, deepest: 0, uncertified: 0 };
        self.walk([0; 3], 0, limit, 0, &mut tally)?;
        let k = tally.deepest.max(self.e).max(1);
        if tally.uncertified > 0 || k >= limit {
            return Err(Error::NoStabilization { p: self.p, limit: limit as u64 });
        }
        Ok((k, tally.count / (self.p as u128).pow(2 * (limit - k))))
    }
}

fn brute_count(p: &LocalProblem<'_>, level: u32) -> Option<Result<u128>> {
    let nodes = (p.p as u128).pow(3 * level);
    (nodes <= RECHECK_NODES).then(|| p.count_with_floor(level, level))
}

fn is_good_prime(inst: &ProblemInstance, p: u64) -> bool {
    let bad = 2 * inst.form.determinant().unsigned_abs() * inst.m0.unsigned_abs() as u128 * inst.l() as u128;
    bad % p as u128 != 0
}

/// Local problem for σ_p: F ≡ m₀ with x ≡ λ mod p^{ord_p L}.
pub fn sigma_problem(inst: &ProblemInstance, p: u64) -> LocalProblem<'_> {
    let e = ord_p(inst.l() as u128, p);
    let lambda = inst.cong.residue.map(|r| r as i128);
    LocalProblem::new(&inst.form, inst.m0 as i128, p).with_congruence(lambda, e)
}

/// σ_p(𝒱₁; (L, λ)) for p ≠ p₀.
pub fn sigma_p(inst: &ProblemInstance, p: u64) -> Result<LocalDensity> {
    if p == inst.p0 {
        return Err(Error::Precondition(format!("p = {p} is p0; use sigma_p0_cone")));
    }
    if !crate::modarith::is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    let pp = p as u128;
    if is_good_prime(inst, p) && p > 100 {
        // p² + p·(−m₀Δ/p) solutions mod p, all nonsingular
        let chi = kronecker(-(inst.m0 as i128) * inst.form.determinant(), p) as i128;
        let count = (pp * pp) as i128 + p as i128 * chi;
        let count = count as u128;
        return Ok(LocalDensity::from_ratio(p, 1, count, count, pp * pp, None));
    }
    let problem = sigma_problem(inst, p);
    let limit = 64 / (64 - (p.leading_zeros())).max(1);
    let (k, count) = problem.stable_level(limit.max(3))?;
    if pp.pow(2 * k) > MAX_MODULUS {
        return Err(Error::NoStabilization { p, limit: k as u64 });
    }
    let count_next = match brute_count(&problem, k + 1) {
        Some(next) => {
            let next = next?;
            if next != count * pp * pp {
                return Err(Error::NoStabilization { p, limit: k as u64 + 1 });
            }
            Some(next)
        }
        None => None,
    };
    Ok(LocalDensity::from_ratio(p, k, count, count, pp.pow(2 * k), count_next))
}

/// σ_{p₀}(𝒱₀): density of the cone F ≡ 0 mod p₀^k.
///
/// With d(k) the level-k ratio and π(k) its primitive part, scaling x = p₀y
/// gives d(k) = π(k) + d(k − 2)/p₀, so the limit is p₀/(p₀ − 1)·π(∞).
pub fn sigma_p0_cone(inst: &ProblemInstance) -> Result<LocalDensity> {
    cone_density(&inst.form, inst.p0)
}

pub fn cone_density(form: &QForm, p: u64) -> Result<LocalDensity> {
    let pp = p as u128;
    let problem = LocalProblem::new(form, 0, p).primitive();
    let limit = (2 * ord_p(2 * form.determinant().unsigned_abs(), p) + 4).max(64 / (64 - p.leading_zeros()));
    let (k, count) = problem.stable_level(limit)?;
    let count_next = match brute_count(&problem, k + 1) {
        Some(next) => {
            let next = next?;
            if next != count * pp * pp {
                return Err(Error::NoStabilization { p, limit: k as u64 + 1 });
            }
            Some(next)
        }
        None => None,
    };
    Ok(LocalDensity::from_ratio(p, k, count, pp * count, (pp - 1) * pp.pow(2 * k), count_next))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerFactor {
    pub p: u64,
    pub psi: i32,
    pub density: LocalDensity,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSeries {
    pub square: bool,
    pub factors: Vec<EulerFactor>,
    pub p_max: u64,
    pub value: f64,
    /// |S(P_max) − S(P_max/2)|, the heuristic tail proxy
    pub drift: f64,
}

impl SingularSeries {
    pub fn obstructed(&self) -> bool {
        self.factors.iter().any(|f| f.density.is_zero())
    }
}

/// 𝔖̃_F(p₀; L, λ) truncated at P_max.
pub fn singular_series(inst: &ProblemInstance, p_max: u64) -> Result<SingularSeries> {
    if p_max > 10_000 {
        return Err(Error::BoundExceeded { what: "P_max", limit: 10_000 });
    }
    let psi0 = inst.psi0();
    let square = psi0.is_principal();
    let mut factors = Vec::new();
    let cone = sigma_p0_cone(inst)?;
    let psi = psi0.value(inst.p0);
    factors.push(EulerFactor { p: inst.p0, psi, factor: (1.0 - psi as f64 / inst.p0 as f64) * cone.value, density: cone });
    let mut half_value = None;
    let mut running = factors[0].factor;
    for p in primes_up_to(p_max) {
        if p > p_max / 2 && half_value.is_none() {
            half_value = Some(running);
        }
        if p == inst.p0 {
            continue;
        }
        let density = sigma_p(inst, p)?;
        let psi = psi0.value(p);
        let factor = (1.0 - psi as f64 / p as f64) * density.value;
        running *= factor;
        factors.push(EulerFactor { p, psi, density, factor });
    }
    // fixed ascending order
    let value = factors.iter().map(|f| f.factor).product::<f64>();
    let drift = (value - half_value.unwrap_or(value)).abs();
    Ok(SingularSeries { square, factors, p_max, value, drift })
}

/// L(1, ψ₀) for the primitive character attached to −m₀Δ_F.
///
/// Complete blocks of length m = |D| are summed directly; the remainder is
/// −(1/m)Σ_a χ(a)·ψ(K + a/m) (ψ the digamma function), which is evaluated by
/// its asymptotic series.
pub fn l_one_psi0(form: &QForm, m0: i64, precision: f64) -> Result<f64> {
    let psi0 = crate::qform::Psi0::new(form, m0);
    if psi0.is_principal() {
        return Err(Error::Precondition("ψ0 is principal; L(1, ψ0) diverges".into()));
    }
    l_one_kronecker(psi0.discriminant, precision)
}

pub fn l_one_kronecker(d: i128, precision: f64) -> Result<f64> {
    if !(precision > 0.0) {
        return Err(Error::Precondition("precision must be positive".into()));
    }
    let m = d.unsigned_abs() as u64;
    let chi: Vec<f64> = (0..m).map(|a| kronecker(d, a) as f64).collect();
    // asymptotic digamma remainder is below (K)^{-14}; the series is summed
    // to K ≥ 16 blocks and extended until the remainder drops under precision
    let mut blocks = 16u64;
    while (blocks as f64).powi(-14) > precision * 1e-3 {
        blocks *= 2;
    }
    let mut terms = Vec::with_capacity((blocks * m) as usize);
    for n in 1..=blocks * m {
        let c = chi[(n % m) as usize];
        if c != 0.0 {
            terms.push(c / n as f64);
        }
    }
    let head = crate::numerics::pairwise_sum(&terms);
    let tail: f64 = (1..=m)
        .map(|a| chi[(a % m) as usize] * digamma_large(blocks as f64 + a as f64 / m as f64))
        .sum::<f64>();
    Ok(head - tail / m as f64)
}

fn digamma_large(z: f64) -> f64 {
    const B: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let z2 = 1.0 / (z * z);
    let mut series = 0.0;
    let mut pow = z2;
    for (k, b) in B.iter().enumerate() {
        series += b / (2.0 * (k + 1) as f64) * pow;
        pow *= z2;
    }
    z.ln() - 0.5 / z - series
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::WeightSpec;
    use crate::instance::CongruenceDatum;
    use std::f64::consts::PI;

    fn inst(form: QForm, m0: i64, p0: u64, l: u64, lam: [i64; 3]) -> ProblemInstance {
        let cong = CongruenceDatum::new(&form, m0, l, lam).unwrap();
        ProblemInstance::new(form, m0, p0, 1, cong, WeightSpec::ball([1.0, 0.0, 0.0], 0.5)).unwrap()
    }

    fn brute(form: &QForm, target: i128, p: u64, k: u32, lam: [i128; 3], e: u32) -> u128 {
        let m = (p as i128).pow(k);
        let pe = (p as i128).pow(e);
        let mut n = 0;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let x = [a, b, c];
                    if (0..3).any(|i| (x[i] - lam[i]).rem_euclid(pe) != 0) {
                        continue;
                    }
                    if (form.evaluate(x).unwrap() - target).rem_euclid(m) == 0 {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn tree_count_matches_box() {
        let forms = [
            QForm::diagonal(1, 1, 1).unwrap(),
            QForm::diagonal(1, 1, -1).unwrap(),
            QForm::new([2, 3, -5, 2, -4, 6]).unwrap(),
        ];
        for f in &forms {
            for (p, kmax) in [(2u64, 5u32), (3, 3), (5, 2)] {
                for target in [0i128, 1, 3, 4, 12] {
                    for (lam, e) in [([0i128; 3], 0u32), ([1, 0, 0], 1), ([1, 2, 3], 2)] {
                        let prob = LocalProblem::new(f, target, p).with_congruence(lam, e);
                        for k in 1..=kmax {
                            if k < e {
                                continue;
                            }
                            assert_eq!(prob.count(k).unwrap(), brute(f, target, p, k, lam, e), "p={p} k={k} T={target}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let s = inst(QForm::diagonal(1, 1, 1).unwrap(), 1, 5, 1, [0; 3]);
        let d = sigma_p(&s, 3).unwrap();
        assert_eq!((d.numerator, d.denominator), (2, 3));
        assert_eq!(d.k_star, 1);
        let s7 = inst(QForm::diagonal(1, 1, 1).unwrap(), 1, 7, 1, [0; 3]);
        let d = sigma_p(&s7, 5).unwrap();
        assert_eq!(d.count, brute(&s7.form, 1, 5, 1, [0; 3], 0));
        assert_eq!(d.k_star, 1);
        let h = inst(QForm::diagonal(1, 1, -1).unwrap(), 1, 5, 2, [1, 0, 0]);
        let d = sigma_p(&h, 2).unwrap();
        let expect: Vec<f64> = (1..=6)
            .map(|k| brute(&h.form, 1, 2, k, [1, 0, 0], 1) as f64 / 4f64.powi(k as i32))
            .collect();
        assert!(expect[3..].iter().all(|&v| v == d.value), "{expect:?} vs {}", d.value);
        assert!(sigma_p(&h, 5).is_err());
    }

    #[test]
    fn good_primes_stable_at_first_level() {
        for (f, m0) in [(QForm::diagonal(1, 1, 1).unwrap(), 1), (QForm::diagonal(1, 1, -1).unwrap(), 3), (QForm::new([2, 3, -5, 2, -4, 6]).unwrap(), 5)] {
            let bad = 2 * f.determinant().unsigned_abs() * m0 as u128;
            for p in primes_up_to(100) {
                if bad % p as u128 == 0 {
                    continue;
                }
                let prob = LocalProblem::new(&f, m0 as i128, p);
                assert_eq!(prob.count(2).unwrap(), prob.count(1).unwrap() * (p * p) as u128);
                let closed = (p * p) as i128 + p as i128 * kronecker(-(m0 as i128) * f.determinant(), p) as i128;
                assert_eq!(prob.count(1).unwrap() as i128, closed);
            }
        }
    }

    #[test]
    fn cone_examples() {
        let f = QForm::diagonal(1, 1, -1).unwrap();
        assert_eq!(LocalProblem::new(&f, 0, 3).count(1).unwrap(), 9);
        let d = cone_density(&f, 3).unwrap();
        assert_eq!((d.numerator, d.denominator), (4, 3));
        let d5 = cone_density(&f, 5).unwrap();
        assert!(d5.value > 0.0);
        // level ratios approach the limit through d(k) = π(k) + d(k−2)/p
        let ratio = |k: u32| LocalProblem::new(&f, 0, 5).count(k).unwrap() as f64 / 25f64.powi(k as i32);
        assert!((ratio(4) - d5.value).abs() < 2.0 / 25.0);
        // x² + y² + z² is anisotropic over ℚ_2 and isotropic over ℚ_7
        let sphere = QForm::diagonal(1, 1, 1).unwrap();
        assert_eq!(cone_density(&sphere, 2).unwrap().value, 0.0);
        assert!(cone_density(&sphere, 7).unwrap().value > 0.0);
    }

    #[test]
    fn series_examples() {
        let h = inst(QForm::diagonal(1, 1, -1).unwrap(), 1, 5, 1, [0; 3]);
        let s1 = singular_series(&h, 500).unwrap();
        let s2 = singular_series(&h, 1000).unwrap();
        assert!(s2.square && s2.value > 0.0);
        assert!((s1.value - s2.value).abs() < 1e-3);
        let s = inst(QForm::diagonal(1, 1, 1).unwrap(), 1, 5, 1, [0; 3]);
        let series = singular_series(&s, 200).unwrap();
        assert!(!series.square && series.value > 0.0);
        let obstructed = inst(QForm::diagonal(1, 1, 1).unwrap(), 7, 5, 2, [1, 1, 1]);
        let series = singular_series(&obstructed, 50).unwrap();
        assert!(series.obstructed());
        assert_eq!(series.value, 0.0);
    }

    #[test]
    fn h_independence_and_change_of_variable() {
        let h = inst(QForm::diagonal(1, 1, -1).unwrap(), 1, 5, 2, [1, 0, 0]);
        let h2 = h.with_h(3).unwrap();
        for p in [2u64, 3, 7] {
            assert_eq!(sigma_p(&h, p).unwrap(), sigma_p(&h2, p).unwrap());
            let e = ord_p(2, p);
            for k in e.max(1)..=2 {
                let plain = sigma_problem(&h2, p).count(k).unwrap();
                let scaled = LocalProblem::new(&h2.form, h2.target(), p).with_congruence(h2.lambda_n(), e);
                assert_eq!(plain, scaled.count(k).unwrap());
            }
        }
    }

    #[test]
    fn l_values() {
        let v = l_one_kronecker(-4, 1e-12).unwrap();
        assert!((v - PI / 4.0).abs() < 1e-10);
        let v = l_one_kronecker(-3, 1e-12).unwrap();
        assert!((v - PI / (3.0 * 3f64.sqrt())).abs() < 1e-10);
        // h(−23) = 3: L(1) = 3π/√23
        let v = l_one_kronecker(-23, 1e-12).unwrap();
        assert!((v - 3.0 * PI / 23f64.sqrt()).abs() < 1e-10);
        let sphere = QForm::diagonal(1, 1, 1).unwrap();
        let a = l_one_psi0(&sphere, 1, 1e-10).unwrap();
        let b = l_one_psi0(&sphere, 1, 1e-6).unwrap();
        assert!((a - b).abs() < 1e-6 && (a - PI / 4.0).abs() < 1e-9);
        assert!(l_one_psi0(&QForm::diagonal(1, 1, -1).unwrap(), 1, 1e-8).is_err());
    }
}
