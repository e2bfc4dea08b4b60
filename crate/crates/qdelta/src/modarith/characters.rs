use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::{crt_pair, factorize, gcd, lcm, ord_p, pow_mod};
use crate::error::{Error, Result};

const ENUMERATION_BOUND: u64 = 1_000_000;

/// One cyclic factor of (ℤ/n)*.
#[derive(Debug, Clone)]
pub struct CyclicComponent {
    pub prime: u64,
    /// p^e, the local modulus the component lives on.
    pub local_modulus: u64,
    /// Generator lifted to a unit mod n that is 1 at the other primes.
    pub generator: u64,
    pub order: u64,
    dlog: Vec<u32>,
}

/// Generator basis of (ℤ/n)* with discrete-log tables.
#[derive(Debug)]
pub struct UnitGroup {
    modulus: u64,
    components: Vec<CyclicComponent>,
    exponent: u64,
}

fn primitive_root_mod_p(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let f = factorize(p - 1);
    (2..p)
        .find(|&g| f.primes().all(|q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("primitive root exists")
}

impl UnitGroup {
    /// Cached generator basis for modulus n.
    pub fn get(n: u64) -> Arc<UnitGroup> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<UnitGroup>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(g) = cache.lock().unwrap().get(&n) {
            return g.clone();
        }
        let g = Arc::new(UnitGroup::build(n));
        cache.lock().unwrap().entry(n).or_insert(g).clone()
    }

    fn build(n: u64) -> Self {
        assert!(n >= 1);
        let mut components = Vec::new();
        for &(p, e) in factorize(n).pairs() {
            let pe = p.pow(e);
            let lift = |g: u64| -> u64 {
                let other = n / pe;
                crt_pair(g % pe, pe, 1 % other, other).unwrap().0
            };
            if p == 2 {
                if e == 2 {
                    let mut dlog = vec![u32::MAX; 4];
                    dlog[1] = 0;
                    dlog[3] = 1;
                    components.push(CyclicComponent {
                        prime: 2,
                        local_modulus: 4,
                        generator: lift(3),
                        order: 2,
                        dlog,
                    });
                } else if e >= 3 {
                    let half = pe / 4;
                    let mut sign = vec![u32::MAX; pe as usize];
                    let mut five = vec![u32::MAX; pe as usize];
                    let mut x = 1u64;
                    for k in 0..half {
                        sign[x as usize] = 0;
                        five[x as usize] = k as u32;
                        let y = pe - x;
                        sign[y as usize] = 1;
                        five[y as usize] = k as u32;
                        x = x * 5 % pe;
                    }
                    components.push(CyclicComponent {
                        prime: 2,
                        local_modulus: pe,
                        generator: lift(pe - 1),
                        order: 2,
                        dlog: sign,
                    });
                    components.push(CyclicComponent {
                        prime: 2,
                        local_modulus: pe,
                        generator: lift(5),
                        order: half,
                        dlog: five,
                    });
                }
                continue;
            }
            let mut g = primitive_root_mod_p(p);
            if e >= 2 && pow_mod(g, p - 1, p * p) == 1 {
                g += p;
            }
            let order = (p - 1) * p.pow(e - 1);
            let mut dlog = vec![u32::MAX; pe as usize];
            let mut x = 1u64;
            for k in 0..order {
                dlog[x as usize] = k as u32;
                x = x * g % pe;
            }
            components.push(CyclicComponent { prime: p, local_modulus: pe, generator: lift(g), order, dlog });
        }
        let exponent = components.iter().fold(1, |acc, c| lcm(acc, c.order));
        UnitGroup { modulus: n, components, exponent }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn components(&self) -> &[CyclicComponent] {
        &self.components
    }

    /// Exponent (lcm of component orders) of the group.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn order(&self) -> u64 {
        self.components.iter().map(|c| c.order).product()
    }

    /// Discrete logs of x on every component, or None for non-units.
    pub fn dlogs(&self, x: u64) -> Option<Vec<u64>> {
        let x = x % self.modulus;
        if gcd(x, self.modulus) != 1 {
            return None;
        }
        Some(
            self.components
                .iter()
                .map(|c| c.dlog[(x % c.local_modulus) as usize] as u64)
                .collect(),
        )
    }
}

/// A Dirichlet character given by exponents on the generator basis:
/// χ(g_j) = e(k_j / ord_j).
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    exps: Vec<u64>,
}

impl DirichletCharacter {
    pub fn new(group: Arc<UnitGroup>, exps: Vec<u64>) -> Result<Self> {
        if exps.len() != group.components.len() {
            return Err(Error::Precondition("exponent vector length mismatch".into()));
        }
        for (k, c) in exps.iter().zip(&group.components) {
            if *k >= c.order {
                return Err(Error::Precondition(format!("exponent {k} out of range for order {}", c.order)));
            }
        }
        Ok(Self { group, exps })
    }

    pub fn principal(n: u64) -> Self {
        let group = UnitGroup::get(n);
        let exps = vec![0; group.components.len()];
        Self { group, exps }
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    pub fn group(&self) -> &Arc<UnitGroup> {
        &self.group
    }

    /// χ(x) = e(t / exponent) as the numerator t, None when gcd(x, n) > 1.
    pub fn turn(&self, x: i128) -> Option<u64> {
        let n = self.group.modulus;
        let x = x.rem_euclid(n as i128) as u64;
        let logs = self.group.dlogs(x)?;
        let lam = self.group.exponent as u128;
        let mut t: u128 = 0;
        for ((k, l), c) in self.exps.iter().zip(logs).zip(&self.group.components) {
            t += (*k as u128 * l as u128 % c.order as u128) * (lam / c.order as u128);
        }
        Some((t % lam) as u64)
    }

    pub fn value(&self, x: i128) -> Complex64 {
        match self.turn(x) {
            None => Complex64::new(0.0, 0.0),
            Some(t) => {
                let theta = std::f64::consts::TAU * t as f64 / self.group.exponent as f64;
                Complex64::new(theta.cos(), theta.sin())
            }
        }
    }

    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(&self.group.components)
            .fold(1, |acc, (&k, c)| lcm(acc, c.order / gcd(k, c.order)))
    }

    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|&k| k == 0)
    }

    pub fn is_real(&self) -> bool {
        self.order() <= 2
    }

    pub fn conductor(&self) -> u64 {
        let mut cond = 1u64;
        let comps = &self.group.components;
        let mut i = 0;
        while i < comps.len() {
            let c = &comps[i];
            let p = c.prime;
            let e = ord_p(c.local_modulus as u128, p);
            let f = if p == 2 && e >= 3 {
                let (s, k) = (self.exps[i], self.exps[i + 1]);
                i += 1;
                if k == 0 {
                    if s == 0 { 0 } else { 2 }
                } else {
                    e - k.trailing_zeros()
                }
            } else if p == 2 {
                if self.exps[i] == 0 { 0 } else { 2 }
            } else {
                let k = self.exps[i];
                if k == 0 {
                    0
                } else {
                    e - ord_p(k as u128, p).min(e - 1)
                }
            };
            cond *= p.pow(f);
            i += 1;
        }
        cond
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> DirichletCharacter {
        let f = self.conductor();
        let target = UnitGroup::get(f);
        let n = self.group.modulus;
        let lam = self.group.exponent as u128;
        let exps = target
            .components
            .iter()
            .map(|c| {
                // lift the conductor-level generator to a unit mod n
                let mut x = 0u64;
                let mut m = 1u64;
                for &(p, e) in factorize(n).pairs() {
                    let pe = p.pow(e);
                    let r = if f % p == 0 { c.generator % f } else { 1 };
                    let (y, mm) = crt_pair(x, m, r % pe, pe).unwrap();
                    x = y;
                    m = mm;
                }
                let t = self.turn(x as i128).expect("lift is a unit") as u128;
                let k = t * c.order as u128;
                debug_assert_eq!(k % lam, 0);
                (k / lam) as u64 % c.order
            })
            .collect();
        DirichletCharacter { group: target, exps }
    }
}

/// All φ(n) characters mod n, principal first.
pub fn characters_mod(n: u64) -> Result<Vec<DirichletCharacter>> {
    if n == 0 || n > ENUMERATION_BOUND {
        return Err(Error::BoundExceeded { what: "character modulus", limit: ENUMERATION_BOUND });
    }
    let group = UnitGroup::get(n);
    let orders: Vec<u64> = group.components.iter().map(|c| c.order).collect();
    let total: u64 = orders.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    let mut exps = vec![0u64; orders.len()];
    for _ in 0..total {
        out.push(DirichletCharacter { group: group.clone(), exps: exps.clone() });
        for (k, o) in exps.iter_mut().zip(&orders) {
            *k += 1;
            if *k < *o {
                break;
            }
            *k = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::{euler_phi, moebius};

    #[test]
    fn small_examples() {
        let c1 = characters_mod(1).unwrap();
        assert_eq!(c1.len(), 1);
        assert_eq!(c1[0].value(0), Complex64::new(1.0, 0.0));

        let c5 = characters_mod(5).unwrap();
        let mut orders: Vec<u64> = c5.iter().map(|c| c.order()).collect();
        orders.sort();
        assert_eq!(orders, vec![1, 2, 4, 4]);
        assert!(c5[0].is_principal());

        let c8 = characters_mod(8).unwrap();
        assert_eq!(c8.len(), 4);
        assert!(c8.iter().all(|c| c.is_real()));
        let mut conds: Vec<u64> = c8.iter().map(|c| c.conductor()).collect();
        conds.sort();
        assert_eq!(conds, vec![1, 4, 8, 8]);
    }

    #[test]
    fn bound_is_enforced() {
        assert!(characters_mod(1_000_001).is_err());
    }

    #[test]
    fn orthogonality_exhaustive() {
        for n in 1..=50u64 {
            let chars = characters_mod(n).unwrap();
            assert_eq!(chars.len() as u64, euler_phi(n));
            let phi = euler_phi(n) as f64;
            for x in 0..n {
                for y in 0..n {
                    let s: Complex64 = chars.iter().map(|c| c.value(x as i128) * c.value(y as i128).conj()).sum();
                    let expect = if x == y && gcd(x, n) == 1 { 1.0 } else { 0.0 };
                    assert!((s / phi - expect).norm() < 1e-12, "n={n} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn multiplicative_and_zero_off_units() {
        for n in [7u64, 12, 16, 45, 64, 100] {
            for c in characters_mod(n).unwrap() {
                for x in 0..n as i128 {
                    for y in 0..n as i128 {
                        let lhs = c.value(x * y);
                        let rhs = c.value(x) * c.value(y);
                        assert!((lhs - rhs).norm() < 1e-12);
                    }
                    if gcd(x as u64, n) > 1 {
                        assert_eq!(c.value(x), Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    fn brute_conductor(c: &DirichletCharacter) -> u64 {
        let n = c.modulus();
        for d in factorize(n).divisors() {
            let trivial = (0..n)
                .filter(|&x| gcd(x, n) == 1 && x % d == 1 % d)
                .all(|x| c.turn(x as i128) == Some(0));
            if trivial {
                return d;
            }
        }
        unreachable!()
    }

    #[test]
    fn conductor_and_primitive() {
        for n in 1..=200u64 {
            let chars = characters_mod(n).unwrap();
            let primitive_count = chars.iter().filter(|c| c.conductor() == n).count() as i64;
            let expect: i64 = factorize(n)
                .divisors()
                .into_iter()
                .map(|d| moebius(n / d) * euler_phi(d) as i64)
                .sum();
            assert_eq!(primitive_count, expect, "n={n}");
            if n <= 100 {
                for c in &chars {
                    let f = c.conductor();
                    assert_eq!(f, brute_conductor(c), "n={n} {:?}", c.exponents());
                    let prim = c.primitive();
                    assert_eq!(prim.modulus(), f);
                    assert_eq!(prim.conductor(), f);
                    for x in 0..n as i128 {
                        if gcd(x as u64, n) == 1 {
                            assert!((prim.value(x) - c.value(x)).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }
}
