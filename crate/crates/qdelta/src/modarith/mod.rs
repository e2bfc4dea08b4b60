//! Integer substrate: modular arithmetic, factorization, CRT, Jacobi
//! symbols, Dirichlet characters and square roots modulo n.

mod characters;
mod factor;
mod roots;

pub use characters::{characters_mod, DirichletCharacter, UnitGroup};
pub use factor::{factorize, is_prime, Factorization};
pub use roots::quadratic_roots;

use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_i128(a: i128, b: i128) -> u128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a, b) * b
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Least nonnegative residue of a signed integer.
#[inline]
pub fn reduce(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Inverse of `a` modulo `m`, if it exists. `inv_mod(_, 1)` is `Some(0)`.
pub fn inv_mod(a: i128, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, reduce(a, m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let qt = r0 / r1;
        (r0, r1) = (r1, r0 - qt * r1);
        (s0, s1) = (s1, s0 - qt * s1);
    }
    (r0 == 1).then(|| reduce(s0, m))
}

/// Combine x ≡ a (mod m) and x ≡ b (mod n) for coprime m, n.
pub fn crt_pair(a: u64, m: u64, b: u64, n: u64) -> Result<(u64, u64)> {
    let inv = inv_mod(m as i128, n)
        .ok_or_else(|| Error::Precondition(format!("crt moduli {m} and {n} not coprime")))?;
    let mn = m
        .checked_mul(n)
        .ok_or(Error::Overflow("crt modulus"))?;
    // x = a + m * ((b - a) * m^{-1} mod n)
    let diff = reduce(b as i128 - a as i128, n);
    let t = mul_mod(diff, inv, n);
    let x = (a as u128 + m as u128 * t as u128) % mn as u128;
    Ok((x as u64, mn))
}

/// Exponent of p in n (n != 0).
pub fn ord_p(mut n: u128, p: u64) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let p = p as u128;
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

/// The largest divisor of q supported on the primes of l.
pub fn part_supported_on(mut q: u64, l: u64) -> u64 {
    let mut part = 1;
    loop {
        let g = gcd(q, l);
        if g == 1 {
            return part;
        }
        q /= g;
        part *= g;
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).euler_phi()
}

pub fn moebius(n: u64) -> i64 {
    factorize(n).moebius()
}

/// Ramanujan sum c_q(n) = Σ_{d | gcd(q,n)} d·μ(q/d).
pub fn ramanujan_sum(q: u64, n: i128) -> i64 {
    let g = if n == 0 { q } else { gcd_i128(q as i128, n) as u64 };
    let fq = factorize(q);
    let mut total = 0i64;
    for d in factorize(g).divisors() {
        let mu = moebius_from(&fq, q / d);
        total += d as i64 * mu;
    }
    total
}

fn moebius_from(fq: &Factorization, m: u64) -> i64 {
    // m divides q, so its factorization is read off q's primes
    let mut rest = m;
    let mut sign = 1;
    for &(p, _) in fq.pairs() {
        if rest % p == 0 {
            rest /= p;
            if rest % p == 0 {
                return 0;
            }
            sign = -sign;
        }
    }
    sign
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: i128, n: u64) -> Result<i32> {
    if n % 2 == 0 {
        return Err(Error::Precondition(format!("jacobi symbol needs odd n, got {n}")));
    }
    let mut a = reduce(a, n);
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    Ok(if n == 1 { t } else { 0 })
}

/// Kronecker symbol (d/n) for n ≥ 1.
pub fn kronecker(d: i128, n: u64) -> i32 {
    if n == 0 {
        return i32::from(d.unsigned_abs() == 1);
    }
    let v = n.trailing_zeros();
    let odd = n >> v;
    let mut s = 1;
    if v > 0 {
        if d % 2 == 0 {
            return 0;
        }
        let r = d.rem_euclid(8);
        if (r == 3 || r == 5) && v % 2 == 1 {
            s = -1;
        }
    }
    s * jacobi(d, odd).expect("odd part")
}

pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Exact square test; negative numbers are never squares.
pub fn is_square(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u128);
    r * r == n as u128
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(k, &b)| b.then_some(k as u64))
        .collect()
}

/// A residue vector in (ℤ/n)³.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueVector {
    pub modulus: u64,
    pub r: [u64; 3],
}

impl ResidueVector {
    pub fn new(modulus: u64, v: [i128; 3]) -> Self {
        assert!(modulus >= 1);
        Self { modulus, r: v.map(|x| reduce(x, modulus)) }
    }

    /// Reduction to a divisor of the modulus.
    pub fn reduce_to(&self, m: u64) -> Self {
        assert!(self.modulus % m == 0, "{m} does not divide {}", self.modulus);
        Self { modulus: m, r: self.r.map(|x| x % m) }
    }

    pub fn combine(&self, other: &Self) -> Result<Self> {
        let mut r = [0; 3];
        let mut modulus = 1;
        for i in 0..3 {
            let (x, mn) = crt_pair(self.r[i], self.modulus, other.r[i], other.modulus)?;
            r[i] = x;
            modulus = mn;
        }
        Ok(Self { modulus, r })
    }

    pub fn as_i128(&self) -> [i128; 3] {
        self.r.map(|x| x as i128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn euler_criterion(a: u64, p: u64) -> i32 {
        let a = a % p;
        if a == 0 {
            return 0;
        }
        if pow_mod(a, (p - 1) / 2, p) == 1 { 1 } else { -1 }
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(1, 3).unwrap(), 1);
        assert_eq!(jacobi(0, 3).unwrap(), 0);
        assert_eq!(jacobi(2, 15).unwrap(), 1);
        assert!(jacobi(3, 10).is_err());
    }

    #[test]
    fn jacobi_matches_euler_criterion() {
        for n in (1..1000u64).step_by(2) {
            let f = factorize(n);
            for a in 0..n {
                let mut expect = 1;
                for &(p, e) in f.pairs() {
                    expect *= euler_criterion(a, p).pow(e);
                }
                assert_eq!(jacobi(a as i128, n).unwrap(), expect, "({a}/{n})");
            }
        }
    }

    #[test]
    fn kronecker_at_two() {
        assert_eq!(kronecker(-3, 2), -1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(-7, 2), 1);
        assert_eq!(kronecker(5, 2), -1);
    }

    #[test]
    fn crt_roundtrip_exhaustive() {
        for m in 1..=100u64 {
            for n in 1..=100u64 {
                if gcd(m, n) != 1 || m * n > 10_000 {
                    continue;
                }
                for x in 0..m * n {
                    let (y, mn) = crt_pair(x % m, m, x % n, n).unwrap();
                    assert_eq!((y, mn), (x, m * n));
                }
            }
        }
    }

    #[test]
    fn residue_vector_combine() {
        let a = ResidueVector::new(4, [1, -1, 6]);
        let b = ResidueVector::new(9, [2, 0, -3]);
        let c = a.combine(&b).unwrap();
        assert_eq!(c.modulus, 36);
        assert_eq!(c.reduce_to(4), a);
        assert_eq!(c.reduce_to(9), b);
    }

    #[test]
    fn ramanujan_sum_matches_literal_loop() {
        for q in 1..=50u64 {
            for n in -60i128..=60 {
                let direct: f64 = (1..=q)
                    .filter(|&a| gcd(a, q) == 1)
                    .map(|a| {
                        let k = reduce(a as i128 * n, q);
                        (std::f64::consts::TAU * k as f64 / q as f64).cos()
                    })
                    .sum();
                assert!((direct - ramanujan_sum(q, n) as f64).abs() < 1e-9, "c_{q}({n})");
            }
        }
    }

    #[test]
    fn part_supported_examples() {
        assert_eq!(part_supported_on(12, 2), 4);
        assert_eq!(part_supported_on(90, 6), 18);
        assert_eq!(part_supported_on(7, 6), 1);
    }

    proptest! {
        #[test]
        fn inverse_is_inverse(a in -10_000i128..10_000, m in 2u64..5000) {
            match inv_mod(a, m) {
                Some(x) => prop_assert_eq!(mul_mod(reduce(a, m), x, m), 1),
                None => prop_assert!(gcd(reduce(a, m), m) != 1),
            }
        }

        #[test]
        fn jacobi_multiplicative_in_a(a in -500i128..500, b in -500i128..500, k in 0u64..400) {
            let n = 2 * k + 1;
            prop_assert_eq!(jacobi(a * b, n).unwrap(), jacobi(a, n).unwrap() * jacobi(b, n).unwrap());
        }

        #[test]
        fn jacobi_multiplicative_in_n(a in -500i128..500, k in 0u64..200, l in 0u64..200) {
            let (m, n) = (2 * k + 1, 2 * l + 1);
            prop_assert_eq!(jacobi(a, m * n).unwrap(), jacobi(a, m).unwrap() * jacobi(a, n).unwrap());
        }

        #[test]
        fn isqrt_floor(n in 0u128..(1u128 << 100)) {
            let r = isqrt(n);
            prop_assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
    }
}
