use super::{crt_pair, factorize, mul_mod, pow_mod, reduce};

fn tonelli_shanks(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let z = (2..p).find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1).unwrap();
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Square roots of a unit d modulo p^k.
fn unit_roots(d: u64, p: u64, k: u32) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let pk = p.pow(k);
    let d = d % pk;
    if p == 2 {
        match k {
            1 => return vec![1],
            2 => return if d % 4 == 1 { vec![1, 3] } else { vec![] },
            _ => {
                if d % 8 != 1 {
                    return vec![];
                }
                // x² ≡ d mod 2^j for j = 3, lifted one bit at a time
                let mut x = 1u64;
                for j in 3..k {
                    let m = 1u64 << (j + 1);
                    if mul_mod(x, x, m) != d % m {
                        x += 1 << (j - 1);
                    }
                }
                let half = pk / 2;
                let mut v = vec![x % pk, (pk - x) % pk, (x + half) % pk, (pk - x + half) % pk];
                v.sort_unstable();
                v.dedup();
                return v;
            }
        }
    }
    let Some(mut x) = tonelli_shanks(d % p, p) else { return vec![] };
    let mut m = p;
    for _ in 1..k {
        // Hensel: x <- x - (x² - d) / (2x)
        let m2 = m * p;
        let fx = reduce(mul_mod(x, x, m2) as i128 - (d % m2) as i128, m2);
        let inv = super::inv_mod(2 * x as i128, m2).unwrap();
        x = reduce(x as i128 - mul_mod(fx, inv, m2) as i128, m2);
        m = m2;
    }
    let mut v = vec![x, (pk - x) % pk];
    v.sort_unstable();
    v.dedup();
    v
}

/// Roots of v² ≡ d mod p^e for arbitrary d.
fn prime_power_roots(d: u64, p: u64, e: u32) -> Vec<u64> {
    let pe = p.pow(e);
    let d = d % pe;
    if d == 0 {
        // v ≡ 0 mod p^{ceil(e/2)}
        let step = p.pow(e.div_ceil(2));
        return (0..pe / step).map(|t| t * step).collect();
    }
    let mut k = 0;
    let mut rest = d;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    if k % 2 == 1 {
        return vec![];
    }
    let half = p.pow(k / 2);
    let inner = e - k;
    let base = unit_roots(rest, p, inner);
    // v = p^{k/2}·u with u fixed mod p^{e-k}, free mod p^{e-k/2}
    let pinner = p.pow(inner);
    let lifts = p.pow(k / 2);
    let mut out = Vec::with_capacity(base.len() * lifts as usize);
    for u in base {
        for t in 0..lifts {
            out.push((half as u128 * (u + t * pinner) as u128 % pe as u128) as u64);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// All v mod n with v² ≡ d (mod n), ascending.
pub fn quadratic_roots(d: i128, n: u64) -> Vec<u64> {
    assert!(n >= 1);
    let d = reduce(d, n);
    let mut acc = vec![0u64];
    let mut m = 1u64;
    for &(p, e) in factorize(n).pairs() {
        let pe = p.pow(e);
        let local = prime_power_roots(d % pe, p, e);
        if local.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(acc.len() * local.len());
        for &a in &acc {
            for &b in &local {
                next.push(crt_pair(a, m, b, pe).unwrap().0);
            }
        }
        acc = next;
        m *= pe;
    }
    acc.sort_unstable();
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(quadratic_roots(1, 8), vec![1, 3, 5, 7]);
        assert_eq!(quadratic_roots(0, 7), vec![0]);
        assert_eq!(quadratic_roots(2, 7), vec![3, 4]);
        assert_eq!(quadratic_roots(-1, 5), vec![2, 3]);
        assert_eq!(quadratic_roots(5, 1), vec![0]);
    }

    #[test]
    fn exhaustive_against_search() {
        for n in 1..=500u64 {
            let mut by_square: Vec<Vec<u64>> = vec![Vec::new(); n as usize];
            for v in 0..n {
                by_square[(v * v % n) as usize].push(v);
            }
            for d in 0..n {
                assert_eq!(quadratic_roots(d as i128, n), by_square[d as usize], "d={d} n={n}");
            }
        }
    }

    #[test]
    fn large_modulus() {
        let n = 999_999_937u64; // prime
        let roots = quadratic_roots(2, n);
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert_eq!(mul_mod(r, r, n), 2);
        }
        let n = 1u64 << 29;
        let roots = quadratic_roots(17, n);
        assert_eq!(roots.len(), 4);
        for r in roots {
            assert_eq!(mul_mod(r, r, n), 17);
        }
    }
}
