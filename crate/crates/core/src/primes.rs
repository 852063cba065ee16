use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Primes `<= limit` by the sieve of Eratosthenes.
pub fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `>= from`.
pub fn next_prime(from: u64) -> u64 {
    let mut p = from.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo a prime. `a` must be nonzero mod `p`.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0);
    pow_mod(a, p - 2, p)
}

/// `d! mod p` for `d = 0..=max`.
pub fn factorials_mod(p: u64, max: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 1 % p;
    out.push(acc);
    for d in 1..=max as u64 {
        acc = mul_mod(acc, d % p, p);
        out.push(acc);
    }
    out
}

/// Solves `x = r_i (mod m_i)` for pairwise coprime prime moduli by Garner's
/// mixed-radix method; the result lies in `[0, prod m_i)`.
pub fn crt(residues: &[u64], moduli: &[u64]) -> BigUint {
    assert_eq!(residues.len(), moduli.len());
    // x = c_0 + c_1 m_0 + c_2 m_0 m_1 + ...
    let k = moduli.len();
    let mut coeffs: Vec<u64> = Vec::with_capacity(k);
    for i in 0..k {
        let mi = moduli[i];
        let mut v = residues[i] % mi;
        // subtract the partial value mod m_i, then divide by prod m_j (j < i)
        let mut prefix_val = 0u64;
        let mut radix = 1 % mi;
        for j in 0..i {
            prefix_val = (prefix_val + mul_mod(coeffs[j] % mi, radix, mi)) % mi;
            radix = mul_mod(radix, moduli[j] % mi, mi);
        }
        v = (v + mi - prefix_val) % mi;
        coeffs.push(mul_mod(v, inv_mod(radix, mi), mi));
    }
    let mut x = BigUint::zero();
    let mut radix = BigUint::one();
    for (c, &m) in coeffs.iter().zip(moduli) {
        x += &radix * *c;
        radix *= m;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sieve_small() {
        assert_eq!(sieve(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(sieve(1).is_empty());
        assert_eq!(sieve(1500).len(), 239);
    }

    #[test]
    fn sieve_agrees_with_trial_division() {
        let s = sieve(2000);
        let t: Vec<u64> = (0..=2000).filter(|&p| is_prime(p)).collect();
        assert_eq!(s, t);
    }

    #[test]
    fn factorial_residues() {
        assert_eq!(factorials_mod(7, 8), vec![1, 1, 2, 6, 3, 1, 6, 0, 0]);
        // Wilson: (p-1)! = -1 mod p
        for p in sieve(200) {
            assert_eq!(factorials_mod(p, p as usize - 1)[p as usize - 1], p - 1);
        }
    }

    #[test]
    fn crt_small() {
        assert_eq!(crt(&[2, 3, 2], &[3, 5, 7]), BigUint::from(23u32));
        assert_eq!(crt(&[7], &[11]), BigUint::from(7u32));
    }

    proptest! {
        #[test]
        fn crt_recovers_value(x in 0u64..1_000_000_000_000, pick in prop::collection::btree_set(0usize..60, 1..6)) {
            let primes = sieve(400);
            let moduli: Vec<u64> = pick.iter().map(|&i| primes[i + 10]).collect();
            let prod: BigUint = moduli.iter().map(|&m| BigUint::from(m)).product();
            let residues: Vec<u64> = moduli.iter().map(|&m| x % m).collect();
            prop_assert_eq!(crt(&residues, &moduli), BigUint::from(x) % prod);
        }

        #[test]
        fn inverse_contract(a in 1u64..10_000, i in 0usize..100) {
            let p = sieve(1000)[i];
            prop_assume!(a % p != 0);
            prop_assert_eq!(mul_mod(a, inv_mod(a, p), p), 1);
        }
    }
}
