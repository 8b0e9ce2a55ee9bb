//! Integer tables and quadratic symbols.
//!
//! Key items: [`ArithTables`] (primes, Mobius values, smallest prime factors,
//! all built by one segmented sieve pass), [`kronecker`], [`chi8d`] for the
//! twisted character `n -> (8d/n)`, and [`ArithTables::mz_rz`] for the
//! square-divisor split of the square-free indicator.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Smallest permitted sieve limit.
pub const LIMIT_MIN: u64 = 2;
/// Largest permitted sieve limit.
pub const LIMIT_MAX: u64 = 1 << 31;
/// Default sieve segment length.
pub const DEFAULT_SEGMENT: usize = 1 << 20;

/// Prime, Mobius, and smallest-prime-factor tables up to a fixed limit.
///
/// One segmented Eratosthenes pass fills everything: the segment working set
/// stays bounded by the segment length while the long-lived tables cost five
/// bytes per integer (`i8` Mobius plus `u32` smallest factor).
pub struct ArithTables {
    limit: u64,
    primes: Vec<u64>,
    moebius: Vec<i8>,
    spf: Vec<u32>,
}

/// Builds [`ArithTables`] with the default segment length.
pub fn build_tables(limit: u64) -> Result<ArithTables> {
    build_tables_with_segment(limit, DEFAULT_SEGMENT)
}

/// Builds [`ArithTables`] with an explicit segment length (used by tests to
/// confirm the segmentation does not influence results).
pub fn build_tables_with_segment(limit: u64, segment: usize) -> Result<ArithTables> {
    if !(LIMIT_MIN..=LIMIT_MAX).contains(&limit) {
        return Err(Error::SieveLimit {
            limit,
            min: LIMIT_MIN,
            max: LIMIT_MAX,
        });
    }
    let segment = segment.max(64);
    let len = (limit + 1) as usize;
    let mut moebius = vec![0i8; len];
    let mut spf = vec![0u32; len];
    let mut primes = Vec::new();

    let sqrt_limit = limit.isqrt();
    let base = simple_sieve(sqrt_limit);

    moebius[1] = 1;
    spf[1] = 1;

    let mut prod = vec![1u64; segment];
    let mut sign = vec![1i8; segment];
    let mut squared = vec![false; segment];
    let mut spf_seg = vec![0u32; segment];

    let mut lo = 2u64;
    while lo <= limit {
        let hi = (lo + segment as u64).min(limit + 1);
        let seg_len = (hi - lo) as usize;
        prod[..seg_len].fill(1);
        sign[..seg_len].fill(1);
        squared[..seg_len].fill(false);
        spf_seg[..seg_len].fill(0);

        for &p in &base {
            let mut m = p.max(lo.div_ceil(p) * p);
            while m < hi {
                let i = (m - lo) as usize;
                prod[i] *= p;
                sign[i] = -sign[i];
                if spf_seg[i] == 0 {
                    spf_seg[i] = p as u32;
                }
                m += p;
            }
            let p2 = p * p;
            if p2 < hi {
                let mut m = p2.max(lo.div_ceil(p2) * p2);
                while m < hi {
                    squared[(m - lo) as usize] = true;
                    m += p2;
                }
            }
        }

        for i in 0..seg_len {
            let n = lo + i as u64;
            let idx = n as usize;
            if prod[i] == 1 {
                // Untouched by every base prime, so n itself is prime.
                spf[idx] = n as u32;
                moebius[idx] = -1;
                primes.push(n);
            } else {
                spf[idx] = spf_seg[i];
                if squared[i] {
                    moebius[idx] = 0;
                } else if prod[i] < n {
                    // Exactly one prime factor above the base range remains.
                    moebius[idx] = -sign[i];
                } else {
                    moebius[idx] = sign[i];
                }
                if spf_seg[i] as u64 == n {
                    // A base-range prime marks itself as its own first factor.
                    primes.push(n);
                }
            }
        }
        lo = hi;
    }

    Ok(ArithTables {
        limit,
        primes,
        moebius,
        spf,
    })
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let len = (limit + 1) as usize;
    let mut composite = vec![false; len];
    let mut primes = Vec::new();
    for n in 2..len {
        if !composite[n] {
            primes.push(n as u64);
            let mut m = n * n;
            while m < len {
                composite[m] = true;
                m += n;
            }
        }
    }
    primes
}

impl ArithTables {
    /// Smallest prime factor of `n` for `2 <= n <= limit`; feeds the
    /// in-crate multiplicative table builders.
    pub(crate) fn spf(&self, n: u64) -> u32 {
        self.spf[n as usize]
    }

    /// Upper bound covered by every table.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// All primes `<= limit`, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes `< bound`, ascending.
    pub fn primes_below(&self, bound: f64) -> &[u64] {
        let cut = self.primes.partition_point(|&p| (p as f64) < bound);
        &self.primes[..cut]
    }

    /// Mobius function of `n`.
    pub fn moebius(&self, n: u64) -> Result<i8> {
        self.moebius
            .get(n as usize)
            .copied()
            .ok_or(Error::MoebiusRange(n, self.limit))
    }

    /// True when `n` is odd and square-free.
    pub fn is_squarefree_odd(&self, n: u64) -> Result<bool> {
        Ok(n % 2 == 1 && self.moebius(n)? != 0)
    }

    /// Prime factorization of `n` via the smallest-prime-factor table.
    pub fn factor(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        if n as usize >= self.spf.len() {
            return Err(Error::MoebiusRange(n, self.limit));
        }
        let mut factors = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf[m as usize] as u64;
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        Ok(factors)
    }

    /// Splits the square-free indicator of `d` at the cutoff `z`.
    ///
    /// Returns `(M_Z, R_Z)` where `M_Z` sums `mu(l)` over square divisors
    /// `l^2 | d` with `l <= z` and `R_Z` collects the remaining `l > z`, so
    /// that `M_Z + R_Z = mu(d)^2` exactly. `d` must be odd and positive.
    pub fn mz_rz(&self, d: u64, z: f64) -> Result<(i64, i64)> {
        if d == 0 || d % 2 == 0 {
            return Err(Error::BadTwist(d));
        }
        let factors = self.factor(d)?;
        // l^2 | d exactly when l divides the product of p^floor(e/2).
        let sq_primes: Vec<u64> = factors
            .iter()
            .filter(|&&(_, e)| e >= 2)
            .map(|&(p, _)| p)
            .collect();
        let mut m_z = 0i64;
        let mut r_z = 0i64;
        for mask in 0u32..(1 << sq_primes.len()) {
            let mut l = 1u64;
            for (bit, &p) in sq_primes.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    l *= p;
                }
            }
            let mu = if (mask.count_ones() & 1) == 1 { -1 } else { 1 };
            if (l as f64) <= z {
                m_z += mu;
            } else {
                r_z += mu;
            }
        }
        Ok((m_z, r_z))
    }
}

/// Kronecker symbol `(a/n)`, the fully multiplicative extension of the
/// Jacobi symbol to every integer pair except `(0, 0)`.
pub fn kronecker(a: i64, n: i64) -> Result<i8> {
    if a == 0 && n == 0 {
        return Err(Error::KroneckerUndefined);
    }
    if n == 0 {
        return Ok(if a == 1 || a == -1 { 1 } else { 0 });
    }
    let mut result: i8 = 1;
    let mut m: u64 = if n < 0 {
        if a < 0 {
            result = -result;
        }
        n.unsigned_abs()
    } else {
        n as u64
    };
    if m & 1 == 0 {
        if a & 1 == 0 {
            return Ok(0);
        }
        let e = m.trailing_zeros();
        m >>= e;
        if e & 1 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    if m == 1 {
        return Ok(result);
    }
    // Binary Jacobi loop on (a mod m, m) with m odd and positive.
    let mut x = a.rem_euclid(m as i64) as u64;
    while x != 0 {
        let tz = x.trailing_zeros();
        x >>= tz;
        if tz & 1 == 1 {
            let r = m & 7;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        if x & 3 == 3 && m & 3 == 3 {
            result = -result;
        }
        std::mem::swap(&mut x, &mut m);
        x %= m;
    }
    Ok(if m == 1 { result } else { 0 })
}

/// The twisted quadratic character `chi_{8d}(n) = (8d/n)`.
///
/// `d` must be odd, positive, and square-free so that `8d` indexes an honest
/// real primitive character.
pub fn chi8d(d: u64, n: u64) -> Result<i8> {
    if !is_valid_twist(d) {
        return Err(Error::BadTwist(d));
    }
    let a = 8i64 * d as i64;
    kronecker(a, i64::try_from(n).map_err(|_| Error::MoebiusRange(n, i64::MAX as u64))?)
}

/// True when `d` is odd, positive, and square-free (checked by division, no
/// tables required).
pub fn is_valid_twist(d: u64) -> bool {
    if d == 0 || d % 2 == 0 || d > LIMIT_MAX {
        return false;
    }
    let mut m = d;
    let mut p = 3u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 2;
    }
    true
}

/// Writes the prime list as a little-endian `u64` file with an 8-byte count
/// header.
pub fn write_prime_cache(path: &Path, primes: &[u64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * (primes.len() + 1));
    buf.extend_from_slice(&(primes.len() as u64).to_le_bytes());
    for &p in primes {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::PrimeCache {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
}

/// Reads a prime cache written by [`write_prime_cache`], validating the
/// count header and ordering.
pub fn read_prime_cache(path: &Path) -> Result<Vec<u64>> {
    let fail = |reason: &str| Error::PrimeCache {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| fail(&e.to_string()))?;
    if bytes.len() < 8 {
        return Err(fail("missing count header"));
    }
    let count = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 8 * count {
        return Err(fail(&format!(
            "count header says {count} primes but file holds {} bytes of data",
            bytes.len() - 8
        )));
    }
    let mut primes = Vec::with_capacity(count);
    let mut prev = 0u64;
    for chunk in bytes[8..].chunks_exact(8) {
        let p = u64::from_le_bytes(chunk.try_into().unwrap());
        if p <= prev {
            return Err(fail("primes are not strictly ascending"));
        }
        prev = p;
        primes.push(p);
    }
    Ok(primes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow_mod(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
        let mut acc = 1u64;
        base %= modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % modulus;
            }
            base = base * base % modulus;
            exp >>= 1;
        }
        acc
    }

    /// Euler's criterion, the independent route to the Legendre symbol.
    fn legendre_euler(a: i64, p: u64) -> i8 {
        let r = a.rem_euclid(p as i64) as u64;
        if r == 0 {
            return 0;
        }
        let e = pow_mod(r, (p - 1) / 2, p);
        if e == 1 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn small_prime_list_is_exact() {
        let t = build_tables(10).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
    }

    #[test]
    fn prime_count_at_a_million_for_two_segment_sizes() {
        let a = build_tables_with_segment(1_000_000, 1 << 20).unwrap();
        let b = build_tables_with_segment(1_000_000, 1 << 14).unwrap();
        assert_eq!(a.primes().len(), 78_498);
        assert_eq!(a.primes(), b.primes());
        assert_eq!(a.moebius, b.moebius);
        assert_eq!(a.spf, b.spf);
    }

    #[test]
    fn moebius_values() {
        let t = build_tables(100).unwrap();
        let expect = [(0u64, 0i8), (1, 1), (2, -1), (4, 0), (6, 1), (12, 0), (30, -1), (45, 0)];
        for (n, mu) in expect {
            assert_eq!(t.moebius(n).unwrap(), mu, "mu({n})");
        }
        assert!(t.moebius(101).is_err());
    }

    #[test]
    fn moebius_sums_over_divisors_vanish() {
        let t = build_tables(3000).unwrap();
        for n in 1..=3000u64 {
            let mut total = 0i64;
            for d in 1..=n {
                if n % d == 0 {
                    total += t.moebius(d).unwrap() as i64;
                }
            }
            assert_eq!(total, i64::from(n == 1), "n = {n}");
        }
    }

    #[test]
    fn smallest_prime_factors() {
        let t = build_tables(10_000).unwrap();
        assert_eq!(t.spf[1], 1);
        assert_eq!(t.spf[2], 2);
        assert_eq!(t.spf[15], 3);
        assert_eq!(t.spf[49], 7);
        assert_eq!(t.spf[9973], 9973);
        assert_eq!(t.factor(360).unwrap(), vec![(2, 3), (3, 2), (5, 1)]);
    }

    #[test]
    fn squarefree_odd_predicate() {
        let t = build_tables(100).unwrap();
        for n in [1u64, 3, 15, 21, 95] {
            assert!(t.is_squarefree_odd(n).unwrap(), "{n}");
        }
        for n in [2u64, 9, 25, 12, 45, 99] {
            assert!(!t.is_squarefree_odd(n).unwrap(), "{n}");
        }
    }

    #[test]
    fn kronecker_bottom_conventions() {
        assert!(kronecker(0, 0).is_err());
        assert_eq!(kronecker(1, 0).unwrap(), 1);
        assert_eq!(kronecker(-1, 0).unwrap(), 1);
        assert_eq!(kronecker(5, 0).unwrap(), 0);
        assert_eq!(kronecker(7, 1).unwrap(), 1);
        assert_eq!(kronecker(-3, -1).unwrap(), -1);
        assert_eq!(kronecker(3, -1).unwrap(), 1);
        assert_eq!(kronecker(6, 2).unwrap(), 0);
        assert_eq!(kronecker(7, 2).unwrap(), 1);
        assert_eq!(kronecker(3, 2).unwrap(), -1);
    }

    #[test]
    fn kronecker_named_value() {
        assert_eq!(kronecker(8, 3).unwrap(), -1);
    }

    #[test]
    fn kronecker_matches_euler_criterion() {
        let t = build_tables(200).unwrap();
        for &p in t.primes().iter().filter(|&&p| p > 2) {
            for a in -(2 * p as i64)..=(2 * p as i64) {
                assert_eq!(
                    kronecker(a, p as i64).unwrap(),
                    legendre_euler(a, p),
                    "a = {a}, p = {p}"
                );
            }
        }
    }

    #[test]
    fn kronecker_multiplicative_in_both_arguments() {
        let samples = [-9i64, -5, -2, -1, 1, 2, 3, 7, 10, 15, 77];
        for &a in &samples {
            for &b in &samples {
                for &n in &samples {
                    if n == 0 && a * b == 0 {
                        continue;
                    }
                    let lhs = kronecker(a * b, n).unwrap();
                    let rhs = kronecker(a, n).unwrap() * kronecker(b, n).unwrap();
                    assert_eq!(lhs, rhs, "top: a = {a}, b = {b}, n = {n}");
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let lhs = kronecker(n, a * b).unwrap();
                    let rhs = kronecker(n, a).unwrap() * kronecker(n, b).unwrap();
                    assert_eq!(lhs, rhs, "bottom: a = {a}, b = {b}, n = {n}");
                }
            }
        }
    }

    #[test]
    fn chi8d_values_and_preconditions() {
        assert_eq!(chi8d(3, 5).unwrap(), 1);
        assert_eq!(chi8d(1, 7).unwrap(), 1);
        assert_eq!(chi8d(1, 3).unwrap(), -1);
        assert_eq!(chi8d(3, 3).unwrap(), 0);
        assert!(chi8d(9, 5).is_err());
        assert!(chi8d(2, 5).is_err());
        assert!(chi8d(0, 5).is_err());
    }

    #[test]
    fn chi8d_is_multiplicative_and_periodic() {
        for d in [1u64, 3, 5, 15, 21] {
            for m in 1..40u64 {
                for n in 1..40u64 {
                    let lhs = chi8d(d, m * n).unwrap();
                    let rhs = chi8d(d, m).unwrap() * chi8d(d, n).unwrap();
                    assert_eq!(lhs, rhs, "d = {d}, m = {m}, n = {n}");
                }
                assert_eq!(
                    chi8d(d, m).unwrap(),
                    chi8d(d, m + 8 * d).unwrap(),
                    "period: d = {d}, m = {m}"
                );
            }
        }
    }

    #[test]
    fn mz_rz_named_values() {
        let t = build_tables(100).unwrap();
        assert_eq!(t.mz_rz(9, 3.0).unwrap(), (0, 0));
        assert_eq!(t.mz_rz(5, 1.0).unwrap(), (1, 0));
        assert_eq!(t.mz_rz(49, 1.0).unwrap(), (1, -1));
        assert_eq!(t.mz_rz(1, 0.5).unwrap(), (0, 1));
        assert!(t.mz_rz(4, 1.0).is_err());
    }

    #[test]
    fn mz_rz_sums_to_squarefree_indicator() {
        let t = build_tables(10_000).unwrap();
        for z in [1.0, 10.0, 100.0] {
            for d in (1..=9_999u64).step_by(2) {
                let (m, r) = t.mz_rz(d, z).unwrap();
                let mu = t.moebius(d).unwrap() as i64;
                assert_eq!(m + r, mu * mu, "d = {d}, z = {z}");
            }
        }
    }

    #[test]
    fn prime_cache_round_trip() {
        let t = build_tables(10_000).unwrap();
        let dir = std::env::temp_dir();
        let path = dir.join(format!("onelevel_prime_cache_{}.bin", std::process::id()));
        write_prime_cache(&path, t.primes()).unwrap();
        let back = read_prime_cache(&path).unwrap();
        assert_eq!(back, t.primes());

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] ^= 1;
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_prime_cache(&path).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn limits_are_enforced() {
        assert!(build_tables(1).is_err());
        assert!(build_tables(LIMIT_MAX + 1).is_err());
    }
}
