//! Arithmetic in `Z/l^n Z`.
//!
//! Residues are stored as `u64` with the modulus capped at `2^62`, so every
//! product fits in a `u128` intermediate.

use std::fmt;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`PrimePowerModulus`].
pub const MAX_MODULUS: u64 = 1 << 62;

/// Moduli at or below this bound are handled by exhaustive scans in
/// [`quad_roots`].
pub const EXHAUSTIVE_LIMIT: u64 = 16;

/// The ring `Z/l^n Z`, described by its prime and exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimePowerModulus {
    prime: u64,
    exponent: u32,
    modulus: u64,
}

impl PrimePowerModulus {
    pub fn new(prime: u64, exponent: u32) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::InvalidModulus(format!("{prime} is not prime")));
        }
        if exponent == 0 {
            return Err(Error::InvalidModulus("exponent must be at least 1".into()));
        }
        let mut modulus: u64 = 1;
        for _ in 0..exponent {
            modulus = modulus
                .checked_mul(prime)
                .filter(|&m| m <= MAX_MODULUS)
                .ok_or_else(|| Error::InvalidModulus(format!("{prime}^{exponent} exceeds 2^62")))?;
        }
        Ok(PrimePowerModulus {
            prime,
            exponent,
            modulus,
        })
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `l^k` as a modulus, for `1 <= k`.
    pub fn with_exponent(&self, k: u32) -> Result<Self> {
        PrimePowerModulus::new(self.prime, k)
    }

    /// `l^k` as an integer (no range checks beyond `k <= exponent`).
    pub fn power(&self, k: u32) -> u64 {
        self.prime.pow(k)
    }

    pub fn residue(&self, value: i128) -> Residue {
        Residue::new(value, *self)
    }

    pub fn zero(&self) -> Residue {
        Residue {
            value: 0,
            modulus: *self,
        }
    }

    pub fn one(&self) -> Residue {
        Residue {
            value: 1 % self.modulus,
            modulus: *self,
        }
    }

    /// Number of units in the ring.
    pub fn unit_count(&self) -> u64 {
        self.modulus / self.prime * (self.prime - 1)
    }

    pub fn is_unit(&self, value: u64) -> bool {
        !value.is_multiple_of(self.prime)
    }

    /// Reduce an arbitrary integer into `[0, m)`.
    pub fn reduce(&self, value: i128) -> u64 {
        value.rem_euclid(self.modulus as i128) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.modulus as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + self.modulus as u128 - (b % self.modulus) as u128) % self.modulus as u128)
            as u64
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.modulus)
    }

    pub fn neg(&self, a: u64) -> u64 {
        self.sub(0, a)
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.modulus)
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        inv_mod(a, self.modulus)
    }

    /// `l`-adic valuation of `value` inside this ring; `None` for zero.
    pub fn valuation_of(&self, value: u64) -> Option<u32> {
        let mut v = value % self.modulus;
        if v == 0 {
            return None;
        }
        let mut k = 0;
        while v.is_multiple_of(self.prime) {
            v /= self.prime;
            k += 1;
        }
        Some(k)
    }
}

impl fmt::Display for PrimePowerModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.prime, self.exponent)
    }
}

/// An element of `Z/l^n Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue {
    value: u64,
    modulus: PrimePowerModulus,
}

impl Residue {
    pub fn new(value: i128, modulus: PrimePowerModulus) -> Self {
        Residue {
            value: modulus.reduce(value),
            modulus,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn is_unit(&self) -> bool {
        self.modulus.is_unit(self.value)
    }

    pub fn add(&self, other: &Residue) -> Residue {
        self.with(self.modulus.add(self.value, other.value))
    }

    pub fn sub(&self, other: &Residue) -> Residue {
        self.with(self.modulus.sub(self.value, other.value))
    }

    pub fn mul(&self, other: &Residue) -> Residue {
        self.with(self.modulus.mul(self.value, other.value))
    }

    pub fn neg(&self) -> Residue {
        self.with(self.modulus.neg(self.value))
    }

    pub fn inv(&self) -> Option<Residue> {
        self.modulus.inv(self.value).map(|v| self.with(v))
    }

    fn with(&self, value: u64) -> Residue {
        Residue {
            value,
            modulus: self.modulus,
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus.modulus)
    }
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Factor `n` into `(prime, exponent)` pairs in increasing prime order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `l`-adic valuation of a residue; `None` stands for infinity (the residue is zero).
pub fn valuation(x: &Residue) -> Option<u32> {
    x.modulus.valuation_of(x.value)
}

/// Euler's criterion for a unit modulo an odd prime.
fn is_qr_mod_prime(u: u64, p: u64) -> bool {
    pow_mod(u % p, (p - 1) / 2, p) == 1
}

/// Whether `x` is a square in `Z/l^n Z`.
///
/// Zero is a square for every modulus.
pub fn is_square(x: &Residue) -> bool {
    let m = x.modulus;
    let Some(v) = valuation(x) else {
        return true;
    };
    if v % 2 == 1 {
        return false;
    }
    let rest = m.exponent - v;
    let u = x.value / m.power(v);
    if m.prime == 2 {
        let window = 1u64 << rest.min(3);
        u % window == 1 % window
    } else {
        is_qr_mod_prime(u, m.prime)
    }
}

/// Tonelli-Shanks square root of a quadratic residue modulo an odd prime.
fn sqrt_mod_prime(u: u64, p: u64) -> u64 {
    let u = u % p;
    if p % 4 == 3 {
        return pow_mod(u, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while is_qr_mod_prime(z, p) {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(u, q, p);
    let mut r = pow_mod(u, q.div_ceil(2), p);
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
    r
}

/// One square root of the unit `u` modulo `l^k`; `u` must be a square unit.
fn unit_sqrt(u: u64, prime: u64, k: u32) -> u64 {
    let m = prime.pow(k);
    if prime == 2 {
        if k <= 2 {
            return 1 % m;
        }
        // u = 1 mod 8: fix one bit at a time
        let mut r: u64 = 1;
        for i in 3..k {
            let sq = mul_mod(r, r, m);
            let diff = (sq as i128 - u as i128).rem_euclid(m as i128) as u64;
            if (diff >> i) & 1 == 1 {
                r += 1 << (i - 1);
            }
        }
        return r % m;
    }
    let mut r = sqrt_mod_prime(u, prime);
    // Newton iteration at full precision; 2r stays a unit
    loop {
        let sq = mul_mod(r, r, m);
        if sq == u % m {
            return r;
        }
        let num = (sq as i128 - u as i128).rem_euclid(m as i128) as u64;
        let den = inv_mod(mul_mod(2, r, m), m).expect("2r is a unit");
        r = (r as i128 - mul_mod(num, den, m) as i128).rem_euclid(m as i128) as u64;
    }
}

/// Square roots modulo `l^k` of the square unit `u`, as representatives in `[0, l^k)`.
fn unit_sqrt_classes(u: u64, prime: u64, k: u32) -> Vec<u64> {
    let m = prime.pow(k);
    let r = unit_sqrt(u, prime, k);
    let mut out = vec![r, (m - r) % m];
    if prime == 2 && k >= 3 {
        let half = m / 2;
        out.push((r + half) % m);
        out.push((m - r + half) % m);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The smallest nonnegative square root of `x`, if one exists.
pub fn sqrt_mod(x: &Residue) -> Option<Residue> {
    if !is_square(x) {
        return None;
    }
    let m = x.modulus;
    let Some(v) = valuation(x) else {
        return Some(m.zero());
    };
    let rest = m.exponent - v;
    let u = x.value / m.power(v);
    let base = unit_sqrt_classes(u % m.power(rest), m.prime, rest);
    let lead = m.power(v / 2);
    let r = base[0];
    Some(Residue {
        value: (lead as u128 * r as u128 % m.modulus as u128) as u64,
        modulus: m,
    })
}

/// All square roots of `x` in `[0, m)`, sorted.
pub fn all_sqrts(x: &Residue) -> Vec<u64> {
    if !is_square(x) {
        return Vec::new();
    }
    let m = x.modulus;
    let Some(v) = valuation(x) else {
        let step = m.power(m.exponent.div_ceil(2));
        return (0..m.modulus / step).map(|k| k * step).collect();
    };
    let rest = m.exponent - v;
    let u = x.value / m.power(v);
    let lead = m.power(v / 2);
    let period = m.power(rest);
    let mut out = Vec::new();
    for r in unit_sqrt_classes(u % period, m.prime, rest) {
        for k in 0..lead {
            let t = r as u128 + k as u128 * period as u128;
            out.push((lead as u128 * t % m.modulus as u128) as u64);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// All roots of `x^2 + b x + c` modulo `m`, sorted.
///
/// Small moduli are scanned exhaustively. Larger odd moduli complete the
/// square; larger powers of two are lifted one bit at a time.
pub fn quad_roots(b: &Residue, c: &Residue, m: PrimePowerModulus) -> Vec<Residue> {
    let (b, c) = (b.value % m.modulus, c.value % m.modulus);
    let eval = |x: u64| m.add(m.add(m.mul(x, x), m.mul(b, x)), c);
    let mut roots: Vec<u64> = if m.modulus <= EXHAUSTIVE_LIMIT {
        (0..m.modulus).filter(|&x| eval(x) == 0).collect()
    } else if m.prime != 2 {
        let disc = m.sub(m.mul(b, b), m.mul(4, c));
        let half = m.inv(2).expect("odd modulus");
        all_sqrts(&Residue {
            value: disc,
            modulus: m,
        })
        .into_iter()
        .map(|s| m.mul(m.sub(s, b), half))
        .collect()
    } else {
        let mut level: Vec<u64> = (0..2u64)
            .filter(|&x| (x * x + b * x + c) % 2 == 0)
            .collect();
        for k in 1..m.exponent {
            let modk = 1u128 << (k + 1);
            let mut next = Vec::new();
            for &r in &level {
                for cand in [r, r + (1 << k)] {
                    let val =
                        (cand as u128 * cand as u128 + b as u128 * cand as u128 + c as u128) % modk;
                    if val == 0 {
                        next.push(cand);
                    }
                }
            }
            level = next;
        }
        level
    };
    roots.sort_unstable();
    roots.dedup();
    roots
        .into_iter()
        .map(|v| Residue {
            value: v,
            modulus: m,
        })
        .collect()
}

/// Lift an approximate root of `x^2 + b x + c` to the root modulo `target`.
///
/// `b` and `c` are read as integers via their least absolute residues, since
/// the working precision exceeds `target`. The precondition is
/// `v(f(a)) >= 2k + 1` and `v(f'(a)) <= k` for some `k` with
/// `2k + 1 <= target.exponent()`; the result is the reduction of the unique
/// `l`-adic root `beta` with `v(beta - a) > k`.
pub fn hensel_lift_root(
    b: &Residue,
    c: &Residue,
    approx_root: &Residue,
    target: PrimePowerModulus,
) -> Result<Residue> {
    if b.modulus.prime != target.prime
        || c.modulus.prime != target.prime
        || approx_root.modulus.prime != target.prime
    {
        return Err(Error::LiftFailure(
            "residues live over a different prime".into(),
        ));
    }
    let p = target.prime;
    let n = target.exponent;
    let signed = |r: &Residue| {
        let (v, m) = (r.value as i128, r.modulus.modulus as i128);
        if 2 * v > m {
            v - m
        } else {
            v
        }
    };
    let (bv, cv) = (signed(b), signed(c));
    let alpha = approx_root.value as i128;
    let fval = |x: i128, m: i128| (x * x % m + bv * x + cv).rem_euclid(m);
    let deriv = (2 * alpha + bv).rem_euclid(target.modulus as i128) as u64;
    let vd = target.valuation_of(deriv).unwrap_or(n);
    let vf = target
        .valuation_of(fval(alpha, target.modulus as i128) as u64)
        .unwrap_or(n);
    if 2 * vd + 1 > n || vf < 2 * vd + 1 {
        return Err(Error::LiftFailure(format!(
            "v(f(a)) = {vf}, v(f'(a)) = {vd} do not satisfy v(f(a)) >= 2k+1 >= 2v(f'(a))+1 within exponent {n}"
        )));
    }
    let work_exp = n + vd;
    let work = PrimePowerModulus::new(p, work_exp)
        .map_err(|_| Error::LiftFailure("working precision exceeds 2^62".into()))?;
    let wm = work.modulus as i128;
    let lead = p.pow(vd) as i128;
    let mut x = alpha.rem_euclid(wm);
    for _ in 0..128 {
        let fx = fval(x, wm);
        if fx == 0 {
            return Ok(Residue {
                value: (x % target.modulus as i128) as u64,
                modulus: target,
            });
        }
        let d = (2 * x + bv).rem_euclid(wm);
        let dv = work.valuation_of(d as u64).unwrap_or(work_exp);
        if dv != vd || fx % lead != 0 {
            return Err(Error::LiftFailure(
                "derivative valuation changed during iteration".into(),
            ));
        }
        let red = PrimePowerModulus::new(p, work_exp - vd).expect("smaller modulus");
        let unit = (d / lead) as u64 % red.modulus;
        let inv = red.inv(unit).expect("unit");
        let step = red.mul(((fx / lead) as u64) % red.modulus, inv) as i128;
        x = (x - step).rem_euclid(wm);
    }
    Err(Error::LiftFailure(
        "newton iteration did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i128, p: u64, n: u32) -> Residue {
        Residue::new(v, PrimePowerModulus::new(p, n).unwrap())
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&r(0, 3, 3)), None);
        assert_eq!(valuation(&r(18, 3, 3)), Some(2));
        assert_eq!(valuation(&r(5, 7, 3)), Some(0));
    }

    #[test]
    fn square_examples() {
        assert!(is_square(&r(0, 3, 3)));
        assert!(!is_square(&r(5, 2, 3)));
        assert!(!is_square(&r(147, 7, 3)));
        assert!(is_square(&r(17, 2, 5)));
    }

    #[test]
    fn sqrt_examples() {
        for (p, n) in [(2, 1), (2, 5), (3, 4), (7, 2)] {
            assert_eq!(sqrt_mod(&r(1, p, n)).unwrap().value(), 1);
        }
        assert_eq!(sqrt_mod(&r(17, 2, 5)).unwrap().value(), 7);
        assert_eq!(sqrt_mod(&r(5, 2, 3)), None);
    }

    #[test]
    fn quad_root_examples() {
        let m27 = PrimePowerModulus::new(3, 3).unwrap();
        let roots = quad_roots(&m27.residue(-2), &m27.residue(1), m27);
        assert!(roots.iter().any(|x| x.value() == 1));
        let m343 = PrimePowerModulus::new(7, 3).unwrap();
        assert!(quad_roots(&m343.residue(4), &m343.residue(53), m343).is_empty());
        for n in [1, 4, 10, 17, 20] {
            let m = PrimePowerModulus::new(2, n).unwrap();
            let roots: Vec<u64> = quad_roots(&m.one(), &m.zero(), m)
                .iter()
                .map(|x| x.value())
                .collect();
            assert_eq!(roots, vec![0, m.modulus() - 1]);
        }
    }

    #[test]
    fn hensel_examples() {
        let m = PrimePowerModulus::new(3, 5).unwrap();
        let got = hensel_lift_root(&m.zero(), &m.residue(-1), &r(1, 3, 5), m).unwrap();
        assert_eq!(got.value(), 1);

        let t = PrimePowerModulus::new(3, 3).unwrap();
        let err = hensel_lift_root(&t.zero(), &t.residue(-2), &r(1, 3, 1), t);
        assert!(matches!(err, Err(Error::LiftFailure(_))));
    }

    #[test]
    fn hensel_two_adic_matches_deep_scan() {
        // oracle: roots of x^2 - 17 mod 2^11 that are 3 mod 4, reduced mod 2^7
        let deep = PrimePowerModulus::new(2, 11).unwrap();
        let mut reductions: Vec<u64> = (0..deep.modulus())
            .filter(|&x| deep.sub(deep.mul(x, x), 17) == 0 && x % 4 == 3)
            .map(|x| x % 128)
            .collect();
        reductions.sort_unstable();
        reductions.dedup();
        assert_eq!(reductions, vec![23]);

        let t = PrimePowerModulus::new(2, 7).unwrap();
        let got = hensel_lift_root(&t.zero(), &t.residue(-17), &r(7, 2, 5), t).unwrap();
        assert_eq!(got.value(), 23);
    }

    #[test]
    fn large_modulus_roots_solve_the_equation() {
        let m = PrimePowerModulus::new(3, 30).unwrap();
        let b = m.residue(5);
        let c = m.residue(-6 * 9);
        let roots = quad_roots(&b, &c, m);
        assert!(!roots.is_empty());
        for x in roots {
            let v = x.value();
            assert_eq!(m.add(m.add(m.mul(v, v), m.mul(b.value(), v)), c.value()), 0);
        }
    }

    #[test]
    fn modulus_guard() {
        assert!(PrimePowerModulus::new(2, 62).is_ok());
        assert!(PrimePowerModulus::new(2, 63).is_err());
        assert!(PrimePowerModulus::new(4, 2).is_err());
    }
}
