//! Packed 2x2 matrices for the hot loops: four 16-bit entries in one `u64`.

use rustc_hash::FxHashSet;

use crate::mat2::Mat2;
use crate::modring::PrimePowerModulus;

/// Largest modulus representable in packed form.
pub const PACKED_MAX_MODULUS: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PackedRing {
    modulus: PrimePowerModulus,
    m: u64,
    mask: u64,
    pow2: bool,
}

impl PackedRing {
    pub fn new(modulus: PrimePowerModulus) -> Self {
        let m = modulus.modulus();
        assert!(
            m <= PACKED_MAX_MODULUS,
            "modulus {m} too large for packed matrices"
        );
        PackedRing {
            modulus,
            m,
            mask: m - 1,
            pow2: m.is_power_of_two(),
        }
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    #[inline]
    pub fn red(&self, v: u64) -> u64 {
        if self.pow2 {
            v & self.mask
        } else {
            v % self.m
        }
    }

    #[inline]
    pub fn pack(a: u64, b: u64, c: u64, d: u64) -> u64 {
        a | (b << 16) | (c << 32) | (d << 48)
    }

    #[inline]
    pub fn unpack(x: u64) -> [u64; 4] {
        [x & 0xffff, (x >> 16) & 0xffff, (x >> 32) & 0xffff, x >> 48]
    }

    pub fn from_mat(&self, g: &Mat2) -> u64 {
        let [a, b, c, d] = g.entries();
        PackedRing::pack(a, b, c, d)
    }

    pub fn to_mat(&self, x: u64) -> Mat2 {
        Mat2::from_raw(PackedRing::unpack(x), self.modulus)
    }

    pub fn entries(&self, a: i64, b: i64, c: i64, d: i64) -> u64 {
        let r = |v: i64| v.rem_euclid(self.m as i64) as u64;
        PackedRing::pack(r(a), r(b), r(c), r(d))
    }

    pub fn identity(&self) -> u64 {
        self.scalar(1)
    }

    pub fn scalar(&self, s: u64) -> u64 {
        let s = self.red(s);
        PackedRing::pack(s, 0, 0, s)
    }

    #[inline]
    pub fn mul(&self, x: u64, y: u64) -> u64 {
        let [a, b, c, d] = PackedRing::unpack(x);
        let [e, f, g, h] = PackedRing::unpack(y);
        PackedRing::pack(
            self.red(a * e + b * g),
            self.red(a * f + b * h),
            self.red(c * e + d * g),
            self.red(c * f + d * h),
        )
    }

    #[inline]
    pub fn trace(&self, x: u64) -> u64 {
        let [a, _, _, d] = PackedRing::unpack(x);
        self.red(a + d)
    }

    #[inline]
    pub fn det(&self, x: u64) -> u64 {
        let [a, b, c, d] = PackedRing::unpack(x);
        self.red(a * d + self.m * self.m - self.red(b * c))
    }

    pub fn inverse(&self, x: u64) -> Option<u64> {
        let [a, b, c, d] = PackedRing::unpack(x);
        let inv = self.modulus.inv(self.det(x))?;
        let neg = |v: u64| self.red(self.m - v);
        Some(PackedRing::pack(
            self.red(d * inv),
            self.red(neg(b) * inv),
            self.red(neg(c) * inv),
            self.red(a * inv),
        ))
    }

    /// `p x p^-1` given `p` and its inverse.
    #[inline]
    pub fn conj(&self, p: u64, p_inv: u64, x: u64) -> u64 {
        self.mul(self.mul(p, x), p_inv)
    }

    pub fn reduce_to(&self, x: u64, target: &PackedRing) -> u64 {
        let [a, b, c, d] = PackedRing::unpack(x);
        PackedRing::pack(target.red(a), target.red(b), target.red(c), target.red(d))
    }

    pub fn is_scalar(&self, x: u64) -> bool {
        let [a, b, c, d] = PackedRing::unpack(x);
        b == 0 && c == 0 && a == d
    }

    pub fn is_unit(&self, v: u64) -> bool {
        !v.is_multiple_of(self.modulus.prime())
    }

    pub fn order_of(&self, x: u64) -> u64 {
        let id = self.identity();
        let mut y = x;
        let mut k = 1;
        while y != id {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    /// Every element of `GL_2` over this ring.
    pub fn gl2(&self) -> Vec<u64> {
        let m = self.m;
        let mut out = Vec::with_capacity(gl2_order(self.modulus) as usize);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let x = PackedRing::pack(a, b, c, d);
                        if self.is_unit(self.det(x)) {
                            out.push(x);
                        }
                    }
                }
            }
        }
        out
    }

    /// Units of the ring.
    pub fn units(&self) -> Vec<u64> {
        (1..self.m).filter(|&v| self.is_unit(v)).collect()
    }

    /// A small generating set of the unit group.
    pub fn unit_generators(&self) -> Vec<u64> {
        let units = self.units();
        let mut gens: Vec<u64> = Vec::new();
        let mut span: FxHashSet<u64> = FxHashSet::default();
        span.insert(1 % self.m);
        for &u in &units {
            if span.contains(&u) {
                continue;
            }
            gens.push(u);
            let mut frontier: Vec<u64> = span.iter().copied().collect();
            while let Some(x) = frontier.pop() {
                for &g in &gens {
                    let y = self.red(x * g);
                    if span.insert(y) {
                        frontier.push(y);
                    }
                }
            }
            if span.len() == units.len() {
                break;
            }
        }
        gens
    }
}

pub fn gl2_order(modulus: PrimePowerModulus) -> u64 {
    let p = modulus.prime();
    let m = modulus.modulus();
    let base = (p * p - 1) * (p * p - p);
    base * (m / p).pow(4)
}

/// Order-independent 128-bit hash of a set of packed elements.
pub fn set_hash<I: IntoIterator<Item = u64>>(elems: I) -> (u64, u64) {
    let mut s = 0u64;
    let mut t = 0u64;
    for x in elems {
        s = s.wrapping_add(mix(x));
        t ^= mix(x ^ 0x9e37_79b9_7f4a_7c15);
    }
    (s, t)
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Membership structure for closures: a dense bitset when `m^4` is small,
/// a hash set otherwise. Reusable across calls.
pub struct Seen {
    m: u64,
    dense: Option<Vec<u64>>,
    touched: Vec<u64>,
    sparse: FxHashSet<u64>,
}

const DENSE_LIMIT_BITS: u64 = 1 << 26;

#[inline]
fn dense_index(m: u64, x: u64) -> u64 {
    let [a, b, c, d] = PackedRing::unpack(x);
    a + m * (b + m * (c + m * d))
}

impl Seen {
    pub fn new(ring: &PackedRing) -> Self {
        let m = ring.m();
        let bits = m.checked_pow(4).unwrap_or(u64::MAX);
        let dense = (bits <= DENSE_LIMIT_BITS).then(|| vec![0u64; bits.div_ceil(64) as usize]);
        Seen {
            m,
            dense,
            touched: Vec::new(),
            sparse: FxHashSet::default(),
        }
    }

    #[inline]
    fn index(&self, x: u64) -> u64 {
        dense_index(self.m, x)
    }

    /// Insert, returning true if newly added.
    #[inline]
    pub fn insert(&mut self, x: u64) -> bool {
        let i = self.index(x);
        if let Some(bits) = &mut self.dense {
            let word = &mut bits[(i >> 6) as usize];
            let bit = 1u64 << (i & 63);
            if *word & bit != 0 {
                return false;
            }
            *word |= bit;
            self.touched.push(x);
            true
        } else {
            self.sparse.insert(x)
        }
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        match &self.dense {
            Some(bits) => {
                let i = self.index(x);
                bits[(i >> 6) as usize] & (1u64 << (i & 63)) != 0
            }
            None => self.sparse.contains(&x),
        }
    }

    pub fn clear(&mut self) {
        let m = self.m;
        if let Some(bits) = &mut self.dense {
            for &x in &self.touched {
                bits[(dense_index(m, x) >> 6) as usize] = 0;
            }
            self.touched.clear();
        } else {
            self.sparse.clear();
        }
    }
}

/// Outcome of a bounded closure.
pub enum Closure {
    Done(Vec<u64>),
    /// An element failed the predicate.
    Rejected,
    /// The group grew past the limit.
    TooLarge,
}

/// Breadth-first closure of `gens` (right multiplication), aborting when an
/// element fails `pred` or the size exceeds `limit`.
pub fn close_with(
    ring: &PackedRing,
    seen: &mut Seen,
    gens: &[u64],
    limit: usize,
    pred: &dyn Fn(u64) -> bool,
) -> Closure {
    seen.clear();
    let id = ring.identity();
    let mut elems = vec![id];
    seen.insert(id);
    let gens: Vec<u64> = gens.iter().copied().filter(|&g| g != id).collect();
    let mut i = 0;
    while i < elems.len() {
        let x = elems[i];
        for &g in &gens {
            let y = ring.mul(x, g);
            if seen.insert(y) {
                if !pred(y) {
                    seen.clear();
                    return Closure::Rejected;
                }
                elems.push(y);
                if elems.len() > limit {
                    seen.clear();
                    return Closure::TooLarge;
                }
            }
        }
        i += 1;
    }
    seen.clear();
    Closure::Done(elems)
}

/// Extend an already-closed group `base` (sorted, with `base_seen` unused) by
/// new generators, reusing `base` as the starting layer.
pub fn extend_with(
    ring: &PackedRing,
    seen: &mut Seen,
    base: &[u64],
    base_gens: &[u64],
    new_gens: &[u64],
    limit: usize,
    pred: &dyn Fn(u64) -> bool,
) -> Closure {
    seen.clear();
    let mut elems: Vec<u64> = base.to_vec();
    for &x in base {
        seen.insert(x);
    }
    let mut gens: Vec<u64> = base_gens.to_vec();
    gens.extend_from_slice(new_gens);
    // new cosets: multiply everything by the new generators, then keep closing
    let mut i = 0;
    while i < elems.len() {
        let x = elems[i];
        let skip_old = i < base.len();
        for (gi, &g) in gens.iter().enumerate() {
            if skip_old && gi < base_gens.len() {
                continue;
            }
            let y = ring.mul(x, g);
            if seen.insert(y) {
                if !pred(y) {
                    seen.clear();
                    return Closure::Rejected;
                }
                elems.push(y);
                if elems.len() > limit {
                    seen.clear();
                    return Closure::TooLarge;
                }
            }
        }
        i += 1;
    }
    seen.clear();
    Closure::Done(elems)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl2_orders() {
        for (p, n) in [(2, 1), (2, 2), (3, 1), (5, 1), (2, 3)] {
            let ring = PackedRing::new(PrimePowerModulus::new(p, n).unwrap());
            assert_eq!(ring.gl2().len() as u64, gl2_order(ring.modulus()));
        }
    }

    #[test]
    fn packed_matches_mat2() {
        let md = PrimePowerModulus::new(3, 3).unwrap();
        let ring = PackedRing::new(md);
        let x = Mat2::new([4, 7, 2, 9], md);
        let y = Mat2::new([1, 26, 13, 5], md);
        assert_eq!(
            ring.to_mat(ring.mul(ring.from_mat(&x), ring.from_mat(&y))),
            x.mul(&y)
        );
        assert_eq!(ring.det(ring.from_mat(&x)), x.det().value());
        let inv = ring.inverse(ring.from_mat(&x)).unwrap();
        assert_eq!(ring.mul(inv, ring.from_mat(&x)), ring.identity());
    }

    #[test]
    fn unit_generators_span() {
        for (p, n) in [(2, 1), (2, 2), (2, 5), (3, 3), (7, 2)] {
            let ring = PackedRing::new(PrimePowerModulus::new(p, n).unwrap());
            let gens = ring.unit_generators();
            assert!(gens.len() <= 2);
        }
    }
}
