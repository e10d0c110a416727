//! Cartan groups of CM elliptic curves and the prime-power case analysis.
//!
//! Number fields never appear; the field-theoretic hypotheses are passed in
//! as [`FieldFlags`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grp::packed::PackedRing;
use crate::grp::MatGroup;
use crate::mat2::{char_poly_has_root, Mat2};
use crate::modring::{factorize, is_square, PrimePowerModulus, Residue};

/// A negative fundamental discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ImagQuadDisc(i64);

fn squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

impl ImagQuadDisc {
    pub fn new(d: i64) -> Result<Self> {
        let bad = || Error::Invalid(format!("{d} is not a negative fundamental discriminant"));
        if d >= 0 {
            return Err(bad());
        }
        let a = d.unsigned_abs();
        let ok = match d.rem_euclid(16) {
            r if r % 4 == 1 => squarefree(a),
            8 | 12 => squarefree(a / 4),
            _ => false,
        };
        if ok {
            Ok(ImagQuadDisc(d))
        } else {
            Err(bad())
        }
    }

    pub fn value(&self) -> i64 {
        self.0
    }

    /// Kronecker symbol `(d/l)`.
    pub fn kronecker(&self, ell: u64) -> i8 {
        let d = self.0;
        if ell == 2 {
            return match d.rem_euclid(8) {
                0 | 2 | 4 | 6 => 0,
                1 | 7 => 1,
                _ => -1,
            };
        }
        let r = d.rem_euclid(ell as i64) as u64;
        if r == 0 {
            0
        } else if crate::modring::pow_mod(r, (ell - 1) / 2, ell) == 1 {
            1
        } else {
            -1
        }
    }

    pub fn splitting(&self, ell: u64) -> Splitting {
        match self.kronecker(ell) {
            1 => Splitting::Split,
            -1 => Splitting::Inert,
            _ => Splitting::Ramified,
        }
    }

    /// Number of units of the maximal order.
    pub fn unit_count(&self) -> u64 {
        match self.0 {
            -3 => 6,
            -4 => 4,
            _ => 2,
        }
    }

    /// `d (1 - d) / 4`, the upper-right coefficient of `g_{a,b}`.
    fn off_diagonal(&self) -> i64 {
        self.0 * (1 - self.0) / 4
    }
}

/// Caller-asserted facts about `K` relative to `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FieldFlags {
    pub f_in_k: bool,
    pub sqrt_ell_in_k: bool,
    pub kf_eq_k_sqrt_neg_ell: bool,
    pub sqrt2_in_k: bool,
    pub kf_eq_k_sqrt_neg2: bool,
    pub degree_k: u64,
    pub index_d: u64,
}

impl Default for FieldFlags {
    fn default() -> Self {
        FieldFlags {
            f_in_k: false,
            sqrt_ell_in_k: false,
            kf_eq_k_sqrt_neg_ell: false,
            sqrt2_in_k: false,
            kf_eq_k_sqrt_neg2: false,
            degree_k: 1,
            index_d: 1,
        }
    }
}

impl FieldFlags {
    /// Parse `k=v,...` with keys `f_in_k`, `sqrt_ell_in_k`, `kf_eq_sqrt_neg_ell`,
    /// `sqrt2_in_k`, `kf_eq_sqrt_neg2`, `deg_k`, `index_d`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut flags = FieldFlags::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("flag {item:?} lacks '='")))?;
            let as_bool = || match v {
                "1" | "true" | "yes" => Ok(true),
                "0" | "false" | "no" => Ok(false),
                _ => Err(Error::Invalid(format!(
                    "flag {k} expects a boolean, got {v:?}"
                ))),
            };
            let as_int = || {
                v.parse::<u64>().ok().filter(|&x| x > 0).ok_or_else(|| {
                    Error::Invalid(format!("flag {k} expects a positive integer, got {v:?}"))
                })
            };
            match k {
                "f_in_k" => flags.f_in_k = as_bool()?,
                "sqrt_ell_in_k" => flags.sqrt_ell_in_k = as_bool()?,
                "kf_eq_sqrt_neg_ell" => flags.kf_eq_k_sqrt_neg_ell = as_bool()?,
                "sqrt2_in_k" => flags.sqrt2_in_k = as_bool()?,
                "kf_eq_sqrt_neg2" => flags.kf_eq_k_sqrt_neg2 = as_bool()?,
                "deg_k" => flags.degree_k = as_int()?,
                "index_d" => flags.index_d = as_int()?,
                _ => return Err(Error::Invalid(format!("unknown flag {k}"))),
            }
        }
        Ok(flags)
    }
}

/// `#(O/l^n O)^* = l^(2n-2) (l-1) (l - (d/l))`.
pub fn cartan_order(ell: u64, n: u32, d: ImagQuadDisc) -> u64 {
    let k = d.kronecker(ell) as i64;
    ell.pow(2 * n - 2) * (ell - 1) * (ell as i64 - k) as u64
}

/// `g_{a,b} = [[a, b d(1-d)/4], [b, a + b d]]`.
pub fn g_ab(a: i128, b: i128, d: ImagQuadDisc, md: PrimePowerModulus) -> Mat2 {
    let dv = d.value() as i128;
    Mat2::new([a, b * d.off_diagonal() as i128, b, a + b * dv], md)
}

/// The group of invertible `g_{a,b}` modulo `l^n`.
pub fn build_cartan(d: ImagQuadDisc, md: PrimePowerModulus) -> Result<MatGroup> {
    crate::grp::check_packable(md)?;
    Ok(MatGroup::from_elements(
        PackedRing::new(md),
        cartan_elements(d, md),
    ))
}

/// Packed invertible `g_{a,b}`, sorted.
fn cartan_elements(d: ImagQuadDisc, md: PrimePowerModulus) -> Vec<u64> {
    let ring = PackedRing::new(md);
    let q = md.modulus() as i128;
    let mut elems = Vec::new();
    for a in 0..q {
        for b in 0..q {
            let g = g_ab(a, b, d, md);
            if g.is_invertible() {
                elems.push(ring.from_mat(&g));
            }
        }
    }
    elems.sort_unstable();
    elems
}

/// Complex conjugation `[[1, d], [0, -1]]` in the basis `1, (d + sqrt d)/2`.
pub fn conjugation_element(d: ImagQuadDisc, md: PrimePowerModulus) -> Mat2 {
    Mat2::new([1, d.value() as i128, 0, -1], md)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CmCase {
    /// `n = 1` and `l | d_F`.
    RamifiedPrime,
    /// `l` splits in `F` and one of the listed field conditions holds.
    Split,
    /// Only a small image can satisfy the local condition.
    IndexBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CmVerdict {
    /// An `l^n`-isogeny exists over `K` (up to isogeny).
    GlobalIsogeny,
    /// Locally almost everywhere but not globally.
    Exceptional,
    /// The image has index at least `index_bound` in the Cartan group.
    SmallImage,
}

#[derive(Clone, Debug, Serialize)]
pub struct CmCaseReport {
    pub ell: u64,
    pub n: u32,
    pub splitting: Splitting,
    pub case: CmCase,
    pub verdict: CmVerdict,
    /// Piecewise lower bound on the index, as stated.
    pub index_bound: u64,
    /// The bound obtained in the per-splitting argument.
    pub refined_bound: u64,
    /// `l^(n/4)`.
    pub quarter_bound: f64,
    /// For non-split `l`, the exact index of the largest subgroup of the
    /// Cartan group whose elements all have a characteristic root.
    pub exhaustive_index: Option<u64>,
}

/// The stated piecewise lower bound on the index in case (3).
pub fn case3_bound(ell: u64, n: u32) -> u64 {
    if n == 1 || (ell == 2 && n == 2) {
        ell
    } else if n.is_multiple_of(2) {
        ell.pow(n / 2 - 1) * (ell - 1)
    } else {
        ell.pow((n - 1) / 2)
    }
}

fn refined_bound(ell: u64, n: u32, s: Splitting) -> u64 {
    let up = n.div_ceil(2);
    match (s, ell) {
        (Splitting::Inert, 2) => 3 * 2u64.pow(up - 1),
        (Splitting::Inert, _) => ell.pow(up - 1) * (ell + 1),
        (Splitting::Ramified, _) => ell.pow(n / 2),
        (Splitting::Split, _) => {
            if n / 2 == 0 {
                1
            } else {
                ell.pow(n / 2 - 1) * (ell - 1)
            }
        }
    }
}

fn has_char_root_ab(a: u64, b: u64, d: ImagQuadDisc, md: PrimePowerModulus) -> bool {
    char_poly_has_root(&g_ab(a as i128, b as i128, d, md))
}

/// Index of the subgroup of passing `g_{a,b}`; `None` if they do not form a group.
fn passing_index(ell: u64, n: u32, d: ImagQuadDisc) -> Option<u64> {
    let md = PrimePowerModulus::new(ell, n).ok()?;
    if md.modulus() > 1 << 10 {
        return None;
    }
    let ring = PackedRing::new(md);
    crate::grp::check_packable(md).ok()?;
    let c = cartan_elements(d, md);
    let pass: Vec<u64> = c
        .iter()
        .copied()
        .filter(|&x| {
            let [a, _, b, _] = PackedRing::unpack(x);
            has_char_root_ab(a, b, d, md)
        })
        .collect();
    // The Cartan group is abelian, so <H, s> is the union of the cosets H s^k.
    let mut h = vec![ring.identity()];
    let mut seen: rustc_hash::FxHashSet<u64> = h.iter().copied().collect();
    for &s in &pass {
        if seen.contains(&s) {
            continue;
        }
        let base = h.clone();
        let mut t = s;
        while !seen.contains(&t) {
            for &x in &base {
                let y = ring.mul(x, t);
                if pass.binary_search(&y).is_err() {
                    return None;
                }
                seen.insert(y);
                h.push(y);
            }
            t = ring.mul(t, s);
        }
    }
    (h.len() == pass.len()).then(|| (c.len() / pass.len()) as u64)
}

/// The case analysis for a single prime power.
pub fn classify_prime_power_cm(
    ell: u64,
    n: u32,
    d: ImagQuadDisc,
    flags: &FieldFlags,
) -> Result<CmCaseReport> {
    if n == 0 || !crate::modring::is_prime(ell) {
        return Err(Error::Invalid(format!("{ell}^{n} is not a prime power")));
    }
    let s = d.splitting(ell);
    let (case, verdict) = if n == 1 && s == Splitting::Ramified {
        (CmCase::RamifiedPrime, CmVerdict::GlobalIsogeny)
    } else if s == Splitting::Split {
        let q = ell.pow(n);
        if flags.f_in_k || q == 2 || q == 4 {
            (CmCase::Split, CmVerdict::GlobalIsogeny)
        } else if (ell % 4 == 1 && flags.sqrt_ell_in_k)
            || (ell % 4 == 3 && flags.kf_eq_k_sqrt_neg_ell)
            || (ell == 2 && n >= 3 && flags.sqrt2_in_k && flags.kf_eq_k_sqrt_neg2)
        {
            (CmCase::Split, CmVerdict::Exceptional)
        } else {
            (CmCase::IndexBound, CmVerdict::SmallImage)
        }
    } else {
        (CmCase::IndexBound, CmVerdict::SmallImage)
    };
    let exhaustive_index = if s == Splitting::Split {
        None
    } else {
        passing_index(ell, n, d)
    };
    Ok(CmCaseReport {
        ell,
        n,
        splitting: s,
        case,
        verdict,
        index_bound: case3_bound(ell, n),
        refined_bound: refined_bound(ell, n, s),
        quarter_bound: (ell as f64).powf(n as f64 / 4.0),
        exhaustive_index,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ABCFactorization {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub a_bound: u64,
}

impl ABCFactorization {
    pub fn a_within_bound(&self) -> bool {
        self.a <= self.a_bound
    }
}

/// `(#O_F^* [KF : H_F])^4`.
pub fn a_bound(d: ImagQuadDisc, index_d: u64) -> u64 {
    (d.unit_count() * index_d).pow(4)
}

/// Sort the prime powers of `N` into `A`, `B` (isogeny exists) and `C`
/// (exceptional), with per-prime flags.
pub fn abc_factorization_with(
    n: u64,
    d: ImagQuadDisc,
    flags_for: impl Fn(u64) -> FieldFlags,
) -> Result<ABCFactorization> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    let (mut a, mut b, mut c) = (1, 1, 1);
    let mut index_d = flags_for(2).index_d;
    for (ell, e) in factorize(n) {
        let flags = flags_for(ell);
        index_d = flags.index_d;
        let part = ell.pow(e);
        match classify_prime_power_cm(ell, e, d, &flags)?.verdict {
            CmVerdict::GlobalIsogeny => b *= part,
            CmVerdict::Exceptional => c *= part,
            CmVerdict::SmallImage => a *= part,
        }
    }
    Ok(ABCFactorization {
        a,
        b,
        c,
        a_bound: a_bound(d, index_d),
    })
}

/// [`abc_factorization_with`] using the same flags at every prime.
pub fn abc_factorization(n: u64, d: ImagQuadDisc, flags: &FieldFlags) -> Result<ABCFactorization> {
    abc_factorization_with(n, d, |_| *flags)
}

/// Lift-exceptional primes over a degree `d_K` field satisfy `l <= 6 d_K + 1`.
pub fn lift_exceptional_prime_bound(degree_k: u64) -> u64 {
    6 * degree_k + 1
}

/// Exhaustive check over `(a, b)` mod `l^n` of which `g_{a,b}` have a
/// characteristic root, against the valuation rule for odd `l` (split: all;
/// inert: `v(b) >= ceil(n/2)`; ramified: `v(b) >= floor(n/2)`) and, for
/// `l = 2`, the necessary direction of that rule plus "split: all".
pub fn verify_gab_rule(ell: u64, n: u32, d: ImagQuadDisc) -> Result<bool> {
    let md = PrimePowerModulus::new(ell, n)?;
    let q = md.modulus();
    let s = d.splitting(ell);
    let threshold = match s {
        Splitting::Split => 0,
        Splitting::Inert => n.div_ceil(2),
        Splitting::Ramified => n / 2,
    };
    for a in 0..q {
        for b in 0..q {
            let g = g_ab(a as i128, b as i128, d, md);
            if !g.is_invertible() {
                continue;
            }
            let v = md.valuation_of(b).unwrap_or(n);
            let passes = char_poly_has_root(&g);
            let rule = v >= threshold;
            let ok = if ell == 2 && s != Splitting::Split {
                !passes || rule
            } else {
                passes == rule
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exhaustive check of the trace-zero coset `c g_{a,b}`: its entries,
/// the discriminant `4 (a^2 + a b d - b^2 d(1-d)/4)`, and "root iff `-det` is a
/// square".
pub fn verify_trace_zero_coset(ell: u64, n: u32, d: ImagQuadDisc) -> Result<bool> {
    let md = PrimePowerModulus::new(ell, n)?;
    let q = md.modulus() as i128;
    let c = conjugation_element(d, md);
    let dv = d.value() as i128;
    let off = d.off_diagonal() as i128;
    for a in 0..q {
        for b in 0..q {
            let g = g_ab(a, b, d, md);
            if !g.is_invertible() {
                continue;
            }
            // c g_{a,b} is the trace-zero form at (a + b d, -b).
            let h = c.mul(&g);
            let (x, y) = (a + b * dv, -b);
            if h != Mat2::new([x, x * dv - y * off, y, -x], md) {
                return Ok(false);
            }
            let disc = crate::mat2::invariants_of(&h).disc;
            if disc != Residue::new(4 * (x * x + x * y * dv - y * y * off), md) {
                return Ok(false);
            }
            if char_poly_has_root(&h) != is_square(&h.det().neg()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grp::classify;

    fn disc(d: i64) -> ImagQuadDisc {
        ImagQuadDisc::new(d).unwrap()
    }

    #[test]
    fn discriminant_validation() {
        for d in [-3, -4, -7, -8, -11, -15, -20, -24] {
            assert!(ImagQuadDisc::new(d).is_ok(), "{d}");
        }
        for d in [-1, -2, -12, -16, -5, 5, 0, -9] {
            assert!(ImagQuadDisc::new(d).is_err(), "{d}");
        }
    }

    #[test]
    fn cartan_orders() {
        assert_eq!(cartan_order(3, 1, disc(-4)), 8);
        assert_eq!(cartan_order(5, 1, disc(-4)), 16);
        assert_eq!(cartan_order(2, 1, disc(-4)), 2);
    }

    #[test]
    fn cartan_shapes() {
        let md3 = PrimePowerModulus::new(3, 1).unwrap();
        let c = build_cartan(disc(-4), md3).unwrap();
        assert_eq!(c.order(), 8);
        assert!(classify(&c).is_borel.is_none());
        let md5 = PrimePowerModulus::new(5, 1).unwrap();
        assert!(classify(&build_cartan(disc(-4), md5).unwrap())
            .is_split_cartan
            .is_some());
        let md7 = PrimePowerModulus::new(7, 1).unwrap();
        let c7 = build_cartan(disc(-7), md7).unwrap();
        let mut gens = c7.generators();
        gens.push(conjugation_element(disc(-7), md7));
        assert!(classify(&MatGroup::closure(md7, &gens).unwrap())
            .is_borel
            .is_some());
    }

    #[test]
    fn conjugation_normalizes() {
        let md = PrimePowerModulus::new(5, 2).unwrap();
        let d = disc(-11);
        let c = conjugation_element(d, md);
        assert!(c.mul(&c).is_identity());
        let g = build_cartan(d, md).unwrap();
        assert_eq!(g.conjugate_by(&c).unwrap(), g);
        let x = g_ab(3, 7, d, md);
        assert_eq!(
            c.mul(&x).mul(&c.inverse().unwrap()),
            g_ab(3 + 7 * -11, -7, d, md)
        );
    }

    #[test]
    fn case_examples() {
        let generic = FieldFlags::default();
        let r = classify_prime_power_cm(7, 1, disc(-7), &generic).unwrap();
        assert_eq!(
            (r.case, r.verdict),
            (CmCase::RamifiedPrime, CmVerdict::GlobalIsogeny)
        );
        let flags = FieldFlags {
            sqrt_ell_in_k: true,
            ..generic
        };
        let r = classify_prime_power_cm(5, 2, disc(-4), &flags).unwrap();
        assert_eq!((r.case, r.verdict), (CmCase::Split, CmVerdict::Exceptional));
        let r = classify_prime_power_cm(3, 2, disc(-4), &generic).unwrap();
        assert_eq!(r.case, CmCase::IndexBound);
        assert_eq!(r.index_bound, 2);
        assert_eq!(r.refined_bound, 4);
        assert_eq!(r.exhaustive_index, Some(4));
        let r = classify_prime_power_cm(3, 1, disc(-4), &generic).unwrap();
        assert_eq!((r.index_bound, r.exhaustive_index), (3, Some(4)));
    }

    #[test]
    fn abc_examples() {
        let generic = FieldFlags::default();
        let f = abc_factorization(7, disc(-7), &generic).unwrap();
        assert_eq!((f.a, f.b, f.c), (1, 7, 1));
        let flags = FieldFlags {
            sqrt_ell_in_k: true,
            ..generic
        };
        let f = abc_factorization(35, disc(-4), &flags).unwrap();
        assert_eq!((f.a, f.b, f.c), (7, 1, 5));
        let f = abc_factorization(
            35,
            disc(-4),
            &FieldFlags {
                f_in_k: true,
                ..flags
            },
        )
        .unwrap();
        assert_eq!(f.c, 1);
        assert_eq!(lift_exceptional_prime_bound(1), 7);
        assert_eq!(lift_exceptional_prime_bound(10), 61);
    }

    #[test]
    fn flags_parse() {
        let f = FieldFlags::parse("f_in_k=0,sqrt_ell_in_k=1,deg_k=2,index_d=3").unwrap();
        assert!(f.sqrt_ell_in_k && !f.f_in_k);
        assert_eq!((f.degree_k, f.index_d), (2, 3));
        assert!(FieldFlags::parse("bogus=1").is_err());
    }
}
