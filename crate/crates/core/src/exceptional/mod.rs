//! Lift-exceptional groups for odd primes and exceptional groups at 2.

pub mod search;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grp::enumerate::{all_subspaces, Subspace};
use crate::grp::packed::PackedRing;
use crate::grp::{
    all_charpoly_root, cartan_borel_factorization, classify, common_lines, nonsquare_disc_element,
    MatGroup,
};
use crate::mat2::{LineClass, Mat2};
use crate::modring::PrimePowerModulus;

pub use search::{search_maximal_exceptional_2adic, SearchOptions};

fn odd_modulus(ell: u64, m: u32) -> Result<PrimePowerModulus> {
    if ell == 2 {
        return Err(Error::Invalid(
            "the K and R groups are defined for odd primes".into(),
        ));
    }
    if m == 0 {
        return Err(Error::Invalid("m must be positive".into()));
    }
    PrimePowerModulus::new(ell, 2 * m + 1)
}

fn group_from_listing(modulus: PrimePowerModulus, elements: Vec<u64>) -> Result<MatGroup> {
    let ring = PackedRing::new(modulus);
    let listed = MatGroup::from_elements(ring, elements);
    let closed = MatGroup::closure(modulus, &listed.generators())?;
    if closed != listed {
        return Err(Error::Consistency(
            "listed element set is not closed".into(),
        ));
    }
    Ok(listed)
}

/// `K(l^(2m+1)) = { [[r, s], [l^(2m) s, t]] : r ≡ t mod l^(2m), r a unit }`.
pub fn build_k_group(ell: u64, m: u32) -> Result<MatGroup> {
    let md = odd_modulus(ell, m)?;
    if md.modulus() > crate::grp::packed::PACKED_MAX_MODULUS {
        return Err(Error::InvalidModulus(format!("{md} is too large")));
    }
    let q = md.modulus();
    let step = ell.pow(2 * m);
    let mut elems = Vec::new();
    for r in (0..q).filter(|&r| md.is_unit(r)) {
        for t in (r % step..q).step_by(step as usize) {
            for s in 0..q {
                elems.push(PackedRing::pack(r, s, md.mul(step, s), t));
            }
        }
    }
    group_from_listing(md, elems)
}

/// `R(l^(2m+1)) = { [[r, s], [l^(2m) e s, e t]] : r ≡ t mod l^(m+1), e = ±1 }`.
pub fn build_r_group(ell: u64, m: u32) -> Result<MatGroup> {
    let md = odd_modulus(ell, m)?;
    if md.modulus() > crate::grp::packed::PACKED_MAX_MODULUS {
        return Err(Error::InvalidModulus(format!("{md} is too large")));
    }
    let q = md.modulus();
    let step = ell.pow(2 * m);
    let close = ell.pow(m + 1);
    let mut elems = Vec::new();
    for r in (0..q).filter(|&r| md.is_unit(r)) {
        for t in (r % close..q).step_by(close as usize) {
            for s in 0..q {
                let low = md.mul(step, s);
                elems.push(PackedRing::pack(r, s, low, t));
                elems.push(PackedRing::pack(r, s, md.neg(low), md.neg(t)));
            }
        }
    }
    group_from_listing(md, elems)
}

/// Lines fixed by every element of `K(l^(2m+1))`, by direct computation.
pub fn simultaneous_eigenlines_k(ell: u64, m: u32) -> Result<Vec<LineClass>> {
    let k = build_k_group(ell, m)?;
    let ring = *k.ring();
    Ok(common_lines(&ring, k.packed_generators())
        .into_iter()
        .map(|(x, y)| LineClass::through(x as i128, y as i128, k.modulus()).unwrap())
        .collect())
}

/// The closed-form list: lines through `(1, k l)` with `k ≡ ±l^(m-1) mod l^(2m-1)`.
pub fn kevec_lines_formula(ell: u64, m: u32) -> Result<Vec<LineClass>> {
    let md = odd_modulus(ell, m)?;
    let q = md.modulus();
    let modk = ell.pow(2 * m - 1);
    let target = ell.pow(m - 1) % modk;
    let neg_target = (modk - target) % modk;
    let mut out: Vec<LineClass> = (0..q / ell)
        .filter(|k| k % modk == target || k % modk == neg_target)
        .map(|k| LineClass::through(1, (k * ell) as i128, md).unwrap())
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Lines through `(1, k l)` with `k^2 ≡ l^(2m-2) mod l^(2m-1)`, the
/// eigenvector condition for `K` written as a congruence. Its solutions are
/// `k ≡ ±l^(m-1) mod l^m`, which agrees with [`kevec_lines_formula`] only at `m = 1`.
pub fn kevec_lines_congruence(ell: u64, m: u32) -> Result<Vec<LineClass>> {
    let md = odd_modulus(ell, m)?;
    let q = md.modulus();
    let modk = ell.pow(2 * m - 1);
    let rhs = ell.pow(2 * m - 2) % modk;
    let mut out: Vec<LineClass> = (0..q / ell)
        .filter(|&k| (k % modk) * (k % modk) % modk == rhs)
        .map(|k| LineClass::through(1, (k * ell) as i128, md).unwrap())
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum XKVerdict {
    BorelContained,
    LiftExceptional,
    DiscViolation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum XKWitness {
    Line(LineClass),
    Element(Mat2),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XKClassification {
    pub verdict: XKVerdict,
    pub witness: Option<XKWitness>,
    /// Diagonal entries of `X` are opposite mod `l^(m+1)`.
    pub diagonals_opposite: bool,
}

fn xk_group(x: &Mat2, k: &MatGroup) -> Result<MatGroup> {
    let mut gens = k.generators();
    gens.push(*x);
    MatGroup::closure(k.modulus(), &gens)
}

/// Decide whether `<X> K` is Borel, lift-exceptional, or has an element of
/// nonsquare discriminant, by computing the group.
pub fn classify_xk(x: &Mat2, ell: u64, m: u32) -> Result<XKClassification> {
    let k = build_k_group(ell, m)?;
    classify_xk_with(x, &k, ell, m)
}

/// As [`classify_xk`] with a prebuilt `K(l^(2m+1))`.
pub fn classify_xk_with(x: &Mat2, k: &MatGroup, ell: u64, m: u32) -> Result<XKClassification> {
    let md = k.modulus();
    if x.modulus() != md {
        return Err(Error::ModulusMismatch(x.modulus().modulus(), md.modulus()));
    }
    if !x.is_invertible() {
        return Err(Error::NotInvertible(x.to_string()));
    }
    let g = xk_group(x, k)?;
    let mod_ell = classify(&crate::grp::reduce_group(&g, 1)?);
    if mod_ell.is_radical.is_none()
        || mod_ell.is_split_cartan.is_some()
        || mod_ell.is_nonsplit_cartan
    {
        return Err(Error::NotPotentiallyExceptional(
            "<X> K is not radical (and non-Cartan) mod l".into(),
        ));
    }
    if classify(&crate::grp::reduce_group(&g, 2 * m)?)
        .is_borel
        .is_none()
    {
        return Err(Error::NotPotentiallyExceptional(format!(
            "<X> K is not Borel mod {}^{}",
            ell,
            2 * m
        )));
    }
    let [a, _, _, d] = x.entries();
    let diagonals_opposite = (a + d) % ell.pow(m + 1) == 0;
    let report = classify(&g);
    let (verdict, witness) = if let Some(line) = report.is_borel {
        (XKVerdict::BorelContained, Some(XKWitness::Line(line)))
    } else if let Some(bad) = nonsquare_disc_element(&g) {
        (XKVerdict::DiscViolation, Some(XKWitness::Element(bad)))
    } else {
        (XKVerdict::LiftExceptional, None)
    };
    Ok(XKClassification {
        verdict,
        witness,
        diagonals_opposite,
    })
}

/// Conjugate `<X> K` into `R(l^(2m+1))` by `M = [[1, mu], [0, 1]]`, returning
/// `M` and `M^-1 <X> K M`.
///
/// Writing `X = [[a + l^(m+1) x, b], [l^(2m) z, -a + l^(m+1) w]]`, the
/// conjugate has upper-right entry `b + 2 a mu` mod `l`, and landing in `R`
/// needs it to equal `-z`; so `mu = -(z + b) / (2a)` mod `l`.
pub fn normalize_to_r(x: &Mat2, ell: u64, m: u32) -> Result<(Mat2, MatGroup)> {
    let k = build_k_group(ell, m)?;
    let verdict = classify_xk_with(x, &k, ell, m)?;
    if verdict.verdict != XKVerdict::LiftExceptional {
        return Err(Error::Contract(format!(
            "X is {:?}, not lift-exceptional",
            verdict.verdict
        )));
    }
    let md = k.modulus();
    let f = PrimePowerModulus::new(ell, 1)?;
    let [a, b, c, _] = x.entries();
    let z = c / ell.pow(2 * m);
    let mu = f.mul(
        f.neg(f.add(z % ell, b % ell)),
        f.inv(f.mul(2, a % ell)).expect("a is a unit"),
    );
    let mm = Mat2::new([1, mu as i128, 0, 1], md);
    let g = xk_group(x, &k)?;
    let image = g.conjugate_by(&mm.inverse().unwrap())?;
    let r = build_r_group(ell, m)?;
    if !image.elements().all(|e| r.contains(&e)) {
        return Err(Error::Consistency(
            "normalized group is not inside R".into(),
        ));
    }
    Ok((mm, image))
}

/// Every characteristic polynomial has a root and there is no Cartan/Borel
/// factorization.
pub fn is_exceptional_2adic(g: &MatGroup) -> bool {
    g.modulus().prime() == 2 && all_charpoly_root(g) && cartan_borel_factorization(g).is_none()
}

/// Generator of `F_l^*` used for `H_exc`.
fn primitive_root(ell: u64) -> u64 {
    (2..ell)
        .find(|&g| (1..ell - 1).all(|e| crate::modring::pow_mod(g, e, ell) != 1))
        .expect("prime has a primitive root")
}

/// Full preimage in `GL_2(Z/l^n Z)` of the diagonal/antidiagonal group
/// `{diag(a^i, a^j), antidiag(a^i, a^j) : i ≡ j mod 2}` mod `l`, for l = 5, 7.
pub fn build_h_exc(ell: u64, n: u32) -> Result<MatGroup> {
    if ell != 5 && ell != 7 {
        return Err(Error::Invalid("H_exc is defined for l = 5, 7".into()));
    }
    let md = PrimePowerModulus::new(ell, n)?;
    let alpha = primitive_root(ell) as i128;
    let l = ell as i128;
    let mut gens = vec![
        Mat2::new([alpha, 0, 0, alpha], md),
        Mat2::new([alpha * alpha, 0, 0, 1], md),
        Mat2::new([0, 1, 1, 0], md),
    ];
    if n > 1 {
        gens.push(Mat2::new([1 + l, 0, 0, 1], md));
        gens.push(Mat2::new([1, l, 0, 1], md));
        gens.push(Mat2::new([1, 0, l, 1], md));
        gens.push(Mat2::new([1, 0, 0, 1 + l], md));
    }
    let g = MatGroup::closure(md, &gens)?;
    let base = if ell == 5 { 16 } else { 36 };
    if g.order() as u64 != base * ell.pow(4 * (n - 1)) {
        return Err(Error::Consistency("H_exc has the wrong order".into()));
    }
    Ok(g)
}

/// Outcome of the Klein-four subrepresentation check on `M_2(F_5)`.
#[derive(Clone, Debug, Serialize)]
pub struct D4Report {
    /// Number of subspaces of `M_2(F_5)` examined.
    pub subspaces_examined: usize,
    /// Subspaces stable under conjugation by `H_exc mod 5`.
    pub stable_count: usize,
    /// Stable subspaces whose elements all have square discriminant.
    pub admissible_count: usize,
    /// Maximal admissible stable subspaces, as basis matrices `[a, b, c, d]`.
    pub maximal_admissible: Vec<Vec<[u64; 4]>>,
    /// The maximal ones are exactly `A+B`, `A+C`, `A+D`.
    pub matches_claim: bool,
    pub scalars_admissible: bool,
    pub abc_admissible: bool,
}

/// Isotypic pieces of `M_2(F_5)` under the Klein four group.
fn isotypic(name: char) -> [u64; 4] {
    match name {
        'A' => [1, 0, 0, 1],
        'B' => [1, 0, 0, 4],
        'C' => [0, 1, 1, 0],
        _ => [0, 1, 4, 0],
    }
}

pub fn verify_d4_subrep_claim() -> Result<D4Report> {
    let p = 5u64;
    let h = build_h_exc(5, 1)?;
    let ring = *h.ring();
    let acts: Vec<(u64, u64)> = h
        .packed_generators()
        .iter()
        .map(|&g| (g, ring.inverse(g).unwrap()))
        .collect();
    let spaces = all_subspaces(p);
    let sq = |v: u64| (0..p).any(|s| s * s % p == v % p);
    let disc_ok = |e: u32| {
        let [a, b, c, d] = crate::grp::enumerate::decode(p, e);
        let t = (a + d) % p;
        let det = (a * d + p * p - b * c % p) % p;
        sq((t * t + 4 * (p - det)) % p)
    };
    let stable: Vec<&Subspace> = spaces
        .iter()
        .filter(|j| crate::grp::enumerate::is_stable(&ring, &acts, j))
        .collect();
    let admissible: Vec<&Subspace> = stable
        .iter()
        .copied()
        .filter(|j| j.members.iter().all(|&e| disc_ok(e)))
        .collect();
    let maximal: Vec<&Subspace> = admissible
        .iter()
        .copied()
        .filter(|j| {
            !admissible
                .iter()
                .any(|o| o.dim() > j.dim() && j.is_subspace_of(o))
        })
        .collect();
    let mut expected: Vec<Vec<u32>> = ["AB", "AC", "AD"]
        .iter()
        .map(|s| {
            crate::grp::enumerate::span_members(p, &s.chars().map(isotypic).collect::<Vec<_>>())
        })
        .collect();
    expected.sort();
    let mut got: Vec<Vec<u32>> = maximal.iter().map(|j| j.members.clone()).collect();
    got.sort();
    let is_adm = |members: &[u32]| {
        let in_stable = stable.iter().any(|j| j.members == members);
        in_stable && members.iter().all(|&e| disc_ok(e))
    };
    Ok(D4Report {
        subspaces_examined: spaces.len(),
        stable_count: stable.len(),
        admissible_count: admissible.len(),
        maximal_admissible: maximal.iter().map(|j| j.basis.clone()).collect(),
        matches_claim: got == expected,
        scalars_admissible: is_adm(&crate::grp::enumerate::span_members(p, &[isotypic('A')])),
        abc_admissible: is_adm(&crate::grp::enumerate::span_members(
            p,
            &[isotypic('A'), isotypic('B'), isotypic('C')],
        )),
    })
}

/// Result of sweeping `X` over every matrix mod `l^(2m+1)` that is upper
/// triangular mod `l^(2m)`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct UpliftSweep {
    pub examined: usize,
    pub borel: usize,
    pub lift_exceptional: usize,
    pub disc_violation: usize,
    /// `X` where "lift-exceptional" and "diagonals opposite" disagree.
    pub criterion_failures: Vec<[u64; 4]>,
    /// Lift-exceptional `X` whose normalization does not land in `R`.
    pub normalization_failures: Vec<[u64; 4]>,
}

impl UpliftSweep {
    pub fn passed(&self) -> bool {
        self.criterion_failures.is_empty() && self.normalization_failures.is_empty()
    }
}

/// Exhaustive check of the `X K` trichotomy and of the normalization into `R`.
pub fn uplift_sweep(ell: u64, m: u32) -> Result<UpliftSweep> {
    use crate::grp::packed::{extend_with, Closure, Seen};
    use crate::grp::SquareTable;
    use rayon::prelude::*;

    let k = build_k_group(ell, m)?;
    let r = build_r_group(ell, m)?;
    let ring = *k.ring();
    let md = ring.modulus();
    let q = md.modulus();
    let low = ell.pow(2 * m);
    let close = ell.pow(m + 1);
    let f = PrimePowerModulus::new(ell, 1)?;
    let squares = SquareTable::new(&ring);
    let units: Vec<u64> = (0..q).filter(|&v| md.is_unit(v)).collect();
    let candidates: Vec<u64> = units
        .iter()
        .flat_map(|&a| units.iter().map(move |&d| (a, d)))
        .flat_map(|(a, d)| {
            (0..q).flat_map(move |b| {
                (0..q)
                    .step_by(low as usize)
                    .map(move |c| PackedRing::pack(a, b, c, d))
            })
        })
        .collect();

    let outcomes: Vec<(XKVerdict, bool, bool)> = candidates
        .par_iter()
        .map_init(
            || Seen::new(&ring),
            |seen, &x| {
                let [a, b, c, d] = PackedRing::unpack(x);
                let opposite = (a + d) % close == 0;
                let mut gens = k.packed_generators().to_vec();
                gens.push(x);
                if !common_lines(&ring, &gens).is_empty() {
                    return (XKVerdict::BorelContained, opposite, true);
                }
                let elems = match extend_with(
                    &ring,
                    seen,
                    k.packed_elements(),
                    k.packed_generators(),
                    &[x],
                    usize::MAX,
                    &|_| true,
                ) {
                    Closure::Done(e) => e,
                    _ => unreachable!("unbounded closure"),
                };
                if !elems.iter().all(|&g| squares.disc_is_square(&ring, g)) {
                    return (XKVerdict::DiscViolation, opposite, true);
                }
                let z = c / low;
                let mu = f.mul(
                    f.neg(f.add(z % ell, b % ell)),
                    f.inv(f.mul(2, a % ell)).expect("unit"),
                );
                let p = ring.entries(1, -(mu as i64), 0, 1);
                let p_inv = ring.entries(1, mu as i64, 0, 1);
                let lands = elems
                    .iter()
                    .all(|&g| r.contains_packed(ring.conj(p, p_inv, g)));
                (XKVerdict::LiftExceptional, opposite, lands)
            },
        )
        .collect();

    let mut out = UpliftSweep {
        examined: candidates.len(),
        ..Default::default()
    };
    for (&x, &(verdict, opposite, lands)) in candidates.iter().zip(&outcomes) {
        match verdict {
            XKVerdict::BorelContained => out.borel += 1,
            XKVerdict::LiftExceptional => out.lift_exceptional += 1,
            XKVerdict::DiscViolation => out.disc_violation += 1,
        }
        if (verdict == XKVerdict::LiftExceptional) != opposite {
            out.criterion_failures.push(PackedRing::unpack(x));
        }
        if !lands {
            out.normalization_failures.push(PackedRing::unpack(x));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grp::all_square_disc;

    #[test]
    fn k_group_order_and_members() {
        let k = build_k_group(3, 1).unwrap();
        assert_eq!(k.order(), 1458);
        let md = k.modulus();
        assert!(k.contains(&Mat2::new([1, 1, 9, 1], md)));
    }

    #[test]
    fn k_group_mod_125_square_discs() {
        assert!(all_square_disc(&build_k_group(5, 1).unwrap()));
    }

    #[test]
    fn r_group_properties() {
        let r = build_r_group(3, 1).unwrap();
        let md = r.modulus();
        assert!(r.contains(&Mat2::new([1, 0, 0, 8], md)));
        let rep = classify(&r);
        assert!(rep.is_borel.is_none());
        assert!(all_square_disc(&r));
        assert!(cartan_borel_factorization(&r).is_none());
        let plus: Vec<Mat2> = r
            .elements()
            .filter(|g| g.entries()[0] % 9 == g.entries()[3] % 9)
            .collect();
        assert_eq!(plus.len(), 1458);
        let line = LineClass::through(1, 3, md).unwrap();
        assert!(plus.iter().all(|g| line.is_fixed_by(g)));
    }

    #[test]
    fn kevec_examples() {
        let lines = simultaneous_eigenlines_k(3, 1).unwrap();
        let ys: Vec<u64> = lines.iter().map(|l| l.rep().1).collect();
        assert_eq!(ys, vec![3, 6, 12, 15, 21, 24]);
        assert_eq!(lines, kevec_lines_formula(3, 1).unwrap());
        assert_eq!(
            simultaneous_eigenlines_k(5, 1).unwrap(),
            kevec_lines_formula(5, 1).unwrap()
        );
    }

    #[test]
    fn kevec_mod_243() {
        // k^2 ≡ 9 mod 27 has 18 solutions k mod 81
        let lines = simultaneous_eigenlines_k(3, 2).unwrap();
        assert_eq!(lines.len(), 18);
        assert_eq!(lines, kevec_lines_congruence(3, 2).unwrap());
        assert_eq!(kevec_lines_formula(3, 2).unwrap().len(), 6);
    }

    #[test]
    fn xk_examples() {
        let md = PrimePowerModulus::new(3, 3).unwrap();
        let v = classify_xk(&Mat2::new([1, 0, 0, 8], md), 3, 1).unwrap();
        assert_eq!(v.verdict, XKVerdict::LiftExceptional);
        assert!(v.diagonals_opposite);
        let v = classify_xk(&Mat2::new([1, 1, 0, 1], md), 3, 1).unwrap();
        assert_eq!(v.verdict, XKVerdict::DiscViolation);
        let Some(XKWitness::Element(bad)) = v.witness else {
            panic!("missing witness")
        };
        assert!(!crate::grp::disc_is_square(&bad));
        let v = classify_xk(&Mat2::new([1, 0, 0, -1], md), 3, 1).unwrap();
        assert_eq!(v.verdict, XKVerdict::LiftExceptional);
        assert!(matches!(
            classify_xk(&Mat2::new([1, 0, 3, 1], md), 3, 1),
            Err(Error::NotPotentiallyExceptional(_))
        ));
    }

    #[test]
    fn normalization_examples() {
        let md = PrimePowerModulus::new(3, 3).unwrap();
        let (mm, _) = normalize_to_r(&Mat2::new([1, 0, 0, 8], md), 3, 1).unwrap();
        assert_eq!(mm, Mat2::identity(md));
        let (mm, image) = normalize_to_r(&Mat2::new([1, 1, 0, 8], md), 3, 1).unwrap();
        assert_eq!(mm, Mat2::new([1, 1, 0, 1], md));
        assert!(image.order() > 0);
        assert!(matches!(
            normalize_to_r(&Mat2::new([1, 1, 0, 1], md), 3, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn h_exc_examples() {
        assert_eq!(build_h_exc(5, 1).unwrap().order(), 16);
        assert_eq!(build_h_exc(7, 1).unwrap().order(), 36);
        assert!(all_square_disc(&build_h_exc(5, 2).unwrap()));
    }

    #[test]
    fn uplift_sweep_mod_27() {
        let s = uplift_sweep(3, 1).unwrap();
        assert_eq!(s.examined, 18 * 18 * 27 * 3);
        assert!(
            s.passed(),
            "{:?} {:?}",
            &s.criterion_failures[..s.criterion_failures.len().min(5)],
            &s.normalization_failures[..s.normalization_failures.len().min(5)]
        );
        assert!(s.lift_exceptional > 0 && s.borel > 0 && s.disc_violation > 0);
        eprintln!("{} {} {}", s.borel, s.lift_exceptional, s.disc_violation);
    }

    #[test]
    fn d4_claim() {
        let r = verify_d4_subrep_claim().unwrap();
        assert!(r.matches_claim);
        assert!(r.scalars_admissible);
        assert!(!r.abc_admissible);
        assert_eq!(r.stable_count, 16);
    }
}
