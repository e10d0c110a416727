//! Genus of `X_G` from the permutation action of `SL_2` on cosets of
//! `±(G ∩ SL_2)`, for prime-power levels and CRT products of them.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exceptional::build_h_exc;
use crate::fixtures::Table1Row;
use crate::grp::packed::PackedRing;
use crate::grp::{gl2_level, reduce_group, MatGroup};
use crate::modring::{factorize, PrimePowerModulus};

/// Permutations of `T = [[1,1],[0,1]]`, `S = [[0,-1],[1,0]]` and
/// `R = [[0,-1],[1,-1]]` on right cosets; coset 0 is the identity coset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetAction {
    pub degree: usize,
    pub perm_t: Vec<u32>,
    pub perm_s: Vec<u32>,
    pub perm_r: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenusData {
    pub level: u64,
    pub index_mu: u64,
    pub e2: u64,
    pub e3: u64,
    pub cusps: u64,
    pub genus: u64,
    /// `-I` was not in `G` and had to be added.
    pub minus_one_adjoined: bool,
}

/// Determinant-one elements of `G`, with `-I` adjoined if missing.
pub fn sl2_part(g: &MatGroup) -> (MatGroup, bool) {
    let (elems, adjoined) = sl2_elements(g);
    (MatGroup::from_elements(*g.ring(), elems), adjoined)
}

fn sl2_elements(g: &MatGroup) -> (Vec<u64>, bool) {
    let ring = *g.ring();
    let one = 1 % ring.m();
    let mut elems: Vec<u64> = g
        .packed_elements()
        .iter()
        .copied()
        .filter(|&x| ring.det(x) == one)
        .collect();
    let minus = ring.scalar(ring.m() - 1);
    let adjoined = elems.binary_search(&minus).is_err();
    if adjoined {
        let neg: Vec<u64> = elems.iter().map(|&x| ring.mul(x, minus)).collect();
        elems.extend(neg);
    }
    (elems, adjoined)
}

fn canonical(ring: &PackedRing, h: &[u64], x: u64) -> u64 {
    h.iter()
        .map(|&y| ring.mul(y, x))
        .min()
        .expect("nonempty subgroup")
}

impl CosetAction {
    /// The action for `X(1)`.
    pub fn trivial() -> Self {
        CosetAction {
            degree: 1,
            perm_t: vec![0],
            perm_s: vec![0],
            perm_r: vec![0],
        }
    }

    /// Cosets of `H` (a subgroup of `SL_2` containing `-I`), by breadth-first
    /// search from the identity coset.
    fn from_sl2_subgroup(ring: &PackedRing, h: &[u64]) -> Self {
        let gens = [
            ring.entries(1, 1, 0, 1),
            ring.entries(0, -1, 1, 0),
            ring.entries(0, -1, 1, -1),
        ];
        let id = ring.identity();
        let mut reps = vec![id];
        let mut index: FxHashMap<u64, u32> = FxHashMap::default();
        index.insert(canonical(ring, h, id), 0);
        let mut perms = [Vec::new(), Vec::new(), Vec::new()];
        let mut start = 0;
        while start < reps.len() {
            let layer = reps[start..].to_vec();
            let keys: Vec<[u64; 3]> = layer
                .par_iter()
                .map(|&x| gens.map(|g| canonical(ring, h, ring.mul(x, g))))
                .collect();
            start = reps.len();
            for (x, ks) in layer.iter().zip(keys) {
                for (gi, k) in ks.into_iter().enumerate() {
                    let next = index.len() as u32;
                    let id = *index.entry(k).or_insert_with(|| {
                        reps.push(ring.mul(*x, gens[gi]));
                        next
                    });
                    perms[gi].push(id);
                }
            }
        }
        let [perm_t, perm_s, perm_r] = perms;
        CosetAction {
            degree: reps.len(),
            perm_t,
            perm_s,
            perm_r,
        }
    }

    /// Action on cosets of `±(G ∩ SL_2)`; also reports whether `-I` was adjoined.
    pub fn of_group(g: &MatGroup) -> (Self, bool) {
        let (h, adjoined) = sl2_elements(g);
        (CosetAction::from_sl2_subgroup(g.ring(), &h), adjoined)
    }

    /// Action on the product of coset spaces (coprime levels).
    pub fn product(&self, other: &CosetAction) -> CosetAction {
        let d2 = other.degree;
        let combine = |p: &[u32], q: &[u32]| -> Vec<u32> {
            (0..self.degree * d2)
                .map(|i| p[i / d2] * d2 as u32 + q[i % d2])
                .collect()
        };
        CosetAction {
            degree: self.degree * d2,
            perm_t: combine(&self.perm_t, &other.perm_t),
            perm_s: combine(&self.perm_s, &other.perm_s),
            perm_r: combine(&self.perm_r, &other.perm_r),
        }
    }

    pub fn genus_data(&self, level: u64, minus_one_adjoined: bool) -> Result<GenusData> {
        let fixed = |p: &[u32]| {
            p.iter()
                .enumerate()
                .filter(|&(i, &j)| i as u32 == j)
                .count() as u64
        };
        let mut seen = vec![false; self.degree];
        let mut cusps = 0u64;
        for i in 0..self.degree {
            if !seen[i] {
                cusps += 1;
                let mut j = i;
                while !seen[j] {
                    seen[j] = true;
                    j = self.perm_t[j] as usize;
                }
            }
        }
        let (mu, e2, e3) = (self.degree as u64, fixed(&self.perm_s), fixed(&self.perm_r));
        let twelve_g = 12 + mu as i64 - 3 * e2 as i64 - 4 * e3 as i64 - 6 * cusps as i64;
        if twelve_g < 0 || twelve_g % 12 != 0 {
            return Err(Error::Consistency(format!(
                "non-integral genus: mu={mu} e2={e2} e3={e3} cusps={cusps}"
            )));
        }
        Ok(GenusData {
            level,
            index_mu: mu,
            e2,
            e3,
            cusps,
            genus: twelve_g as u64 / 12,
            minus_one_adjoined,
        })
    }
}

/// The group reduced to its level, and that level as a number.
fn at_level(g: &MatGroup) -> Result<(Option<MatGroup>, u64)> {
    let k = gl2_level(g);
    if k == 0 {
        return Ok((None, 1));
    }
    Ok((Some(reduce_group(g, k)?), g.modulus().prime().pow(k)))
}

pub fn genus_of(g: &MatGroup) -> Result<GenusData> {
    let (reduced, level) = at_level(g)?;
    match reduced {
        None => CosetAction::trivial().genus_data(1, false),
        Some(h) => {
            let (action, adjoined) = CosetAction::of_group(&h);
            action.genus_data(level, adjoined)
        }
    }
}

/// CRT preimage in `GL_2(Z/NZ)` of groups with pairwise coprime levels.
#[derive(Clone, Debug)]
pub struct CrtProduct {
    pub factors: Vec<MatGroup>,
}

pub fn fiber_product(groups: &[MatGroup]) -> Result<CrtProduct> {
    let mut primes: Vec<u64> = groups.iter().map(|g| g.modulus().prime()).collect();
    primes.sort_unstable();
    if primes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Level(format!("repeated prime among {primes:?}")));
    }
    Ok(CrtProduct {
        factors: groups.to_vec(),
    })
}

impl CrtProduct {
    pub fn coset_action(&self) -> Result<(CosetAction, u64, bool)> {
        let mut action = CosetAction::trivial();
        let mut level = 1;
        let mut adjoined = false;
        for g in &self.factors {
            let (reduced, l) = at_level(g)?;
            if let Some(h) = reduced {
                let (a, adj) = CosetAction::of_group(&h);
                action = action.product(&a);
                adjoined |= adj;
                level *= l;
            }
        }
        Ok((action, level, adjoined))
    }

    pub fn genus(&self) -> Result<GenusData> {
        let (action, level, adjoined) = self.coset_action()?;
        action.genus_data(level, adjoined)
    }
}

/// Upper-triangular matrices in `GL_2(Z/p^k Z)`.
pub fn borel_group(p: u64, k: u32) -> Result<MatGroup> {
    let md = PrimePowerModulus::new(p, k)?;
    let ring = PackedRing::new(md);
    let q = md.modulus();
    let units: Vec<u64> = (0..q).filter(|&v| md.is_unit(v)).collect();
    let mut elems = Vec::with_capacity(units.len() * units.len() * q as usize);
    for &a in &units {
        for &d in &units {
            for b in 0..q {
                elems.push(PackedRing::pack(a, b, 0, d));
            }
        }
    }
    let mut gens = vec![PackedRing::pack(1, 1 % q, 0, 1)];
    for u in ring.unit_generators() {
        gens.push(PackedRing::pack(u, 0, 0, 1));
        gens.push(PackedRing::pack(1, 0, 0, u));
    }
    Ok(MatGroup::from_parts(ring, gens, elems))
}

/// `X_0(N)` as a CRT product of prime-power Borel groups.
pub fn x0_product(n: u64) -> Result<CrtProduct> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    let factors = factorize(n)
        .into_iter()
        .map(|(p, k)| borel_group(p, k))
        .collect::<Result<Vec<_>>>()?;
    fiber_product(&factors)
}

pub fn genus_x0(n: u64) -> Result<u64> {
    Ok(x0_product(n)?.genus()?.genus)
}

/// One fiber product examined by the sweeps.
#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub left: String,
    pub right: String,
    pub level: u64,
    pub genus: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QExceptionReport {
    pub list: Vec<u64>,
    /// Genus of `X_G x X_H` for every 2-adic `G` and `H` in `{H_5, H_7}`.
    pub g_times_h: Vec<SweepEntry>,
    /// Pairs `(G, X_0(N))` of genus at most 1.
    pub g_times_x0: Vec<SweepEntry>,
    /// Pairs `(H, X_0(N))` of genus at most 1.
    pub h_times_x0: Vec<SweepEntry>,
}

/// Levels `N > 1` up to `bound` with `genus(X_0(N)) <= 1`.
pub fn low_genus_x0_levels(bound: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for n in 2..=bound {
        if genus_x0(n)? <= 1 {
            out.push(n);
        }
    }
    Ok(out)
}

/// Run the three fiber-product sweeps over the table rows with `n <= 5` and
/// `H_{5,exc}`, `H_{7,exc}`, and collect the levels that survive.
///
/// `X_0(N)` has genus at least 2 for every `N > 50`, so levels up to 100 cover
/// all low-genus cases.
pub fn assemble_q_exception_list(rows: &[Table1Row]) -> Result<QExceptionReport> {
    let x0_levels = low_genus_x0_levels(100)?;
    let two_adic: Vec<(String, u32, MatGroup, u64)> = rows
        .iter()
        .filter(|r| r.prime == 2 && r.exponent <= 5)
        .map(|r| {
            let g = r.group()?;
            let genus = genus_of(&g)?.genus;
            Ok((r.label.clone(), r.exponent, g, genus))
        })
        .collect::<Result<_>>()?;
    let odd: Vec<(String, u64, MatGroup, u64)> = [5u64, 7]
        .into_iter()
        .map(|ell| {
            let h = build_h_exc(ell, 1)?;
            let genus = genus_of(&h)?.genus;
            Ok((format!("H{ell}exc"), ell, h, genus))
        })
        .collect::<Result<_>>()?;

    let mut list = Vec::new();
    for (_, n, _, genus) in &two_adic {
        if *genus <= 1 {
            list.push(1u64 << n);
        }
    }
    for (_, ell, _, genus) in &odd {
        if *genus <= 1 {
            // the full preimage mod l^2 defines the same curve
            list.extend([*ell, ell * ell]);
        }
    }

    let entry = |left: &str, right: String, groups: &[MatGroup]| -> Result<SweepEntry> {
        let d = fiber_product(groups)?.genus()?;
        Ok(SweepEntry {
            left: left.to_string(),
            right,
            level: d.level,
            genus: d.genus,
        })
    };

    let mut g_times_h = Vec::new();
    for (gl, n, g, _) in &two_adic {
        for (hl, ell, h, _) in &odd {
            let e = entry(gl, hl.clone(), &[g.clone(), h.clone()])?;
            if e.genus <= 1 {
                list.extend([(1u64 << n) * ell, (1u64 << n) * ell * ell]);
            }
            g_times_h.push(e);
        }
    }

    let mut g_times_x0 = Vec::new();
    for (gl, n, g, _) in &two_adic {
        for &nn in x0_levels.iter().filter(|&&nn| nn % 2 != 0) {
            let mut groups = vec![g.clone()];
            groups.extend(x0_product(nn)?.factors);
            let e = entry(gl, format!("X0({nn})"), &groups)?;
            if e.genus <= 1 {
                list.push((1u64 << n) * nn);
                g_times_x0.push(e);
            }
        }
    }

    let mut h_times_x0 = Vec::new();
    for (hl, ell, h, _) in &odd {
        for &nn in x0_levels.iter().filter(|&&nn| nn % ell != 0) {
            let mut groups = vec![h.clone()];
            groups.extend(x0_product(nn)?.factors);
            let e = entry(hl, format!("X0({nn})"), &groups)?;
            if e.genus <= 1 {
                list.extend([ell * nn, ell * ell * nn]);
                h_times_x0.push(e);
            }
        }
    }

    list.sort_unstable();
    list.dedup();
    Ok(QExceptionReport {
        list,
        g_times_h,
        g_times_x0,
        h_times_x0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exceptional::build_r_group;
    use crate::mat2::Mat2;

    #[test]
    fn trivial_and_small() {
        let md = PrimePowerModulus::new(2, 1).unwrap();
        let ring = PackedRing::new(md);
        let gl2 = MatGroup::from_elements(ring, ring.gl2());
        assert_eq!(genus_of(&gl2).unwrap().genus, 0);
        assert_eq!(genus_x0(2).unwrap(), 0);
        assert_eq!(genus_x0(27).unwrap(), 1);
        assert_eq!(genus_x0(49).unwrap(), 1);
    }

    #[test]
    fn sl2_part_examples() {
        let md = PrimePowerModulus::new(5, 1).unwrap();
        let ring = PackedRing::new(md);
        let gl2 = MatGroup::from_elements(ring, ring.gl2());
        let (s, adj) = sl2_part(&gl2);
        assert_eq!(s.order(), 120);
        assert!(!adj);
        let r = build_r_group(3, 1).unwrap();
        let (s, _) = sl2_part(&r);
        assert!(s.contains(&Mat2::scalar(-1, r.modulus())));
    }

    #[test]
    fn r27_genus_four() {
        assert_eq!(genus_of(&build_r_group(3, 1).unwrap()).unwrap().genus, 4);
    }

    #[test]
    fn adjoining_minus_one_is_flagged() {
        let md = PrimePowerModulus::new(3, 1).unwrap();
        let g = MatGroup::closure(md, &[Mat2::new([1, 1, 0, 1], md)]).unwrap();
        let d = genus_of(&g).unwrap();
        assert!(d.minus_one_adjoined);
        assert_eq!(d.index_mu, 4);
    }

    #[test]
    fn products_multiply_degrees() {
        let b3 = borel_group(3, 1).unwrap();
        let b2 = borel_group(2, 2).unwrap();
        let p = fiber_product(&[b3.clone(), b2.clone()]).unwrap();
        let (a, _, _) = p.coset_action().unwrap();
        assert_eq!(a.degree, 4 * 6);
        assert_eq!(p.genus().unwrap().genus, genus_x0(12).unwrap());
        assert!(matches!(
            fiber_product(&[b3.clone(), b3]),
            Err(Error::Level(_))
        ));
    }
}
