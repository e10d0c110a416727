//! Finite subgroups of `GL_2(Z/l^n Z)`: closure, structure, conjugacy.

pub mod enumerate;
pub mod packed;

use std::collections::BTreeMap;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{LineClass, Mat2};
use crate::modring::{is_square, PrimePowerModulus, Residue};
use packed::{close_with, extend_with, Closure, PackedRing, Seen, PACKED_MAX_MODULUS};

pub use enumerate::{enumerate_subgroups, EnumOptions, Hereditary};

/// Default bound on the number of elements a closure may produce.
pub const DEFAULT_CAP: usize = 1 << 24;

/// A finite subgroup of `GL_2(Z/l^n Z)` with an explicit element set.
#[derive(Clone, Debug)]
pub struct MatGroup {
    ring: PackedRing,
    generators: Vec<u64>,
    /// Sorted packed elements.
    elements: Vec<u64>,
}

impl PartialEq for MatGroup {
    fn eq(&self, other: &Self) -> bool {
        self.ring.modulus() == other.ring.modulus() && self.elements == other.elements
    }
}

impl Eq for MatGroup {}

pub(crate) fn check_packable(modulus: PrimePowerModulus) -> Result<()> {
    if modulus.modulus() > PACKED_MAX_MODULUS {
        return Err(Error::InvalidModulus(format!(
            "groups are supported for moduli up to {PACKED_MAX_MODULUS}, got {}",
            modulus.modulus()
        )));
    }
    Ok(())
}

impl MatGroup {
    /// The subgroup generated by `generators`, capped at [`DEFAULT_CAP`] elements.
    pub fn closure(modulus: PrimePowerModulus, generators: &[Mat2]) -> Result<MatGroup> {
        MatGroup::closure_capped(modulus, generators, DEFAULT_CAP)
    }

    pub fn closure_capped(
        modulus: PrimePowerModulus,
        generators: &[Mat2],
        cap: usize,
    ) -> Result<MatGroup> {
        check_packable(modulus)?;
        let ring = PackedRing::new(modulus);
        let mut gens = Vec::with_capacity(generators.len());
        for g in generators {
            if g.modulus() != modulus {
                return Err(Error::ModulusMismatch(
                    g.modulus().modulus(),
                    modulus.modulus(),
                ));
            }
            if !g.is_invertible() {
                return Err(Error::NotInvertible(g.to_string()));
            }
            gens.push(ring.from_mat(g));
        }
        MatGroup::from_packed_gens(ring, gens, cap)
    }

    pub(crate) fn from_packed_gens(
        ring: PackedRing,
        gens: Vec<u64>,
        cap: usize,
    ) -> Result<MatGroup> {
        let mut seen = Seen::new(&ring);
        match close_with(&ring, &mut seen, &gens, cap, &|_| true) {
            Closure::Done(mut elements) => {
                elements.sort_unstable();
                Ok(MatGroup {
                    ring,
                    generators: gens,
                    elements,
                })
            }
            Closure::TooLarge => Err(Error::Capacity {
                cap,
                checkpoint: None,
            }),
            Closure::Rejected => unreachable!("trivial predicate"),
        }
    }

    /// Build from an element list already known to be a group.
    pub(crate) fn from_parts(
        ring: PackedRing,
        generators: Vec<u64>,
        mut elements: Vec<u64>,
    ) -> MatGroup {
        elements.sort_unstable();
        elements.dedup();
        MatGroup {
            ring,
            generators,
            elements,
        }
    }

    /// Build from a closed element set, choosing a small generating set.
    pub(crate) fn from_elements(ring: PackedRing, elements: Vec<u64>) -> MatGroup {
        let mut g = MatGroup::from_parts(ring, Vec::new(), elements);
        g.generators = small_generating_set(&ring, &g.elements, &[]);
        g
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.ring.modulus()
    }

    pub fn ring(&self) -> &PackedRing {
        &self.ring
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> Vec<Mat2> {
        self.generators
            .iter()
            .map(|&g| self.ring.to_mat(g))
            .collect()
    }

    pub(crate) fn packed_generators(&self) -> &[u64] {
        &self.generators
    }

    pub(crate) fn packed_elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn elements(&self) -> impl Iterator<Item = Mat2> + '_ {
        self.elements.iter().map(|&x| self.ring.to_mat(x))
    }

    pub fn contains(&self, g: &Mat2) -> bool {
        g.modulus() == self.modulus() && self.contains_packed(self.ring.from_mat(g))
    }

    pub(crate) fn contains_packed(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    pub fn is_subgroup_of(&self, other: &MatGroup) -> bool {
        self.modulus() == other.modulus()
            && self.generators.iter().all(|&g| other.contains_packed(g))
    }

    /// `P G P^-1`.
    pub fn conjugate_by(&self, p: &Mat2) -> Result<MatGroup> {
        let pi = p.inverse().ok_or(Error::SingularConjugator)?;
        let (pp, ppi) = (self.ring.from_mat(p), self.ring.from_mat(&pi));
        let elements = self
            .elements
            .iter()
            .map(|&x| self.ring.conj(pp, ppi, x))
            .collect();
        let gens = self
            .generators
            .iter()
            .map(|&x| self.ring.conj(pp, ppi, x))
            .collect();
        Ok(MatGroup::from_parts(self.ring, gens, elements))
    }

    /// Replace the generator list by a small generating set.
    pub fn with_small_generators(&self) -> MatGroup {
        let mut g = self.clone();
        g.generators = small_generating_set(&self.ring, &self.elements, &[]);
        g
    }
}

/// Greedy generating set: walk the sorted elements and keep each one not yet
/// in the span of the chosen ones. `base` generators are assumed present.
pub(crate) fn small_generating_set(ring: &PackedRing, elements: &[u64], base: &[u64]) -> Vec<u64> {
    let mut seen = Seen::new(ring);
    let mut gens: Vec<u64> = base.to_vec();
    let mut span: Vec<u64> = match close_with(ring, &mut seen, &gens, usize::MAX, &|_| true) {
        Closure::Done(e) => e,
        _ => unreachable!(),
    };
    let mut members: FxHashSet<u64> = span.iter().copied().collect();
    let mut chosen = Vec::new();
    // prefer high-order elements so few generators are needed
    let mut order: Vec<u64> = elements.to_vec();
    order.sort_by_cached_key(|&x| (std::cmp::Reverse(ring.order_of(x)), x));
    for &x in &order {
        if span.len() == elements.len() {
            break;
        }
        if members.contains(&x) {
            continue;
        }
        span = match extend_with(ring, &mut seen, &span, &gens, &[x], usize::MAX, &|_| true) {
            Closure::Done(e) => e,
            _ => unreachable!(),
        };
        gens.push(x);
        chosen.push(x);
        members = span.iter().copied().collect();
    }
    chosen
}

/// Scalar matrices generating every scalar of the ring.
pub(crate) fn scalar_generators(ring: &PackedRing) -> Vec<u64> {
    ring.unit_generators()
        .into_iter()
        .map(|u| ring.scalar(u))
        .collect()
}

/// Image of `G` modulo `l^k`.
pub fn reduce_group(g: &MatGroup, k: u32) -> Result<MatGroup> {
    let n = g.modulus().exponent();
    if k == 0 || k > n {
        return Err(Error::Reduction { from: n, to: k });
    }
    if k == n {
        return Ok(g.clone());
    }
    let target = PackedRing::new(g.modulus().with_exponent(k)?);
    let elements = g
        .elements
        .iter()
        .map(|&x| g.ring.reduce_to(x, &target))
        .collect();
    let gens = g
        .generators
        .iter()
        .map(|&x| g.ring.reduce_to(x, &target))
        .collect();
    Ok(MatGroup::from_parts(target, gens, elements))
}

// ---------------------------------------------------------------------------
// Lines over packed rings

pub(crate) fn all_lines(ring: &PackedRing) -> Vec<(u64, u64)> {
    let m = ring.m();
    let p = ring.modulus().prime();
    let one = 1 % m;
    let mut out: Vec<(u64, u64)> = (0..m).map(|y| (one, y)).collect();
    out.extend((0..m).step_by(p as usize).map(|x| (x, one)));
    out
}

#[inline]
pub(crate) fn fixes_line(ring: &PackedRing, g: u64, (x, y): (u64, u64)) -> bool {
    let [a, b, c, d] = PackedRing::unpack(g);
    let u = ring.red(a * x + b * y);
    let v = ring.red(c * x + d * y);
    ring.red(x * v) == ring.red(y * u)
}

pub(crate) fn common_lines(ring: &PackedRing, gens: &[u64]) -> Vec<(u64, u64)> {
    all_lines(ring)
        .into_iter()
        .filter(|&l| gens.iter().all(|&g| fixes_line(ring, g, l)))
        .collect()
}

fn independent(ring: &PackedRing, l1: (u64, u64), l2: (u64, u64)) -> bool {
    let p = ring.modulus().prime();
    !(l1.0 * l2.1 + p * ring.m() - ring.red(l1.1 * l2.0)).is_multiple_of(p)
}

pub(crate) fn split_pair(
    ring: &PackedRing,
    lines: &[(u64, u64)],
) -> Option<((u64, u64), (u64, u64))> {
    for (i, &l1) in lines.iter().enumerate() {
        for &l2 in &lines[i + 1..] {
            if independent(ring, l1, l2) {
                return Some((l1, l2));
            }
        }
    }
    None
}

pub(crate) fn is_borel_packed(ring: &PackedRing, gens: &[u64]) -> bool {
    all_lines(ring)
        .into_iter()
        .any(|l| gens.iter().all(|&g| fixes_line(ring, g, l)))
}

pub(crate) fn is_split_cartan_packed(ring: &PackedRing, gens: &[u64]) -> bool {
    split_pair(ring, &common_lines(ring, gens)).is_some()
}

fn to_line(ring: &PackedRing, (x, y): (u64, u64)) -> LineClass {
    LineClass::through(x as i128, y as i128, ring.modulus()).expect("canonical lines are primitive")
}

// ---------------------------------------------------------------------------
// Structure

/// Witness that a Borel group is radical on `line`: the sign of `chi_1 / chi_2`
/// on each generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadicalWitness {
    pub line: (u64, u64),
    pub signs: Vec<i8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub is_borel: Option<LineClass>,
    pub is_split_cartan: Option<(LineClass, LineClass)>,
    pub is_radical: Option<(LineClass, RadicalWitness)>,
    pub is_scalar: bool,
    pub is_nonsplit_cartan: bool,
    pub det_surjective: bool,
    /// Exponent `k` of the level `l^k`; 0 means the group is all of `GL_2`.
    pub gl2_level: u32,
}

impl StructureReport {
    /// Boolean profile, useful for conjugation-invariance checks.
    pub fn profile(&self) -> [bool; 6] {
        [
            self.is_borel.is_some(),
            self.is_split_cartan.is_some(),
            self.is_radical.is_some(),
            self.is_scalar,
            self.is_nonsplit_cartan,
            self.det_surjective,
        ]
    }
}

/// Ratio `chi_1 / chi_2 = lambda^2 / det` of `g` on a fixed line.
fn ratio_packed(ring: &PackedRing, g: u64, (x, y): (u64, u64)) -> u64 {
    let md = ring.modulus();
    let [a, b, c, d] = PackedRing::unpack(g);
    let lambda = if md.is_unit(x) {
        md.mul(ring.red(a * x + b * y), md.inv(x).unwrap())
    } else {
        md.mul(ring.red(c * x + d * y), md.inv(y).unwrap())
    };
    md.mul(
        md.mul(lambda, lambda),
        md.inv(ring.det(g)).expect("invertible"),
    )
}

pub fn classify(g: &MatGroup) -> StructureReport {
    let ring = &g.ring;
    let md = ring.modulus();
    let gens = &g.generators;
    let lines = common_lines(ring, gens);
    let is_borel = lines.first().map(|&l| to_line(ring, l));
    let is_split_cartan =
        split_pair(ring, &lines).map(|(a, b)| (to_line(ring, a), to_line(ring, b)));
    let minus_one = md.modulus() - 1;
    let is_radical = lines.iter().find_map(|&l| {
        let mut signs = Vec::with_capacity(gens.len());
        for &h in gens {
            let r = ratio_packed(ring, h, l);
            if r == 1 % md.modulus() {
                signs.push(1);
            } else if r == minus_one {
                signs.push(-1);
            } else {
                return None;
            }
        }
        Some((to_line(ring, l), RadicalWitness { line: l, signs }))
    });
    let is_scalar = gens.iter().all(|&h| ring.is_scalar(h));
    let is_nonsplit_cartan = md.exponent() == 1 && lines.is_empty() && {
        let commutative = gens
            .iter()
            .all(|&x| gens.iter().all(|&y| ring.mul(x, y) == ring.mul(y, x)));
        let table = CharRootTable::new(ring);
        commutative
            && gens
                .iter()
                .any(|&h| !ring.is_scalar(h) && !table.has_root(ring, h))
    };
    StructureReport {
        is_borel,
        is_split_cartan,
        is_radical,
        is_scalar,
        is_nonsplit_cartan,
        det_surjective: det_image_order(g) as u64 == md.unit_count(),
        gl2_level: gl2_level(g),
    }
}

fn det_image_order(g: &MatGroup) -> usize {
    let dets: FxHashSet<u64> = g.elements.iter().map(|&x| g.ring.det(x)).collect();
    dets.len()
}

/// Smallest `k` such that `G` is the full preimage of its image mod `l^k`.
pub fn gl2_level(g: &MatGroup) -> u32 {
    let md = g.modulus();
    let (p, n) = (md.prime(), md.exponent());
    if g.order() as u64 == packed::gl2_order(md) {
        return 0;
    }
    for k in 1..n {
        let target = PackedRing::new(md.with_exponent(k).unwrap());
        let image: FxHashSet<u64> = g
            .elements
            .iter()
            .map(|&x| g.ring.reduce_to(x, &target))
            .collect();
        if (image.len() as u64) * p.pow(4 * (n - k)) == g.order() as u64 {
            return k;
        }
    }
    n
}

/// Does the group mod `l^j` lie in a split Cartan and mod `l^k` in a Borel,
/// for some `j + k = n`? Pure split Cartan is tried first, then pure Borel.
pub fn cartan_borel_factorization(g: &MatGroup) -> Option<(u32, u32)> {
    factorization_packed(&g.ring, &g.generators)
}

pub(crate) fn factorization_packed(ring: &PackedRing, gens: &[u64]) -> Option<(u32, u32)> {
    let md = ring.modulus();
    let n = md.exponent();
    let reduced = |k: u32| -> (PackedRing, Vec<u64>) {
        let t = PackedRing::new(md.with_exponent(k).unwrap());
        let gs = gens.iter().map(|&x| ring.reduce_to(x, &t)).collect();
        (t, gs)
    };
    let mut order = vec![n, 0];
    order.extend(1..n);
    for j in order {
        let k = n - j;
        let cartan = j == 0 || {
            let (t, gs) = reduced(j);
            is_split_cartan_packed(&t, &gs)
        };
        if !cartan {
            continue;
        }
        let borel = k == 0 || {
            let (t, gs) = reduced(k);
            is_borel_packed(&t, &gs)
        };
        if borel {
            return Some((j, k));
        }
    }
    None
}

/// Lookup of "x^2 - t x + d has a root" over a packed ring.
pub(crate) struct CharRootTable {
    m: usize,
    table: Vec<bool>,
}

impl CharRootTable {
    pub(crate) fn new(ring: &PackedRing) -> Self {
        let m = ring.m() as usize;
        let mut table = vec![false; m * m];
        for x in 0..m as u64 {
            for t in 0..m as u64 {
                // d = x (t - x)
                let d = ring.red(x * ring.red(t + ring.m() - x));
                table[t as usize * m + d as usize] = true;
            }
        }
        CharRootTable { m, table }
    }

    #[inline]
    pub(crate) fn has_root(&self, ring: &PackedRing, g: u64) -> bool {
        self.table[ring.trace(g) as usize * self.m + ring.det(g) as usize]
    }
}

/// Lookup of squares modulo the ring's modulus.
pub(crate) struct SquareTable {
    table: Vec<bool>,
}

impl SquareTable {
    pub(crate) fn new(ring: &PackedRing) -> Self {
        let m = ring.m();
        let mut table = vec![false; m as usize];
        for x in 0..m {
            table[ring.red(x * x) as usize] = true;
        }
        SquareTable { table }
    }

    #[inline]
    pub(crate) fn disc_is_square(&self, ring: &PackedRing, g: u64) -> bool {
        let t = ring.trace(g);
        let m = ring.m();
        let disc = ring.red(t * t + 4 * (m - ring.det(g)));
        self.table[disc as usize]
    }
}

pub fn all_square_disc(g: &MatGroup) -> bool {
    let table = SquareTable::new(&g.ring);
    g.elements.iter().all(|&x| table.disc_is_square(&g.ring, x))
}

pub fn all_charpoly_root(g: &MatGroup) -> bool {
    let table = CharRootTable::new(&g.ring);
    g.elements.iter().all(|&x| table.has_root(&g.ring, x))
}

/// An element with nonsquare discriminant, if any.
pub fn nonsquare_disc_element(g: &MatGroup) -> Option<Mat2> {
    let table = SquareTable::new(&g.ring);
    g.elements
        .iter()
        .find(|&&x| !table.disc_is_square(&g.ring, x))
        .map(|&x| g.ring.to_mat(x))
}

/// `phi(g) = chi_1(g) / chi_2(g)` for every element, where `chi_1` is the
/// eigenvalue on `line` and `chi_2` the action on the quotient.
pub fn ratio_character(g: &MatGroup, line: &LineClass) -> Result<Vec<(Mat2, Residue)>> {
    if line.modulus() != g.modulus() {
        return Err(Error::ModulusMismatch(
            line.modulus().modulus(),
            g.modulus().modulus(),
        ));
    }
    let l = line.rep();
    if !g.generators.iter().all(|&h| fixes_line(&g.ring, h, l)) {
        return Err(Error::Structure(format!(
            "group does not fix the line {line}"
        )));
    }
    let md = g.modulus();
    Ok(g.elements
        .iter()
        .map(|&x| {
            (
                g.ring.to_mat(x),
                md.residue(ratio_packed(&g.ring, x, l) as i128),
            )
        })
        .collect())
}

/// `K(l^n)`: elements whose reduction mod `l^(n-1)` has trivial ratio on the line.
pub fn kernel_k(g: &MatGroup, line_prev: &LineClass) -> Result<MatGroup> {
    let md = g.modulus();
    let n = md.exponent();
    if n < 2 || line_prev.modulus() != md.with_exponent(n - 1)? {
        return Err(Error::Structure(
            "line must live one level below the group".into(),
        ));
    }
    let low = reduce_group(g, n - 1)?;
    let l = line_prev.rep();
    if !low.generators.iter().all(|&h| fixes_line(&low.ring, h, l)) {
        return Err(Error::Structure(format!(
            "reduction is not Borel on {line_prev}"
        )));
    }
    let one = 1 % low.ring.m();
    let kept: Vec<u64> = g
        .elements
        .iter()
        .copied()
        .filter(|&x| ratio_packed(&low.ring, g.ring.reduce_to(x, &low.ring), l) == one)
        .collect();
    Ok(MatGroup::from_elements(g.ring, kept))
}

// ---------------------------------------------------------------------------
// Conjugacy

/// A conjugator `P` with `P G P^-1 = H`, if one exists.
pub fn conjugacy_equivalent(g: &MatGroup, h: &MatGroup) -> Option<Mat2> {
    if g.modulus() != h.modulus() || g.order() != h.order() {
        return None;
    }
    if g.order() > 1 && fingerprint(g) != fingerprint(h) {
        return None;
    }
    find_conjugator_into(g, h)
}

/// A matrix `P` with `P G P^-1` contained in `H`, if one exists. The search
/// runs level by level: a conjugator mod `l^k` must already work for the
/// reductions mod `l^k`, so candidates are lifted one digit at a time.
pub fn find_conjugator_into(g: &MatGroup, h: &MatGroup) -> Option<Mat2> {
    let md = g.modulus();
    if h.modulus() != md || g.order() > h.order() || !h.order().is_multiple_of(g.order()) {
        return None;
    }
    let (p, n) = (md.prime(), md.exponent());
    let levels: Vec<(PackedRing, Vec<u64>, FxHashSet<u64>)> = (1..=n)
        .map(|k| {
            let t = PackedRing::new(md.with_exponent(k).unwrap());
            let gens: Vec<u64> = g
                .generators
                .iter()
                .map(|&x| g.ring.reduce_to(x, &t))
                .collect();
            let set: FxHashSet<u64> = h
                .elements
                .iter()
                .map(|&x| h.ring.reduce_to(x, &t))
                .collect();
            (t, gens, set)
        })
        .collect();
    let works = |k: usize, pm: u64| -> bool {
        let (t, gens, set) = &levels[k];
        let Some(pi) = t.inverse(pm) else {
            return false;
        };
        gens.iter().all(|&x| set.contains(&t.conj(pm, pi, x)))
    };
    let mut stack: Vec<(usize, u64)> = levels[0]
        .0
        .gl2()
        .into_iter()
        .filter(|&pm| works(0, pm))
        .map(|pm| (0, pm))
        .collect();
    stack.reverse();
    while let Some((k, pm)) = stack.pop() {
        if k + 1 == n as usize {
            return Some(levels[k].0.to_mat(pm));
        }
        let step = levels[k].0.m();
        let [a, b, c, d] = PackedRing::unpack(pm);
        let mut next = Vec::new();
        for digits in 0..p.pow(4) {
            let da = digits % p;
            let db = (digits / p) % p;
            let dc = (digits / (p * p)) % p;
            let dd = digits / (p * p * p);
            let q = PackedRing::pack(a + step * da, b + step * db, c + step * dc, d + step * dd);
            if works(k + 1, q) {
                next.push((k + 1, q));
            }
        }
        next.reverse();
        stack.extend(next);
    }
    None
}

/// Conjugation-invariant summary of a group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fingerprint {
    pub order: usize,
    pub gl2_level: u32,
    pub det_image_order: usize,
    /// `(trace, det, count)` sorted.
    pub trace_det: Vec<(u64, u64, usize)>,
    /// `(element order, count)` sorted.
    pub element_orders: Vec<(u64, usize)>,
}

pub fn fingerprint(g: &MatGroup) -> Fingerprint {
    let mut td: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut orders: BTreeMap<u64, usize> = BTreeMap::new();
    for &x in &g.elements {
        *td.entry((g.ring.trace(x), g.ring.det(x))).or_default() += 1;
        *orders.entry(g.ring.order_of(x)).or_default() += 1;
    }
    Fingerprint {
        order: g.order(),
        gl2_level: gl2_level(g),
        det_image_order: det_image_order(g),
        trace_det: td.into_iter().map(|((t, d), c)| (t, d, c)).collect(),
        element_orders: orders.into_iter().collect(),
    }
}

/// Discriminant squareness of a single matrix (convenience re-export point).
pub fn disc_is_square(m: &Mat2) -> bool {
    let inv = crate::mat2::invariants_of(m);
    is_square(&inv.disc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    fn mat(e: [i128; 4], m: PrimePowerModulus) -> Mat2 {
        Mat2::new(e, m)
    }

    #[test]
    fn closure_examples() {
        let m27 = md(3, 3);
        assert_eq!(
            MatGroup::closure(m27, &[Mat2::identity(m27)])
                .unwrap()
                .order(),
            1
        );
        let m5 = md(5, 1);
        assert_eq!(
            MatGroup::closure(m5, &[mat([0, -1, 1, 0], m5)])
                .unwrap()
                .order(),
            4
        );
    }

    #[test]
    fn closure_rejects_singular_and_caps() {
        let m9 = md(3, 2);
        assert!(MatGroup::closure(m9, &[mat([3, 0, 0, 1], m9)]).is_err());
        let gens = [mat([1, 1, 0, 1], m9), mat([0, -1, 1, 0], m9)];
        assert!(matches!(
            MatGroup::closure_capped(m9, &gens, 10),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn borel_classification() {
        let m9 = md(3, 2);
        let g = MatGroup::closure(
            m9,
            &[
                mat([2, 0, 0, 1], m9),
                mat([1, 0, 0, 2], m9),
                mat([1, 1, 0, 1], m9),
            ],
        )
        .unwrap();
        let r = classify(&g);
        assert_eq!(r.is_borel.unwrap().rep(), (1, 0));
        assert!(r.is_split_cartan.is_none());
        assert_eq!(cartan_borel_factorization(&g), Some((0, 2)));
    }

    #[test]
    fn radical_example() {
        let m3 = md(3, 1);
        let g = MatGroup::closure(
            m3,
            &[
                mat([2, 0, 0, 1], m3),
                mat([1, 1, 0, 1], m3),
                mat([-1, 0, 0, -1], m3),
            ],
        )
        .unwrap();
        let (line, w) = classify(&g).is_radical.unwrap();
        assert_eq!(line.rep(), (1, 0));
        assert_eq!(w.signs, vec![-1, 1, 1]);
    }

    #[test]
    fn split_cartan_factorization() {
        let m27 = md(3, 3);
        let g = MatGroup::closure(m27, &[mat([2, 0, 0, 1], m27), mat([1, 0, 0, 2], m27)]).unwrap();
        assert_eq!(cartan_borel_factorization(&g), Some((3, 0)));
        assert!(classify(&g).is_radical.is_none());
    }

    #[test]
    fn gl2_mod3_has_nonsquare_disc() {
        let m3 = md(3, 1);
        let g = MatGroup::closure(
            m3,
            &[
                mat([1, 1, 0, 1], m3),
                mat([0, -1, 1, 0], m3),
                mat([2, 0, 0, 1], m3),
            ],
        )
        .unwrap();
        assert_eq!(g.order(), 48);
        assert!(!all_square_disc(&g));
        assert!(nonsquare_disc_element(&g).is_some());
        assert_eq!(classify(&g).gl2_level, 0);
        let scalars = MatGroup::closure(m3, &[mat([2, 0, 0, 2], m3)]).unwrap();
        assert!(all_square_disc(&scalars) && all_charpoly_root(&scalars));
    }

    #[test]
    fn ratio_character_example() {
        let m9 = md(3, 2);
        let g = MatGroup::closure(m9, &[mat([2, 1, 0, 5], m9)]).unwrap();
        let line = LineClass::through(1, 0, m9).unwrap();
        let phi = ratio_character(&g, &line).unwrap();
        let x = mat([2, 1, 0, 5], m9);
        assert_eq!(phi.iter().find(|(g, _)| *g == x).unwrap().1.value(), 4);
        let bad = LineClass::through(0, 1, m9).unwrap();
        assert!(ratio_character(&g, &bad).is_err());
    }

    #[test]
    fn nonsplit_cartan_mod_3() {
        let m3 = md(3, 1);
        // i in F_9 acting on the basis 1, i
        let g = MatGroup::closure(m3, &[mat([1, -1, 1, 1], m3)]).unwrap();
        assert_eq!(g.order(), 8);
        assert!(classify(&g).is_nonsplit_cartan);
    }

    #[test]
    fn borel_conjugacy_transpose() {
        let m9 = md(3, 2);
        let up = MatGroup::closure(
            m9,
            &[
                mat([2, 0, 0, 1], m9),
                mat([1, 0, 0, 2], m9),
                mat([1, 1, 0, 1], m9),
            ],
        )
        .unwrap();
        let low = MatGroup::closure(
            m9,
            &[
                mat([2, 0, 0, 1], m9),
                mat([1, 0, 0, 2], m9),
                mat([1, 0, 1, 1], m9),
            ],
        )
        .unwrap();
        let p = conjugacy_equivalent(&up, &low).unwrap();
        assert_eq!(up.conjugate_by(&p).unwrap(), low);
        assert!(conjugacy_equivalent(&up, &up).is_some());
    }

    #[test]
    fn small_generators_span() {
        let m8 = md(2, 3);
        let g = MatGroup::closure(
            m8,
            &[
                mat([1, 1, 0, 1], m8),
                mat([3, 0, 0, 3], m8),
                mat([7, 4, 4, 3], m8),
                mat([5, 4, 4, 5], m8),
            ],
        )
        .unwrap();
        let h = g.with_small_generators();
        assert_eq!(MatGroup::closure(m8, &h.generators()).unwrap(), g);
    }

    #[test]
    fn kernel_of_diagonal_group() {
        let m27 = md(3, 3);
        let g = MatGroup::closure(m27, &[mat([2, 0, 0, 1], m27), mat([1, 0, 0, 2], m27)]).unwrap();
        let line = LineClass::through(1, 0, md(3, 2)).unwrap();
        let k = kernel_k(&g, &line).unwrap();
        for x in k.elements() {
            let [a, _, _, d] = x.entries();
            assert_eq!(a % 9, d % 9);
        }
        assert_eq!(k.order(), g.order() / 6);
    }
}
