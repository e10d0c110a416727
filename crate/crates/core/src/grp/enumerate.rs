//! Level-by-level enumeration of subgroups of `GL_2(Z/l^n Z)` whose elements
//! all satisfy a hereditary predicate, up to conjugacy.
//!
//! A class representative `G` mod `l^k` is lifted to mod `l^(k+1)` by picking
//! the kernel part `J = H ∩ ker` (a `G`-stable subspace of `M_2(F_l)`) and a
//! lift of each generator modulo `J`. Lifts of one parent are then split into
//! orbits under the preimage of the parent's normalizer; lifts of
//! non-conjugate parents are never conjugate, so this gives exact classes.

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::packed::{close_with, extend_with, set_hash, Closure, PackedRing, Seen};
use super::{small_generating_set, CharRootTable, MatGroup, SquareTable, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::modring::PrimePowerModulus;

/// An element-wise predicate that passes to subgroups and reductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hereditary {
    Any,
    /// Characteristic polynomial has a root.
    CharRoot,
    /// Discriminant is a square.
    SquareDisc,
}

#[derive(Clone, Debug)]
pub struct EnumOptions {
    /// Only enumerate groups containing every scalar matrix.
    pub require_scalars: bool,
    pub cap: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            require_scalars: false,
            cap: DEFAULT_CAP,
        }
    }
}

pub(crate) struct Pred {
    kind: Hereditary,
    roots: Option<CharRootTable>,
    squares: Option<SquareTable>,
    ring: PackedRing,
}

impl Pred {
    pub(crate) fn new(kind: Hereditary, ring: &PackedRing) -> Self {
        Pred {
            kind,
            roots: (kind == Hereditary::CharRoot).then(|| CharRootTable::new(ring)),
            squares: (kind == Hereditary::SquareDisc).then(|| SquareTable::new(ring)),
            ring: *ring,
        }
    }

    #[inline]
    pub(crate) fn ok(&self, x: u64) -> bool {
        match self.kind {
            Hereditary::Any => true,
            Hereditary::CharRoot => self.roots.as_ref().unwrap().has_root(&self.ring, x),
            Hereditary::SquareDisc => self.squares.as_ref().unwrap().disc_is_square(&self.ring, x),
        }
    }
}

// ---------------------------------------------------------------------------
// Subspaces of M_2(F_l) = F_l^4

/// A subspace of `F_l^4` in reduced row echelon form.
#[derive(Clone, Debug)]
pub(crate) struct Subspace {
    pub basis: Vec<[u64; 4]>,
    pub pivots: Vec<usize>,
    /// Encoded members `a + l b + l^2 c + l^3 d`, sorted.
    pub members: Vec<u32>,
}

pub(crate) fn encode(p: u64, v: [u64; 4]) -> u32 {
    (v[0] + p * (v[1] + p * (v[2] + p * v[3]))) as u32
}

pub(crate) fn decode(p: u64, mut e: u32) -> [u64; 4] {
    let mut v = [0; 4];
    for x in v.iter_mut() {
        *x = e as u64 % p;
        e /= p as u32;
    }
    v
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, e: u32) -> bool {
        self.members.binary_search(&e).is_ok()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.len() <= other.basis.len() && self.members.iter().all(|&e| other.contains(e))
    }

    /// Representatives of `F_l^4 / self`: vectors vanishing on the pivots.
    pub fn complement_reps(&self, p: u64) -> Vec<[u64; 4]> {
        let free: Vec<usize> = (0..4).filter(|i| !self.pivots.contains(i)).collect();
        let count = p.pow(free.len() as u32);
        (0..count)
            .map(|mut c| {
                let mut v = [0; 4];
                for &i in &free {
                    v[i] = c % p;
                    c /= p;
                }
                v
            })
            .collect()
    }
}

/// Every subspace of `F_p^4`, ordered by dimension.
pub(crate) fn all_subspaces(p: u64) -> Vec<Subspace> {
    let mut out = Vec::new();
    for r in 0..=4usize {
        for mask in 0u32..16 {
            if mask.count_ones() as usize != r {
                continue;
            }
            let pivots: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
            // free slots: (row, column) with column > pivot and column not a pivot
            let slots: Vec<(usize, usize)> = pivots
                .iter()
                .enumerate()
                .flat_map(|(row, &pc)| {
                    ((pc + 1)..4)
                        .filter(|c| !pivots.contains(c))
                        .map(move |c| (row, c))
                })
                .collect();
            for mut assign in 0..p.pow(slots.len() as u32) {
                let mut basis: Vec<[u64; 4]> = pivots
                    .iter()
                    .map(|&pc| {
                        let mut v = [0; 4];
                        v[pc] = 1 % p;
                        v
                    })
                    .collect();
                for &(row, c) in &slots {
                    basis[row][c] = assign % p;
                    assign /= p;
                }
                let members = span_members(p, &basis);
                out.push(Subspace {
                    basis,
                    pivots: pivots.clone(),
                    members,
                });
            }
        }
    }
    out
}

pub(crate) fn span_members(p: u64, basis: &[[u64; 4]]) -> Vec<u32> {
    let total = p.pow(basis.len() as u32);
    let mut members: Vec<u32> = (0..total)
        .map(|mut c| {
            let mut v = [0u64; 4];
            for b in basis {
                let coef = c % p;
                c /= p;
                for i in 0..4 {
                    v[i] = (v[i] + coef * b[i]) % p;
                }
            }
            encode(p, v)
        })
        .collect();
    members.sort_unstable();
    members
}

/// Is `J` stable under conjugation by each `g` (matrices mod `l`)?
pub(crate) fn is_stable(ring1: &PackedRing, gens_mod_l: &[(u64, u64)], j: &Subspace) -> bool {
    let p = ring1.m();
    gens_mod_l.iter().all(|&(g, gi)| {
        j.basis.iter().all(|v| {
            let a = PackedRing::pack(v[0], v[1], v[2], v[3]);
            let c = ring1.mul(ring1.mul(g, a), gi);
            j.contains(encode(p, PackedRing::unpack(c)))
        })
    })
}

// ---------------------------------------------------------------------------
// Nodes

/// A class representative mod `l^k`: generators modulo the implied scalars,
/// plus generators of its normalizer in `GL_2(Z/l^k Z)`.
#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub gens: Vec<u64>,
    pub order: usize,
    pub norm_gens: Vec<u64>,
    pub norm_order: usize,
}

pub(crate) struct Level {
    pub ring: PackedRing,
    pub nodes: Vec<Node>,
}

/// Everything a lifted candidate exposes to a filter.
pub(crate) struct Leaf<'a> {
    pub ring: &'a PackedRing,
    pub gens: &'a [u64],
    pub elements: &'a [u64],
    /// Index of `J` in the subspace list.
    pub j: usize,
    /// Invariant subspaces minimally containing `J`.
    pub minimal_supersets: &'a [usize],
    pub subspaces: &'a [Subspace],
    /// `k` with the kernel being `I + l^k M_2`.
    pub k: u32,
}

impl Leaf<'_> {
    /// Kernel element `I + l^k A` at the leaf's level.
    pub fn kernel_element(&self, v: [u64; 4]) -> u64 {
        kernel_element(self.ring, self.k, v)
    }
}

pub(crate) fn kernel_element(ring: &PackedRing, k: u32, v: [u64; 4]) -> u64 {
    let s = ring.modulus().prime().pow(k);
    PackedRing::pack(
        ring.red(1 + s * v[0]),
        ring.red(s * v[1]),
        ring.red(s * v[2]),
        ring.red(1 + s * v[3]),
    )
}

/// A surviving orbit representative.
pub(crate) struct Child {
    pub node: Node,
    pub elements: Vec<u64>,
}

pub(crate) struct Shared {
    pub p: u64,
    pub pred_kind: Hereditary,
    pub require_scalars: bool,
    pub cap: usize,
    pub subspaces: Vec<Subspace>,
}

impl Shared {
    pub(crate) fn new(p: u64, pred_kind: Hereditary, opts: &EnumOptions) -> Self {
        Shared {
            p,
            pred_kind,
            require_scalars: opts.require_scalars,
            cap: opts.cap,
            subspaces: all_subspaces(p),
        }
    }
}

fn scalar_gens(ring: &PackedRing) -> Vec<u64> {
    ring.unit_generators()
        .into_iter()
        .map(|u| ring.scalar(u))
        .collect()
}

fn closure_elems(ring: &PackedRing, seen: &mut Seen, gens: &[u64], cap: usize) -> Result<Vec<u64>> {
    match close_with(ring, seen, gens, cap, &|_| true) {
        Closure::Done(e) => Ok(e),
        _ => Err(Error::Capacity {
            cap,
            checkpoint: None,
        }),
    }
}

/// Level one: all qualifying subgroups of `GL_2(F_l)` up to conjugacy.
pub(crate) fn level_one(shared: &Shared) -> Result<Level> {
    let ring = PackedRing::new(PrimePowerModulus::new(shared.p, 1)?);
    let pred = Pred::new(shared.pred_kind, &ring);
    let mut seen = Seen::new(&ring);
    let base_gens = if shared.require_scalars {
        scalar_gens(&ring)
    } else {
        Vec::new()
    };
    let gl2 = ring.gl2();
    let candidates: Vec<u64> = gl2.iter().copied().filter(|&x| pred.ok(x)).collect();
    let base = match close_with(&ring, &mut seen, &base_gens, shared.cap, &|x| pred.ok(x)) {
        Closure::Done(mut e) => {
            e.sort_unstable();
            e
        }
        Closure::Rejected => {
            return Ok(Level {
                ring,
                nodes: Vec::new(),
            })
        }
        Closure::TooLarge => {
            return Err(Error::Capacity {
                cap: shared.cap,
                checkpoint: None,
            })
        }
    };
    let mut found: FxHashSet<Vec<u64>> = FxHashSet::default();
    let mut groups: Vec<Vec<u64>> = vec![base.clone()];
    found.insert(base);
    let mut i = 0;
    while i < groups.len() {
        let g = groups[i].clone();
        let members: FxHashSet<u64> = g.iter().copied().collect();
        for &x in &candidates {
            if members.contains(&x) {
                continue;
            }
            let gens = small_generating_set(&ring, &g, &[]);
            if let Closure::Done(mut e) =
                extend_with(&ring, &mut seen, &g, &gens, &[x], shared.cap, &|y| {
                    pred.ok(y)
                })
            {
                e.sort_unstable();
                if found.insert(e.clone()) {
                    groups.push(e);
                }
            }
        }
        i += 1;
    }
    // conjugacy classes
    let gl2_gens = small_generating_set(&ring, &gl2, &[]);
    let index: FxHashMap<Vec<u64>, usize> = groups
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, g)| (g, i))
        .collect();
    let mut visited = vec![false; groups.len()];
    let mut nodes = Vec::new();
    for start in 0..groups.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = vec![start];
        while let Some(cur) = queue.pop() {
            for &s in &gl2_gens {
                let si = ring.inverse(s).unwrap();
                let mut img: Vec<u64> = groups[cur].iter().map(|&x| ring.conj(s, si, x)).collect();
                img.sort_unstable();
                let j = index[&img];
                if !visited[j] {
                    visited[j] = true;
                    queue.push(j);
                }
            }
        }
        let g = &groups[start];
        let members: FxHashSet<u64> = g.iter().copied().collect();
        let gens = small_generating_set(&ring, g, &base_gens);
        let norm: Vec<u64> = gl2
            .iter()
            .copied()
            .filter(|&p| {
                let pi = ring.inverse(p).unwrap();
                gens.iter().all(|&x| members.contains(&ring.conj(p, pi, x)))
            })
            .collect();
        let norm_gens = small_generating_set(&ring, &norm, &[]);
        let _ = closure_elems(&ring, &mut seen, &norm_gens, shared.cap)?;
        nodes.push(Node {
            gens,
            order: g.len(),
            norm_gens,
            norm_order: norm.len(),
        });
    }
    Ok(Level { ring, nodes })
}

/// Lift one class representative from `ring_k` to `ring_k1`, keeping the
/// lifts accepted by `keep` and returning one representative per orbit.
pub(crate) fn lift_node(
    shared: &Shared,
    ring_k: &PackedRing,
    ring_k1: &PackedRing,
    node: &Node,
    keep: &(dyn Fn(&Leaf) -> bool + Sync),
    want_normalizers: bool,
) -> Result<Vec<Child>> {
    let p = shared.p;
    let k = ring_k.modulus().exponent();
    let ring1 = PackedRing::new(PrimePowerModulus::new(p, 1)?);
    let pred = Pred::new(shared.pred_kind, ring_k1);
    let mut seen = Seen::new(ring_k1);
    let mut seen_k = Seen::new(ring_k);
    let cap = shared.cap;

    // expected orders of partial groups mod l^k
    let zk = if shared.require_scalars {
        scalar_gens(ring_k)
    } else {
        Vec::new()
    };
    let mut partial_orders = Vec::with_capacity(node.gens.len() + 1);
    let mut gens_k = zk.clone();
    partial_orders.push(closure_elems(ring_k, &mut seen_k, &gens_k, cap)?.len());
    for &g in &node.gens {
        gens_k.push(g);
        partial_orders.push(closure_elems(ring_k, &mut seen_k, &gens_k, cap)?.len());
    }
    if *partial_orders.last().unwrap() != node.order {
        return Err(Error::Consistency(
            "parent generators do not give the parent order".into(),
        ));
    }

    // action of the parent on M_2(F_l), through its image mod l
    let mut act: Vec<(u64, u64)> = node
        .gens
        .iter()
        .map(|&g| {
            let g1 = ring_k.reduce_to(g, &ring1);
            (g1, ring1.inverse(g1).unwrap())
        })
        .collect();
    act.sort_unstable();
    act.dedup();
    let scalar_code = encode(p, [1, 0, 0, 1]);
    let invariant: Vec<usize> = (0..shared.subspaces.len())
        .filter(|&i| {
            let j = &shared.subspaces[i];
            (!shared.require_scalars || j.contains(scalar_code)) && is_stable(&ring1, &act, j)
        })
        .collect();
    let minimal_supersets: Vec<Vec<usize>> = invariant
        .iter()
        .map(|&i| {
            let ji = &shared.subspaces[i];
            let bigger: Vec<usize> = invariant
                .iter()
                .copied()
                .filter(|&o| {
                    shared.subspaces[o].dim() > ji.dim() && ji.is_subspace_of(&shared.subspaces[o])
                })
                .collect();
            bigger
                .iter()
                .copied()
                .filter(|&o| {
                    !bigger.iter().any(|&q| {
                        q != o
                            && shared.subspaces[q].dim() < shared.subspaces[o].dim()
                            && shared.subspaces[q].is_subspace_of(&shared.subspaces[o])
                    })
                })
                .collect()
        })
        .collect();

    let z1 = if shared.require_scalars {
        scalar_gens(ring_k1)
    } else {
        Vec::new()
    };
    let lifted: Vec<u64> = node
        .gens
        .iter()
        .map(|&g| ring_k.reduce_to(g, ring_k1))
        .collect();

    struct Found {
        gens: Vec<u64>,
        hash: (u64, u64),
    }
    let mut found: Vec<Found> = Vec::new();

    for (ii, &jidx) in invariant.iter().enumerate() {
        let j = &shared.subspaces[jidx];
        let jsize = j.members.len();
        let mut base_gens = z1.clone();
        base_gens.extend(j.basis.iter().map(|&v| kernel_element(ring_k1, k, v)));
        let base = match close_with(
            ring_k1,
            &mut seen,
            &base_gens,
            partial_orders[0] * jsize,
            &|x| pred.ok(x),
        ) {
            Closure::Done(e) if e.len() == partial_orders[0] * jsize => e,
            _ => continue,
        };
        let reps: Vec<u64> = j
            .complement_reps(p)
            .into_iter()
            .map(|v| kernel_element(ring_k1, k, v))
            .collect();
        // depth-first over generator lifts
        let d = lifted.len();
        let mut stack_elems: Vec<Vec<u64>> = vec![base];
        let mut stack_gens: Vec<Vec<u64>> = vec![base_gens.clone()];
        let mut choice = vec![0usize; d];
        let mut depth = 0usize;
        if d == 0 {
            let leaf = Leaf {
                ring: ring_k1,
                gens: &stack_gens[0],
                elements: &stack_elems[0],
                j: jidx,
                minimal_supersets: &minimal_supersets[ii],
                subspaces: &shared.subspaces,
                k,
            };
            if keep(&leaf) {
                found.push(Found {
                    gens: stack_gens[0].clone(),
                    hash: set_hash(stack_elems[0].iter().copied()),
                });
            }
            continue;
        }
        loop {
            if choice[depth] == reps.len() {
                if depth == 0 {
                    break;
                }
                choice[depth] = 0;
                depth -= 1;
                stack_elems.pop();
                stack_gens.pop();
                choice[depth] += 1;
                continue;
            }
            let h = ring_k1.mul(lifted[depth], reps[choice[depth]]);
            let expected = partial_orders[depth + 1] * jsize;
            if expected > cap {
                return Err(Error::Capacity {
                    cap,
                    checkpoint: None,
                });
            }
            let ok = pred.ok(h)
                && match extend_with(
                    ring_k1,
                    &mut seen,
                    &stack_elems[depth],
                    &stack_gens[depth],
                    &[h],
                    expected,
                    &|x| pred.ok(x),
                ) {
                    Closure::Done(e) if e.len() == expected => {
                        let mut gs = stack_gens[depth].clone();
                        gs.push(h);
                        stack_elems.push(e);
                        stack_gens.push(gs);
                        true
                    }
                    _ => false,
                };
            if !ok {
                choice[depth] += 1;
                continue;
            }
            if depth + 1 == d {
                let leaf = Leaf {
                    ring: ring_k1,
                    gens: &stack_gens[d],
                    elements: &stack_elems[d],
                    j: jidx,
                    minimal_supersets: &minimal_supersets[ii],
                    subspaces: &shared.subspaces,
                    k,
                };
                if keep(&leaf) {
                    found.push(Found {
                        gens: stack_gens[d].clone(),
                        hash: set_hash(stack_elems[d].iter().copied()),
                    });
                }
                stack_elems.pop();
                stack_gens.pop();
                choice[depth] += 1;
            } else {
                depth += 1;
            }
        }
    }

    // orbits under the preimage of the parent's normalizer
    let index: FxHashMap<(u64, u64), usize> =
        found.iter().enumerate().map(|(i, f)| (f.hash, i)).collect();
    if index.len() != found.len() {
        return Err(Error::Consistency("hash collision among lifts".into()));
    }
    let mut conj_gens: Vec<u64> = node
        .norm_gens
        .iter()
        .map(|&g| ring_k.reduce_to(g, ring_k1))
        .collect();
    for e in 0..4 {
        let mut v = [0u64; 4];
        v[e] = 1;
        conj_gens.push(kernel_element(ring_k1, k, v));
    }
    let conj_inv: Vec<u64> = conj_gens
        .iter()
        .map(|&s| ring_k1.inverse(s).unwrap())
        .collect();
    let big_order = node.norm_order * (p.pow(4) as usize);

    let mut visited = vec![false; found.len()];
    let mut children = Vec::new();
    for start in 0..found.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let rep_elems = closure_elems(ring_k1, &mut seen, &found[start].gens, cap)?;
        // transversal[point] = t with t H t^-1 = point
        let mut transversal: FxHashMap<usize, u64> = FxHashMap::default();
        transversal.insert(start, ring_k1.identity());
        let mut edges: Vec<(usize, usize, usize)> = Vec::new();
        let mut queue: Vec<(usize, Vec<u64>)> = vec![(start, rep_elems.clone())];
        while let Some((cur, elems)) = queue.pop() {
            for (si, (&s, &sinv)) in conj_gens.iter().zip(&conj_inv).enumerate() {
                let img: Vec<u64> = elems.iter().map(|&x| ring_k1.conj(s, sinv, x)).collect();
                let h = set_hash(img.iter().copied());
                let Some(&nxt) = index.get(&h) else {
                    return Err(Error::Consistency(
                        "conjugate lift missing from enumeration".into(),
                    ));
                };
                if want_normalizers {
                    edges.push((cur, si, nxt));
                }
                if !visited[nxt] {
                    visited[nxt] = true;
                    let t = ring_k1.mul(s, transversal[&cur]);
                    transversal.insert(nxt, t);
                    queue.push((nxt, img));
                }
            }
        }
        let orbit = transversal.len();
        let gens = small_generating_set(ring_k1, &rep_elems, &z1);
        let (norm_gens, norm_order) = if want_normalizers {
            if !big_order.is_multiple_of(orbit) {
                return Err(Error::Consistency(
                    "orbit size does not divide normalizer order".into(),
                ));
            }
            let target = big_order / orbit;
            let mut ngens: Vec<u64> = Vec::new();
            let mut nel: Vec<u64> = vec![ring_k1.identity()];
            let mut members: FxHashSet<u64> = nel.iter().copied().collect();
            for &(x, si, y) in &edges {
                if nel.len() == target {
                    break;
                }
                let ty_inv = ring_k1.inverse(transversal[&y]).unwrap();
                let st = ring_k1.mul(ring_k1.mul(ty_inv, conj_gens[si]), transversal[&x]);
                if members.contains(&st) {
                    continue;
                }
                nel = match extend_with(ring_k1, &mut seen, &nel, &ngens, &[st], cap, &|_| true) {
                    Closure::Done(e) => e,
                    _ => {
                        return Err(Error::Capacity {
                            cap,
                            checkpoint: None,
                        })
                    }
                };
                ngens.push(st);
                members = nel.iter().copied().collect();
            }
            if nel.len() != target {
                return Err(Error::Consistency("stabilizer order mismatch".into()));
            }
            (ngens, target)
        } else {
            (Vec::new(), 0)
        };
        children.push(Child {
            node: Node {
                gens,
                order: rep_elems.len(),
                norm_gens,
                norm_order,
            },
            elements: rep_elems,
        });
    }
    Ok(children)
}

/// Compute class representatives at levels `1..=upto`.
pub(crate) fn build_levels(shared: &Shared, upto: u32) -> Result<Vec<Level>> {
    let mut levels = vec![level_one(shared)?];
    for k in 1..upto {
        let prev = levels.last().unwrap();
        let ring_k1 = PackedRing::new(PrimePowerModulus::new(shared.p, k + 1)?);
        let results: Vec<Result<Vec<Child>>> = prev
            .nodes
            .par_iter()
            .map(|node| lift_node(shared, &prev.ring, &ring_k1, node, &|_| true, true))
            .collect();
        let mut nodes = Vec::new();
        for r in results {
            match r {
                Ok(children) => nodes.extend(children.into_iter().map(|c| c.node)),
                Err(Error::Capacity { cap, .. }) => {
                    return Err(Error::Capacity {
                        cap,
                        checkpoint: Some(format!("levels 1..={k} completed")),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        levels.push(Level {
            ring: ring_k1,
            nodes,
        });
    }
    Ok(levels)
}

/// All subgroups of `GL_2(Z/p^n Z)` whose elements satisfy `pred`, one per
/// conjugacy class, sorted by fingerprint.
pub fn enumerate_subgroups(
    p: u64,
    n: u32,
    pred: Hereditary,
    opts: &EnumOptions,
) -> Result<Vec<MatGroup>> {
    let modulus = PrimePowerModulus::new(p, n)?;
    if modulus.modulus() > super::packed::PACKED_MAX_MODULUS {
        return Err(Error::InvalidModulus(format!(
            "{modulus} is too large to enumerate"
        )));
    }
    let shared = Shared::new(p, pred, opts);
    let levels = build_levels(&shared, n)?;
    let top = levels.last().unwrap();
    let z = if opts.require_scalars {
        scalar_gens(&top.ring)
    } else {
        Vec::new()
    };
    let mut groups: Vec<MatGroup> = top
        .nodes
        .par_iter()
        .map(|node| {
            let mut gens = z.clone();
            gens.extend_from_slice(&node.gens);
            MatGroup::from_packed_gens(top.ring, gens, opts.cap)
        })
        .collect::<Result<_>>()?;
    sort_groups(&mut groups);
    Ok(groups)
}

/// Deterministic order: by fingerprint, then by element set.
pub fn sort_groups(groups: &mut [MatGroup]) {
    let mut keyed: Vec<(super::Fingerprint, Vec<u64>, MatGroup)> = groups
        .par_iter()
        .map(|g| {
            (
                super::fingerprint(g),
                g.packed_elements().to_vec(),
                g.clone(),
            )
        })
        .collect();
    keyed.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    for (slot, (_, _, g)) in groups.iter_mut().zip(keyed) {
        *slot = g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subspace_counts() {
        // Gaussian binomials [4, r]_q summed
        assert_eq!(all_subspaces(2).len(), 1 + 15 + 35 + 15 + 1);
        assert_eq!(all_subspaces(3).len(), 1 + 40 + 130 + 40 + 1);
    }

    #[test]
    fn s3_char_root_subgroups() {
        let groups =
            enumerate_subgroups(2, 1, Hereditary::CharRoot, &EnumOptions::default()).unwrap();
        let orders: Vec<usize> = groups.iter().map(|g| g.order()).collect();
        assert_eq!(orders, vec![1, 2]);
    }

    #[test]
    fn all_subgroups_of_s3() {
        let groups = enumerate_subgroups(2, 1, Hereditary::Any, &EnumOptions::default()).unwrap();
        let mut orders: Vec<usize> = groups.iter().map(|g| g.order()).collect();
        orders.sort();
        assert_eq!(orders, vec![1, 2, 3, 6]);
    }
}
