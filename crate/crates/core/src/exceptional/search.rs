//! Maximal exceptional subgroups of `GL_2(Z/2^n Z)`.
//!
//! The char-root property passes to subgroups and the absence of a
//! Cartan/Borel factorization passes to overgroups, so maximal exceptional
//! groups are maximal char-root groups without a factorization. Adjoining
//! scalars preserves the char-root property, so those groups contain every
//! scalar, and the search only walks scalar-containing classes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grp::enumerate::{
    build_levels, lift_node, sort_groups, EnumOptions, Hereditary, Leaf, Pred, Shared,
};
use crate::grp::packed::PackedRing;
use crate::grp::{factorization_packed, find_conjugator_into, MatGroup, DEFAULT_CAP};
use crate::modring::PrimePowerModulus;

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub cap: usize,
    /// Drop groups whose determinant is not surjective.
    pub det_surjective_only: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            cap: DEFAULT_CAP,
            det_surjective_only: false,
        }
    }
}

/// No `J' ⊋ J` stable under the group can be adjoined keeping every
/// characteristic polynomial split.
fn maximal_in_family(leaf: &Leaf, pred: &Pred) -> bool {
    let p = leaf.ring.modulus().prime();
    let j = &leaf.subspaces[leaf.j];
    for &big in leaf.minimal_supersets {
        let extra: Vec<u64> = leaf.subspaces[big]
            .members
            .iter()
            .filter(|&&e| !j.contains(e))
            .map(|&e| leaf.kernel_element(crate::grp::enumerate::decode(p, e)))
            .collect();
        let all_ok = leaf
            .elements
            .iter()
            .all(|&h| extra.iter().all(|&kappa| pred.ok(leaf.ring.mul(h, kappa))));
        if all_ok {
            return false;
        }
    }
    true
}

/// All maximal exceptional subgroups of `GL_2(Z/2^n Z)` up to conjugacy,
/// in a deterministic order.
pub fn search_maximal_exceptional_2adic(n: u32, opts: &SearchOptions) -> Result<Vec<MatGroup>> {
    if n == 0 {
        return Err(Error::Invalid("exponent must be positive".into()));
    }
    let modulus = PrimePowerModulus::new(2, n)?;
    if n == 1 {
        // every char-root subgroup of GL_2(F_2) fixes a line
        return Ok(Vec::new());
    }
    let eopts = EnumOptions {
        require_scalars: true,
        cap: opts.cap,
    };
    let shared = Shared::new(2, Hereditary::CharRoot, &eopts);
    let levels = build_levels(&shared, n - 1)?;
    let prev = levels.last().unwrap();
    let top = PackedRing::new(modulus);
    let pred = Pred::new(Hereditary::CharRoot, &top);
    let keep = |leaf: &Leaf| {
        factorization_packed(leaf.ring, leaf.gens).is_none() && maximal_in_family(leaf, &pred)
    };
    let per_parent: Vec<Result<Vec<MatGroup>>> = prev
        .nodes
        .par_iter()
        .map(|node| {
            let children = lift_node(&shared, &prev.ring, &top, node, &keep, false)?;
            Ok(children
                .into_iter()
                .map(|c| {
                    let mut gens = crate::grp::scalar_generators(&top);
                    gens.extend(c.node.gens);
                    MatGroup::from_parts(top, gens, c.elements)
                })
                .collect())
        })
        .collect();
    let mut candidates = Vec::new();
    for r in per_parent {
        match r {
            Ok(gs) => candidates.extend(gs),
            Err(Error::Capacity { cap, .. }) => {
                return Err(Error::Capacity {
                    cap,
                    checkpoint: Some(format!("levels 1..={} completed", n - 1)),
                })
            }
            Err(e) => return Err(e),
        }
    }
    // keep groups not conjugate into a strictly larger candidate
    let keep_flags: Vec<bool> = candidates
        .par_iter()
        .map(|a| {
            !candidates
                .iter()
                .any(|b| b.order() > a.order() && find_conjugator_into(a, b).is_some())
        })
        .collect();
    let mut out: Vec<MatGroup> = candidates
        .into_iter()
        .zip(keep_flags)
        .filter(|(_, k)| *k)
        .map(|(g, _)| g.with_small_generators())
        .filter(|g| !opts.det_surjective_only || crate::grp::classify(g).det_surjective)
        .collect();
    sort_groups(&mut out);
    Ok(out)
}
