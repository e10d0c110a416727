//! Property checks over the whole library, each reported as a named pass/fail
//! line. Exhaustive where the search space is small, seeded sampling otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cm::{
    a_bound, abc_factorization_with, build_cartan, cartan_order, classify_prime_power_cm,
    conjugation_element, g_ab, verify_gab_rule, verify_trace_zero_coset, CmCase, FieldFlags,
    ImagQuadDisc, Splitting,
};
use crate::error::Result;
use crate::exceptional::{
    build_h_exc, build_k_group, build_r_group, is_exceptional_2adic, kevec_lines_congruence,
    kevec_lines_formula, search_maximal_exceptional_2adic, simultaneous_eigenlines_k, uplift_sweep,
    verify_d4_subrep_claim, SearchOptions,
};
use crate::fixtures::{read_fixture, table1};
use crate::frobdata::{find_witness, frob_passes, parse_ap_file, FrobRecord};
use crate::genus::{
    assemble_q_exception_list, fiber_product, genus_of, genus_x0, x0_product, GenusData,
};
use crate::grp::{all_square_disc, classify, fingerprint, gl2_level, reduce_group, MatGroup};
use crate::mat2::{
    char_poly_has_root, fixed_lines, invariants_of, lift_eigenline, LineClass, Mat2,
};
use crate::modring::{
    factorize, gcd, is_prime, is_square, pow_mod, quad_roots, sqrt_mod, PrimePowerModulus, Residue,
};

const SEED: u64 = 0x6c67_7021;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Number of cases examined.
    pub cases: u64,
    pub detail: String,
    /// Wall-clock time; not serialized so JSON output stays reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl Check {
    fn from_result(name: &str, r: Result<(bool, u64, String)>) -> Check {
        match r {
            Ok((passed, cases, detail)) => Check {
                name: name.into(),
                passed,
                cases,
                detail,
                seconds: 0.0,
            },
            Err(e) => Check {
                name: name.into(),
                passed: false,
                cases: 0,
                detail: format!("error: {e}"),
                seconds: 0.0,
            },
        }
    }
}

fn run(name: &str, f: impl FnOnce() -> Result<(bool, u64, String)>) -> Check {
    let start = std::time::Instant::now();
    let mut c = Check::from_result(name, f());
    c.seconds = start.elapsed().as_secs_f64();
    c
}

/// Collects counterexamples; keeps the first few for the report.
#[derive(Default)]
struct Tally {
    cases: u64,
    failures: u64,
    first: Vec<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first.len() < 3 {
                self.first.push(what());
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.cases += other.cases;
        self.failures += other.failures;
        for f in other.first {
            if self.first.len() < 3 {
                self.first.push(f);
            }
        }
        self
    }

    fn finish(self) -> (bool, u64, String) {
        let detail = if self.failures == 0 {
            format!("{} cases, no counterexamples", self.cases)
        } else {
            format!(
                "{} of {} cases fail, e.g. {}",
                self.failures,
                self.cases,
                self.first.join("; ")
            )
        };
        (self.failures == 0, self.cases, detail)
    }
}

fn md(p: u64, n: u32) -> PrimePowerModulus {
    PrimePowerModulus::new(p, n).expect("valid prime power")
}

fn mat_from_index(i: u64, m: PrimePowerModulus) -> Mat2 {
    let q = m.modulus();
    Mat2::new(
        [
            (i % q) as i128,
            (i / q % q) as i128,
            (i / q / q % q) as i128,
            (i / q / q / q) as i128,
        ],
        m,
    )
}

fn random_mat(rng: &mut impl Rng, m: PrimePowerModulus) -> Mat2 {
    let q = m.modulus() as i128;
    Mat2::new(
        [
            rng.gen_range(0..q),
            rng.gen_range(0..q),
            rng.gen_range(0..q),
            rng.gen_range(0..q),
        ],
        m,
    )
}

fn random_invertible(rng: &mut impl Rng, m: PrimePowerModulus) -> Mat2 {
    loop {
        let g = random_mat(rng, m);
        if g.is_invertible() {
            return g;
        }
    }
}

// ---------------------------------------------------------------- modring

/// `is_square` and `sqrt_mod` against the list of all squares, for every
/// prime power `<= 2^14` with prime below 20.
pub fn check_squares() -> Check {
    run(
        "modring: is_square / sqrt_mod vs exhaustive squares",
        || {
            let mut t = Tally::default();
            for p in [2u64, 3, 5, 7, 11, 13, 17, 19] {
                let mut n = 1;
                while p.pow(n) <= 1 << 14 {
                    let m = md(p, n);
                    let q = m.modulus();
                    let mut sq = vec![false; q as usize];
                    for s in 0..q {
                        sq[(s * s % q) as usize] = true;
                    }
                    for x in 0..q {
                        let r = Residue::new(x as i128, m);
                        t.record(is_square(&r) == sq[x as usize], || {
                            format!("is_square({x}) mod {q}")
                        });
                        if let Some(s) = sqrt_mod(&r) {
                            t.record(s.mul(&s) == r, || format!("sqrt_mod({x}) mod {q}"));
                        }
                    }
                    n += 1;
                }
            }
            Ok(t.finish())
        },
    )
}

/// `quad_roots` against exhaustive root scans: all `(b, c)` for moduli up to
/// 243, sampled `(b, c)` for larger moduli up to `2^16`.
pub fn check_quad_roots() -> Check {
    run("modring: quad_roots vs exhaustive scan", || {
        let scan = |b: u64, c: u64, m: PrimePowerModulus| -> Vec<u64> {
            (0..m.modulus())
                .filter(|&x| m.add(m.add(m.mul(x, x), m.mul(b, x)), c) == 0)
                .collect()
        };
        let cmp = |b: u64, c: u64, m: PrimePowerModulus| -> bool {
            let mut got: Vec<u64> =
                quad_roots(&Residue::new(b as i128, m), &Residue::new(c as i128, m), m)
                    .iter()
                    .map(|r| r.value())
                    .collect();
            got.sort();
            got == scan(b, c, m)
        };
        let small = [
            md(2, 5),
            md(2, 7),
            md(3, 3),
            md(3, 5),
            md(5, 2),
            md(5, 3),
            md(7, 2),
        ];
        let mut t = small
            .par_iter()
            .map(|&m| {
                let mut t = Tally::default();
                for b in 0..m.modulus() {
                    for c in 0..m.modulus() {
                        t.record(cmp(b, c, m), || format!("x^2+{b}x+{c} mod {}", m.modulus()));
                    }
                }
                t
            })
            .reduce(Tally::default, Tally::merge);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for m in [md(2, 16), md(3, 10), md(5, 6), md(7, 5)] {
            let q = m.modulus();
            for _ in 0..60 {
                let (b, c) = (rng.gen_range(0..q), rng.gen_range(0..q));
                t.record(cmp(b, c, m), || format!("x^2+{b}x+{c} mod {q}"));
                // a quadratic with a known root and a high-valuation constant term
                let (r, s) = (
                    rng.gen_range(0..q),
                    m.power(rng.gen_range(0..m.exponent())) % q,
                );
                let b2 = m.neg(m.add(r, s));
                t.record(cmp(b2, m.mul(r, s), m), || {
                    format!("(x-{r})(x-{s}) mod {q}")
                });
            }
        }
        Ok(t.finish())
    })
}

/// Unit squares: multiplicativity of the quadratic character for odd `l`, and
/// the `u ≡ 1 mod 8` rule modulo `2^n`, `n >= 3`.
pub fn check_unit_squares() -> Check {
    run("modring: unit-square character and 2-adic rule", || {
        let mut t = Tally::default();
        for m in [
            md(3, 1),
            md(3, 2),
            md(3, 3),
            md(5, 1),
            md(5, 2),
            md(7, 1),
            md(7, 2),
        ] {
            let units: Vec<u64> = (0..m.modulus()).filter(|&u| m.is_unit(u)).collect();
            for &u in &units {
                for &v in &units {
                    let su = is_square(&Residue::new(u as i128, m));
                    let sv = is_square(&Residue::new(v as i128, m));
                    let suv = is_square(&Residue::new(m.mul(u, v) as i128, m));
                    t.record(suv == (su == sv), || format!("{u}*{v} mod {}", m.modulus()));
                }
            }
        }
        for n in 3..=14 {
            let m = md(2, n);
            for u in (1..m.modulus()).step_by(2) {
                t.record(
                    is_square(&Residue::new(u as i128, m)) == (u % 8 == 1),
                    || format!("{u} mod 2^{n}"),
                );
            }
        }
        Ok(t.finish())
    })
}

// ---------------------------------------------------------------- mat2

/// Trace, determinant and discriminant are conjugation invariant; a fixed
/// line forces a characteristic root.
pub fn check_mat2_invariants() -> Check {
    run(
        "mat2: conjugation invariance and fixed line => root",
        || {
            let mut t = Tally::default();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
            for m in [md(2, 5), md(3, 3), md(5, 2), md(7, 2)] {
                for _ in 0..5000 {
                    let x = random_mat(&mut rng, m);
                    let p = random_invertible(&mut rng, m);
                    let y = crate::mat2::conjugate(&x, &p)?;
                    t.record(invariants_of(&x) == invariants_of(&y), || {
                        format!("{x} by {p}")
                    });
                }
            }
            for m in [md(2, 3), md(3, 2), md(5, 1)] {
                for i in 0..m.modulus().pow(4) {
                    let x = mat_from_index(i, m);
                    t.record(fixed_lines(&x).is_empty() || char_poly_has_root(&x), || {
                        format!("{x}")
                    });
                }
            }
            Ok(t.finish())
        },
    )
}

/// Two distinct roots modulo `l`: the roots themselves, or `None`.
fn distinct_roots_mod_ell(x: &Mat2) -> Option<()> {
    let low = x.reduce(1).ok()?;
    let inv = invariants_of(&low);
    (quad_roots(&inv.trace.neg(), &inv.det, low.modulus()).len() == 2).then_some(())
}

/// One Hensel case: `None` when the reduction has no two distinct eigenvalues.
fn hensel_case(x: &Mat2) -> Option<bool> {
    distinct_roots_mod_ell(x)?;
    let low = x.reduce(1).ok()?;
    let low_lines = fixed_lines(&low);
    let full = fixed_lines(x);
    if low_lines.len() != 2 || full.len() < 2 {
        return Some(false);
    }
    for l in &low_lines {
        let Ok(lift) = lift_eigenline(x, l) else {
            return Some(false);
        };
        let brute: Vec<&LineClass> = full
            .iter()
            .filter(|f| f.reduce(1).ok().as_ref() == Some(l))
            .collect();
        if brute != [&lift] {
            return Some(false);
        }
    }
    Some(true)
}

fn hensel_tally(mats: impl ParallelIterator<Item = Mat2>) -> Tally {
    mats.fold(Tally::default, |mut t, x| {
        if let Some(ok) = hensel_case(&x) {
            t.record(ok, || format!("{x} mod {}", x.modulus().modulus()));
        }
        t
    })
    .reduce(Tally::default, Tally::merge)
}

/// Separable reduction: at least two fixed lines, and `lift_eigenline` agrees
/// with filtering all fixed lines. Exhaustive modulo `3^n`, `n <= 3`.
pub fn check_hensel_exhaustive() -> Check {
    run(
        "mat2: Hensel lifting of eigenlines, l = 3, exhaustive to 27",
        || {
            let mut t = Tally::default();
            for n in 1..=3 {
                let m = md(3, n);
                t = t.merge(hensel_tally(
                    (0..m.modulus().pow(4))
                        .into_par_iter()
                        .map(move |i| mat_from_index(i, m)),
                ));
            }
            Ok(t.finish())
        },
    )
}

/// Uniform samples with separable reduction, `samples` each for `5^2, 5^3,
/// 5^4` and `3^4`.
pub fn check_hensel_sampled(samples: usize) -> Check {
    run(
        "mat2: Hensel lifting of eigenlines, sampled l = 5 and 3^4",
        || {
            let mut t = Tally::default();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
            for m in [md(5, 2), md(5, 3), md(5, 4), md(3, 4)] {
                let mut mats = Vec::with_capacity(samples);
                while mats.len() < samples {
                    let x = random_mat(&mut rng, m);
                    if distinct_roots_mod_ell(&x).is_some() {
                        mats.push(x);
                    }
                }
                t = t.merge(hensel_tally(mats.into_par_iter()));
            }
            Ok(t.finish())
        },
    )
}

/// Matrices `≡ [[1, r], [0, 1]] mod l` with `l ∤ r` and square discriminant
/// fix a line.
fn jordan_tally(mats: impl ParallelIterator<Item = Mat2>) -> Tally {
    mats.fold(Tally::default, |mut t, x| {
        if is_square(&invariants_of(&x).disc) {
            t.record(!fixed_lines(&x).is_empty(), || {
                format!("{x} mod {}", x.modulus().modulus())
            });
        }
        t
    })
    .reduce(Tally::default, Tally::merge)
}

fn jordan_class(ell: u64, m: PrimePowerModulus, r: u64, x: u64, y: u64, z: u64, w: u64) -> Mat2 {
    let l = ell as i128;
    Mat2::new(
        [
            1 + l * x as i128,
            r as i128 + l * y as i128,
            l * z as i128,
            1 + l * w as i128,
        ],
        m,
    )
}

/// Exhaustive over the congruence class modulo `3^n`, `n = 2, 3, 4`.
pub fn check_jordan_exhaustive() -> Check {
    run(
        "mat2: unipotent-mod-l with square disc fixes a line, l = 3, exhaustive",
        || {
            let mut t = Tally::default();
            for n in 2..=4 {
                let m = md(3, n);
                let k = m.modulus() / 3;
                let count = 2 * k.pow(4);
                t = t.merge(jordan_tally((0..count).into_par_iter().map(move |i| {
                    let (r, i) = (1 + i % 2, i / 2);
                    jordan_class(3, m, r, i % k, i / k % k, i / k / k % k, i / k / k / k)
                })));
            }
            Ok(t.finish())
        },
    )
}

/// Sampled over the congruence class modulo `5^3` until `samples` draws have
/// square discriminant.
pub fn check_jordan_sampled(samples: usize) -> Check {
    run(
        "mat2: unipotent-mod-l with square disc fixes a line, l = 5, sampled",
        || {
            let m = md(5, 3);
            let k = m.modulus() / 5;
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
            let mut draws = 0u64;
            let mut mats = Vec::with_capacity(samples);
            while mats.len() < samples {
                draws += 1;
                let r = rng.gen_range(1..5);
                let v: [u64; 4] = [0; 4].map(|_| rng.gen_range(0..k));
                let x = jordan_class(5, m, r, v[0], v[1], v[2], v[3]);
                if is_square(&invariants_of(&x).disc) {
                    mats.push(x);
                }
            }
            let (ok, cases, detail) = jordan_tally(mats.into_par_iter()).finish();
            Ok((ok, cases, format!("{draws} draws, {detail}")))
        },
    )
}

/// `[[1+2x, 1+2y], [2^(n-1) z, 1+2w]]` modulo `2^n`, `n = 4, 5`, exhaustive:
/// a characteristic root forces a fixed line.
pub fn check_two_jordan() -> Check {
    run(
        "mat2: 2-adic unipotent class, root => fixed line, 2^4 and 2^5",
        || {
            let mut t = Tally::default();
            for n in [4u32, 5] {
                let m = md(2, n);
                let h = 1u64 << (n - 1);
                for x in 0..h {
                    for y in 0..h {
                        for z in 0..2 {
                            for w in 0..h {
                                let g = Mat2::new(
                                    [
                                        1 + 2 * x as i128,
                                        1 + 2 * y as i128,
                                        (h * z) as i128,
                                        1 + 2 * w as i128,
                                    ],
                                    m,
                                );
                                if char_poly_has_root(&g) {
                                    t.record(!fixed_lines(&g).is_empty(), || {
                                        format!("{g} mod 2^{n}")
                                    });
                                } else {
                                    t.cases += 1;
                                }
                            }
                        }
                    }
                }
            }
            Ok(t.finish())
        },
    )
}

/// Common fixed lines of `K(l^(2m+1))`. At `m = 1` (mod 27 and mod 125) they
/// must equal the closed form `k ≡ ±l^(m-1) mod l^(2m-1)`; at every scale they
/// must equal the solutions of `k^2 ≡ l^(2m-2) mod l^(2m-1)`. The closed form
/// is coarser than the congruence for `m >= 2`, and the detail shows by how much
/// at `(3, 2)`.
pub fn check_kevec() -> Check {
    run("exceptional: simultaneous eigenlines of K", || {
        let mut t = Tally::default();
        let mut notes = Vec::new();
        for (ell, m) in [(3u64, 1u32), (5, 1), (3, 2)] {
            let mut got = simultaneous_eigenlines_k(ell, m)?;
            got.sort();
            let closed = kevec_lines_formula(ell, m)?;
            let congruence = kevec_lines_congruence(ell, m)?;
            notes.push(format!(
                "({ell},{m}): {} lines, closed form {}, congruence {}",
                got.len(),
                closed.len(),
                if got == congruence {
                    "agrees"
                } else {
                    "differs"
                }
            ));
            if m == 1 {
                t.record(got == closed && !got.is_empty(), || {
                    format!(
                        "(l, m) = ({ell}, {m}): {} vs closed form {}",
                        got.len(),
                        closed.len()
                    )
                });
            }
            t.record(got == congruence && !got.is_empty(), || {
                format!(
                    "(l, m) = ({ell}, {m}): {} vs congruence {}",
                    got.len(),
                    congruence.len()
                )
            });
        }
        let (ok, cases, detail) = t.finish();
        Ok((ok, cases, format!("{detail} [{}]", notes.join("; "))))
    })
}

// ---------------------------------------------------------------- grp

fn random_group(rng: &mut impl Rng, m: PrimePowerModulus, max_gens: usize) -> Result<MatGroup> {
    let k = rng.gen_range(1..=max_gens);
    let gens: Vec<Mat2> = (0..k).map(|_| random_invertible(rng, m)).collect();
    MatGroup::closure(m, &gens)
}

/// Closure, classification and reduction on random subgroups.
pub fn check_group_basics() -> Check {
    run(
        "grp: closure idempotent, classify conjugation-invariant, reduce commutes",
        || {
            let mut t = Tally::default();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
            for m in [md(2, 3), md(2, 4), md(3, 2), md(3, 3), md(5, 2)] {
                for _ in 0..25 {
                    let k = rng.gen_range(1..=2);
                    let mut gens: Vec<Mat2> =
                        (0..k).map(|_| random_invertible(&mut rng, m)).collect();
                    let g = MatGroup::closure(m, &gens)?;
                    t.record(MatGroup::closure(m, &g.generators())? == g, || {
                        format!("idempotence mod {}", m.modulus())
                    });
                    gens.reverse();
                    t.record(MatGroup::closure(m, &gens)? == g, || {
                        format!("generator order mod {}", m.modulus())
                    });
                    let p = random_invertible(&mut rng, m);
                    let h = g.conjugate_by(&p)?;
                    t.record(classify(&h).profile() == classify(&g).profile(), || {
                        format!("classify profile mod {}", m.modulus())
                    });
                    t.record(fingerprint(&h) == fingerprint(&g), || {
                        format!("fingerprint mod {}", m.modulus())
                    });
                    let low = m.with_exponent(1)?;
                    let reduced: Vec<Mat2> =
                        gens.iter().map(|x| x.reduce(1)).collect::<Result<_>>()?;
                    t.record(
                        reduce_group(&g, 1)? == MatGroup::closure(low, &reduced)?,
                        || format!("reduce mod {}", m.modulus()),
                    );
                }
            }
            Ok(t.finish())
        },
    )
}

/// Odd `l`: in a group whose discriminants are all squares, every element
/// fixes a line or is scalar modulo `l`. Sampled subgroups mod 27, plus K and R.
pub fn check_square_disc_elements() -> Check {
    run(
        "grp: square-disc groups mod 27, each element fixes a line or is scalar mod 3",
        || {
            let m = md(3, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
            let mut groups = vec![build_k_group(3, 1)?, build_r_group(3, 1)?];
            while groups.len() < 40 {
                let g = random_group(&mut rng, m, 2)?;
                if all_square_disc(&g) {
                    groups.push(g);
                }
            }
            let mut t = Tally::default();
            for g in &groups {
                for x in g.elements() {
                    let scalar = x.reduce(1)?.is_scalar();
                    t.record(scalar || !fixed_lines(&x).is_empty(), || format!("{x}"));
                }
            }
            Ok(t.finish())
        },
    )
}

/// Groups that are Borel modulo `l^(n-1)`: elements with distinct eigenvalues
/// mod `l` fix a line lifting the common line.
pub fn check_dis_lifting() -> Check {
    run(
        "grp: Borel mod 9, separable elements fix a lifted line mod 27",
        || {
            let m = md(3, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
            let mut t = Tally::default();
            for _ in 0..40 {
                let p = random_invertible(&mut rng, m);
                let gens: Vec<Mat2> = (0..rng.gen_range(1..=3))
                    .map(|_| loop {
                        let [a, b, _, d] = random_mat(&mut rng, m).entries();
                        let c = 9 * rng.gen_range(0..3u64);
                        let x = Mat2::new([a as i128, b as i128, c as i128, d as i128], m);
                        if x.is_invertible() {
                            break crate::mat2::conjugate(&x, &p).expect("invertible");
                        }
                    })
                    .collect();
                let g = MatGroup::closure(m, &gens)?;
                let below = reduce_group(&g, 2)?;
                let lines: Vec<LineClass> = LineClass::all(below.modulus())
                    .into_iter()
                    .filter(|l| below.generators().iter().all(|h| l.is_fixed_by(h)))
                    .collect();
                for x in g.elements() {
                    if distinct_roots_mod_ell(&x).is_none() {
                        continue;
                    }
                    let fixed = fixed_lines(&x);
                    for l in &lines {
                        t.record(
                            fixed.iter().any(|f| f.reduce(2).ok().as_ref() == Some(l)),
                            || format!("{x} over {l}"),
                        );
                    }
                }
            }
            Ok(t.finish())
        },
    )
}

// ---------------------------------------------------------------- exceptional

/// Every `X` mod 27 that is upper triangular mod 9: lift-exceptional exactly
/// when the diagonal entries are opposite mod 9, and then conjugate into R(27).
pub fn check_uplift_sweep() -> Check {
    run("exceptional: X K sweep mod 27", || {
        let s = uplift_sweep(3, 1)?;
        let detail = format!(
            "{} X: {} Borel, {} lift-exceptional, {} disc violations; {} criterion and {} normalization failures",
            s.examined,
            s.borel,
            s.lift_exceptional,
            s.disc_violation,
            s.criterion_failures.len(),
            s.normalization_failures.len()
        );
        Ok((
            s.passed() && s.lift_exceptional > 0,
            s.examined as u64,
            detail,
        ))
    })
}

/// `A = [[a+3x, b+3y], [3z, a+3w]]` mod 9 with `3 ∤ b` and square disc has `3 | z`.
pub fn check_nondis_even() -> Check {
    run(
        "exceptional: even case, square disc forces 3 | z mod 9",
        || {
            let m = md(3, 2);
            let mut t = Tally::default();
            for a in 1..3i128 {
                for b in 1..3i128 {
                    for x in 0..3i128 {
                        for y in 0..3i128 {
                            for z in 0..3i128 {
                                for w in 0..3i128 {
                                    let g = Mat2::new([a + 3 * x, b + 3 * y, 3 * z, a + 3 * w], m);
                                    let sq = is_square(&invariants_of(&g).disc);
                                    t.record(!sq || z == 0, || format!("{g}"));
                                }
                            }
                        }
                    }
                }
            }
            Ok(t.finish())
        },
    )
}

/// R(27): square discriminants, no common line, no Cartan/Borel splitting;
/// its `e = +1` half fixes `(1, 3)`.
pub fn check_r_group() -> Check {
    run("exceptional: structure of R(27)", || {
        let r = build_r_group(3, 1)?;
        let rep = classify(&r);
        let line = LineClass::through(1, 3, r.modulus()).expect("primitive");
        let half: Vec<Mat2> = r
            .elements()
            .filter(|x| {
                let [a, _, _, d] = x.entries();
                (a + 27 - d) % 9 == 0
            })
            .collect();
        let checks = [
            all_square_disc(&r),
            rep.is_borel.is_none(),
            crate::grp::cartan_borel_factorization(&r).is_none(),
            half.len() * 2 == r.order(),
            half.iter().all(|x| line.is_fixed_by(x)),
        ];
        Ok((
            checks.iter().all(|&c| c),
            checks.len() as u64,
            format!("order {}, checks {checks:?}", r.order()),
        ))
    })
}

/// `H_exc` modulo `l^2` has square discriminants (`l = 5, 7`), and the Klein
/// four subrepresentation claim on `M_2(F_5)`.
pub fn check_h_exc() -> Check {
    run(
        "exceptional: H_exc square discs mod 25, 49 and Klein-four subspaces",
        || {
            let h5 = all_square_disc(&build_h_exc(5, 2)?);
            let h7 = all_square_disc(&build_h_exc(7, 2)?);
            let d4 = verify_d4_subrep_claim()?;
            let ok = h5 && h7 && d4.matches_claim && d4.scalars_admissible && !d4.abc_admissible;
            Ok((
            ok,
            d4.subspaces_examined as u64,
            format!(
                "H(25) {h5}, H(49) {h7}; {} subspaces, {} stable, {} admissible, maximal = A+B, A+C, A+D: {}",
                d4.subspaces_examined, d4.stable_count, d4.admissible_count, d4.matches_claim
            ),
        ))
        },
    )
}

/// `I * lift(H_5exc)` mod 25 for `I = 1 + 5J`, `J` one of `A+B`, `A+C`, `A+D`.
pub fn d4_surviving_groups() -> Result<Vec<MatGroup>> {
    let m = md(5, 2);
    // 7 has order 4 mod 25 and lifts the primitive root 2 mod 5
    let base = [
        Mat2::new([7, 0, 0, 7], m),
        Mat2::new([24, 0, 0, 1], m),
        Mat2::new([0, 1, 1, 0], m),
    ];
    let piece = |c: char| -> [i128; 4] {
        match c {
            'A' => [1, 0, 0, 1],
            'B' => [1, 0, 0, -1],
            'C' => [0, 1, 1, 0],
            _ => [0, 1, -1, 0],
        }
    };
    ["AB", "AC", "AD"]
        .iter()
        .map(|s| {
            let mut gens = base.to_vec();
            for c in s.chars() {
                let [a, b, cc, d] = piece(c);
                gens.push(Mat2::new([1 + 5 * a, 5 * b, 5 * cc, 1 + 5 * d], m));
            }
            MatGroup::closure(m, &gens)
        })
        .collect()
}

/// The `l = 5, 7` genus bounds: the three surviving groups mod 25, `X_0(343)`
/// and `X_R(343)` all have genus at least 2.
pub fn check_vert57_genera() -> Check {
    run(
        "exceptional: surviving l = 5, 7 curves have genus >= 2",
        || {
            let mut genera = Vec::new();
            for g in d4_surviving_groups()? {
                genera.push(genus_of(&g)?.genus);
            }
            genera.push(genus_x0(343)?);
            genera.push(genus_of(&build_r_group(7, 1)?)?.genus);
            Ok((
                genera.iter().all(|&g| g >= 2),
                genera.len() as u64,
                format!("genera {genera:?}"),
            ))
        },
    )
}

/// Each row of `table1.json`: exceptional, and level, genus, determinant columns match.
pub fn check_table1_rows() -> Check {
    run("exceptional: table1.json rows closed from generators", || {
        let mut t = Tally::default();
        for row in table1() {
            let g = row.group()?;
            let d = genus_of(&g)?;
            let ok = is_exceptional_2adic(&g)
                && 2u64.pow(gl2_level(&g)) == row.gl2_level
                && d.genus == row.genus
                && classify(&g).det_surjective == row.det_surjective;
            t.record(ok, || row.label.clone());
        }
        Ok(t.finish())
    })
}

/// Search output for `n = 3, 4` is identical on one and four worker threads.
pub fn check_search_determinism() -> Check {
    run(
        "exceptional: search output independent of worker count",
        || {
            let mut t = Tally::default();
            for n in [3u32, 4] {
                let mut outs = Vec::new();
                for threads in [1usize, 4] {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build()
                        .map_err(|e| crate::Error::Invalid(e.to_string()))?;
                    outs.push(pool.install(|| {
                        search_maximal_exceptional_2adic(n, &SearchOptions::default())
                    })?);
                }
                t.record(outs[0] == outs[1], || format!("n = {n}"));
            }
            Ok(t.finish())
        },
    )
}

// ---------------------------------------------------------------- genus

fn legendre(d: i64, p: u64) -> i64 {
    if p == 2 {
        // (d/2) for d = -1, -3 as needed by the elliptic point counts
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let r = d.rem_euclid(p as i64) as u64;
    if r == 0 {
        0
    } else if pow_mod(r, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Genus of `X_0(N)` from the classical index, elliptic point and cusp counts.
pub fn x0_genus_classical(n: u64) -> u64 {
    let f = factorize(n);
    let mu = f.iter().fold(n, |acc, &(p, _)| acc / p * (p + 1)) as i64;
    let nu2: i64 = if n.is_multiple_of(4) {
        0
    } else {
        f.iter().map(|&(p, _)| 1 + legendre(-4, p)).product()
    };
    let nu3: i64 = if n.is_multiple_of(9) {
        0
    } else {
        f.iter().map(|&(p, _)| 1 + legendre(-3, p)).product()
    };
    let cusps: i64 = (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| euler_phi(gcd(d, n / d)) as i64)
        .sum();
    ((12 + mu - 3 * nu2 - 4 * nu3 - 6 * cusps) / 12) as u64
}

pub fn check_x0_genera() -> Check {
    run("genus: X_0(N) vs classical formula, N <= 72", || {
        let mut t = Tally::default();
        for n in 1..=72 {
            let got = genus_x0(n)?;
            let want = x0_genus_classical(n);
            t.record(got == want, || format!("N = {n}: {got} vs {want}"));
        }
        Ok(t.finish())
    })
}

pub fn check_r27_genus() -> Check {
    run("genus: X_R(27) has genus 4", || {
        let d = genus_of(&build_r_group(3, 1)?)?;
        Ok((d.genus == 4, 1, format!("{d:?}")))
    })
}

fn integral(d: &GenusData) -> bool {
    let twelve = 12 + d.index_mu as i64 - 3 * d.e2 as i64 - 4 * d.e3 as i64 - 6 * d.cusps as i64;
    twelve >= 0 && twelve % 12 == 0 && twelve / 12 == d.genus as i64
}

/// The Riemann-Hurwitz count is a nonnegative multiple of 12 on random
/// subgroups modulo 8, 9, 25, 27; conjugation leaves the genus data unchanged.
pub fn check_genus_integrality(count: usize) -> Check {
    run(
        "genus: integrality on random subgroups mod 8, 9, 25, 27",
        || {
            let mods = [md(2, 3), md(3, 2), md(5, 2), md(3, 3)];
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
            let jobs: Vec<(MatGroup, Mat2)> = (0..count)
                .map(|i| {
                    let m = mods[i % mods.len()];
                    let g = random_group(&mut rng, m, 2)?;
                    Ok((g, random_invertible(&mut rng, m)))
                })
                .collect::<Result<_>>()?;
            let t = jobs
                .par_iter()
                .map(|(g, p)| -> Result<Tally> {
                    let mut t = Tally::default();
                    let d = genus_of(g)?;
                    t.record(integral(&d), || format!("{d:?}"));
                    if t.failures == 0 && g.order() % 7 == 0 {
                        t.record(genus_of(&g.conjugate_by(p)?)? == d, || {
                            format!("conjugation changes {d:?}")
                        });
                    }
                    Ok(t)
                })
                .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
            Ok(t.finish())
        },
    )
}

/// Coset degrees multiply in CRT products.
pub fn check_crt_degrees() -> Check {
    run("genus: CRT product degrees multiply", || {
        let mut t = Tally::default();
        for (a, b) in [(8u64, 9u64), (4, 25), (16, 3), (27, 5)] {
            let da = x0_product(a)?.coset_action()?.0.degree;
            let db = x0_product(b)?.coset_action()?.0.degree;
            let dab = x0_product(a * b)?.coset_action()?.0.degree;
            t.record(dab == da * db, || format!("{a} x {b}"));
        }
        let h = build_h_exc(5, 1)?;
        let r = build_r_group(3, 1)?;
        let da = genus_of(&h)?.index_mu;
        let db = genus_of(&r)?.index_mu;
        let prod = fiber_product(&[h, r])?.genus()?;
        t.record(prod.index_mu == da * db && integral(&prod), || {
            "H5exc x R(27)".into()
        });
        Ok(t.finish())
    })
}

pub fn check_q_list() -> Check {
    run(
        "genus: rational exception list and fiber-product sweeps",
        || {
            let rep = assemble_q_exception_list(&table1())?;
            let want = vec![5, 7, 8, 10, 16, 24, 25, 32, 40, 49, 50, 72];
            let mut gx: Vec<(String, String)> = rep
                .g_times_x0
                .iter()
                .map(|e| (e.left.clone(), e.right.clone()))
                .collect();
            gx.sort();
            let want_gx: Vec<(String, String)> = ["2147", "2177"]
                .iter()
                .flat_map(|g| {
                    ["X0(3)", "X0(5)", "X0(9)"]
                        .iter()
                        .map(move |n| (g.to_string(), n.to_string()))
                })
                .collect();
            let hx: Vec<(String, String)> = rep
                .h_times_x0
                .iter()
                .map(|e| (e.left.clone(), e.right.clone()))
                .collect();
            let ok = rep.list == want
                && rep.g_times_h.iter().all(|e| e.genus > 1)
                && gx == want_gx
                && hx == [("H5exc".to_string(), "X0(2)".to_string())];
            Ok((ok, rep.list.len() as u64, format!("list {:?}", rep.list)))
        },
    )
}

// ---------------------------------------------------------------- cm

pub const CM_DISCS: [i64; 6] = [-3, -4, -7, -8, -11, -20];

fn cm_grid() -> Vec<(u64, u32, ImagQuadDisc)> {
    let mut out = Vec::new();
    for ell in [2u64, 3, 5, 7] {
        for n in 1..=3 {
            for d in CM_DISCS {
                out.push((ell, n, ImagQuadDisc::new(d).expect("fundamental")));
            }
        }
    }
    out
}

/// Cartan orders against unit counts, commutativity, and normalization by
/// complex conjugation, over the full grid.
pub fn check_cm_cartan() -> Check {
    run("cm: Cartan orders, commutativity, normalizer", || {
        let t = cm_grid()
            .par_iter()
            .map(|&(ell, n, d)| -> Result<Tally> {
                let mut t = Tally::default();
                let m = md(ell, n);
                let q = m.modulus() as i128;
                let brute = (0..q)
                    .flat_map(|a| (0..q).map(move |b| (a, b)))
                    .filter(|&(a, b)| g_ab(a, b, d, m).is_invertible())
                    .count();
                let what = || format!("l={ell} n={n} d={}", d.value());
                t.record(brute as u64 == cartan_order(ell, n, d), what);
                let c = build_cartan(d, m)?;
                t.record(c.order() == brute, what);
                let gens = c.generators();
                t.record(
                    gens.iter()
                        .all(|x| gens.iter().all(|y| x.mul(y) == y.mul(x))),
                    what,
                );
                t.record(c.conjugate_by(&conjugation_element(d, m))? == c, what);
                Ok(t)
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
        Ok(t.finish())
    })
}

/// Exhaustive scans behind the prime-power case analysis, compared with the
/// reported cases: the Cartan group passes entirely exactly in the split and
/// ramified `n = 1` cases; otherwise the passing subgroup (when it is one) has
/// index at least the stated bound.
pub fn check_cm_constraints() -> Check {
    run("cm: exhaustive g_{a,b} scans vs case verdicts", || {
        let t = cm_grid()
            .par_iter()
            .map(|&(ell, n, d)| -> Result<Tally> {
                let mut t = Tally::default();
                let m = md(ell, n);
                let what = || format!("l={ell} n={n} d={}", d.value());
                t.record(verify_gab_rule(ell, n, d)?, || format!("gab {}", what()));
                t.record(verify_trace_zero_coset(ell, n, d)?, || {
                    format!("tz {}", what())
                });
                let q = m.modulus() as i128;
                let all_pass = (0..q)
                    .flat_map(|a| (0..q).map(move |b| (a, b)))
                    .map(|(a, b)| g_ab(a, b, d, m))
                    .filter(|g| g.is_invertible())
                    .all(|g| char_poly_has_root(&g));
                let flags = FieldFlags {
                    f_in_k: true,
                    ..FieldFlags::default()
                };
                let rep = classify_prime_power_cm(ell, n, d, &flags)?;
                let expected_all = d.splitting(ell) == Splitting::Split
                    || (n == 1 && d.splitting(ell) == Splitting::Ramified);
                t.record(all_pass == expected_all, || {
                    format!("allpass={all_pass} {}", what())
                });
                t.record((rep.case != CmCase::IndexBound) == all_pass, || {
                    format!("case {:?} {}", rep.case, what())
                });
                if let (CmCase::IndexBound, Some(idx)) = (rep.case, rep.exhaustive_index) {
                    t.record(idx >= rep.index_bound, || {
                        format!("{}: index {idx} < bound {}", what(), rep.index_bound)
                    });
                }
                t.record(rep.index_bound as f64 >= rep.quarter_bound - 1e-9, || {
                    format!("quarter {}", what())
                });
                Ok(t)
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
        Ok(t.finish())
    })
}

/// Random `(N, d, flags)`: the factorization multiplies back to `N`, the parts
/// are pairwise coprime, and the bound on `A` grows with `index_d`.
pub fn check_abc_random(count: usize) -> Check {
    run("cm: abc factorization invariants on random inputs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
        let mut t = Tally::default();
        for _ in 0..count {
            let n = rng.gen_range(1..1_000_000u64);
            let d = ImagQuadDisc::new(CM_DISCS[rng.gen_range(0..CM_DISCS.len())])?;
            let index_d = rng.gen_range(1..6);
            let table: Vec<FieldFlags> = (0..8)
                .map(|_| FieldFlags {
                    f_in_k: rng.gen_bool(0.3),
                    sqrt_ell_in_k: rng.gen(),
                    kf_eq_k_sqrt_neg_ell: rng.gen(),
                    sqrt2_in_k: rng.gen(),
                    kf_eq_k_sqrt_neg2: rng.gen(),
                    degree_k: rng.gen_range(1..5),
                    index_d,
                })
                .collect();
            let f = abc_factorization_with(n, d, |ell| table[(ell % 8) as usize])?;
            let ok = f.a * f.b * f.c == n
                && gcd(f.a, f.b) == 1
                && gcd(f.a, f.c) == 1
                && gcd(f.b, f.c) == 1
                && f.a_bound == a_bound(d, index_d)
                && a_bound(d, index_d) <= a_bound(d, index_d + 1);
            t.record(ok, || format!("N={n} d={} -> {f:?}", d.value()));
        }
        Ok(t.finish())
    })
}

// ---------------------------------------------------------------- frobdata

/// The bundled witnesses: 53 mod 7^3, none mod 7^2, 11 mod 2^5.
pub fn check_frob_witnesses() -> Check {
    run("frobdata: bundled witnesses", || {
        let j7 = parse_ap_file(&read_fixture("j2268945_128.ap")?)?;
        let j1728 = parse_ap_file(&read_fixture("j1728.ap")?)?;
        let w343 = find_witness(&j7, md(7, 3))?.map(|r| r.p);
        let w49 = find_witness(&j7, md(7, 2))?.map(|r| r.p);
        let w32 = find_witness(&j1728, md(2, 5))?.map(|r| r.p);
        let ok = w343 == Some(53) && w49.is_none() && w32 == Some(11);
        Ok((
            ok,
            3,
            format!("7^3 -> {w343:?}, 7^2 -> {w49:?}, 2^5 -> {w32:?}"),
        ))
    })
}

fn random_records(rng: &mut impl Rng, count: usize) -> Vec<FrobRecord> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = rng.gen_range(2..5000u64);
        if !is_prime(p) {
            continue;
        }
        let bound = (4.0 * p as f64).sqrt().floor() as i64;
        let a = rng.gen_range(-bound..=bound);
        if let Ok(r) = FrobRecord::new(p, a) {
            out.push(r);
        }
    }
    out
}

/// Monotonicity under reduction, agreement with the discriminant test for odd
/// `l`, and prefix determinism of the witness search.
pub fn check_frob_properties() -> Check {
    run(
        "frobdata: monotonicity, discriminant form, prefix determinism",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
            let recs = random_records(&mut rng, 2000);
            let mut t = Tally::default();
            for ell in [2u64, 3, 5, 7] {
                for rec in recs.iter().filter(|r| r.p != ell) {
                    let passes: Vec<bool> = (1..=6)
                        .map(|n| frob_passes(rec, md(ell, n)))
                        .collect::<Result<_>>()?;
                    t.record(passes.windows(2).all(|w| w[0] || !w[1]), || {
                        format!("{rec:?} mod {ell}^k")
                    });
                    if ell != 2 {
                        for n in 1..=6 {
                            let m = md(ell, n);
                            let disc = Residue::new(
                                rec.a_p as i128 * rec.a_p as i128 - 4 * rec.p as i128,
                                m,
                            );
                            t.record(passes[n as usize - 1] == is_square(&disc), || {
                                format!("{rec:?} mod {ell}^{n}")
                            });
                        }
                    }
                }
                let m = md(ell, 3);
                let usable: Vec<FrobRecord> = recs.iter().copied().filter(|r| r.p != ell).collect();
                let w = find_witness(&usable, m)?;
                if let Some(w) = w {
                    let pos = usable
                        .iter()
                        .position(|r| *r == w)
                        .expect("witness comes from the input");
                    let mut altered = usable[..=pos].to_vec();
                    altered.extend(
                        random_records(&mut rng, 50)
                            .into_iter()
                            .filter(|r| r.p != ell),
                    );
                    t.record(find_witness(&altered, m)? == Some(w), || {
                        format!("prefix mod {ell}^3")
                    });
                }
            }
            Ok(t.finish())
        },
    )
}

// ---------------------------------------------------------------- driver

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Samples per sampled family in the eigenline checks.
    pub samples: usize,
    /// Random subgroups for the genus integrality check.
    pub random_groups: usize,
    /// Random inputs for the abc check.
    pub abc_inputs: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 100_000,
            random_groups: 1000,
            abc_inputs: 100,
        }
    }
}

/// Short names of the checks, in run order.
pub fn check_names() -> Vec<&'static str> {
    jobs(&VerifyOptions::default())
        .into_iter()
        .map(|(k, _)| k)
        .collect()
}

type Job = (&'static str, Box<dyn Fn() -> Check>);

fn jobs(opts: &VerifyOptions) -> Vec<Job> {
    let o = *opts;
    vec![
        ("squares", Box::new(check_squares)),
        ("quad-roots", Box::new(check_quad_roots)),
        ("unit-squares", Box::new(check_unit_squares)),
        ("mat2-invariants", Box::new(check_mat2_invariants)),
        ("hensel", Box::new(check_hensel_exhaustive)),
        (
            "hensel-sampled",
            Box::new(move || check_hensel_sampled(o.samples)),
        ),
        ("jordan", Box::new(check_jordan_exhaustive)),
        (
            "jordan-sampled",
            Box::new(move || check_jordan_sampled(o.samples)),
        ),
        ("two-jordan", Box::new(check_two_jordan)),
        ("group-basics", Box::new(check_group_basics)),
        ("square-disc-elements", Box::new(check_square_disc_elements)),
        ("dis-lifting", Box::new(check_dis_lifting)),
        ("kevec", Box::new(check_kevec)),
        ("uplift-sweep", Box::new(check_uplift_sweep)),
        ("nondis-even", Box::new(check_nondis_even)),
        ("r-group", Box::new(check_r_group)),
        ("h-exc", Box::new(check_h_exc)),
        ("vert57-genera", Box::new(check_vert57_genera)),
        ("table1", Box::new(check_table1_rows)),
        ("search-determinism", Box::new(check_search_determinism)),
        ("x0", Box::new(check_x0_genera)),
        ("r27-genus", Box::new(check_r27_genus)),
        (
            "genus-integrality",
            Box::new(move || check_genus_integrality(o.random_groups)),
        ),
        ("crt-degrees", Box::new(check_crt_degrees)),
        ("q-list", Box::new(check_q_list)),
        ("cm-cartan", Box::new(check_cm_cartan)),
        ("cm-constraints", Box::new(check_cm_constraints)),
        ("abc", Box::new(move || check_abc_random(o.abc_inputs))),
        ("frob-witnesses", Box::new(check_frob_witnesses)),
        ("frob-properties", Box::new(check_frob_properties)),
    ]
}

/// The checks named in `only` (all when empty), in a fixed order; `on_done`
/// sees each result as it finishes.
pub fn run_selected(
    opts: &VerifyOptions,
    only: &[String],
    mut on_done: impl FnMut(&Check),
) -> Vec<Check> {
    jobs(opts)
        .into_iter()
        .filter(|(k, _)| only.is_empty() || only.iter().any(|o| o == k))
        .map(|(_, job)| {
            let c = job();
            on_done(&c);
            c
        })
        .collect()
}

/// Every check.
pub fn run_all(opts: &VerifyOptions, on_done: impl FnMut(&Check)) -> Vec<Check> {
    run_selected(opts, &[], on_done)
}
