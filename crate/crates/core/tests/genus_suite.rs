use isogeny_lgp_core::exceptional::{build_h_exc, build_r_group, is_exceptional_2adic};
use isogeny_lgp_core::fixtures::table1;
use isogeny_lgp_core::genus::{
    assemble_q_exception_list, borel_group, fiber_product, genus_of, genus_x0, x0_product,
};
use isogeny_lgp_core::grp::gl2_level;
use isogeny_lgp_core::modring::{factorize, gcd};
use isogeny_lgp_core::{MatGroup, PrimePowerModulus};

fn phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

fn legendre_like(d: i64, p: u64) -> i64 {
    // Kronecker symbol (d/p) for d in {-1, -3}
    if p == 2 {
        return if d == -1 { 0 } else { -1 };
    }
    if p == 3 && d == -3 {
        return 0;
    }
    let r = ((d % p as i64) + p as i64) as u64 % p;
    let e = isogeny_lgp_core::modring::pow_mod(r, (p - 1) / 2, p);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// Classical formula for the genus of X_0(N).
fn x0_oracle(n: u64) -> u64 {
    let f = factorize(n);
    let mu: u64 = f.iter().fold(n, |acc, &(p, _)| acc / p * (p + 1));
    let nu2: i64 = if n.is_multiple_of(4) {
        0
    } else {
        f.iter().map(|&(p, _)| 1 + legendre_like(-1, p)).product()
    };
    let nu3: i64 = if n.is_multiple_of(9) {
        0
    } else {
        f.iter().map(|&(p, _)| 1 + legendre_like(-3, p)).product()
    };
    let cusps: u64 = (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| phi(gcd(d, n / d)))
        .sum();
    let twelve = 12 + mu as i64 - 3 * nu2 - 4 * nu3 - 6 * cusps as i64;
    assert_eq!(twelve % 12, 0);
    (twelve / 12) as u64
}

#[test]
fn x0_matches_classical_formula() {
    for n in 1..=72 {
        assert_eq!(genus_x0(n).unwrap(), x0_oracle(n), "N = {n}");
    }
    assert_eq!(genus_x0(81).unwrap(), 4);
}

#[test]
fn table_rows_reproduce_level_and_genus() {
    for row in table1() {
        let g = row.group().unwrap();
        assert!(is_exceptional_2adic(&g), "{}", row.label);
        assert_eq!(2u64.pow(gl2_level(&g)), row.gl2_level, "{}", row.label);
        let d = genus_of(&g).unwrap();
        assert_eq!(d.genus, row.genus, "{}", row.label);
        assert!(!d.minus_one_adjoined);
        let surj = isogeny_lgp_core::grp::classify(&g).det_surjective;
        assert_eq!(surj, row.det_surjective, "{}", row.label);
    }
}

#[test]
fn fiber_product_examples() {
    let rows = table1();
    let g2147 = rows
        .iter()
        .find(|r| r.label == "2147")
        .unwrap()
        .group()
        .unwrap();
    assert!(
        fiber_product(&[g2147.clone(), borel_group(3, 1).unwrap()])
            .unwrap()
            .genus()
            .unwrap()
            .genus
            <= 1
    );
    let md = PrimePowerModulus::new(3, 1).unwrap();
    let ring = isogeny_lgp_core::grp::packed::PackedRing::new(md);
    let full: MatGroup = MatGroup::closure(
        md,
        &ring
            .gl2()
            .iter()
            .map(|&x| ring.to_mat(x))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(
        fiber_product(&[g2147.clone(), full])
            .unwrap()
            .genus()
            .unwrap()
            .genus,
        genus_of(&g2147).unwrap().genus
    );
    let h5 = build_h_exc(5, 1).unwrap();
    assert!(
        fiber_product(&[h5, borel_group(2, 1).unwrap()])
            .unwrap()
            .genus()
            .unwrap()
            .genus
            <= 1
    );
}

#[test]
fn degrees_multiply_in_products() {
    let a = x0_product(8).unwrap().coset_action().unwrap().0.degree;
    let b = x0_product(9).unwrap().coset_action().unwrap().0.degree;
    assert_eq!(
        x0_product(72).unwrap().coset_action().unwrap().0.degree,
        a * b
    );
}

#[test]
fn conjugation_invariance() {
    let r = build_r_group(3, 1).unwrap();
    let md = r.modulus();
    let p = isogeny_lgp_core::Mat2::new([2, 5, 7, 3], md);
    assert_eq!(
        genus_of(&r.conjugate_by(&p).unwrap()).unwrap(),
        genus_of(&r).unwrap()
    );
}

#[test]
fn q_exception_list() {
    let report = assemble_q_exception_list(&table1()).unwrap();
    assert_eq!(
        report.list,
        vec![5, 7, 8, 10, 16, 24, 25, 32, 40, 49, 50, 72]
    );
    assert!(report.g_times_h.iter().all(|e| e.genus > 1));
    let mut gx: Vec<(String, String)> = report
        .g_times_x0
        .iter()
        .map(|e| (e.left.clone(), e.right.clone()))
        .collect();
    gx.sort();
    let expected: Vec<(String, String)> = ["2147", "2177"]
        .iter()
        .flat_map(|g| {
            ["X0(3)", "X0(5)", "X0(9)"]
                .iter()
                .map(move |n| (g.to_string(), n.to_string()))
        })
        .collect();
    assert_eq!(gx, expected);
    let hx: Vec<(String, String)> = report
        .h_times_x0
        .iter()
        .map(|e| (e.left.clone(), e.right.clone()))
        .collect();
    assert_eq!(hx, vec![("H5exc".to_string(), "X0(2)".to_string())]);
}
