//! Python bindings: subgroups of `GL_2(Z/l^n Z)`, the 2-adic exceptional
//! search, genera, CM case reports and Frobenius witnesses.

// false positive from the pyo3 0.22 function macros
#![allow(clippy::useless_conversion)]

use isogeny_lgp_core as core;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use core::cm::{FieldFlags, ImagQuadDisc};
use core::exceptional::search::{search_maximal_exceptional_2adic, SearchOptions};
use core::{Error, Mat2, MatGroup, PrimePowerModulus};

fn err(e: Error) -> PyErr {
    match e {
        Error::Invalid(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<PyObject> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py
        .import_bound("json")?
        .call_method1("loads", (s,))?
        .unbind())
}

fn modulus(prime: u64, exponent: u32) -> PyResult<PrimePowerModulus> {
    PrimePowerModulus::new(prime, exponent).map_err(err)
}

fn mat(rows: [[i64; 2]; 2], md: PrimePowerModulus) -> Mat2 {
    let [[a, b], [c, d]] = rows;
    Mat2::new([a as i128, b as i128, c as i128, d as i128], md)
}

fn rows(m: &Mat2) -> [[u64; 2]; 2] {
    let [a, b, c, d] = m.entries();
    [[a, b], [c, d]]
}

/// A subgroup of `GL_2(Z/p^k Z)`, stored by its elements.
#[pyclass(name = "Group", module = "isogeny_lgp", frozen)]
struct PyGroup {
    inner: MatGroup,
}

#[pymethods]
impl PyGroup {
    /// Closure of `generators` (each `[[a, b], [c, d]]`) modulo `prime^exponent`.
    #[new]
    #[pyo3(signature = (prime, exponent, generators, cap = None))]
    fn new(
        prime: u64,
        exponent: u32,
        generators: Vec<[[i64; 2]; 2]>,
        cap: Option<usize>,
    ) -> PyResult<Self> {
        let md = modulus(prime, exponent)?;
        let gens: Vec<Mat2> = generators.into_iter().map(|g| mat(g, md)).collect();
        let inner = match cap {
            Some(c) => MatGroup::closure_capped(md, &gens, c),
            None => MatGroup::closure(md, &gens),
        }
        .map_err(err)?;
        Ok(PyGroup { inner })
    }

    #[getter]
    fn prime(&self) -> u64 {
        self.inner.modulus().prime()
    }

    #[getter]
    fn exponent(&self) -> u32 {
        self.inner.modulus().exponent()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn __len__(&self) -> usize {
        self.inner.order()
    }

    fn __repr__(&self) -> String {
        format!(
            "Group(mod {}, order {})",
            self.inner.modulus(),
            self.inner.order()
        )
    }

    fn generators(&self) -> Vec<[[u64; 2]; 2]> {
        self.inner
            .with_small_generators()
            .generators()
            .iter()
            .map(rows)
            .collect()
    }

    fn elements(&self) -> Vec<[[u64; 2]; 2]> {
        self.inner.elements().map(|m| rows(&m)).collect()
    }

    fn __contains__(&self, m: [[i64; 2]; 2]) -> bool {
        self.inner.contains(&mat(m, self.inner.modulus()))
    }

    fn is_subgroup_of(&self, other: &PyGroup) -> bool {
        self.inner.is_subgroup_of(&other.inner)
    }

    /// Smallest `k` such that the group is the full preimage of its image mod `p^k`.
    fn gl2_level(&self) -> u32 {
        core::grp::gl2_level(&self.inner)
    }

    /// Every element has a root of its characteristic polynomial.
    fn all_charpoly_root(&self) -> bool {
        core::grp::all_charpoly_root(&self.inner)
    }

    fn all_square_disc(&self) -> bool {
        core::grp::all_square_disc(&self.inner)
    }

    /// `(k, n - k)` when the group is Cartan mod `p^k` and Borel mod `p^(n-k)`.
    fn cartan_borel_factorization(&self) -> Option<(u32, u32)> {
        core::grp::cartan_borel_factorization(&self.inner)
    }

    fn is_exceptional_2adic(&self) -> bool {
        core::exceptional::is_exceptional_2adic(&self.inner)
    }

    /// A conjugator `P` with `P G P^-1` inside `other`, if one exists.
    fn conjugator_into(&self, other: &PyGroup) -> Option<[[u64; 2]; 2]> {
        core::grp::find_conjugator_into(&self.inner, &other.inner).map(|p| rows(&p))
    }

    /// Genus data of the associated modular curve, as a dict.
    fn genus(&self, py: Python<'_>) -> PyResult<PyObject> {
        let g = core::genus::genus_of(&self.inner).map_err(err)?;
        to_json(py, &g)
    }
}

/// Maximal exceptional subgroups of `GL_2(Z/2^n Z)` up to conjugacy.
#[pyfunction]
#[pyo3(signature = (n, det_surjective = false, cap = None))]
fn search_exceptional_2adic(
    py: Python<'_>,
    n: u32,
    det_surjective: bool,
    cap: Option<usize>,
) -> PyResult<Vec<PyGroup>> {
    let mut opts = SearchOptions {
        det_surjective_only: det_surjective,
        ..SearchOptions::default()
    };
    if let Some(c) = cap {
        opts.cap = c;
    }
    let groups = py
        .allow_threads(|| search_maximal_exceptional_2adic(n, &opts))
        .map_err(err)?;
    Ok(groups.into_iter().map(|inner| PyGroup { inner }).collect())
}

/// The group `R` modulo `l^(2m+1)` every lift-exceptional group conjugates into.
#[pyfunction]
fn r_group(ell: u64, m: u32) -> PyResult<PyGroup> {
    core::exceptional::build_r_group(ell, m)
        .map(|inner| PyGroup { inner })
        .map_err(err)
}

#[pyfunction]
fn genus_x0(n: u64) -> PyResult<u64> {
    core::genus::genus_x0(n).map_err(err)
}

/// Roots of `x^2 + b x + c` modulo `prime^exponent`.
#[pyfunction]
fn quad_roots(b: i64, c: i64, prime: u64, exponent: u32) -> PyResult<Vec<u64>> {
    let md = modulus(prime, exponent)?;
    let r = |v: i64| core::Residue::new(v as i128, md);
    Ok(core::modring::quad_roots(&r(b), &r(c), md)
        .iter()
        .map(|x| x.value())
        .collect())
}

fn disc(d: i64) -> PyResult<ImagQuadDisc> {
    ImagQuadDisc::new(d).map_err(err)
}

fn flags_from(kw: Option<&Bound<'_, PyDict>>) -> PyResult<FieldFlags> {
    let mut f = FieldFlags::default();
    let Some(kw) = kw else {
        return Ok(f);
    };
    for (k, v) in kw.iter() {
        let key: String = k.extract()?;
        match key.as_str() {
            "f_in_k" => f.f_in_k = v.extract()?,
            "sqrt_ell_in_k" => f.sqrt_ell_in_k = v.extract()?,
            "kf_eq_sqrt_neg_ell" => f.kf_eq_k_sqrt_neg_ell = v.extract()?,
            "sqrt2_in_k" => f.sqrt2_in_k = v.extract()?,
            "kf_eq_sqrt_neg2" => f.kf_eq_k_sqrt_neg2 = v.extract()?,
            "deg_k" => f.degree_k = v.extract()?,
            "index_d" => f.index_d = v.extract()?,
            other => return Err(PyValueError::new_err(format!("unknown flag {other}"))),
        }
    }
    Ok(f)
}

#[pyfunction]
fn cartan_order(ell: u64, n: u32, d: i64) -> PyResult<u64> {
    Ok(core::cm::cartan_order(ell, n, disc(d)?))
}

/// Case report for `l^n` and discriminant `d`; flags as keyword arguments.
#[pyfunction]
#[pyo3(signature = (ell, n, d, **flags))]
fn cm_classify(
    py: Python<'_>,
    ell: u64,
    n: u32,
    d: i64,
    flags: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyObject> {
    let rep =
        core::cm::classify_prime_power_cm(ell, n, disc(d)?, &flags_from(flags)?).map_err(err)?;
    to_json(py, &rep)
}

/// `(A, B, C, A_bound)` for `N`.
#[pyfunction]
#[pyo3(signature = (n, d, **flags))]
fn cm_abc(n: u64, d: i64, flags: Option<&Bound<'_, PyDict>>) -> PyResult<(u64, u64, u64, u64)> {
    let f = core::cm::abc_factorization(n, disc(d)?, &flags_from(flags)?).map_err(err)?;
    Ok((f.a, f.b, f.c, f.a_bound))
}

/// First `(p, a_p)` in `text` ruling out exceptionality mod `prime^exponent`.
#[pyfunction]
fn frob_witness(text: &str, prime: u64, exponent: u32) -> PyResult<Option<(u64, i64)>> {
    let records = core::frobdata::parse_ap_file(text).map_err(err)?;
    let w = core::frobdata::find_witness(&records, modulus(prime, exponent)?).map_err(err)?;
    Ok(w.map(|r| (r.p, r.a_p)))
}

#[pyfunction]
fn verify_checks() -> Vec<&'static str> {
    core::verify::check_names()
}

/// Run the named checks (all when empty) and return one dict per check.
#[pyfunction]
#[pyo3(signature = (only = Vec::new(), samples = 100_000))]
fn verify(py: Python<'_>, only: Vec<String>, samples: usize) -> PyResult<PyObject> {
    let opts = core::verify::VerifyOptions {
        samples,
        ..Default::default()
    };
    let checks = py.allow_threads(|| core::verify::run_selected(&opts, &only, |_| {}));
    to_json(py, &checks)
}

#[pymodule]
fn isogeny_lgp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_function(wrap_pyfunction!(search_exceptional_2adic, m)?)?;
    m.add_function(wrap_pyfunction!(r_group, m)?)?;
    m.add_function(wrap_pyfunction!(genus_x0, m)?)?;
    m.add_function(wrap_pyfunction!(quad_roots, m)?)?;
    m.add_function(wrap_pyfunction!(cartan_order, m)?)?;
    m.add_function(wrap_pyfunction!(cm_classify, m)?)?;
    m.add_function(wrap_pyfunction!(cm_abc, m)?)?;
    m.add_function(wrap_pyfunction!(frob_witness, m)?)?;
    m.add_function(wrap_pyfunction!(verify_checks, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
