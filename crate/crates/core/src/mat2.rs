//! 2x2 matrices over `Z/l^n Z` and the lines they fix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modring::{quad_roots, PrimePowerModulus, Residue};

/// A 2x2 matrix `[[a, b], [c, d]]` over `Z/l^n Z`, acting on column vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    modulus: PrimePowerModulus,
}

/// Trace, determinant and discriminant `tr^2 - 4 det` of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Invariants {
    pub trace: Residue,
    pub det: Residue,
    pub disc: Residue,
}

impl Mat2 {
    pub fn new(entries: [i128; 4], modulus: PrimePowerModulus) -> Self {
        let [a, b, c, d] = entries.map(|e| modulus.reduce(e));
        Mat2 {
            a,
            b,
            c,
            d,
            modulus,
        }
    }

    pub(crate) fn from_raw(entries: [u64; 4], modulus: PrimePowerModulus) -> Self {
        let [a, b, c, d] = entries;
        Mat2 {
            a,
            b,
            c,
            d,
            modulus,
        }
    }

    pub fn identity(modulus: PrimePowerModulus) -> Self {
        Mat2::scalar(1, modulus)
    }

    pub fn scalar(s: i128, modulus: PrimePowerModulus) -> Self {
        Mat2::new([s, 0, 0, s], modulus)
    }

    pub fn entries(&self) -> [u64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let m = &self.modulus;
        let e = |x: u64, y: u64, z: u64, w: u64| m.add(m.mul(x, y), m.mul(z, w));
        Mat2 {
            a: e(self.a, o.a, self.b, o.c),
            b: e(self.a, o.b, self.b, o.d),
            c: e(self.c, o.a, self.d, o.c),
            d: e(self.c, o.b, self.d, o.d),
            modulus: self.modulus,
        }
    }

    pub fn pow(&self, mut e: u64) -> Mat2 {
        let mut acc = Mat2::identity(self.modulus);
        let mut base = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn trace(&self) -> Residue {
        Residue::new(self.modulus.add(self.a, self.d) as i128, self.modulus)
    }

    pub fn det(&self) -> Residue {
        let m = &self.modulus;
        Residue::new(
            m.sub(m.mul(self.a, self.d), m.mul(self.b, self.c)) as i128,
            self.modulus,
        )
    }

    pub fn is_invertible(&self) -> bool {
        self.det().is_unit()
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let m = &self.modulus;
        let inv = self.det().inv()?.value();
        Some(Mat2 {
            a: m.mul(self.d, inv),
            b: m.mul(m.neg(self.b), inv),
            c: m.mul(m.neg(self.c), inv),
            d: m.mul(self.a, inv),
            modulus: self.modulus,
        })
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2 {
            b: self.c,
            c: self.b,
            ..*self
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.b == 0 && self.c == 0 && self.a == self.d
    }

    pub fn is_identity(&self) -> bool {
        self.is_scalar() && self.a == 1 % self.modulus.modulus()
    }

    pub fn apply(&self, v: (u64, u64)) -> (u64, u64) {
        let m = &self.modulus;
        (
            m.add(m.mul(self.a, v.0), m.mul(self.b, v.1)),
            m.add(m.mul(self.c, v.0), m.mul(self.d, v.1)),
        )
    }

    /// Entrywise reduction modulo `l^k`.
    pub fn reduce(&self, k: u32) -> Result<Mat2> {
        if k == 0 || k > self.modulus.exponent() {
            return Err(Error::Reduction {
                from: self.modulus.exponent(),
                to: k,
            });
        }
        let target = self.modulus.with_exponent(k)?;
        let q = target.modulus();
        Ok(Mat2 {
            a: self.a % q,
            b: self.b % q,
            c: self.c % q,
            d: self.d % q,
            modulus: target,
        })
    }

    /// Reinterpret the integer entries modulo another power of the same prime.
    pub fn lift_entries(&self, target: PrimePowerModulus) -> Mat2 {
        Mat2::new(self.entries().map(|e| e as i128), target)
    }

    pub fn parse(text: &str, modulus: PrimePowerModulus) -> Result<Mat2> {
        let lit: MatLiteral = text.parse()?;
        Ok(lit.to_mat(modulus))
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

/// A matrix literal `[[a,b],[c,d]]` with integer entries, before a modulus is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatLiteral(pub [[i64; 2]; 2]);

impl MatLiteral {
    pub fn to_mat(&self, modulus: PrimePowerModulus) -> Mat2 {
        let [[a, b], [c, d]] = self.0;
        Mat2::new([a as i128, b as i128, c as i128, d as i128], modulus)
    }

    pub fn from_mat(m: &Mat2) -> Self {
        let [a, b, c, d] = m.entries().map(|e| e as i64);
        MatLiteral([[a, b], [c, d]])
    }
}

impl FromStr for MatLiteral {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse {
            line: 0,
            message: format!("bad matrix literal {s:?}"),
        };
        let inner = cleaned
            .strip_prefix("[[")
            .and_then(|t| t.strip_suffix("]]"))
            .ok_or_else(bad)?;
        let rows: Vec<&str> = inner.split("],[").collect();
        if rows.len() != 2 {
            return Err(bad());
        }
        let mut out = [[0i64; 2]; 2];
        for (i, row) in rows.iter().enumerate() {
            let vals: Vec<&str> = row.split(',').collect();
            if vals.len() != 2 {
                return Err(bad());
            }
            for (j, v) in vals.iter().enumerate() {
                out[i][j] = v.parse().map_err(|_| bad())?;
            }
        }
        Ok(MatLiteral(out))
    }
}

impl fmt::Display for MatLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = self.0;
        write!(f, "[[{a},{b}],[{c},{d}]]")
    }
}

/// Trace, determinant and discriminant.
pub fn invariants_of(m: &Mat2) -> Invariants {
    let trace = m.trace();
    let det = m.det();
    let disc = trace.mul(&trace).sub(&det.mul(&m.modulus.residue(4)));
    Invariants { trace, det, disc }
}

/// Whether the characteristic polynomial has a root modulo `l^n`.
pub fn char_poly_has_root(m: &Mat2) -> bool {
    let inv = invariants_of(m);
    !quad_roots(&inv.trace.neg(), &inv.det, m.modulus).is_empty()
}

/// A cyclic direct summand of `(Z/l^n Z)^2`, stored in canonical form:
/// `(1, y)` when the first coordinate is a unit, otherwise `(x, 1)` with `l | x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineClass {
    x: u64,
    y: u64,
    modulus: PrimePowerModulus,
}

impl LineClass {
    /// Canonical line through a primitive vector; `None` if the vector is not primitive.
    pub fn through(x: i128, y: i128, modulus: PrimePowerModulus) -> Option<LineClass> {
        let (x, y) = (modulus.reduce(x), modulus.reduce(y));
        if modulus.is_unit(x) {
            let inv = modulus.inv(x)?;
            Some(LineClass {
                x: 1 % modulus.modulus(),
                y: modulus.mul(y, inv),
                modulus,
            })
        } else if modulus.is_unit(y) {
            let inv = modulus.inv(y)?;
            Some(LineClass {
                x: modulus.mul(x, inv),
                y: 1 % modulus.modulus(),
                modulus,
            })
        } else {
            None
        }
    }

    pub fn rep(&self) -> (u64, u64) {
        (self.x, self.y)
    }

    pub fn modulus(&self) -> PrimePowerModulus {
        self.modulus
    }

    /// All `l^(n-1) (l+1)` lines modulo `l^n`, in canonical order.
    pub fn all(modulus: PrimePowerModulus) -> Vec<LineClass> {
        let m = modulus.modulus();
        let one = 1 % m;
        let mut out: Vec<LineClass> = (0..m).map(|y| LineClass { x: one, y, modulus }).collect();
        out.extend((0..m).step_by(modulus.prime() as usize).map(|x| LineClass {
            x,
            y: one,
            modulus,
        }));
        out
    }

    pub fn is_fixed_by(&self, g: &Mat2) -> bool {
        let (u, v) = g.apply((self.x, self.y));
        let m = &self.modulus;
        m.mul(self.x, v) == m.mul(self.y, u)
    }

    /// The eigenvalue of `g` on this line; `g` must fix the line.
    pub fn eigenvalue(&self, g: &Mat2) -> u64 {
        let (u, v) = g.apply((self.x, self.y));
        let m = &self.modulus;
        if m.is_unit(self.x) {
            m.mul(u, m.inv(self.x).unwrap())
        } else {
            m.mul(v, m.inv(self.y).unwrap())
        }
    }

    pub fn reduce(&self, k: u32) -> Result<LineClass> {
        let target = self.modulus.with_exponent(k)?;
        if k > self.modulus.exponent() {
            return Err(Error::Reduction {
                from: self.modulus.exponent(),
                to: k,
            });
        }
        Ok(LineClass::through(self.x as i128, self.y as i128, target)
            .expect("primitive vectors stay primitive"))
    }

    /// Independence modulo `l`.
    pub fn independent_of(&self, other: &LineClass) -> bool {
        let m = &self.modulus;
        m.is_unit(m.sub(m.mul(self.x, other.y), m.mul(self.y, other.x)))
    }

    /// A vector completing this line to a basis.
    pub fn complement(&self) -> (u64, u64) {
        if self.modulus.is_unit(self.x) {
            (0, 1 % self.modulus.modulus())
        } else {
            (1 % self.modulus.modulus(), 0)
        }
    }
}

impl fmt::Display for LineClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Every line fixed by `m`, by exhaustive enumeration.
pub fn fixed_lines(m: &Mat2) -> Vec<LineClass> {
    LineClass::all(m.modulus)
        .into_iter()
        .filter(|l| l.is_fixed_by(m))
        .collect()
}

fn has_distinct_eigenvalues_mod_ell(m: &Mat2) -> bool {
    let Ok(r) = m.reduce(1) else { return false };
    let roots = quad_roots(&r.trace().neg(), &r.det(), r.modulus);
    roots.len() == 2
}

/// Hensel-lift an eigen-line of `m mod l` to the unique fixed line modulo `l^n`.
pub fn lift_eigenline(m: &Mat2, known_line_mod_ell: &LineClass) -> Result<LineClass> {
    let modulus = m.modulus;
    let p = modulus.prime();
    if known_line_mod_ell.modulus().exponent() != 1 || known_line_mod_ell.modulus().prime() != p {
        return Err(Error::Invalid("known line must be given modulo l".into()));
    }
    let low = m.reduce(1)?;
    if !has_distinct_eigenvalues_mod_ell(m) || !known_line_mod_ell.is_fixed_by(&low) {
        return Err(Error::NonSeparable(p));
    }
    let [a, b, c, d] = m.entries();
    let (x0, y0) = known_line_mod_ell.rep();
    // (1, y): b y^2 + (a - d) y - c = 0 ; (x, 1): c x^2 + (d - a) x - b = 0
    let (q2, q1, q0, start, first) = if x0 % p != 0 {
        (b, modulus.sub(a, d), modulus.neg(c), y0, true)
    } else {
        (c, modulus.sub(d, a), modulus.neg(b), x0, false)
    };
    let mut t = start % modulus.modulus();
    for _ in 0..256 {
        let val = modulus.add(
            modulus.add(modulus.mul(q2, modulus.mul(t, t)), modulus.mul(q1, t)),
            q0,
        );
        if val == 0 {
            let line = if first {
                LineClass::through(1, t as i128, modulus)
            } else {
                LineClass::through(t as i128, 1, modulus)
            };
            return line.ok_or(Error::NonSeparable(p));
        }
        let deriv = modulus.add(modulus.mul(modulus.mul(2, q2), t), q1);
        let inv = modulus.inv(deriv).ok_or(Error::NonSeparable(p))?;
        t = modulus.sub(t, modulus.mul(val, inv));
    }
    Err(Error::NonSeparable(p))
}

/// `p m p^-1`.
pub fn conjugate(m: &Mat2, p: &Mat2) -> Result<Mat2> {
    let inv = p.inverse().ok_or(Error::SingularConjugator)?;
    Ok(p.mul(m).mul(&inv))
}

/// Entrywise reduction modulo `l^k`.
pub fn reduce(m: &Mat2, k: u32) -> Result<Mat2> {
    m.reduce(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn md(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    fn mat(e: [i128; 4], p: u64, n: u32) -> Mat2 {
        Mat2::new(e, md(p, n))
    }

    #[test]
    fn invariant_examples() {
        let id = Mat2::identity(md(3, 3));
        let inv = invariants_of(&id);
        assert_eq!(
            (inv.trace.value(), inv.det.value(), inv.disc.value()),
            (2, 1, 0)
        );
        // companion matrix of x^2 + 4x + 53
        let comp = mat([0, -53, 1, -4], 7, 3);
        assert_eq!(invariants_of(&comp).disc.value(), 147);
        let u = mat([1, 1, 0, 1], 3, 2);
        let inv = invariants_of(&u);
        assert_eq!(
            (inv.trace.value(), inv.det.value(), inv.disc.value()),
            (2, 1, 0)
        );
    }

    #[test]
    fn char_root_examples() {
        assert!(char_poly_has_root(&mat([3, 5, 0, 7], 2, 4)));
        assert!(!char_poly_has_root(&mat([0, -53, 1, -4], 7, 3)));
        assert!(char_poly_has_root(&mat([0, -53, 1, -4], 7, 2)));
    }

    #[test]
    fn fixed_line_examples() {
        assert_eq!(fixed_lines(&Mat2::identity(md(3, 2))).len(), 12);
        let got: Vec<_> = fixed_lines(&mat([1, 1, 0, 1], 3, 2))
            .iter()
            .map(|l| l.rep())
            .collect();
        assert_eq!(got, vec![(1, 0), (1, 3), (1, 6)]);
        let got: Vec<_> = fixed_lines(&mat([0, -1, 1, 0], 5, 1))
            .iter()
            .map(|l| l.rep())
            .collect();
        assert_eq!(got, vec![(1, 2), (1, 3)]);
    }

    #[test]
    fn lift_examples() {
        let m3 = md(3, 1);
        let line = lift_eigenline(
            &mat([1, 0, 0, 2], 3, 3),
            &LineClass::through(1, 0, m3).unwrap(),
        )
        .unwrap();
        assert_eq!(line.rep(), (1, 0));

        let m = mat([1, 1, 0, 2], 3, 3);
        let line = lift_eigenline(&m, &LineClass::through(1, 1, m3).unwrap()).unwrap();
        let brute: Vec<_> = fixed_lines(&m)
            .into_iter()
            .filter(|l| l.reduce(1).unwrap().rep() == (1, 1))
            .collect();
        assert_eq!(brute, vec![line]);
        assert_eq!(line.rep(), (1, 1));

        let m5 = md(5, 1);
        let line = lift_eigenline(
            &mat([2, 1, 1, 2], 5, 2),
            &LineClass::through(1, 1, m5).unwrap(),
        )
        .unwrap();
        assert_eq!(line.rep(), (1, 1));

        let err = lift_eigenline(
            &mat([1, 1, 0, 1], 3, 2),
            &LineClass::through(1, 0, m3).unwrap(),
        );
        assert_eq!(err, Err(Error::NonSeparable(3)));
    }

    #[test]
    fn conjugate_examples() {
        let m = mat([4, 7, 2, 9], 3, 3);
        assert_eq!(conjugate(&m, &Mat2::identity(md(3, 3))).unwrap(), m);
        let swap = mat([0, 1, 1, 0], 3, 3);
        assert_eq!(
            conjugate(&mat([1, 1, 0, 1], 3, 3), &swap).unwrap(),
            mat([1, 0, 1, 1], 3, 3)
        );
        // integer oracle: [[1,mu],[0,1]] diag(1,-1) [[1,-mu],[0,1]] = [[1,-2mu],[0,-1]]
        let mu: i128 = 13;
        let p = mat([1, mu, 0, 1], 3, 3);
        let got = conjugate(&mat([1, 0, 0, -1], 3, 3), &p).unwrap();
        assert_eq!(got, mat([1, -2 * mu, 0, -1], 3, 3));
        assert_eq!(got.entries(), [1, 1, 0, 26]);
        assert_eq!(
            conjugate(&m, &mat([3, 0, 0, 1], 3, 3)),
            Err(Error::SingularConjugator)
        );
    }

    #[test]
    fn reduce_examples() {
        let m = mat([10, 2, 18, 1], 3, 3);
        assert_eq!(reduce(&m, 3).unwrap(), m);
        assert_eq!(reduce(&m, 1).unwrap(), mat([1, 2, 0, 1], 3, 1));
        assert_eq!(
            reduce(&mat([26, 0, 0, 26], 3, 3), 1).unwrap(),
            mat([2, 0, 0, 2], 3, 1)
        );
        assert!(matches!(reduce(&m, 4), Err(Error::Reduction { .. })));
    }

    #[test]
    fn literal_roundtrip() {
        let lit: MatLiteral = "[[1, -2],[ 3,4]]".parse().unwrap();
        assert_eq!(lit, MatLiteral([[1, -2], [3, 4]]));
        assert_eq!(lit.to_string(), "[[1,-2],[3,4]]");
        assert!("[[1,2],[3]]".parse::<MatLiteral>().is_err());
    }

    #[test]
    fn line_count() {
        for (p, n) in [(2, 1), (2, 5), (3, 3), (7, 2)] {
            let m = md(p, n);
            assert_eq!(LineClass::all(m).len() as u64, p.pow(n - 1) * (p + 1));
        }
    }
}
