//! Frobenius trace data `(p, a_p)` and witnesses against local isogenies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modring::{is_prime, quad_roots, PrimePowerModulus, Residue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrobRecord {
    pub p: u64,
    pub a_p: i64,
}

impl FrobRecord {
    pub fn new(p: u64, a_p: i64) -> Result<Self> {
        Self::checked(p, a_p, 0)
    }

    fn checked(p: u64, a_p: i64, line: usize) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Data {
                line,
                message: format!("{p} is not prime"),
            });
        }
        if (a_p as i128).pow(2) > 4 * p as i128 {
            return Err(Error::Data {
                line,
                message: format!("a_{p} = {a_p} violates the Hasse bound"),
            });
        }
        Ok(FrobRecord { p, a_p })
    }
}

/// Parse `p a_p` lines; `#` starts a comment and blank lines are skipped.
pub fn parse_ap_file(source: &str) -> Result<Vec<FrobRecord>> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse { line, message };
        if fields.len() != 2 {
            return Err(parse_err(format!("expected \"p a_p\", got {text:?}")));
        }
        let p: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad prime {:?}", fields[0])))?;
        let a: i64 = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad trace {:?}", fields[1])))?;
        out.push(FrobRecord::checked(p, a, line)?);
    }
    Ok(out)
}

/// Does `x^2 - a_p x + p` have a root mod `l^n`?
pub fn frob_passes(rec: &FrobRecord, m: PrimePowerModulus) -> Result<bool> {
    if rec.p == m.prime() {
        return Err(Error::BadReduction(rec.p));
    }
    let b = Residue::new(-(rec.a_p as i128), m);
    let c = Residue::new(rec.p as i128, m);
    Ok(!quad_roots(&b, &c, m).is_empty())
}

/// The first record whose Frobenius polynomial has no root mod `l^n`.
pub fn find_witness(records: &[FrobRecord], m: PrimePowerModulus) -> Result<Option<FrobRecord>> {
    for rec in records {
        if !frob_passes(rec, m)? {
            return Ok(Some(*rec));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!(
            parse_ap_file("53 -4\n").unwrap(),
            vec![FrobRecord { p: 53, a_p: -4 }]
        );
        assert_eq!(
            parse_ap_file("# header\n\n2 1\n").unwrap(),
            vec![FrobRecord { p: 2, a_p: 1 }]
        );
        assert!(matches!(
            parse_ap_file("5 6\n"),
            Err(Error::Data { line: 1, .. })
        ));
        assert!(matches!(
            parse_ap_file("1 0\n3 x\n"),
            Err(Error::Data { line: 1, .. })
        ));
        assert!(matches!(
            parse_ap_file("3 1\n3 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn witnesses() {
        let rec = FrobRecord::new(53, -4).unwrap();
        let m343 = PrimePowerModulus::new(7, 3).unwrap();
        let m49 = PrimePowerModulus::new(7, 2).unwrap();
        assert!(!frob_passes(&rec, m343).unwrap());
        assert!(frob_passes(&rec, m49).unwrap());
        assert_eq!(find_witness(&[rec], m343).unwrap(), Some(rec));
        assert_eq!(find_witness(&[rec], m49).unwrap(), None);
        assert_eq!(find_witness(&[], m49).unwrap(), None);
        let m32 = PrimePowerModulus::new(2, 5).unwrap();
        assert!(!frob_passes(&FrobRecord::new(11, 0).unwrap(), m32).unwrap());
        assert!(matches!(
            frob_passes(&FrobRecord::new(7, 1).unwrap(), m49),
            Err(Error::BadReduction(7))
        ));
    }
}
