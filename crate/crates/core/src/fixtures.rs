//! Group fixtures: `{prime, exponent, generators}` records as JSON, plus the
//! bundled table of maximal exceptional 2-adic groups.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grp::MatGroup;
use crate::mat2::{Mat2, MatLiteral};
use crate::modring::PrimePowerModulus;

/// Environment variable holding extra fixture directories (`:`-separated).
pub const FIXTURE_PATH_VAR: &str = "ISOGENY_LGP_FIXTURES";

const TABLE1: &str = include_str!("../../../fixtures/table1.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub prime: u64,
    pub exponent: u32,
    pub generators: Vec<[[i64; 2]; 2]>,
}

impl GroupRecord {
    pub fn modulus(&self) -> Result<PrimePowerModulus> {
        PrimePowerModulus::new(self.prime, self.exponent)
    }

    pub fn matrices(&self) -> Result<Vec<Mat2>> {
        let md = self.modulus()?;
        Ok(self
            .generators
            .iter()
            .map(|g| MatLiteral(*g).to_mat(md))
            .collect())
    }

    pub fn group(&self) -> Result<MatGroup> {
        MatGroup::closure(self.modulus()?, &self.matrices()?)
    }

    pub fn from_group(g: &MatGroup) -> Self {
        let md = g.modulus();
        GroupRecord {
            prime: md.prime(),
            exponent: md.exponent(),
            generators: g
                .generators()
                .iter()
                .map(|m| MatLiteral::from_mat(m).0)
                .collect(),
        }
    }
}

/// One row of the bundled maximal-exceptional table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table1Row {
    pub label: String,
    pub prime: u64,
    pub exponent: u32,
    /// Level as a number (a power of 2), not an exponent.
    pub gl2_level: u64,
    pub genus: u64,
    pub det_surjective: bool,
    pub generators: Vec<[[i64; 2]; 2]>,
}

impl Table1Row {
    pub fn record(&self) -> GroupRecord {
        GroupRecord {
            prime: self.prime,
            exponent: self.exponent,
            generators: self.generators.clone(),
        }
    }

    pub fn group(&self) -> Result<MatGroup> {
        self.record().group()
    }
}

pub fn table1() -> Vec<Table1Row> {
    serde_json::from_str(TABLE1).expect("bundled table parses")
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}

/// Parse a fixture: a single record, an array of records, or table rows.
pub fn parse_group_records(text: &str) -> Result<Vec<GroupRecord>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(json_error))
        .collect()
}

/// Resolve a fixture name: as given, then in each `ISOGENY_LGP_FIXTURES`
/// directory, then in the bundled `fixtures/` directory.
pub fn locate(name: &str) -> Result<PathBuf> {
    let direct = Path::new(name);
    if direct.exists() {
        return Ok(direct.to_path_buf());
    }
    let mut dirs: Vec<PathBuf> = std::env::var(FIXTURE_PATH_VAR)
        .map(|v| std::env::split_paths(&v).collect())
        .unwrap_or_default();
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    dirs.iter()
        .map(|d| d.join(name))
        .find(|p| p.exists())
        .ok_or_else(|| Error::Io(format!("fixture {name} not found")))
}

pub fn read_fixture(name: &str) -> Result<String> {
    Ok(std::fs::read_to_string(locate(name)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let rows = table1();
        let count = |n| rows.iter().filter(|r| r.exponent == n).count();
        assert_eq!((count(3), count(4), count(5), count(6)), (2, 1, 13, 15));
        assert!(rows
            .iter()
            .filter(|r| r.exponent == 6)
            .all(|r| r.genus == 3));
    }

    #[test]
    fn records_round_trip() {
        let text = r#"{"prime": 3, "exponent": 2, "generators": [[[1, 1], [0, 1]]]}"#;
        let recs = parse_group_records(text).unwrap();
        assert_eq!(recs[0].group().unwrap().order(), 9);
        let back = GroupRecord::from_group(&recs[0].group().unwrap());
        assert_eq!(back.group().unwrap(), recs[0].group().unwrap());
        assert!(matches!(parse_group_records("{"), Err(Error::Parse { .. })));
    }
}
