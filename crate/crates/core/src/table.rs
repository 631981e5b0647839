//! Consistency check of published `(S, Q, r_DW, r_C, R_key)` tables.
//!
//! Values are kept as printed, in `value(uncertainty)` notation with an
//! optional exponent, e.g. `8.66(3)e-6`. The uncertainty is in units of the
//! last printed digit.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{devetak_winter, key_rate};

/// The bundled window-length scan: 20 rows of `τ [ns]`, `r_C`, `S`, `Q`,
/// `r_DW`, `R_key`.
pub const BUNDLED_TABLE1: &str = include_str!("../data/table1.csv");

/// A number as printed in a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedValue {
    pub value: f64,
    /// Quoted one-sigma uncertainty, zero if none was printed.
    pub uncertainty: f64,
    /// One unit of the last printed digit.
    pub resolution: f64,
}

impl PrintedValue {
    /// Half a unit of the last printed digit plus the quoted uncertainty.
    /// A bare `0` has zero tolerance.
    pub fn tolerance(&self) -> f64 {
        if self.value == 0.0 && self.uncertainty == 0.0 {
            0.0
        } else {
            0.5 * self.resolution + self.uncertainty
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tolerance() * (1.0 + 1e-9)
    }
}

impl FromStr for PrintedValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed table value {s:?}"));
        let s = s.trim();
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (digits, unc_digits) = match mantissa.find('(') {
            Some(i) => {
                let close = mantissa.strip_suffix(')').ok_or_else(bad)?;
                (&mantissa[..i], Some(&close[i + 1..]))
            }
            None => (mantissa, None),
        };
        let decimals = digits.find('.').map_or(0, |i| digits.len() - i - 1) as i32;
        let scale = 10f64.powi(exponent);
        let resolution = 10f64.powi(-decimals) * scale;
        let value = digits.parse::<f64>().map_err(|_| bad())? * scale;
        let uncertainty = match unc_digits {
            Some(u) => u.parse::<u32>().map_err(|_| bad())? as f64 * resolution,
            None => 0.0,
        };
        Ok(PrintedValue {
            value,
            uncertainty,
            resolution,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub tau_ns: f64,
    pub r_c: PrintedValue,
    pub s: PrintedValue,
    pub q: PrintedValue,
    pub r_dw: PrintedValue,
    pub r_key: PrintedValue,
}

#[derive(Deserialize)]
struct RawRow {
    tau_ns: f64,
    r_c: String,
    #[serde(rename = "S")]
    s: String,
    #[serde(rename = "Q")]
    q: String,
    r_dw: String,
    #[serde(rename = "R_key")]
    r_key: String,
}

/// Parses a CSV with header `tau_ns,r_c,S,Q,r_dw,R_key`.
pub fn parse_table1<R: std::io::Read>(input: R) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::new();
    for (i, rec) in csv::Reader::from_reader(input).deserialize::<RawRow>().enumerate() {
        let raw = rec.map_err(|e| Error::Parse(format!("table row {}: {e}", i + 1)))?;
        let field = |name: &str, v: &str| {
            v.parse::<PrintedValue>()
                .map_err(|e| Error::Parse(format!("table row {}, column {name}: {e}", i + 1)))
        };
        rows.push(Table1Row {
            tau_ns: raw.tau_ns,
            r_c: field("r_c", &raw.r_c)?,
            s: field("S", &raw.s)?,
            q: field("Q", &raw.q)?,
            r_dw: field("r_dw", &raw.r_dw)?,
            r_key: field("R_key", &raw.r_key)?,
        });
    }
    Ok(rows)
}

pub fn bundled_table1() -> Vec<Table1Row> {
    parse_table1(BUNDLED_TABLE1.as_bytes()).expect("bundled table parses")
}

/// Recomputed values of one row against the printed ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub tau_ns: f64,
    pub r_dw: f64,
    pub r_dw_printed: f64,
    pub r_dw_tolerance: f64,
    pub r_key: f64,
    pub r_key_printed: f64,
    pub r_key_tolerance: f64,
    pub pass: bool,
}

/// Recomputes `r_DW` from the printed `(S, Q)` and `R_key = r_DW · r_C` from
/// the printed `r_C`, and compares both with the printed values.
pub fn check_table1(rows: &[Table1Row]) -> Result<Vec<RowCheck>> {
    rows.iter()
        .map(|row| {
            let r_dw = devetak_winter(row.s.value, row.q.value)?;
            let r_key = key_rate(r_dw, row.r_c.value)?;
            Ok(RowCheck {
                tau_ns: row.tau_ns,
                r_dw,
                r_dw_printed: row.r_dw.value,
                r_dw_tolerance: row.r_dw.tolerance(),
                r_key,
                r_key_printed: row.r_key.value,
                r_key_tolerance: row.r_key.tolerance(),
                pass: row.r_dw.contains(r_dw) && row.r_key.contains(r_key),
            })
        })
        .collect()
}
