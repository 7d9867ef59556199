//! CSV rendering of traces. Metadata goes in `#`-prefixed header lines.
//! Floats use Rust's shortest round-trip formatting, so output is
//! byte-identical for bit-identical values.

use std::fmt::Write as _;

use super::{FourPointTrace, OtocTrace, TimeGrid};
use crate::error::{Error, Result};
use crate::spectrum::ChainParams;

fn header(out: &mut String, formula: &str, chain: Option<&ChainParams>, operators: &str, grid: &TimeGrid) {
    let _ = writeln!(out, "# formula: {formula}");
    match chain {
        Some(c) => {
            let _ = writeln!(out, "# chain: sites={} coupling={:?} hx={:?} hz={:?}", c.sites, c.coupling, c.hx, c.hz);
        }
        None => out.push_str("# chain: unspecified\n"),
    }
    let _ = writeln!(out, "# operators: {operators}");
    let _ = writeln!(out, "# grid: t_start={:?} t_end={:?} n_points={}", grid.start(), grid.end(), grid.len());
}

impl OtocTrace {
    /// CSV with columns `t,value`.
    pub fn to_csv(&self) -> String {
        self.render(None).expect("no extra column")
    }

    /// CSV with an additional named column, e.g. the window-renormalized trace.
    pub fn to_csv_with_column(&self, name: &str, column: &[f64]) -> Result<String> {
        self.render(Some((name, column)))
    }

    fn render(&self, extra: Option<(&str, &[f64])>) -> Result<String> {
        if let Some((_, col)) = extra {
            if col.len() != self.values.len() {
                return Err(Error::DimensionMismatch { left: self.values.len(), right: col.len() });
            }
        }
        let ops: Vec<String> = self.meta.operators.iter().map(|o| o.label()).collect();
        let mut out = String::with_capacity(32 * (self.values.len() + 8));
        header(&mut out, self.meta.formula.tag(), self.meta.chain.as_ref(), &ops.join(" "), &self.grid);
        let _ = writeln!(out, "# imag_residual: {:?}", self.imag_residual);
        match extra {
            Some((name, col)) => {
                let _ = writeln!(out, "t,value,{name}");
                for ((t, v), e) in self.times().zip(&self.values).zip(col) {
                    let _ = writeln!(out, "{t:?},{v:?},{e:?}");
                }
            }
            None => {
                out.push_str("t,value\n");
                for (t, v) in self.times().zip(&self.values) {
                    let _ = writeln!(out, "{t:?},{v:?}");
                }
            }
        }
        Ok(out)
    }
}

impl FourPointTrace {
    /// CSV with columns `t,value,imag`.
    pub fn to_csv(&self) -> String {
        let ops: Vec<String> = self.operators.iter().map(|p| p.to_string()).collect();
        let mut out = String::with_capacity(48 * (self.values.len() + 8));
        header(&mut out, "four_point", self.chain.as_ref(), &ops.join(" "), &self.grid);
        out.push_str("t,value,imag\n");
        for (t, v) in self.grid.points().zip(&self.values) {
            let _ = writeln!(out, "{t:?},{:?},{:?}", v.re, v.im);
        }
        out
    }
}
