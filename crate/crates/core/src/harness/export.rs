use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::risk::RiskReport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    #[default]
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// `replicate,h2` with 17 significant digits.
pub fn to_csv(report: &RiskReport) -> String {
    let mut s = String::from("replicate,h2\n");
    for r in &report.per_replicate {
        writeln!(s, "{},{:.16e}", r.replicate, r.h2).expect("writing to a String");
    }
    s
}

pub fn to_json(report: &RiskReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn write_report(report: &RiskReport, format: ExportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ExportFormat::Csv => to_csv(report),
        ExportFormat::Json => to_json(report)?,
    };
    std::fs::write(path, body)?;
    Ok(())
}
