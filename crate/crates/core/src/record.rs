//! Output serialization: CSV tables with stable formatting, JSON, and the
//! replayable run-record sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::SystemParams;
use crate::pipeline::PointRow;

pub const CSV_HEADER: &str =
    "variable,scheme,mode,n_z,n_x,e_z,e_x,l_z,l_x,l_total,r_per_pair";

/// Fixed 6-significant-digit float rendering, byte-stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.5e}")
}

pub fn row_to_csv(r: &PointRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(r.variable),
        r.scheme.label(),
        r.mode.label(),
        fmt_f64(r.n_z),
        fmt_f64(r.n_x),
        fmt_f64(r.e_z),
        fmt_f64(r.e_x),
        fmt_f64(r.l_z),
        fmt_f64(r.l_x),
        fmt_f64(r.l_total),
        fmt_f64(r.r_per_pair),
    )
}

pub fn rows_to_csv(rows: &[PointRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&row_to_csv(r));
        s.push('\n');
    }
    s
}

/// Everything needed to replay one invocation: resolved parameters, the
/// request, and the produced outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub timestamp_utc: String,
    pub params: SystemParams,
    pub inputs: serde_json::Value,
    pub outputs: serde_json::Value,
}

impl RunRecord {
    pub fn new(
        params: &SystemParams,
        inputs: serde_json::Value,
        outputs: serde_json::Value,
    ) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_utc: chrono::Utc::now().to_rfc3339(),
            params: params.clone(),
            inputs,
            outputs,
        }
    }

    /// Sidecar path for a primary output file: `<out>.run.json`.
    pub fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_os_string();
        name.push(".run.json");
        PathBuf::from(name)
    }

    pub fn write_sidecar(&self, out: &Path) -> Result<()> {
        let mut f = std::fs::File::create(Self::sidecar_path(out))?;
        f.write_all(serde_json::to_string_pretty(self).expect("serializable").as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}
