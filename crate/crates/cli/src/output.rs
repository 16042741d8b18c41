//! Machine-readable result emission: a fixed CSV column schema and a JSON
//! mirror with nested diagnostics. Both embed the config hash and the
//! tolerance set; identical runs produce identical bytes.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::EffectiveTolerances;

pub const SCHEMA_VERSION: u32 = 1;

/// One output record. Every command fills the same columns; inapplicable
/// cells stay empty in CSV and null in JSON.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    pub k: Option<i32>,
    pub re_c: Option<f64>,
    pub im_c: Option<f64>,
    pub residual: Option<f64>,
    pub count: Option<usize>,
    pub m: Option<f64>,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    pub condition: Option<bool>,
    pub notes: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub tolerances: EffectiveTolerances,
    pub rows: Vec<Row>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub diagnostics: serde_json::Value,
}

pub fn config_hash(config_text: &str) -> String {
    let digest = Sha256::digest(config_text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

impl Report {
    pub fn new(command: &str, config_text: &str, tolerances: EffectiveTolerances, rows: Vec<Row>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config_sha256: config_hash(config_text),
            tolerances,
            rows,
            diagnostics: serde_json::Value::Null,
        }
    }

    pub fn with_diagnostics(mut self, diagnostics: serde_json::Value) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# circstab schema_version={}\n", self.schema_version));
        out.push_str(&format!("# config_sha256={}\n", self.config_sha256));
        let t = &self.tolerances;
        out.push_str(&format!(
            "# tolerances rtol={} atol={} acceptance_rel={} eta_floor={}\n",
            t.rtol, t.atol, t.acceptance_rel, t.eta_floor
        ));
        out.push_str("schema_version,command,k,re_c,im_c,residual,count,m,M,condition,notes\n");
        for r in &self.rows {
            let cells = [
                self.schema_version.to_string(),
                self.command.clone(),
                r.k.map(|k| k.to_string()).unwrap_or_default(),
                fmt_opt_f64(r.re_c),
                fmt_opt_f64(r.im_c),
                fmt_opt_f64(r.residual),
                r.count.map(|c| c.to_string()).unwrap_or_default(),
                fmt_opt_f64(r.m),
                fmt_opt_f64(r.big_m),
                r.condition.map(|c| c.to_string()).unwrap_or_default(),
                csv_quote(&r.notes),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        s.push('\n');
        s
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
