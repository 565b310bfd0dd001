use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::CliError;

pub const VERSION: &str = env!("QUADCURL_VERSION");

/// Eigenvalue error proxy reported next to the estimators.
pub const ERROR_PROXY: &str = "err(h) = |lambda_h - lambda_{h/2}| / lambda_h for the estimated eigenvalue \
on successively halved meshes; undefined on the finest level";

/// Provenance written into every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub error_proxy: &'static str,
}

impl Meta {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        Self {
            version: VERSION,
            command,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            error_proxy: ERROR_PROXY,
        }
    }

    /// `#` comment lines heading CSV and text outputs.
    pub fn comment_header(&self) -> String {
        format!(
            "# quadcurl {}\n# command: {}\n# config: {}\n# error-proxy: {}\n",
            self.version, self.command, self.config, self.error_proxy
        )
    }

    /// JSON document `{"meta": ..., key: body}`.
    pub fn json_document<B: Serialize>(&self, key: &str, body: &B) -> Result<String, CliError> {
        let body = serde_json::to_value(body).map_err(|e| CliError::Numerical(e.to_string()))?;
        let doc = json!({ "meta": self, key: body });
        let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Numerical(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Formats an optional value, `-` when absent.
pub fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

/// Least-squares slope of `log y` against `log x` over the pairs with
/// positive finite entries.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.25, 0.125, 0.0625];
        let y: Vec<f64> = x.iter().map(|h: &f64| 3.0 * h.powf(2.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.5).abs() < 1e-12);
        assert!(loglog_slope(&x[..1], &y[..1]).is_none());
    }

    #[test]
    fn header_lines_are_comments() {
        let m = Meta::new("eigs", &json!({"k": 4}));
        let h = m.comment_header();
        assert!(h.lines().all(|l| l.starts_with("# ")));
        assert!(h.contains(VERSION));
    }
}
