//! Consolidated `report.json` assembled from per-suite section files.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::CliError;

/// Section keys in report order; each is read from `<key>.json`.
pub const SECTIONS: [&str; 11] = [
    "run_config",
    "axiom",
    "lipschitz",
    "interpolation",
    "inequalities",
    "uniformity",
    "hyperbolicity",
    "whitney",
    "boundary",
    "tolerances",
    "refinement_evidence",
];

/// Merges every present section; absent ones become `null`. Fails when no
/// suite has written anything yet.
pub fn emit_report(dir: &Path) -> Result<Value, CliError> {
    let mut map = Map::new();
    let mut suites = 0;
    for key in SECTIONS {
        let path = dir.join(format!("{key}.json"));
        let value = if path.exists() {
            let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
            if !matches!(key, "run_config" | "tolerances" | "refinement_evidence") {
                suites += 1;
            }
            serde_json::from_str(&text).map_err(|e| CliError::parse(&path, e))?
        } else {
            Value::Null
        };
        map.insert(key.to_string(), value);
    }
    if suites == 0 {
        return Err(CliError::Usage(format!("no suite artifacts in {}", dir.display())));
    }
    Ok(Value::Object(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_in_schema_order() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_report(dir.path()), Err(CliError::Usage(_))));
        fs::write(dir.path().join("whitney.json"), r#"{"c1": 1.0}"#).unwrap();
        fs::write(dir.path().join("axiom.json"), r#"{"pass": true}"#).unwrap();
        let r = emit_report(dir.path()).unwrap();
        let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
        assert_eq!(keys, SECTIONS.iter().collect::<Vec<_>>());
        assert_eq!(r["whitney"]["c1"], 1.0);
        assert!(r["boundary"].is_null());
    }
}
