use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::RunError;

/// Deterministic writer for a run's output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(root)
            .map_err(|e| RunError::Io(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Basenames written so far, in order.
    pub fn files(&self) -> &[String] {
        &self.written
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// Serializes a voltage snapshot as a flat JSON object with zero-padded,
/// lexically ordered keys (`v00` .. `v47`).
pub fn state_json(voltages_mv: &[f64]) -> String {
    let mut out = String::from("{\n");
    for (i, v) in voltages_mv.iter().enumerate() {
        let sep = if i + 1 == voltages_mv.len() { "" } else { "," };
        out.push_str(&format!("  \"v{i:02}\": {v:.6}{sep}\n"));
    }
    out.push('}');
    out.push('\n');
    out
}

/// Loads a voltage snapshot written by [`state_json`].
pub fn load_state(path: &Path) -> Result<Vec<f64>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("cannot read state {}: {e}", path.display())))?;
    let map: BTreeMap<String, f64> =
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("bad state file: {e}")))?;
    let mut volts = vec![0.0; map.len()];
    for (key, value) in &map {
        let idx: usize = key
            .strip_prefix('v')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RunError::Config(format!("bad state key '{key}'")))?;
        if idx >= volts.len() {
            return Err(RunError::Config(format!("state key '{key}' out of range")));
        }
        volts[idx] = *value;
    }
    Ok(volts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trips() {
        let dir = std::env::temp_dir().join("mesh-lab-state-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.json");
        let volts: Vec<f64> = (0..48).map(|i| i as f64 * 123.456).collect();
        std::fs::write(&path, state_json(&volts)).unwrap();
        let back = load_state(&path).unwrap();
        assert_eq!(back.len(), 48);
        for (a, b) in volts.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn state_json_is_valid_json_with_ordered_keys() {
        let text = state_json(&[1.0, 2.5, 3.25]);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["v00"], 1.0);
        assert_eq!(v["v02"], 3.25);
    }
}
