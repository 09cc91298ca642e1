//! `key = value` configuration files. Lines starting with `#` and blank lines
//! are ignored; `grid` may be given several times.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
    pub grids: Vec<String>,
}

pub const KEYS: [&str; 10] = ["n", "v", "gamma", "b", "T", "tier", "grid", "mode", "out-format", "out-dir"];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value, got '{line}'", i + 1))?;
            let key = key.trim().replace('_', "-");
            let key = if key == "t" { "T".to_string() } else { key };
            let value = value.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key '{key}'", i + 1));
            }
            if key == "grid" {
                cfg.grids.push(value);
            } else {
                cfg.values.insert(key, value);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("config: bad value '{v}' for {key}")),
        }
    }
}
