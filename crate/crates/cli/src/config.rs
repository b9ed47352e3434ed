//! `--config` merging and provenance records.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use hypermap_core::{Error, Result};

/// Merges flag values over a config file. Flags left unset serialize as `null` and do
/// not override. Config keys must name known options.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let Value::Object(mut merged) = serde_json::to_value(flags)? else {
        unreachable!("option structs serialize to objects")
    };
    let Some(path) = config else {
        return Ok(serde_json::from_value(Value::Object(merged))?);
    };
    let text = fs::read_to_string(path).map_err(|source| Error::File { path: path.display().to_string(), source })?;
    let mut file: Value = serde_json::from_str(&text)?;
    // a provenance record can be replayed directly
    if let Some(inner) = file.get("config").filter(|_| file.get("command").is_some()).cloned() {
        file = inner;
    }
    let Value::Object(file) = file else {
        return Err(Error::InvalidParameter(format!("{}: config must be a JSON object", path.display())));
    };
    for (k, v) in file {
        match merged.get_mut(&k) {
            None => return Err(Error::InvalidParameter(format!("{}: unknown option {k:?}", path.display()))),
            Some(slot) if slot.is_null() => *slot = v,
            Some(_) => {}
        }
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}

pub struct Run {
    command: &'static str,
    out: PathBuf,
    started: Instant,
    outputs: Vec<(String, String)>,
    extra: Map<String, Value>,
}

impl Run {
    pub fn start(command: &'static str, out: &Path) -> Result<Run> {
        fs::create_dir_all(out).map_err(|source| Error::File { path: out.display().to_string(), source })?;
        Ok(Run { command, out: out.to_path_buf(), started: Instant::now(), outputs: Vec::new(), extra: Map::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes `name` in the output directory and records its digest.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|source| Error::File { path: path.display().to_string(), source })?;
        self.outputs.push((name.to_string(), hex(&Sha256::digest(contents.as_bytes()))));
        Ok(())
    }

    pub fn record(&mut self, name: &str, digest: &[u8]) {
        self.outputs.push((name.to_string(), hex(digest)));
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.extra.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Writes `provenance.json` with the resolved configuration.
    pub fn finish(mut self, config: &impl Serialize, seeds: Value) -> Result<()> {
        let record = serde_json::json!({
            "tool": "hypermap",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": config,
            "seeds": seeds,
            "threads": rayon::current_num_threads(),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "outputs": self.outputs.iter().map(|(n, h)| (n.clone(), Value::String(h.clone()))).collect::<Map<_, _>>(),
            "notes": std::mem::take(&mut self.extra),
        });
        let path = self.path("provenance.json");
        let text = serde_json::to_string_pretty(&record)? + "\n";
        fs::write(&path, text).map_err(|source| Error::File { path: path.display().to_string(), source })
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
