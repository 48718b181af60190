//! Output directory handling and the run manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn file(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.root.join(name))?))
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<File>, CliError> {
        Ok(csv::Writer::from_path(self.root.join(name))?)
    }

    pub fn path(&self) -> &Path {
        &self.root
    }
}

/// Shortest round-trip representation, as used in every CSV this tool writes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn join(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(";")
}

/// `key,value` rows: the config echo (minus the output path), derived
/// parameters, versions and the seed.
pub struct Manifest {
    rows: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str, cfg: &RunConfig) -> Result<Self, CliError> {
        let mut rows = vec![
            ("subcommand".to_string(), subcommand.to_string()),
            ("hranneal_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("seed".to_string(), cfg.seed.to_string()),
        ];
        let mut echo = cfg.clone();
        echo.out = None;
        let value = toml::Value::try_from(&echo)
            .map_err(|e| CliError::Config(format!("cannot echo config: {e}")))?;
        flatten("config", &value, &mut rows);
        Ok(Manifest { rows })
    }

    pub fn derived(&mut self, key: &str, value: impl ToString) {
        self.rows.push((format!("derived.{key}"), value.to_string()));
    }

    pub fn write(&self, out: &OutDir) -> Result<(), CliError> {
        let mut w = out.csv("manifest.csv")?;
        w.write_record(["key", "value"])?;
        for (k, v) in &self.rows {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn flatten(prefix: &str, v: &toml::Value, rows: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&format!("{prefix}.{k}"), v, rows);
            }
        }
        toml::Value::Float(f) => rows.push((prefix.to_string(), num(*f))),
        toml::Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}
