//! Configuration, orchestration and output files for `nlkg`.

pub mod config;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use toml::{Table, Value};

pub use config::{parse_config, ConfigErrors, Mode, RunConfig};
pub use run::{run, RunOutcome, CSV_HEADER, FORMAT_VERSION};

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, table: &mut Table) {
        if let Some(m) = self.mode {
            table.insert("mode".into(), Value::String(m.as_str().into()));
        }
        if let Some(s) = self.seed {
            table.insert("seed".into(), Value::Integer(s as i64));
        }
    }
}

fn parse_table(text: &str, what: &str) -> Result<Table> {
    text.parse::<Table>().with_context(|| format!("parsing {what}"))
}

/// Relative file references are taken relative to the config file.
fn resolve(cfg: &mut RunConfig, base: &Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let Some(b) = cfg.exponents.batch.as_mut() {
        fix(b);
    }
    cfg.profiles.sequence.iter_mut().for_each(fix);
}

fn validated(table: &Table, base: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let mut table = table.clone();
    overrides.apply(&mut table);
    let mut cfg = config::from_table(&table)?;
    if let Some(out) = &overrides.out {
        cfg.output = out.clone();
    }
    resolve(&mut cfg, base);
    Ok(cfg)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads, overrides and validates a config file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    validated(
        &parse_table(&text, &path.display().to_string())?,
        &base_dir(path),
        overrides,
    )
}

/// One entry of a sweep: its name and the merged, validated config.
#[derive(Clone, Debug)]
pub struct SweepRun {
    pub name: String,
    pub config: RunConfig,
}

/// Expands `[[run]]` tables of a sweep file over a base config. Each run
/// writes to `<out>/<name>`.
pub fn load_sweep(config: &Path, sweep: &Path, overrides: &Overrides) -> Result<Vec<SweepRun>> {
    let base_text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let base = parse_table(&base_text, &config.display().to_string())?;
    let sweep_text = fs::read_to_string(sweep).with_context(|| format!("reading {}", sweep.display()))?;
    let sweep_table = parse_table(&sweep_text, &sweep.display().to_string())?;
    if let Some(k) = sweep_table.keys().find(|k| *k != "run") {
        bail!("sweep file: unknown key {k:?} (only [[run]] tables)");
    }
    let Some(Value::Array(entries)) = sweep_table.get("run") else {
        bail!("sweep file needs at least one [[run]] table");
    };
    let root = validated(&base, &base_dir(config), overrides)?.output;
    let mut runs = Vec::new();
    let mut problems = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let Value::Table(t) = entry else {
            problems.push(format!("run[{i}]: expected a table"));
            continue;
        };
        let mut t = t.clone();
        let name = match t.remove("name") {
            Some(Value::String(s)) if !s.is_empty() && !s.contains(['/', '\\']) && s != ".." => s,
            _ => {
                problems.push(format!("run[{i}].name: needs a plain directory name"));
                continue;
            }
        };
        if runs.iter().any(|r: &SweepRun| r.name == name) {
            problems.push(format!("run[{i}].name: duplicate {name:?}"));
            continue;
        }
        let mut merged = base.clone();
        config::merge_tables(&mut merged, &t);
        match validated(&merged, &base_dir(config), overrides) {
            Ok(mut cfg) => {
                cfg.output = root.join(&name);
                runs.push(SweepRun { name, config: cfg });
            }
            Err(e) => problems.push(format!("run[{i}] ({name}): {e}")),
        }
    }
    if !problems.is_empty() {
        bail!("invalid sweep:\n  {}", problems.join("\n  "));
    }
    Ok(runs)
}

/// Runs every sweep entry in parallel; each result pairs a name with its outcome.
pub fn run_sweep(runs: &[SweepRun]) -> Vec<(String, Result<RunOutcome>)> {
    runs.par_iter()
        .map(|r| (r.name.clone(), run(&r.config, &r.config.output)))
        .collect()
}
