//! Run configuration read from TOML.
//!
//! Parsing never stops at the first problem: every missing, mistyped, out of
//! range or unknown key is collected and reported together.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use nlkg_core::initial::{Bump, Noise};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Linear,
    Exponents,
    Profiles,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(Mode::Simulate),
            "linear" => Some(Mode::Linear),
            "exponents" => Some(Mode::Exponents),
            "profiles" => Some(Mode::Profiles),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Linear => "linear",
            Mode::Exponents => "exponents",
            Mode::Profiles => "profiles",
        }
    }
}

/// Bump defaults for the two presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Small,
    Large,
}

impl Preset {
    pub fn amplitude(&self) -> f64 {
        match self {
            Preset::Small => 0.01,
            Preset::Large => 1.0,
        }
    }
}

pub const DEFAULT_WIDTH: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepperSection {
    pub alpha: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dealias: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BumpConfig {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub velocity: bool,
    pub torus_mode: i64,
}

impl BumpConfig {
    pub fn to_bump(&self) -> Bump {
        Bump {
            amplitude: self.amplitude,
            width: self.width,
            center: self.center.clone(),
            velocity: self.velocity,
            torus_mode: self.torus_mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseConfig {
    pub amplitude: f64,
    pub width: f64,
}

impl NoiseConfig {
    pub fn to_noise(&self) -> Noise {
        Noise {
            amplitude: self.amplitude,
            width: self.width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataConfig {
    pub preset: Preset,
    pub bumps: Vec<BumpConfig>,
    pub noise: Option<NoiseConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExteriorConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    pub cadence: usize,
    pub snapshot_times: Vec<f64>,
    pub exterior: Option<ExteriorConfig>,
    pub local: Option<LocalConfig>,
    /// Safety margin subtracted in `T_wrap = L − r₀ − margin`.
    pub horizon_margin: f64,
    /// Sample spacing of the Cauchy check in simulate mode.
    pub scattering_interval: f64,
    /// Window of the decay fit reported in linear mode.
    pub decay_window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentsConfig {
    pub batch: Option<PathBuf>,
    pub queries: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfilesConfig {
    pub sequence: Vec<PathBuf>,
    pub k_max: usize,
    pub eps_stop: f64,
    /// In grid cells.
    pub window_cells: f64,
    pub q: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub output: PathBuf,
    pub grid: GridConfig,
    pub stepper: StepperSection,
    pub data: DataConfig,
    pub diagnostics: DiagnosticsConfig,
    pub exponents: ExponentsConfig,
    pub profiles: ProfilesConfig,
}

/// One problem with one key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// All problems found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl ConfigErrors {
    pub fn keys(&self) -> Vec<&str> {
        self.0.iter().map(|e| e.key.as_str()).collect()
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Typed access to one table, remembering which keys were read.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    seen: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: Option<&'a Table>) -> Self {
        Self {
            path: path.to_string(),
            table,
            seen: Vec::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn raw(&mut self, k: &str) -> Option<&'a Value> {
        self.seen.push(k.to_string());
        self.table.and_then(|t| t.get(k))
    }

    fn sub(&mut self, k: &str, errs: &mut Vec<ConfigError>) -> Section<'a> {
        let key = self.key(k);
        match self.raw(k) {
            None => Section::new(&key, None),
            Some(Value::Table(t)) => Section::new(&key, Some(t)),
            Some(_) => {
                errs.push(err(&key, "expected a table"));
                Section::new(&key, None)
            }
        }
    }

    fn float(&mut self, k: &str, default: f64, errs: &mut Vec<ConfigError>) -> f64 {
        match self.raw(k) {
            None => default,
            Some(v) => as_float(v).unwrap_or_else(|| {
                errs.push(err(&self.key(k), "expected a number"));
                default
            }),
        }
    }

    fn opt_float(&mut self, k: &str, errs: &mut Vec<ConfigError>) -> Option<f64> {
        let v = self.raw(k)?;
        let out = as_float(v);
        if out.is_none() {
            errs.push(err(&self.key(k), "expected a number"));
        }
        out
    }

    fn uint(&mut self, k: &str, default: u64, errs: &mut Vec<ConfigError>) -> u64 {
        match self.raw(k) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => {
                errs.push(err(&self.key(k), "expected a non-negative integer"));
                default
            }
        }
    }

    fn int(&mut self, k: &str, default: i64, errs: &mut Vec<ConfigError>) -> i64 {
        match self.raw(k) {
            None => default,
            Some(Value::Integer(i)) => *i,
            Some(_) => {
                errs.push(err(&self.key(k), "expected an integer"));
                default
            }
        }
    }

    fn boolean(&mut self, k: &str, default: bool, errs: &mut Vec<ConfigError>) -> bool {
        match self.raw(k) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                errs.push(err(&self.key(k), "expected true or false"));
                default
            }
        }
    }

    fn string(&mut self, k: &str, errs: &mut Vec<ConfigError>) -> Option<&'a str> {
        match self.raw(k)? {
            Value::String(s) => Some(s),
            _ => {
                errs.push(err(&self.key(k), "expected a string"));
                None
            }
        }
    }

    fn floats(&mut self, k: &str, errs: &mut Vec<ConfigError>) -> Option<Vec<f64>> {
        match self.raw(k)? {
            Value::Array(a) => {
                let xs: Option<Vec<f64>> = a.iter().map(as_float).collect();
                if xs.is_none() {
                    errs.push(err(&self.key(k), "expected an array of numbers"));
                }
                xs
            }
            v => match as_float(v) {
                Some(x) => Some(vec![x]),
                None => {
                    errs.push(err(&self.key(k), "expected a number or an array of numbers"));
                    None
                }
            },
        }
    }

    fn strings(&mut self, k: &str, errs: &mut Vec<ConfigError>) -> Vec<String> {
        match self.raw(k) {
            None => Vec::new(),
            Some(Value::Array(a)) if a.iter().all(Value::is_str) => {
                a.iter().filter_map(|v| v.as_str().map(String::from)).collect()
            }
            Some(_) => {
                errs.push(err(&self.key(k), "expected an array of strings"));
                Vec::new()
            }
        }
    }

    /// Reports every key of the table that was never read.
    fn finish(self, errs: &mut Vec<ConfigError>) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.seen.iter().any(|s| s == k) {
                    errs.push(err(&self.key(k), "unknown key"));
                }
            }
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

fn check(errs: &mut Vec<ConfigError>, ok: bool, key: &str, message: impl Into<String>) {
    if !ok {
        errs.push(err(key, message));
    }
}

/// Parses and validates a TOML configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigErrors(vec![ConfigError {
            key: "<syntax>".into(),
            message: e.to_string().trim().to_string(),
        }])
    })?;
    from_table(&table)
}

/// Validates an already parsed table (used for sweep overrides).
pub fn from_table(table: &Table) -> Result<RunConfig, ConfigErrors> {
    let mut errs = Vec::new();
    let mut root = Section::new("", Some(table));

    let mode = match root.string("mode", &mut errs) {
        None => Mode::Simulate,
        Some(s) => Mode::parse(s).unwrap_or_else(|| {
            errs.push(err(
                "mode",
                format!("unknown mode {s:?} (simulate, linear, exponents, profiles)"),
            ));
            Mode::Simulate
        }),
    };
    let seed = root.uint("seed", 0, &mut errs);
    let output = PathBuf::from(root.string("output", &mut errs).unwrap_or("nlkg-out"));

    let mut g = root.sub("grid", &mut errs);
    let grid = GridConfig {
        d: g.uint("d", 1, &mut errs) as usize,
        half_width: g.float("L", 64.0, &mut errs),
        nx: g.uint("Nx", 1024, &mut errs) as usize,
        ny: g.uint("Ny", 16, &mut errs) as usize,
    };
    g.finish(&mut errs);
    check(
        &mut errs,
        matches!(grid.d, 1 | 2),
        "grid.d",
        format!("must be 1 or 2, got {}", grid.d),
    );
    check(
        &mut errs,
        grid.half_width > 0.0 && grid.half_width.is_finite(),
        "grid.L",
        "must be positive",
    );
    check(
        &mut errs,
        grid.nx >= 16 && grid.nx.is_power_of_two(),
        "grid.Nx",
        format!("must be a power of two >= 16, got {}", grid.nx),
    );
    check(
        &mut errs,
        grid.ny >= 4 && grid.ny.is_power_of_two(),
        "grid.Ny",
        format!("must be a power of two >= 4, got {}", grid.ny),
    );

    let mut s = root.sub("stepper", &mut errs);
    let stepper = StepperSection {
        alpha: s.float("alpha", 5.0, &mut errs),
        dt: s.float("dt", 1e-3, &mut errs),
        t_final: s.float("T", 20.0, &mut errs),
        dealias: s.boolean("dealias", false, &mut errs),
    };
    s.finish(&mut errs);
    check(
        &mut errs,
        stepper.alpha > 0.0 && stepper.alpha.is_finite(),
        "stepper.alpha",
        "must be positive",
    );
    check(
        &mut errs,
        stepper.dt > 0.0 && stepper.dt.is_finite(),
        "stepper.dt",
        format!("must be positive, got {}", stepper.dt),
    );
    check(
        &mut errs,
        stepper.t_final >= 0.0 && stepper.t_final.is_finite(),
        "stepper.T",
        format!("must be non-negative, got {}", stepper.t_final),
    );
    if stepper.t_final > 0.0 && stepper.dt > stepper.t_final {
        errs.push(err("stepper.dt", "must not exceed stepper.T"));
    }

    let data = parse_data(&mut root, grid.d, &mut errs);
    let diagnostics = parse_diagnostics(&mut root, &grid, &stepper, &mut errs);

    let mut e = root.sub("exponents", &mut errs);
    let exponents = ExponentsConfig {
        batch: e.string("batch", &mut errs).map(PathBuf::from),
        queries: e.strings("queries", &mut errs),
    };
    e.finish(&mut errs);
    if mode == Mode::Exponents && exponents.batch.is_none() && exponents.queries.is_empty() {
        errs.push(err("exponents", "needs a batch file or inline queries"));
    }

    let mut p = root.sub("profiles", &mut errs);
    let profiles = ProfilesConfig {
        sequence: p
            .strings("sequence", &mut errs)
            .into_iter()
            .map(PathBuf::from)
            .collect(),
        k_max: p.uint("k_max", 4, &mut errs) as usize,
        eps_stop: p.float("eps_stop", 1e-3, &mut errs),
        window_cells: p.float("window_cells", 8.0, &mut errs),
        q: p.opt_float("q", &mut errs),
    };
    p.finish(&mut errs);
    check(&mut errs, profiles.k_max >= 1, "profiles.k_max", "must be >= 1");
    check(
        &mut errs,
        profiles.eps_stop >= 0.0,
        "profiles.eps_stop",
        "must be non-negative",
    );
    check(
        &mut errs,
        profiles.window_cells > 0.0,
        "profiles.window_cells",
        "must be positive",
    );
    if let Some(q) = profiles.q {
        check(&mut errs, q >= 1.0, "profiles.q", "must be >= 1");
    }
    if mode == Mode::Profiles && profiles.sequence.is_empty() {
        errs.push(err("profiles.sequence", "needs at least one snapshot file"));
    }

    root.finish(&mut errs);
    if errs.is_empty() {
        Ok(RunConfig {
            mode,
            seed,
            output,
            grid,
            stepper,
            data,
            diagnostics,
            exponents,
            profiles,
        })
    } else {
        Err(ConfigErrors(errs))
    }
}

fn parse_data(root: &mut Section<'_>, dim: usize, errs: &mut Vec<ConfigError>) -> DataConfig {
    let mut d = root.sub("data", errs);
    let preset = match d.string("preset", errs) {
        None | Some("large") => Preset::Large,
        Some("small") => Preset::Small,
        Some(other) => {
            errs.push(err("data.preset", format!("unknown preset {other:?} (small, large)")));
            Preset::Large
        }
    };
    let mut bumps = Vec::new();
    match d.raw("bump") {
        None => bumps.push(BumpConfig {
            amplitude: preset.amplitude(),
            width: DEFAULT_WIDTH,
            center: vec![0.0; dim],
            velocity: false,
            torus_mode: 0,
        }),
        Some(Value::Array(items)) => {
            for (i, item) in items.iter().enumerate() {
                let key = format!("data.bump[{i}]");
                let Value::Table(t) = item else {
                    errs.push(err(&key, "expected a table"));
                    continue;
                };
                let mut b = Section::new(&key, Some(t));
                let bump = BumpConfig {
                    amplitude: b.float("amplitude", preset.amplitude(), errs),
                    width: b.float("width", DEFAULT_WIDTH, errs),
                    center: b.floats("center", errs).unwrap_or_else(|| vec![0.0; dim]),
                    velocity: b.boolean("velocity", false, errs),
                    torus_mode: b.int("torus_mode", 0, errs),
                };
                let bkey = b.key("");
                b.finish(errs);
                check(
                    errs,
                    bump.amplitude.is_finite(),
                    &format!("{bkey}amplitude"),
                    "must be finite",
                );
                check(errs, bump.width > 0.0, &format!("{bkey}width"), "must be positive");
                check(
                    errs,
                    bump.center.len() == dim,
                    &format!("{bkey}center"),
                    format!("needs {dim} coordinate(s), got {}", bump.center.len()),
                );
                bumps.push(bump);
            }
        }
        Some(_) => errs.push(err("data.bump", "expected an array of tables ([[data.bump]])")),
    }
    let mut n = d.sub("noise", errs);
    let noise = if n.table.is_some() {
        let cfg = NoiseConfig {
            amplitude: n.float("amplitude", preset.amplitude(), errs),
            width: n.float("width", DEFAULT_WIDTH, errs),
        };
        check(errs, cfg.width > 0.0, "data.noise.width", "must be positive");
        Some(cfg)
    } else {
        None
    };
    n.finish(errs);
    d.finish(errs);
    DataConfig { preset, bumps, noise }
}

fn parse_diagnostics(
    root: &mut Section<'_>,
    grid: &GridConfig,
    stepper: &StepperSection,
    errs: &mut Vec<ConfigError>,
) -> DiagnosticsConfig {
    let mut d = root.sub("diagnostics", errs);
    let cadence = d.uint("cadence", 10, errs) as usize;
    check(errs, cadence >= 1, "diagnostics.cadence", "must be >= 1");
    let snapshot_times = d.floats("snapshot_times", errs).unwrap_or_default();
    for (i, t) in snapshot_times.iter().enumerate() {
        check(
            errs,
            *t >= 0.0 && *t <= stepper.t_final,
            &format!("diagnostics.snapshot_times[{i}]"),
            format!("{t} outside [0, T]"),
        );
    }
    let horizon_margin = d.float("horizon_margin", 2.0, errs);
    check(
        errs,
        horizon_margin >= 0.0,
        "diagnostics.horizon_margin",
        "must be non-negative",
    );
    let scattering_interval = d.float("scattering_interval", 1.0, errs);
    check(
        errs,
        scattering_interval > 0.0,
        "diagnostics.scattering_interval",
        "must be positive",
    );
    let decay_window = match d.floats("decay_window", errs) {
        None => (5.0, 25.0),
        Some(w) if w.len() == 2 && w[0] < w[1] => (w[0], w[1]),
        Some(_) => {
            errs.push(err("diagnostics.decay_window", "expected [t0, t1] with t0 < t1"));
            (5.0, 25.0)
        }
    };

    let mut x = d.sub("exterior", errs);
    let exterior = x.table.is_some().then(|| ExteriorConfig {
        center: x.floats("center", errs).unwrap_or_else(|| vec![0.0; grid.d]),
        radius: x.float("radius", 5.0, errs),
    });
    x.finish(errs);
    if let Some(e) = &exterior {
        check(errs, e.radius > 0.0, "diagnostics.exterior.radius", "must be positive");
        check(
            errs,
            e.center.len() == grid.d,
            "diagnostics.exterior.center",
            "wrong number of coordinates",
        );
    }

    let mut l = d.sub("local", errs);
    let local = l.table.is_some().then(|| LocalConfig {
        center: l.floats("center", errs).unwrap_or_else(|| vec![0.0; grid.d]),
        radius: l.float("radius", 5.0, errs),
        p: l.float("p", 2.0, errs),
    });
    l.finish(errs);
    if let Some(lc) = &local {
        check(errs, lc.radius > 0.0, "diagnostics.local.radius", "must be positive");
        check(errs, lc.p >= 1.0, "diagnostics.local.p", "must be >= 1");
        check(
            errs,
            lc.center.len() == grid.d,
            "diagnostics.local.center",
            "wrong number of coordinates",
        );
    }
    d.finish(errs);
    DiagnosticsConfig {
        cadence,
        snapshot_times,
        exterior,
        local,
        horizon_margin,
        scattering_interval,
        decay_window,
    }
}

/// Merges `over` into `base`, descending into tables and replacing leaves.
pub fn merge_tables(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
