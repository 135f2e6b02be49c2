use std::fmt;
use std::path::{Path, PathBuf};

use toml::value::{Table, Value};

use crate::evolution::{ForcingSpec, Scheme, StepConfig};
use crate::experiments::StudyKind;
use crate::filter::{FilterError, FilterProblem, IndicatorKind, IndicatorSpec, MollifierSpec};
use crate::spectral::{SolenoidalField, TorusGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax(String),
    UnknownSection {
        name: String,
        suggestion: Option<String>,
    },
    UnknownKey {
        section: &'static str,
        key: String,
        suggestion: Option<String>,
    },
    Missing {
        section: &'static str,
        key: &'static str,
    },
    BadType {
        section: &'static str,
        key: String,
        expected: &'static str,
    },
    BadValue {
        section: &'static str,
        key: &'static str,
        reason: String,
    },
    MissingFile {
        section: &'static str,
        key: &'static str,
        path: PathBuf,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax(e) => write!(f, "config syntax error: {e}"),
            ConfigError::UnknownSection { name, suggestion } => {
                write!(f, "unknown section [{name}]")?;
                if let Some(s) = suggestion {
                    write!(f, " (did you mean [{s}]?)")?;
                }
                Ok(())
            }
            ConfigError::UnknownKey {
                section,
                key,
                suggestion,
            } => {
                write!(f, "unknown key '{key}' in [{section}]")?;
                if let Some(s) = suggestion {
                    write!(f, " (did you mean '{s}'?)")?;
                }
                Ok(())
            }
            ConfigError::Missing { section, key } => {
                write!(f, "missing required key '{key}' in [{section}]")
            }
            ConfigError::BadType {
                section,
                key,
                expected,
            } => write!(f, "key '{key}' in [{section}] must be {expected}"),
            ConfigError::BadValue {
                section,
                key,
                reason,
            } => write!(f, "key '{key}' in [{section}]: {reason}"),
            ConfigError::MissingFile { section, key, path } => write!(
                f,
                "file referenced by '{key}' in [{section}] does not exist: {}",
                path.display()
            ),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaMode {
    Fixed(f64),
    /// `kappa = Gr * kappa0` with the Grashof number computed from the forcing.
    Grashof { kappa0: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingConfig {
    None,
    Steady { seed: u64, slope: f64, hminus1: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialConfig {
    Random { seed: u64, slope: f64, amplitude: f64 },
    /// a single solenoidal lattice mode (shear-type datum)
    Mode { z: [i32; 3], amplitude: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// snapshot every this many steps; 0 = final state only
    pub snapshot_interval: usize,
    pub ledger: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid_n: usize,
    pub grid_l: f64,
    pub dealias: (u32, u32),
    pub nu: f64,
    pub alpha: f64,
    pub indicator: IndicatorSpec,
    pub mollifier_none: bool,
    pub kappa_mode: KappaMode,
    pub forcing: ForcingConfig,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
    pub study: Option<StudyConfig>,
}

const SECTIONS: &[&str] = &[
    "grid", "physics", "forcing", "initial", "time", "output", "study",
];
const GRID_KEYS: &[&str] = &["n", "l", "dealias"];
const PHYSICS_KEYS: &[&str] = &[
    "nu",
    "alpha",
    "beta",
    "indicator",
    "indicator_c",
    "mollifier",
    "kappa_mode",
    "kappa",
    "kappa0",
];
const FORCING_KEYS: &[&str] = &["kind", "seed", "slope", "hminus1", "file"];
const INITIAL_KEYS: &[&str] = &["kind", "seed", "slope", "amplitude", "file", "mode"];
const TIME_KEYS: &[&str] = &["t_end", "dt", "scheme", "picard_tol", "picard_max_iter"];
const OUTPUT_KEYS: &[&str] = &["dir", "snapshot_interval", "ledger"];
const STUDY_KEYS: &[&str] = &["kind", "params"];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut row = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            row.push((prev[j] + cost).min(prev[j + 1] + 1).min(row[j] + 1));
        }
        prev = row;
    }
    prev[b.len()]
}

fn suggest(key: &str, allowed: &[&str]) -> Option<String> {
    allowed
        .iter()
        .map(|&k| (levenshtein(key, k), k))
        .filter(|(d, _)| *d <= 3)
        .min_by_key(|(d, _)| *d)
        .map(|(_, k)| k.to_string())
}

struct Reader<'a> {
    section: &'static str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn check_keys(&mut self, allowed: &'static [&'static str]) {
        if let Some(table) = self.table {
            for key in table.keys() {
                if !allowed.contains(&key.as_str()) {
                    self.errors.push(ConfigError::UnknownKey {
                        section: self.section,
                        key: key.clone(),
                        suggestion: suggest(key, allowed),
                    });
                }
            }
        }
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, key: &'static str) -> Option<f64> {
        let v = self.raw(key)?;
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.errors.push(ConfigError::BadType {
                    section: self.section,
                    key: key.into(),
                    expected: "a number",
                });
                None
            }
        }
    }

    fn usize(&mut self, key: &'static str) -> Option<usize> {
        let v = self.raw(key)?;
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            _ => {
                self.errors.push(ConfigError::BadType {
                    section: self.section,
                    key: key.into(),
                    expected: "a non-negative integer",
                });
                None
            }
        }
    }

    fn str(&mut self, key: &'static str) -> Option<&'a str> {
        let v = self.raw(key)?;
        match v {
            Value::String(s) => Some(s.as_str()),
            _ => {
                self.errors.push(ConfigError::BadType {
                    section: self.section,
                    key: key.into(),
                    expected: "a string",
                });
                None
            }
        }
    }

    fn f64_list(&mut self, key: &'static str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let arr = match v {
            Value::Array(a) => a,
            _ => {
                self.errors.push(ConfigError::BadType {
                    section: self.section,
                    key: key.into(),
                    expected: "an array of numbers",
                });
                return None;
            }
        };
        let mut out = Vec::new();
        for item in arr {
            match item {
                Value::Float(x) => out.push(*x),
                Value::Integer(i) => out.push(*i as f64),
                _ => {
                    self.errors.push(ConfigError::BadType {
                        section: self.section,
                        key: key.into(),
                        expected: "an array of numbers",
                    });
                    return None;
                }
            }
        }
        Some(out)
    }

    fn bad_value(&mut self, key: &'static str, reason: impl Into<String>) {
        self.errors.push(ConfigError::BadValue {
            section: self.section,
            key,
            reason: reason.into(),
        });
    }
}

/// Parse and validate; returns the config or every error found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let root: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => return Err(vec![ConfigError::Syntax(e.to_string())]),
    };
    let mut errors = Vec::new();

    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errors.push(ConfigError::UnknownSection {
                name: key.clone(),
                suggestion: suggest(key, SECTIONS),
            });
        }
    }
    let section = |name: &'static str, errors: &mut Vec<ConfigError>| -> Option<&Table> {
        match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(ConfigError::BadType {
                    section: name,
                    key: name.into(),
                    expected: "a [section]",
                });
                None
            }
        }
    };

    // [grid]
    let table = section("grid", &mut errors);
    let mut r = Reader {
        section: "grid",
        table,
        errors: &mut errors,
    };
    r.check_keys(GRID_KEYS);
    let grid_n = match r.usize("n") {
        Some(n) => n,
        None => {
            if r.raw("n").is_none() {
                r.errors.push(ConfigError::Missing {
                    section: "grid",
                    key: "n",
                });
            }
            16
        }
    };
    let grid_l = r.f64("l").unwrap_or(2.0 * std::f64::consts::PI);
    let dealias = match r.str("dealias") {
        None => (2, 3),
        Some(s) => {
            let parts: Vec<&str> = s.split('/').collect();
            let parsed = if parts.len() == 2 {
                parts[0]
                    .parse::<u32>()
                    .ok()
                    .zip(parts[1].parse::<u32>().ok())
            } else {
                None
            };
            match parsed {
                Some((num, den)) => (num, den),
                None => {
                    r.bad_value("dealias", format!("expected 'num/den', got '{s}'"));
                    (2, 3)
                }
            }
        }
    };
    let mut r = Reader {
        section: "grid",
        table,
        errors: &mut errors,
    };
    if let Err(e) = TorusGrid::with_dealias(grid_n.max(4), grid_l, dealias.0, dealias.1) {
        r.bad_value("n", e.to_string());
    }
    if grid_n < 4 || grid_n % 2 != 0 {
        r.bad_value("n", format!("must be an even integer >= 4, got {grid_n}"));
    }

    // [physics]
    let table = section("physics", &mut errors);
    let mut r = Reader {
        section: "physics",
        table,
        errors: &mut errors,
    };
    r.check_keys(PHYSICS_KEYS);
    let nu = r.f64("nu").unwrap_or_else(|| {
        r.errors.push(ConfigError::Missing {
            section: "physics",
            key: "nu",
        });
        1.0
    });
    if nu <= 0.0 {
        r.bad_value("nu", format!("viscosity must be positive, got {nu}"));
    }
    let alpha = r.f64("alpha").unwrap_or_else(|| {
        r.errors.push(ConfigError::Missing {
            section: "physics",
            key: "alpha",
        });
        1.0
    });
    if alpha <= 0.0 {
        r.bad_value("alpha", format!("filter scale must be positive, got {alpha}"));
    }
    let beta = r.f64("beta").unwrap_or_else(|| {
        r.errors.push(ConfigError::Missing {
            section: "physics",
            key: "beta",
        });
        0.5
    });
    if !(beta > 0.0 && beta < 1.0) {
        r.bad_value(
            "beta",
            format!("indicator lower bound must lie in the open interval (0, 1), got {beta}"),
        );
    }
    let indicator_c = r.f64("indicator_c").unwrap_or(1.0);
    if indicator_c <= 0.0 {
        r.bad_value("indicator_c", "shape parameter must be positive");
    }
    let beta_safe = if beta > 0.0 && beta < 1.0 { beta } else { 0.5 };
    let c_safe = if indicator_c > 0.0 { indicator_c } else { 1.0 };
    let indicator = match r.str("indicator").unwrap_or("smooth_local") {
        "constant_one" => IndicatorSpec::constant_one(),
        "smooth_local" => IndicatorSpec::smooth_local(beta_safe, c_safe),
        "global_energy" => IndicatorSpec::global_energy(beta_safe, c_safe),
        other => {
            let sug = suggest(other, &["constant_one", "smooth_local", "global_energy"]);
            r.bad_value(
                "indicator",
                format!(
                    "unknown indicator '{other}'{}",
                    sug.map(|s| format!(" (did you mean '{s}'?)")).unwrap_or_default()
                ),
            );
            IndicatorSpec::smooth_local(beta_safe, c_safe)
        }
    };
    let mollifier_none = match r.str("mollifier").unwrap_or("cutoff") {
        "cutoff" => false,
        "none" => true,
        other => {
            r.bad_value("mollifier", format!("expected 'cutoff' or 'none', got '{other}'"));
            false
        }
    };
    let kappa_mode = match r.str("kappa_mode").unwrap_or("fixed") {
        "fixed" => {
            let kappa = r.f64("kappa").unwrap_or(2.0);
            if kappa < 0.0 {
                r.bad_value("kappa", "cutoff frequency must be >= 0");
            }
            KappaMode::Fixed(kappa)
        }
        "grashof" => {
            let kappa0 = r.f64("kappa0").unwrap_or_else(|| {
                r.errors.push(ConfigError::Missing {
                    section: "physics",
                    key: "kappa0",
                });
                1.0
            });
            if kappa0 <= 0.0 {
                r.bad_value("kappa0", "energy input frequency must be positive");
            }
            KappaMode::Grashof { kappa0 }
        }
        other => {
            r.bad_value("kappa_mode", format!("expected 'fixed' or 'grashof', got '{other}'"));
            KappaMode::Fixed(2.0)
        }
    };
    if mollifier_none && !matches!(indicator.kind, IndicatorKind::GlobalEnergy { .. }) {
        r.bad_value(
            "mollifier",
            "'none' requires the global_energy indicator (the problem is ill-posed otherwise)",
        );
    }

    // [forcing]
    let table = section("forcing", &mut errors);
    let mut r = Reader {
        section: "forcing",
        table,
        errors: &mut errors,
    };
    r.check_keys(FORCING_KEYS);
    let forcing = match r.str("kind").unwrap_or("none") {
        "none" => ForcingConfig::None,
        "steady" => ForcingConfig::Steady {
            seed: r.usize("seed").unwrap_or(7) as u64,
            slope: r.f64("slope").unwrap_or(-2.0),
            hminus1: {
                let h = r.f64("hminus1").unwrap_or(1.0);
                if h < 0.0 {
                    r.bad_value("hminus1", "norm must be >= 0");
                }
                h
            },
        },
        "file" => match r.str("file") {
            Some(p) => {
                let path = PathBuf::from(p);
                if !path.exists() {
                    r.errors.push(ConfigError::MissingFile {
                        section: "forcing",
                        key: "file",
                        path: path.clone(),
                    });
                }
                ForcingConfig::File(path)
            }
            None => {
                r.errors.push(ConfigError::Missing {
                    section: "forcing",
                    key: "file",
                });
                ForcingConfig::None
            }
        },
        other => {
            r.bad_value("kind", format!("expected 'none', 'steady' or 'file', got '{other}'"));
            ForcingConfig::None
        }
    };

    // [initial]
    let table = section("initial", &mut errors);
    let mut r = Reader {
        section: "initial",
        table,
        errors: &mut errors,
    };
    r.check_keys(INITIAL_KEYS);
    let initial = match r.str("kind").unwrap_or("random") {
        "random" => InitialConfig::Random {
            seed: r.usize("seed").unwrap_or(3) as u64,
            slope: r.f64("slope").unwrap_or(-2.0),
            amplitude: {
                let a = r.f64("amplitude").unwrap_or(1.0);
                if a < 0.0 {
                    r.bad_value("amplitude", "must be >= 0");
                }
                a
            },
        },
        "mode" => {
            let z = match r.raw("mode") {
                Some(Value::Array(a))
                    if a.len() == 3 && a.iter().all(|v| v.is_integer()) =>
                {
                    [
                        a[0].as_integer().unwrap() as i32,
                        a[1].as_integer().unwrap() as i32,
                        a[2].as_integer().unwrap() as i32,
                    ]
                }
                _ => {
                    r.errors.push(ConfigError::BadType {
                        section: "initial",
                        key: "mode".into(),
                        expected: "an array of 3 integers",
                    });
                    [1, 0, 0]
                }
            };
            if z == [0, 0, 0] {
                r.bad_value("mode", "the zero mode is pinned; pick a nonzero lattice point");
            }
            InitialConfig::Mode {
                z,
                amplitude: r.f64("amplitude").unwrap_or(1.0),
            }
        }
        "file" => match r.str("file") {
            Some(p) => {
                let path = PathBuf::from(p);
                if !path.exists() {
                    r.errors.push(ConfigError::MissingFile {
                        section: "initial",
                        key: "file",
                        path: path.clone(),
                    });
                }
                InitialConfig::File(path)
            }
            None => {
                r.errors.push(ConfigError::Missing {
                    section: "initial",
                    key: "file",
                });
                InitialConfig::Random {
                    seed: 3,
                    slope: -2.0,
                    amplitude: 1.0,
                }
            }
        },
        other => {
            r.bad_value(
                "kind",
                format!("expected 'random', 'mode' or 'file', got '{other}'"),
            );
            InitialConfig::Random {
                seed: 3,
                slope: -2.0,
                amplitude: 1.0,
            }
        }
    };

    // [time]
    let table = section("time", &mut errors);
    let mut r = Reader {
        section: "time",
        table,
        errors: &mut errors,
    };
    r.check_keys(TIME_KEYS);
    let t_end = r.f64("t_end").unwrap_or_else(|| {
        r.errors.push(ConfigError::Missing {
            section: "time",
            key: "t_end",
        });
        1.0
    });
    if t_end <= 0.0 {
        r.bad_value("t_end", "horizon must be positive");
    }
    let dt = r.f64("dt").unwrap_or_else(|| {
        r.errors.push(ConfigError::Missing {
            section: "time",
            key: "dt",
        });
        0.01
    });
    if dt <= 0.0 {
        r.bad_value("dt", "slab length must be positive");
    }
    let scheme = match r.str("scheme").unwrap_or("duhamel_picard") {
        "duhamel_picard" => Scheme::DuhamelPicard,
        "imex_cn" => Scheme::ImexCn,
        other => {
            let sug = suggest(other, &["duhamel_picard", "imex_cn"]);
            r.bad_value(
                "scheme",
                format!(
                    "unknown scheme '{other}'{}",
                    sug.map(|s| format!(" (did you mean '{s}'?)")).unwrap_or_default()
                ),
            );
            Scheme::DuhamelPicard
        }
    };
    let picard_tol = r.f64("picard_tol").unwrap_or(1e-11);
    if picard_tol <= 0.0 {
        r.bad_value("picard_tol", "must be positive");
    }
    let picard_max_iter = r.usize("picard_max_iter").unwrap_or(60);
    if picard_max_iter == 0 {
        r.bad_value("picard_max_iter", "must be positive");
    }
    let time = TimeConfig {
        t_end,
        dt,
        scheme,
        picard_tol,
        picard_max_iter,
    };

    // [output]
    let table = section("output", &mut errors);
    let mut r = Reader {
        section: "output",
        table,
        errors: &mut errors,
    };
    r.check_keys(OUTPUT_KEYS);
    let output = OutputConfig {
        dir: PathBuf::from(r.str("dir").unwrap_or("out")),
        snapshot_interval: r.usize("snapshot_interval").unwrap_or(0),
        ledger: r.str("ledger").unwrap_or("ledger.csv").to_string(),
    };

    // [study]
    let study = match section("study", &mut errors) {
        None => None,
        table @ Some(_) => {
            let mut r = Reader {
                section: "study",
                table,
                errors: &mut errors,
            };
            r.check_keys(STUDY_KEYS);
            let kind = match r.str("kind") {
                Some(name) => match StudyKind::parse(name) {
                    Some(k) => Some(k),
                    None => {
                        let allowed = [
                            "alpha_to_zero",
                            "beta_to_one",
                            "continuous_dependence",
                            "absorbing_set",
                            "appendix_epsilon",
                        ];
                        let sug = suggest(name, &allowed);
                        r.bad_value(
                            "kind",
                            format!(
                                "unknown study '{name}'{}",
                                sug.map(|s| format!(" (did you mean '{s}'?)"))
                                    .unwrap_or_default()
                            ),
                        );
                        None
                    }
                },
                None => {
                    r.errors.push(ConfigError::Missing {
                        section: "study",
                        key: "kind",
                    });
                    None
                }
            };
            let params = r.f64_list("params").unwrap_or_default();
            kind.map(|kind| StudyConfig { kind, params })
        }
    };

    let config = RunConfig {
        grid_n: grid_n.max(4),
        grid_l,
        dealias,
        nu,
        alpha,
        indicator,
        mollifier_none,
        kappa_mode,
        forcing,
        initial,
        time,
        output,
        study,
    };
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

impl RunConfig {
    pub fn grid(&self) -> TorusGrid {
        TorusGrid::with_dealias(self.grid_n, self.grid_l, self.dealias.0, self.dealias.1)
            .expect("validated at parse time")
    }

    pub fn build_forcing(&self) -> Result<ForcingSpec, super::SnapshotError> {
        let grid = self.grid();
        Ok(match &self.forcing {
            ForcingConfig::None => ForcingSpec::zero(grid),
            ForcingConfig::Steady {
                seed,
                slope,
                hminus1,
            } => {
                let mut f = SolenoidalField::random(grid, *seed, *slope);
                let h = f.hdot_norm(-1.0);
                if h > 0.0 {
                    f.scale(hminus1 / h);
                }
                ForcingSpec::steady(f)
            }
            ForcingConfig::File(path) => {
                let (field, _) = super::read_snapshot_on_grid(&grid, path)?;
                ForcingSpec::steady(field.leray_project())
            }
        })
    }

    pub fn build_initial(&self) -> Result<SolenoidalField, super::SnapshotError> {
        let grid = self.grid();
        Ok(match &self.initial {
            InitialConfig::Random {
                seed,
                slope,
                amplitude,
            } => {
                let mut u0 = SolenoidalField::random(grid, *seed, *slope);
                u0.scale(*amplitude);
                u0
            }
            InitialConfig::Mode { z, amplitude } => single_mode_field(grid, *z, *amplitude),
            InitialConfig::File(path) => {
                let (field, _) = super::read_snapshot_on_grid(&grid, path)?;
                field.leray_project()
            }
        })
    }

    /// Numeric cutoff frequency, resolving the Grashof rule
    /// `kappa = Gr kappa0`, `Gr = F L^3 / nu^2`, `F = ||f||_{L^2} / L^{3/2}`.
    pub fn resolved_kappa(&self, forcing: &ForcingSpec) -> f64 {
        match self.kappa_mode {
            KappaMode::Fixed(kappa) => kappa,
            KappaMode::Grashof { kappa0 } => {
                let l = self.grid_l;
                let f_l2 = forcing.at(0.0).l2_norm();
                let amplitude = f_l2 / l.powf(1.5);
                let gr = amplitude * l.powi(3) / (self.nu * self.nu);
                gr * kappa0
            }
        }
    }

    pub fn build_problem(&self, forcing: &ForcingSpec) -> Result<FilterProblem, FilterError> {
        let mollifier = if self.mollifier_none {
            MollifierSpec::None
        } else {
            MollifierSpec::Cutoff {
                kappa: self.resolved_kappa(forcing),
            }
        };
        FilterProblem::new(self.grid(), self.alpha, self.indicator, mollifier)
    }

    pub fn step_config(&self) -> StepConfig {
        let mut c = StepConfig::new(self.time.dt, self.time.scheme);
        c.picard_tol = self.time.picard_tol;
        c.picard_max_iter = self.time.picard_max_iter;
        c
    }
}

/// Canonical echo: fixed section and key order, floats with 17 significant
/// digits. `parse(canonical(parse(x))) == parse(x)`.
pub fn canonical_text(c: &RunConfig) -> String {
    use std::fmt::Write;
    let f = super::fmt17;
    let mut s = String::new();
    writeln!(s, "[grid]").unwrap();
    writeln!(s, "n = {}", c.grid_n).unwrap();
    writeln!(s, "l = {}", f(c.grid_l)).unwrap();
    writeln!(s, "dealias = \"{}/{}\"", c.dealias.0, c.dealias.1).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "[physics]").unwrap();
    writeln!(s, "nu = {}", f(c.nu)).unwrap();
    writeln!(s, "alpha = {}", f(c.alpha)).unwrap();
    writeln!(s, "beta = {}", f(c.indicator.beta)).unwrap();
    let (kind, cshape) = match c.indicator.kind {
        IndicatorKind::ConstantOne => ("constant_one", None),
        IndicatorKind::SmoothLocal { c } => ("smooth_local", Some(c)),
        IndicatorKind::GlobalEnergy { c } => ("global_energy", Some(c)),
    };
    writeln!(s, "indicator = \"{kind}\"").unwrap();
    if let Some(cs) = cshape {
        writeln!(s, "indicator_c = {}", f(cs)).unwrap();
    }
    writeln!(
        s,
        "mollifier = \"{}\"",
        if c.mollifier_none { "none" } else { "cutoff" }
    )
    .unwrap();
    if !c.mollifier_none {
        match c.kappa_mode {
            KappaMode::Fixed(kappa) => {
                writeln!(s, "kappa_mode = \"fixed\"").unwrap();
                writeln!(s, "kappa = {}", f(kappa)).unwrap();
            }
            KappaMode::Grashof { kappa0 } => {
                writeln!(s, "kappa_mode = \"grashof\"").unwrap();
                writeln!(s, "kappa0 = {}", f(kappa0)).unwrap();
            }
        }
    }
    writeln!(s).unwrap();
    writeln!(s, "[forcing]").unwrap();
    match &c.forcing {
        ForcingConfig::None => writeln!(s, "kind = \"none\"").unwrap(),
        ForcingConfig::Steady {
            seed,
            slope,
            hminus1,
        } => {
            writeln!(s, "kind = \"steady\"").unwrap();
            writeln!(s, "seed = {seed}").unwrap();
            writeln!(s, "slope = {}", f(*slope)).unwrap();
            writeln!(s, "hminus1 = {}", f(*hminus1)).unwrap();
        }
        ForcingConfig::File(p) => {
            writeln!(s, "kind = \"file\"").unwrap();
            writeln!(s, "file = \"{}\"", p.display()).unwrap();
        }
    }
    writeln!(s).unwrap();
    writeln!(s, "[initial]").unwrap();
    match &c.initial {
        InitialConfig::Random {
            seed,
            slope,
            amplitude,
        } => {
            writeln!(s, "kind = \"random\"").unwrap();
            writeln!(s, "seed = {seed}").unwrap();
            writeln!(s, "slope = {}", f(*slope)).unwrap();
            writeln!(s, "amplitude = {}", f(*amplitude)).unwrap();
        }
        InitialConfig::Mode { z, amplitude } => {
            writeln!(s, "kind = \"mode\"").unwrap();
            writeln!(s, "mode = [{}, {}, {}]", z[0], z[1], z[2]).unwrap();
            writeln!(s, "amplitude = {}", f(*amplitude)).unwrap();
        }
        InitialConfig::File(p) => {
            writeln!(s, "kind = \"file\"").unwrap();
            writeln!(s, "file = \"{}\"", p.display()).unwrap();
        }
    }
    writeln!(s).unwrap();
    writeln!(s, "[time]").unwrap();
    writeln!(s, "t_end = {}", f(c.time.t_end)).unwrap();
    writeln!(s, "dt = {}", f(c.time.dt)).unwrap();
    writeln!(
        s,
        "scheme = \"{}\"",
        match c.time.scheme {
            Scheme::DuhamelPicard => "duhamel_picard",
            Scheme::ImexCn => "imex_cn",
        }
    )
    .unwrap();
    writeln!(s, "picard_tol = {}", f(c.time.picard_tol)).unwrap();
    writeln!(s, "picard_max_iter = {}", c.time.picard_max_iter).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "[output]").unwrap();
    writeln!(s, "dir = \"{}\"", c.output.dir.display()).unwrap();
    writeln!(s, "snapshot_interval = {}", c.output.snapshot_interval).unwrap();
    writeln!(s, "ledger = \"{}\"", c.output.ledger).unwrap();
    if let Some(study) = &c.study {
        writeln!(s).unwrap();
        writeln!(s, "[study]").unwrap();
        writeln!(s, "kind = \"{}\"", study.kind.name()).unwrap();
        let params = study
            .params
            .iter()
            .map(|p| f(*p))
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(s, "params = [{params}]").unwrap();
    }
    s
}

/// Deterministic solenoidal single-mode datum: the coefficient at `z` is a
/// real unit tangent orthogonal to `k`, scaled so `||u||_{L^2} = amplitude`.
fn single_mode_field(grid: TorusGrid, z: [i32; 3], amplitude: f64) -> SolenoidalField {
    use num_complex::Complex64;
    let k = grid.k_vec(z);
    let helper = if z[1] == 0 && z[2] == 0 {
        [0.0, 1.0, 0.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let cross = [
        k[1] * helper[2] - k[2] * helper[1],
        k[2] * helper[0] - k[0] * helper[2],
        k[0] * helper[1] - k[1] * helper[0],
    ];
    let norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let scale = amplitude / (2.0 * grid.l().powi(3)).sqrt() / norm;
    let mut field = crate::spectral::SpectralField::zeros(grid);
    field.set_mode_pair(
        z,
        [
            Complex64::new(scale * cross[0], 0.0),
            Complex64::new(scale * cross[1], 0.0),
            Complex64::new(scale * cross[2], 0.0),
        ],
    );
    field.leray_project()
}

/// Convenience: parse a config file from disk.
pub fn parse_config_file(path: &Path) -> Result<RunConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![ConfigError::Syntax(format!("{}: {e}", path.display()))])?;
    parse_config(&text)
}
