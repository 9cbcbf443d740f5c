//! Line-oriented `key = value` configuration under `[section]` headers.
//!
//! | section        | key          | default      |
//! |----------------|--------------|--------------|
//! | `grid`         | `x0`         | `-40`        |
//! |                | `dx`         | `0.05`       |
//! |                | `n`          | `1601`       |
//! | `lattice`      | `j0`         | `-40`        |
//! |                | `n`          | `161`        |
//! | `system`       | `model`      | `sg`         |
//! |                | `a`          | `0.5`        |
//! |                | `delta`      | `0`          |
//! |                | `kappa`      | `1`          |
//! |                | `gamma_phase`| `0`          |
//! |                | `kappa2`     | `none`       |
//! |                | `gamma_phase2`| `0`         |
//! | `perturbation` | `kind`       | `auto`       |
//! |                | `amplitude`  | `0.01`       |
//! |                | `width`      | `1`          |
//! |                | `center`     | `0`          |
//! |                | `seed`       | `0`          |
//! | `experiment`   | `T`          | `10`         |
//! |                | `dt`         | `0.01`       |
//! |                | `stride`     | `100`        |
//! |                | `c_max`      | `5`          |
//! | `output`       | `out_dir`    | `out`        |
//! |                | `format`     | `csv`        |
//!
//! `model` picks the system for `conjugation-check`. `kind = auto` means
//! `gaussian_u` for sine-Gordon and `gaussian_q` for Toda. `kappa2`, when
//! set, stacks a second soliton on the first for the Toda commands.

use std::fmt;
use std::str::FromStr;

use backlund_core::stability::PerturbationKind;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Sg,
    Toda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KindChoice {
    Auto,
    GaussianU,
    GaussianV,
    GaussianQ,
    GaussianP,
    SeededNoise,
}

impl KindChoice {
    pub fn resolve(self, model: Model) -> PerturbationKind {
        match self {
            Self::Auto => match model {
                Model::Sg => PerturbationKind::GaussianU,
                Model::Toda => PerturbationKind::GaussianQ,
            },
            Self::GaussianU => PerturbationKind::GaussianU,
            Self::GaussianV => PerturbationKind::GaussianV,
            Self::GaussianQ => PerturbationKind::GaussianQ,
            Self::GaussianP => PerturbationKind::GaussianP,
            Self::SeededNoise => PerturbationKind::SeededNoise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeSection {
    pub j0: i64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSection {
    pub model: Model,
    pub a: f64,
    pub delta: f64,
    pub kappa: f64,
    pub gamma_phase: f64,
    pub kappa2: Option<f64>,
    pub gamma_phase2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSection {
    pub kind: KindChoice,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub stride: usize,
    pub c_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub out_dir: String,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub grid: GridSection,
    pub lattice: LatticeSection,
    pub system: SystemSection,
    pub perturbation: PerturbationSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grid: GridSection {
                x0: -40.0,
                dx: 0.05,
                n: 1601,
            },
            lattice: LatticeSection { j0: -40, n: 161 },
            system: SystemSection {
                model: Model::Sg,
                a: 0.5,
                delta: 0.0,
                kappa: 1.0,
                gamma_phase: 0.0,
                kappa2: None,
                gamma_phase2: 0.0,
            },
            perturbation: PerturbationSection {
                kind: KindChoice::Auto,
                amplitude: 1e-2,
                width: 1.0,
                center: 0.0,
                seed: 0,
            },
            experiment: ExperimentSection {
                t_final: 10.0,
                dt: 0.01,
                stride: 100,
                c_max: 5.0,
            },
            output: OutputSection {
                out_dir: "out".into(),
                format: Format::Csv,
            },
        }
    }
}

pub const SECTIONS: [&str; 6] = [
    "grid",
    "lattice",
    "system",
    "perturbation",
    "experiment",
    "output",
];

fn float(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("bad number `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{v}` is not finite"))
    }
}

fn int<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad integer `{v}`"))
}

fn positive(v: &str) -> Result<f64, String> {
    let x = float(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("`{v}` must be > 0"))
    }
}

fn enumerated<T: Copy>(v: &str, options: &[(&str, T)]) -> Result<T, String> {
    options
        .iter()
        .find(|(name, _)| *name == v)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            format!("`{v}` is not one of {}", names.join(", "))
        })
}

const MODELS: [(&str, Model); 2] = [("sg", Model::Sg), ("toda", Model::Toda)];
const FORMATS: [(&str, Format); 2] = [("csv", Format::Csv), ("json", Format::Json)];
const KINDS: [(&str, KindChoice); 6] = [
    ("auto", KindChoice::Auto),
    ("gaussian_u", KindChoice::GaussianU),
    ("gaussian_v", KindChoice::GaussianV),
    ("gaussian_q", KindChoice::GaussianQ),
    ("gaussian_p", KindChoice::GaussianP),
    ("seeded_noise", KindChoice::SeededNoise),
];

fn name_of<T: PartialEq + Copy>(t: T, options: &[(&'static str, T)]) -> &'static str {
    options
        .iter()
        .find(|(_, o)| *o == t)
        .map(|(n, _)| *n)
        .unwrap_or("?")
}

impl Config {
    /// Assigns one key. Errors carry no line number.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match (section, key) {
            ("grid", "x0") => self.grid.x0 = float(v)?,
            ("grid", "dx") => self.grid.dx = positive(v)?,
            ("grid", "n") => self.grid.n = int(v)?,
            ("lattice", "j0") => self.lattice.j0 = int(v)?,
            ("lattice", "n") => self.lattice.n = int(v)?,
            ("system", "model") => self.system.model = enumerated(v, &MODELS)?,
            ("system", "a") => self.system.a = positive(v)?,
            ("system", "delta") => self.system.delta = float(v)?,
            ("system", "kappa") => self.system.kappa = positive(v)?,
            ("system", "gamma_phase") => self.system.gamma_phase = float(v)?,
            ("system", "kappa2") => {
                self.system.kappa2 = if v == "none" {
                    None
                } else {
                    Some(positive(v)?)
                }
            }
            ("system", "gamma_phase2") => self.system.gamma_phase2 = float(v)?,
            ("perturbation", "kind") => self.perturbation.kind = enumerated(v, &KINDS)?,
            ("perturbation", "amplitude") => {
                let x = float(v)?;
                if x < 0.0 {
                    return Err(format!("`{v}` must be >= 0"));
                }
                self.perturbation.amplitude = x
            }
            ("perturbation", "width") => self.perturbation.width = positive(v)?,
            ("perturbation", "center") => self.perturbation.center = float(v)?,
            ("perturbation", "seed") => self.perturbation.seed = int(v)?,
            ("experiment", "T") => self.experiment.t_final = positive(v)?,
            ("experiment", "dt") => self.experiment.dt = positive(v)?,
            ("experiment", "stride") => {
                let s: usize = int(v)?;
                if s == 0 {
                    return Err("stride must be >= 1".into());
                }
                self.experiment.stride = s
            }
            ("experiment", "c_max") => self.experiment.c_max = positive(v)?,
            ("output", "out_dir") => {
                if v.is_empty() {
                    return Err("out_dir is empty".into());
                }
                self.output.out_dir = v.to_string()
            }
            ("output", "format") => self.output.format = enumerated(v, &FORMATS)?,
            _ if !SECTIONS.contains(&section) => {
                return Err(format!("unknown section [{section}]"))
            }
            _ => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }

    /// Every key with its value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, &'static str, String)> {
        let s = &self.system;
        let p = &self.perturbation;
        let e = &self.experiment;
        vec![
            ("grid", "x0", self.grid.x0.to_string()),
            ("grid", "dx", self.grid.dx.to_string()),
            ("grid", "n", self.grid.n.to_string()),
            ("lattice", "j0", self.lattice.j0.to_string()),
            ("lattice", "n", self.lattice.n.to_string()),
            ("system", "model", name_of(s.model, &MODELS).into()),
            ("system", "a", s.a.to_string()),
            ("system", "delta", s.delta.to_string()),
            ("system", "kappa", s.kappa.to_string()),
            ("system", "gamma_phase", s.gamma_phase.to_string()),
            (
                "system",
                "kappa2",
                s.kappa2.map_or("none".into(), |k| k.to_string()),
            ),
            ("system", "gamma_phase2", s.gamma_phase2.to_string()),
            ("perturbation", "kind", name_of(p.kind, &KINDS).into()),
            ("perturbation", "amplitude", p.amplitude.to_string()),
            ("perturbation", "width", p.width.to_string()),
            ("perturbation", "center", p.center.to_string()),
            ("perturbation", "seed", p.seed.to_string()),
            ("experiment", "T", e.t_final.to_string()),
            ("experiment", "dt", e.dt.to_string()),
            ("experiment", "stride", e.stride.to_string()),
            ("experiment", "c_max", e.c_max.to_string()),
            ("output", "out_dir", self.output.out_dir.clone()),
            (
                "output",
                "format",
                name_of(self.output.format, &FORMATS).into(),
            ),
        ]
    }

    /// The configuration as text that [`parse_config`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (section, key, value) in self.entries() {
            if section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    /// Applies a `--set` override: `section.key=value`, or `key=value` when
    /// the key names exactly one section.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (lhs, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::at(None, format!("override `{assignment}` lacks `=`")))?;
        let lhs = lhs.trim();
        let (section, key) = match lhs.split_once('.') {
            Some((s, k)) => (s.to_string(), k.to_string()),
            None => {
                let owners: Vec<&str> = self
                    .entries()
                    .into_iter()
                    .filter(|(_, k, _)| *k == lhs)
                    .map(|(s, _, _)| s)
                    .collect();
                match owners.as_slice() {
                    [s] => (s.to_string(), lhs.to_string()),
                    [] => return Err(ConfigError::at(None, format!("unknown key `{lhs}`"))),
                    _ => {
                        return Err(ConfigError::at(
                            None,
                            format!("key `{lhs}` is ambiguous; write section.{lhs}"),
                        ))
                    }
                }
            }
        };
        self.set(&section, &key, value)
            .map_err(|m| ConfigError::at(None, format!("--set {lhs}: {m}")))
    }
}

/// Parses configuration text. Keys before the first section header, unknown
/// sections and keys, and malformed values are errors naming their line.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut cfg = Config::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = Some(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line_no, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::at(
                    line_no,
                    format!("unknown section [{name}]"),
                ));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::at(line_no, format!("expected `key = value`, got `{line}`"))
        })?;
        let sec = section
            .as_deref()
            .ok_or_else(|| ConfigError::at(line_no, "missing section header before first key"))?;
        cfg.set(sec, key.trim(), value)
            .map_err(|m| ConfigError::at(line_no, m))?;
    }
    Ok(cfg)
}
