//! Run configuration: a single JSON document, validated into [`RunConfig`].

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Preset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Model,
    Manifold,
    Scaling,
    Spectral,
    ReportAll,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Model => "model",
            Command::Manifold => "manifold",
            Command::Scaling => "scaling",
            Command::Spectral => "spectral",
            Command::ReportAll => "report-all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Check tolerances. Zero is accepted and makes the corresponding checks
/// demand exact agreement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative error of exact Bergman densities on the projective line.
    pub bergman_rel: f64,
    /// Lower bound on sandwich margins, as `-sandwich`.
    pub sandwich: f64,
    /// Galerkin value against the model closed form, matching `q`.
    pub model_abs: f64,
    /// Galerkin value for a non-matching `q`.
    pub model_zero: f64,
    /// Weight deviation against its closed form, relative.
    pub deviation_rel: f64,
    /// Exact operator identities.
    pub identity_abs: f64,
    /// `∫B dV` against the dimension, relative.
    pub trace_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bergman_rel: 1e-6,
            sandwich: 1e-9,
            model_abs: 1e-4,
            model_zero: 1e-8,
            deviation_rel: 1e-9,
            identity_abs: 1e-12,
            trace_rel: 1e-6,
        }
    }
}

impl Tolerances {
    fn validate(&self, path: &str) -> Result<()> {
        let fields = [
            ("bergman_rel", self.bergman_rel),
            ("sandwich", self.sandwich),
            ("model_abs", self.model_abs),
            ("model_zero", self.model_zero),
            ("deviation_rel", self.deviation_rel),
            ("identity_abs", self.identity_abs),
            ("trace_rel", self.trace_rel),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(
                    &format!("{path}.{name}"),
                    format!("tolerance must be finite and ≥ 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSizes {
    pub radial: usize,
    pub angular: usize,
}

/// Fields shared by every command. In a `report-all` document they may also
/// appear in per-command sections.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    preset: Option<String>,
    d: Option<i32>,
    s: Option<f64>,
    lambda: Option<Vec<f64>>,
    c: Option<f64>,
    k_list: Option<Vec<u64>>,
    q: Option<usize>,
    #[serde(alias = "D")]
    degree: Option<usize>,
    nu: Option<f64>,
    nu_sweep: Option<Vec<f64>>,
    grid: Option<GridSizes>,
    tolerances: Option<Tolerances>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Command,
    output: Option<PathBuf>,
    preset: Option<String>,
    d: Option<i32>,
    s: Option<f64>,
    lambda: Option<Vec<f64>>,
    c: Option<f64>,
    k_list: Option<Vec<u64>>,
    q: Option<usize>,
    #[serde(alias = "D")]
    degree: Option<usize>,
    nu: Option<f64>,
    nu_sweep: Option<Vec<f64>>,
    grid: Option<GridSizes>,
    tolerances: Option<Tolerances>,
    model: Option<RawSection>,
    manifold: Option<RawSection>,
    scaling: Option<RawSection>,
    spectral: Option<RawSection>,
}

/// A validated run with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub output: Option<PathBuf>,
    /// One entry for single commands, four (in command order) for `report-all`.
    pub runs: Vec<CommandConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommandConfig {
    pub command: Command,
    /// Canonical preset string, `None` for `model` and `spectral`.
    pub preset: Option<String>,
    #[serde(skip)]
    pub preset_value: Option<Preset>,
    /// Model coefficients for `model` and `spectral`.
    pub lambda: Option<Vec<f64>>,
    pub k_list: Vec<u64>,
    pub q: usize,
    pub degree: usize,
    /// Energy cutoffs, in the same units as `λ`.
    pub nu: Vec<f64>,
    pub grid: GridSizes,
    pub tolerances: Tolerances,
}

pub const DEFAULT_DEGREE: usize = 16;
pub const DEFAULT_MODEL_LAMBDA: [f64; 3] = [-1.0, 2.0, 3.0];
pub const DEFAULT_SPECTRAL_LAMBDA: [f64; 1] = [-1.0];
pub const DEFAULT_MANIFOLD_PRESET: &str = "perturbed(1, 3)";
pub const DEFAULT_SCALING_PRESET: &str = "quartic(1, 1)";

fn invalid(path: &str, message: String) -> Error {
    Error::Validation {
        path: path.to_string(),
        message,
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse {
            path: if path.is_empty() { "$".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    let shared = RawSection {
        preset: raw.preset.clone(),
        d: raw.d,
        s: raw.s,
        lambda: raw.lambda.clone(),
        c: raw.c,
        k_list: raw.k_list.clone(),
        q: raw.q,
        degree: raw.degree,
        nu: raw.nu,
        nu_sweep: raw.nu_sweep.clone(),
        grid: raw.grid,
        tolerances: raw.tolerances,
    };
    if let Some(preset) = &shared.preset {
        check_preset_name(preset, "preset")?;
    }
    let sections = [
        (Command::Model, &raw.model),
        (Command::Manifold, &raw.manifold),
        (Command::Scaling, &raw.scaling),
        (Command::Spectral, &raw.spectral),
    ];
    for (cmd, section) in &sections {
        if let Some(p) = section.as_ref().and_then(|s| s.preset.as_ref()) {
            check_preset_name(p, &format!("{cmd}.preset"))?;
        }
        if section.is_some() && raw.command != Command::ReportAll {
            return Err(invalid(
                cmd.name(),
                format!("section `{cmd}` is only allowed in report-all runs"),
            ));
        }
    }
    let runs = match raw.command {
        Command::ReportAll => {
            let stray = shared.preset.is_some()
                || shared.lambda.is_some()
                || shared.k_list.is_some()
                || shared.q.is_some();
            if stray {
                return Err(invalid(
                    "$",
                    "report-all takes run parameters inside per-command sections".into(),
                ));
            }
            sections
                .iter()
                .map(|(cmd, section)| {
                    let merged = (*section).clone().unwrap_or_default();
                    let tolerances = merged.tolerances.or(shared.tolerances);
                    resolve(
                        *cmd,
                        RawSection {
                            tolerances,
                            ..merged
                        },
                        cmd.name(),
                    )
                })
                .collect::<Result<Vec<_>>>()?
        }
        cmd => vec![resolve(cmd, shared, "")?],
    };
    Ok(RunConfig {
        command: raw.command,
        output: raw.output,
        runs,
    })
}

/// Unknown preset names are a parse error, unlike bad parameters.
fn check_preset_name(preset: &str, path: &str) -> Result<()> {
    let name = preset.split('(').next().unwrap_or("").trim();
    const KNOWN: [&str; 5] = [
        "fubini-study",
        "anti-fubini-study",
        "perturbed",
        "gaussian",
        "quartic",
    ];
    if KNOWN.contains(&name) {
        Ok(())
    } else {
        Err(Error::Parse {
            path: path.to_string(),
            message: format!("unknown weight preset `{name}`"),
        })
    }
}

fn field(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn resolve_preset(raw: &RawSection, default: &str, prefix: &str) -> Result<Preset> {
    let path = field(prefix, "preset");
    let text = raw.preset.as_deref().unwrap_or(default);
    let err = |e: Error| invalid(&path, e.to_string());
    if text.contains('(') {
        if raw.d.is_some()
            || raw.s.is_some()
            || raw.c.is_some()
            || (raw.lambda.is_some() && text.starts_with("gaussian"))
        {
            return Err(invalid(
                &path,
                "give preset parameters either inline or as fields, not both".into(),
            ));
        }
        return text.parse::<Preset>().map_err(err);
    }
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| {
            invalid(
                &field(prefix, name),
                format!("preset `{text}` needs `{name}`"),
            )
        })
    };
    let d = || need(raw.d.map(f64::from), "d").map(|v| v as i32);
    let preset = match text {
        "fubini-study" => Preset::FubiniStudy { d: d()? },
        "anti-fubini-study" => Preset::AntiFubiniStudy { d: d()? },
        "perturbed" => Preset::Perturbed {
            d: d()?,
            s: need(raw.s, "s")?,
        },
        "gaussian" => Preset::Gaussian {
            lambda: raw.lambda.clone().ok_or_else(|| {
                invalid(&field(prefix, "lambda"), "gaussian needs `lambda`".into())
            })?,
        },
        "quartic" => Preset::Quartic {
            lambda: need(
                raw.lambda.as_ref().and_then(|l| l.first().copied()),
                "lambda",
            )?,
            c: need(raw.c, "c")?,
        },
        other => {
            return Err(Error::Parse {
                path,
                message: format!("unknown weight preset `{other}`"),
            })
        }
    };
    preset.validate().map_err(err)?;
    Ok(preset)
}

fn check_k_list(k_list: &[u64], min: u64, path: &str) -> Result<()> {
    if k_list.is_empty() {
        return Err(invalid(path, "k_list must not be empty".into()));
    }
    if k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(
            path,
            format!("k_list must be strictly increasing, got {k_list:?}"),
        ));
    }
    if k_list[0] < min {
        return Err(invalid(
            path,
            format!("k_list entries must be at least {min}, got {}", k_list[0]),
        ));
    }
    Ok(())
}

fn resolve(command: Command, raw: RawSection, prefix: &str) -> Result<CommandConfig> {
    let tolerances = raw.tolerances.unwrap_or_default();
    tolerances.validate(&field(prefix, "tolerances"))?;
    let degree = raw.degree.unwrap_or(DEFAULT_DEGREE);
    let k_path = field(prefix, "k_list");
    let mut cfg = CommandConfig {
        command,
        preset: None,
        preset_value: None,
        lambda: None,
        k_list: Vec::new(),
        q: 0,
        degree,
        nu: Vec::new(),
        grid: GridSizes {
            radial: 0,
            angular: 0,
        },
        tolerances,
    };
    match command {
        Command::Model | Command::Spectral => {
            if raw.preset.is_some() {
                return Err(invalid(
                    &field(prefix, "preset"),
                    format!("`{command}` runs take `lambda`, not a preset"),
                ));
            }
            let default: &[f64] = if command == Command::Model {
                &DEFAULT_MODEL_LAMBDA
            } else {
                &DEFAULT_SPECTRAL_LAMBDA
            };
            let lambda = raw.lambda.clone().unwrap_or_else(|| default.to_vec());
            let lpath = field(prefix, "lambda");
            if lambda.is_empty() || lambda.len() > 3 {
                return Err(invalid(
                    &lpath,
                    format!("lambda needs 1 to 3 entries, got {}", lambda.len()),
                ));
            }
            if let Some(bad) = lambda.iter().find(|l| **l == 0.0 || !l.is_finite()) {
                return Err(invalid(
                    &lpath,
                    format!("lambda entries must be nonzero and finite, got {bad}"),
                ));
            }
            let negatives = lambda.iter().filter(|l| **l < 0.0).count();
            cfg.q = raw.q.unwrap_or(negatives);
            if cfg.q > lambda.len() {
                return Err(invalid(
                    &field(prefix, "q"),
                    format!("q = {} exceeds n = {}", cfg.q, lambda.len()),
                ));
            }
            let min_abs = lambda.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
            cfg.nu = match (&raw.nu, &raw.nu_sweep) {
                (Some(_), Some(_)) => {
                    return Err(invalid(
                        &field(prefix, "nu"),
                        "give either nu or nu_sweep".into(),
                    ))
                }
                (Some(nu), None) => vec![*nu],
                (None, Some(sweep)) => sweep.clone(),
                (None, None) => vec![0.5 * min_abs],
            };
            if cfg.nu.is_empty() || cfg.nu.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(invalid(
                    &field(prefix, "nu"),
                    format!("energy cutoffs must be finite and ≥ 0, got {:?}", cfg.nu),
                ));
            }
            if command == Command::Spectral {
                cfg.k_list = raw.k_list.clone().unwrap_or_else(|| vec![64, 256, 1024]);
                check_k_list(&cfg.k_list, 3, &k_path)?;
                let need =
                    crate::spectral::SequenceGrid::required_radial(*cfg.k_list.last().unwrap());
                cfg.grid = raw.grid.unwrap_or(GridSizes {
                    radial: need,
                    angular: 16,
                });
            } else if raw.k_list.is_some() {
                return Err(invalid(&k_path, "model runs do not take k_list".into()));
            }
            cfg.lambda = Some(lambda);
        }
        Command::Manifold => {
            let preset = resolve_preset(&raw, DEFAULT_MANIFOLD_PRESET, prefix)?;
            if !preset.is_projective() {
                return Err(invalid(
                    &field(prefix, "preset"),
                    format!("`{}` is not a projective-line preset", preset.name()),
                ));
            }
            cfg.k_list = raw.k_list.clone().unwrap_or_else(|| vec![4, 8, 16, 32]);
            check_k_list(&cfg.k_list, 2, &k_path)?;
            if *cfg.k_list.last().unwrap() > 4096 {
                return Err(invalid(&k_path, "manifold runs support k ≤ 4096".into()));
            }
            cfg.q = raw.q.unwrap_or(0);
            if cfg.q > 1 {
                return Err(invalid(
                    &field(prefix, "q"),
                    format!("q must be 0 or 1 on a curve, got {}", cfg.q),
                ));
            }
            if cfg.q == 0 && preset.degree() < 0 {
                return Err(invalid(
                    &field(prefix, "q"),
                    format!(
                        "kd < 0 for d = {}: H⁰ vanishes, run q = 1 instead",
                        preset.degree()
                    ),
                ));
            }
            cfg.preset = Some(preset.to_string());
            cfg.preset_value = Some(preset);
        }
        Command::Scaling => {
            let preset = resolve_preset(&raw, DEFAULT_SCALING_PRESET, prefix)?;
            let poly = crate::scaling::preset_polynomial(&preset)
                .map_err(|e| invalid(&field(prefix, "preset"), e.to_string()))?;
            if poly.vars_used() > 1 {
                return Err(invalid(
                    &field(prefix, "preset"),
                    "scaling runs use one-variable weights".into(),
                ));
            }
            cfg.k_list = raw
                .k_list
                .clone()
                .unwrap_or_else(|| vec![16, 100, 1000, 10_000, 1_000_000]);
            check_k_list(&cfg.k_list, 2, &k_path)?;
            cfg.grid = raw.grid.unwrap_or(GridSizes {
                radial: 48,
                angular: 8,
            });
            cfg.preset = Some(preset.to_string());
            cfg.preset_value = Some(preset);
        }
        Command::ReportAll => unreachable!("report-all is expanded into its parts"),
    }
    if let Some(g) = raw.grid {
        if g.radial < 2 || g.angular < 1 {
            return Err(invalid(
                &field(prefix, "grid"),
                format!("grid too small: {g:?}"),
            ));
        }
    }
    Ok(cfg)
}
