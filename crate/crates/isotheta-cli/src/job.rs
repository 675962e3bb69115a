//! Job file schema and input validation.

use serde::Deserialize;
use std::fmt;
use std::path::Path;

/// Failure classification for exit codes: input problems exit 1,
/// validation problems exit 2.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Validation(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "{m}"),
            Failure::Validation(m) => write!(f, "{m}"),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    /// Must match the subcommand the job is submitted to.
    pub command: String,
    /// Branch points as [re, im] pairs; an even count of at least 4.
    #[serde(default)]
    pub curve: Vec<[f64; 2]>,
    #[serde(default)]
    pub characteristic: Option<CharacteristicSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub suites: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicSpec {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Theta series truncation and quadrature target.
    #[serde(default = "default_series")]
    pub series: f64,
    /// Local error tolerance for monodromy transport steps.
    #[serde(default = "default_transport")]
    pub transport: f64,
    /// Acceptance threshold for residuals and identity defects.
    #[serde(default = "default_validation")]
    pub validation: f64,
    /// Acceptance threshold when comparing independent constructions.
    #[serde(default = "default_cross_form")]
    pub cross_form: f64,
}

fn default_series() -> f64 {
    1e-12
}
fn default_transport() -> f64 {
    1e-10
}
fn default_validation() -> f64 {
    1e-6
}
fn default_cross_form() -> f64 {
    1e-5
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            series: default_series(),
            transport: default_transport(),
            validation: default_validation(),
            cross_form: default_cross_form(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub count: usize,
}

pub fn load(path: &Path) -> CliResult<JobSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let job: JobSpec = serde_json::from_str(&text).map_err(|e| {
        Failure::Input(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    sanity_check(&job)?;
    Ok(job)
}

fn sanity_check(job: &JobSpec) -> CliResult<()> {
    for (i, t) in [
        ("series", job.tolerances.series),
        ("transport", job.tolerances.transport),
        ("validation", job.tolerances.validation),
        ("cross_form", job.tolerances.cross_form),
    ] {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Input(format!(
                "tolerance {i} must be a positive finite number, got {t}"
            )));
        }
    }
    if let Some(g) = &job.grid {
        if g.count == 0 {
            return Err(Failure::Input("grid count must be at least 1".into()));
        }
        if !(g.radius.is_finite() && g.radius >= 0.0) {
            return Err(Failure::Input(format!(
                "grid radius must be a finite non-negative number, got {}",
                g.radius
            )));
        }
        if !(g.center[0].is_finite() && g.center[1].is_finite()) {
            return Err(Failure::Input("grid center must be finite".into()));
        }
    }
    for (k, pt) in job.curve.iter().enumerate() {
        if !(pt[0].is_finite() && pt[1].is_finite()) {
            return Err(Failure::Input(format!("curve point {k} is not finite")));
        }
    }
    if let Some(ch) = &job.characteristic {
        if ch.p.len() != ch.q.len() {
            return Err(Failure::Input(format!(
                "characteristic arms differ in length: p has {}, q has {}",
                ch.p.len(),
                ch.q.len()
            )));
        }
        for v in ch.p.iter().chain(ch.q.iter()) {
            if !v.is_finite() {
                return Err(Failure::Input("characteristic entries must be finite".into()));
            }
        }
    }
    Ok(())
}
