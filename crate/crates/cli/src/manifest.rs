use std::path::Path;

use serde::Serialize;

use crate::commands::CliError;
use crate::{Command, Family};

#[derive(Debug, Clone, Serialize, Default)]
pub struct Tolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

/// Everything needed to rerun a command; copied into each artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input_path: Option<String>,
    pub output_dir: Option<String>,
    pub t: Option<f64>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturb: Option<f64>,
}

fn path(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

impl RunManifest {
    fn empty(command: &'static str) -> Self {
        RunManifest {
            tool: "maxface",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input_path: None,
            output_dir: None,
            t: None,
            resolution: None,
            seed: None,
            tolerances: Tolerances::default(),
            family: None,
            m: None,
            levels: None,
            refine_steps: None,
            samples: None,
            perturb: None,
        }
    }

    pub fn from_command(cmd: &Command) -> Result<Self, CliError> {
        let out = match cmd {
            Command::Preset { family, m, levels, out } => {
                let mut r = Self::empty("preset");
                r.family = Some(*family);
                r.output_dir = out.as_deref().and_then(path);
                match family {
                    Family::Catenoid => {}
                    Family::Chm => r.m = Some(*m as i64),
                    Family::Dihedral => {
                        r.m = Some(*m as i64);
                        r.levels = Some(*levels);
                    }
                }
                r
            }
            Command::Balance { io, tol_force, seed, perturb, .. } => {
                let mut r = Self::with_io("balance", &io.input, io.out.as_deref());
                r.tolerances.force = Some(*tol_force);
                r.seed = *seed;
                r.perturb = (*perturb > 0.0).then_some(*perturb);
                r
            }
            Command::Rigidity { io, tol_force } => {
                let mut r = Self::with_io("rigidity", &io.input, io.out.as_deref());
                r.tolerances.force = Some(*tol_force);
                r
            }
            Command::Predict { io, tol_force } => {
                let mut r = Self::with_io("predict", &io.input, io.out.as_deref());
                r.tolerances.force = Some(*tol_force);
                r
            }
            Command::Classify { io, t, samples, tol_force } => {
                let mut r = Self::with_io("classify", &io.input, io.out.as_deref());
                r.t = Some(*t);
                r.samples = Some(*samples);
                r.tolerances.force = Some(*tol_force);
                r
            }
            Command::Mesh { io, surface, resolution, tol_force } => {
                let mut r = Self::with_io("mesh", &io.input, io.out.as_deref());
                r.t = Some(surface.t);
                r.resolution = Some(*resolution);
                r.refine_steps = Some(surface.refine);
                r.tolerances = Tolerances { force: Some(*tol_force), period: Some(surface.tol_period) };
                r
            }
            Command::Defects { io, surface, tol_force } => {
                let mut r = Self::with_io("defects", &io.input, io.out.as_deref());
                r.t = Some(surface.t);
                r.refine_steps = Some(surface.refine);
                r.tolerances = Tolerances { force: Some(*tol_force), period: Some(surface.tol_period) };
                r
            }
            Command::Identities { m, out } => {
                let mut r = Self::empty("identities");
                r.m = Some(*m);
                r.output_dir = out.as_deref().and_then(path);
                r
            }
            Command::Validate { io } => Self::with_io("validate", &io.input, io.out.as_deref()),
            Command::Report { io, tol_force } => {
                let mut r = Self::with_io("report", &io.input, io.out.as_deref());
                r.tolerances.force = Some(*tol_force);
                r
            }
        };
        out.check()?;
        Ok(out)
    }

    fn with_io(command: &'static str, input: &Path, out: Option<&Path>) -> Self {
        let mut r = Self::empty(command);
        r.input_path = path(input);
        r.output_dir = out.and_then(path);
        r
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(t) = self.t {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Validation(format!("--t must lie in (0, 1), got {t}")));
            }
        }
        if let Some(r) = self.resolution {
            if r < 8 {
                return Err(CliError::Validation(format!("--resolution must be at least 8, got {r}")));
            }
        }
        for (name, v) in [("--tol-force", self.tolerances.force), ("--tol-period", self.tolerances.period)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Validation(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.perturb.is_some() && self.seed.is_none() {
            return Err(CliError::Validation("--perturb needs --seed".into()));
        }
        if self.command == "preset" && self.m.is_some_and(|m| m < 2) {
            return Err(CliError::Validation("--m must be at least 2".into()));
        }
        Ok(())
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}
