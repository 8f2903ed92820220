//! Versioned JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use loewner_core::evolution::{ClosedFormKind, EvolutionFamily};
use loewner_core::sampling::DEFAULT_SEED;
use loewner_core::solver::SolverConfig;
use loewner_core::{CompactSet, Domain, FieldSpec, Point};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Picard,
    HerglotzCheck,
    VerifyFamily,
    Variational,
    Recover,
    Demo,
}

/// Family given in closed form instead of through a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormSpec {
    pub closed_form: ClosedFormKind,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    /// Pairs for Herglotz and contraction checks.
    pub pairs: usize,
    /// Radius of the region the pairs are drawn from.
    pub radius: f64,
    /// Points for axiom, univalence and recovery checks.
    pub points: usize,
    /// Compact set the points are drawn from.
    pub compact: CompactSet,
    /// Explicit sample times; defaults to piece midpoints.
    pub times: Option<Vec<f64>>,
    pub per_piece: usize,
    pub triples: Option<Vec<(f64, f64, f64)>>,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            pairs: 200,
            radius: 0.95,
            points: 20,
            compact: CompactSet::Ball { radius: 0.5 },
            times: None,
            per_piece: 4,
            triples: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub family: Option<ClosedFormSpec>,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub z0: Option<Point>,
    #[serde(default)]
    pub samples: SampleSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// Invalid input: reported with exit code 3.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            InputError(format!(
                "schema error at `{}` (line {}, column {}): {}",
                e.path(),
                inner.line(),
                inner.column(),
                inner
            ))
        })?;
        if cfg.version != SCHEMA_VERSION {
            return Err(InputError(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn field(&self) -> Result<&FieldSpec, InputError> {
        let f = self.field.as_ref().ok_or_else(|| InputError("`field` is required".into()))?;
        f.validate().map_err(|e| InputError(format!("`field`: {e}")))?;
        Ok(f)
    }

    pub fn family(&self) -> Result<EvolutionFamily, InputError> {
        match (&self.family, &self.field) {
            (Some(_), Some(_)) => Err(InputError("give either `field` or `family`, not both".into())),
            (Some(c), None) => Ok(EvolutionFamily::closed_form(c.closed_form.clone(), c.domain)),
            (None, Some(_)) => Ok(EvolutionFamily::field_backed(self.field()?.clone(), self.solver)),
            (None, None) => Err(InputError("`field` or `family` is required".into())),
        }
    }

    pub fn t_end(&self) -> Result<f64, InputError> {
        self.t_end.ok_or_else(|| InputError("`t_end` is required".into()))
    }

    pub fn z0(&self) -> Result<&Point, InputError> {
        self.z0.as_ref().ok_or_else(|| InputError("`z0` is required".into()))
    }

    /// The radial-field configuration run by the demo.
    pub fn demo() -> Self {
        RunConfig {
            version: SCHEMA_VERSION,
            command: Some(Command::Demo),
            field: Some(FieldSpec::radial_constant(1.0, Domain::UnitDisc)),
            family: None,
            s: 0.0,
            t_end: Some(1.0),
            z0: Some(Point::real(0.5)),
            samples: SampleSpec::default(),
            solver: SolverConfig::default(),
            seed: None,
            tol: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_round_trips() {
        let text = serde_json::to_string(&RunConfig::demo()).unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.command, Some(Command::Demo));
        assert_eq!(back.t_end, Some(1.0));
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = RunConfig::parse(r#"{"version": 1, "samples": {"pairz": 3}}"#).unwrap_err();
        assert!(err.0.contains("samples"), "{}", err.0);
        assert!(err.0.contains("line 1"), "{}", err.0);
    }

    #[test]
    fn wrong_version_rejected() {
        let err = RunConfig::parse(r#"{"version": 2}"#).unwrap_err();
        assert!(err.0.contains("version 2"));
    }

    #[test]
    fn field_and_family_exclusive() {
        let mut cfg = RunConfig::demo();
        cfg.family = Some(ClosedFormSpec {
            closed_form: ClosedFormKind::Tanh,
            domain: Domain::UnitDisc,
        });
        assert!(cfg.family().is_err());
        cfg.field = None;
        assert!(cfg.family().is_ok());
        assert!(cfg.field().is_err());
    }
}
