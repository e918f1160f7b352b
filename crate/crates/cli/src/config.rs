//! Run configuration: flags, an optional JSON file, and defaults, merged in
//! that order of precedence.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use trajectoid_forge::curves::FunctionSpec;

/// Every tunable of every stage. Field names double as the JSON config keys;
/// unset fields fall through to the config file, then to stage defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct RunConfig {
    /// Stage name; set from the subcommand.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Target curve CSV: `s,x,y,kappa` arclength samples or an `x,f` table.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    /// End slopes `start,end` of an `x,f` table; estimated when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<f64>>,
    /// Inline function table; config file only.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    /// Built-in graph: flat, semicircle, sine or sine-arch.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    /// Amplitude of a sine or sine-arch graph.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Angular wavenumber of a sine graph.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    /// Domain length of a built-in graph.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<f64>,
    /// Function samples of a built-in graph.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Arclength intervals of the reparametrized curve.
    #[arg(long, help_heading = "Curve")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,

    /// Ball radius: lift radius, or the ball rolled when no body is given.
    #[arg(long, help_heading = "Lift and closure")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Radius search interval `lo,hi`.
    #[arg(long, value_delimiter = ',', help_heading = "Lift and closure")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<Vec<f64>>,
    /// Largest number of rotated periods tried.
    #[arg(long = "nmax", help_heading = "Lift and closure")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Radius grid points over the bracket.
    #[arg(long, help_heading = "Lift and closure")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,

    /// Closure certificate JSON.
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert: Option<PathBuf>,
    /// Closed loop CSV; defaults to `loop.csv` beside the certificate.
    #[arg(long = "loop", help_heading = "Carving")]
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_path: Option<PathBuf>,
    /// Groove floor half-width.
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Groove depth.
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Relative groove size bound; defaults to 1.5 max(h, b) / (r + h).
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Wedge opening for the stability check.
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Icosphere subdivision level of the coarse mesh.
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_level: Option<usize>,
    /// Target vertex count across the groove band.
    #[arg(long, help_heading = "Carving")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_across: Option<usize>,

    /// Rolling body JSON written by `carve`.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<PathBuf>,
    /// Plane inclination, radians.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Rolling resistance coefficient, a length.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Integrator time step.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Simulated time.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Initial rolling speed.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed0: Option<f64>,
    /// Keep one sample in this many steps.
    #[arg(long, help_heading = "Simulation")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,

    /// Pointwise bound on the control g with curvature g'.
    #[arg(long, help_heading = "Man over board")]
    #[serde(default, alias = "R", skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Path length.
    #[arg(long, help_heading = "Man over board")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Random controls sampled.
    #[arg(long, help_heading = "Man over board")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Sampler seed.
    #[arg(long, help_heading = "Man over board")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// closed-forms, injectivity, closure, carving, dynamics, mob or all.
    #[arg(long, help_heading = "Verification")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,

    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! fill {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Fills every unset field from `lower`.
    pub fn or(mut self, lower: &RunConfig) -> RunConfig {
        fill!(self, lower;
            command, curve, slopes, function, shape, amplitude, wavenumber, domain, samples, intervals,
            r, bracket, n_max, grid, cert, loop_path, b, h, epsilon, beta, mesh_level, mesh_across,
            body, alpha, rho, step, duration, speed0, record_every,
            bound, lambda, trials, seed, suite, out, threads);
        self
    }
}

/// A configuration value that failed validation, with its field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub field: &'static str,
    pub message: String,
}

pub fn invalid(field: &'static str, message: impl Into<String>) -> Invalid {
    Invalid { field, message: message.into() }
}

/// Requires a set value.
pub fn need<T: Clone>(field: &'static str, v: &Option<T>) -> Result<T, Invalid> {
    v.clone().ok_or_else(|| invalid(field, "required"))
}

/// Requires a positive finite value when set.
pub fn positive(field: &'static str, v: Option<f64>) -> Result<Option<f64>, Invalid> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(field, format!("{x} must be positive and finite"))),
        _ => Ok(v),
    }
}

pub fn non_negative(field: &'static str, v: Option<f64>) -> Result<Option<f64>, Invalid> {
    match v {
        Some(x) if !(x >= 0.0 && x.is_finite()) => Err(invalid(field, format!("{x} must be non-negative and finite"))),
        _ => Ok(v),
    }
}

/// Checks the value ranges that do not depend on the stage.
pub fn validate(c: &RunConfig) -> Result<(), Invalid> {
    for (field, v) in [
        ("amplitude", c.amplitude.map(f64::abs)),
        ("wavenumber", c.wavenumber.map(f64::abs)),
        ("beta", c.beta),
        ("rho", c.rho),
        ("speed0", c.speed0),
    ] {
        non_negative(field, v)?;
    }
    for (field, v) in [
        ("domain", c.domain),
        ("r", c.r),
        ("b", c.b),
        ("h", c.h),
        ("epsilon", c.epsilon),
        ("alpha", c.alpha),
        ("step", c.step),
        ("duration", c.duration),
        ("bound", c.bound),
        ("lambda", c.lambda),
    ] {
        positive(field, v)?;
    }
    if let Some(sl) = &c.slopes {
        if sl.len() != 2 || !sl.iter().all(|x| x.is_finite()) {
            return Err(invalid("slopes", format!("{sl:?} is not a pair of finite slopes")));
        }
    }
    if let Some(br) = &c.bracket {
        match br[..] {
            [lo, hi] if lo > 0.0 && lo < hi && hi.is_finite() => {}
            _ => return Err(invalid("bracket", format!("{br:?} is not an interval 0 < lo < hi"))),
        }
    }
    for (field, v) in [
        ("samples", c.samples),
        ("intervals", c.intervals),
        ("n_max", c.n_max),
        ("grid", c.grid),
        ("trials", c.trials),
        ("record_every", c.record_every),
        ("threads", c.threads),
        ("mesh_across", c.mesh_across),
    ] {
        if v == Some(0) {
            return Err(invalid(field, "must be at least 1"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let flags = RunConfig {
            r: Some(3.0),
            ..RunConfig::default()
        };
        let file: RunConfig = serde_json::from_str(r#"{"r": 2.0, "b": 0.1, "R": 0.4}"#).unwrap();
        let merged = flags.or(&file);
        assert_eq!(merged.r, Some(3.0));
        assert_eq!(merged.b, Some(0.1));
        assert_eq!(merged.bound, Some(0.4));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"radius": 1}"#).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig {
            command: Some("close".into()),
            bracket: Some(vec![1.0, 20.0]),
            loop_path: Some("x/loop.csv".into()),
            ..RunConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"loop\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), c);
    }

    #[test]
    fn ranges_are_checked_with_field_paths() {
        let bad = |c: RunConfig| validate(&c).unwrap_err().field;
        assert_eq!(bad(RunConfig { b: Some(-1.0), ..Default::default() }), "b");
        assert_eq!(bad(RunConfig { bracket: Some(vec![2.0, 1.0]), ..Default::default() }), "bracket");
        assert_eq!(bad(RunConfig { trials: Some(0), ..Default::default() }), "trials");
        assert!(validate(&RunConfig::default()).is_ok());
    }
}
