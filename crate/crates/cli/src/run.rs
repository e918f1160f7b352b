//! Pipeline stages. Each stage reads its inputs, writes its artifacts into
//! the output directory and records the defaults it applied in the config.

use std::io::{BufRead, Read};
use std::path::{Path, PathBuf};

use trajectoid_forge::carve::{carve, write_stl, BodySidecar, GrooveSpec, MeshOptions};
use trajectoid_forge::closure::{concatenate_rotated, find_closing_radius, ClosureCertificate, ClosureOptions};
use trajectoid_forge::curves::{arclength_reparam, ClosedForm, FunctionSpec, PlanarCurve};
use trajectoid_forge::dynamics::{
    contact_track, embed_plane, mob_minimality_test, simulate_rolling, MobOptions, ResistanceModel, RollingBody,
    SimOptions,
};
use trajectoid_forge::io::{open, read_csv_rows, read_json, write_json, write_with};
use trajectoid_forge::lift::{closure_defect, lift, monodromy, SphericalCurve};
use trajectoid_forge::verify::{Suite, Verifier};
use trajectoid_forge::Error;

use crate::config::{invalid, need, Invalid, RunConfig};

/// Why a stage stopped.
#[derive(Debug)]
pub enum Failure {
    Invalid(Invalid),
    Domain(Error),
}

impl From<Invalid> for Failure {
    fn from(e: Invalid) -> Self {
        Failure::Invalid(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Stage<T> = Result<T, Failure>;

/// What a finished stage leaves behind.
pub struct Outcome {
    pub artifacts: Vec<String>,
    /// False when a verification ran but some check failed.
    pub pass: bool,
}

struct Sink<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Sink<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, v: &T) -> Stage<()> {
        Ok(write_json(&self.path(name), v)?)
    }

    fn done(self, pass: bool) -> Outcome {
        Outcome {
            artifacts: self.written,
            pass,
        }
    }
}

pub fn run(stage: &str, cfg: &mut RunConfig, out: &Path) -> Stage<Outcome> {
    let mut sink = Sink {
        dir: out,
        written: Vec::new(),
    };
    let pass = match stage {
        "lift" => lift_stage(cfg, &mut sink).map(|_| true),
        "close" => close_stage(cfg, &mut sink).map(|_| true),
        "carve" => carve_stage(cfg, &mut sink).map(|_| true),
        "simulate" => simulate_stage(cfg, &mut sink).map(|_| true),
        "mob" => mob_stage(cfg, &mut sink).map(|_| true),
        "verify" => verify_stage(cfg, &mut sink),
        _ => Err(invalid("command", format!("unknown stage {stage:?}")).into()),
    }?;
    Ok(sink.done(pass))
}

/// Fourth-order one-sided slope at the start of `v` with spacing `h`.
fn end_slope(v: &[f64], h: f64) -> f64 {
    (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
}

/// A uniform `x,f` table; end slopes by one-sided differences unless given.
fn function_table(rows: &[Vec<f64>], slopes: Option<&[f64]>) -> Stage<FunctionSpec> {
    let n = rows.len();
    if n < 5 {
        return Err(invalid("curve", "a function table needs at least 5 rows").into());
    }
    let (x0, x1) = (rows[0][0], rows[n - 1][0]);
    let h = (x1 - x0) / (n - 1) as f64;
    for (i, row) in rows.iter().enumerate() {
        if (row[0] - (x0 + i as f64 * h)).abs() > 1e-9 * (x1 - x0).abs() {
            return Err(invalid("curve", format!("abscissa {} of row {} is off the uniform grid", row[0], i + 2)).into());
        }
    }
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let rev: Vec<f64> = values.iter().rev().copied().collect();
    let (s0, s1) = match slopes {
        Some(&[a, b]) => (a, b),
        _ => (end_slope(&values, h), -end_slope(&rev, h)),
    };
    Ok(FunctionSpec::from_samples(x0, x1 - x0, values, s0, s1)?)
}

fn builtin(cfg: &mut RunConfig, shape: &str) -> Stage<FunctionSpec> {
    let samples = *cfg.samples.get_or_insert(257);
    let (form, x0, length) = match shape {
        "flat" => (ClosedForm::Flat, 0.0, *cfg.domain.get_or_insert(1.0)),
        "semicircle" => {
            let d = *cfg.domain.get_or_insert(2.0);
            (ClosedForm::Semicircle { radius: 0.5 * d }, -0.5 * d, d)
        }
        "sine" => (
            ClosedForm::Sine {
                amplitude: *cfg.amplitude.get_or_insert(0.2),
                wavenumber: *cfg.wavenumber.get_or_insert(2.0 * std::f64::consts::PI),
            },
            0.0,
            *cfg.domain.get_or_insert(1.0),
        ),
        "sine-arch" => (
            ClosedForm::SineArch {
                amplitude: *cfg.amplitude.get_or_insert(0.2),
            },
            0.0,
            *cfg.domain.get_or_insert(1.0),
        ),
        _ => {
            return Err(invalid("shape", format!("unknown shape {shape:?}; expected flat, semicircle, sine or sine-arch")).into())
        }
    };
    Ok(FunctionSpec::from_closed_form(form, x0, length, samples)?)
}

/// The target curve from a CSV path, an inline table or a built-in shape,
/// in that order; written back out as `curve.csv`.
fn load_curve(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<PlanarCurve> {
    let curve = if let Some(path) = cfg.curve.clone() {
        let mut reader = open(&path)?;
        let mut header = String::new();
        reader.read_line(&mut header).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let rest = std::io::Cursor::new(header.clone()).chain(reader);
        match header.trim() {
            "s,x,y,kappa" => PlanarCurve::read_csv(rest)?,
            "x,f" => {
                let rows = read_csv_rows(rest, &["x", "f"], "function table CSV")?;
                let spec = function_table(&rows, cfg.slopes.as_deref())?;
                arclength_reparam(&spec, *cfg.intervals.get_or_insert(2048))?
            }
            other => {
                return Err(invalid("curve", format!("unrecognised CSV header {other:?}; expected s,x,y,kappa or x,f")).into())
            }
        }
    } else {
        let spec = match (cfg.function.clone(), cfg.shape.clone()) {
            (Some(f), _) => f,
            (None, Some(shape)) => builtin(cfg, &shape)?,
            (None, None) => return Err(invalid("curve", "give --curve, --shape or a function table").into()),
        };
        arclength_reparam(&spec, *cfg.intervals.get_or_insert(2048))?
    };
    let path = sink.path("curve.csv");
    write_with(&path, |w| curve.write_csv(w))?;
    Ok(curve)
}

fn lift_stage(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<()> {
    let curve = load_curve(cfg, sink)?;
    let r = need("r", &cfg.r)?;
    let l = lift(&curve, r)?;
    let path = sink.path("lift.csv");
    write_with(&path, |w| l.write_csv(w))?;
    let defect = closure_defect(&curve, r)?;
    let summary = serde_json::json!({
        "r": r,
        "length": l.length(),
        "closure_defect": defect,
        "monodromy": monodromy(&curve, r).ok(),
    });
    sink.json("lift.json", &summary)?;
    println!("lift: r = {r}, length {:.6}, closure defect {defect:.6e}", l.length());
    Ok(())
}

fn close_stage(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<()> {
    let curve = load_curve(cfg, sink)?;
    let l = curve.length();
    let bracket = cfg.bracket.get_or_insert_with(|| vec![l, 20.0 * l]).clone();
    let n_max = *cfg.n_max.get_or_insert(64);
    let opts = ClosureOptions {
        grid: *cfg.grid.get_or_insert(ClosureOptions::default().grid),
        ..ClosureOptions::default()
    };
    let cert = find_closing_radius(&curve, bracket[0], bracket[1], n_max, &opts)?;
    let piece = lift(&curve, cert.r)?;
    let closed = concatenate_rotated(&piece, &cert.monodromy, cert.n)?;
    sink.json("cert.json", &cert)?;
    let path = sink.path("loop.csv");
    write_with(&path, |w| closed.write_csv(w))?;
    println!(
        "close: r = {:.6}, n = {}, seam gap {:.6e}, simple {}",
        cert.r, cert.n, cert.seam_gap, cert.simple
    );
    Ok(())
}

fn carve_stage(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<()> {
    let cert_path = need("cert", &cfg.cert)?;
    let cert: ClosureCertificate = read_json(&cert_path)?;
    let loop_path = cfg
        .loop_path
        .get_or_insert_with(|| cert_path.parent().unwrap_or(Path::new(".")).join("loop.csv"))
        .clone();
    let closed = SphericalCurve::read_csv(open(&loop_path)?, true)?;
    if (closed.radius() - cert.r).abs() > 1e-9 * cert.r {
        return Err(invalid("loop", format!("loop radius {} does not match the certificate's {}", closed.radius(), cert.r)).into());
    }
    let b = need("b", &cfg.b)?;
    let h = *cfg.h.get_or_insert(GrooveSpec::default_depth(cert.r, b));
    let beta = *cfg.beta.get_or_insert(0.0);
    let spec = GrooveSpec::new(cert.r, b, h, cfg.epsilon, beta)?;
    let defaults = MeshOptions::default();
    let mesh = MeshOptions {
        level: *cfg.mesh_level.get_or_insert(defaults.level),
        across: *cfg.mesh_across.get_or_insert(defaults.across),
        ..defaults
    };
    // the body touches the plane along the mirror image of the lift
    let body = carve(&closed.mirrored(), &spec, &mesh)?;
    let path = sink.path("body.stl");
    write_with(&path, |w| write_stl(w, body.mesh()))?;
    sink.json("body.json", &BodySidecar::of(&body))?;
    sink.json("rolling_body.json", &RollingBody::from_grooved(&body)?)?;
    println!(
        "carve: {} faces, volume {:.6}, delta {:.6}, drift {:.6e}",
        body.mesh().faces.len(),
        body.mass().volume,
        body.delta(),
        body.drift().norm()
    );
    Ok(())
}

fn simulate_stage(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<()> {
    let target = load_curve(cfg, sink)?;
    let body = match &cfg.body {
        Some(path) => read_json::<RollingBody>(path)?,
        None => RollingBody::ball(need("r", &cfg.r)?)?,
    };
    let plane = embed_plane(need("alpha", &cfg.alpha)?)?;
    let model = ResistanceModel::CoulombRolling {
        rho: *cfg.rho.get_or_insert(0.0),
    };
    let d = SimOptions::default();
    let opts = SimOptions {
        duration: *cfg.duration.get_or_insert(d.duration),
        step: *cfg.step.get_or_insert(d.step),
        speed0: *cfg.speed0.get_or_insert(d.speed0),
        record_every: *cfg.record_every.get_or_insert(d.record_every),
        ..d
    };
    let traj = simulate_rolling(&body, &plane, &model, &target, &opts)?;
    let track = contact_track(&traj, &plane, &target, None)?;
    let path = sink.path("trajectory.csv");
    write_with(&path, |w| traj.write_csv(w))?;
    sink.json("trajectory.json", &traj.meta)?;
    sink.json("contact.json", &track)?;
    let last = traj.samples.last().map_or(0.0, |p| p.s);
    println!(
        "simulate: {} samples, s = {last:.6}, max contact deviation {:.6e}",
        traj.samples.len(),
        track.max_deviation
    );
    Ok(())
}

fn mob_stage(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<()> {
    let d = MobOptions::default();
    let opts = MobOptions {
        bound: *cfg.bound.get_or_insert(d.bound),
        length: *cfg.lambda.get_or_insert(d.length),
        radius: *cfg.r.get_or_insert(d.radius),
        trials: *cfg.trials.get_or_insert(d.trials),
        seed: *cfg.seed.get_or_insert(d.seed),
        ..d
    };
    let rep = mob_minimality_test(&opts)?;
    sink.json("mob.json", &rep)?;
    println!(
        "mob: f_const {:.6}, sampled min {:.6}, {} of {} controls below, pass {}",
        rep.f_const, rep.f_min_sampled, rep.beating, rep.trials, rep.pass
    );
    Ok(())
}

/// Six significant digits for the table; the JSON keeps full precision.
fn sig6(x: f64) -> String {
    if x == 0.0 || x.is_nan() {
        format!("{x}")
    } else {
        format!("{x:.5e}")
    }
}

fn verify_stage(cfg: &mut RunConfig, sink: &mut Sink) -> Stage<bool> {
    let name = cfg.suite.get_or_insert_with(|| "all".into()).clone();
    let suite: Suite = name.parse().map_err(|e: Error| invalid("suite", e.to_string()))?;
    let report = Verifier::new().run(suite);
    sink.json("verify.json", &report)?;
    for n in suite.criteria() {
        let status = if report.criterion_pass(n) == Some(true) { "PASS" } else { "FAIL" };
        println!("{status} {n:>2} {}", trajectoid_forge::verify::anchor(n));
        for c in report.checks.iter().filter(|c| c.criterion == n) {
            println!(
                "     {} {:<44} got {:<12} expected {}",
                if c.pass { "ok  " } else { "FAIL" },
                c.check,
                sig6(c.got),
                c.expected
            );
        }
    }
    println!("verify {suite}: {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(report.pass)
}
