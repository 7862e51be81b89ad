//! Batch front end: configuration, subcommand pipeline and reproducible artifacts.
//!
//! Every artifact carries the config hash: CSV files start with a `# config_hash=<hex>`
//! line and JSON files have a top-level `config_hash` field. Each run also writes
//! `manifest.json` listing the artifacts with their SHA-256 digests.

pub mod checks;
pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ansatz::{residual_norm, AnsatzField};
use crate::coupling::CouplingParams;
use crate::energy::{base_profile, energy_direct, sweep_csv as energy_csv, MAX_DIRECT_BUMPS};
use crate::error::{Error, Result};
use crate::expansion::ExpansionConstants;
use crate::geometry::{BumpConfiguration, Family};
use crate::ground_state::RadialProfile;
use crate::potential::{builtin_potential, Potential};
use crate::reduced::{
    scaling_sweep, solve_contraction, solve_newton, solve_segregated, sweep_csv, ContractionOptions, NewtonOptions,
    ReducedProblem, SegregatedProblem, Window,
};

use checks::{CheckContext, TimedOutcome};
pub use config::{parse_config, RunConfig, CONFIG_KEYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    GroundState,
    Constants,
    Energy,
    Fit,
    Reduce,
    Sweep,
    Residual,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::GroundState,
        Subcommand::Constants,
        Subcommand::Energy,
        Subcommand::Fit,
        Subcommand::Reduce,
        Subcommand::Sweep,
        Subcommand::Residual,
        Subcommand::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::GroundState => "ground-state",
            Subcommand::Constants => "constants",
            Subcommand::Energy => "energy",
            Subcommand::Fit => "fit",
            Subcommand::Reduce => "reduce",
            Subcommand::Sweep => "sweep",
            Subcommand::Residual => "residual",
            Subcommand::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

/// Maps a module error onto the exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Constraint(_) | Error::Io(_) | Error::Json(_) | Error::InvalidArgument(_) => {
            EXIT_USAGE
        }
        _ => EXIT_NUMERICAL,
    }
}

/// A subcommand failure with its context.
#[derive(Debug)]
pub struct RunError {
    pub subcommand: &'static str,
    pub error: Error,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.subcommand, self.error)
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.error)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub artifacts: Vec<PathBuf>,
    /// Verify only: per-check outcomes with timings.
    pub checks: Vec<TimedOutcome>,
    pub exit_code: i32,
}

/// Writes artifacts with the embedded hash and remembers their digests.
struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    written: Vec<(String, String)>,
}

impl ArtifactWriter {
    fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash, written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push((name.to_string(), config::hex(&Sha256::digest(bytes))));
        Ok(())
    }

    fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        let text = format!("# config_hash={}\n{body}", self.hash);
        self.write(name, text.as_bytes())
    }

    fn json(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        match &mut v {
            Value::Object(map) => {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            other => {
                v = json!({ "config_hash": self.hash, "data": other });
            }
        }
        self.write(name, (serde_json::to_string_pretty(&v)? + "\n").as_bytes())
    }

    fn manifest(mut self, cfg: &RunConfig, cmd: Subcommand, extra: Value) -> Result<Vec<PathBuf>> {
        let artifacts: Vec<Value> = self.written.iter().map(|(n, s)| json!({ "file": n, "sha256": s })).collect();
        let manifest = json!({
            "tool": "multibump",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": cmd.name(),
            "config_hash": self.hash,
            "seed": cfg.seed,
            "tolerances": {
                "newton_tol": cfg.newton_tol,
                "contraction_tol": cfg.contraction_tol,
                "max_iter": cfg.max_iter,
                "quadrature": cfg.quad,
            },
            "config": cfg,
            "artifacts": artifacts,
            "result": extra,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join("manifest.json"), text)?;
        let mut paths: Vec<PathBuf> = self.written.drain(..).map(|(n, _)| self.dir.join(n)).collect();
        paths.push(self.dir.join("manifest.json"));
        Ok(paths)
    }
}

/// Reads the embedded hash of an artifact, if it has one.
pub fn embedded_hash(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        return Ok(text.lines().next().and_then(|l| l.strip_prefix("# config_hash=")).map(str::to_string));
    }
    if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text)?;
        return Ok(v.get("config_hash").and_then(Value::as_str).map(str::to_string));
    }
    Ok(None)
}

/// Artifacts in `dir` whose embedded hash differs from `hash`.
pub fn stale_artifacts(dir: &Path, hash: &str) -> Result<Vec<PathBuf>> {
    let mut stale = Vec::new();
    if !dir.is_dir() {
        return Ok(stale);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        if path.is_file() {
            if let Some(h) = embedded_hash(&path)? {
                if h != hash {
                    stale.push(path);
                }
            }
        }
    }
    Ok(stale)
}

fn potentials(cfg: &RunConfig) -> Result<(Potential, Potential)> {
    Ok((builtin_potential(cfg.a, cfg.m)?, builtin_potential(cfg.b, cfg.n)?))
}

fn configuration(cfg: &RunConfig, k: usize, r: f64, rho: f64, h: f64) -> Result<BumpConfiguration> {
    match cfg.family {
        Family::Synchronized => BumpConfiguration::synchronized(k, r, h),
        Family::Segregated => BumpConfiguration::segregated(k, r, rho, h),
        Family::SignChangingSync => BumpConfiguration::sign_changing_sync(k, r, h),
        Family::SignChangingSeg => BumpConfiguration::sign_changing_seg(k, r, rho, h),
    }
}

/// `(r, ρ)` pairs of the configured grid.
fn radius_pairs(cfg: &RunConfig) -> Vec<(f64, Option<f64>)> {
    if cfg.family.is_segregated() {
        cfg.r_grid.iter().flat_map(|&r| cfg.rho_grid.iter().map(move |&rho| (r, Some(rho)))).collect()
    } else {
        cfg.r_grid.iter().map(|&r| (r, None)).collect()
    }
}

/// Constants consumed by `reduce` and `sweep`: `fit_constants.json` from the output
/// directory when present (its hash must match), the analytic values otherwise.
fn load_constants(cfg: &RunConfig, hash: &str, profile: &RadialProfile) -> Result<ExpansionConstants> {
    let path = cfg.out.join("fit_constants.json");
    if path.is_file() {
        let v: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
        let found = v.get("config_hash").and_then(Value::as_str).unwrap_or("");
        if found != hash {
            return Err(Error::Constraint(format!(
                "{} was produced by config {found}, the live config hashes to {hash}",
                path.display()
            )));
        }
        return Ok(serde_json::from_value(v.get("constants").cloned().unwrap_or(Value::Null))?);
    }
    let coupling = CouplingParams::new(cfg.mu1, cfg.mu2, cfg.beta)?;
    ExpansionConstants::analytic(&coupling, profile, &cfg.potential_params())
}

fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(cmd: Subcommand, cfg: &RunConfig) -> std::result::Result<RunReport, RunError> {
    run_inner(cmd, cfg, &mut |_| {}).map_err(|error| RunError { subcommand: cmd.name(), error })
}

/// As [`run`], with a callback invoked after each `verify` check.
pub fn run_with_progress(
    cmd: Subcommand,
    cfg: &RunConfig,
    progress: &mut dyn FnMut(&TimedOutcome),
) -> std::result::Result<RunReport, RunError> {
    run_inner(cmd, cfg, progress).map_err(|error| RunError { subcommand: cmd.name(), error })
}

fn run_inner(cmd: Subcommand, cfg: &RunConfig, progress: &mut dyn FnMut(&TimedOutcome)) -> Result<RunReport> {
    cfg.validate()?;
    let hash = cfg.hash();
    if cmd == Subcommand::Verify {
        return verify(cfg, hash, progress);
    }
    let mut w = ArtifactWriter::new(&cfg.out, hash.clone())?;
    let extra = match cmd {
        Subcommand::GroundState => ground_state(cfg, &mut w)?,
        Subcommand::Constants => {
            let profile = base_profile()?;
            let coupling = CouplingParams::new(cfg.mu1, cfg.mu2, cfg.beta)?;
            let c = ExpansionConstants::analytic(&coupling, &profile, &cfg.potential_params())?;
            w.json("constants.json", json!({ "coupling": coupling, "constants": c }))?;
            json!({ "a0": c.a0, "a1": c.a1, "c_beta": c.c_beta })
        }
        Subcommand::Energy => energy(cfg, &mut w)?,
        Subcommand::Fit => {
            let profile = base_profile()?;
            let coupling = CouplingParams::new(cfg.mu1, cfg.mu2, cfg.beta)?;
            let (p, _) = potentials(cfg)?;
            if cfg.a != cfg.b || cfg.m != cfg.n {
                return Err(Error::Constraint("fit uses one potential for both species: need a = b and m = n".into()));
            }
            let fit = checks::fit_with(
                &profile,
                &coupling,
                &p,
                &cfg.potential_params(),
                &cfg.quad,
                &cfg.fit_k,
                &cfg.fit_r,
                &cfg.fit_h,
                cfg.holdout_factor,
            )?;
            write_fit(&mut w, &fit)?;
            json!({ "a1": fit.constants.a1, "basis": fit.constants.basis, "fit_residual": fit.constants.fit_residual })
        }
        Subcommand::Reduce => reduce(cfg, &hash, &mut w)?,
        Subcommand::Sweep => {
            let profile = base_profile()?;
            let c = load_constants(cfg, &hash, &profile)?;
            let rows = scaling_sweep(&c, &cfg.potential_params(), &cfg.k_list, cfg.gradient_form, Some(cfg.window))?;
            w.csv("sweep.csv", &sweep_csv(&rows))?;
            json!({ "rows": rows.len(), "failed": rows.iter().filter(|r| r.point.is_none()).count() })
        }
        Subcommand::Residual => residual(cfg, &mut w)?,
        Subcommand::Verify => unreachable!(),
    };
    let artifacts = w.manifest(cfg, cmd, extra)?;
    Ok(RunReport { artifacts, checks: Vec::new(), exit_code: EXIT_OK })
}

fn ground_state(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let mut mus = vec![1.0, cfg.mu1, cfg.mu2];
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    let mut summary = Vec::new();
    for mu in mus {
        let p = RadialProfile::solve_default(mu)?;
        let tag = format!("{mu}").replace('.', "p");
        w.csv(&format!("ground_state_mu{tag}.csv"), &p.to_csv())?;
        w.json(&format!("ground_state_mu{tag}.json"), p.sidecar())?;
        summary.push(json!({ "mu": mu, "center_value": p.center_value(), "tail_amplitude": p.tail_amplitude() }));
    }
    Ok(Value::Array(summary))
}

fn energy(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let per_config = if cfg.family.is_segregated() { 4 * cfg.k } else { 2 * cfg.k };
    if per_config > MAX_DIRECT_BUMPS {
        return Err(Error::Constraint(format!(
            "{per_config} bumps exceed the direct quadrature limit of {MAX_DIRECT_BUMPS}; use `fit` on small k and the expansion (`reduce`, `sweep`) instead"
        )));
    }
    let profile = base_profile()?;
    let coupling = CouplingParams::new(cfg.mu1, cfg.mu2, cfg.beta)?;
    let (p, q) = potentials(cfg)?;
    let mut rows = Vec::new();
    for (r, rho) in radius_pairs(cfg) {
        for &h in &cfg.h_grid {
            let field = AnsatzField::new(configuration(cfg, cfg.k, r, rho.unwrap_or(r), h)?, coupling, Arc::clone(&profile))?;
            rows.push((cfg.k, r, h, rho, energy_direct(&field, &p, &q, &cfg.quad)?));
        }
    }
    w.csv("energy.csv", &energy_csv(&rows))?;
    let breakdowns: Vec<Value> =
        rows.iter().map(|(k, r, h, rho, e)| json!({ "k": k, "r": r, "h": h, "rho": rho, "breakdown": e })).collect();
    w.json("energy.json", json!({ "family": cfg.family, "rows": breakdowns }))?;
    Ok(json!({ "evaluations": rows.len() }))
}

fn write_fit(w: &mut ArtifactWriter, fit: &checks::FitArtifacts) -> Result<()> {
    let mut s = String::from("k,r,h,energy,error\n");
    for x in &fit.samples {
        let _ = writeln!(s, "{},{},{},{},{}", x.k, f17(x.r), f17(x.h), f17(x.energy), f17(x.error));
    }
    w.csv("fit_samples.csv", &s)?;
    let mut s = String::from("k,r,h,oracle,oracle_error,expansion,bound\n");
    for x in &fit.holdout {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            x.k,
            f17(x.r),
            f17(x.h),
            f17(x.oracle),
            f17(x.oracle_error),
            f17(x.expansion),
            f17(x.bound)
        );
    }
    w.csv("fit_holdout.csv", &s)?;
    w.json("fit_constants.json", json!({ "constants": fit.constants }))
}

fn reduce(cfg: &RunConfig, hash: &str, w: &mut ArtifactWriter) -> Result<Value> {
    let profile = base_profile()?;
    let c = load_constants(cfg, hash, &profile)?;
    let pp = cfg.potential_params();
    let newton = NewtonOptions { tol: cfg.newton_tol, max_iter: cfg.max_iter, window: Some(cfg.window) };
    let (r0, h0) = Window::center(cfg.m, cfg.k);
    let result = if cfg.family.is_segregated() {
        let p = SegregatedProblem { constants: c, pot: pp, k: cfg.k };
        let point = solve_segregated(&p, (r0, r0, h0), &newton)?;
        json!({ "family": cfg.family, "newton": point })
    } else {
        let p = ReducedProblem::new(c, pp, cfg.k, cfg.gradient_form)?;
        let point = solve_newton(&p, (r0, h0), &newton)?;
        // the fixed-point map solves the F1 system; a failure is recorded, not fatal
        let contraction = solve_contraction(
            &p,
            &ContractionOptions {
                tol: cfg.contraction_tol,
                order: cfg.contraction_order(),
                window: Some(cfg.window),
                ..Default::default()
            },
        );
        let contraction = match contraction {
            Ok(pt) => json!(pt),
            Err(e) => json!({ "error": e.to_string() }),
        };
        json!({ "family": cfg.family, "form": cfg.gradient_form, "newton": point, "contraction": contraction })
    };
    w.json("reduced.json", json!({ "constants": c, "result": result }))?;
    Ok(result)
}

fn residual(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<Value> {
    let profile = base_profile()?;
    let coupling = CouplingParams::new(cfg.mu1, cfg.mu2, cfg.beta)?;
    let (p, q) = potentials(cfg)?;
    let mut s = String::from("k,r,h,rho,ell_u,ell_v,total,err,in_window\n");
    let mut count = 0;
    for (r, rho) in radius_pairs(cfg) {
        for &h in &cfg.h_grid {
            let field = AnsatzField::new(configuration(cfg, cfg.k, r, rho.unwrap_or(r), h)?, coupling, Arc::clone(&profile))?;
            let n = residual_norm(&field, &p, &q, &cfg.quad)?;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                cfg.k,
                f17(r),
                f17(h),
                rho.map_or(String::new(), f17),
                f17(n.ell_u),
                f17(n.ell_v),
                f17(n.total),
                f17(n.error_estimate),
                n.in_window
            );
            count += 1;
        }
    }
    w.csv("residual.csv", &s)?;
    Ok(json!({ "evaluations": count }))
}

fn verify(cfg: &RunConfig, hash: String, progress: &mut dyn FnMut(&TimedOutcome)) -> Result<RunReport> {
    let stale = stale_artifacts(&cfg.out, &hash)?;
    let mut w = ArtifactWriter::new(&cfg.out, hash)?;
    let ctx = CheckContext::new(cfg.seed, cfg.quad)?;
    let suite = checks::run_suite(&ctx, |t| progress(t));
    if let Ok(fit) = &suite.fit {
        write_fit(&mut w, fit)?;
    }
    if !suite.sweep.is_empty() {
        w.csv("sweep.csv", &sweep_csv(&suite.sweep))?;
    }
    let outcomes: Vec<&checks::CheckOutcome> = suite.checks.iter().map(|t| &t.outcome).collect();
    w.json("verify.json", json!({ "checks": outcomes }))?;
    let all_passed = outcomes.iter().all(|o| o.passed) && stale.is_empty();
    let stale_names: Vec<String> = stale.iter().map(|p| p.display().to_string()).collect();
    let passed: Vec<String> = outcomes.iter().filter(|o| o.passed).map(|o| format!("[{}] {}", o.id, o.name)).collect();
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("[{}] {}", o.id, o.name)).collect();
    let extra = json!({ "passed": passed, "failed": failed, "stale_artifacts": stale_names, "all_passed": all_passed });
    let artifacts = w.manifest(cfg, Subcommand::Verify, extra)?;
    Ok(RunReport { artifacts, checks: suite.checks, exit_code: if all_passed { EXIT_OK } else { EXIT_ACCEPTANCE } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_in(dir: &Path, text: &str) -> RunConfig {
        let mut cfg = parse_config(text).unwrap();
        cfg.out = dir.to_path_buf();
        cfg
    }

    #[test]
    fn energy_refuses_large_k() {
        let dir = tempfile::tempdir().unwrap();
        let err = run(Subcommand::Energy, &cfg_in(dir.path(), "k = 9")).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        assert!(err.to_string().contains("fit"), "{err}");
    }

    #[test]
    fn sweep_is_deterministic_and_hashed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_in(dir.path(), "k_list = 10, 20");
        run(Subcommand::Sweep, &cfg).unwrap();
        let first = fs::read(dir.path().join("sweep.csv")).unwrap();
        let manifest = fs::read(dir.path().join("manifest.json")).unwrap();
        run(Subcommand::Sweep, &cfg).unwrap();
        assert_eq!(first, fs::read(dir.path().join("sweep.csv")).unwrap());
        assert_eq!(manifest, fs::read(dir.path().join("manifest.json")).unwrap());
        let hash = embedded_hash(&dir.path().join("sweep.csv")).unwrap().unwrap();
        assert_eq!(hash, cfg.hash());
        assert!(stale_artifacts(dir.path(), &hash).unwrap().is_empty());
    }

    #[test]
    fn reduce_rejects_constants_from_another_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_in(dir.path(), "k = 20");
        fs::write(
            dir.path().join("fit_constants.json"),
            json!({ "config_hash": "deadbeef", "constants": ExpansionConstants::zero(crate::expansion::InteractionBasis::ScaledLateral) })
                .to_string(),
        )
        .unwrap();
        let err = run(Subcommand::Reduce, &cfg).unwrap_err();
        assert!(matches!(err.error, Error::Constraint(_)));
        assert_eq!(stale_artifacts(dir.path(), &cfg.hash()).unwrap().len(), 1);
    }

    #[test]
    fn reduce_with_analytic_constants() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_in(dir.path(), "k = 20");
        let report = run(Subcommand::Reduce, &cfg).unwrap();
        assert!(report.artifacts.iter().any(|p| p.ends_with("reduced.json")));
        let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("reduced.json")).unwrap()).unwrap();
        assert!(v["result"]["newton"]["grad_norm"].as_f64().unwrap() < 1e-10);
    }

    #[test]
    fn segregated_reduce() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_in(dir.path(), "family = segregated\nbeta = -0.5\nk = 20");
        run(Subcommand::Reduce, &cfg).unwrap();
        let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("reduced.json")).unwrap()).unwrap();
        let (r, rho) = (v["result"]["newton"]["r_star"].as_f64().unwrap(), v["result"]["newton"]["rho_star"].as_f64().unwrap());
        assert!((r - rho).abs() < 1e-8);
    }
}
