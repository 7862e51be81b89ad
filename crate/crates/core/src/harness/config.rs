//! Line-oriented `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::QuadratureSpec;
use crate::error::{Error, Result};
use crate::expansion::PotentialParams;
use crate::geometry::Family;
use crate::reduced::{ContractionOrder, GradientForm, Window};

/// Every key with its default, as shown by `--help`.
pub const CONFIG_KEYS: &str = "\
Configuration keys (`key = value`, `#` starts a comment, lists are comma separated):
  mu1 = 1                 self-interaction of the first species
  mu2 = 1                 self-interaction of the second species
  beta = 0                coupling constant
  a = 1, m = 2            first potential P = 1 + a/(1 + |x|^m), m > 1
  b = 1, n = 2            second potential Q = 1 + b/(1 + |x|^n), n > 1
  family = synchronized   synchronized | segregated | sign-changing-sync | sign-changing-seg
  k = 8                   bumps per circle (k >= 2)
  k_list = 10,20,40,80    values of k for `sweep`
  r_grid = 10,12.5,15     radii for `energy` and `residual`
  h_grid = 0.3,0.5        heights for `energy` and `residual`
  rho_grid = 10,12.5,15   second-species radii for segregated families
  fit_k = 4,6             k values of the oracle grid used by `fit`
  fit_r = 10,12.5,15      radii of the oracle grid
  fit_h = 0.3,0.5         heights of the oracle grid
  holdout_factor = 1.25   held-out radius = holdout_factor * max(fit_r)
  newton_tol = 1e-10      gradient tolerance of the Newton solvers
  contraction_tol = 1e-10 step tolerance of the fixed-point map
  max_iter = 200          Newton iteration cap
  quad_half_width = 12    half-width of the quadrature cube per bump orbit
  quad_panel_width = 1.5  Gauss-Legendre panel width
  quad_order = 8          coarsest Gauss-Legendre order
  quad_order_step = 4     order increase per refinement level
  quad_levels = 2         refinement levels (>= 2)
  window_delta = m/(8 pi) half-width of the r/(k ln k) window
  window_delta1 = pi(m+2)/(4m)  half-width of the h k window
  gradient_form = expansion  expansion | f1-exact | f1-display
  contraction_order = sequential   sequential | simultaneous
  seed = 0                seed for randomly drawn test points
  out = out               output directory (not part of the config hash)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub a: f64,
    pub m: f64,
    pub b: f64,
    pub n: f64,
    pub family: Family,
    pub k: usize,
    pub k_list: Vec<usize>,
    pub r_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub fit_k: Vec<usize>,
    pub fit_r: Vec<f64>,
    pub fit_h: Vec<f64>,
    pub holdout_factor: f64,
    pub newton_tol: f64,
    pub contraction_tol: f64,
    pub max_iter: usize,
    pub quad: QuadratureSpec,
    pub window: Window,
    pub gradient_form: GradientForm,
    pub sequential_contraction: bool,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mu1: 1.0,
            mu2: 1.0,
            beta: 0.0,
            a: 1.0,
            m: 2.0,
            b: 1.0,
            n: 2.0,
            family: Family::Synchronized,
            k: 8,
            k_list: vec![10, 20, 40, 80],
            r_grid: vec![10.0, 12.5, 15.0],
            h_grid: vec![0.3, 0.5],
            rho_grid: vec![10.0, 12.5, 15.0],
            fit_k: vec![4, 6],
            fit_r: vec![10.0, 12.5, 15.0],
            fit_h: vec![0.3, 0.5],
            holdout_factor: 1.25,
            newton_tol: 1e-10,
            contraction_tol: 1e-10,
            max_iter: 200,
            quad: QuadratureSpec::default(),
            window: Window::default_for(2.0),
            gradient_form: GradientForm::Expansion,
            sequential_contraction: true,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn potential_params(&self) -> PotentialParams {
        PotentialParams { a: self.a, m: self.m, b: self.b, n: self.n }
    }

    pub fn contraction_order(&self) -> ContractionOrder {
        if self.sequential_contraction {
            ContractionOrder::Sequential
        } else {
            ContractionOrder::Simultaneous
        }
    }

    /// SHA-256 of the canonical JSON form. The output directory is excluded so the same
    /// run written to two places carries the same hash.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0) {
            return Err(Error::Constraint(format!("m > 1 is required, got m = {}", self.m)));
        }
        if !(self.n > 1.0) {
            return Err(Error::Constraint(format!("n > 1 is required, got n = {}", self.n)));
        }
        if !(self.mu1 > 0.0 && self.mu2 > 0.0) {
            return Err(Error::Constraint("mu1 > 0 and mu2 > 0 are required".into()));
        }
        for &k in std::iter::once(&self.k).chain(&self.k_list).chain(&self.fit_k) {
            if k < 2 {
                return Err(Error::Constraint(format!("k >= 2 is required, got k = {k}")));
            }
        }
        for (name, v) in [
            ("newton_tol", self.newton_tol),
            ("contraction_tol", self.contraction_tol),
            ("holdout_factor", self.holdout_factor),
            ("quad_half_width", self.quad.half_width),
            ("quad_panel_width", self.quad.panel_width),
            ("window_delta", self.window.delta),
            ("window_delta1", self.window.delta1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Constraint(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Constraint("max_iter must be positive".into()));
        }
        if self.quad.levels < 2 || self.quad.order < 2 {
            return Err(Error::Constraint("quad_levels >= 2 and quad_order >= 2 are required".into()));
        }
        for (name, grid) in [("r_grid", &self.r_grid), ("rho_grid", &self.rho_grid), ("fit_r", &self.fit_r)] {
            if grid.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::Constraint(format!("{name} entries must be positive")));
            }
        }
        for (name, grid) in [("h_grid", &self.h_grid), ("fit_h", &self.fit_h)] {
            if grid.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                return Err(Error::Constraint(format!("{name} entries must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Parse { line, message: format!("`{key}` expects a number, got `{v}`") })
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Parse { line, message: format!("`{key}` expects a non-negative integer, got `{v}`") })
}

fn parse_list<T>(line: usize, key: &str, v: &str, item: impl Fn(usize, &str, &str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = v.split(',').map(|s| item(line, key, s.trim())).collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Parse { line, message: format!("`{key}` needs at least one value") });
    }
    Ok(items)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let (mut delta, mut delta1) = (None, None);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, got `{body}`") })?;
        let (key, v) = (key.trim(), value.trim());
        if v.is_empty() {
            return Err(Error::Parse { line, message: format!("`{key}` has no value") });
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}` (first set on line {first}, again on line {line})") });
        }
        match key {
            "mu1" => cfg.mu1 = parse_f64(line, key, v)?,
            "mu2" => cfg.mu2 = parse_f64(line, key, v)?,
            "beta" => cfg.beta = parse_f64(line, key, v)?,
            "a" => cfg.a = parse_f64(line, key, v)?,
            "m" => cfg.m = parse_f64(line, key, v)?,
            "b" => cfg.b = parse_f64(line, key, v)?,
            "n" => cfg.n = parse_f64(line, key, v)?,
            "family" => {
                cfg.family = match v {
                    "synchronized" => Family::Synchronized,
                    "segregated" => Family::Segregated,
                    "sign-changing-sync" => Family::SignChangingSync,
                    "sign-changing-seg" => Family::SignChangingSeg,
                    _ => return Err(Error::Parse { line, message: format!("unknown family `{v}`") }),
                }
            }
            "k" => cfg.k = parse_usize(line, key, v)?,
            "k_list" => cfg.k_list = parse_list(line, key, v, parse_usize)?,
            "r_grid" => cfg.r_grid = parse_list(line, key, v, parse_f64)?,
            "h_grid" => cfg.h_grid = parse_list(line, key, v, parse_f64)?,
            "rho_grid" => cfg.rho_grid = parse_list(line, key, v, parse_f64)?,
            "fit_k" => cfg.fit_k = parse_list(line, key, v, parse_usize)?,
            "fit_r" => cfg.fit_r = parse_list(line, key, v, parse_f64)?,
            "fit_h" => cfg.fit_h = parse_list(line, key, v, parse_f64)?,
            "holdout_factor" => cfg.holdout_factor = parse_f64(line, key, v)?,
            "newton_tol" => cfg.newton_tol = parse_f64(line, key, v)?,
            "contraction_tol" => cfg.contraction_tol = parse_f64(line, key, v)?,
            "max_iter" => cfg.max_iter = parse_usize(line, key, v)?,
            "quad_half_width" => cfg.quad.half_width = parse_f64(line, key, v)?,
            "quad_panel_width" => cfg.quad.panel_width = parse_f64(line, key, v)?,
            "quad_order" => cfg.quad.order = parse_usize(line, key, v)?,
            "quad_order_step" => cfg.quad.order_step = parse_usize(line, key, v)?,
            "quad_levels" => cfg.quad.levels = parse_usize(line, key, v)?,
            "window_delta" => delta = Some(parse_f64(line, key, v)?),
            "window_delta1" => delta1 = Some(parse_f64(line, key, v)?),
            "gradient_form" => {
                cfg.gradient_form = match v {
                    "expansion" => GradientForm::Expansion,
                    "f1-exact" => GradientForm::F1Exact,
                    "f1-display" => GradientForm::F1Display,
                    _ => return Err(Error::Parse { line, message: format!("unknown gradient_form `{v}`") }),
                }
            }
            "contraction_order" => {
                cfg.sequential_contraction = match v {
                    "sequential" => true,
                    "simultaneous" => false,
                    _ => return Err(Error::Parse { line, message: format!("unknown contraction_order `{v}`") }),
                }
            }
            "seed" => {
                cfg.seed = v
                    .parse()
                    .map_err(|_| Error::Parse { line, message: format!("`seed` expects an unsigned integer, got `{v}`") })?
            }
            "out" => cfg.out = PathBuf::from(v),
            _ => return Err(Error::Parse { line, message: format!("unknown key `{key}`") }),
        }
    }
    // window defaults depend on the final m
    let default = Window::default_for(cfg.m);
    cfg.window = Window { delta: delta.unwrap_or(default.delta), delta1: delta1.unwrap_or(default.delta1) };
    cfg.validate()?;
    Ok(cfg)
}
