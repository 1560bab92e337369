//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use regrefl_core::iteration::{IterationConfig, SamplingGrid};
use regrefl_core::solver::{default_delta_schedule, SolverConfig};
use regrefl_core::states::StateTwo;
use regrefl_core::{Error, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    ThetaW(f64),
    Sigma(f64),
}

impl Angle {
    pub fn theta_w(self) -> f64 {
        match self {
            Angle::ThetaW(t) => t,
            Angle::Sigma(s) => std::f64::consts::FRAC_PI_2 - s,
        }
    }

    pub fn sigma(self) -> f64 {
        match self {
            Angle::ThetaW(t) => std::f64::consts::FRAC_PI_2 - t,
            Angle::Sigma(s) => s,
        }
    }
}

/// Everything a run needs. Defaults are those of [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// default 2
    pub gamma: f64,
    /// default 1
    pub rho0: f64,
    /// default 2
    pub rho1: f64,
    /// wedge angle or its complement; unset by default
    pub angle: Option<Angle>,
    /// default 64 x 64
    pub resolution: (usize, usize),
    /// default `auto`, i.e. `0.1 (c2bar - |xibar|)`
    pub epsilon: Option<f64>,
    /// default `0.1 * 2^-k`, k = 0..=10
    pub deltas: Vec<f64>,
    /// default true
    pub delta_zero: bool,
    /// default 0.7
    pub omega: f64,
    /// default `auto`, i.e. `1e-8 c2bar`
    pub tol_fb: Option<f64>,
    /// default 1e-9
    pub tol_picard: f64,
    /// default 60
    pub max_picard: usize,
    /// default 100
    pub max_outer: usize,
    /// default `out`
    pub out_dir: PathBuf,
    /// default true
    pub emit_psi: bool,
    /// default true
    pub emit_global: bool,
    /// default true
    pub emit_coefficients: bool,
    /// default 128 x 128
    pub global_n: (usize, usize),
    /// `[xi_min, xi_max, eta_min, eta_max]` in original coordinates; default
    /// `auto`, i.e. `[-1.25, 0.25, 0, 1.25] * c2bar`
    pub global_window: Option<[f64; 4]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: 2.0,
            rho0: 1.0,
            rho1: 2.0,
            angle: None,
            resolution: (64, 64),
            epsilon: None,
            deltas: default_delta_schedule(),
            delta_zero: true,
            omega: 0.7,
            tol_fb: None,
            tol_picard: 1e-9,
            max_picard: 60,
            max_outer: 100,
            out_dir: PathBuf::from("out"),
            emit_psi: true,
            emit_global: true,
            emit_coefficients: true,
            global_n: (128, 128),
            global_window: None,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(format!("{key}: cannot parse '{v}'")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn pair(key: &str, v: &str) -> Result<(usize, usize)> {
    match list::<usize>(key, v)?.as_slice() {
        [n] => Ok((*n, *n)),
        [a, b] => Ok((*a, *b)),
        _ => Err(cfg_err(format!("{key}: expected one or two integers"))),
    }
}

fn auto<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        f(key, v).map(Some)
    }
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "auto".into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut theta_w = None;
        let mut sigma = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| cfg_err(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "gamma" => c.gamma = num(k, v)?,
                "rho0" => c.rho0 = num(k, v)?,
                "rho1" => c.rho1 = num(k, v)?,
                "theta_w" => theta_w = Some(num(k, v)?),
                "sigma" => sigma = Some(num(k, v)?),
                "resolution" => c.resolution = pair(k, v)?,
                "epsilon" => c.epsilon = auto(k, v, num)?,
                "deltas" => c.deltas = list(k, v)?,
                "delta_zero" => c.delta_zero = boolean(k, v)?,
                "omega" => c.omega = num(k, v)?,
                "tol_fb" => c.tol_fb = auto(k, v, num)?,
                "tol_picard" => c.tol_picard = num(k, v)?,
                "max_picard" => c.max_picard = num(k, v)?,
                "max_outer" => c.max_outer = num(k, v)?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                "emit_psi" => c.emit_psi = boolean(k, v)?,
                "emit_global" => c.emit_global = boolean(k, v)?,
                "emit_coefficients" => c.emit_coefficients = boolean(k, v)?,
                "global_n" => c.global_n = pair(k, v)?,
                "global_window" => {
                    c.global_window = auto(k, v, |k, v| {
                        <[f64; 4]>::try_from(list::<f64>(k, v)?).map_err(|_| cfg_err(format!("{k}: expected four numbers")))
                    })?
                }
                _ => return Err(cfg_err(format!("line {}: unknown key '{k}'", ln + 1))),
            }
        }
        c.angle = match (theta_w, sigma) {
            (Some(_), Some(_)) => return Err(cfg_err("theta_w and sigma are mutually exclusive")),
            (Some(t), None) => Some(Angle::ThetaW(t)),
            (None, Some(s)) => Some(Angle::Sigma(s)),
            (None, None) => None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) || self.deltas.iter().any(|&d| !(d > 0.0)) {
            return Err(cfg_err("deltas must be positive and strictly decreasing"));
        }
        if self.global_n.0 == 0 || self.global_n.1 == 0 {
            return Err(cfg_err("global_n must be positive"));
        }
        self.iteration(0.0).validate()
    }

    /// Numerical settings only; the output location is left out so that the
    /// hash identifies the computation.
    pub fn numerics_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "rho0 = {}", self.rho0);
        let _ = writeln!(s, "rho1 = {}", self.rho1);
        match self.angle {
            Some(Angle::ThetaW(t)) => {
                let _ = writeln!(s, "theta_w = {t}");
            }
            Some(Angle::Sigma(v)) => {
                let _ = writeln!(s, "sigma = {v}");
            }
            None => {}
        }
        let _ = writeln!(s, "resolution = {},{}", self.resolution.0, self.resolution.1);
        let _ = writeln!(s, "epsilon = {}", opt(&self.epsilon));
        let _ = writeln!(s, "deltas = {}", join(&self.deltas));
        let _ = writeln!(s, "delta_zero = {}", self.delta_zero);
        let _ = writeln!(s, "omega = {}", self.omega);
        let _ = writeln!(s, "tol_fb = {}", opt(&self.tol_fb));
        let _ = writeln!(s, "tol_picard = {}", self.tol_picard);
        let _ = writeln!(s, "max_picard = {}", self.max_picard);
        let _ = writeln!(s, "max_outer = {}", self.max_outer);
        let _ = writeln!(s, "emit_psi = {}", self.emit_psi);
        let _ = writeln!(s, "emit_global = {}", self.emit_global);
        let _ = writeln!(s, "emit_coefficients = {}", self.emit_coefficients);
        let _ = writeln!(s, "global_n = {},{}", self.global_n.0, self.global_n.1);
        let _ = writeln!(s, "global_window = {}", self.global_window.map(|w| join(&w)).unwrap_or_else(|| "auto".into()));
        s
    }

    pub fn to_text(&self) -> String {
        format!("{}out_dir = {}\n", self.numerics_text(), self.out_dir.display())
    }

    /// SHA-256 of the numerical settings, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.numerics_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn require_angle(&self) -> Result<Angle> {
        self.angle.ok_or_else(|| cfg_err("one of theta_w or sigma is required"))
    }

    pub fn iteration(&self, sigma: f64) -> IterationConfig {
        IterationConfig {
            sigma,
            epsilon: self.epsilon,
            resolution: self.resolution,
            solver: SolverConfig {
                deltas: self.deltas.clone(),
                try_delta_zero: self.delta_zero,
                tol_picard: self.tol_picard,
                max_picard: self.max_picard,
                ..SolverConfig::default()
            },
            omega: self.omega,
            tol_fb: self.tol_fb,
            max_outer: self.max_outer,
            warm_skip_continuation: true,
        }
    }

    pub fn sampling_grid(&self, st: &StateTwo) -> SamplingGrid {
        let c = st.normal.c2bar;
        let w = self.global_window.unwrap_or([-1.25 * c, 0.25 * c, 0.0, 1.25 * c]);
        SamplingGrid { xi: (w[0], w[1]), eta: (w[2], w[3]), n: self.global_n }
    }
}
