//! JSON run configuration: schema, defaults, validation, and the canonical
//! hash that ties output artifacts to their inputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::InitialData;
use crate::growth::{GrowthLaw, ModelParams};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_length: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
    /// Time between trajectory records.
    pub record_stride: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifySpec {
    /// Defaults to `4 l*` when the critical length exists, else `40 h0`.
    #[serde(default)]
    pub l_spread: Option<f64>,
    #[serde(default = "default_eps_vanish")]
    pub eps_vanish: f64,
    /// Defaults to `10 / min(a, b)`.
    #[serde(default)]
    pub hold_time: Option<f64>,
    /// Defaults to `t_end`.
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Stop a simulation as soon as the evidence is conclusive.
    #[serde(default)]
    pub early_exit: bool,
}

impl Default for ClassifySpec {
    fn default() -> Self {
        ClassifySpec {
            l_spread: None,
            eps_vanish: default_eps_vanish(),
            hold_time: None,
            t_max: None,
            early_exit: false,
        }
    }
}

fn default_eps_vanish() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSpec {
    /// Interval lengths, each centered at the origin.
    pub lengths: Vec<f64>,
    #[serde(default = "default_nodes_per_support")]
    pub nodes_per_support: usize,
    #[serde(default)]
    pub dump_eigenfunction: bool,
}

fn default_nodes_per_support() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    pub h0s: Vec<f64>,
    pub mus: Vec<f64>,
    /// Probe cutoff per row; defaults to `t_end`.
    #[serde(default)]
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeSpec {
    pub u0: f64,
    pub v0: f64,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub kernel: Kernel,
    pub growth: GrowthLaw,
    pub params: ModelParams,
    pub initial: InitialData,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub classify: ClassifySpec,
    #[serde(default)]
    pub eigen: Option<EigenSpec>,
    #[serde(default = "default_lstar_tol")]
    pub lstar_tol: f64,
    #[serde(default = "default_mustar_tol")]
    pub mustar_tol: f64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub ode: Option<OdeSpec>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_lstar_tol() -> f64 {
    1e-7
}

fn default_mustar_tol() -> f64 {
    0.01
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Every module precondition checked up front; returns the full list of
    /// violations, each naming the offending field.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if let Err(e) = self.params.validate() {
            errors.push(e.to_string());
        }
        if !(self.kernel.sigma() > 0.0) {
            errors.push(format!(
                "kernel.sigma must be positive, got {}",
                self.kernel.sigma()
            ));
        }
        if !(self.growth.slope_at_zero() > 0.0) {
            errors.push(format!(
                "growth.alpha must be positive, got {}",
                self.growth.slope_at_zero()
            ));
        }
        if !(self.initial.amp_u > 0.0) {
            errors.push(format!(
                "initial.amp_u must be positive (u0 > 0 inside the range), got {}",
                self.initial.amp_u
            ));
        }
        if !(self.initial.amp_v > 0.0) {
            errors.push(format!(
                "initial.amp_v must be positive (v0 > 0 inside the range), got {}",
                self.initial.amp_v
            ));
        }
        if !(self.grid.half_length > 0.0)
            || self.grid.nodes < 3
            || self.grid.nodes.is_multiple_of(2)
        {
            errors.push(format!(
                "grid needs positive half_length and odd nodes >= 3, got {} and {}",
                self.grid.half_length, self.grid.nodes
            ));
        }
        let support = if self.kernel.sigma() > 0.0 {
            self.kernel.support_radius()
        } else {
            0.0
        };
        if self.params.h0 > 0.0 && self.params.h0 >= self.grid.half_length - support {
            errors.push(format!(
                "grid.half_length {} leaves no room: need h0 + kernel support < L (h0 = {}, support = {:.3})",
                self.grid.half_length, self.params.h0, support
            ));
        }
        if !(self.time.dt > 0.0)
            || self.time.dt * (self.params.d + self.params.a) > 0.5
            || self.time.dt * self.params.b > 0.5
        {
            errors.push(format!(
                "time.dt = {} violates the stability margin dt(d+a) <= 1/2 and dt b <= 1/2",
                self.time.dt
            ));
        }
        if self.time.t_end < 0.0 {
            errors.push(format!(
                "time.t_end must be nonnegative, got {}",
                self.time.t_end
            ));
        }
        if !(self.time.record_stride > 0.0) {
            errors.push(format!(
                "time.record_stride must be positive, got {}",
                self.time.record_stride
            ));
        }
        if !(self.classify.eps_vanish > 0.0) {
            errors.push(format!(
                "classify.eps_vanish must be positive, got {}",
                self.classify.eps_vanish
            ));
        }
        for (name, v) in [
            ("classify.l_spread", self.classify.l_spread),
            ("classify.hold_time", self.classify.hold_time),
            ("classify.t_max", self.classify.t_max),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    errors.push(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(eigen) = &self.eigen {
            if eigen.lengths.iter().any(|&l| !(l > 0.0)) {
                errors.push("eigen.lengths must all be positive".into());
            }
            if eigen.nodes_per_support < 8 {
                errors.push(format!(
                    "eigen.nodes_per_support must be at least 8, got {}",
                    eigen.nodes_per_support
                ));
            }
        }
        if let Some(ode) = &self.ode {
            if ode.u0 < 0.0 || ode.v0 < 0.0 || !(ode.dt > 0.0) || ode.t_end < 0.0 {
                errors.push("ode needs u0, v0 >= 0, dt > 0, t_end >= 0".into());
            }
        }
        if !(self.lstar_tol > 0.0) || !(self.mustar_tol > 0.0) {
            errors.push("lstar_tol and mustar_tol must be positive".into());
        }
        if self.workers == 0 {
            errors.push("workers must be at least 1".into());
        }
        errors
    }

    /// SHA-256 of the canonical serialization of the parsed config. Stable
    /// across whitespace and key-order differences in the input file.
    pub fn canonical_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
