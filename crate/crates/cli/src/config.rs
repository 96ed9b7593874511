//! Experiment configuration. JSON, unknown keys rejected everywhere.

use std::path::Path;

use heatobs::certificate::OperatingRadius;
use heatobs::material::{MaterialModel, MaterialSpec};
use heatobs::nonlinearity::{Diffusivity, NonlinearityModel, Profile};
use heatobs::sim::ic::{cosine_series, ErrorShape, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub scenario: String,
    pub model: ModelSpec,
    pub design: DesignSpec,
    #[serde(default)]
    pub grid: GridSpec,
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub certify: CertifySpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `α` given directly; `validity` narrows the family's natural interval.
    Diffusivity {
        profile: Profile,
        #[serde(default)]
        validity: Option<(f64, f64)>,
    },
    /// `c(T)`, `κ(T)`; states are enthalpies.
    Material { material: MaterialSpec },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub a: DesignA,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DesignA {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum AutoKeyword {
    /// Midrange of `α` over the values the plant can visit.
    #[serde(rename = "auto")]
    Auto,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub kernel_nodes: usize,
    pub sim_nodes: usize,
    pub cfl: f64,
    pub t_end: f64,
    /// Steps between snapshots; about 500 snapshots when absent.
    pub record_stride: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { kernel_nodes: 201, sim_nodes: 201, cfl: 0.4, t_end: 5.0, record_stride: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundsSpec {
    User { m_v: f64, vx_inf: f64, vxx_inf: f64, delta1: f64, delta2: f64 },
    /// `δ1 = δ2 = δ̄` on `[−m_v, m_v]`; `m_v` defaults to `max |v_o|`.
    Conservative {
        #[serde(default)]
        m_v: Option<f64>,
        vx_inf: f64,
        vxx_inf: f64,
    },
    /// Measured on a plant-only pilot run, then inflated.
    Simulated {
        #[serde(default = "default_inflation")]
        inflation: f64,
        #[serde(default = "default_pilot")]
        pilot_t_end: f64,
    },
}

fn default_inflation() -> f64 {
    1.1
}

fn default_pilot() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub plant: PlantIc,
    pub error: ErrorSpec,
    pub scale: Option<ErrorScale>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            plant: PlantIc { mean: 0.5, modes: vec![(1, 0.05)] },
            error: ErrorSpec::Transformed { modes: vec![(0, 0.1)] },
            scale: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantIc {
    pub mean: f64,
    #[serde(default)]
    pub modes: Vec<Mode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErrorSpec {
    Transformed { modes: Vec<Mode> },
    Projected { modes: Vec<Mode> },
    /// Transformed cosine modes `0..=max_mode` with amplitudes drawn from
    /// `±amplitude/(1+k)` by the seeded generator.
    Random { max_mode: u32, amplitude: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErrorScale {
    /// Rescale so that `|ṽ_o|_{H¹}` equals this.
    H1(f64),
    /// Rescale to this fraction of `ω*`.
    OmegaFraction(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySpec {
    pub operating_radius: OperatingRadius,
}

impl Default for CertifySpec {
    fn default() -> Self {
        Self { operating_radius: OperatingRadius::Max }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    /// Certify first and audit against the certified bound.
    pub certify: bool,
    pub snapshot_every: Option<usize>,
    pub mass_tol: f64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self { certify: true, snapshot_every: None, mass_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub sigmas: SigmaGrid,
    #[serde(default = "zero_radius")]
    pub operating_radius: OperatingRadius,
    /// Also simulate every feasible row.
    #[serde(default)]
    pub simulate: bool,
}

fn zero_radius() -> OperatingRadius {
    OperatingRadius::Value(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaGrid {
    List(Vec<f64>),
    Range(SigmaRange),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaRange {
    pub from: f64,
    pub to: f64,
    pub count: usize,
    #[serde(default)]
    pub log: bool,
}

impl SigmaGrid {
    pub fn values(&self) -> Result<Vec<f64>, Failure> {
        let v = match self {
            SigmaGrid::List(v) => v.clone(),
            SigmaGrid::Range(r) => {
                if r.count < 2 || !(r.from > 0.0 && r.to > r.from) {
                    return Err(Failure::config("sigma range needs 0 < from < to and count >= 2"));
                }
                let m = (r.count - 1) as f64;
                (0..r.count)
                    .map(|k| {
                        let f = k as f64 / m;
                        if r.log {
                            r.from * (r.to / r.from).powf(f)
                        } else {
                            r.from + (r.to - r.from) * f
                        }
                    })
                    .collect()
            }
        };
        if v.len() < 3 {
            return Err(Failure::config(format!("a sweep needs at least 3 sigma values, got {}", v.len())));
        }
        Ok(v)
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Self::from_json(&text)
    }
}

pub const PRESETS: [(&str, &str); 5] = [
    ("linear", include_str!("../presets/linear.json")),
    ("affine", include_str!("../presets/affine.json")),
    ("affine-sweep", include_str!("../presets/affine-sweep.json")),
    ("exponential", include_str!("../presets/exponential.json")),
    ("pcm", include_str!("../presets/pcm.json")),
];

pub fn preset(name: &str) -> Result<Config, Failure> {
    let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
    let (_, text) = PRESETS
        .iter()
        .find(|p| p.0 == name)
        .ok_or_else(|| Failure::config(format!("unknown preset {name:?}; available: {}", names.join(", "))))?;
    Config::from_json(text)
}

/// The diffusivity the plant actually follows.
#[derive(Debug)]
pub enum Model {
    Direct(NonlinearityModel),
    Material(Box<MaterialModel>),
}

impl Model {
    pub fn build(spec: &ModelSpec) -> Result<Self, Failure> {
        Ok(match spec {
            ModelSpec::Diffusivity { profile, validity: None } => Model::Direct(NonlinearityModel::new(*profile)?),
            ModelSpec::Diffusivity { profile, validity: Some((lo, hi)) } => {
                Model::Direct(NonlinearityModel::with_validity(*profile, *lo, *hi)?)
            }
            ModelSpec::Material { material } => Model::Material(Box::new(MaterialModel::new(*material)?)),
        })
    }

    pub fn diffusivity(&self) -> &dyn Diffusivity {
        match self {
            Model::Direct(m) => m,
            Model::Material(m) => m.as_ref(),
        }
    }

    pub fn material(&self) -> Option<&MaterialModel> {
        match self {
            Model::Material(m) => Some(m),
            Model::Direct(_) => None,
        }
    }
}

impl PlantIc {
    pub fn sample(&self, n: usize) -> Vec<f64> {
        cosine_series(n, self.mean, &self.modes)
    }
}

impl ErrorSpec {
    /// Resolve random shapes with the seeded generator.
    pub fn shape(&self, seed: u64) -> ErrorShape {
        match self {
            ErrorSpec::Transformed { modes } => ErrorShape::Transformed { modes: modes.clone() },
            ErrorSpec::Projected { modes } => ErrorShape::Projected { modes: modes.clone() },
            ErrorSpec::Random { max_mode, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let modes = (0..=*max_mode)
                    .map(|k| (k, amplitude * rng.gen_range(-1.0..1.0) / (1.0 + k as f64)))
                    .collect();
                ErrorShape::Transformed { modes }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(c.scenario, name);
            Model::build(&c.model).unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(PRESETS[0].1).unwrap();
        v["grid"]["nodes"] = 5.into();
        assert!(Config::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(PRESETS[0].1).unwrap();
        v["colour"] = "blue".into();
        assert!(Config::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn unknown_family_is_rejected() {
        let text = PRESETS[0].1.replace("\"constant\"", "\"cubic\"");
        assert!(Config::from_json(&text).is_err());
    }

    #[test]
    fn sigma_range_is_geometric() {
        let g = SigmaGrid::Range(SigmaRange { from: 0.1, to: 10.0, count: 3, log: true });
        let v = g.values().unwrap();
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert!(SigmaGrid::List(vec![1.0, 2.0]).values().is_err());
    }

    #[test]
    fn random_errors_follow_the_seed() {
        let s = ErrorSpec::Random { max_mode: 3, amplitude: 0.3 };
        assert_eq!(s.shape(7), s.shape(7));
        assert_ne!(s.shape(7), s.shape(8));
    }
}
