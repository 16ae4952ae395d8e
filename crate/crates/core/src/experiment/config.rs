use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use crate::convex::ConvexBody;
use crate::embedding::{john_power, DeltaChoice, Theorem, WitnessGrid};
use crate::error::{Error, Result};
use crate::grid::{Rect, ShapeSpec, Window};
use crate::maximal::{Basis, BasisKind};
use crate::tauberian::CandidateFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Uniform {
        n: usize,
        lo: f64,
        hi: f64,
        cells: usize,
    },
    Explicit {
        origin: Vec<f64>,
        extent: Vec<f64>,
        resolution: Vec<usize>,
    },
}

impl WindowSpec {
    pub fn build(&self) -> Result<Window> {
        match self {
            WindowSpec::Uniform { n, lo, hi, cells } => Window::uniform(*n, *lo, *hi, *cells),
            WindowSpec::Explicit {
                origin,
                extent,
                resolution,
            } => Window::new(origin.clone(), extent.clone(), resolution.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaGrid {
    List(Vec<f64>),
    /// `1 - 2^-k` for `k_min <= k <= k_max`.
    Dyadic { k_min: i32, k_max: i32 },
}

impl AlphaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AlphaGrid::List(v) => v.clone(),
            AlphaGrid::Dyadic { k_min, k_max } => {
                (*k_min..=*k_max).map(|k| 1.0 - 2f64.powi(-k)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaloConfig {
    pub window: WindowSpec,
    pub basis: Basis,
    pub set: ShapeSpec,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub export_field: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzConfig {
    pub window: WindowSpec,
    pub set: ShapeSpec,
    /// Padded to the smallest cell-aligned power-of-two cube containing it.
    pub root: Rect,
    pub xi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum BodyCorpus {
    Bodies {
        bodies: Vec<ConvexBody>,
    },
    RandomPolygons {
        count: usize,
        min_vertices: usize,
        max_vertices: usize,
    },
}

fn default_eps() -> f64 {
    1e-3
}

fn default_samples() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnConfig {
    pub bodies: BodyCorpus,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_c_n() -> f64 {
    0.01
}

fn default_kappa() -> f64 {
    0.125
}

fn default_slack() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// `delta` and `delta_fraction` are alternatives: the latter is a fraction of the largest
/// admissible `δ` for the theorem (`1-α` for rectangles, `κ(1-α)` for balls,
/// `(1-α)/(3n^{3n/2})` for convex bodies).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub theorem: Theorem,
    pub window: WindowSpec,
    #[serde(default)]
    pub basis: Option<Basis>,
    #[serde(default)]
    pub body: Option<ConvexBody>,
    /// Send the body's John rectangle to the unit cube first.
    #[serde(default = "default_true")]
    pub normalize: bool,
    pub corpus: Corpus,
    /// Omitted for convex bodies: the average of `E` over the body.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub delta_fraction: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default = "default_c_n")]
    pub c_n: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_slack")]
    pub slack_cells: usize,
    /// Rectangles: also check the corollary measure inequality with `ξ -> (1-δ)+`.
    #[serde(default)]
    pub cor1: bool,
    /// Convex bodies: also build the bodies of the proof and re-check its inequalities.
    #[serde(default)]
    pub witnesses: bool,
    #[serde(default)]
    pub witness_grid: WitnessGrid,
    #[serde(default)]
    pub witness_delta: Option<DeltaChoice>,
}

fn default_budget() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauberianConfig {
    pub window: WindowSpec,
    pub basis: Basis,
    pub alphas: AlphaGrid,
    pub family: CandidateFamily,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Fit `Ĉ - 1 ≈ K(1-α)^p` over rows with `α >= fit_alpha_min`.
    #[serde(default)]
    pub fit_alpha_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSpec {
    pub p: f64,
    pub k: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// `table.json` of a tauberian run (relative to the config file).
    #[serde(default)]
    pub table: Option<PathBuf>,
    /// Inline `(α, Ĉ)` rows instead of a table file.
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub alpha_min: f64,
    #[serde(default)]
    pub holder: Option<HolderSpec>,
    /// Points at which to evaluate the halo function `φ`.
    #[serde(default)]
    pub phi_at: Vec<f64>,
}

fn default_iterations() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    /// Ball or convex embedding run whose `c_n` is searched.
    pub embed: EmbedConfig,
    pub c_min: f64,
    pub c_max: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Halo(HaloConfig),
    Czdec(CzConfig),
    John(JohnConfig),
    Embed(EmbedConfig),
    Tauberian(TauberianConfig),
    Fit(FitConfig),
    Calibrate(CalibrateConfig),
}

/// One experiment: its parameters plus the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn in_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must lie in (0, 1)")))
    }
}

fn window_of(spec: &WindowSpec) -> Result<Window> {
    spec.build().map_err(|e| invalid(e.to_string()))
}

fn check_set(set: &ShapeSpec, w: &Window) -> Result<()> {
    if set.n() != Some(w.n()) {
        return Err(invalid(format!(
            "set dimension {:?} does not match window dimension {}",
            set.n(),
            w.n()
        )));
    }
    set.bounding_rect().map_err(|e| invalid(e.to_string()))?;
    Ok(())
}

fn check_basis(basis: &Basis, w: &Window) -> Result<()> {
    match &basis.kind {
        BasisKind::Cubes if !w.is_isotropic() => {
            Err(invalid("cubes need equal cell sizes on every axis"))
        }
        BasisKind::Convex { body } if body.n() != w.n() => {
            Err(invalid("convex body dimension does not match the window"))
        }
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self.experiment {
            Experiment::Halo(_) => "halo",
            Experiment::Czdec(_) => "czdec",
            Experiment::John(_) => "john",
            Experiment::Embed(_) => "embed",
            Experiment::Tauberian(_) => "tauberian",
            Experiment::Fit(_) => "fit",
            Experiment::Calibrate(_) => "calibrate",
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| invalid(e.to_string()))
    }

    /// Checks every parameter domain; all failures are [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::Halo(c) => {
                let w = window_of(&c.window)?;
                check_set(&c.set, &w)?;
                check_basis(&c.basis, &w)?;
                if c.alphas.is_empty() {
                    return Err(invalid("at least one α is required"));
                }
                c.alphas.iter().try_for_each(|&a| in_open_unit("α", a))
            }
            Experiment::Czdec(c) => {
                let w = window_of(&c.window)?;
                check_set(&c.set, &w)?;
                Rect::new(c.root.lo.clone(), c.root.hi.clone())
                    .map_err(|e| invalid(e.to_string()))?;
                if c.root.n() != w.n() {
                    return Err(invalid("root dimension does not match the window"));
                }
                in_open_unit("ξ", c.xi)
            }
            Experiment::John(c) => {
                in_open_unit("ε", c.eps)?;
                if c.samples == 0 {
                    return Err(invalid("samples must be positive"));
                }
                if let BodyCorpus::RandomPolygons {
                    min_vertices,
                    max_vertices,
                    ..
                } = c.bodies
                {
                    if min_vertices < 3 || max_vertices < min_vertices {
                        return Err(invalid("need 3 <= min_vertices <= max_vertices"));
                    }
                }
                Ok(())
            }
            Experiment::Embed(c) => validate_embed(c),
            Experiment::Tauberian(c) => {
                let w = window_of(&c.window)?;
                check_basis(&c.basis, &w)?;
                let alphas = c.alphas.values();
                if alphas.is_empty() {
                    return Err(invalid("at least one α is required"));
                }
                alphas.iter().try_for_each(|&a| in_open_unit("α", a))?;
                if alphas.windows(2).any(|p| !(p[0] < p[1])) {
                    return Err(invalid("α grid must be strictly increasing"));
                }
                if c.budget == 0 {
                    return Err(invalid("budget must be at least 1"));
                }
                if let Some(a) = c.fit_alpha_min {
                    if !(0.0..1.0).contains(&a) {
                        return Err(invalid(format!("fit_alpha_min = {a} must lie in [0, 1)")));
                    }
                }
                Ok(())
            }
            Experiment::Fit(c) => {
                if c.table.is_some() == c.points.is_some() {
                    return Err(invalid("give exactly one of table and points"));
                }
                if !(0.0..1.0).contains(&c.alpha_min) {
                    return Err(invalid("alpha_min must lie in [0, 1)"));
                }
                if let Some(h) = &c.holder {
                    if !(h.p > 0.0) {
                        return Err(invalid("Hölder exponent must be positive"));
                    }
                    if !(0.0 < h.k[0] && h.k[0] < h.k[1] && h.k[1] < 1.0) {
                        return Err(invalid("Hölder interval must satisfy 0 < a < b < 1"));
                    }
                }
                Ok(())
            }
            Experiment::Calibrate(c) => {
                if c.embed.theorem == Theorem::Rect {
                    return Err(invalid("calibration applies to ball and convex embeddings"));
                }
                if !(c.c_min > 0.0 && c.c_min < c.c_max) {
                    return Err(invalid("need 0 < c_min < c_max"));
                }
                if c.iterations == 0 {
                    return Err(invalid("iterations must be positive"));
                }
                validate_embed(&c.embed)
            }
        }
    }
}

fn validate_embed(c: &EmbedConfig) -> Result<()> {
    let w = window_of(&c.window)?;
    if c.corpus.is_empty() {
        return Err(invalid("corpus is empty"));
    }
    if let Corpus::Sets { sets } = &c.corpus {
        sets.iter().try_for_each(|s| check_set(s, &w))?;
    }
    if c.delta.is_some() == c.delta_fraction.is_some() {
        return Err(invalid("give exactly one of delta and delta_fraction"));
    }
    if let Some(f) = c.delta_fraction {
        if !(f > 0.0 && f <= 1.0) {
            return Err(invalid("delta_fraction must lie in (0, 1]"));
        }
    }
    if !(c.c_n > 0.0) {
        return Err(invalid("c_n must be positive"));
    }
    let n = w.n();
    match c.theorem {
        Theorem::Rect => {
            if let Some(b) = &c.basis {
                if !matches!(b.kind, BasisKind::StrongRects | BasisKind::Cubes) {
                    return Err(invalid("rectangle embedding needs strong_rects or cubes"));
                }
                check_basis(b, &w)?;
            }
            let alpha = c.alpha.ok_or_else(|| invalid("α is required"))?;
            in_open_unit("α", alpha)?;
            let delta = c.delta.unwrap_or_else(|| c.delta_fraction.unwrap_or(0.0) * (1.0 - alpha));
            if !(alpha < 1.0 - delta && delta > 0.0) {
                return Err(invalid(format!(
                    "rectangle embedding requires 0 < δ and α < 1−δ (got α = {alpha}, δ = {delta})"
                )));
            }
            let Some(xi) = c.xi else {
                return if c.cor1 {
                    Ok(())
                } else {
                    Err(invalid("ξ is required unless only the corollary check runs"))
                };
            };
            if !(alpha < 1.0 - delta && 1.0 - delta < xi && xi < 1.0) {
                return Err(invalid(format!(
                    "rectangle embedding requires α < 1−δ < ξ < 1 (got α = {alpha}, δ = {delta}, ξ = {xi})"
                )));
            }
            let beta = alpha * (1.0 + (1.0 - xi) / 2f64.powi(n as i32));
            if beta >= 1.0 {
                return Err(invalid(format!("degenerate outer threshold {beta} ≥ 1")));
            }
            Ok(())
        }
        Theorem::Ball => {
            let alpha = c.alpha.ok_or_else(|| invalid("α is required"))?;
            in_open_unit("α", alpha)?;
            if !(c.kappa > 0.0) {
                return Err(invalid("κ must be positive"));
            }
            if let Some(d) = c.delta {
                in_open_unit("δ", d)?;
                if d > c.kappa * (1.0 - alpha) {
                    return Err(invalid(format!(
                        "ball embedding requires δ ≤ κ(1−α) = {}",
                        c.kappa * (1.0 - alpha)
                    )));
                }
            }
            Ok(())
        }
        Theorem::Convex => {
            let body = c
                .body
                .as_ref()
                .ok_or_else(|| invalid("convex embedding needs a body"))?;
            if body.n() != n {
                return Err(invalid("convex body dimension does not match the window"));
            }
            if let Some(alpha) = c.alpha {
                in_open_unit("α", alpha)?;
                if let Some(d) = c.delta {
                    in_open_unit("δ", d)?;
                    if 3.0 * john_power(n) * d > (1.0 - alpha) * (1.0 + 1e-12) {
                        return Err(invalid(format!(
                            "convex embedding requires 3n^(3n/2)·δ ≤ 1−α (got δ = {d})"
                        )));
                    }
                }
            }
            if c.witnesses && !c.normalize {
                return Err(invalid("witness construction needs a normalized body"));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(s.as_bytes())
    }

    #[test]
    fn halo_config_parses_with_defaults() {
        let c = parse(
            r#"{"kind":"halo","window":{"n":1,"lo":-2,"hi":3,"cells":500},
                "basis":{"family":"strong_rects"},
                "set":{"kind":"rect","lo":[0],"hi":[1]},"alphas":[0.8]}"#,
        )
        .unwrap();
        assert_eq!(c.kind(), "halo");
        assert_eq!(c.seed, 0);
        c.validate().unwrap();
    }

    #[test]
    fn ordering_violation_names_the_hypothesis() {
        let c = parse(
            r#"{"kind":"embed","theorem":"rect","window":{"n":2,"lo":-1,"hi":2,"cells":64},
                "corpus":{"generator":"random_rects","count":2,"max_rects":3},
                "alpha":0.6,"delta":0.2,"xi":0.7}"#,
        )
        .unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("α < 1−δ < ξ < 1"), "{err}");
    }

    #[test]
    fn alpha_grid_forms() {
        let g: AlphaGrid = serde_json::from_str(r#"{"k_min":3,"k_max":4}"#).unwrap();
        assert_eq!(g.values(), vec![0.875, 0.9375]);
        let g: AlphaGrid = serde_json::from_str("[0.5,0.7]").unwrap();
        assert_eq!(g.values(), vec![0.5, 0.7]);
    }
}
