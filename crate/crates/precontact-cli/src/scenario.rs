//! Scenario file schema.
//!
//! Tensor components are maps from index keys to expressions. A key names
//! coordinates joined by `^`, so `"x^y"` is the `dx^dy` (or `d_x^d_y`)
//! component and `"y^x"` enters with the opposite sign. Vectors and 1-forms
//! use single names. Missing components are zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub type Components = BTreeMap<String, String>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub config: Config,
    #[serde(default)]
    pub charts: BTreeMap<String, ChartDef>,
    #[serde(default)]
    pub structures: Vec<StructureDef>,
    #[serde(default)]
    pub prequantizations: Vec<PreqDef>,
    #[serde(default)]
    pub groupoids: Vec<GroupoidDef>,
    #[serde(default)]
    pub apaths: Vec<ApathDef>,
    #[serde(default)]
    pub lifts: Vec<LiftDef>,
    #[serde(default)]
    pub periods: Vec<PeriodDef>,
    #[serde(default)]
    pub actions: Vec<ActionDef>,
    #[serde(default)]
    pub vorobjev: Vec<VorobjevDef>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub rk4_nodes: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config { samples: 100, seed: 42, tol: 1e-9, rk4_nodes: 1000 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDef {
    pub coords: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub periods: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    #[default]
    Pass,
    /// Negative control: the check passes when the identity is violated.
    Fail,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDef {
    pub name: String,
    pub chart: String,
    /// `two-form`, `bivector`, `one-form`, `jacobi-pair` or `diracization`.
    pub kind: String,
    #[serde(default)]
    pub form: Option<Components>,
    #[serde(default)]
    pub bivector: Option<Components>,
    #[serde(default)]
    pub reeb: Option<Components>,
    /// Dirac structure whose diracization is taken.
    #[serde(default)]
    pub of: Option<String>,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreqDef {
    pub name: String,
    /// A Dirac structure on the base chart.
    pub structure: String,
    pub omega: Components,
    /// Vector part `A` of the isotropic pair `A + alpha`.
    #[serde(default)]
    pub a: Components,
    #[serde(default)]
    pub alpha: Components,
    /// Connection potential with `d(potential) = omega`.
    pub potential: Components,
    /// Real and imaginary parts of a test section of the line bundle.
    #[serde(default)]
    pub test_section: Option<[String; 2]>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupoidDef {
    pub name: String,
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub spec: Option<GroupoidSpecDef>,
    /// Structure on the base chart, required with `spec`.
    #[serde(default)]
    pub base: Option<String>,
    /// Run the discrete reduction of the built-in `1dim` groupoid.
    #[serde(default)]
    pub reduction: bool,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupoidSpecDef {
    pub coords: Vec<String>,
    pub domain: Vec<[f64; 2]>,
    pub base_coords: Vec<String>,
    pub base_domain: Vec<[f64; 2]>,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub unit: Vec<String>,
    pub inverse: Vec<String>,
    pub h_free: Vec<usize>,
    pub h_of: Vec<String>,
    pub mult: Vec<String>,
    #[serde(default)]
    pub theta: Option<Vec<String>>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub omega: Option<Components>,
    #[serde(default)]
    pub v_gamma: Option<Vec<String>>,
    #[serde(default)]
    pub periods: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApathDef {
    pub name: String,
    /// A contact groupoid declared in `groupoids`.
    pub groupoid: String,
    /// Frame coefficients as expressions in `t`.
    pub coefficients: Vec<String>,
    pub start: Vec<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftDef {
    pub name: String,
    pub prequantization: String,
    /// Coefficients of the base frame followed by the scalar part.
    pub coefficients: Vec<String>,
    pub start: Vec<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodDef {
    pub name: String,
    /// Map `(u, v) in [0,1]^2 -> (x, y, z)`.
    pub surface: [String; 3],
    /// 2-form on `(x, y, z)`.
    pub form: Components,
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDef {
    pub name: String,
    /// `cotangent`, `circle` or `zero-level-rank`.
    pub kind: String,
    #[serde(default)]
    pub chart: Option<String>,
    #[serde(default)]
    pub generators: Vec<Components>,
    /// Components of the quotient map, for `cotangent`.
    #[serde(default)]
    pub quotient: Vec<String>,
    #[serde(default)]
    pub prequantization: Option<String>,
    #[serde(default)]
    pub structure: Option<String>,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VorobjevDef {
    pub name: String,
    pub chart: String,
    pub omega: Components,
    pub potential: Components,
    #[serde(default)]
    pub t_range: Option<[f64; 2]>,
    #[serde(default)]
    pub fiber_half_width: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}
