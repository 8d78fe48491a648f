//! Scenario files and the derived problem data.

use std::path::Path;

use horoflow_core::polytope::{
    delta_from_moment, is_reflective, moment_from_delta, validate_fano_data, ReflectivityReport, ValidationReport,
};
use horoflow_core::quadrature::WeightedPolytope;
use horoflow_core::soliton::soliton_problem;
use horoflow_core::{build_classical_roots, DerivedRoots64, Matrix64, Polytope64, RootDatum64, RootFamily};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub lie: Lie,
    pub polytope: PolytopeBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub flow: FlowBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Lie {
    /// No roots: a toric variety of dimension `rank`.
    Toric { rank: usize },
    /// Classical family with identity gram; `a1_basis` defaults to the whole Cartan space.
    Classical {
        family: String,
        rank: usize,
        #[serde(default)]
        subset_i: Vec<usize>,
        a1_basis: Option<Vec<Vec<f64>>>,
    },
    Explicit {
        gram: Vec<Vec<f64>>,
        simple_roots: Vec<Vec<f64>>,
        positive_roots: Vec<Vec<f64>>,
        #[serde(default)]
        subset_i: Vec<usize>,
        a1_basis: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeBlock {
    /// Vertices of the moment polytope `Δ⁺` (anti-dominant chamber).
    pub delta_plus: Option<Vec<Vec<f64>>>,
    /// Vertices of `Δ`; used when `delta_plus` is absent.
    pub delta: Option<Vec<Vec<f64>>>,
    /// Lattice basis (columns in `a1_basis` coordinates) for the reflexivity check.
    pub lattice: Option<Vec<Vec<f64>>>,
    /// Vertices of `Q` for the reflexivity check.
    pub q: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub half_width: f64,
    pub points_per_axis: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowBlock {
    pub dt_init: f64,
    pub dt_max: f64,
    pub t_max: f64,
    pub tol: f64,
    /// off | smoothed_path | fixed_xi
    pub phase2: String,
    pub delta: f64,
    pub stop_on_convergence: bool,
}

impl Default for FlowBlock {
    fn default() -> Self {
        Self { dt_init: 0.01, dt_max: 0.25, t_max: 20.0, tol: 1e-6, phase2: "off".to_string(), delta: 0.2, stop_on_convergence: true }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: String,
    /// Accepted steps between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: "runs/default".to_string(), checkpoint_every: 10 }
    }
}

/// A scenario with its root data, polytopes, validation outcome and soliton problem.
pub struct Prepared {
    pub scenario: Scenario,
    /// Hex SHA-256 of the scenario file bytes.
    pub hash: String,
    pub datum: RootDatum64,
    pub roots: DerivedRoots64,
    pub delta_plus: Polytope64,
    pub delta: Polytope64,
    pub validation: ValidationReport<f64>,
    pub reflectivity: Option<ReflectivityReport>,
    pub problem: WeightedPolytope<f64>,
}

impl Prepared {
    pub fn rank(&self) -> usize {
        self.delta.dim()
    }

    pub fn manifold_dim(&self) -> usize {
        self.roots.manifold_dim_n
    }
}

pub fn load(path: &Path) -> Result<Prepared, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_slice(&bytes).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let hash = format!("{:x}", Sha256::digest(&bytes));
    prepare(scenario, hash)
}

fn data_err(e: horoflow_core::Error) -> CliError {
    CliError::Schema(e.to_string())
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

pub fn prepare(scenario: Scenario, hash: String) -> Result<Prepared, CliError> {
    let (datum, roots) = match &scenario.lie {
        Lie::Toric { rank } => {
            let datum = RootDatum64::new(Matrix64::identity(*rank), vec![], vec![], (0..*rank).map(|i| unit(*rank, i)).collect())
                .map_err(data_err)?;
            (datum, DerivedRoots64::toric(*rank))
        }
        Lie::Classical { family, rank, subset_i, a1_basis } => {
            let family: RootFamily = family.parse().map_err(data_err)?;
            let mut datum = RootDatum64::classical(family, *rank, subset_i.clone()).map_err(data_err)?;
            if let Some(basis) = a1_basis {
                datum =
                    RootDatum64::new(datum.gram.clone(), datum.simple_roots.clone(), subset_i.clone(), basis.clone()).map_err(data_err)?;
            }
            let positive = build_classical_roots::<f64>(family, *rank).map_err(data_err)?;
            let roots = datum.derive(&positive).map_err(data_err)?;
            (datum, roots)
        }
        Lie::Explicit { gram, simple_roots, positive_roots, subset_i, a1_basis } => {
            let datum =
                RootDatum64::new(Matrix64::from_rows(gram), simple_roots.clone(), subset_i.clone(), a1_basis.clone()).map_err(data_err)?;
            let roots = datum.derive(positive_roots).map_err(data_err)?;
            (datum, roots)
        }
    };
    let two_rho = roots.two_rho_restricted();
    let block = &scenario.polytope;
    let (delta_plus, delta) = match (&block.delta_plus, &block.delta) {
        (Some(v), None) => {
            let dp = Polytope64::from_vertices(v).map_err(data_err)?;
            let d = delta_from_moment(&dp, &two_rho);
            (dp, d)
        }
        (None, Some(v)) => {
            let d = Polytope64::from_vertices(v).map_err(data_err)?;
            let dp = moment_from_delta(&d, &two_rho);
            (dp, d)
        }
        _ => return Err(CliError::Schema("polytope: give exactly one of delta_plus, delta".to_string())),
    };
    let r = roots.rank_r();
    if delta.dim() != r || scenario.grid.points_per_axis < 5 {
        return Err(CliError::Schema(format!(
            "polytope dimension {} does not match the rank {r} of the Lie data, or grid.points_per_axis < 5",
            delta.dim()
        )));
    }
    let validation = validate_fano_data(&delta, &delta_plus, &roots);
    let reflectivity = match (&block.q, &block.lattice) {
        (Some(q), Some(lattice)) => {
            let q = Polytope64::from_vertices(q).map_err(data_err)?;
            Some(is_reflective(&q, &datum, &roots, lattice).map_err(data_err)?)
        }
        (None, None) => None,
        _ => return Err(CliError::Schema("polytope: q and lattice must be given together".to_string())),
    };
    let problem = if validation.passed() {
        soliton_problem(&delta, &roots).map_err(data_err)?
    } else {
        WeightedPolytope::plain(delta.scaled(2.0).map_err(data_err)?)
    };
    Ok(Prepared { scenario, hash, datum, roots, delta_plus, delta, validation, reflectivity, problem })
}
