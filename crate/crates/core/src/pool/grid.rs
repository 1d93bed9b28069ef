use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    Knn,
    Tree,
    MlpClf,
    Gnb,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 4] = [AlgorithmId::Knn, AlgorithmId::Tree, AlgorithmId::MlpClf, AlgorithmId::Gnb];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Knn => "KNN",
            AlgorithmId::Tree => "TREE",
            AlgorithmId::MlpClf => "MLPCLF",
            AlgorithmId::Gnb => "GNB",
        }
    }

    /// This algorithm's grid points, in grid order.
    pub fn grid(self) -> Vec<HyperParams> {
        match self {
            AlgorithmId::Knn => [1, 3, 5, 7].map(|k| HyperParams::Knn { k }).to_vec(),
            AlgorithmId::Tree => [2, 4, 8].map(|max_depth| HyperParams::Tree { max_depth }).to_vec(),
            AlgorithmId::MlpClf => [8, 16, 32]
                .into_iter()
                .flat_map(|hidden_units| {
                    [20, 60].map(|epochs| HyperParams::MlpClf { hidden_units, epochs })
                })
                .collect(),
            AlgorithmId::Gnb => [1e-3, 1e-2].map(|var_floor| HyperParams::Gnb { var_floor }).to_vec(),
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Format(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm")]
pub enum HyperParams {
    #[serde(rename = "KNN")]
    Knn { k: usize },
    #[serde(rename = "TREE")]
    Tree { max_depth: usize },
    #[serde(rename = "MLPCLF")]
    MlpClf { hidden_units: usize, epochs: usize },
    #[serde(rename = "GNB")]
    Gnb { var_floor: f64 },
}

impl HyperParams {
    pub fn algorithm(&self) -> AlgorithmId {
        match self {
            HyperParams::Knn { .. } => AlgorithmId::Knn,
            HyperParams::Tree { .. } => AlgorithmId::Tree,
            HyperParams::MlpClf { .. } => AlgorithmId::MlpClf,
            HyperParams::Gnb { .. } => AlgorithmId::Gnb,
        }
    }

    /// Model capacity used by the cost model.
    pub fn capacity(&self) -> f64 {
        match *self {
            HyperParams::Knn { k } => 1.0 + 0.1 * k as f64,
            HyperParams::Tree { max_depth } => max_depth as f64,
            HyperParams::MlpClf { hidden_units, epochs } => (hidden_units * epochs) as f64,
            HyperParams::Gnb { .. } => 1.0,
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParams::Knn { k } => write!(f, "k={k}"),
            HyperParams::Tree { max_depth } => write!(f, "max_depth={max_depth}"),
            HyperParams::MlpClf { hidden_units, epochs } => {
                write!(f, "hidden={hidden_units},epochs={epochs}")
            }
            HyperParams::Gnb { var_floor } => write!(f, "var_floor={var_floor}"),
        }
    }
}

pub const GRID_SIZE: usize = 15;

/// One (algorithm, hyper-parameter) point of the joint grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub algorithm: AlgorithmId,
    pub params: HyperParams,
}

impl GridPoint {
    pub fn new(algorithm: AlgorithmId, params: HyperParams) -> Result<Self> {
        let point = Self { algorithm, params };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_index().is_some() {
            Ok(())
        } else {
            Err(Error::InvalidHyperParams {
                algorithm: self.algorithm.to_string(),
                params: self.params.to_string(),
            })
        }
    }

    /// Position in [`list_grid`], or `None` when off-grid.
    pub fn grid_index(&self) -> Option<usize> {
        list_grid().iter().position(|p| p == self)
    }

    pub fn index(&self) -> usize {
        self.grid_index().expect("grid point validated on construction")
    }

    pub fn from_index(i: usize) -> Option<Self> {
        list_grid().get(i).copied()
    }

    /// First grid point of `algorithm`.
    pub fn default_for(algorithm: AlgorithmId) -> Self {
        Self { algorithm, params: algorithm.grid()[0] }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.algorithm, self.params)
    }
}

/// All fifteen grid points in stable order.
pub fn list_grid() -> &'static [GridPoint] {
    use std::sync::OnceLock;
    static GRID: OnceLock<Vec<GridPoint>> = OnceLock::new();
    GRID.get_or_init(|| {
        AlgorithmId::ALL
            .into_iter()
            .flat_map(|a| a.grid().into_iter().map(move |params| GridPoint { algorithm: a, params }))
            .collect()
    })
}
