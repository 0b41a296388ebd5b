pub mod dec;
pub mod eigen;
pub mod intmap;
pub mod rinv;
pub mod sparse;
pub mod split;
pub mod torsion;

use nalgebra::DMatrix;
use serde::Serializer;

pub use dec::{build_dec, hodge_laplacians, witten_operator, DiscreteDeRham, WittenOperator};
pub use intmap::{chain_residual, integration_map, ChainResidual, IntegrationMap};
pub use rinv::r_invariant;
pub use split::{choose_split, spectral_betti, spectral_split, DegreeSplit, SpectralSplit};
pub use torsion::{torsion_report, TorsionReport};

/// Matrices as nested row lists.
pub(crate) fn serialize_matrices<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    let rows: Vec<Vec<Vec<f64>>> = ms.iter().map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect()).collect();
    rows.serialize(s)
}

#[cfg(test)]
mod tests;
