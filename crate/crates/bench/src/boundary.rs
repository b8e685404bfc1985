//! Decision-boundary grids over the (x1, x2) plane.

use std::path::Path;

use rayon::prelude::*;
use reupload_core::{Error, Model, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub x1: f64,
    pub x2: f64,
    pub class: usize,
    /// Score of the predicted class.
    pub score: f64,
}

/// Evaluates the model on an `R×R` grid over `[-1, 1]²`, x1 varying slowest.
///
/// Models with more than two inputs need `slice`, the fixed values of
/// coordinates 3..d.
pub fn boundary_grid(model: &Model, resolution: usize, slice: Option<&[f64]>) -> Result<Vec<GridCell>> {
    if resolution < 2 {
        return Err(Error::invalid(format!("resolution must be ≥ 2, got {resolution}")));
    }
    let extra = model.spec.data_dim.saturating_sub(2);
    let tail: Vec<f64> = match (extra, slice) {
        (0, None) => Vec::new(),
        (0, Some([])) => Vec::new(),
        (_, Some(s)) if s.len() == extra => s.to_vec(),
        (0, Some(_)) => return Err(Error::invalid("a two-dimensional model takes no slice")),
        (_, None) => {
            return Err(Error::invalid(format!(
                "a {}-dimensional model needs a slice fixing {extra} coordinates",
                model.spec.data_dim
            )))
        }
        (_, Some(s)) => {
            return Err(Error::invalid(format!(
                "slice has {} values, expected {extra}",
                s.len()
            )))
        }
    };
    if model.spec.data_dim < 2 {
        return Err(Error::invalid("boundary grids need at least two inputs"));
    }
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (resolution - 1) as f64;
    (0..resolution * resolution)
        .into_par_iter()
        .map(|n| {
            let (x1, x2) = (coord(n / resolution), coord(n % resolution));
            let mut x = vec![x1, x2];
            x.extend_from_slice(&tail);
            let (class, score) = model.predict_with_score(&x)?;
            Ok(GridCell { x1, x2, class, score })
        })
        .collect()
}

pub fn write_grid_csv(path: &Path, cells: &[GridCell]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::parse(path.display().to_string(), e);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for c in cells {
        w.serialize(c).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
