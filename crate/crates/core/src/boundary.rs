//! Peak points and the potential boundary.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cone::TestCone;
use crate::error::{Error, Result};
use crate::grid::{GridSet, NodeSubset};
use crate::jensen::{sq_norms, JensenFamily, JensenPolytope};
use crate::lp::{self, StandardForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub o_mask: NodeSubset,
    pub b_mask: NodeSubset,
    /// `s(z) = max mu(|w - z|^2)` over Jensen measures at `z`.
    pub peak_scores: Vec<f64>,
    pub tol_peak: f64,
}

impl BoundaryReport {
    /// On a finite grid this only says that the detected peak set is
    /// closed at the current resolution.
    pub fn o_regular(&self) -> bool {
        self.o_mask == self.b_mask
    }

    pub fn interior(&self) -> NodeSubset {
        self.b_mask.complement()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "peak_score", "in_o", "in_b"])?;
        for (i, s) in self.peak_scores.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{s}"),
                u8::from(self.o_mask.contains(i)).to_string(),
                u8::from(self.b_mask.contains(i)).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Default peak threshold `(2h)^2`.
pub fn default_tol_peak(grid: &GridSet) -> f64 {
    let h = grid.spacing();
    4.0 * h * h
}

/// `true` when `x` is a convex combination of `hull` (real coordinates).
fn in_convex_hull(grid: &GridSet, x: usize, hull: &[usize]) -> bool {
    if hull.is_empty() {
        return false;
    }
    let target = grid.point(x).real_coords();
    let rows = 1 + target.len();
    let mut cols = Vec::with_capacity(rows * hull.len());
    for &j in hull {
        cols.push(1.0);
        cols.extend(grid.point(j).real_coords());
    }
    let form = StandardForm::new(rows, cols);
    let mut b = vec![1.0];
    b.extend(target);
    let c = vec![0.0; hull.len()];
    matches!(lp::solve(&form, &b, &c), Ok(sol) if sol.residual <= 1e-9)
}

/// Runs the peak test at every node. `B` is `O` together with nodes within
/// `1.5 h` of `O` that lie in the convex hull of their `O`-neighbors, the
/// grid analogue of limit points of `O`.
pub fn compute_boundary(grid: &GridSet, cone: &TestCone, tol_peak: f64) -> Result<BoundaryReport> {
    let family = JensenFamily::new(grid, cone, &NodeSubset::full(grid.len()))?;
    let q = sq_norms(grid);
    let nodes: Vec<usize> = (0..grid.len()).collect();
    let best = family.optimize_all(&nodes, &q, true)?;
    let peak_scores: Vec<f64> = best
        .iter()
        .zip(&q)
        .map(|(e, qz)| (e.value - qz).max(0.0))
        .collect();
    let o_mask = NodeSubset::from_bits(peak_scores.iter().map(|s| *s <= tol_peak).collect());
    if o_mask.is_empty() {
        return Err(Error::EmptyPeakSet);
    }
    let mut b_mask = o_mask.clone();
    for x in 0..grid.len() {
        if o_mask.contains(x) {
            continue;
        }
        let near: Vec<usize> = grid.neighbors(x).into_iter().filter(|&j| o_mask.contains(j)).collect();
        if in_convex_hull(grid, x, &near) {
            b_mask.insert(x);
        }
    }
    Ok(BoundaryReport {
        o_mask,
        b_mask,
        peak_scores,
        tol_peak,
    })
}

/// Shared constraint data for `J^b_z` at every barycenter.
pub fn boundary_family(grid: &GridSet, cone: &TestCone, report: &BoundaryReport) -> Result<JensenFamily> {
    JensenFamily::new(grid, cone, &report.b_mask)
}

/// Polytope of Jensen measures at `z` supported in the potential boundary.
/// Infeasibility means the grid or cone is too coarse and is reported as a
/// discretization failure.
pub fn boundary_polytope(
    grid: &GridSet,
    cone: &TestCone,
    z: usize,
    report: &BoundaryReport,
) -> Result<JensenPolytope> {
    grid.check_node(z)?;
    let family = boundary_family(grid, cone, report)?;
    let p = JensenPolytope::new(std::sync::Arc::new(family), z);
    // Feasibility probe with a zero objective.
    match p.minimize(&vec![0.0; grid.len()]) {
        Ok(_) => Ok(p),
        Err(Error::Infeasible { node, residual }) => Err(Error::DiscretizationFailure { node, residual }),
        Err(e) => Err(e),
    }
}

/// Maps LP infeasibility on a boundary family to a discretization failure.
pub fn as_discretization_failure(e: Error) -> Error {
    match e {
        Error::Infeasible { node, residual } => Error::DiscretizationFailure { node, residual },
        other => other,
    }
}
