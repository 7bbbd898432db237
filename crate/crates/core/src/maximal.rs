//! Maximal solutions of the Dirichlet problem and maximality certificates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::boundary::{as_discretization_failure, boundary_family, BoundaryReport};
use crate::cone::TestCone;
use crate::error::Result;
use crate::grid::{GridSet, NodeSubset};
use crate::gridfn::{DiscreteMeasure, GridFunction};
use crate::jensen::JensenFamily;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalSolution {
    pub values: GridFunction,
    /// Boundary-supported minimizer at each node; a Dirac mass on `B`.
    pub witnesses: Vec<DiscreteMeasure>,
}

/// `u(z) = min { mu(phi_b) : mu Jensen at z, supp mu in B }` off `B`, and
/// `u = phi_b` on `B`.
pub fn maximal_solution(
    grid: &GridSet,
    cone: &TestCone,
    report: &BoundaryReport,
    phi_b: &GridFunction,
) -> Result<MaximalSolution> {
    phi_b.check_len(grid)?;
    grid.check_mask(&report.b_mask)?;
    let family = boundary_family(grid, cone, report)?;
    let interior = report.interior().indices();
    let res = family
        .optimize_all(&interior, phi_b.values(), false)
        .map_err(as_discretization_failure)?;
    let mut values = phi_b.values().to_vec();
    let mut witnesses: Vec<DiscreteMeasure> = (0..grid.len()).map(DiscreteMeasure::dirac).collect();
    for (&z, e) in interior.iter().zip(res) {
        values[z] = e.value;
        witnesses[z] = e.measure;
    }
    Ok(MaximalSolution {
        values: GridFunction::with_floor(values, phi_b.floor()),
        witnesses,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalityCertificate {
    pub node: usize,
    pub measure: DiscreteMeasure,
    /// `|mu(u) - u(z)|` for the minimizing `mu`.
    pub gap: f64,
    pub support_ok: bool,
    pub certified: bool,
}

/// `10 h Lip(u)`, with a floor so constant functions still get a positive
/// tolerance.
pub fn default_maximality_tol(grid: &GridSet, u: &GridFunction) -> f64 {
    10.0 * grid.spacing() * u.lipschitz_estimate(grid).max(1e-6)
}

/// For every node outside `z_set`, minimizes `u` over Jensen measures at
/// that node supported in `z_set` and compares with `u(z)`.
pub fn certify_maximal(
    grid: &GridSet,
    cone: &TestCone,
    u: &GridFunction,
    z_set: &NodeSubset,
    tol: f64,
) -> Result<Vec<MaximalityCertificate>> {
    u.check_len(grid)?;
    grid.check_mask(z_set)?;
    let family = JensenFamily::new(grid, cone, z_set)?;
    let nodes = z_set.complement().indices();
    let res = family
        .optimize_all(&nodes, u.values(), false)
        .map_err(as_discretization_failure)?;
    Ok(nodes
        .into_iter()
        .zip(res)
        .map(|(z, e)| {
            let gap = (e.value - u.get(z)).abs();
            let support_ok = e.measure.supported_in(z_set);
            MaximalityCertificate {
                node: z,
                gap,
                support_ok,
                certified: gap <= tol && support_ok,
                measure: e.measure,
            }
        })
        .collect())
}

/// Writes `node, gap, support_ok, certified, support_size`.
pub fn write_certificates_csv<W: Write>(certs: &[MaximalityCertificate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "gap", "support_ok", "certified", "support_size"])?;
    for c in certs {
        w.write_record([
            c.node.to_string(),
            format!("{}", c.gap),
            u8::from(c.support_ok).to_string(),
            u8::from(c.certified).to_string(),
            c.measure.weights.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
