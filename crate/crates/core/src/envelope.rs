//! Edwards envelopes: the LP side (infimum over Jensen measures) and the
//! sweep side (largest stencil-subaveraging minorant).

use serde::{Deserialize, Serialize};

use crate::cone::TestCone;
use crate::error::Result;
use crate::grid::{GridSet, NodeSubset};
use crate::gridfn::{DiscreteMeasure, GridFunction};
use crate::jensen::JensenFamily;
use crate::stencil::DiscStencil;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub lp_values: GridFunction,
    pub sweep_values: GridFunction,
    /// LP argmin at each node.
    pub witnesses: Vec<DiscreteMeasure>,
    /// `max |lp - sweep|` over all nodes.
    pub duality_gap: f64,
    /// Sweep iterations.
    pub iterations: usize,
    pub sweep_converged: bool,
    /// Total simplex iterations over all nodes.
    pub lp_iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpEnvelope {
    pub values: GridFunction,
    pub witnesses: Vec<DiscreteMeasure>,
    pub iterations: usize,
}

/// `E phi(z) = min { mu(phi) : mu Jensen at z, supp mu in support }` at
/// every node. With a finite cone the polytope is an outer approximation,
/// so values are lower bounds for the true envelope.
pub fn edwards_envelope_lp(
    grid: &GridSet,
    cone: &TestCone,
    phi: &GridFunction,
    support: &NodeSubset,
) -> Result<LpEnvelope> {
    phi.check_len(grid)?;
    let family = JensenFamily::new(grid, cone, support)?;
    envelope_over(&family, grid.len(), phi)
}

/// Same as [`edwards_envelope_lp`] over an existing family.
pub fn envelope_over(family: &JensenFamily, len: usize, phi: &GridFunction) -> Result<LpEnvelope> {
    let nodes: Vec<usize> = (0..len).collect();
    let res = family.optimize_all(&nodes, phi.values(), false)?;
    let iterations = res.iter().map(|e| e.iterations).sum();
    let values = GridFunction::with_floor(res.iter().map(|e| e.value).collect(), phi.floor());
    let witnesses = res.into_iter().map(|e| e.measure).collect();
    Ok(LpEnvelope {
        values,
        witnesses,
        iterations,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub values: GridFunction,
    pub iterations: usize,
    pub converged: bool,
}

/// Jacobi iteration `u <- min(phi, min over stencils of the average of u)`
/// from `u = phi`. The iterates decrease monotonically to the largest grid
/// function below `phi` that subaverages on every stencil.
pub fn perron_sweep_envelope(
    grid: &GridSet,
    stencils: &[DiscStencil],
    phi: &GridFunction,
    max_iters: usize,
    tol: f64,
) -> Result<SweepResult> {
    phi.check_len(grid)?;
    Ok(Sweeper::new(grid.len(), stencils).run(phi, max_iters, tol))
}

/// Stencil incidence prepared once for repeated sweeps over the same grid.
///
/// Each Jacobi step only re-averages stencils that read a node changed by
/// the previous step; the iterates are identical to a full sweep.
pub struct Sweeper<'a> {
    len: usize,
    stencils: &'a [DiscStencil],
    by_center: Vec<Vec<usize>>,
    readers: Vec<Vec<usize>>,
}

impl<'a> Sweeper<'a> {
    pub fn new(len: usize, stencils: &'a [DiscStencil]) -> Self {
        let mut by_center = vec![Vec::new(); len];
        let mut readers = vec![Vec::new(); len];
        for (k, s) in stencils.iter().enumerate() {
            by_center[s.center].push(k);
            for &(i, _) in &s.nodes {
                readers[i].push(k);
            }
        }
        Self {
            len,
            stencils,
            by_center,
            readers,
        }
    }

    pub fn run(&self, phi: &GridFunction, max_iters: usize, tol: f64) -> SweepResult {
        let phi_v = phi.values();
        let mut u = phi_v.to_vec();
        let mut avg: Vec<f64> = self.stencils.iter().map(|s| s.average(&u)).collect();
        let mut changed: Vec<usize> = (0..self.len).collect();
        let mut stale = vec![false; self.stencils.len()];
        let mut touched = vec![false; self.len];
        let mut iterations = 0;
        let mut converged = false;
        let mut first = true;
        while iterations < max_iters {
            // Refresh averages that read a node changed last step.
            let mut centers = Vec::new();
            if first {
                centers.extend(0..self.len);
            } else {
                let mut dirty = Vec::new();
                for &i in &changed {
                    for &k in &self.readers[i] {
                        if !stale[k] {
                            stale[k] = true;
                            dirty.push(k);
                        }
                    }
                }
                for &k in &dirty {
                    stale[k] = false;
                    avg[k] = self.stencils[k].average(&u);
                    let c = self.stencils[k].center;
                    if !touched[c] {
                        touched[c] = true;
                        centers.push(c);
                    }
                }
                centers.iter().for_each(|&c| touched[c] = false);
            }
            first = false;
            let mut updates = Vec::with_capacity(centers.len());
            let mut change = 0.0f64;
            for &c in &centers {
                let v = self.by_center[c].iter().fold(phi_v[c], |m, &k| m.min(avg[k]));
                if v != u[c] {
                    change = change.max((v - u[c]).abs());
                    updates.push((c, v));
                }
            }
            changed.clear();
            for (c, v) in updates {
                u[c] = v;
                changed.push(c);
            }
            iterations += 1;
            if change <= tol {
                converged = true;
                break;
            }
        }
        SweepResult {
            values: GridFunction::with_floor(u, phi.floor()),
            iterations,
            converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol: 1e-10,
        }
    }
}

/// Both envelopes over the full grid and their sup distance.
pub fn edwards_envelope(
    grid: &GridSet,
    cone: &TestCone,
    stencils: &[DiscStencil],
    phi: &GridFunction,
    sweep: &SweepParams,
) -> Result<EnvelopeResult> {
    let lp = edwards_envelope_lp(grid, cone, phi, &NodeSubset::full(grid.len()))?;
    let sw = perron_sweep_envelope(grid, stencils, phi, sweep.max_iters, sweep.tol)?;
    Ok(EnvelopeResult {
        duality_gap: lp.values.sup_distance(&sw.values),
        lp_values: lp.values,
        sweep_values: sw.values,
        witnesses: lp.witnesses,
        iterations: sw.iterations,
        sweep_converged: sw.converged,
        lp_iterations: lp.iterations,
    })
}

/// Cusp `psi_w(z) = -min(1, |z - w| / r0)` with `r0 = 4h`, zero only at `w`.
pub fn cusp(grid: &GridSet, w: usize) -> GridFunction {
    let r0 = 4.0 * grid.spacing();
    let pw = grid.point(w).clone();
    GridFunction::from_fn(grid, |p| -(p.dist(&pw) / r0).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::generate_cone;
    use crate::grid::{build_fixture, Fixture};
    use crate::stencil::{build_stencils, StencilParams};

    #[test]
    fn constants_are_fixed_by_both_envelopes() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 2).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        let phi = GridFunction::constant(g.len(), 3.0);
        let r = edwards_envelope(&g, &cone, &st, &phi, &SweepParams::default()).unwrap();
        assert!(r.duality_gap < 1e-12);
        assert!(r.lp_values.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn sweep_is_below_phi_and_monotone_in_phi() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        let phi = cusp(&g, 40);
        let a = perron_sweep_envelope(&g, &st, &phi, 10_000, 1e-12).unwrap();
        assert!(a.converged);
        assert!(a.values.values().iter().zip(phi.values()).all(|(u, p)| u <= p));
        let higher = phi.map(|v| v + 0.5 * (v + 1.0));
        let b = perron_sweep_envelope(&g, &st, &higher, 10_000, 1e-12).unwrap();
        assert!(a.values.values().iter().zip(b.values.values()).all(|(x, y)| x <= &(y + 1e-9)));
    }
}
