//! Continuous psh extension of boundary data on O-regular sets.
//!
//! Each round builds, from peak functions at boundary nodes, a psh function
//! `u_j` with `phi_{j-1} - eps_j < u_j <= phi_{j-1}` on `B` where
//! `eps_j = osc(phi_b) / 2^j`, then passes the residual `phi_j = phi_{j-1} - u_j`
//! to the next round. The sum of the `u_j` is psh and matches `phi_b` on `B`
//! up to the last residual.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryReport;
use crate::envelope::{cusp, SweepParams, Sweeper};
use crate::error::{Error, Result};
use crate::grid::GridSet;
use crate::gridfn::GridFunction;
use crate::stencil::DiscStencil;

/// Values within this of zero count as the peak of `u_w`.
const PEAK_EPS: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirichletResult {
    pub values: GridFunction,
    /// `sup_B |phi_b - sum_{i<=j} u_i|` after each round.
    pub residuals: Vec<f64>,
    /// Smallest `C` with `residual_k <= osc / 2^k + C h` for every round.
    pub slack: f64,
    /// Number of peak functions used per round.
    pub cover_sizes: Vec<usize>,
    /// Boundary nodes left uncovered per round.
    pub uncovered: Vec<usize>,
}

/// Peak functions at every node of `B`: sweep envelopes of cusps.
fn peak_functions(
    grid: &GridSet,
    stencils: &[DiscStencil],
    boundary: &[usize],
    sweep: &SweepParams,
) -> Result<Vec<Vec<f64>>> {
    let sweeper = Sweeper::new(grid.len(), stencils);
    boundary
        .iter()
        .map(|&w| {
            let r = sweeper.run(&cusp(grid, w), sweep.max_iters, sweep.tol);
            if !r.converged {
                return Err(Error::PeakFunctionFailure { node: w });
            }
            Ok(r.values.values().to_vec())
        })
        .collect()
}

/// Smallest `c >= 0` with `phi(w) + c u_w - eps/2 <= phi` on `B`, or `None`
/// when no constant works because `u_w` vanishes where `phi` is too small.
fn cover_constant(phi: &[f64], uw: &[f64], boundary: &[usize], w: usize, eps: f64) -> Option<f64> {
    let top = phi[w] - 0.5 * eps;
    let mut c = 0.0f64;
    for &x in boundary {
        let need = top - phi[x];
        if need <= 0.0 {
            continue;
        }
        if uw[x] > -PEAK_EPS {
            return None;
        }
        c = c.max(need / -uw[x]);
    }
    Some(c)
}

/// Extends `phi_b` (read on `B` only) by `rounds` rounds of the peak-function
/// construction. Requires an O-regular boundary report.
pub fn dirichlet_extend(
    grid: &GridSet,
    stencils: &[DiscStencil],
    report: &BoundaryReport,
    phi_b: &GridFunction,
    rounds: usize,
    sweep: &SweepParams,
) -> Result<DirichletResult> {
    phi_b.check_len(grid)?;
    grid.check_mask(&report.b_mask)?;
    if !report.o_regular() {
        let extra = report.b_mask.count() - report.o_mask.count();
        return Err(Error::NotORegular { extra });
    }
    let boundary = report.b_mask.indices();
    let peaks = peak_functions(grid, stencils, &boundary, sweep)?;
    let n = grid.len();
    let osc = phi_b.oscillation_on(&report.b_mask);
    let h = grid.spacing();

    let mut phi = phi_b.values().to_vec();
    let mut total = vec![0.0; n];
    let mut residuals = Vec::with_capacity(rounds);
    let mut cover_sizes = Vec::with_capacity(rounds);
    let mut uncovered = Vec::with_capacity(rounds);
    let mut slack = 0.0f64;
    for j in 1..=rounds {
        let eps = osc / f64::powi(2.0, j as i32);
        let a = boundary.iter().map(|&x| phi[x]).fold(f64::INFINITY, f64::min);
        // Candidate minorants and the boundary nodes they cover.
        let mut candidates: Vec<(usize, f64, Vec<usize>)> = Vec::new();
        for (k, &w) in boundary.iter().enumerate() {
            let uw = &peaks[k];
            let Some(c) = cover_constant(&phi, uw, &boundary, w, eps) else {
                continue;
            };
            let v = |x: usize| phi[w] + c * uw[x] - 0.5 * eps;
            let covered: Vec<usize> = boundary.iter().copied().filter(|&x| v(x) > phi[x] - eps).collect();
            candidates.push((k, c, covered));
        }
        candidates.sort_by(|p, q| q.2.len().cmp(&p.2.len()).then(p.0.cmp(&q.0)));
        let mut is_covered = vec![false; n];
        let mut chosen = Vec::new();
        let mut remaining = boundary.len();
        for (k, c, cov) in &candidates {
            if remaining == 0 {
                break;
            }
            if cov.iter().all(|&x| is_covered[x]) {
                continue;
            }
            for &x in cov {
                if !is_covered[x] {
                    is_covered[x] = true;
                    remaining -= 1;
                }
            }
            chosen.push((*k, *c));
        }
        let mut uj = vec![a; n];
        for &(k, c) in &chosen {
            let top = phi[boundary[k]] - 0.5 * eps;
            for (x, u) in uj.iter_mut().enumerate() {
                *u = u.max(top + c * peaks[k][x]);
            }
        }
        for x in 0..n {
            total[x] += uj[x];
        }
        let mut res = 0.0f64;
        for &x in &boundary {
            phi[x] -= uj[x];
            res = res.max(phi[x].abs());
        }
        if h > 0.0 {
            slack = slack.max((res - osc / f64::powi(2.0, j as i32)) / h);
        }
        residuals.push(res);
        cover_sizes.push(chosen.len());
        uncovered.push(remaining);
    }
    Ok(DirichletResult {
        values: GridFunction::with_floor(total, phi_b.floor()),
        residuals,
        slack: slack.max(0.0),
        cover_sizes,
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{compute_boundary, default_tol_peak};
    use crate::cone::generate_cone;
    use crate::grid::{build_fixture, Fixture};
    use crate::stencil::{build_stencils, is_discretely_psh, StencilParams};

    #[test]
    fn constant_data_is_reproduced_in_one_round() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 1).unwrap();
        let rep = compute_boundary(&g, &cone, default_tol_peak(&g)).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        let phi = GridFunction::constant(g.len(), 2.5);
        let r = dirichlet_extend(&g, &st, &rep, &phi, 3, &SweepParams::default()).unwrap();
        assert_eq!(r.residuals[0], 0.0);
        assert!(r.values.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn disk_extension_is_psh_with_geometric_residuals() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 1).unwrap();
        let rep = compute_boundary(&g, &cone, default_tol_peak(&g)).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        let phi = GridFunction::from_fn(&g, |p| p.coord(0).re);
        let r = dirichlet_extend(&g, &st, &rep, &phi, 6, &SweepParams::default()).unwrap();
        for (k, res) in r.residuals.iter().enumerate() {
            assert!(*res <= 2.0 / f64::powi(2.0, k as i32 + 1) + 1e-9, "round {k}: {res}");
        }
        assert!(is_discretely_psh(r.values.values(), &st, 1e-6).psh);
    }

    #[test]
    fn rejects_irregular_reports() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 1).unwrap();
        let mut rep = compute_boundary(&g, &cone, default_tol_peak(&g)).unwrap();
        rep.b_mask.insert(0);
        let phi = GridFunction::constant(g.len(), 0.0);
        let err = dirichlet_extend(&g, &[], &rep, &phi, 1, &SweepParams::default()).unwrap_err();
        assert!(matches!(err, Error::NotORegular { extra: 1 }));
    }
}
