//! Discrete sub-averaging stencils along complex lines.
//!
//! A stencil at node `c` with direction `v` and radius `r` is a probability
//! measure on grid nodes `c + d` with `0 < |d| <= r` lying close to the
//! line `c + C v`, whose holomorphic moments `sum w d^alpha` vanish for
//! `1 <= |alpha| <= K`. It reproduces the value at `c` of every holomorphic
//! polynomial of degree at most `K`, and among such measures the one with
//! the largest second moment is kept so that mass sits as far out as the
//! grid allows. On grids whose nodes lie exactly on the line the stencil is
//! a discrete disc average; off-line nodes let product grids carry
//! stencils in directions that no node line follows.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

use crate::cone::{exponents_of_degree, LOG_FLOOR};
use crate::error::Result;
use crate::grid::GridSet;
use crate::lp::{self, StandardForm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscStencil {
    pub center: usize,
    pub direction: Vec<Complex64>,
    pub radius: f64,
    /// `(node, weight)`, weights positive and summing to one.
    pub nodes: Vec<(usize, f64)>,
}

impl DiscStencil {
    pub fn average(&self, u: &[f64]) -> f64 {
        self.nodes.iter().map(|(i, w)| w * u[*i]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilParams {
    /// Disc radii along coordinate axes, in absolute units.
    pub radii: Vec<f64>,
    /// Disc radii along the remaining directions.
    pub off_axis_radii: Vec<f64>,
    pub directions_per_node: usize,
    /// Number of vanishing holomorphic moments along coordinate axes.
    pub moment_order: u32,
    pub off_axis_moment_order: u32,
    /// Largest distance from the complex line for a node to be used.
    pub line_tolerance: f64,
    /// Largest ratio of that distance to the node's distance from the center.
    pub line_slope: f64,
}

impl StencilParams {
    pub fn for_grid(grid: &GridSet) -> Self {
        let h = grid.spacing();
        let scaled = |ks: &[f64]| ks.iter().map(|k| k * h).collect();
        Self {
            radii: scaled(&[2.0, 3.0, 4.0, 6.0, 8.0]),
            off_axis_radii: scaled(&[4.0, 8.0]),
            directions_per_node: candidate_directions(grid.dim()).len(),
            moment_order: 4,
            off_axis_moment_order: 3,
            line_tolerance: 0.9 * h,
            line_slope: 0.5,
        }
    }
}

/// Coordinate axes first, then `(1, e^{i k pi/4}) / sqrt 2`.
pub fn candidate_directions(n: usize) -> Vec<Vec<Complex64>> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if n == 1 {
        return vec![vec![one]];
    }
    let mut out = vec![vec![one, zero], vec![zero, one]];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..8 {
        let phase = Complex64::from_polar(1.0, k as f64 * PI / 4.0);
        out.push(vec![one * s, phase * s]);
    }
    out
}

/// Weights on displacements `d` with `sum w = 1`, `sum w d^alpha = 0` for
/// every holomorphic monomial of degree `1..=K`, maximizing `sum w |d|^2`.
fn fit_weights(disp: &[Vec<Complex64>], moment_order: u32) -> Option<Vec<f64>> {
    let n = disp[0].len();
    let monomials: Vec<Vec<u32>> = (1..=moment_order).flat_map(|k| exponents_of_degree(n, k)).collect();
    let rows = 1 + 2 * monomials.len();
    let mut cols = Vec::with_capacity(rows * disp.len());
    for d in disp {
        cols.push(1.0);
        for e in &monomials {
            let p = e
                .iter()
                .zip(d)
                .fold(Complex64::new(1.0, 0.0), |acc, (&k, &x)| acc * x.powu(k));
            cols.push(p.re);
            cols.push(p.im);
        }
    }
    let form = StandardForm::new(rows, cols);
    let mut b = vec![0.0; rows];
    b[0] = 1.0;
    let c: Vec<f64> = disp
        .iter()
        .map(|d| -d.iter().map(|x| x.norm_sqr()).sum::<f64>())
        .collect();
    let sol = lp::solve(&form, &b, &c).ok()?;
    if sol.residual > 1e-9 {
        return None;
    }
    Some(sol.x)
}

/// Builds stencils for every node, direction and radius where the moment
/// conditions can be met by grid nodes near the complex line; nodes without
/// such a configuration get none.
pub fn build_stencils(grid: &GridSet, params: &StencilParams) -> Vec<DiscStencil> {
    let dirs: Vec<Vec<Complex64>> = candidate_directions(grid.dim())
        .into_iter()
        .take(params.directions_per_node.max(1))
        .collect();
    let rmax = params.radii.iter().cloned().fold(0.0, f64::max);
    let line_tol = params.line_tolerance.max(grid.spacing() * 1e-6);
    let mut out = Vec::new();
    for c in 0..grid.len() {
        let pc = grid.point(c);
        let ball: Vec<(usize, Vec<Complex64>)> = grid
            .within(pc, rmax + 1e-9)
            .into_iter()
            .filter(|&w| w != c)
            .map(|w| {
                let d = grid
                    .point(w)
                    .coords()
                    .iter()
                    .zip(pc.coords())
                    .map(|(a, b)| a - b)
                    .collect();
                (w, d)
            })
            .collect();
        let mut emitted: Vec<Vec<(usize, f64)>> = Vec::new();
        for v in &dirs {
            // Distance from the line c + C v.
            let near: Vec<(usize, &Vec<Complex64>, f64)> = ball
                .iter()
                .filter_map(|(w, d)| {
                    let zeta: Complex64 = d.iter().zip(v).map(|(a, b)| a * b.conj()).sum();
                    let off: f64 = d
                        .iter()
                        .zip(v)
                        .map(|(a, b)| (a - zeta * b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    let norm = d.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    (off <= line_tol && off <= params.line_slope * norm).then_some((*w, d, norm))
                })
                .collect();
            let (radii, order) = if v.iter().filter(|x| x.norm() > 1e-12).count() > 1 {
                (&params.off_axis_radii, params.off_axis_moment_order)
            } else {
                (&params.radii, params.moment_order)
            };
            for &r in radii {
                let sel: Vec<(usize, &Vec<Complex64>)> = near
                    .iter()
                    .filter(|(_, _, norm)| *norm <= r + 1e-9)
                    .map(|(w, d, _)| (*w, *d))
                    .collect();
                if sel.len() < 2 {
                    continue;
                }
                let disp: Vec<Vec<Complex64>> = sel.iter().map(|(_, d)| (*d).clone()).collect();
                let Some(x) = fit_weights(&disp, order) else {
                    continue;
                };
                let mut nodes: Vec<(usize, f64)> = sel
                    .iter()
                    .zip(&x)
                    .filter(|(_, w)| **w > 1e-12)
                    .map(|((i, _), w)| (*i, *w))
                    .collect();
                let total: f64 = nodes.iter().map(|(_, w)| w).sum();
                nodes.iter_mut().for_each(|(_, w)| *w /= total);
                nodes.sort_by_key(|(i, _)| *i);
                let same = |a: &Vec<(usize, f64)>| {
                    a.len() == nodes.len()
                        && a.iter().zip(&nodes).all(|(p, q)| p.0 == q.0 && (p.1 - q.1).abs() < 1e-12)
                };
                if emitted.iter().any(same) {
                    continue;
                }
                emitted.push(nodes.clone());
                out.push(DiscStencil {
                    center: c,
                    direction: v.clone(),
                    radius: r,
                    nodes,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PshReport {
    pub psh: bool,
    /// Largest `u(center) - average`, zero when no stencil is violated.
    pub worst_violation: f64,
    /// Index into the stencil list of the worst violation.
    pub worst_stencil: Option<usize>,
    pub checked: usize,
}

/// `u(center) <= average + tol` on every stencil. Stencils touching a node
/// at the floor are skipped since `-inf` makes the inequality trivial or
/// meaningless there.
pub fn is_discretely_psh(u: &[f64], stencils: &[DiscStencil], tol: f64) -> PshReport {
    let mut worst = 0.0;
    let mut worst_stencil = None;
    let mut checked = 0;
    for (k, s) in stencils.iter().enumerate() {
        if u[s.center] <= LOG_FLOOR || s.nodes.iter().any(|(i, _)| u[*i] <= LOG_FLOOR) {
            continue;
        }
        checked += 1;
        let v = u[s.center] - s.average(u);
        if v > worst {
            worst = v;
            worst_stencil = Some(k);
        }
    }
    PshReport {
        psh: worst <= tol,
        worst_violation: worst,
        worst_stencil,
        checked,
    }
}

/// Writes `center, radius, direction, support_size`.
pub fn write_stencils_csv<W: Write>(stencils: &[DiscStencil], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["center", "radius", "direction", "support_size"])?;
    for s in stencils {
        let dir: Vec<String> = s.direction.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
        w.write_record([
            s.center.to_string(),
            format!("{}", s.radius),
            dir.join(";"),
            s.nodes.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_fixture, Fixture, ANALYTIC_BOUNDARY};

    #[test]
    fn stencils_are_probability_measures_with_vanishing_moments() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        assert!(!st.is_empty());
        for s in &st {
            let total: f64 = s.nodes.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let c = g.point(s.center).coord(0);
            for k in 1..=4 {
                let m: Complex64 = s
                    .nodes
                    .iter()
                    .map(|(i, w)| (g.point(*i).coord(0) - c).powu(k) * w)
                    .sum();
                assert!(m.norm() < 1e-8, "moment {k} = {m}");
            }
        }
    }

    #[test]
    fn circle_nodes_carry_no_stencil() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        let circle = g.tagged(ANALYTIC_BOUNDARY);
        assert!(st.iter().all(|s| !circle.contains(s.center)));
        assert!(st.iter().any(|s| s.center == 0));
    }

    #[test]
    fn segment_direction_is_never_used() {
        let g = build_fixture(Fixture::DiskXSegment, 0.25).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        assert!(!st.is_empty());
        for s in &st {
            let t = g.point(s.center).coord(1);
            assert!(s.nodes.iter().all(|(i, _)| (g.point(*i).coord(1) - t).norm() < 1e-12));
        }
    }

    #[test]
    fn negative_sqnorm_is_not_psh() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let st = build_stencils(&g, &StencilParams::for_grid(&g));
        let u: Vec<f64> = g.points().iter().map(|p| -p.norm_sqr()).collect();
        let rep = is_discretely_psh(&u, &st, 1e-9);
        assert!(!rep.psh);
        assert!(rep.worst_violation > 0.0);
    }
}
