//! Jensen-measure polytopes and linear optimization over them.
//!
//! For a barycenter `z` and a set of allowed support nodes, the polytope is
//! `{mu >= 0, sum mu = 1, mu(u) >= u(z) for every cone member u}`. The
//! constraint matrix depends only on the cone and the support, so it is
//! assembled once per [`JensenFamily`] and every barycenter shares it; only
//! the right-hand side changes from node to node. Pairs `+-Re p` collapse to
//! equality rows and members implied by `|z|^2` together with pinned
//! monomial moments are dropped.
//!
//! Values at the log floor are treated as `-inf`: when `u(z)` is finite the
//! constraint `mu(u) >= u(z)` forbids any mass where `u = -inf`, so those
//! columns are held at zero; when `u(z) = -inf` the row is vacuous.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{TestCone, TestFunction, LOG_FLOOR};
use crate::error::{Error, Result};
use crate::gridfn::DiscreteMeasure;
use crate::grid::{GridSet, NodeSubset};
use crate::lp::{LpFailure, Simplex, StandardForm};

/// Nodes per independently warm-started solver chain. Fixed so results do
/// not depend on the number of worker threads.
pub const CHUNK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowKind {
    Mass,
    Equal(usize),
    AtLeast(usize),
}

/// Constraint data shared by all polytopes over one support set.
#[derive(Debug)]
pub struct JensenFamily {
    support: Vec<usize>,
    mask: NodeSubset,
    /// Column position of each node in `support`, `usize::MAX` if absent.
    column_of: Vec<usize>,
    rows: Vec<RowKind>,
    scale: Vec<f64>,
    form: StandardForm,
    cone_rows: Vec<Vec<f64>>,
    n_equal: usize,
    /// Rows whose member hits the floor on the support: `(row, member,
    /// floor columns, finite stand-in used for the vacuous case)`.
    floor_rows: Vec<FloorRow>,
}

#[derive(Debug)]
struct FloorRow {
    row: usize,
    member: usize,
    columns: Vec<usize>,
    stand_in: f64,
}

/// Solver outcome for one barycenter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub measure: DiscreteMeasure,
    pub iterations: usize,
    pub residual: f64,
}

fn lp_error(node: usize, e: LpFailure) -> Error {
    match e {
        LpFailure::Infeasible { residual } => Error::Infeasible { node, residual },
        LpFailure::Unbounded => Error::Unbounded,
        LpFailure::IterationLimit { iterations } => Error::IterationLimit { iterations },
        LpFailure::SingularBasis => Error::SingularBasis,
    }
}

impl JensenFamily {
    pub fn new(grid: &GridSet, cone: &TestCone, support: &NodeSubset) -> Result<Self> {
        grid.check_mask(support)?;
        if cone.nodes() != grid.len() {
            return Err(Error::Config("cone was evaluated on a different grid".into()));
        }
        let cols = support.indices();
        if cols.is_empty() {
            return Err(Error::EmptySupport { node: 0 });
        }
        let mut column_of = vec![usize::MAX; grid.len()];
        for (k, &i) in cols.iter().enumerate() {
            column_of[i] = k;
        }

        let functions = cone.functions();
        let pinned = cone.pinned_monomials();
        let has_sqnorm = functions.iter().any(|f| *f == TestFunction::SqNorm);
        let mut taken = vec![false; functions.len()];
        let mut equal = Vec::new();
        let mut at_least = Vec::new();
        for (k, f) in functions.iter().enumerate() {
            if taken[k] {
                continue;
            }
            taken[k] = true;
            match f {
                TestFunction::RePoly { poly } => {
                    let neg = TestFunction::RePoly { poly: poly.negated() };
                    if let Some(p) = (k + 1..functions.len()).find(|&p| !taken[p] && functions[p] == neg) {
                        taken[p] = true;
                        equal.push(k);
                    } else {
                        at_least.push(k);
                    }
                }
                TestFunction::AffineCombo { poly, k: weight } => {
                    let implied = has_sqnorm
                        && *weight >= 0.0
                        && poly.terms.iter().all(|t| {
                            t.exponents.iter().all(|e| *e == 0) || pinned.contains(&t.exponents)
                        });
                    if !implied {
                        at_least.push(k);
                    }
                }
                _ => at_least.push(k),
            }
        }
        let mut rows = vec![RowKind::Mass];
        rows.extend(equal.iter().map(|&k| RowKind::Equal(k)));
        rows.extend(at_least.iter().map(|&k| RowKind::AtLeast(k)));
        let m = rows.len();

        let finite = |v: f64| v > LOG_FLOOR;
        let mut scale = vec![1.0; m];
        let mut stand_in = vec![0.0; m];
        let mut floor_rows = Vec::new();
        for (r, kind) in rows.iter().enumerate() {
            if let RowKind::Equal(k) | RowKind::AtLeast(k) = kind {
                let row = cone.row(*k);
                let lowest = row.iter().cloned().filter(|v| finite(*v)).fold(f64::INFINITY, f64::min);
                let big = row
                    .iter()
                    .filter(|v| finite(**v))
                    .fold(1.0f64, |a, v| a.max(v.abs()));
                let columns: Vec<usize> = (0..cols.len()).filter(|&c| !finite(row[cols[c]])).collect();
                let has_floor = row.iter().any(|v| !finite(*v));
                if has_floor {
                    stand_in[r] = if lowest.is_finite() { lowest - 1.0 } else { -1.0 };
                    if matches!(kind, RowKind::AtLeast(_)) {
                        floor_rows.push(FloorRow {
                            row: r,
                            member: *k,
                            columns,
                            stand_in: stand_in[r],
                        });
                    }
                }
                scale[r] = 1.0 / big.max(stand_in[r].abs());
            }
        }
        let n_struct = cols.len() + at_least.len();
        let mut data = Vec::with_capacity(m * n_struct);
        for &node in &cols {
            for (r, kind) in rows.iter().enumerate() {
                data.push(match kind {
                    RowKind::Mass => 1.0,
                    RowKind::Equal(k) | RowKind::AtLeast(k) => {
                        let v = cone.value(*k, node);
                        scale[r] * if finite(v) { v } else { stand_in[r] }
                    }
                });
            }
        }
        for s in 0..at_least.len() {
            for r in 0..m {
                data.push(if r == 1 + equal.len() + s { -1.0 } else { 0.0 });
            }
        }
        let cone_rows = (0..cone.len()).map(|k| cone.row(k).to_vec()).collect();
        Ok(Self {
            support: cols,
            mask: support.clone(),
            column_of,
            rows,
            scale,
            form: StandardForm::new(m, data),
            cone_rows,
            n_equal: equal.len(),
            floor_rows,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_mask(&self) -> &NodeSubset {
        &self.mask
    }

    pub fn constraint_rows(&self) -> usize {
        self.rows.len()
    }

    /// Right-hand side and held-at-zero columns for barycenter `z`.
    fn rhs(&self, z: usize) -> (Vec<f64>, Option<Vec<bool>>) {
        let mut b: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.scale)
            .map(|(kind, s)| match kind {
                RowKind::Mass => 1.0,
                RowKind::Equal(k) | RowKind::AtLeast(k) => s * self.cone_rows[*k][z],
            })
            .collect();
        let mut fixed: Option<Vec<bool>> = None;
        for f in &self.floor_rows {
            if self.cone_rows[f.member][z] <= LOG_FLOOR {
                b[f.row] = self.scale[f.row] * f.stand_in;
            } else if !f.columns.is_empty() {
                let mask = fixed.get_or_insert_with(|| vec![false; self.form.cols()]);
                for &c in &f.columns {
                    mask[c] = true;
                }
            }
        }
        (b, fixed)
    }

    /// Basis `{delta_z, artificials of equality rows, slacks}`, primal
    /// feasible whenever `z` is a support node.
    fn dirac_basis(&self, z: usize) -> Option<Vec<usize>> {
        let col = *self.column_of.get(z)?;
        if col == usize::MAX {
            return None;
        }
        let n_struct = self.form.cols();
        let mut basis = vec![col];
        basis.extend((1..=self.n_equal).map(|r| n_struct + r));
        let first_slack = self.support.len();
        basis.extend(first_slack..n_struct);
        Some(basis)
    }

    fn objective(&self, g: &[f64], sign: f64) -> Vec<f64> {
        let mut c: Vec<f64> = self.support.iter().map(|&i| sign * g[i]).collect();
        c.resize(self.form.cols(), 0.0);
        c
    }

    /// Largest violation `u(z) - mu(u)` over cone members, or infinity when
    /// `mu` charges a node outside the support.
    pub fn violation(&self, z: usize, mu: &DiscreteMeasure) -> f64 {
        if !mu.supported_in(&self.mask) {
            return f64::INFINITY;
        }
        let mut worst = (mu.total_mass() - 1.0).abs();
        for kind in &self.rows {
            match kind {
                RowKind::Mass => {}
                RowKind::Equal(k) => {
                    let row = &self.cone_rows[*k];
                    worst = worst.max((row[z] - mu.integrate(row)).abs());
                }
                RowKind::AtLeast(k) => {
                    let row = &self.cone_rows[*k];
                    if row[z] <= LOG_FLOOR {
                        continue;
                    }
                    if mu.weights.iter().any(|(i, _)| row[*i] <= LOG_FLOOR) {
                        return f64::INFINITY;
                    }
                    worst = worst.max(row[z] - mu.integrate(row));
                }
            }
        }
        worst
    }

    pub fn solver(&self) -> FamilySolver<'_> {
        FamilySolver {
            family: self,
            simplex: Simplex::new(&self.form),
        }
    }

    /// Optimizes `g` (minimum when `maximize` is false) at each barycenter,
    /// in parallel over fixed-size chunks with warm starts inside a chunk.
    pub fn optimize_all(&self, nodes: &[usize], g: &[f64], maximize: bool) -> Result<Vec<Extremum>> {
        let chunks: Vec<Result<Vec<Extremum>>> = nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut s = self.solver();
                chunk
                    .iter()
                    .map(|&z| if maximize { s.maximize(z, g) } else { s.minimize(z, g) })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(nodes.len());
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }
}

/// Warm-started solver over one family.
pub struct FamilySolver<'a> {
    family: &'a JensenFamily,
    simplex: Simplex<'a>,
}

impl FamilySolver<'_> {
    fn run(&mut self, z: usize, g: &[f64], sign: f64) -> Result<Extremum> {
        let f = self.family;
        let (b, fixed) = f.rhs(z);
        let c = f.objective(g, sign);
        let crash = f.dirac_basis(z);
        let sol = self
            .simplex
            .solve(&b, &c, fixed.as_deref(), crash.as_deref())
            .map_err(|e| lp_error(z, e))?;
        let measure = DiscreteMeasure::from_weights(
            z,
            f.support.iter().zip(&sol.x).map(|(&i, &w)| (i, w)),
        );
        Ok(Extremum {
            value: measure.integrate(g),
            measure,
            iterations: sol.iterations,
            residual: sol.residual,
        })
    }

    pub fn minimize(&mut self, z: usize, g: &[f64]) -> Result<Extremum> {
        self.run(z, g, 1.0)
    }

    pub fn maximize(&mut self, z: usize, g: &[f64]) -> Result<Extremum> {
        self.run(z, g, -1.0)
    }
}

/// A single Jensen polytope: a family plus a barycenter.
#[derive(Clone, Debug)]
pub struct JensenPolytope {
    family: Arc<JensenFamily>,
    barycenter: usize,
}

impl JensenPolytope {
    pub fn new(family: Arc<JensenFamily>, barycenter: usize) -> Self {
        Self { family, barycenter }
    }

    pub fn barycenter(&self) -> usize {
        self.barycenter
    }

    pub fn family(&self) -> &JensenFamily {
        &self.family
    }

    pub fn contains(&self, mu: &DiscreteMeasure, tol: f64) -> bool {
        self.family.violation(self.barycenter, mu) <= tol
    }

    pub fn minimize(&self, g: &[f64]) -> Result<Extremum> {
        self.family.solver().minimize(self.barycenter, g)
    }

    pub fn maximize(&self, g: &[f64]) -> Result<Extremum> {
        self.family.solver().maximize(self.barycenter, g)
    }
}

/// Polytope of Jensen measures at `z` supported in `support`.
pub fn build_polytope(
    grid: &GridSet,
    cone: &TestCone,
    z: usize,
    support: &NodeSubset,
) -> Result<JensenPolytope> {
    grid.check_node(z)?;
    let family = JensenFamily::new(grid, cone, support).map_err(|e| match e {
        Error::EmptySupport { .. } => Error::EmptySupport { node: z },
        other => other,
    })?;
    Ok(JensenPolytope::new(Arc::new(family), z))
}

pub fn minimize(p: &JensenPolytope, g: &[f64]) -> Result<Extremum> {
    p.minimize(g)
}

pub fn maximize(p: &JensenPolytope, g: &[f64]) -> Result<Extremum> {
    p.maximize(g)
}

/// `|w|^2` at every node.
pub fn sq_norms(grid: &GridSet) -> Vec<f64> {
    grid.points().iter().map(|p| p.norm_sqr()).collect()
}

/// `s(z) = max mu(|w - z|^2)` over the polytope. Linear moments are pinned,
/// so this equals `max mu(|w|^2) - |z|^2`.
pub fn peak_score(p: &JensenPolytope, grid: &GridSet) -> Result<f64> {
    let q = sq_norms(grid);
    let best = p.maximize(&q)?;
    Ok((best.value - q[p.barycenter]).max(0.0))
}

/// `true` when `z` is a detected peak point: `s(z) <= tol_peak`.
pub fn peak_point_test(grid: &GridSet, cone: &TestCone, z: usize, tol_peak: f64) -> Result<bool> {
    let p = build_polytope(grid, cone, z, &NodeSubset::full(grid.len()))?;
    Ok(peak_score(&p, grid)? <= tol_peak)
}

/// Maximizer of the `|z|^2` moment: no feasible measure strictly dominates it
/// in the subordination order restricted to the cone.
pub fn maximal_measure(p: &JensenPolytope, grid: &GridSet) -> Result<DiscreteMeasure> {
    Ok(p.maximize(&sq_norms(grid))?.measure)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subordination {
    /// `mu(u) >= nu(u) - tol` for every member: not refuted.
    pub holds: bool,
    /// Member with the most negative `mu(u) - nu(u)`.
    pub worst_member: Option<usize>,
    pub worst_gap: f64,
}

/// Checks `mu >= nu` on every cone member. Only a necessary condition for
/// subordination, since the cone is finite.
pub fn subordination_ge(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cone: &TestCone, tol: f64) -> Subordination {
    let mut worst_gap = f64::INFINITY;
    let mut worst_member = None;
    for k in 0..cone.len() {
        let row = cone.row(k);
        let gap = mu.integrate(row) - nu.integrate(row);
        if gap < worst_gap {
            worst_gap = gap;
            worst_member = Some(k);
        }
    }
    Subordination {
        holds: worst_gap >= -tol,
        worst_member,
        worst_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::generate_cone;
    use crate::grid::{build_fixture, ComplexPoint, Fixture};
    use num_complex::Complex64;

    #[test]
    fn singleton_polytope_is_a_dirac() {
        let p = ComplexPoint::new(vec![Complex64::new(0.2, 0.1)]).unwrap();
        let g = GridSet::from_points(vec![p], 0.25, None).unwrap();
        let cone = generate_cone(&g, 2, 5, 1).unwrap();
        let poly = build_polytope(&g, &cone, 0, &NodeSubset::full(1)).unwrap();
        let e = poly.minimize(&[3.0]).unwrap();
        assert_eq!(e.measure, DiscreteMeasure::dirac(0));
        assert!(peak_point_test(&g, &cone, 0, 1e-12).unwrap());
        assert_eq!(maximal_measure(&poly, &g).unwrap(), DiscreteMeasure::dirac(0));
    }

    #[test]
    fn disk_center_maximal_measure_reaches_the_circle() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 3).unwrap();
        let p = build_polytope(&g, &cone, 0, &NodeSubset::full(g.len())).unwrap();
        let mu = maximal_measure(&p, &g).unwrap();
        assert!((mu.integrate(&sq_norms(&g)) - 1.0).abs() < 1e-9);
        // Real-part maximum is pinned by the barycenter rows.
        let re: Vec<f64> = g.points().iter().map(|p| p.coord(0).re).collect();
        assert!(p.maximize(&re).unwrap().value.abs() < 1e-9);
        assert!(p.minimize(&re).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn empty_support_rejected() {
        let g = build_fixture(Fixture::Disk1d, 0.5).unwrap();
        let cone = generate_cone(&g, 1, 5, 1).unwrap();
        assert!(matches!(
            build_polytope(&g, &cone, 2, &NodeSubset::empty(g.len())),
            Err(Error::EmptySupport { node: 2 })
        ));
    }

    #[test]
    fn subordination_is_reflexive() {
        let g = build_fixture(Fixture::Disk1d, 0.5).unwrap();
        let cone = generate_cone(&g, 2, 8, 1).unwrap();
        let mu = DiscreteMeasure::from_weights(0, [(1, 0.5), (4, 0.5)]);
        assert!(subordination_ge(&mu, &mu, &cone, 1e-12).holds);
    }
}
