//! Poisson and harmonicity verdicts from extremal Jensen measures.
//!
//! Both tests bracket `mu(g)` over a Jensen polytope by an LP minimum and
//! maximum. A spread above tolerance is a proof (up to LP accuracy) that the
//! polytope has more than one point; a small spread only means the probes
//! did not separate its points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{as_discretization_failure, boundary_family, BoundaryReport};
use crate::cone::TestCone;
use crate::error::Result;
use crate::grid::{GridSet, NodeSubset};
use crate::gridfn::GridFunction;
use crate::jensen::{JensenFamily, CHUNK};

/// Nodes per block between early-exit checks; a multiple of the solver chunk
/// so results do not depend on the thread count.
const BLOCK: usize = 4 * CHUNK;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    pub values: Vec<f64>,
}

/// Quadratic moments that no pluriharmonic function reproduces:
/// `|z_j|^2`, `Re z_j conj z_k`, `Im z_j conj z_k` and `|z_j - z_k|^2`,
/// followed by `count` seeded features `cos(a . x + b)` in real coordinates.
pub fn poisson_probes(grid: &GridSet, count: usize, seed: u64) -> Vec<Probe> {
    let n = grid.dim();
    let mut out = Vec::new();
    let mut push = |name: String, f: &dyn Fn(&[num_complex::Complex64]) -> f64| {
        let values = grid.points().iter().map(|p| f(p.coords())).collect();
        out.push(Probe { name, values });
    };
    for j in 0..n {
        push(format!("|z{}|^2", j + 1), &|z| z[j].norm_sqr());
    }
    for j in 0..n {
        for k in j + 1..n {
            push(format!("Re z{} conj z{}", j + 1, k + 1), &|z| (z[j] * z[k].conj()).re);
            push(format!("Im z{} conj z{}", j + 1, k + 1), &|z| (z[j] * z[k].conj()).im);
            push(format!("|z{} - z{}|^2", j + 1, k + 1), &|z| (z[j] - z[k]).norm_sqr());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..count {
        let a: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let values = grid
            .points()
            .iter()
            .map(|p| (p.real_coords().iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() + b).cos())
            .collect();
        out.push(Probe {
            name: format!("random-{r}"),
            values,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub probes: usize,
    pub tol: f64,
    pub seed: u64,
    /// Scan every node even after a refutation.
    pub exhaustive: bool,
}

impl PoissonParams {
    /// Sixteen random probes, tolerance `10 h`.
    pub fn for_grid(grid: &GridSet) -> Self {
        Self {
            probes: 16,
            tol: 10.0 * grid.spacing(),
            seed: 0,
            exhaustive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonVerdict {
    /// `false` proves the set is not Poisson; `true` means not refuted.
    pub poisson: bool,
    /// Largest `max - min` of a probe over a boundary polytope.
    pub worst_gap: f64,
    pub worst_node: Option<usize>,
    pub worst_probe: Option<String>,
    pub nodes_checked: usize,
}

/// Spread of every probe over `J^b_z` at each node outside the peak set.
/// Without `exhaustive`, stops after the first block containing a refutation.
pub fn poisson_test(
    grid: &GridSet,
    cone: &TestCone,
    report: &BoundaryReport,
    params: &PoissonParams,
) -> Result<PoissonVerdict> {
    grid.check_mask(&report.b_mask)?;
    let family = boundary_family(grid, cone, report)?;
    let probes = poisson_probes(grid, params.probes, params.seed);
    let nodes = report.o_mask.complement().indices();
    let mut verdict = PoissonVerdict {
        poisson: true,
        worst_gap: 0.0,
        worst_node: None,
        worst_probe: None,
        nodes_checked: 0,
    };
    for block in nodes.chunks(BLOCK) {
        for p in &probes {
            let (lo, hi) = spread(&family, block, &p.values).map_err(as_discretization_failure)?;
            for (k, &z) in block.iter().enumerate() {
                let gap = hi[k] - lo[k];
                if gap > verdict.worst_gap {
                    verdict.worst_gap = gap;
                    verdict.worst_node = Some(z);
                    verdict.worst_probe = Some(p.name.clone());
                }
            }
        }
        verdict.nodes_checked += block.len();
        if verdict.worst_gap > params.tol {
            verdict.poisson = false;
            if !params.exhaustive {
                break;
            }
        }
    }
    Ok(verdict)
}

fn spread(family: &JensenFamily, nodes: &[usize], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let lo = family.optimize_all(nodes, g, false)?;
    let hi = family.optimize_all(nodes, g, true)?;
    Ok((lo.iter().map(|e| e.value).collect(), hi.iter().map(|e| e.value).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicVerdict {
    pub harmonic: bool,
    /// Largest `max(u(z) - min, max - u(z))` over Jensen measures.
    pub worst_gap: f64,
    pub worst_node: Option<usize>,
    /// `max - min` at the worst node.
    pub worst_spread: f64,
    pub nodes_checked: usize,
}

/// `mu(u) = u(z)` for every Jensen measure at every node, up to `tol`.
/// Stops after the first block containing a failure unless `exhaustive`.
pub fn harmonic_test(
    grid: &GridSet,
    cone: &TestCone,
    u: &GridFunction,
    tol: f64,
    exhaustive: bool,
) -> Result<HarmonicVerdict> {
    u.check_len(grid)?;
    let family = JensenFamily::new(grid, cone, &NodeSubset::full(grid.len()))?;
    let nodes: Vec<usize> = (0..grid.len()).collect();
    let mut verdict = HarmonicVerdict {
        harmonic: true,
        worst_gap: 0.0,
        worst_node: None,
        worst_spread: 0.0,
        nodes_checked: 0,
    };
    for block in nodes.chunks(BLOCK) {
        let (lo, hi) = spread(&family, block, u.values())?;
        for (k, &z) in block.iter().enumerate() {
            let gap = (u.get(z) - lo[k]).max(hi[k] - u.get(z));
            if gap > verdict.worst_gap {
                verdict.worst_gap = gap;
                verdict.worst_node = Some(z);
                verdict.worst_spread = hi[k] - lo[k];
            }
        }
        verdict.nodes_checked += block.len();
        if verdict.worst_gap > tol {
            verdict.harmonic = false;
            if !exhaustive {
                break;
            }
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{compute_boundary, default_tol_peak};
    use crate::cone::generate_cone;
    use crate::grid::{build_fixture, Fixture};

    #[test]
    fn disk_is_not_refuted() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 4).unwrap();
        let rep = compute_boundary(&g, &cone, default_tol_peak(&g)).unwrap();
        let v = poisson_test(&g, &cone, &rep, &PoissonParams::for_grid(&g)).unwrap();
        assert!(v.poisson);
        assert_eq!(v.nodes_checked, g.len() - rep.o_mask.count());
    }

    #[test]
    fn pluriharmonic_passes_and_sqnorm_fails() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 3, 16, 4).unwrap();
        let re = GridFunction::from_fn(&g, |p| p.coord(0).re);
        assert!(harmonic_test(&g, &cone, &re, 1e-6, true).unwrap().harmonic);
        let sq = GridFunction::from_fn(&g, |p| p.norm_sqr());
        let v = harmonic_test(&g, &cone, &sq, 1e-6, false).unwrap();
        assert!(!v.harmonic);
        assert!(v.worst_spread > 0.9);
    }

    #[test]
    fn probes_are_seeded() {
        let g = build_fixture(Fixture::Bidisk, 0.5).unwrap();
        assert_eq!(poisson_probes(&g, 4, 9), poisson_probes(&g, 4, 9));
        assert_ne!(poisson_probes(&g, 4, 9), poisson_probes(&g, 4, 10));
    }
}
