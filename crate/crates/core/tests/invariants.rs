use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use pluripot::boundary::{boundary_family, compute_boundary, default_tol_peak, BoundaryReport};
use pluripot::cone::{generate_cone, TestCone};
use pluripot::envelope::{edwards_envelope_lp, perron_sweep_envelope};
use pluripot::grid::{build_fixture, Fixture, GridSet, NodeSubset};
use pluripot::gridfn::GridFunction;
use pluripot::jensen::{JensenFamily, JensenPolytope};
use pluripot::stencil::{build_stencils, is_discretely_psh, DiscStencil, StencilParams};

struct Setup {
    grid: GridSet,
    cone: TestCone,
    stencils: Vec<DiscStencil>,
    report: BoundaryReport,
    family: Arc<JensenFamily>,
}

fn disk() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let grid = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&grid, 3, 64, 0).unwrap();
        let stencils = build_stencils(&grid, &StencilParams::for_grid(&grid));
        let report = compute_boundary(&grid, &cone, default_tol_peak(&grid)).unwrap();
        let family = Arc::new(JensenFamily::new(&grid, &cone, &NodeSubset::full(grid.len())).unwrap());
        Setup {
            grid,
            cone,
            stencils,
            report,
            family,
        }
    })
}

fn data() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0f64, disk().grid.len())
}

fn envelope(phi: &[f64]) -> Vec<f64> {
    let s = disk();
    let full = NodeSubset::full(s.grid.len());
    let e = edwards_envelope_lp(&s.grid, &s.cone, &GridFunction::new(phi.to_vec()), &full).unwrap();
    e.values.values().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn envelope_is_monotone(phi in data(), bump in data()) {
        let psi: Vec<f64> = phi.iter().zip(&bump).map(|(a, b)| a + b.abs()).collect();
        for (lo, hi) in envelope(&phi).iter().zip(envelope(&psi)) {
            prop_assert!(*lo <= hi + 1e-8);
        }
    }

    #[test]
    fn envelope_commutes_with_constants(phi in data(), c in -3.0..3.0f64) {
        let shifted: Vec<f64> = phi.iter().map(|v| v + c).collect();
        for (a, b) in envelope(&phi).iter().zip(envelope(&shifted)) {
            prop_assert!((a + c - b).abs() < 1e-7);
        }
    }

    #[test]
    fn envelope_is_idempotent_and_below_data(phi in data()) {
        let once = envelope(&phi);
        for (e, p) in once.iter().zip(&phi) {
            prop_assert!(*e <= p + 1e-9);
        }
        for (a, b) in once.iter().zip(envelope(&once)) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn sweep_is_psh_minorant(phi in data()) {
        let s = disk();
        let r = perron_sweep_envelope(&s.grid, &s.stencils, &GridFunction::new(phi.clone()), 20_000, 1e-12).unwrap();
        prop_assert!(r.converged);
        prop_assert!(is_discretely_psh(r.values.values(), &s.stencils, 1e-8).psh);
        for (u, p) in r.values.values().iter().zip(&phi) {
            prop_assert!(*u <= p + 1e-12);
        }
    }

    #[test]
    fn jensen_measures_reproduce_pluriharmonic_values(g in data(), node in 0usize..61) {
        let s = disk();
        let p = JensenPolytope::new(s.family.clone(), node);
        let mu = p.minimize(&g).unwrap().measure;
        let z = s.grid.point(node).coord(0);
        let re: Vec<f64> = s.grid.points().iter().map(|q| q.coord(0).re).collect();
        let im: Vec<f64> = s.grid.points().iter().map(|q| q.coord(0).im).collect();
        prop_assert!((mu.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!((mu.integrate(&re) - z.re).abs() < 1e-7);
        prop_assert!((mu.integrate(&im) - z.im).abs() < 1e-7);
    }

    #[test]
    fn boundary_measures_are_jensen_measures(g in data(), k in 0usize..1000) {
        let s = disk();
        let interior = s.report.interior().indices();
        let node = interior[k % interior.len()];
        let fam = Arc::new(boundary_family(&s.grid, &s.cone, &s.report).unwrap());
        let mu = JensenPolytope::new(fam, node).minimize(&g).unwrap().measure;
        prop_assert!(mu.supported_in(&s.report.b_mask));
        prop_assert!(s.family.violation(node, &mu) < 1e-7);
    }
}
