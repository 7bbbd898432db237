//! Solver outputs compared against independent computations.

use std::f64::consts::{LN_2, TAU};
use std::sync::Arc;

use num_complex::Complex64;

use pluripot::cone::generate_cone;
use pluripot::disc::{pushforward, AnalyticDisc};
use pluripot::envelope::{edwards_envelope, perron_sweep_envelope, SweepParams};
use pluripot::grid::{build_fixture, ComplexPoint, Fixture, GridSet, NodeSubset};
use pluripot::gridfn::{DiscreteMeasure, GridFunction};
use pluripot::jensen::{subordination_ge, JensenFamily, JensenPolytope};
use pluripot::stencil::{build_stencils, StencilParams};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// Largest subharmonic function on the closed disc below the indicator of
// |z| > 1/2 is the harmonic measure of the outer circle in the annulus.
fn annulus_measure(r: f64) -> f64 {
    if r >= 1.0 - 1e-9 {
        1.0
    } else {
        ((2.0 * r).ln() / LN_2).max(0.0)
    }
}

#[test]
fn disk_envelope_matches_radial_perron_solution() {
    let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
    let cone = generate_cone(&g, 3, 64, 0).unwrap();
    let st = build_stencils(&g, &StencilParams::for_grid(&g));
    let phi = GridFunction::from_fn(&g, |p| if p.coord(0).norm() <= 0.5 + 1e-9 { 0.0 } else { 1.0 });
    let r = edwards_envelope(&g, &cone, &st, &phi, &SweepParams::default()).unwrap();
    let h = g.spacing();
    for (i, p) in g.points().iter().enumerate() {
        let exact = annulus_measure(p.coord(0).norm());
        assert!((r.lp_values.get(i) - exact).abs() < 1e-6, "lp at {i}");
        assert!((r.sweep_values.get(i) - exact).abs() <= h / 4.0, "sweep at {i}");
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

#[test]
fn lp_optimum_equals_best_polytope_vertex() {
    let pts = [c(0.6, 0.1), c(-0.5, 0.3), c(0.1, -0.7), c(-0.2, -0.4), c(0.3, 0.5), c(0.05, 0.02)];
    let points = pts.iter().map(|z| ComplexPoint::new(vec![*z]).unwrap()).collect();
    let g = GridSet::from_points(points, 0.25, None).unwrap();
    let cone = generate_cone(&g, 1, 6, 4).unwrap();
    let m = g.len();
    let z = 5;

    // Rows `a . mu >= b`: positivity, both directions of unit mass, then
    // the sub-mean inequality for every cone member.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        rows.push((e, 0.0));
    }
    rows.push((vec![1.0; m], 1.0));
    rows.push((vec![-1.0; m], -1.0));
    for k in 0..cone.len() {
        rows.push((cone.row(k).to_vec(), cone.value(k, z)));
    }

    let family = Arc::new(JensenFamily::new(&g, &cone, &NodeSubset::full(m)).unwrap());
    let poly = JensenPolytope::new(family, z);
    let objectives: Vec<Vec<f64>> = vec![
        g.points().iter().map(|p| p.coord(0).im).collect(),
        g.points().iter().map(|p| -p.norm_sqr()).collect(),
        vec![0.3, -1.2, 0.7, 2.0, -0.4, 1.1],
    ];
    for obj in objectives {
        let mut best = f64::INFINITY;
        for active in combinations(rows.len(), m) {
            let a = active.iter().map(|&r| rows[r].0.clone()).collect();
            let b = active.iter().map(|&r| rows[r].1).collect();
            let Some(x) = solve(a, b) else { continue };
            if rows
                .iter()
                .all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() >= b - 1e-9)
            {
                best = best.min(obj.iter().zip(&x).map(|(p, q)| p * q).sum());
            }
        }
        let lp = poly.minimize(&obj).unwrap().value;
        assert!((lp - best).abs() < 1e-8, "lp {lp} vertices {best}");
    }
}

/// Harmonic measure at `a` of the boundary arc closest to each node,
/// integrated with a fine midpoint rule independent of the disc sampler.
fn poisson_weights(g: &GridSet, a: Complex64, samples: usize) -> Vec<f64> {
    let mut w = vec![0.0; g.len()];
    for k in 0..samples {
        let t = TAU * (k as f64 + 0.5) / samples as f64;
        let e = Complex64::from_polar(1.0, t);
        let kernel = (1.0 - a.norm_sqr()) / (e - a).norm_sqr();
        let (i, _) = g.nearest(&ComplexPoint::new(vec![e]).unwrap());
        w[i] += kernel / samples as f64;
    }
    w
}

#[test]
fn mobius_pushforward_is_poisson_kernel() {
    let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
    let a = c(0.3, -0.2);
    let (coeffs, err) = AnalyticDisc::mobius_coefficients(a, 40);
    assert!(err < 1e-15);
    let f = AnalyticDisc::new(vec![coeffs]).unwrap();
    let n = 1 << 14;
    let mu = pushforward(&f, &g, n).unwrap();
    let exact = poisson_weights(&g, a, 1 << 20);
    let dense = mu.dense(g.len());
    for i in 0..g.len() {
        // Each arc boundary moves the sampled mass by at most one sample of
        // the kernel's largest value.
        let slack = 2.0 * (1.0 + a.norm()) / (1.0 - a.norm()) / n as f64;
        assert!((dense[i] - exact[i]).abs() <= slack + 1e-6, "node {i}: {} vs {}", dense[i], exact[i]);
    }
    assert!((mu.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn disc_pushforward_dominates_its_center() {
    let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
    let cone = generate_cone(&g, 3, 64, 0).unwrap();
    let center = g.find_node(&[c(0.25, 0.0)]).unwrap();
    let (coeffs, _) = AnalyticDisc::mobius_coefficients(c(0.25, 0.0), 40);
    let f = AnalyticDisc::new(vec![coeffs]).unwrap();
    let mu = pushforward(&f, &g, 4096).unwrap();
    assert_eq!(mu.barycenter, center);
    // Snapping moves each sample by at most h, which shifts the first
    // moments by a few 1e-4 on this circle.
    let s = subordination_ge(&mu, &DiscreteMeasure::dirac(center), &cone, 2e-3);
    assert!(s.holds, "member {:?} gap {}", s.worst_member, s.worst_gap);
    // Frozen from the reference run: the tightest member is Re z.
    assert_eq!(s.worst_member, Some(0));
    assert!((s.worst_gap + 7.441e-4).abs() < 1e-6, "worst gap {}", s.worst_gap);
}

#[test]
fn pluriharmonic_data_on_the_segment_factor_is_a_sweep_fixed_point() {
    let g = build_fixture(Fixture::DiskXSegment, 0.25).unwrap();
    let st = build_stencils(&g, &StencilParams::for_grid(&g));
    let phi = GridFunction::from_fn(&g, |p| 1.0 - p.coord(1).re.powi(2));
    let r = perron_sweep_envelope(&g, &st, &phi, 20_000, 1e-12).unwrap();
    assert!(r.converged);
    assert!(r.values.sup_distance(&phi) < 1e-12);
}
