//! Polynomial analytic discs, their boundary push-forward measures and
//! Monte-Carlo checks of the sub-mean and subordination properties.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cone::TestCone;
use crate::error::{Error, Result};
use crate::grid::{ComplexPoint, GridSet, NodeSubset};
use crate::gridfn::{DiscreteMeasure, GridFunction};

/// Default number of boundary samples.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Radii of the interior circles sampled when checking that a disc lies
/// near the grid.
const INTERIOR_RADII: [f64; 3] = [0.25, 0.5, 0.75];

/// Polynomial map of the unit disc into `C^n`, one coefficient list per
/// output coordinate (constant term first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDisc {
    pub coefficients: Vec<Vec<Complex64>>,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
}

impl AnalyticDisc {
    pub fn new(coefficients: Vec<Vec<Complex64>>) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() > 2 {
            return Err(Error::Config(format!(
                "disc needs 1 or 2 coordinates, got {}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| c.is_empty()) {
            return Err(Error::Config("disc coordinate without coefficients".into()));
        }
        if coefficients.iter().flatten().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Config("non-finite disc coefficient".into()));
        }
        Ok(Self { coefficients })
    }

    /// `f(zeta) = z` for every `zeta`.
    pub fn constant(z: &[Complex64]) -> Result<Self> {
        Self::new(z.iter().map(|a| vec![*a]).collect())
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.iter().map(|c| c.len() - 1).max().unwrap_or(0)
    }

    pub fn eval(&self, zeta: Complex64) -> Vec<Complex64> {
        self.coefficients.iter().map(|c| horner(c, zeta)).collect()
    }

    pub fn center(&self) -> Vec<Complex64> {
        self.coefficients.iter().map(|c| c[0]).collect()
    }

    /// Bound on the Lipschitz constant of `theta -> f(e^{i theta})`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| {
                let s: f64 = c.iter().enumerate().map(|(k, a)| k as f64 * a.norm()).sum();
                s * s
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Taylor truncation of the Mobius map `(zeta + a) / (1 + conj(a) zeta)`
    /// to `degree`, with the sup-norm truncation error on the circle.
    pub fn mobius_coefficients(a: Complex64, degree: usize) -> (Vec<Complex64>, f64) {
        let r = a.norm();
        let scale = 1.0 - r * r;
        let mut c = vec![a];
        let mut pow = Complex64::new(1.0, 0.0);
        for _ in 1..=degree {
            c.push(pow * scale);
            pow *= -a.conj();
        }
        let err = if r < 1.0 { scale * r.powi(degree as i32) / (1.0 - r) } else { f64::INFINITY };
        (c, err)
    }
}

/// Equispaced samples `f(e^{i theta_k})`, `theta_k = 2 pi k / N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample {
    pub angles: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
    pub n: usize,
}

pub fn check_sample_count(n: usize) -> Result<()> {
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::SampleCount(n));
    }
    Ok(())
}

fn circle(n: usize) -> impl Iterator<Item = (f64, Complex64)> {
    (0..n).map(move |k| {
        let t = TAU * k as f64 / n as f64;
        (t, Complex64::from_polar(1.0, t))
    })
}

impl BoundarySample {
    pub fn new(f: &AnalyticDisc, n: usize) -> Result<Self> {
        Self::of_map(|z| f.eval(z), n)
    }

    fn of_map(f: impl Fn(Complex64) -> Vec<Complex64>, n: usize) -> Result<Self> {
        check_sample_count(n)?;
        let (angles, values) = circle(n).map(|(t, z)| (t, f(z))).unzip();
        Ok(Self { angles, values, n })
    }
}

/// Snaps each boundary value to its nearest node, failing when some value
/// (or a point of the disc itself) is farther than the grid spacing.
fn snap(grid: &GridSet, f: &dyn Fn(Complex64) -> Vec<Complex64>, n: usize) -> Result<DiscreteMeasure> {
    let sample = BoundarySample::of_map(f, n)?;
    let allowed = grid.spacing();
    let locate = |z: Vec<Complex64>| -> Result<usize> {
        if z.len() != grid.dim() {
            return Err(Error::Config(format!(
                "disc maps into C^{} but the grid lives in C^{}",
                z.len(),
                grid.dim()
            )));
        }
        let (i, d) = grid.nearest(&ComplexPoint::new(z)?);
        if d > allowed + 1e-12 {
            return Err(Error::DiscOutsideSet { distance: d, allowed });
        }
        Ok(i)
    };
    let center = locate(f(Complex64::new(0.0, 0.0)))?;
    for r in INTERIOR_RADII {
        for (_, z) in circle(64) {
            locate(f(z * r))?;
        }
    }
    let w = 1.0 / n as f64;
    let nodes = sample
        .values
        .into_iter()
        .map(|z| locate(z).map(|i| (i, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteMeasure::from_weights(center, nodes))
}

/// Boundary push-forward `mu_f`: mass `1/N` at the node nearest to each
/// sample. The barycenter field is the node nearest to `f(0)`.
pub fn pushforward(f: &AnalyticDisc, grid: &GridSet, n: usize) -> Result<DiscreteMeasure> {
    snap(grid, &|z| f.eval(z), n)
}

/// Euclidean distance from `f(0)` to the first moment of `mu`.
pub fn barycenter_error(f: &AnalyticDisc, grid: &GridSet, mu: &DiscreteMeasure) -> f64 {
    let mut m = vec![Complex64::new(0.0, 0.0); grid.dim()];
    for &(i, w) in &mu.weights {
        for (a, b) in m.iter_mut().zip(grid.point(i).coords()) {
            *a += b * w;
        }
    }
    m.iter().zip(f.center()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenCheck {
    pub passed: bool,
    /// Member with the largest `u(f(0)) - mu_f(u) - tol`.
    pub worst_member: Option<usize>,
    pub worst_excess: f64,
    pub checked: usize,
    /// Members skipped because `mu_f` charges a node where they sit at the
    /// floor.
    pub skipped: usize,
}

/// `5 / sqrt(N) + 2 h Lip(u)`.
pub fn default_disc_tol(grid: &GridSet, u: &GridFunction, n: usize) -> f64 {
    5.0 / (n as f64).sqrt() + 2.0 * grid.spacing() * u.lipschitz_estimate(grid)
}

/// Sub-mean property `u(f(0)) <= mu_f(u) + tol` for every cone member, with
/// `u(f(0))` evaluated exactly. A `None` tolerance uses
/// [`default_disc_tol`] per member.
pub fn jensen_check(
    f: &AnalyticDisc,
    grid: &GridSet,
    cone: &TestCone,
    n: usize,
    tol: Option<f64>,
) -> Result<JensenCheck> {
    let mu = pushforward(f, grid, n)?;
    let center = f.center();
    let mut out = JensenCheck {
        passed: true,
        worst_member: None,
        worst_excess: f64::NEG_INFINITY,
        checked: 0,
        skipped: 0,
    };
    for (k, member) in cone.functions().iter().enumerate() {
        let row = cone.row(k);
        let floor = member.floor();
        if floor.is_some_and(|fl| mu.weights.iter().any(|(i, _)| row[*i] <= fl)) {
            out.skipped += 1;
            continue;
        }
        let lhs = member.eval(&center);
        if floor.is_some_and(|fl| lhs <= fl) {
            out.checked += 1;
            continue;
        }
        let t = match tol {
            Some(t) => t,
            None => default_disc_tol(grid, &GridFunction::new(row.to_vec()), n),
        };
        let excess = lhs - mu.integrate(row) - t;
        out.checked += 1;
        if excess > out.worst_excess {
            out.worst_excess = excess;
            out.worst_member = Some(k);
        }
    }
    out.passed = out.worst_excess <= 0.0;
    Ok(out)
}

/// Holomorphic self-map of the disc fixing the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelfMap {
    /// Coefficients, constant term first.
    Polynomial { coefficients: Vec<Complex64> },
    /// `e^{i rotation} prod (zeta - a) / (1 - conj(a) zeta)`.
    Blaschke { zeros: Vec<Complex64>, rotation: f64 },
}

impl SelfMap {
    pub fn identity() -> Self {
        SelfMap::Polynomial {
            coefficients: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            SelfMap::Polynomial { coefficients } => horner(coefficients, z),
            SelfMap::Blaschke { zeros, rotation } => zeros
                .iter()
                .fold(Complex64::from_polar(1.0, *rotation), |acc, a| acc * (z - a) / (1.0 - a.conj() * z)),
        }
    }

    /// Checks `g(0) = 0` and `sup |g| <= 1` on `n` boundary samples.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let SelfMap::Blaschke { zeros, .. } = self {
            if let Some(a) = zeros.iter().find(|a| a.norm() >= 1.0) {
                return Err(Error::SelfMapTooLarge(a.norm()));
            }
        }
        let g0 = self.eval(Complex64::new(0.0, 0.0)).norm();
        if g0 > 1e-12 {
            return Err(Error::SelfMapMovesOrigin(g0));
        }
        let sup = circle(n).map(|(_, z)| self.eval(z).norm()).fold(0.0, f64::max);
        if sup > 1.0 + 1e-9 {
            return Err(Error::SelfMapTooLarge(sup));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodCheck {
    pub mu_f: f64,
    pub mu_fg: f64,
    /// `5 osc(u) / sqrt(N)`.
    pub tol: f64,
    /// `mu_{f o g}(u) <= mu_f(u) + tol`.
    pub holds: bool,
}

/// Compares `mu_f(u)` with `mu_{f o g}(u)`; subordination says the second
/// never exceeds the first for psh `u`.
pub fn littlewood_check(f: &AnalyticDisc, g: &SelfMap, grid: &GridSet, u: &GridFunction, n: usize) -> Result<LittlewoodCheck> {
    u.check_len(grid)?;
    g.validate(n)?;
    let mu_f = pushforward(f, grid, n)?.integrate(u.values());
    let mu_fg = snap(grid, &|z| f.eval(g.eval(z)), n)?.integrate(u.values());
    let tol = 5.0 * u.oscillation() / (n as f64).sqrt();
    Ok(LittlewoodCheck {
        mu_f,
        mu_fg,
        tol,
        holds: mu_fg <= mu_f + tol,
    })
}

/// Random polynomial disc into the closed unit polydisc of `C^n`: each
/// coordinate has random coefficients with `sum |a_k| <= radius`.
pub fn random_polydisc_disc<R: Rng>(rng: &mut R, n: usize, degree: usize, radius: f64) -> AnalyticDisc {
    let coefficients = (0..n)
        .map(|_| {
            let raw: Vec<Complex64> = (0..=degree)
                .map(|_| Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..TAU)))
                .collect();
            let total: f64 = raw.iter().map(|a| a.norm()).sum::<f64>().max(1e-12);
            let s = radius * rng.gen_range(0.5..1.0) / total;
            raw.into_iter().map(|a| a * s).collect()
        })
        .collect();
    AnalyticDisc { coefficients }
}

/// Random self-map fixing the origin: a Blaschke product with a zero at the
/// origin, a polynomial `zeta^k`, or a contraction `c zeta` with `|c| <= 1`.
pub fn random_self_map<R: Rng>(rng: &mut R) -> SelfMap {
    match rng.gen_range(0..3) {
        0 => {
            let extra = rng.gen_range(0..3);
            let mut zeros = vec![Complex64::new(0.0, 0.0)];
            zeros.extend((0..extra).map(|_| Complex64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..TAU))));
            SelfMap::Blaschke {
                zeros,
                rotation: rng.gen_range(0.0..TAU),
            }
        }
        1 => {
            let k = rng.gen_range(1..4);
            let mut coefficients = vec![Complex64::new(0.0, 0.0); k + 1];
            coefficients[k] = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
            SelfMap::Polynomial { coefficients }
        }
        _ => SelfMap::Polynomial {
            coefficients: vec![
                Complex64::new(0.0, 0.0),
                Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..TAU)),
            ],
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEstimate {
    /// Nodes whose frequency floor is positive.
    pub nodes: NodeSubset,
    /// Per node, the smallest fraction over the family of boundary samples
    /// within `cell` of it.
    pub floor: Vec<f64>,
    pub cell: f64,
}

/// Empirical proxy for points charged by every disc of a finite family.
/// This is a heuristic on finite data, not a limit statement.
pub fn cluster_estimate(discs: &[AnalyticDisc], grid: &GridSet, cell: f64, n: usize) -> Result<ClusterEstimate> {
    if discs.len() < 2 {
        return Err(Error::Config("cluster estimate needs at least two discs".into()));
    }
    check_sample_count(n)?;
    let mut floor = vec![f64::INFINITY; grid.len()];
    for f in discs {
        let mut hits = vec![0usize; grid.len()];
        for (_, z) in circle(n) {
            let p = ComplexPoint::new(f.eval(z))?;
            for i in grid.within(&p, cell) {
                hits[i] += 1;
            }
        }
        for (fl, h) in floor.iter_mut().zip(hits) {
            *fl = fl.min(h as f64 / n as f64);
        }
    }
    Ok(ClusterEstimate {
        nodes: NodeSubset::from_bits(floor.iter().map(|f| *f > 0.0).collect()),
        floor,
        cell,
    })
}

/// One row of a disc batch report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscCheckRow {
    pub disc: usize,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: bool,
}

/// Writes `disc, check, lhs, rhs, verdict`.
pub fn write_disc_checks_csv<W: Write>(rows: &[DiscCheckRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["disc", "check", "lhs", "rhs", "verdict"])?;
    for r in rows {
        w.write_record([
            r.disc.to_string(),
            r.check.clone(),
            format!("{}", r.lhs),
            format!("{}", r.rhs),
            u8::from(r.verdict).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_fixture, Fixture, ANALYTIC_BOUNDARY};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_disc_is_a_dirac_mass() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let f = AnalyticDisc::constant(&[c(0.26, 0.01)]).unwrap();
        let mu = pushforward(&f, &g, 256).unwrap();
        assert_eq!(mu.weights.len(), 1);
        assert_eq!(mu.weights[0].0, mu.barycenter);
    }

    #[test]
    fn coordinate_disc_charges_only_the_circle() {
        let g = build_fixture(Fixture::TwoDisks, 0.25).unwrap();
        let f = AnalyticDisc::new(vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0)]]).unwrap();
        let mu = pushforward(&f, &g, 4096).unwrap();
        let circle = g.tagged(ANALYTIC_BOUNDARY);
        assert!(mu.supported_in(&circle));
        assert!(barycenter_error(&f, &g, &mu) <= TAU * f.lipschitz_bound() / 4096.0 + g.spacing());
    }

    #[test]
    fn mobius_truncation_error_bound_holds() {
        let a = c(0.5, 0.0);
        let (coeffs, err) = AnalyticDisc::mobius_coefficients(a, 12);
        let worst = circle(1024)
            .map(|(_, z)| (horner(&coeffs, z) - (z + a) / (1.0 + a.conj() * z)).norm())
            .fold(0.0, f64::max);
        assert!(worst <= err + 1e-15);
        assert!(err < 1e-3);
    }

    #[test]
    fn discs_leaving_the_set_are_rejected() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let f = AnalyticDisc::new(vec![vec![c(0.0, 0.0), c(2.0, 0.0)]]).unwrap();
        assert!(matches!(pushforward(&f, &g, 256), Err(Error::DiscOutsideSet { .. })));
        assert!(matches!(pushforward(&f, &g, 300), Err(Error::SampleCount(300))));
    }

    #[test]
    fn self_map_validation() {
        let moves = SelfMap::Polynomial {
            coefficients: vec![c(0.1, 0.0), c(0.5, 0.0)],
        };
        assert!(matches!(moves.validate(256), Err(Error::SelfMapMovesOrigin(_))));
        let big = SelfMap::Polynomial {
            coefficients: vec![c(0.0, 0.0), c(1.5, 0.0)],
        };
        assert!(matches!(big.validate(256), Err(Error::SelfMapTooLarge(_))));
        let b = SelfMap::Blaschke {
            zeros: vec![c(0.0, 0.0), c(0.3, 0.4)],
            rotation: 1.0,
        };
        b.validate(1024).unwrap();
    }

    #[test]
    fn squaring_preserves_the_boundary_measure() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let f = AnalyticDisc::new(vec![vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        let sq = SelfMap::Polynomial {
            coefficients: vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        };
        let u = GridFunction::from_fn(&g, |p| p.coord(0).re.powi(3) + p.coord(0).im);
        let r = littlewood_check(&f, &sq, &g, &u, 4096).unwrap();
        assert!((r.mu_f - r.mu_fg).abs() <= r.tol);
        assert!(r.holds);
    }
}
