//! Finite families of plurisubharmonic test functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexPoint, GridSet};

/// Stand-in for `-inf` in logarithmic members and grid functions.
pub const LOG_FLOOR: f64 = -1e6;

/// Holomorphic polynomial on C^n as a list of monomial terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Complex64,
    pub exponents: Vec<u32>,
}

impl Polynomial {
    pub fn monomial(coeff: Complex64, exponents: Vec<u32>) -> Self {
        Self {
            terms: vec![Term { coeff, exponents }],
        }
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .zip(z)
                    .fold(t.coeff, |acc, (&e, &zj)| acc * zj.powu(e))
            })
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exponents.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn negated(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: -t.coeff,
                    exponents: t.exponents.clone(),
                })
                .collect(),
        }
    }
}

/// One member of the test cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `Re p(z)`, pluriharmonic.
    RePoly { poly: Polynomial },
    /// `max(log(|p(z)| + delta), floor)`.
    LogAbsPoly {
        poly: Polynomial,
        delta: f64,
        floor: f64,
    },
    /// `|z|^2`.
    SqNorm,
    /// `Re p(z) + k |z|^2` with `k >= 0`.
    AffineCombo { poly: Polynomial, k: f64 },
}

impl TestFunction {
    pub fn eval(&self, z: &[Complex64]) -> f64 {
        match self {
            TestFunction::RePoly { poly } => poly.eval(z).re,
            TestFunction::LogAbsPoly { poly, delta, floor } => {
                let v = (poly.eval(z).norm() + delta).ln();
                if v.is_nan() || v < *floor {
                    *floor
                } else {
                    v
                }
            }
            TestFunction::SqNorm => z.iter().map(|w| w.norm_sqr()).sum(),
            TestFunction::AffineCombo { poly, k } => {
                poly.eval(z).re + k * z.iter().map(|w| w.norm_sqr()).sum::<f64>()
            }
        }
    }

    pub fn eval_point(&self, p: &ComplexPoint) -> f64 {
        self.eval(p.coords())
    }

    /// Floor value for logarithmic members.
    pub fn floor(&self) -> Option<f64> {
        match self {
            TestFunction::LogAbsPoly { floor, .. } => Some(*floor),
            _ => None,
        }
    }

    pub fn is_pluriharmonic(&self) -> bool {
        matches!(self, TestFunction::RePoly { .. })
    }
}

/// Exponent vectors of total degree `d` in `n` variables, first exponent
/// descending.
pub fn exponents_of_degree(n: usize, d: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![d]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in exponents_of_degree(n - 1, d - first) {
            let mut e = vec![first];
            e.append(&mut rest);
            out.push(e);
        }
    }
    out
}

/// Serializable description of a cone; values are recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub dim: usize,
    pub degree_cap: u32,
    pub count: usize,
    pub seed: u64,
    pub functions: Vec<TestFunction>,
}

/// Test functions together with their values on a grid.
#[derive(Clone, Debug)]
pub struct TestCone {
    spec: ConeSpec,
    nodes: usize,
    /// Row-major `[function x node]`.
    values: Vec<f64>,
}

impl TestCone {
    pub fn from_spec(grid: &GridSet, spec: ConeSpec) -> Result<Self> {
        if spec.dim != grid.dim() {
            return Err(Error::Config(format!(
                "cone built for C^{} applied to a grid in C^{}",
                spec.dim,
                grid.dim()
            )));
        }
        let nodes = grid.len();
        let mut values = Vec::with_capacity(spec.functions.len() * nodes);
        for f in &spec.functions {
            values.extend(grid.points().iter().map(|p| f.eval_point(p)));
        }
        Ok(Self {
            spec,
            nodes,
            values,
        })
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.spec.functions
    }

    pub fn len(&self) -> usize {
        self.spec.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.functions.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn degree_cap(&self) -> u32 {
        self.spec.degree_cap
    }

    pub fn seed(&self) -> u64 {
        self.spec.seed
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn value(&self, k: usize, node: usize) -> f64 {
        self.values[k * self.nodes + node]
    }

    /// Appends members; used to study monotonicity under cone enlargement.
    pub fn extended(&self, grid: &GridSet, extra: Vec<TestFunction>) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.functions.extend(extra);
        Self::from_spec(grid, spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.spec)?)
    }

    /// Monomials whose real and imaginary parts both enter with both signs;
    /// their moments are pinned for every Jensen measure.
    pub fn pinned_monomials(&self) -> Vec<Vec<u32>> {
        let single = |f: &TestFunction| match f {
            TestFunction::RePoly { poly } if poly.terms.len() == 1 => {
                Some((poly.terms[0].coeff, poly.terms[0].exponents.clone()))
            }
            _ => None,
        };
        let members: Vec<(Complex64, Vec<u32>)> = self.functions().iter().filter_map(single).collect();
        let has = |c: Complex64, e: &Vec<u32>| members.iter().any(|(c2, e2)| *c2 == c && e2 == e);
        let mut out: Vec<Vec<u32>> = Vec::new();
        for (_, e) in &members {
            if out.contains(e) {
                continue;
            }
            let one = Complex64::new(1.0, 0.0);
            let i = Complex64::new(0.0, 1.0);
            if has(one, e) && has(-one, e) && has(i, e) && has(-i, e) {
                out.push(e.clone());
            }
        }
        out
    }
}

/// Uniform sample from the closed unit disk.
fn unit_disk_sample(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        if z.norm_sqr() <= 1.0 {
            return z;
        }
    }
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, degree_cap: u32) -> Polynomial {
    let scale = 2.0 / degree_cap as f64;
    let mut terms = Vec::new();
    for d in 0..=degree_cap {
        for exponents in exponents_of_degree(n, d) {
            terms.push(Term {
                coeff: unit_disk_sample(rng) * scale,
                exponents,
            });
        }
    }
    Polynomial { terms }
}

/// Number of members `generate_cone` emits before the random ones.
pub fn mandatory_count(n: usize, degree_cap: u32) -> usize {
    let monomials: usize = (1..=degree_cap).map(|d| exponents_of_degree(n, d).len()).sum();
    4 * monomials + 1 + n
}

/// Builds the cone: `+-Re`, `+-Im` of every monomial of degree
/// `1..=degree_cap`, then `|z|^2`, then `log|z_j|` for each coordinate, then
/// `count` seeded random members alternating between `Re p + k|z|^2` and
/// `log(|p| + delta)` with `delta` uniform in `[2h, 4h]`.
pub fn generate_cone(grid: &GridSet, degree_cap: u32, count: usize, seed: u64) -> Result<TestCone> {
    let n = grid.dim();
    if degree_cap < 1 {
        return Err(Error::DegreeCapTooSmall);
    }
    if count < 4 * n + 1 {
        return Err(Error::ConeCountTooSmall {
            count,
            required: 4 * n + 1,
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut functions = Vec::new();
    for d in 1..=degree_cap {
        for e in exponents_of_degree(n, d) {
            // Re(-i w) = Im w.
            for c in [one, -one, -i, i] {
                functions.push(TestFunction::RePoly {
                    poly: Polynomial::monomial(c, e.clone()),
                });
            }
        }
    }
    functions.push(TestFunction::SqNorm);
    for j in 0..n {
        let mut e = vec![0; n];
        e[j] = 1;
        functions.push(TestFunction::LogAbsPoly {
            poly: Polynomial::monomial(one, e),
            delta: 0.0,
            floor: LOG_FLOOR,
        });
    }
    let h = grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in 0..count {
        let poly = random_poly(&mut rng, n, degree_cap);
        if r % 2 == 0 {
            let k = rng.gen_range(0.0..=1.0);
            functions.push(TestFunction::AffineCombo { poly, k });
        } else {
            let delta = rng.gen_range(2.0 * h..=4.0 * h);
            functions.push(TestFunction::LogAbsPoly {
                poly,
                delta,
                floor: LOG_FLOOR,
            });
        }
    }
    let spec = ConeSpec {
        dim: n,
        degree_cap,
        count,
        seed,
        functions,
    };
    TestCone::from_spec(grid, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_fixture, Fixture};

    #[test]
    fn exponent_order() {
        assert_eq!(exponents_of_degree(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(exponents_of_degree(1, 3), vec![vec![3]]);
    }

    #[test]
    fn disk_cone_starts_with_linear_members_and_sqnorm() {
        let g = build_fixture(Fixture::Disk1d, 0.25).unwrap();
        let cone = generate_cone(&g, 1, 5, 0).unwrap();
        let z = [Complex64::new(0.3, -0.7)];
        let vals: Vec<f64> = cone.functions()[..5].iter().map(|f| f.eval(&z)).collect();
        assert_eq!(vals, vec![0.3, -0.3, -0.7, 0.7, 0.3 * 0.3 + 0.7 * 0.7]);
        assert_eq!(cone.len(), mandatory_count(1, 1) + 5);
    }

    #[test]
    fn sqnorm_values_on_bidisk() {
        let g = build_fixture(Fixture::Bidisk, 0.25).unwrap();
        let cone = generate_cone(&g, 2, 32, 7).unwrap();
        assert_eq!(cone.len(), mandatory_count(2, 2) + 32);
        let k = cone
            .functions()
            .iter()
            .position(|f| *f == TestFunction::SqNorm)
            .unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(cone.value(k, g.find_node(&[zero, zero]).unwrap()), 0.0);
        assert!((cone.value(k, g.find_node(&[one, one]).unwrap()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let g = build_fixture(Fixture::Bidisk, 0.5).unwrap();
        let a = generate_cone(&g, 2, 32, 7).unwrap();
        let b = generate_cone(&g, 2, 32, 7).unwrap();
        let c = generate_cone(&g, 2, 32, 8).unwrap();
        assert_eq!(a.spec(), b.spec());
        assert_ne!(a.spec(), c.spec());
        let round: ConeSpec = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(&round, a.spec());
    }

    #[test]
    fn count_and_degree_are_validated() {
        let g = build_fixture(Fixture::Bidisk, 0.5).unwrap();
        assert!(matches!(
            generate_cone(&g, 2, 8, 0),
            Err(Error::ConeCountTooSmall { count: 8, required: 9 })
        ));
        assert!(matches!(generate_cone(&g, 0, 16, 0), Err(Error::DegreeCapTooSmall)));
    }

    #[test]
    fn log_members_clamp_at_floor() {
        let f = TestFunction::LogAbsPoly {
            poly: Polynomial::monomial(Complex64::new(1.0, 0.0), vec![1]),
            delta: 0.0,
            floor: LOG_FLOOR,
        };
        assert_eq!(f.eval(&[Complex64::new(0.0, 0.0)]), LOG_FLOOR);
        assert!((f.eval(&[Complex64::new(0.5, 0.0)]) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pinned_monomials_cover_the_mandatory_block() {
        let g = build_fixture(Fixture::Bidisk, 0.5).unwrap();
        let cone = generate_cone(&g, 3, 16, 1).unwrap();
        assert_eq!(cone.pinned_monomials().len(), 2 + 3 + 4);
    }
}
