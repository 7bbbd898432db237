//! Finite discretizations of compact sets in C^1 and C^2.
//!
//! Disks are meshed with polar grids: ring `k` of `M` rings has radius
//! `k/M` and `6k` equispaced nodes starting at angle zero, so every
//! boundary circle is node-exact and node spacing stays close to the
//! requested resolution in both the radial and angular directions.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag carried by nodes lying on the analytically known potential boundary
/// of a fixture (unit circles, the torus, the cylinder side).
pub const ANALYTIC_BOUNDARY: &str = "analytic-boundary";

/// Neighbor radius in units of the grid spacing.
pub const NEIGHBOR_FACTOR: f64 = 1.5;

/// A point of C^n with n in {1, 2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    coords: Vec<Complex64>,
}

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > 2 {
            return Err(Error::InvalidPointSet(format!(
                "complex dimension {} not supported",
                coords.len()
            )));
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidPointSet("non-finite coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_slice(coords: &[Complex64]) -> Self {
        Self {
            coords: coords.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> Complex64 {
        self.coords[j]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn dist_sqr(&self, other: &ComplexPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }

    pub fn dist(&self, other: &ComplexPoint) -> f64 {
        self.dist_sqr(other).sqrt()
    }

    /// Real coordinates (re_1, im_1, ..., re_n, im_n).
    pub fn real_coords(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub component: u32,
    pub tags: Vec<String>,
}

impl NodeLabel {
    fn new(component: u32) -> Self {
        Self {
            component,
            tags: Vec::new(),
        }
    }

    fn tagged(component: u32, tag: &str) -> Self {
        Self {
            component,
            tags: vec![tag.to_string()],
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }
}

/// Bitmask over the nodes of a [`GridSet`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeSubset {
    bits: Vec<bool>,
}

impl NodeSubset {
    pub fn empty(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn full(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in indices {
            s.bits[i] = true;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.bits[i] = true;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    /// Number of positions where the two masks differ.
    pub fn symmetric_difference_count(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

/// Uniform bucket grid for radius queries in R^{2n}.
#[derive(Clone, Debug)]
struct NodeLocator {
    cell: f64,
    buckets: HashMap<[i64; 4], Vec<usize>>,
}

impl NodeLocator {
    fn new(points: &[ComplexPoint], cell: f64) -> Self {
        let mut buckets: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: &ComplexPoint, cell: f64) -> [i64; 4] {
        let mut k = [0i64; 4];
        for (slot, x) in k.iter_mut().zip(p.real_coords()) {
            *slot = (x / cell).floor() as i64;
        }
        k
    }

    /// Indices of points within `radius` of `p`, ascending.
    fn within(&self, points: &[ComplexPoint], p: &ComplexPoint, radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64;
        let center = Self::key(p, self.cell);
        let active = 2 * p.dim();
        let r2 = radius * radius;
        let mut out = Vec::new();
        let span = 2 * reach + 1;
        let total = span.pow(active as u32);
        for code in 0..total {
            let mut key = center;
            let mut c = code;
            for slot in key.iter_mut().take(active) {
                *slot += c % span - reach;
                c /= span;
            }
            if let Some(ids) = self.buckets.get(&key) {
                for &i in ids {
                    if points[i].dist_sqr(p) <= r2 {
                        out.push(i);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn nearest(&self, points: &[ComplexPoint], p: &ComplexPoint) -> Option<(usize, f64)> {
        let mut radius = self.cell;
        for _ in 0..64 {
            let hits = self.within(points, p, radius);
            if let Some(best) = hits
                .iter()
                .map(|&i| (i, points[i].dist(p)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            {
                return Some(best);
            }
            radius *= 2.0;
        }
        None
    }
}

/// Finite point cloud standing in for a compact set X in C^n.
#[derive(Clone, Debug)]
pub struct GridSet {
    points: Vec<ComplexPoint>,
    spacing: f64,
    dim: usize,
    labels: Vec<NodeLabel>,
    fixture: Option<String>,
    locator: NodeLocator,
}

impl GridSet {
    /// Builds a grid from explicit nodes; rejects mixed dimensions and
    /// nodes closer than `spacing / 10`.
    pub fn from_points(
        points: Vec<ComplexPoint>,
        spacing: f64,
        labels: Option<Vec<NodeLabel>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidPointSet("no points".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidPointSet(format!("spacing {spacing} must be positive")));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidPointSet("mixed complex dimensions".into()));
        }
        let labels = labels.unwrap_or_else(|| vec![NodeLabel::default(); points.len()]);
        if labels.len() != points.len() {
            return Err(Error::InvalidPointSet("label count differs from point count".into()));
        }
        let locator = NodeLocator::new(&points, spacing);
        let min_sep = spacing / 10.0;
        for (i, p) in points.iter().enumerate() {
            if let Some(&j) = locator
                .within(&points, p, min_sep)
                .iter()
                .find(|&&j| j != i)
            {
                return Err(Error::DuplicateNode {
                    first: i.min(j),
                    second: i.max(j),
                });
            }
        }
        Ok(Self {
            points,
            spacing,
            dim,
            labels,
            fixture: None,
            locator,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[ComplexPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &ComplexPoint {
        &self.points[i]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn fixture(&self) -> Option<&str> {
        self.fixture.as_deref()
    }

    pub fn check_node(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    pub fn check_mask(&self, mask: &NodeSubset) -> Result<()> {
        if mask.len() == self.len() {
            Ok(())
        } else {
            Err(Error::MaskLength {
                expected: self.len(),
                found: mask.len(),
            })
        }
    }

    /// Nodes within `radius` of `p`, ascending by index.
    pub fn within(&self, p: &ComplexPoint, radius: f64) -> Vec<usize> {
        self.locator.within(&self.points, p, radius)
    }

    /// Neighbors of node `i` within `1.5 * spacing`, excluding `i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = self.within(&self.points[i], NEIGHBOR_FACTOR * self.spacing);
        out.retain(|&j| j != i);
        out
    }

    /// Nearest node and its distance; ties go to the lower index.
    pub fn nearest(&self, p: &ComplexPoint) -> (usize, f64) {
        self.locator
            .nearest(&self.points, p)
            .unwrap_or_else(|| {
                self.points
                    .iter()
                    .enumerate()
                    .map(|(i, q)| (i, q.dist(p)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("grid is nonempty")
            })
    }

    pub fn find_node(&self, coords: &[Complex64]) -> Option<usize> {
        let p = ComplexPoint::from_slice(coords);
        let (i, d) = self.nearest(&p);
        (d <= self.spacing / 10.0).then_some(i)
    }

    pub fn tagged(&self, tag: &str) -> NodeSubset {
        NodeSubset::from_bits(self.labels.iter().map(|l| l.has_tag(tag)).collect())
    }

    /// Writes `index, re1, im1[, re2, im2], component, tags`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        for j in 1..=self.dim {
            header.push(format!("re{j}"));
            header.push(format!("im{j}"));
        }
        header.push("component".into());
        header.push("tags".into());
        w.write_record(&header)?;
        for (i, (p, l)) in self.points.iter().zip(&self.labels).enumerate() {
            let mut rec = vec![i.to_string()];
            for x in p.real_coords() {
                rec.push(format!("{x}"));
            }
            rec.push(l.component.to_string());
            rec.push(l.tags.join(";"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The compact sets shipped as fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    /// Closed unit disk in C.
    Disk1d,
    /// Closed unit bidisk in C^2.
    Bidisk,
    /// `{(zeta, t) : |zeta| <= 1, t in [-1, 1]}` in C^2.
    DiskXSegment,
    /// Union of the coordinate disks `D x {0}` and `{0} x D` in C^2.
    TwoDisks,
}

impl Fixture {
    pub fn name(self) -> &'static str {
        match self {
            Fixture::Disk1d => "disk1d",
            Fixture::Bidisk => "bidisk",
            Fixture::DiskXSegment => "disk_x_segment",
            Fixture::TwoDisks => "two_disks",
        }
    }

    pub const ALL: [Fixture; 4] = [
        Fixture::Disk1d,
        Fixture::Bidisk,
        Fixture::DiskXSegment,
        Fixture::TwoDisks,
    ];
}

impl std::str::FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk1d" => Ok(Fixture::Disk1d),
            "bidisk" => Ok(Fixture::Bidisk),
            "disk_x_segment" => Ok(Fixture::DiskXSegment),
            "two_disks" => Ok(Fixture::TwoDisks),
            other => Err(Error::UnknownFixture(other.to_string())),
        }
    }
}

/// Polar nodes of the closed unit disk: origin first, then ring by ring.
/// The flag marks nodes on the unit circle.
fn polar_disk(resolution: f64) -> Vec<(Complex64, bool)> {
    let rings = (1.0 / resolution - 1e-9).ceil().max(1.0) as usize;
    let mut nodes = vec![(Complex64::new(0.0, 0.0), false)];
    for k in 1..=rings {
        let r = k as f64 / rings as f64;
        let count = 6 * k;
        for a in 0..count {
            let theta = 2.0 * PI * a as f64 / count as f64;
            nodes.push((Complex64::from_polar(r, theta), k == rings));
        }
    }
    nodes
}

fn segment(resolution: f64) -> Vec<f64> {
    let half = (1.0 / resolution - 1e-9).ceil().max(1.0) as i64;
    (-half..=half).map(|j| j as f64 / half as f64).collect()
}

/// Builds one of the fixture sets at the requested node spacing.
pub fn build_fixture(fixture: Fixture, resolution: f64) -> Result<GridSet> {
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::ResolutionOutOfRange(resolution));
    }
    let disk = polar_disk(resolution);
    let zero = Complex64::new(0.0, 0.0);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    match fixture {
        Fixture::Disk1d => {
            for &(z, edge) in &disk {
                points.push(ComplexPoint::from_slice(&[z]));
                labels.push(if edge {
                    NodeLabel::tagged(0, ANALYTIC_BOUNDARY)
                } else {
                    NodeLabel::new(0)
                });
            }
        }
        Fixture::Bidisk => {
            for &(z1, e1) in &disk {
                for &(z2, e2) in &disk {
                    points.push(ComplexPoint::from_slice(&[z1, z2]));
                    labels.push(if e1 && e2 {
                        NodeLabel::tagged(0, ANALYTIC_BOUNDARY)
                    } else {
                        NodeLabel::new(0)
                    });
                }
            }
        }
        Fixture::DiskXSegment => {
            for t in segment(resolution) {
                for &(z, edge) in &disk {
                    points.push(ComplexPoint::from_slice(&[z, Complex64::new(t, 0.0)]));
                    labels.push(if edge {
                        NodeLabel::tagged(0, ANALYTIC_BOUNDARY)
                    } else {
                        NodeLabel::new(0)
                    });
                }
            }
        }
        Fixture::TwoDisks => {
            // Shared origin first, then the first disk, then the second.
            points.push(ComplexPoint::from_slice(&[zero, zero]));
            labels.push(NodeLabel::tagged(0, "shared-origin"));
            for (component, embed) in [(1u32, 0usize), (2, 1)] {
                for &(z, edge) in disk.iter().skip(1) {
                    let coords = if embed == 0 { [z, zero] } else { [zero, z] };
                    points.push(ComplexPoint::from_slice(&coords));
                    labels.push(if edge {
                        NodeLabel::tagged(component, ANALYTIC_BOUNDARY)
                    } else {
                        NodeLabel::new(component)
                    });
                }
            }
        }
    }
    let mut grid = GridSet::from_points(points, resolution, Some(labels))?;
    grid.fixture = Some(fixture.name().to_string());
    Ok(grid)
}

/// Nodes of `X \ V` with a neighbor in `V`, together with nodes of `V` with a
/// neighbor outside `V` (neighbor radius `1.5 * spacing`).
pub fn relative_boundary(grid: &GridSet, v: &NodeSubset) -> Result<NodeSubset> {
    grid.check_mask(v)?;
    let mut out = NodeSubset::empty(grid.len());
    for i in 0..grid.len() {
        let inside = v.contains(i);
        if grid.neighbors(i).into_iter().any(|j| v.contains(j) != inside) {
            out.insert(i);
        }
    }
    Ok(out)
}

/// JSON set definition: a fixture name with resolution, or an explicit
/// point list with real coordinates `[re1, im1, re2, im2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetDefinition {
    Fixture {
        fixture: String,
        resolution: f64,
    },
    Points {
        points: Vec<Vec<f64>>,
        n: usize,
        spacing: f64,
    },
}

impl SetDefinition {
    pub fn build(&self) -> Result<GridSet> {
        match self {
            SetDefinition::Fixture {
                fixture,
                resolution,
            } => build_fixture(fixture.parse()?, *resolution),
            SetDefinition::Points { points, n, spacing } => {
                let pts = points
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        if row.len() != 2 * n {
                            return Err(Error::InvalidPointSet(format!(
                                "point {i} has {} reals, expected {}",
                                row.len(),
                                2 * n
                            )));
                        }
                        ComplexPoint::new(
                            row.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                GridSet::from_points(pts, *spacing, None)
            }
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
