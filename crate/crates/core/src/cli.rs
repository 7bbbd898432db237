//! Command-line driver: configuration, pipelines and artifact emission.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{compute_boundary, default_tol_peak, BoundaryReport};
use crate::cone::{generate_cone, TestCone};
use crate::dirichlet::dirichlet_extend;
use crate::disc::{
    check_sample_count, jensen_check, littlewood_check, random_polydisc_disc, random_self_map, write_disc_checks_csv,
    AnalyticDisc, DiscCheckRow, DEFAULT_SAMPLES,
};
use crate::envelope::{edwards_envelope, cusp, SweepParams};
use crate::error::{Error, Result};
use crate::grid::{Fixture, GridSet, SetDefinition};
use crate::gridfn::{write_measures_csv, GridFunction};
use crate::maximal::{certify_maximal, default_maximality_tol, maximal_solution, write_certificates_csv};
use crate::stencil::{build_stencils, is_discretely_psh, write_stencils_csv, StencilParams};
use crate::verdict::{harmonic_test, poisson_test, PoissonParams};

/// Version of the `report.json` layout.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "pluripot", version, about = "Jensen measures, psh envelopes and Dirichlet problems on finite sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak-point test at every node and the potential boundary.
    Boundary(Flags),
    /// Edwards envelope by LP and by stencil sweep.
    Envelope(Flags),
    /// Continuous psh extension of boundary data.
    Dirichlet(Flags),
    /// Boundary-measure minimum of the data at every node.
    MaximalSolution(Flags),
    /// Maximality certificates for a function against the boundary.
    Certify(Flags),
    /// Poisson verdict from boundary Jensen polytopes.
    Poisson(Flags),
    /// Harmonicity verdict for a function.
    Harmonic(Flags),
    /// Monte-Carlo sub-mean and subordination checks on random discs.
    DiscMc(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Boundary(_) => "boundary",
            Command::Envelope(_) => "envelope",
            Command::Dirichlet(_) => "dirichlet",
            Command::MaximalSolution(_) => "maximal-solution",
            Command::Certify(_) => "certify",
            Command::Poisson(_) => "poisson",
            Command::Harmonic(_) => "harmonic",
            Command::DiscMc(_) => "disc-mc",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Boundary(f)
            | Command::Envelope(f)
            | Command::Dirichlet(f)
            | Command::MaximalSolution(f)
            | Command::Certify(f)
            | Command::Poisson(f)
            | Command::Harmonic(f)
            | Command::DiscMc(f) => f,
        }
    }
}

/// Flags shared by every command. Each one overrides the same key of the
/// JSON file given by `--config`.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    /// JSON configuration file; flags win over its entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fixture: Option<String>,
    /// JSON point set `{"points": [[re1, im1, ...], ...], "n": 2, "spacing": h}`.
    #[arg(long)]
    pub set_file: Option<PathBuf>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub cone_degree: Option<u32>,
    #[arg(long)]
    pub cone_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stencil radii along coordinate axes, in multiples of the spacing.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub tol_peak: Option<f64>,
    #[arg(long)]
    pub tol_sweep: Option<f64>,
    #[arg(long)]
    pub tol_maximality: Option<f64>,
    #[arg(long)]
    pub tol_poisson: Option<f64>,
    #[arg(long)]
    pub tol_harmonic: Option<f64>,
    /// Data: const:<c>, re_z1, sqnorm_z1, abs2_z1_minus_1, one_minus_t2,
    /// paper-two-disk, indicator-smoothed, cusp:<node> or a CSV path.
    #[arg(long)]
    pub phi: Option<String>,
    /// Expected verdict: o-regular, duality, poisson, non-poisson,
    /// harmonic, not-harmonic, certified, not-certified, psh, disc-pass.
    #[arg(long)]
    pub expect: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Dirichlet rounds.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Random Poisson probes.
    #[arg(long)]
    pub probes: Option<usize>,
    /// Boundary samples per disc.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Number of random discs.
    #[arg(long)]
    pub discs: Option<usize>,
    /// JSON list of discs, each `{"coefficients": [[[re, im], ...], ...]}`.
    #[arg(long)]
    pub disc_file: Option<PathBuf>,
    /// Record wall-clock timings in the report (breaks byte identity).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Flags {
    /// Config file entries overridden by explicitly given flags.
    pub fn merged(&self) -> Result<Flags> {
        let mut base = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p)?;
                serde_json::from_str::<Flags>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Flags::default(),
        };
        overlay!(
            base, self, fixture, set_file, resolution, cone_degree, cone_count, seed, radii, tol_peak, tol_sweep,
            tol_maximality, tol_poisson, tol_harmonic, phi, expect, out, workers, rounds, probes, samples, discs,
            disc_file, timing
        );
        Ok(base)
    }
}

/// Fully resolved settings echoed into the report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub set: SetDefinition,
    pub cone_degree: u32,
    pub cone_count: usize,
    pub seed: u64,
    pub radii: Vec<f64>,
    pub tol_peak: Option<f64>,
    pub tol_sweep: f64,
    pub tol_maximality: Option<f64>,
    pub tol_poisson: Option<f64>,
    pub tol_harmonic: f64,
    pub phi: Option<String>,
    pub expect: Option<String>,
    /// Not echoed, so runs differing only in output directory match.
    #[serde(skip)]
    pub out: PathBuf,
    pub rounds: usize,
    pub probes: usize,
    pub samples: usize,
    pub discs: usize,
    pub disc_file: Option<PathBuf>,
    pub timing: bool,
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
        other => Ok(other),
    }
}

impl RunConfig {
    pub fn resolve(command: &str, f: &Flags) -> Result<Self> {
        let set = match (&f.fixture, &f.set_file) {
            (Some(_), Some(_)) => return Err(Error::Config("give either --fixture or --set-file".into())),
            (Some(name), None) => SetDefinition::Fixture {
                fixture: name.clone(),
                resolution: f.resolution.unwrap_or(0.25),
            },
            (None, Some(path)) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            (None, None) => return Err(Error::Config("no set given; use --fixture or --set-file".into())),
        };
        let radii = f.radii.clone().unwrap_or_else(|| vec![2.0, 3.0, 4.0, 6.0, 8.0]);
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("radii must be positive".into()));
        }
        let samples = f.samples.unwrap_or(DEFAULT_SAMPLES);
        check_sample_count(samples)?;
        Ok(Self {
            command: command.to_string(),
            set,
            cone_degree: f.cone_degree.unwrap_or(3),
            cone_count: f.cone_count.unwrap_or(64),
            seed: f.seed.unwrap_or(0),
            radii,
            tol_peak: positive("tol-peak", f.tol_peak)?,
            tol_sweep: positive("tol-sweep", f.tol_sweep)?.unwrap_or(1e-10),
            tol_maximality: positive("tol-maximality", f.tol_maximality)?,
            tol_poisson: positive("tol-poisson", f.tol_poisson)?,
            tol_harmonic: positive("tol-harmonic", f.tol_harmonic)?.unwrap_or(1e-6),
            phi: f.phi.clone(),
            expect: f.expect.clone(),
            out: f.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            rounds: f.rounds.unwrap_or(8),
            probes: f.probes.unwrap_or(16),
            samples,
            discs: f.discs.unwrap_or(100),
            disc_file: f.disc_file.clone(),
            timing: f.timing.unwrap_or(false),
        })
    }
}

/// Named data functions, or node values read from a CSV with columns
/// `node, value` (a header row is expected).
pub fn resolve_phi(spec: &str, grid: &GridSet) -> Result<GridFunction> {
    let h = grid.spacing();
    let last = grid.dim() - 1;
    let f = match spec {
        "re_z1" => GridFunction::from_fn(grid, |p| p.coord(0).re),
        "sqnorm_z1" => GridFunction::from_fn(grid, |p| p.coord(0).norm_sqr()),
        "abs2_z1_minus_1" => GridFunction::from_fn(grid, |p| p.coord(0).norm_sqr() - 1.0),
        "one_minus_t2" => GridFunction::from_fn(grid, |p| 1.0 - p.coord(last).re.powi(2)),
        "paper-two-disk" => {
            if grid.dim() != 2 {
                return Err(Error::Config("paper-two-disk needs a set in C^2".into()));
            }
            GridFunction::from_fn(grid, |p| {
                let on_first = p.coord(1).norm() < 1e-12 && p.coord(0).norm() > 1e-12;
                if on_first {
                    1.0
                } else {
                    0.0
                }
            })
        }
        "indicator-smoothed" => GridFunction::from_fn(grid, |p| (0.5 + p.coord(0).re / (4.0 * h)).clamp(0.0, 1.0)),
        s if s.starts_with("const:") => {
            let c: f64 = s[6..].parse().map_err(|_| Error::Config(format!("bad constant in `{s}`")))?;
            GridFunction::constant(grid.len(), c)
        }
        s if s.starts_with("cusp:") => {
            let w: usize = s[5..].parse().map_err(|_| Error::Config(format!("bad node in `{s}`")))?;
            grid.check_node(w)?;
            cusp(grid, w)
        }
        path => read_phi_csv(Path::new(path), grid)?,
    };
    Ok(f)
}

fn read_phi_csv(path: &Path, grid: &GridSet) -> Result<GridFunction> {
    if !path.exists() {
        return Err(Error::Config(format!("unknown data `{}` (not a registry id or file)", path.display())));
    }
    let mut values = vec![None; grid.len()];
    let mut r = csv::Reader::from_path(path)?;
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::Config(format!("{}: rows must be `node, value`", path.display()));
        let i: usize = rec.get(0).ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let v: f64 = rec.get(1).ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        grid.check_node(i)?;
        values[i] = Some(v);
    }
    let found = values.iter().filter(|v| v.is_some()).count();
    if found != grid.len() {
        return Err(Error::FunctionLength {
            expected: grid.len(),
            found,
        });
    }
    Ok(GridFunction::new(values.into_iter().map(|v| v.unwrap_or(0.0)).collect()))
}

/// Outcome of a run before it becomes an exit code.
pub struct Outcome {
    pub report: Value,
    pub expectation_met: Option<bool>,
}

struct Context {
    cfg: RunConfig,
    grid: GridSet,
    started: Instant,
    timings: Vec<(String, f64)>,
}

impl Context {
    fn cone(&mut self) -> Result<TestCone> {
        let t = Instant::now();
        let cone = generate_cone(&self.grid, self.cfg.cone_degree, self.cfg.cone_count, self.cfg.seed)?;
        self.lap("cone", t);
        Ok(cone)
    }

    fn boundary(&mut self, cone: &TestCone) -> Result<BoundaryReport> {
        let t = Instant::now();
        let tol = self.cfg.tol_peak.unwrap_or_else(|| default_tol_peak(&self.grid));
        let rep = compute_boundary(&self.grid, cone, tol)?;
        self.lap("boundary", t);
        Ok(rep)
    }

    fn stencils(&mut self) -> Vec<crate::stencil::DiscStencil> {
        let t = Instant::now();
        let mut p = StencilParams::for_grid(&self.grid);
        p.radii = self.cfg.radii.iter().map(|r| r * self.grid.spacing()).collect();
        let st = build_stencils(&self.grid, &p);
        self.lap("stencils", t);
        st
    }

    fn phi(&self) -> Result<GridFunction> {
        let spec = self
            .cfg
            .phi
            .as_deref()
            .ok_or_else(|| Error::Config(format!("`{}` needs --phi", self.cfg.command)))?;
        resolve_phi(spec, &self.grid)
    }

    fn sweep(&self) -> SweepParams {
        SweepParams {
            tol: self.cfg.tol_sweep,
            ..SweepParams::default()
        }
    }

    fn lap(&mut self, name: &str, t: Instant) {
        self.timings.push((name.to_string(), t.elapsed().as_secs_f64()));
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.cfg.out.join(name))?))
    }
}

fn boundary_summary(rep: &BoundaryReport) -> Value {
    json!({
        "peak_nodes": rep.o_mask.count(),
        "boundary_nodes": rep.b_mask.count(),
        "o_regular": rep.o_regular(),
        "tol_peak": rep.tol_peak,
    })
}

fn expectation(expect: Option<&str>, allowed: &[(&str, bool)]) -> Result<Option<bool>> {
    let Some(e) = expect else { return Ok(None) };
    allowed
        .iter()
        .find(|(name, _)| *name == e)
        .map(|(_, v)| Some(*v))
        .ok_or_else(|| {
            let names: Vec<&str> = allowed.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("--expect {e} is not available here (choose from {})", names.join(", ")))
        })
}

/// Runs one command and writes its artifacts.
pub fn run(command: &Command) -> Result<Outcome> {
    let flags = command.flags().merged()?;
    let cfg = RunConfig::resolve(command.name(), &flags)?;
    if let Some(k) = flags.workers {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    let grid = cfg.set.build()?;
    fs::create_dir_all(&cfg.out)?;
    grid.write_csv(BufWriter::new(File::create(cfg.out.join("nodes.csv"))?))?;
    let mut cx = Context {
        cfg,
        grid,
        started: Instant::now(),
        timings: Vec::new(),
    };
    let expect = cx.cfg.expect.clone();
    let expect = expect.as_deref();
    let (results, met) = match command {
        Command::Boundary(_) => {
            let cone = cx.cone()?;
            let rep = cx.boundary(&cone)?;
            rep.write_csv(cx.file("boundary.csv")?)?;
            let met = expectation(expect, &[("o-regular", rep.o_regular())])?;
            (json!({ "boundary": boundary_summary(&rep) }), met)
        }
        Command::Envelope(_) => {
            let phi = cx.phi()?;
            let cone = cx.cone()?;
            let st = cx.stencils();
            let t = Instant::now();
            let r = edwards_envelope(&cx.grid, &cone, &st, &phi, &cx.sweep())?;
            cx.lap("envelope", t);
            write_envelope_csv(&cx, &phi, r.lp_values.values(), r.sweep_values.values())?;
            write_measures_csv(&r.witnesses, cx.file("witnesses.csv")?)?;
            write_stencils_csv(&st, cx.file("stencils.csv")?)?;
            let osc = phi.oscillation();
            let ok = r.duality_gap <= 0.05 * osc + 1e-12;
            let met = expectation(expect, &[("duality", ok)])?;
            (
                json!({
                    "duality_gap": r.duality_gap,
                    "oscillation": osc,
                    "gap_bound": 0.05 * osc,
                    "sweep_iterations": r.iterations,
                    "sweep_converged": r.sweep_converged,
                    "lp_iterations": r.lp_iterations,
                    "stencils": st.len(),
                }),
                met,
            )
        }
        Command::Dirichlet(_) => {
            let phi = cx.phi()?;
            let cone = cx.cone()?;
            let rep = cx.boundary(&cone)?;
            let st = cx.stencils();
            let t = Instant::now();
            let r = dirichlet_extend(&cx.grid, &st, &rep, &phi, cx.cfg.rounds, &cx.sweep())?;
            cx.lap("dirichlet", t);
            r.values.write_csv(&cx.grid, cx.file("solution.csv")?, "u")?;
            let psh = is_discretely_psh(r.values.values(), &st, 1e-6);
            let met = expectation(expect, &[("psh", psh.psh)])?;
            (
                json!({
                    "boundary": boundary_summary(&rep),
                    "residuals": r.residuals,
                    "slack": r.slack,
                    "cover_sizes": r.cover_sizes,
                    "uncovered": r.uncovered,
                    "psh": psh.psh,
                    "psh_worst_violation": psh.worst_violation,
                }),
                met,
            )
        }
        Command::MaximalSolution(_) => {
            let phi = cx.phi()?;
            let cone = cx.cone()?;
            let rep = cx.boundary(&cone)?;
            let t = Instant::now();
            let sol = maximal_solution(&cx.grid, &cone, &rep, &phi)?;
            cx.lap("maximal_solution", t);
            sol.values.write_csv(&cx.grid, cx.file("solution.csv")?, "u")?;
            write_measures_csv(&sol.witnesses, cx.file("witnesses.csv")?)?;
            let tol = cx.cfg.tol_maximality.unwrap_or_else(|| default_maximality_tol(&cx.grid, &phi));
            let certs = certify_maximal(&cx.grid, &cone, &sol.values, &rep.b_mask, tol)?;
            write_certificates_csv(&certs, cx.file("certificates.csv")?)?;
            let certified = certs.iter().filter(|c| c.certified).count();
            let all = certified == certs.len();
            let met = expectation(expect, &[("certified", all), ("not-certified", !all)])?;
            (
                json!({
                    "boundary": boundary_summary(&rep),
                    "tol_maximality": tol,
                    "certified": certified,
                    "certificates": certs.len(),
                    "worst_gap": certs.iter().map(|c| c.gap).fold(0.0, f64::max),
                }),
                met,
            )
        }
        Command::Certify(_) => {
            let u = cx.phi()?;
            let cone = cx.cone()?;
            let rep = cx.boundary(&cone)?;
            let tol = cx.cfg.tol_maximality.unwrap_or_else(|| default_maximality_tol(&cx.grid, &u));
            let t = Instant::now();
            let certs = certify_maximal(&cx.grid, &cone, &u, &rep.b_mask, tol)?;
            cx.lap("certify", t);
            write_certificates_csv(&certs, cx.file("certificates.csv")?)?;
            let certified = certs.iter().filter(|c| c.certified).count();
            let all = certified == certs.len();
            let worst = certs.iter().max_by(|a, b| a.gap.total_cmp(&b.gap));
            let met = expectation(expect, &[("certified", all), ("not-certified", !all)])?;
            (
                json!({
                    "boundary": boundary_summary(&rep),
                    "tol_maximality": tol,
                    "certified": certified,
                    "certificates": certs.len(),
                    "worst_gap": worst.map(|c| c.gap),
                    "worst_node": worst.map(|c| c.node),
                }),
                met,
            )
        }
        Command::Poisson(_) => {
            let cone = cx.cone()?;
            let rep = cx.boundary(&cone)?;
            let mut params = PoissonParams::for_grid(&cx.grid);
            params.probes = cx.cfg.probes;
            params.seed = cx.cfg.seed;
            if let Some(t) = cx.cfg.tol_poisson {
                params.tol = t;
            }
            let t = Instant::now();
            let v = poisson_test(&cx.grid, &cone, &rep, &params)?;
            cx.lap("poisson", t);
            let met = expectation(expect, &[("poisson", v.poisson), ("non-poisson", !v.poisson)])?;
            (
                json!({
                    "boundary": boundary_summary(&rep),
                    "tol_poisson": params.tol,
                    "verdict": if v.poisson { "poisson-not-refuted" } else { "non-poisson" },
                    "worst_gap": v.worst_gap,
                    "worst_node": v.worst_node,
                    "worst_probe": v.worst_probe,
                    "nodes_checked": v.nodes_checked,
                }),
                met,
            )
        }
        Command::Harmonic(_) => {
            let u = cx.phi()?;
            let cone = cx.cone()?;
            let t = Instant::now();
            let v = harmonic_test(&cx.grid, &cone, &u, cx.cfg.tol_harmonic, false)?;
            cx.lap("harmonic", t);
            let met = expectation(expect, &[("harmonic", v.harmonic), ("not-harmonic", !v.harmonic)])?;
            (
                json!({
                    "harmonic": v.harmonic,
                    "tol_harmonic": cx.cfg.tol_harmonic,
                    "worst_gap": v.worst_gap,
                    "worst_node": v.worst_node,
                    "worst_spread": v.worst_spread,
                    "nodes_checked": v.nodes_checked,
                }),
                met,
            )
        }
        Command::DiscMc(_) => {
            let cone = cx.cone()?;
            let t = Instant::now();
            let (rows, summary) = disc_mc(&cx, &cone)?;
            cx.lap("disc_mc", t);
            write_disc_checks_csv(&rows, cx.file("discs.csv")?)?;
            let all = rows.iter().all(|r| r.verdict);
            let met = expectation(expect, &[("disc-pass", all)])?;
            (summary, met)
        }
    };
    let mut report = json!({
        "schema_version": REPORT_SCHEMA,
        "command": cx.cfg.command,
        "config": cx.cfg,
        "grid": {
            "nodes": cx.grid.len(),
            "dim": cx.grid.dim(),
            "spacing": cx.grid.spacing(),
            "fixture": cx.grid.fixture(),
        },
        "results": results,
        "expectation_met": met,
    });
    if cx.cfg.timing {
        let mut t: serde_json::Map<String, Value> = cx.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        t.insert("total".into(), json!(cx.started.elapsed().as_secs_f64()));
        report["timing"] = Value::Object(t);
    }
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(cx.cfg.out.join("report.json"), text)?;
    Ok(Outcome {
        report,
        expectation_met: met,
    })
}

fn write_envelope_csv(cx: &Context, phi: &GridFunction, lp: &[f64], sweep: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(cx.file("envelope.csv")?);
    let mut header = vec!["index".to_string()];
    for j in 1..=cx.grid.dim() {
        header.push(format!("re{j}"));
        header.push(format!("im{j}"));
    }
    header.extend(["phi", "lp", "sweep"].map(String::from));
    w.write_record(&header)?;
    for (i, p) in cx.grid.points().iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(p.real_coords().iter().map(|x| format!("{x}")));
        rec.extend([phi.get(i), lp[i], sweep[i]].map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Random disc adapted to a fixture: polydisc discs for the disc and
/// bidisk, a disc in one component for two discs, a horizontal disc at a
/// segment level for the disc times a segment.
pub fn random_fixture_disc(grid: &GridSet, rng: &mut ChaCha8Rng, degree: usize) -> Result<AnalyticDisc> {
    use num_complex::Complex64;
    use rand::Rng;
    let zero = || vec![Complex64::new(0.0, 0.0)];
    match grid.fixture().and_then(|f| f.parse::<Fixture>().ok()) {
        Some(Fixture::Disk1d) => Ok(random_polydisc_disc(rng, 1, degree, 1.0)),
        Some(Fixture::Bidisk) => Ok(random_polydisc_disc(rng, 2, degree, 1.0)),
        Some(Fixture::TwoDisks) => {
            let one = random_polydisc_disc(rng, 1, degree, 1.0).coefficients.remove(0);
            let coeffs = if rng.gen_bool(0.5) { vec![one, zero()] } else { vec![zero(), one] };
            AnalyticDisc::new(coeffs)
        }
        Some(Fixture::DiskXSegment) => {
            let one = random_polydisc_disc(rng, 1, degree, 1.0).coefficients.remove(0);
            let levels: Vec<f64> = grid.points().iter().map(|p| p.coord(1).re).collect();
            let t = levels[rng.gen_range(0..levels.len())];
            AnalyticDisc::new(vec![one, vec![Complex64::new(t, 0.0)]])
        }
        None => Err(Error::Config("random discs need a fixture; pass --disc-file for point sets".into())),
    }
}

fn disc_mc(cx: &Context, cone: &TestCone) -> Result<(Vec<DiscCheckRow>, Value)> {
    let grid = &cx.grid;
    let n = cx.cfg.samples;
    let mut rng = ChaCha8Rng::seed_from_u64(cx.cfg.seed);
    let discs: Vec<AnalyticDisc> = match &cx.cfg.disc_file {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let raw: Vec<AnalyticDisc> =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            raw.into_iter().map(|d| AnalyticDisc::new(d.coefficients)).collect::<Result<_>>()?
        }
        None => (0..cx.cfg.discs)
            .map(|_| random_fixture_disc(grid, &mut rng, 3))
            .collect::<Result<_>>()?,
    };
    // Members never at the floor give finite integrals for every disc.
    let finite: Vec<usize> = (0..cone.len())
        .filter(|&k| match cone.functions()[k].floor() {
            Some(fl) => cone.row(k).iter().all(|v| *v > fl),
            None => true,
        })
        .collect();
    let mut rows = Vec::new();
    let (mut jensen_pass, mut little_pass) = (0usize, 0usize);
    for (d, f) in discs.iter().enumerate() {
        let j = jensen_check(f, grid, cone, n, None)?;
        jensen_pass += usize::from(j.passed);
        rows.push(DiscCheckRow {
            disc: d,
            check: "jensen".into(),
            lhs: j.worst_excess,
            rhs: 0.0,
            verdict: j.passed,
        });
        let g = random_self_map(&mut rng);
        let k = finite[rand::Rng::gen_range(&mut rng, 0..finite.len())];
        let u = GridFunction::new(cone.row(k).to_vec());
        let l = littlewood_check(f, &g, grid, &u, n)?;
        little_pass += usize::from(l.holds);
        rows.push(DiscCheckRow {
            disc: d,
            check: format!("littlewood:member{k}"),
            lhs: l.mu_fg,
            rhs: l.mu_f + l.tol,
            verdict: l.holds,
        });
    }
    let total = discs.len().max(1) as f64;
    let summary = json!({
        "discs": discs.len(),
        "samples": n,
        "jensen_pass_rate": jensen_pass as f64 / total,
        "littlewood_pass_rate": little_pass as f64 / total,
    });
    Ok((rows, summary))
}

/// Parses arguments, runs, prints a one-line summary and returns the exit
/// code: 0 success, 1 unmet expectation, 2 configuration or solver error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string(&outcome.report["results"]).unwrap_or_default());
            match outcome.expectation_met {
                Some(false) => {
                    eprintln!("expectation not met");
                    1
                }
                _ => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
