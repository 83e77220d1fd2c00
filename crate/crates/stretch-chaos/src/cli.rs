//! Command-line front end: verification pipelines, entropy of a matrix file,
//! periodic orbits, itineraries and the discrete cutting check.
//!
//! Exit codes: 0 verified, 1 fails, 2 boundary case, 3 inconclusive,
//! 64 usage error, 65 malformed input data, 66 unreadable input file.

use crate::flows::{
    duffing_periods, duffing_scan, switching_thresholds, DuffingLevels, DuffingParams, DuffingPipeline, OdeOptions,
    VolterraLevels, VolterraParams, VolterraPipeline,
};
use crate::geometry::{
    grid_cut_check, sample_test_paths, CutDirection, GridMask, OrientedRectangle, Path, RegionPredicate, Side,
};
use crate::models::{
    duopoly_conditions, duopoly_geometry, logistic_geometry, olg_conditions, olg_geometry, Duopoly, Logistic, Model,
    Olg2d, Overall, ToleranceMode,
};
use crate::orbits::{
    certificate_from_report, chaos_certificate, covering_periodic_point_1d, newton_periodic_point_2d, ChaosCertificate,
    NewtonOptions, OrbitEntry, PeriodicFinder,
};
use crate::report::{to_json_string, SCHEMA};
use crate::stretching::{composite_regions, PlanarMap, RegionStatus, StretchOptions, StretchReport};
use crate::symdyn::{
    count_admissible_words, edge_subshift, is_irreducible, itinerary, perron_eigenvalue, primitive_necklaces,
    MatrixKind, SymbolMatrix, SymbolSequence,
};
use crate::VERSION;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_BOUNDARY: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;

#[derive(Parser, Debug)]
#[command(name = "stretch-chaos", version, about = "Stretching-along-paths verification for planar maps and switched systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Runs a full verification pipeline and writes its reports.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Perron eigenvalue and entropy of a matrix file.
    Entropy(EntropyArgs),
    /// Periodic points for given itineraries, as CSV.
    Orbit(OrbitArgs),
    /// Symbolic itinerary of an orbit.
    Itinerary(ItineraryArgs),
    /// Discrete cutting check of a PBM mask.
    Cutcheck(CutArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Side attribution tolerance; defaults to 1e-6 times the target diameter.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Residual accepted for periodic points.
    #[arg(long)]
    pub orbit_tol: Option<f64>,
    #[arg(long)]
    pub max_period: Option<usize>,
    #[arg(long, default_value = "sc-out")]
    pub out: PathBuf,
    /// Also print the certificate summary as JSON on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum VerifyTarget {
    /// Two-dimensional overlapping-generations map.
    Olg2d {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long = "K")]
        k: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Duopoly game with adaptive expectations.
    Duopoly {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        nu: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Periodically switched predator-prey system.
    Volterra {
        /// Coefficients `a,b,c,d`.
        #[arg(long, value_delimiter = ',', required = true)]
        abcd: Vec<f64>,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 2)]
        m1: u32,
        #[arg(long, default_value_t = 1)]
        m2: u32,
        /// Switching times slightly above the twist thresholds.
        #[arg(long, conflicts_with_all = ["r0", "rmu"])]
        auto_times: bool,
        #[arg(long, requires = "rmu")]
        r0: Option<f64>,
        #[arg(long, requires = "r0")]
        rmu: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Periodically switched Duffing-type system.
    Duffing {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Candidate times for the first phase; defaults to fractions of the threshold.
        #[arg(long, value_delimiter = ',')]
        r_q: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        r_s: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    pub file: PathBuf,
    /// Longest word length counted.
    #[arg(long, default_value_t = 12)]
    pub max_len: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapName {
    Logistic,
    Olg2d,
    Duopoly,
}

#[derive(Args, Debug, Clone)]
pub struct MapParams {
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[arg(value_enum)]
    pub model: MapName,
    #[command(flatten)]
    pub params: MapParams,
    /// One cyclic word such as `011`; all primitive words when omitted.
    #[arg(long)]
    pub itinerary: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub max_period: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ItineraryArgs {
    #[arg(value_enum)]
    pub model: MapName,
    #[command(flatten)]
    pub params: MapParams,
    #[arg(long)]
    pub x0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y0: f64,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftRight,
    DownUp,
}

#[derive(Args, Debug)]
pub struct CutArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = Direction::LeftRight)]
    pub direction: Direction,
}

/// Settings recorded into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub n_paths: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub stretch_tol: Option<f64>,
    pub orbit_tol: f64,
    pub max_period: usize,
    pub out_dir: String,
    pub format: Format,
    pub version: String,
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    schema: &'static str,
    version: &'static str,
    kind: &'static str,
    config: &'a RunConfig,
    payload: &'a T,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: msg.into() }
    }

    fn io(e: std::io::Error) -> Self {
        Failure { code: EXIT_FAIL, message: format!("write failed: {e}") }
    }
}

type CmdResult = Result<i32, Failure>;

pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let res = match cli.command {
        Command::Verify { target } => cmd_verify(target),
        Command::Entropy(a) => cmd_entropy(&a),
        Command::Orbit(a) => cmd_orbit(&a),
        Command::Itinerary(a) => cmd_itinerary(&a),
        Command::Cutcheck(a) => cmd_cutcheck(&a),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn configure_threads() {
    if let Some(n) = std::env::var("STRETCH_CHAOS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn params_map(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

struct Defaults {
    n_paths: usize,
    n_samples: usize,
    orbit_tol: f64,
    max_period: usize,
}

fn make_config(command: &str, params: BTreeMap<String, Value>, c: &Common, d: Defaults) -> RunConfig {
    RunConfig {
        command: command.into(),
        params,
        n_paths: c.n_paths.unwrap_or(d.n_paths),
        n_samples: c.n_samples.unwrap_or(d.n_samples),
        seed: c.seed,
        stretch_tol: c.tol,
        orbit_tol: c.orbit_tol.unwrap_or(d.orbit_tol),
        max_period: c.max_period.unwrap_or(d.max_period),
        out_dir: c.out.display().to_string(),
        format: c.format,
        version: VERSION.into(),
    }
}

fn stretch_options(cfg: &RunConfig, map_id: &str) -> StretchOptions {
    let o = StretchOptions::default().with_map_id(map_id).with_seed(cfg.seed);
    match cfg.stretch_tol {
        Some(t) => o.with_tol(t),
        None => o,
    }
}

fn csv_header(cfg: &RunConfig) -> String {
    let line = serde_json::to_string(cfg).unwrap_or_default();
    format!("# {SCHEMA} stretch-chaos {VERSION} seed={} config={line}\n", cfg.seed)
}

struct Output<'a> {
    dir: &'a FsPath,
    cfg: &'a RunConfig,
}

impl Output<'_> {
    fn create(cfg: &RunConfig) -> Result<Output<'_>, Failure> {
        let dir = FsPath::new(&cfg.out_dir);
        fs::create_dir_all(dir).map_err(Failure::io)?;
        Ok(Output { dir, cfg })
    }

    fn json<T: Serialize>(&self, name: &str, kind: &'static str, payload: &T) -> Result<(), Failure> {
        let art = Artifact { schema: SCHEMA, version: VERSION, kind, config: self.cfg, payload };
        let text = to_json_string(&art).map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
        fs::write(self.dir.join(name), text).map_err(Failure::io)
    }

    fn csv(&self, name: &str, body: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), csv_header(self.cfg) + body).map_err(Failure::io)
    }

    fn text(&self, name: &str, body: &str) -> Result<(), Failure> {
        fs::write(self.dir.join(name), body).map_err(Failure::io)
    }
}

fn rect_csv(rects: &[&OrientedRectangle]) -> String {
    let mut s = String::from("rect,side,x,y\n");
    for r in rects {
        for side in [Side::Left, Side::Down, Side::Right, Side::Up] {
            for p in r.side(side) {
                s += &format!("{},{:?},{:.17e},{:.17e}\n", r.id(), side, p.x, p.y);
            }
        }
    }
    s
}

fn regions_csv(regions: &[RegionPredicate], n: usize) -> String {
    let mut s = String::from("label,x,y\n");
    for r in regions {
        let b = r.bbox();
        for j in 0..n {
            for i in 0..n {
                let x = b.x_min + (i as f64 + 0.5) / n as f64 * b.width();
                let y = b.y_min + (j as f64 + 0.5) / n as f64 * b.height();
                if r.contains(crate::Point::new(x, y)) {
                    s += &format!("{},{:.17e},{:.17e}\n", r.label, x, y);
                }
            }
        }
    }
    s
}

fn path_images_csv(map: &dyn PlanarMap, paths: &[Path], max_paths: usize) -> String {
    let mut s = String::from("path,t,x,y,image_x,image_y\n");
    for p in paths.iter().take(max_paths) {
        for (t, z) in p.params().iter().zip(p.points()) {
            if let Ok(w) = map.apply(*z) {
                s += &format!("{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n", p.id, t, z.x, z.y, w.x, w.y);
            }
        }
    }
    s
}

const GNUPLOT: &str = "set datafile separator ','\n\
set key outside\n\
plot 'rect.csv' using 3:4 with dots title 'rectangles', \\\n\
     'regions.csv' using 2:3 with dots title 'regions', \\\n\
     'paths.csv' using 5:6 with dots title 'path images'\n";

fn write_plot_data(
    out: &Output,
    rects: &[&OrientedRectangle],
    regions: &[RegionPredicate],
    map: &dyn PlanarMap,
    paths: &[Path],
) -> Result<(), Failure> {
    out.csv("rect.csv", &rect_csv(rects))?;
    out.csv("regions.csv", &regions_csv(regions, 120))?;
    out.csv("paths.csv", &path_images_csv(map, paths, 8))?;
    out.text("plot.gp", GNUPLOT)
}

fn write_certificate(out: &Output, cert: &ChaosCertificate) -> Result<(), Failure> {
    out.json("certificate.json", "chaos_certificate", cert)?;
    let mut buf = Vec::new();
    cert.write_orbits_csv(&mut buf).map_err(Failure::io)?;
    out.csv("orbits.csv", &String::from_utf8_lossy(&buf))
}

fn report_code(reports: &[&StretchReport], cert: Option<&ChaosCertificate>) -> i32 {
    let statuses = reports.iter().flat_map(|r| r.regions.iter().map(|g| g.status));
    let mut inconclusive = reports.iter().any(|r| r.inconclusive || r.regions.is_empty());
    for s in statuses {
        match s {
            RegionStatus::Fail => return EXIT_FAIL,
            RegionStatus::Inconclusive => inconclusive = true,
            RegionStatus::Pass => {}
        }
    }
    if inconclusive {
        return EXIT_INCONCLUSIVE;
    }
    match cert {
        Some(c) if !c.all_realized() => EXIT_FAIL,
        _ => EXIT_OK,
    }
}

fn summarize(cfg: &RunConfig, code: i32, lines: &[String], summary: &Value) {
    match cfg.format {
        Format::Text => {
            for l in lines {
                emit(&(format!("{l}") + "\n"));
            }
            emit(&(format!("exit {code}: {}", verdict_word(code)) + "\n"));
        }
        Format::Json => emit(&to_json_string(summary).unwrap_or_default()),
    }
}

fn verdict_word(code: i32) -> &'static str {
    match code {
        EXIT_OK => "verified",
        EXIT_BOUNDARY => "boundary case",
        EXIT_INCONCLUSIVE => "inconclusive",
        _ => "fails",
    }
}

fn cert_lines(cert: &ChaosCertificate) -> Vec<String> {
    let mut v = vec![
        format!("crossing number: {}", cert.stretch.crossing_number),
        format!("entropy lower bound: {}", cert.entropy_bound),
        format!(
            "periodic points: {}/{} realized, max residual {:e}",
            cert.orbits.iter().filter(|o| o.result.as_ref().is_some_and(|r| r.itinerary_verified)).count(),
            cert.orbits.len(),
            cert.max_residual()
        ),
    ];
    v.extend(cert.failures.iter().map(|f| format!("failure: {f}")));
    v
}

fn cmd_verify(target: VerifyTarget) -> CmdResult {
    match target {
        VerifyTarget::Olg2d { mu, b, beta, k, common } => {
            let params = params_map(&[("mu", json!(mu)), ("b", json!(b)), ("beta", json!(beta)), ("K", json!(k))]);
            let cfg = make_config(
                "verify olg2d",
                params,
                &common,
                Defaults { n_paths: 200, n_samples: 400, orbit_tol: 1e-9, max_period: 1 },
            );
            let model = Olg2d::new(mu, b, beta).map_err(|e| Failure::usage(e.to_string()))?;
            let conditions = olg_conditions(&model, k);
            let out = Output::create(&cfg)?;
            out.json("conditions.json", "condition_report", &conditions)?;
            if let Some(code) = gate_code(conditions.overall) {
                summarize(&cfg, code, &[format!("conditions: {:?}", conditions.offending())], &json!(conditions));
                return Ok(code);
            }
            let geom =
                olg_geometry(&model, k, ToleranceMode::Strict).map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
            let map = Model::Olg2d(model);
            discrete_pipeline(&cfg, &out, &map, &geom.rect, &geom.regions)
        }
        VerifyTarget::Duopoly { a, b, c1, c2, alpha, nu, common } => {
            let params = params_map(&[
                ("a", json!(a)),
                ("b", json!(b)),
                ("c1", json!(c1)),
                ("c2", json!(c2)),
                ("alpha", json!(alpha)),
                ("nu", json!(nu)),
            ]);
            let cfg = make_config(
                "verify duopoly",
                params,
                &common,
                Defaults { n_paths: 200, n_samples: 400, orbit_tol: 1e-9, max_period: 4 },
            );
            let model = Duopoly::new(a, b, c1, c2, alpha, nu).map_err(|e| Failure::usage(e.to_string()))?;
            let conditions = duopoly_conditions(&model);
            let out = Output::create(&cfg)?;
            out.json("conditions.json", "condition_report", &conditions)?;
            if let Some(code) = gate_code(conditions.overall) {
                let lines: Vec<String> = conditions
                    .conditions
                    .iter()
                    .map(|c| format!("{}: margin {:e}", c.name, c.margin))
                    .collect();
                summarize(&cfg, code, &lines, &json!(conditions));
                return Ok(code);
            }
            let geom =
                duopoly_geometry(&model, ToleranceMode::Strict).map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
            let map = Model::Duopoly(model);
            discrete_pipeline(&cfg, &out, &map, &geom.rect, &geom.regions)
        }
        VerifyTarget::Volterra { abcd, mu, m1, m2, auto_times, r0, rmu, common } => {
            let params = params_map(&[
                ("abcd", json!(abcd)),
                ("mu", json!(mu)),
                ("m1", json!(m1)),
                ("m2", json!(m2)),
                ("auto_times", json!(auto_times)),
                ("r0", json!(r0)),
                ("rmu", json!(rmu)),
            ]);
            let cfg = make_config(
                "verify volterra",
                params,
                &common,
                Defaults { n_paths: 16, n_samples: 800, orbit_tol: 1e-7, max_period: 1 },
            );
            let times = match (auto_times, r0, rmu) {
                (true, _, _) => None,
                (false, Some(a), Some(b)) => Some((a, b)),
                _ => return Err(Failure::usage("give --auto-times or both --r0 and --rmu")),
            };
            let [a, b, c, d] = abcd[..] else {
                return Err(Failure::usage("--abcd needs four values"));
            };
            let p = VolterraParams::new(a, b, c, d, mu).map_err(|e| Failure::usage(e.to_string()))?;
            let opts = OdeOptions::default();
            let pipe = VolterraPipeline::new(p, VolterraLevels::reference(&p), m1, m2, times, &opts)
                .map_err(|e| Failure { code: EXIT_FAIL, message: e.to_string() })?;
            let out = Output::create(&cfg)?;
            let sopts = stretch_options(&cfg, "volterra");
            let paths1 = sample_test_paths(pipe.rect1(), cfg.n_paths, cfg.n_samples, cfg.seed);
            let paths2 = sample_test_paths(pipe.rect2(), cfg.n_paths, cfg.n_samples, cfg.seed);
            let s0 = pipe.check_phase0(&paths1, &sopts);
            let smu = pipe.check_phase_mu(&paths2, &sopts);
            let comp = pipe.check_composite(&paths1, &sopts);
            let regions: Vec<RegionPredicate> =
                composite_regions(&pipe.phase0_map(), &pipe.h, &pipe.k).into_iter().map(|c| c.2).collect();
            let map = pipe.poincare_map();
            let finder = PeriodicFinder::Newton2d(NewtonOptions::default().with_tol(cfg.orbit_tol));
            let cert = certificate_from_report(map.as_ref(), &regions, comp.report.clone(), cfg.max_period, &finder);
            let above = pipe.r0 > pipe.thresholds.alpha && pipe.r_mu > pipe.thresholds.beta;
            let info = json!({
                "levels": pipe.levels,
                "line_points": pipe.annuli.points,
                "linked": pipe.annuli.linked,
                "tau0": pipe.tau0,
                "tau_mu": pipe.tau_mu,
                "alpha": pipe.thresholds.alpha,
                "beta": pipe.thresholds.beta,
                "r0": pipe.r0,
                "r_mu": pipe.r_mu,
                "times_above_thresholds": above,
                "crossing_phase0": s0.crossing_number,
                "crossing_phase_mu": smu.crossing_number,
                "composite_pairs": comp.pairs,
            });
            out.json("pipeline.json", "volterra_pipeline", &info)?;
            out.json("stretch_phase0.json", "stretch_report", &s0)?;
            out.json("stretch_phase_mu.json", "stretch_report", &smu)?;
            out.json("stretch.json", "stretch_report", &comp.report)?;
            write_certificate(&out, &cert)?;
            write_plot_data(&out, &[pipe.rect1(), pipe.rect2()], &regions, pipe.phase0_map().as_ref(), &paths1)?;
            let mut code = report_code(&[&s0, &smu, &comp.report], Some(&cert));
            if code == EXIT_OK && !above {
                code = EXIT_INCONCLUSIVE;
            }
            let mut lines = vec![
                format!("thresholds: alpha = {}, beta = {}", pipe.thresholds.alpha, pipe.thresholds.beta),
                format!("switching times: r0 = {}, r_mu = {}", pipe.r0, pipe.r_mu),
                format!("phase crossings: {} and {}", s0.crossing_number, smu.crossing_number),
            ];
            lines.extend(cert_lines(&cert));
            summarize(&cfg, code, &lines, &info);
            Ok(code)
        }
        VerifyTarget::Duffing { k, q, s, m, r_q, r_s, common } => {
            let params = params_map(&[
                ("k", json!(k)),
                ("q", json!(q)),
                ("s", json!(s)),
                ("m", json!(m)),
                ("r_q", json!(r_q)),
                ("r_s", json!(r_s)),
            ]);
            let cfg = make_config(
                "verify duffing",
                params,
                &common,
                Defaults { n_paths: 12, n_samples: 800, orbit_tol: 1e-7, max_period: 1 },
            );
            let p = DuffingParams::new(k, q, s).map_err(|e| Failure::usage(e.to_string()))?;
            let levels = DuffingLevels::REFERENCE;
            let opts = OdeOptions::default();
            let fail = |e: crate::flows::FlowError| Failure { code: EXIT_FAIL, message: e.to_string() };
            let periods = duffing_periods(&p, &levels, &opts).map_err(fail)?;
            let alpha = switching_thresholds(m.max(1) as u32, 1, periods, periods).map_err(fail)?.alpha;
            let r_q = if r_q.is_empty() { vec![0.6 * alpha, 0.8 * alpha, alpha] } else { r_q };
            let r_s = if r_s.is_empty() { vec![2.2, 2.9, 3.6] } else { r_s };
            let scan = duffing_scan(p, levels, m, &r_q, &r_s, cfg.n_paths, cfg.n_samples, cfg.seed, true, &opts)
                .map_err(fail)?;
            let out = Output::create(&cfg)?;
            out.json("scan.json", "duffing_scan", &json!({ "alpha": alpha, "periods": periods, "scan": scan }))?;
            let Some((rq, rs)) = scan.certified else {
                let lines = vec![format!("no certified pair among {} scanned", scan.points.len())];
                summarize(&cfg, EXIT_FAIL, &lines, &json!(scan));
                return Ok(EXIT_FAIL);
            };
            let pipe = DuffingPipeline::new(p, levels, m, rq, rs, &opts).map_err(fail)?;
            let sopts = stretch_options(&cfg, "duffing");
            let paths1 = sample_test_paths(&pipe.r1, cfg.n_paths, cfg.n_samples, cfg.seed);
            let comp = pipe.check_composite(&paths1, &sopts);
            let regions: Vec<RegionPredicate> =
                composite_regions(&pipe.phase_q_map(), &pipe.h, &pipe.k).into_iter().map(|c| c.2).collect();
            let map = pipe.poincare_map();
            let finder = PeriodicFinder::Newton2d(NewtonOptions::default().with_tol(cfg.orbit_tol));
            let cert = certificate_from_report(map.as_ref(), &regions, comp.report.clone(), cfg.max_period, &finder);
            out.json("stretch.json", "stretch_report", &comp.report)?;
            write_certificate(&out, &cert)?;
            write_plot_data(&out, &[&pipe.r1, &pipe.r2], &regions, pipe.phase_q_map().as_ref(), &paths1)?;
            let code = report_code(&[&comp.report], Some(&cert));
            let mut lines = vec![format!("certified switching times: r_q = {rq}, r_s = {rs} (threshold {alpha})")];
            lines.extend(cert_lines(&cert));
            summarize(&cfg, code, &lines, &json!({ "r_q": rq, "r_s": rs, "alpha": alpha }));
            Ok(code)
        }
    }
}

fn gate_code(overall: Overall) -> Option<i32> {
    match overall {
        Overall::HoldsStrict => None,
        Overall::Boundary => Some(EXIT_BOUNDARY),
        Overall::Fails => Some(EXIT_FAIL),
    }
}

fn discrete_pipeline(
    cfg: &RunConfig,
    out: &Output,
    map: &Model,
    rect: &OrientedRectangle,
    regions: &[RegionPredicate],
) -> CmdResult {
    let paths = sample_test_paths(rect, cfg.n_paths, cfg.n_samples, cfg.seed);
    let finder = PeriodicFinder::Newton2d(NewtonOptions::default().with_tol(cfg.orbit_tol));
    let cert = chaos_certificate(map, rect, regions, cfg.max_period, &paths, &finder, &stretch_options(cfg, map.name()));
    out.json("stretch.json", "stretch_report", &cert.stretch)?;
    write_certificate(out, &cert)?;
    write_plot_data(out, &[rect], regions, map, &paths)?;
    let code = report_code(&[&cert.stretch], Some(&cert));
    let summary = json!({
        "crossing_number": cert.stretch.crossing_number,
        "entropy_bound": cert.entropy_bound,
        "failures": cert.failures,
    });
    summarize(cfg, code, &cert_lines(&cert), &summary);
    Ok(code)
}

#[derive(Serialize)]
struct EntropyReport {
    schema: &'static str,
    version: &'static str,
    file: String,
    kind: MatrixKind,
    lambda: f64,
    entropy: f64,
    irreducible: bool,
    word_counts: Vec<(usize, String)>,
}

fn cmd_entropy(a: &EntropyArgs) -> CmdResult {
    let text = fs::read_to_string(&a.file)
        .map_err(|e| Failure { code: EXIT_NO_INPUT, message: format!("{}: {e}", a.file.display()) })?;
    let m = SymbolMatrix::parse(&text).map_err(|e| Failure { code: EXIT_DATA, message: e.to_string() })?;
    let perron = perron_eigenvalue(&m).map_err(|e| Failure { code: EXIT_DATA, message: e.to_string() })?;
    let words_matrix = match m.kind() {
        MatrixKind::Transition => m.clone(),
        MatrixKind::Adjacency => edge_subshift(&m).map_err(|e| Failure { code: EXIT_DATA, message: e.to_string() })?.0,
    };
    let counts: Vec<(usize, String)> =
        (1..=a.max_len).map(|n| (n, count_admissible_words(&words_matrix, n).to_string())).collect();
    let rep = EntropyReport {
        schema: SCHEMA,
        version: VERSION,
        file: a.file.display().to_string(),
        kind: m.kind(),
        lambda: perron.lambda,
        entropy: perron.entropy,
        irreducible: is_irreducible(&m),
        word_counts: counts,
    };
    match a.format {
        Format::Json => emit(&to_json_string(&rep).unwrap_or_default()),
        Format::Text => {
            emit(&(format!("kind = {:?}", rep.kind) + "\n"));
            emit(&(format!("lambda = {}", rep.lambda) + "\n"));
            emit(&(format!("entropy = {}", rep.entropy) + "\n"));
            emit(&(format!("irreducible = {}", rep.irreducible) + "\n"));
            for (n, c) in &rep.word_counts {
                emit(&(format!("words[{n}] = {c}") + "\n"));
            }
        }
    }
    Ok(EXIT_OK)
}

fn need(v: Option<f64>, name: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::usage(format!("missing --{name}")))
}

struct Discrete {
    model: Model,
    regions: Vec<RegionPredicate>,
    intervals: Option<Vec<(f64, f64)>>,
}

fn build_discrete(name: MapName, p: &MapParams) -> Result<Discrete, Failure> {
    let usage = |e: crate::models::ModelError| Failure::usage(e.to_string());
    Ok(match name {
        MapName::Logistic => {
            let l = Logistic { mu: need(p.mu, "mu")? };
            let g = logistic_geometry(&l).map_err(usage)?;
            Discrete { model: Model::Logistic(l), regions: g.regions.to_vec(), intervals: Some(g.intervals.to_vec()) }
        }
        MapName::Olg2d => {
            let m = Olg2d::new(need(p.mu, "mu")?, need(p.b, "b")?, need(p.beta, "beta")?).map_err(usage)?;
            let g = olg_geometry(&m, need(p.k, "K")?, ToleranceMode::NonStrict).map_err(usage)?;
            Discrete { model: Model::Olg2d(m), regions: g.regions.to_vec(), intervals: None }
        }
        MapName::Duopoly => {
            let d = Duopoly::new(
                need(p.a, "a")?,
                need(p.b, "b")?,
                need(p.c1, "c1")?,
                need(p.c2, "c2")?,
                need(p.alpha, "alpha")?,
                need(p.nu, "nu")?,
            )
            .map_err(usage)?;
            let g = duopoly_geometry(&d, ToleranceMode::NonStrict).map_err(usage)?;
            Discrete { model: Model::Duopoly(d), regions: g.regions.to_vec(), intervals: None }
        }
    })
}

fn cmd_orbit(a: &OrbitArgs) -> CmdResult {
    let sys = build_discrete(a.model, &a.params)?;
    let m = sys.regions.len();
    let words = match &a.itinerary {
        Some(w) => {
            let seq = SymbolSequence::parse(w, true).map_err(|e| Failure::usage(e.to_string()))?;
            if seq.symbols.len() > a.max_period {
                return Err(Failure::usage(format!("itinerary longer than --max-period {}", a.max_period)));
            }
            vec![seq.symbols]
        }
        None => primitive_necklaces(m, a.max_period),
    };
    let mut entries = Vec::new();
    let mut code = EXIT_OK;
    for word in &words {
        let res = match &sys.intervals {
            Some(iv) => {
                let model = sys.model.clone();
                let f = move |x: f64| model.eval(crate::Point::new(x, 0.0)).map(|p| p.x).unwrap_or(f64::NAN);
                covering_periodic_point_1d(&f, iv, word)
            }
            None => newton_periodic_point_2d(&sys.model, &sys.regions, word, &NewtonOptions::default().with_tol(a.tol)),
        };
        let itinerary = SymbolSequence::periodic(word.clone()).as_string();
        match res {
            Ok(r) => {
                if !r.itinerary_verified {
                    code = EXIT_FAIL;
                }
                entries.push(OrbitEntry { itinerary, period: word.len(), result: Some(r), error: None });
            }
            Err(e) => {
                eprintln!("{itinerary}: {e}");
                code = EXIT_FAIL;
                entries.push(OrbitEntry { itinerary, period: word.len(), result: None, error: Some(e) });
            }
        }
    }
    let mut csv = format!("# {SCHEMA} stretch-chaos {VERSION} model={:?} max_period={}\n", a.model, a.max_period);
    csv += "itinerary,k,x,y,residual\n";
    for e in &entries {
        if let Some(r) = &e.result {
            for (k, p) in r.orbit.iter().enumerate() {
                csv += &format!("{},{},{:.17e},{:.17e},{:.17e}\n", e.itinerary, k, p.x, p.y, r.residual);
            }
        }
    }
    match &a.out {
        Some(path) => fs::write(path, csv).map_err(Failure::io)?,
        None => emit(&csv),
    }
    Ok(code)
}

fn cmd_itinerary(a: &ItineraryArgs) -> CmdResult {
    let sys = build_discrete(a.model, &a.params)?;
    let res = itinerary(&sys.model, &sys.regions, crate::Point::new(a.x0, a.y0), a.n);
    emit(&(format!("{}", res.word.as_string()) + "\n"));
    match res.failure {
        None => Ok(EXIT_OK),
        Some((i, why)) => {
            emit(&(format!("failure at step {i}: {why:?}") + "\n"));
            Ok(EXIT_FAIL)
        }
    }
}

fn cmd_cutcheck(a: &CutArgs) -> CmdResult {
    let text = fs::read_to_string(&a.file)
        .map_err(|e| Failure { code: EXIT_NO_INPUT, message: format!("{}: {e}", a.file.display()) })?;
    let mask = GridMask::parse_pbm(&text).map_err(|e| Failure { code: EXIT_DATA, message: e.to_string() })?;
    let dir = match a.direction {
        Direction::LeftRight => CutDirection::LeftRight,
        Direction::DownUp => CutDirection::DownUp,
    };
    if grid_cut_check(&mask, dir) {
        emit(&(format!("CUTS") + "\n"));
        Ok(EXIT_OK)
    } else {
        emit(&(format!("DOES NOT CUT") + "\n"));
        Ok(EXIT_FAIL)
    }
}
