use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lqdim_core::entropy::{
    doubling_gate, entropy_trace, superadditivity_check, DEFAULT_MAX_DOUBLING, DEFAULT_RESTARTS,
};
use lqdim_core::ifs::{attractor_atoms, attractor_atoms_depth, cut_set, IfsSpec, WORD_BUDGET};
use lqdim_core::io::read_spec;
use lqdim_core::manifolds::{
    conjugate_ifs, distortion_probe, doubling_transfer_check, write_lifted_csv, ChartMap, DistortionBand,
    DoublingTransferReport, StereographicChart, EQUATOR_MARGIN,
};
use lqdim_core::measure::AtomicMeasure;
use lqdim_core::packing::{
    grid_partition, heavy_maximal_packing, maximal_partition, pullback_good_cover, verify_good_cover,
    verify_grid_partition, verify_packing, verify_partition, write_membership_csv, write_packing_csv,
    CheckResult, GoodCoverCaps, Packing, VerifyReport,
};
use lqdim_core::spectra::{
    multiplicativity_check, packing_sandwich, packing_sum, renyi_sum, spectrum_level, SpectrumTable,
    DEFAULT_Q_GRID,
};
use lqdim_core::{Ball, Error};

#[derive(Parser)]
#[command(name = "lqdim", version, about = "L^q-spectra and entropy dimensions of self-conformal measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Packing sums, grid sums and generalized-dimension integrals per (q, t).
    Spectrum(SpectrumArgs),
    /// h*_t, the ball-log integral and the entropy dimension.
    Entropy(EntropyArgs),
    /// Heavy maximal packing and its maximal partition at one level.
    Pack(PackArgs),
    /// Runs every invariant check and reports the empirical constants.
    Verify(VerifyArgs),
    /// Lifts a planar system onto the sphere and compares both sides.
    SphereLift(LiftArgs),
}

#[derive(Args)]
struct Common {
    /// IFS description (JSON, format 1).
    #[arg(long)]
    spec: PathBuf,
    /// Shallowest dyadic level t (scale 2^-t).
    #[arg(long, default_value_t = 3)]
    t_min: u32,
    /// Deepest dyadic level.
    #[arg(long, default_value_t = 10)]
    t_max: u32,
    /// Atom resolution; defaults to 2^-(t_max + 6).
    #[arg(long)]
    delta_atom: Option<f64>,
    /// Use every word of this length as an atom instead of a cut set.
    #[arg(long, conflicts_with = "delta_atom")]
    depth: Option<usize>,
    /// Cap on the number of words generated while atomizing.
    #[arg(long, default_value_t = WORD_BUDGET)]
    word_budget: usize,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds; finished levels are written when it runs out.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated q values (q = 1 belongs to `entropy`).
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_Q_GRID.to_vec())]
    q: Vec<f64>,
    /// Grid partition parameter in (0, 1/2].
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Number of deepest levels in the slope fit; all levels by default.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyArgs {
    #[command(flatten)]
    common: Common,
    /// Candidate maximal partitions per level.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Largest doubling constant accepted by the pre-check.
    #[arg(long, default_value_t = DEFAULT_MAX_DOUBLING)]
    max_doubling: f64,
    /// Atoms probed by the doubling pre-check.
    #[arg(long, default_value_t = 512)]
    probes: usize,
    /// Run even when the doubling pre-check fails.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PackArgs {
    #[command(flatten)]
    common: Common,
    /// Level of the packing (radius 2^-t).
    #[arg(long)]
    t: u32,
    /// Centers with radius, ball mass and cell mass.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Cell of every atom.
    #[arg(long)]
    membership: Option<PathBuf>,
    /// The packing as JSON, readable by `verify --packing`.
    #[arg(long)]
    fixture: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// A packing fixture (JSON) to check against the atoms.
    #[arg(long)]
    packing: Option<PathBuf>,
    /// Random maximal packings compared with the heavy one per level.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Machine-readable report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct LiftArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated q values for the dimension comparison.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 2.0])]
    q: Vec<f64>,
    /// Atoms probed for doubling constants and the distortion band.
    #[arg(long, default_value_t = 512)]
    probes: usize,
    /// Lifted atoms as x, y, z, mass.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// How a run ended unsuccessfully; maps to the exit code.
enum Failure {
    Usage(String),
    Invariant(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invariant(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invariant(m) | Failure::Resource(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant { .. } => Failure::Invariant(e.to_string()),
            Error::Resource { .. } => Failure::Resource(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Entropy(a) => entropy(a),
        Command::Pack(a) => pack(a),
        Command::Verify(a) => verify(a),
        Command::SphereLift(a) => sphere_lift(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dyadic(t: u32) -> f64 {
    2f64.powi(-(t as i32))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

struct Deadline(Option<Instant>);

impl Deadline {
    fn new(seconds: Option<f64>) -> Self {
        Deadline(seconds.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0))))
    }

    fn passed(&self) -> bool {
        self.0.is_some_and(|d| Instant::now() >= d)
    }
}

impl Common {
    fn levels(&self) -> Vec<u32> {
        (self.t_min..=self.t_max).collect()
    }

    fn load(&self) -> Result<(IfsSpec, AtomicMeasure), Failure> {
        let spec = read_spec(&self.spec)?;
        let mu = self.atomize(&spec)?;
        Ok((spec, mu))
    }

    fn atomize(&self, spec: &IfsSpec) -> Result<AtomicMeasure, Failure> {
        if self.t_min > self.t_max {
            return Err(Failure::Usage(format!(
                "--t-min {} exceeds --t-max {}",
                self.t_min, self.t_max
            )));
        }
        let mu = match self.depth {
            Some(d) => attractor_atoms_depth(spec, d, self.word_budget)?,
            None => {
                let delta = self.delta_atom.unwrap_or(dyadic(self.t_max + 6));
                attractor_atoms(spec, delta, self.word_budget)?
            }
        };
        check_band(&mu, self.t_max)?;
        Ok(mu)
    }
}

fn check_band(mu: &AtomicMeasure, t: u32) -> Outcome {
    if mu.check_scale(dyadic(t)).is_err() {
        let deepest = (1.0 / mu.scale_floor()).log2().floor();
        return Err(Failure::Usage(format!(
            "level {t} is finer than the atoms support (4 · resolution = {:.3e}); the deepest usable level is {deepest}",
            mu.scale_floor()
        )));
    }
    Ok(())
}

fn spectrum(a: SpectrumArgs) -> Outcome {
    if a.q.iter().any(|&q| q == 1.0) {
        return Err(Failure::Usage(
            "q = 1 has no L^q dimension column; use `lqdim entropy` for the entropy dimension".into(),
        ));
    }
    let (_, mu) = a.common.load()?;
    let deadline = Deadline::new(a.common.time_budget);
    let levels = a.common.levels();
    let mut per_level = Vec::new();
    let mut out_of_time = false;
    for &t in &levels {
        if deadline.passed() {
            out_of_time = true;
            break;
        }
        per_level.push(spectrum_level(&mu, &a.q, t, a.lambda)?);
    }
    let window = a.window.unwrap_or(per_level.len());
    let table = SpectrumTable::from_levels(&a.q, a.lambda, window, per_level)?;
    if let Some(p) = &a.csv {
        table.write_csv(create(p)?)?;
    }
    if let Some(p) = &a.json {
        table.write_json(create(p)?)?;
    }
    if a.csv.is_none() && a.json.is_none() {
        table.write_csv(io::stdout().lock())?;
    }
    for f in &table.fits {
        let dim = f.dim_hat.unwrap_or(f64::NAN);
        let gd = f.gd_dim.unwrap_or(f64::NAN);
        eprintln!(
            "q = {}: tau_hat = {:.4}, dim_{} ≈ {:.4}, gd_dim ≈ {:.4}, equivalence gap {:.4}, error_bound {:.4}",
            f.q,
            f.tau_hat,
            f.q,
            dim,
            gd,
            (dim - gd).abs(),
            f.error_bound.unwrap_or(f64::NAN)
        );
    }
    if out_of_time {
        return Err(Failure::Resource(format!(
            "time budget exhausted after {} of {} levels; partial table written",
            table.t_grid.len(),
            levels.len()
        )));
    }
    Ok(())
}

fn entropy(a: EntropyArgs) -> Outcome {
    let (_, mu) = a.common.load()?;
    let levels = a.common.levels();
    let gate = doubling_gate(&mu, &levels, a.probes, a.max_doubling)?;
    if !gate.passed {
        let reason = gate.reason.clone().unwrap_or_default();
        if !a.force {
            return Err(Failure::Invariant(format!(
                "refusing to estimate the entropy dimension: the results assume a self-conformal doubling measure, \
                 and this one does not look doubling ({reason}); pass --force to run anyway"
            )));
        }
        eprintln!("warning: doubling pre-check failed ({reason}); continuing because of --force");
    }
    let deadline = Deadline::new(a.common.time_budget);
    let mut done = Vec::new();
    for &t in &levels {
        if deadline.passed() {
            break;
        }
        done.push(t);
    }
    let out_of_time = done.len() < levels.len();
    if done.len() < 3 {
        return Err(Failure::Resource(format!(
            "time budget exhausted after {} levels; nothing to fit",
            done.len()
        )));
    }
    let trace = entropy_trace(&mu, &done, a.restarts, a.common.seed)?;
    if let Some(p) = &a.csv {
        trace.write_csv(create(p)?)?;
    }
    if let Some(p) = &a.json {
        trace.write_json(create(p)?)?;
    }
    if a.csv.is_none() && a.json.is_none() {
        trace.write_csv(io::stdout().lock())?;
    }
    let allowance = trace.allowance(gate.estimate.c_hat);
    eprintln!(
        "dim_e ≈ {:.4} (h*_t are minima over {} candidate partitions, hence upper bounds)",
        trace.dim_e_hat, a.restarts
    );
    eprintln!(
        "doubling C_hat = {:.3}; step allowance C_hat^log2(10) = {:.3} {}",
        gate.estimate.c_hat,
        allowance.bound,
        if allowance.holds { "holds" } else { "is exceeded" }
    );
    eprintln!("C4_hat = {:.4} (largest |h*_t - ball_log_integral|)", trace.c4_hat());
    if out_of_time {
        return Err(Failure::Resource("time budget exhausted; partial trace written".into()));
    }
    Ok(())
}

fn pack(a: PackArgs) -> Outcome {
    let (_, mu) = a.common.load()?;
    check_band(&mu, a.t)?;
    let delta = dyadic(a.t);
    let packing = heavy_maximal_packing(&mu, delta)?;
    let partition = maximal_partition(&packing, &mu)?;
    if let Some(p) = &a.csv {
        write_packing_csv(create(p)?, &packing, &mu, Some(&partition))?;
    }
    if let Some(p) = &a.membership {
        write_membership_csv(create(p)?, &partition, &mu)?;
    }
    if let Some(p) = &a.fixture {
        write_json(p, &packing)?;
    }
    if a.csv.is_none() && a.membership.is_none() && a.fixture.is_none() {
        write_packing_csv(io::stdout().lock(), &packing, &mu, Some(&partition))?;
    }
    eprintln!(
        "{} centers at radius 2^-{} over {} atoms; packed mass {:.6}; C1_hat = {:.4}",
        packing.len(),
        a.t,
        mu.len(),
        packing.power_sum(&mu, 1.0),
        partition.c1_hat(&mu)
    );
    Ok(())
}

#[derive(Serialize)]
struct Constants {
    #[serde(rename = "C1_hat")]
    c1_hat: f64,
    #[serde(rename = "C2_hat")]
    c2_hat: f64,
    #[serde(rename = "C3_hat")]
    c3_hat: f64,
    #[serde(rename = "C4_hat")]
    c4_hat: f64,
    #[serde(rename = "L_hat")]
    l_hat: Option<f64>,
    #[serde(rename = "entropy_L_hat")]
    entropy_l_hat: Option<f64>,
    good_cover_q: Option<f64>,
    good_cover_d: Option<usize>,
}

#[derive(Serialize)]
struct Report {
    spec: String,
    atoms: usize,
    levels: Vec<u32>,
    passed: bool,
    constants: Constants,
    notes: Vec<String>,
    checks: Vec<VerifyReport>,
}

fn verify(a: VerifyArgs) -> Outcome {
    let (spec, mu) = a.common.load()?;
    let levels = a.common.levels();
    let mut reports = Vec::new();
    let mut notes = Vec::new();

    if let Some(path) = &a.packing {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let fixture: Packing = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let mut r = verify_packing(&fixture, &mu);
        r.object = format!("packing fixture {}", path.display());
        reports.push(r);
    }

    let mut c1 = 1.0f64;
    let mut c2 = 1.0f64;
    let mut ratios = Vec::new();
    for &t in &levels {
        let delta = dyadic(t);
        let packing = heavy_maximal_packing(&mu, delta)?;
        let mut r = verify_packing(&packing, &mu);
        r.object = format!("heavy packing t={t}");
        reports.push(r);
        match maximal_partition(&packing, &mu) {
            Ok(part) => {
                c1 = c1.max(part.c1_hat(&mu));
                let mut r = verify_partition(&part, &mu);
                r.object = format!("maximal partition t={t}");
                reports.push(r);
            }
            Err(e) => reports.push(failed(format!("maximal partition t={t}"), e)),
        }
        let grid = grid_partition(&mu, 0.5, delta)?;
        let mut r = verify_grid_partition(&grid, &mu);
        r.object = format!("grid partition t={t}");
        reports.push(r);
        let s = packing_sandwich(&mu, delta, 2.0, a.samples, a.common.seed.wrapping_add(t as u64))?;
        c2 = c2.max(s.c2_hat);
        ratios.push(renyi_sum(&mu, 0.5, delta, 2.0)? / packing_sum(&mu, delta, 2.0)?);
    }
    let c3 = ratios
        .iter()
        .map(|r| r.max(1.0 / r))
        .fold(1.0f64, f64::max);

    // Good cover pulled back through the first word of W_2.
    let (mut cover_q, mut cover_d) = (None, None);
    let t_cover = 2;
    let s_cover = a.common.t_max.saturating_sub(t_cover).min(6);
    if s_cover >= 1 {
        let fine = heavy_maximal_packing(&mu, dyadic(t_cover + s_cover))?;
        let part = maximal_partition(&fine, &mu)?;
        let words = cut_set(&spec, t_cover, a.common.word_budget)?.words;
        let caps = GoodCoverCaps::default();
        match pullback_good_cover(&part, &words[0], &mu, s_cover, caps) {
            Ok(cover) => {
                cover_q = Some(cover.q_hat);
                cover_d = Some(cover.d_hat);
                let mut r = verify_good_cover(&cover, &mu, caps);
                r.object = format!("good cover t={t_cover} s={s_cover}");
                reports.push(r);
            }
            Err(e) => reports.push(failed(format!("good cover t={t_cover} s={s_cover}"), e)),
        }
    }

    let trace = entropy_trace(&mu, &levels, a.restarts, a.common.seed)?;
    let c4 = trace.c4_hat();

    // Multiplicativity on the shallowest three levels when their sums fit.
    let mult: Vec<u32> = levels.iter().copied().take(3).collect();
    let deepest_pair = mult.last().map_or(0, |t| 2 * t);
    let (l_hat, entropy_l_hat) = if mult.len() == 3 && mu.check_scale(dyadic(deepest_pair)).is_ok() {
        let l = multiplicativity_check(&mu, 2.0, &mult)?.l_hat;
        let e = superadditivity_check(&mu, &mult, a.restarts, a.common.seed)?.l_hat;
        (Some(l), Some(e))
    } else {
        notes.push(format!(
            "multiplicativity skipped: level {deepest_pair} is below the atom resolution band"
        ));
        (None, None)
    };

    let passed = reports.iter().all(VerifyReport::passed);
    let report = Report {
        spec: a.common.spec.display().to_string(),
        atoms: mu.len(),
        levels,
        passed,
        constants: Constants {
            c1_hat: c1,
            c2_hat: c2,
            c3_hat: c3,
            c4_hat: c4,
            l_hat,
            entropy_l_hat,
            good_cover_q: cover_q,
            good_cover_d: cover_d,
        },
        notes,
        checks: reports,
    };
    match &a.report {
        Some(p) => write_json(p, &report)?,
        None => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Usage(e.to_string()))?;
            writeln!(out)?;
        }
    }
    eprintln!(
        "C1_hat = {:.4}, C2_hat = {:.4}, C3_hat = {:.4}, C4_hat = {:.4}, L_hat = {}",
        c1,
        c2,
        c3,
        c4,
        l_hat.map_or("n/a".into(), |l| format!("{l:.4}"))
    );
    if passed {
        return Ok(());
    }
    let mut lines = Vec::new();
    for r in &report.checks {
        for c in r.failures() {
            lines.push(format!(
                "{}: {} failed: {}",
                r.object,
                c.name,
                c.witness.as_deref().unwrap_or("no witness")
            ));
        }
    }
    Err(Failure::Invariant(lines.join("\n")))
}

fn failed(object: String, e: Error) -> VerifyReport {
    VerifyReport {
        object,
        checks: vec![CheckResult {
            name: "construction".into(),
            passed: false,
            witness: Some(e.to_string()),
            value: None,
        }],
    }
}

#[derive(Serialize)]
struct DimensionPair {
    q: f64,
    planar: f64,
    lifted: f64,
}

#[derive(Serialize)]
struct LiftReport {
    atoms: usize,
    round_trip_error: f64,
    band: DistortionBand,
    transfer: DoublingTransferReport,
    planar_levels: Vec<u32>,
    sphere_levels: Vec<u32>,
    dimensions: Vec<DimensionPair>,
}

fn sphere_lift(a: LiftArgs) -> Outcome {
    let spec = read_spec(&a.common.spec)?;
    let planar = match spec.planar() {
        Some(p) => p,
        None => spec,
    };
    let chart = StereographicChart::new(planar.intrinsic_dim())?;
    // Validates the seed against the chart and the equator margin.
    conjugate_ifs(&planar, chart)?;
    let mu = a.common.atomize(&planar)?;
    let lifted = mu.pushforward(&ChartMap::Lift(chart))?;
    let mut round_trip = 0.0f64;
    for i in 0..mu.len() {
        let back = chart.forward(lifted.point(i))?;
        for (x, y) in back.iter().zip(mu.point(i)) {
            round_trip = round_trip.max((x - y).abs());
        }
    }

    let levels = a.common.levels();
    if levels.len() < 4 {
        return Err(Failure::Usage("sphere-lift needs at least 4 levels".into()));
    }
    // φ⁻¹ roughly doubles lengths near the pole, so sphere level t - 1
    // matches planar level t.
    let sphere_levels: Vec<u32> = levels.iter().map(|t| t - 1).collect();
    let sphere_scales: Vec<f64> = sphere_levels.iter().map(|&t| dyadic(t)).collect();
    let mut balls = Vec::new();
    for i in (0..lifted.len()).step_by((lifted.len() / 64).max(1)) {
        for &r in &sphere_scales {
            balls.push(Ball::new(lifted.point(i).to_vec(), r)?);
        }
    }
    let band = distortion_probe(&chart, &balls, EQUATOR_MARGIN)?;
    let transfer_scales: Vec<f64> = sphere_scales
        .iter()
        .copied()
        .filter(|&r| band.d1 * r >= mu.scale_floor())
        .collect();
    let transfer = doubling_transfer_check(&mu, &ChartMap::Lift(chart), &transfer_scales, a.probes)?;

    let mut dimensions = Vec::new();
    for &q in &a.q {
        if q == 1.0 {
            return Err(Failure::Usage("q = 1 has no L^q dimension; use `lqdim entropy`".into()));
        }
        let fit = |m: &AtomicMeasure, ls: &[u32]| -> Result<f64, Failure> {
            let rows = ls
                .iter()
                .map(|&t| spectrum_level(m, &[q], t, 0.5))
                .collect::<Result<Vec<_>, _>>()?;
            let table = SpectrumTable::from_levels(&[q], 0.5, ls.len(), rows)?;
            Ok(table.fits[0].dim_hat.unwrap_or(f64::NAN))
        };
        dimensions.push(DimensionPair {
            q,
            planar: fit(&mu, &levels)?,
            lifted: fit(&lifted, &sphere_levels)?,
        });
    }

    if let Some(p) = &a.csv {
        write_lifted_csv(create(p)?, &lifted)?;
    }
    let report = LiftReport {
        atoms: mu.len(),
        round_trip_error: round_trip,
        band,
        transfer,
        planar_levels: levels,
        sphere_levels,
        dimensions,
    };
    if let Some(p) = &a.json {
        write_json(p, &report)?;
    }
    if a.csv.is_none() && a.json.is_none() {
        write_lifted_csv(io::stdout().lock(), &lifted)?;
    }
    let (lo, hi) = report.band.inverse_ratio_band();
    eprintln!(
        "{} atoms lifted; round trip error {:.2e}; r/r' in [{lo:.4}, {hi:.4}]",
        report.atoms, report.round_trip_error
    );
    eprintln!(
        "doubling: C_plane = {:.3}, C_sphere = {:.3}, bound C_plane^{} = {:.3} ({})",
        report.transfer.c_plane,
        report.transfer.c_sphere,
        report.transfer.m + 1,
        report.transfer.bound,
        if report.transfer.holds { "holds" } else { "violated" }
    );
    for d in &report.dimensions {
        eprintln!("q = {}: planar dim ≈ {:.4}, lifted dim ≈ {:.4}", d.q, d.planar, d.lifted);
    }
    if !report.transfer.holds {
        return Err(Failure::Invariant(format!(
            "lifted doubling constant {} exceeds the transfer bound {}",
            report.transfer.c_sphere, report.transfer.bound
        )));
    }
    Ok(())
}
