//! Batch check suites and their report files.
//!
//! Every instance draws from its own stream keyed by `(seed, ensemble, id)`
//! and tasks are collected in order, so reports do not depend on the number
//! of workers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean::{self, BooleanFunction, FunctionFile};
use crate::check::CheckReport;
use crate::design::{self, Povm, ProductPovm, VerifiedDesign};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMatrix, ONE, ZERO};
use crate::moments::{self, StateDifference};
use crate::pauli::{self, HermitianOperator, OperatorSource, Spectrum};
use crate::rng;
use crate::xor::{self, GameResultRow, MultilinearForm, XorGame};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// Exit status for an error.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownSuite(_) => EXIT_USAGE,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Boolean,
    Pauli,
    Moments,
    Design,
    Xor,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Boolean, Suite::Pauli, Suite::Moments, Suite::Design, Suite::Xor];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Boolean => "boolean",
            Suite::Pauli => "pauli",
            Suite::Moments => "moments",
            Suite::Design => "design",
            Suite::Xor => "xor",
        }
    }

    /// `all` expands to every suite.
    pub fn parse_selection(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Self::ALL.to_vec());
        }
        Ok(vec![name.parse()?])
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Instance counts per ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub boolean_random: usize,
    pub boolean_low_degree: usize,
    pub pauli_roundtrip: usize,
    pub pauli_depolarize: usize,
    pub pauli_local: usize,
    pub moments_random: usize,
    pub moments_product: usize,
    pub monte_carlo_samples: usize,
    pub design_chain: usize,
    pub design_unipartite: usize,
    pub design_multipartite: usize,
    pub xor_k2: usize,
    pub xor_k3: usize,
    pub xor_local: usize,
    pub xor_blei: usize,
    pub xor_influence: usize,
    pub xor_aa: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Self {
            boolean_random: 1000,
            boolean_low_degree: 1000,
            pauli_roundtrip: 100,
            pauli_depolarize: 40,
            pauli_local: 1000,
            moments_random: 500,
            moments_product: 50,
            monte_carlo_samples: 100_000,
            design_chain: 50,
            design_unipartite: 200,
            design_multipartite: 100,
            xor_k2: 500,
            xor_k3: 100,
            xor_local: 50,
            xor_blei: 1000,
            xor_influence: 30,
            xor_aa: 50,
        }
    }
}

impl Counts {
    /// Small ensembles for quick runs.
    pub fn smoke() -> Self {
        Self {
            boolean_random: 20,
            boolean_low_degree: 20,
            pauli_roundtrip: 12,
            pauli_depolarize: 8,
            pauli_local: 10,
            moments_random: 20,
            moments_product: 5,
            monte_carlo_samples: 10_000,
            design_chain: 5,
            design_unipartite: 10,
            design_multipartite: 5,
            xor_k2: 20,
            xor_k3: 5,
            xor_local: 5,
            xor_blei: 20,
            xor_influence: 6,
            xor_aa: 6,
        }
    }
}

/// Size caps of the random ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub boolean_n: usize,
    pub low_degree_n: usize,
    pub pauli_n: usize,
    pub depolarize_n: usize,
    pub local_n: usize,
    pub local_k: usize,
    pub local_terms: usize,
    pub collective_n: usize,
    pub moments_n: usize,
    pub monte_carlo_n: usize,
    pub xor_n: usize,
    pub xor_k3_n: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            boolean_n: 8,
            low_degree_n: 10,
            pauli_n: 6,
            depolarize_n: 4,
            local_n: 8,
            local_k: 3,
            local_terms: 16,
            collective_n: 20,
            moments_n: 8,
            monte_carlo_n: 4,
            xor_n: 8,
            xor_k3_n: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub counts: Counts,
    pub caps: Caps,
    /// Replaces every check's own tolerance when set.
    pub tolerance: Option<f64>,
    /// Tensor-visit budget for exact XOR biases.
    pub xor_budget: u128,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Fill the `ms` column with wall times (breaks byte-identical reports).
    pub timings: bool,
    /// Fallback POVM for the design suite when the bundled one does not verify.
    pub povm: Option<Povm>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            counts: Counts::default(),
            caps: Caps::default(),
            tolerance: None,
            xor_budget: xor::DEFAULT_BUDGET,
            out_dir: None,
            jobs: 0,
            timings: false,
            povm: None,
        }
    }
}

/// One line of the CSV report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub ms: Option<f64>,
}

impl CheckRecord {
    pub fn new(suite: &str, id: impl Into<String>, r: &CheckReport, tolerance: Option<f64>) -> Self {
        let holds = match tolerance {
            Some(tol) => r.lhs <= r.rhs + tol,
            None => r.holds,
        };
        Self {
            suite: suite.to_string(),
            id: id.into(),
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            holds,
            ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Ok,
    Failed,
    /// No 4-design was available; the dependent checks were skipped.
    NoVerifiedDesign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub checks: usize,
    pub failures: usize,
    pub status: SuiteStatus,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub suites: Vec<SuiteSummary>,
    pub all_hold: bool,
    #[serde(skip)]
    pub records: Vec<CheckRecord>,
    #[serde(skip)]
    pub games: Vec<GameResultRow>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.all_hold {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.holds)
    }
}

#[derive(Default)]
struct TaskOutput {
    checks: Vec<(String, CheckReport)>,
    games: Vec<GameResultRow>,
}

impl TaskOutput {
    fn one(id: impl Into<String>, r: CheckReport) -> Self {
        Self {
            checks: vec![(id.into(), r)],
            games: Vec::new(),
        }
    }

    fn push(&mut self, id: impl Into<String>, r: CheckReport) {
        self.checks.push((id.into(), r));
    }
}

type Task<'a> = Box<dyn Fn() -> Result<TaskOutput> + Send + Sync + 'a>;

struct Plan<'a> {
    tasks: Vec<Task<'a>>,
    notes: Vec<String>,
    status: Option<SuiteStatus>,
}

impl<'a> Plan<'a> {
    fn new() -> Self {
        Self {
            tasks: Vec::new(),
            notes: Vec::new(),
            status: None,
        }
    }

    fn add(&mut self, task: impl Fn() -> Result<TaskOutput> + Send + Sync + 'a) {
        self.tasks.push(Box::new(task));
    }
}

/// Runs the named suite (or `all`) and writes reports when `out_dir` is set.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<RunReport> {
    let suites = Suite::parse_selection(name)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
    let report = pool.install(|| run_all(&suites, cfg))?;
    if let Some(dir) = &cfg.out_dir {
        write_reports(dir, &report)?;
    }
    Ok(report)
}

fn run_all(suites: &[Suite], cfg: &SuiteConfig) -> Result<RunReport> {
    let mut records = Vec::new();
    let mut games = Vec::new();
    let mut summaries = Vec::new();
    for &suite in suites {
        let plan = match suite {
            Suite::Boolean => boolean_plan(cfg),
            Suite::Pauli => pauli_plan(cfg),
            Suite::Moments => moments_plan(cfg),
            Suite::Design => design_plan(cfg)?,
            Suite::Xor => xor_plan(cfg),
        };
        let outputs: Vec<(Result<TaskOutput>, f64)> = plan
            .tasks
            .par_iter()
            .map(|task| {
                let start = Instant::now();
                let out = task();
                (out, start.elapsed().as_secs_f64() * 1e3)
            })
            .collect();
        let before = records.len();
        for (out, ms) in outputs {
            let out = out?;
            for (id, r) in &out.checks {
                let mut rec = CheckRecord::new(suite.name(), id.clone(), r, cfg.tolerance);
                if cfg.timings {
                    rec.ms = Some(ms);
                }
                records.push(rec);
            }
            games.extend(out.games);
        }
        let mine = &records[before..];
        let failures = mine.iter().filter(|r| !r.holds).count();
        let status = match (failures, plan.status) {
            (0, Some(s)) => s,
            (0, None) => SuiteStatus::Ok,
            _ => SuiteStatus::Failed,
        };
        summaries.push(SuiteSummary {
            suite,
            checks: mine.len(),
            failures,
            status,
            notes: plan.notes,
        });
    }
    let all_hold = records.iter().all(|r| r.holds);
    Ok(RunReport {
        seed: cfg.seed,
        suites: summaries,
        all_hold,
        records,
        games,
    })
}

pub fn write_records_csv<W: Write>(out: W, records: &[CheckRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.csv`, `summary.json` and, for XOR runs, `xor_games.csv`.
pub fn write_reports(dir: &Path, report: &RunReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_records_csv(std::fs::File::create(dir.join("report.csv"))?, &report.records)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    if !report.games.is_empty() {
        xor::write_results_csv(std::fs::File::create(dir.join("xor_games.csv"))?, &report.games)?;
    }
    Ok(())
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn boolean_plan(cfg: &SuiteConfig) -> Plan<'_> {
    let mut plan = Plan::new();
    let seed = cfg.seed;
    let eps = 1.0 / 3f64.sqrt();
    plan.add(|| {
        let e = boolean::fourier_transform(&BooleanFunction::majority(3)?);
        let expected = [0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, -0.5];
        let dev = e
            .coefficients()
            .iter()
            .zip(expected)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(TaskOutput::one("anchor/maj3-fourier", CheckReport::le(dev, 0.0, 1e-12)))
    });
    for n in 1..=6usize {
        plan.add(move || {
            let eps = 0.3;
            let mut out = TaskOutput::default();
            for s in 0..1usize << n {
                let chi = BooleanFunction::character(n, s)?;
                let smoothed = boolean::noise_operator(&chi, eps)?;
                let scale = eps.powi(s.count_ones() as i32);
                let dev = smoothed
                    .values()
                    .iter()
                    .zip(chi.values())
                    .fold(0.0f64, |m, (a, b)| m.max((a - scale * b).abs()));
                out.push(format!("anchor/noise-character/n{n}/s{s}"), CheckReport::le(dev, 0.0, 1e-12));
            }
            Ok(out)
        });
    }
    let hyper = move |f: &BooleanFunction, tag: String| -> Result<TaskOutput> {
        let mut out = TaskOutput::default();
        out.push(format!("{tag}/noise-2-4"), boolean::check_noise_hyper(f, 2.0, 4.0, eps)?);
        let r = boolean::check_low_degree_hyper(f, 4.0, Some(1.5))?;
        out.push(format!("{tag}/low-degree-q4"), r.upper);
        if let Some(lower) = r.lower {
            out.push(format!("{tag}/low-degree-p1.5"), lower);
        }
        let r = boolean::check_low_degree_hyper(f, 6.0, None)?;
        out.push(format!("{tag}/low-degree-q6"), r.upper);
        Ok(out)
    };
    let n = cfg.caps.boolean_n;
    for i in 0..cfg.counts.boolean_random {
        plan.add(move || {
            let mut r = rng::stream(seed, "boolean-random", i as u64);
            hyper(&boolean::random_function(&mut r, n)?, format!("random/{i}"))
        });
    }
    let n = cfg.caps.low_degree_n;
    for i in 0..cfg.counts.boolean_low_degree {
        plan.add(move || {
            let d = 1 + i % 3;
            let mut r = rng::stream(seed, "boolean-low-degree", i as u64);
            hyper(&boolean::random_low_degree(&mut r, n, d)?, format!("low-degree/d{d}/{i}"))
        });
    }
    plan
}

/// Normalized `(sum Z_i)^2` on `n` qubits from its integer diagonal.
pub fn normalized_collective_spectrum(n: usize) -> Result<Spectrum> {
    let raw = pauli::diagonal_spectrum(&pauli::collective_z_squared(n)?)?;
    let scale = (3.0 * (n * n) as f64 - 2.0 * n as f64).sqrt();
    Spectrum::from_eigenvalues(raw.eigenvalues().iter().map(|l| l / scale).collect())
}

/// `sum_{w : (n-2w)^2 / s >= t} C(n, w) / 2^n` with `s = sqrt(3n^2 - 2n)`.
pub fn collective_tail_oracle(n: usize, t: f64) -> f64 {
    let scale = (3.0 * (n * n) as f64 - 2.0 * n as f64).sqrt();
    let mut binom = 1u64;
    let mut count = 0u64;
    for w in 0..=n {
        let v = (n as f64 - 2.0 * w as f64).powi(2) / scale;
        if v >= t {
            count += binom;
        }
        binom = binom * (n - w) as u64 / (w + 1) as u64;
    }
    count as f64 / (1u64 << n) as f64
}

/// Grid `{2e, 6, 8, 10, max lambda}` of the collective tail check.
pub fn collective_grid(sp: &Spectrum) -> Vec<f64> {
    vec![2.0 * std::f64::consts::E, 6.0, 8.0, 10.0, sp.operator_norm()]
}

fn pauli_plan(cfg: &SuiteConfig) -> Plan<'_> {
    let mut plan = Plan::new();
    let seed = cfg.seed;
    let caps = &cfg.caps;
    for i in 0..cfg.counts.pauli_roundtrip {
        let n = 1 + i % caps.pauli_n;
        plan.add(move || {
            let mut r = rng::stream(seed, "pauli-roundtrip", i as u64);
            let m = HermitianOperator::new(rng::hermitian(&mut r, 1 << n))?;
            let e = pauli::pauli_decompose(&m)?;
            let back = pauli::pauli_synthesize(&e)?;
            let mut out = TaskOutput::default();
            out.push(
                format!("roundtrip/n{n}/{i}"),
                CheckReport::le(max_abs_diff(m.matrix(), back.matrix()), 0.0, 1e-9),
            );
            let frob = frobenius_sq(m.matrix()) / m.dim() as f64;
            out.push(format!("parseval/n{n}/{i}"), CheckReport::close(e.weight(), frob, 1e-9));
            Ok(out)
        });
    }
    for i in 0..cfg.counts.pauli_depolarize {
        let n = 1 + i % caps.depolarize_n;
        plan.add(move || {
            let mut r = rng::stream(seed, "pauli-depolarize", i as u64);
            let m = HermitianOperator::new(rng::hermitian(&mut r, 1 << n))?;
            let eps = r.random_range(-1.0 / 3.0..=1.0);
            let a = pauli::depolarize(&m, eps)?;
            let b = pauli::depolarize_by_channels(&m, eps)?;
            Ok(TaskOutput::one(
                format!("depolarize/n{n}/{i}"),
                CheckReport::le(max_abs_diff(a.matrix(), b.matrix()), 0.0, 1e-9),
            ))
        });
    }
    let n = caps.collective_n;
    plan.add(move || {
        let sp = normalized_collective_spectrum(n)?;
        let mut out = TaskOutput::default();
        for (j, t) in collective_grid(&sp).into_iter().enumerate() {
            out.push(format!("collective/n{n}/tail/{j}"), pauli::check_tail_spectrum(&sp, 2, t)?);
            out.push(
                format!("collective/n{n}/oracle/{j}"),
                CheckReport::close(sp.tail_fraction(t)?, collective_tail_oracle(n, t), 0.0),
            );
        }
        Ok(out)
    });
    let (n, k, terms) = (caps.local_n, caps.local_k, caps.local_terms);
    let t = pauli::tail_threshold(k);
    for i in 0..cfg.counts.pauli_local {
        plan.add(move || {
            let mut r = rng::stream(seed, "pauli-local", i as u64);
            let e = pauli::random_local_expansion(&mut r, n, k, terms)?;
            let locality = pauli::locality(&e);
            let sp = pauli::spectrum(&pauli::pauli_synthesize(&e)?, false)?;
            let mut out = TaskOutput::default();
            out.push(format!("local/{i}/q4"), pauli::check_q_hyper_spectrum(&sp, locality, 4.0)?);
            out.push(format!("local/{i}/tail"), pauli::check_tail_spectrum(&sp, locality, t)?);
            Ok(out)
        });
    }
    plan
}

/// `diag(1/2, -1/2)`.
pub fn half_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE * 0.5, ZERO, ZERO, ONE * -0.5])
}

fn moments_plan(cfg: &SuiteConfig) -> Plan<'_> {
    let mut plan = Plan::new();
    let seed = cfg.seed;
    plan.add(|| {
        let d = StateDifference::single(half_z())?;
        let mut out = TaskOutput::default();
        out.push("anchor/qubit-t2", CheckReport::close(moments::haar_moment(&d, 2)?, 1.0 / 12.0, 1e-12));
        out.push("anchor/qubit-t4", CheckReport::close(moments::haar_moment(&d, 4)?, 1.0 / 80.0, 1e-12));
        Ok(out)
    });
    let max_n = cfg.caps.moments_n;
    for i in 0..cfg.counts.moments_random {
        let n = 2 + i % (max_n - 1).max(1);
        plan.add(move || {
            let mut r = rng::stream(seed, "moments-random", i as u64);
            let d = moments::random_difference(&mut r, vec![n])?;
            let mut out = TaskOutput::default();
            out.push(
                format!("closed-form/n{n}/{i}"),
                CheckReport::close(moments::second_moment_closed_form(&d)?, moments::haar_moment(&d, 2)?, 1e-12),
            );
            out.push(format!("ratio-q4/n{n}/{i}"), moments::moment_ratio_check(&d, 4)?);
            Ok(out)
        });
    }
    let samples = cfg.counts.monte_carlo_samples;
    for n in 2..=cfg.caps.monte_carlo_n {
        for t in [2usize, 4] {
            plan.add(move || {
                let mut r = rng::stream(seed, "moments-mc-delta", (n * 10 + t) as u64);
                let d = moments::random_difference(&mut r, vec![n])?;
                let exact = moments::haar_moment(&d, t)?;
                let est = moments::monte_carlo_moment(&d, t, samples, seed ^ (n * 10 + t) as u64)?;
                Ok(TaskOutput::one(
                    format!("monte-carlo/n{n}/t{t}"),
                    CheckReport::le((est.mean - exact).abs(), 5.0 * est.std_error, 0.0),
                ))
            });
        }
    }
    for i in 0..cfg.counts.moments_product {
        plan.add(move || {
            let mut r = rng::stream(seed, "moments-product", i as u64);
            let d = moments::random_difference(&mut r, vec![2, 2])?;
            Ok(TaskOutput::one(format!("product-ratio/{i}"), moments::product_moment_ratio_check(&d)?))
        });
    }
    plan
}

/// The bundled 4-design, or the configured fallback if it verifies.
fn four_design(cfg: &SuiteConfig, notes: &mut Vec<String>) -> Result<Option<VerifiedDesign>> {
    if let Some(d) = design::bundled_four_design()? {
        notes.push(format!("bundled icosahedron POVM verified as a 4-design (deviation {:.3e})", d.deviation()));
        return Ok(Some(d));
    }
    notes.push("bundled icosahedron POVM did not verify at t=4".into());
    if let Some(m) = &cfg.povm {
        match VerifiedDesign::verify(m.clone(), 4) {
            Ok(d) => {
                notes.push("using the supplied POVM as the 4-design".into());
                return Ok(Some(d));
            }
            Err(Error::UnverifiedDesign { .. } | Error::NotRankOne) => {
                notes.push("supplied POVM is not a 4-design".into());
            }
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

fn design_plan(cfg: &SuiteConfig) -> Result<Plan<'_>> {
    let mut plan = Plan::new();
    let seed = cfg.seed;
    plan.add(|| {
        let mub = design::mub_povm()?;
        let two = design::check_design(&mub, 2)?;
        let four = design::check_design(&mub, 4)?;
        let mut out = TaskOutput::default();
        out.push("mub/t2-accepted", two.report);
        out.push("mub/t4-rejected", CheckReport::le(design::DESIGN_TOL, four.report.lhs, 0.0));
        Ok(out)
    });
    let Some(d) = four_design(cfg, &mut plan.notes)? else {
        plan.notes.push("no verified 4-design".into());
        plan.status = Some(SuiteStatus::NoVerifiedDesign);
        return Ok(plan);
    };
    let dim = d.povm().dim();
    let d = std::sync::Arc::new(d);
    for i in 0..cfg.counts.design_chain {
        let d = d.clone();
        plan.add(move || {
            let mut r = rng::stream(seed, "design-chain", i as u64);
            let delta = moments::random_difference(&mut r, vec![dim])?;
            Ok(TaskOutput::one(format!("chain/{i}"), design::fourth_moment_chain(&d, &delta)?.report))
        });
    }
    for i in 0..cfg.counts.design_unipartite {
        let d = d.clone();
        plan.add(move || {
            let mut r = rng::stream(seed, "design-unipartite", i as u64);
            let delta = moments::random_difference(&mut r, vec![dim])?;
            Ok(TaskOutput::one(format!("unipartite/{i}"), design::check_unipartite_bound(&d, &delta)?))
        });
    }
    let product = std::sync::Arc::new(ProductPovm::power(&d, 2)?);
    for i in 0..cfg.counts.design_multipartite {
        let product = product.clone();
        plan.add(move || {
            let mut r = rng::stream(seed, "design-multipartite", i as u64);
            let delta = moments::random_difference(&mut r, vec![dim, dim])?;
            let rep = design::check_multipartite_bound(&product, &delta)?;
            let mut out = TaskOutput::default();
            out.push(format!("multipartite/{i}/bound"), rep.bound);
            out.push(format!("multipartite/{i}/intermediate"), rep.intermediate);
            Ok(out)
        });
    }
    if dim == 2 {
        let d = d.clone();
        plan.add(move || {
            let single = StateDifference::single(half_z())?;
            let mut biases = Vec::new();
            for k in 1..=3 {
                let delta = StateDifference::tensor(&vec![single.clone(); k])?;
                biases.push(design::product_measurement_bias(&ProductPovm::power(&d, k)?, &delta)?);
            }
            let mut out = TaskOutput::default();
            for k in 1..3 {
                let (next, prev) = (biases[k], biases[k - 1]);
                out.push(
                    format!("power-bias/k{k}-k{}", k + 1),
                    CheckReport {
                        holds: next < prev,
                        ..CheckReport::le(next, prev, 0.0)
                    },
                );
            }
            Ok(out)
        });
    }
    Ok(plan)
}

/// Exact bias under `budget`.
fn exact_beta(g: &XorGame, budget: u128) -> Result<f64> {
    Ok(xor::bias_exact_form(&g.form(), budget)?.value)
}

const INFLUENCE_SHAPES: [(usize, usize); 6] = [(2, 7), (3, 4), (4, 3), (7, 2), (2, 5), (3, 3)];
const AA_SHAPES: [(usize, usize); 5] = [(2, 2), (2, 4), (3, 3), (4, 2), (2, 8)];

fn xor_plan(cfg: &SuiteConfig) -> Plan<'_> {
    let mut plan = Plan::new();
    let seed = cfg.seed;
    let budget = cfg.xor_budget;
    plan.add(move || {
        let g = XorGame::chsh();
        let b = xor::bias_exact_form(&g.form(), budget)?;
        let mut out = TaskOutput::default();
        out.push("chsh/bias", CheckReport::close(b.value, 0.5, 0.0));
        out.push("chsh/witness", CheckReport::close(xor::evaluate(&g.form(), &b.witness)?, 0.5, 0.0));
        out.push(
            "chsh/bh-norm",
            CheckReport::close(xor::bh_norm(&g.form(), 4.0 / 3.0)?, std::f64::consts::FRAC_1_SQRT_2, 1e-12),
        );
        let bh = xor::check_bh_with(&g.form(), b.value)?;
        out.push("chsh/bh-saturation", CheckReport::close(bh.lhs, bh.rhs, xor::BH_TOL));
        out.push("constant/c1", CheckReport::close(xor::bh_constant(1)?.value, 1.0, 1e-12));
        out.push("constant/c4", CheckReport::close(xor::bh_constant(4)?.value, 3.0 * 2f64.sqrt(), 1e-12));
        Ok(out)
    });
    let game_task = move |label: &'static str, i: usize, k: usize, n: usize| -> Result<TaskOutput> {
        let mut r = rng::stream(seed, label, i as u64);
        let g = xor::random_game(&mut r, k, n)?;
        let beta = exact_beta(&g, budget)?;
        let id = format!("k{k}/n{n}/{i}");
        let mut out = TaskOutput::default();
        out.push(format!("{id}/bh"), xor::check_bh_with(&g.form(), beta)?);
        out.push(format!("{id}/lower"), xor::check_bias_lower_with(&g, beta)?);
        out.games.push(GameResultRow::evaluate(id, &g, beta)?);
        Ok(out)
    };
    for i in 0..cfg.counts.xor_k2 {
        let n = 1 + i % cfg.caps.xor_n;
        plan.add(move || game_task("xor-k2", i, 2, n));
    }
    for i in 0..cfg.counts.xor_k3 {
        let n = cfg.caps.xor_k3_n;
        plan.add(move || game_task("xor-k3", i, 3, n));
    }
    for i in 0..cfg.counts.xor_local {
        plan.add(move || {
            let mut r = rng::stream(seed, "xor-local", i as u64);
            let g = xor::random_game(&mut r, 3, 3)?;
            let exact = exact_beta(&g, budget)?;
            let local = xor::bias_local_search(&g, 4, seed ^ i as u64)?;
            Ok(TaskOutput::one(format!("local-search/{i}"), CheckReport::le(local.value, exact, 1e-12)))
        });
    }
    for i in 0..cfg.counts.xor_blei {
        plan.add(move || {
            let mut r = rng::stream(seed, "xor-blei", i as u64);
            let rows = r.random_range(1..=16);
            let cols = r.random_range(1..=16);
            let m = r.random_range(1.0..=4.0);
            let a = nalgebra::DMatrix::from_fn(rows, cols, |_, _| rng::normal(&mut r));
            Ok(TaskOutput::one(format!("blei/{rows}x{cols}/{i}"), xor::blei_check(&a, m)?))
        });
    }
    for i in 0..cfg.counts.xor_influence {
        let (k, n) = INFLUENCE_SHAPES[i % INFLUENCE_SHAPES.len()];
        plan.add(move || {
            let mut r = rng::stream(seed, "xor-influence", i as u64);
            let f = xor::random_game(&mut r, k, n)?.form();
            let e = boolean::fourier_transform(&xor::induced_function(&f)?);
            let mut worst = 0.0f64;
            for j in 1..=k {
                for l in 1..=n {
                    let a = xor::influence_form(&f, j, l)?;
                    let b = boolean::influence(&e, (j - 1) * n + l)?;
                    worst = worst.max((a - b).abs());
                }
            }
            Ok(TaskOutput::one(format!("influence/k{k}/n{n}/{i}"), CheckReport::le(worst, 0.0, 1e-10)))
        });
    }
    for i in 0..cfg.counts.xor_aa {
        let (k, n) = AA_SHAPES[i % AA_SHAPES.len()];
        plan.add(move || {
            let mut r = rng::stream(seed, "xor-aa", i as u64);
            let alpha = (n as f64).powi(-(k as i32));
            let f = xor::random_sign_form(&mut r, k, n, alpha)?;
            Ok(TaskOutput::one(format!("aa/k{k}/n{n}/{i}"), xor::check_aa_special(&f)?.report))
        });
    }
    plan
}

/// Tail check at each grid point; the operator is rescaled to `|M|_2 = 1`.
pub fn tail_records(source: &OperatorSource, grid: &[f64], tolerance: Option<f64>) -> Result<(Vec<CheckRecord>, Vec<String>)> {
    let k = pauli::locality(&source.expansion()?);
    let sp = source.spectrum()?;
    let norm2 = sp.schatten(2.0)?;
    if norm2 == 0.0 {
        return Err(Error::ZeroOperator);
    }
    let sp = Spectrum::from_eigenvalues(sp.eigenvalues().iter().map(|l| l / norm2).collect())?;
    let threshold = pauli::tail_threshold(k);
    let mut notes = vec![format!("locality k = {k}, |M|_2 = {norm2}, threshold (2e)^(k/2) = {threshold}")];
    let mut records = Vec::new();
    for &t in grid {
        if t < threshold {
            notes.push(format!("t = {t} skipped: below threshold"));
            continue;
        }
        let r = pauli::check_tail_spectrum(&sp, k, t)?;
        records.push(CheckRecord::new("tail", format!("t={t}"), &r, tolerance));
    }
    Ok((records, notes))
}

/// Design check at every order up to `t`.
pub fn design_records(m: &Povm, t: usize, tolerance: Option<f64>) -> Result<(Vec<CheckRecord>, usize)> {
    let rep = design::check_design(m, t)?;
    let mut records = vec![CheckRecord::new(
        "design-check",
        "completeness",
        &CheckReport::le(m.completeness_deviation(), 0.0, design::COMPLETENESS_TOL),
        tolerance,
    )];
    for &(s, dev) in &rep.deviations {
        records.push(CheckRecord::new(
            "design-check",
            format!("t={s}"),
            &CheckReport::le(dev, 0.0, design::DESIGN_TOL),
            tolerance,
        ));
    }
    Ok((records, rep.verified_order()))
}

/// Moment values for a state difference file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub dims: Vec<usize>,
    pub t: usize,
    /// `E[(tr Delta psi)^t]` over Haar-random global states.
    pub haar_moment: f64,
    /// Same over products of Haar-random local states.
    pub product_moment: Option<f64>,
    pub records: Vec<CheckRecord>,
}

pub fn moment_summary(delta: &StateDifference, t: usize, tolerance: Option<f64>) -> Result<MomentSummary> {
    if t != 2 && t != 4 {
        return Err(Error::InvalidParameter(format!("t must be 2 or 4, got {t}")));
    }
    let haar = moments::haar_moment(delta, t)?;
    let mut records = Vec::new();
    if t == 2 {
        let closed = moments::second_moment_closed_form(delta)?;
        records.push(CheckRecord::new("moments", "closed-form", &CheckReport::close(closed, haar, 1e-12), tolerance));
    } else {
        records.push(CheckRecord::new("moments", "ratio-q4", &moments::moment_ratio_check(delta, 4)?, tolerance));
    }
    let product_moment = if delta.parties() > 1 {
        let value = moments::product_haar_moment(delta, t)?;
        if t == 4 {
            records.push(CheckRecord::new(
                "moments",
                "product-ratio",
                &moments::product_moment_ratio_check(delta)?,
                tolerance,
            ));
        }
        Some(value)
    } else {
        None
    };
    Ok(MomentSummary {
        dims: delta.dims().to_vec(),
        t,
        haar_moment: haar,
        product_moment,
        records,
    })
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Human-readable summary of any supported input file.
pub fn describe(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    describe_str(&text)
}

pub fn describe_str(text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Parse("expected a JSON object at the top level".into()))?;
    let has = |key: &str| obj.contains_key(key);
    let mut s = String::new();
    if has("pi") {
        let g: XorGame = serde_json::from_value::<xor::GameFile>(value).map_err(parse_err)?.try_into()?;
        let pi = if g.is_uniform() { "uniform π" } else { "non-uniform π" };
        write!(s, "XOR game, k={}, n={}, {pi}", g.k(), g.n()).ok();
    } else if has("coeffs") {
        let f: MultilinearForm = serde_json::from_value::<xor::FormFile>(value).map_err(parse_err)?.try_into()?;
        write!(
            s,
            "multilinear form, k={}, n={}, l1 norm {}, variance {}",
            f.k(),
            f.n(),
            f.l1_norm(),
            f.variance()
        )
        .ok();
    } else if has("elements") || has("vectors") {
        let m: Povm = serde_json::from_value::<design::PovmFile>(value).map_err(parse_err)?.try_into()?;
        let kind = if m.is_rank_one() { "rank-one POVM" } else { "POVM" };
        write!(
            s,
            "{kind}, dim {}, {} elements, completeness deviation {:.3e}",
            m.dim(),
            m.len(),
            m.completeness_deviation()
        )
        .ok();
        if m.is_rank_one() {
            let max_t = (1..=design::MAX_DESIGN_ORDER)
                .rev()
                .find(|&t| m.dim().checked_pow(t as u32).is_some_and(|x| x <= 4096))
                .unwrap_or(1);
            let rep = design::check_design(&m, max_t)?;
            write!(s, ", verified t-design order: {} (checked up to {max_t})", rep.verified_order()).ok();
        }
    } else if has("n_qubits") {
        let src: OperatorSource = serde_json::from_value::<pauli::OperatorFile>(value).map_err(parse_err)?.try_into()?;
        let e = src.expansion()?;
        let form = match src {
            OperatorSource::Dense(_) => "dense",
            OperatorSource::Terms(_) => "Pauli terms",
        };
        write!(
            s,
            "Hermitian operator ({form}), {} qubits, {} Pauli terms, locality {}, normalized 2-norm {}",
            src.n_qubits(),
            e.len(),
            pauli::locality(&e),
            e.weight().sqrt()
        )
        .ok();
    } else if has("rho") || has("raw") {
        let d: StateDifference = serde_json::from_value::<moments::DeltaFile>(value).map_err(parse_err)?.try_into()?;
        let kind = if d.is_raw() { "raw operator" } else { "weighted state difference" };
        write!(
            s,
            "{kind}, parties {:?}, tr Δ = {}, tr Δ² = {}",
            d.dims(),
            d.trace(),
            d.trace_sq()
        )
        .ok();
    } else if has("values") {
        let f: BooleanFunction = serde_json::from_value::<FunctionFile>(value).map_err(parse_err)?.try_into()?;
        let e = boolean::fourier_transform(&f);
        write!(
            s,
            "Boolean function, n={}, degree {}, variance {}, total influence {}",
            f.arity(),
            boolean::degree(&e),
            boolean::variance(&e),
            boolean::total_influence(&e)
        )
        .ok();
    } else if has("re") {
        let v = serde_json::from_value::<pauli::StateFile>(value).map_err(parse_err)?.to_vector()?;
        write!(s, "state vector, dim {}, norm {}", v.len(), v.norm()).ok();
    } else {
        return Err(Error::Parse("unrecognized input format".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke(seed: u64) -> SuiteConfig {
        SuiteConfig {
            seed,
            counts: Counts::smoke(),
            ..SuiteConfig::default()
        }
    }

    fn csv_bytes(report: &RunReport) -> Vec<u8> {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &report.records).unwrap();
        buf
    }

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse_selection("all").unwrap().len(), 5);
        assert_eq!(Suite::parse_selection("xor").unwrap(), vec![Suite::Xor]);
        let e = Suite::parse_selection("bogus").unwrap_err();
        assert_eq!(error_exit_code(&e), EXIT_USAGE);
    }

    #[test]
    fn boolean_suite_holds() {
        let report = run_suite("boolean", &smoke(1)).unwrap();
        assert!(report.all_hold, "{:?}", report.failures().collect::<Vec<_>>());
        assert_eq!(report.exit_code(), EXIT_OK);
        assert_eq!(report.suites[0].status, SuiteStatus::Ok);
    }

    #[test]
    fn xor_budget_zero_is_reported() {
        let cfg = SuiteConfig {
            xor_budget: 0,
            ..smoke(2)
        };
        let e = run_suite("xor", &cfg).unwrap_err();
        assert_eq!(error_exit_code(&e), EXIT_BUDGET);
    }

    #[test]
    fn csv_is_deterministic_and_has_fixed_columns() {
        let a = run_suite("xor", &smoke(3)).unwrap();
        let b = run_suite("xor", &SuiteConfig { jobs: 3, ..smoke(3) }).unwrap();
        assert_eq!(csv_bytes(&a), csv_bytes(&b));
        let text = String::from_utf8(csv_bytes(&a)).unwrap();
        assert!(text.starts_with("suite,id,lhs,rhs,margin,holds,ms\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",true,"));
    }

    #[test]
    fn tolerance_override_reclassifies() {
        let r = CheckReport::le(1.0, 0.9, 0.2);
        assert!(CheckRecord::new("x", "a", &r, None).holds);
        assert!(!CheckRecord::new("x", "a", &r, Some(0.0)).holds);
    }

    #[test]
    fn collective_oracle_matches_spectrum() {
        let sp = normalized_collective_spectrum(10).unwrap();
        for t in [0.0, 1.0, 2.5, 5.0, sp.operator_norm()] {
            assert_eq!(sp.tail_fraction(t).unwrap(), collective_tail_oracle(10, t));
        }
        assert!((sp.schatten(2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn describe_formats() {
        let chsh = r#"{"k": 2, "n": 2, "pi": [0.25, 0.25, 0.25, 0.25], "A": [1, 1, 1, -1]}"#;
        assert_eq!(describe_str(chsh).unwrap(), "XOR game, k=2, n=2, uniform π");
        let ico = describe_str(include_str!("../data/icosahedron.json")).unwrap();
        assert!(ico.starts_with("rank-one POVM, dim 2, 12 elements"), "{ico}");
        assert!(ico.contains("verified t-design order: 4"), "{ico}");
        let e = describe_str("{\"k\": 2,\n \"n\": }").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(describe_str(r#"{"what": 1}"#).is_err());
        assert!(describe_str(r#"{"n": 2, "values": [1, 1, 1, -1]}"#).unwrap().contains("degree 2"));
    }

    #[test]
    fn tail_records_skip_low_points() {
        let src = pauli::parse_operator(r#"{"n_qubits": 3, "terms": [{"s": "ZZI", "c": 2}, {"s": "IZZ", "c": 2}]}"#)
            .unwrap();
        let (records, notes) = tail_records(&src, &[1.0, 6.0], None).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].holds);
        assert!(notes.iter().any(|n| n.contains("skipped")));
    }
}
