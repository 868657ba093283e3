use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ckm_core::geometry::opt_k;
use ckm_core::io::{load_dataset, write_dataset_csv, write_json, write_list_cache, SolutionDoc};
use ckm_core::kmedian::{list_k_median, visit_k_median, MedianParams};
use ckm_core::listkmeans::{list_k_means, visit_k_means, ListParams};
use ckm_core::lowerbound::{
    build_instance, build_instance_m, counting_report, opt_equal_partition,
    residual_decomposition, CountingReport,
};
use ckm_core::oracle::{brute_force_opt, verify_list_quality, EnumerationSpec, MAX_POINTS};
use ckm_core::partition::{BestPartition, BestSoFar};
use ckm_core::sampling::DistanceMode;
use ckm_core::subsets::binomial;
use ckm_core::tree::TreeStats;
use ckm_core::{
    CenterSet, Clustering, ConstraintFamily, Dataset64, Error, ParamMode, Problem, Rational,
    RngStream,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, ListArgs, ListOpts, LowerboundArgs, SolveArgs, VerifyArgs};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_BELOW_THRESHOLD: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => EXIT_IO,
            Error::Csv(c) if c.is_io_error() => EXIT_IO,
            Error::Json(j) if j.is_io() => EXIT_IO,
            Error::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<(), Failure>;

fn load(path: &Path) -> Result<Dataset64, Failure> {
    load_dataset(path).map_err(|e| match e {
        Error::Io(io) => io_failure(path, io),
        other => {
            let mut f = Failure::from(other);
            f.message = format!("{}: {}", path.display(), f.message);
            f
        }
    })
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(p, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<B: Serialize>(value: &B, path: Option<&PathBuf>) -> CmdResult {
    let mut out = open_output(path)?;
    write_json(value, &mut out)?;
    out.flush().map_err(Error::from)?;
    Ok(())
}

/// List parameters resolved from the command line.
#[derive(Debug, Clone)]
pub enum ListSpec {
    Means(ListParams),
    Median(MedianParams),
}

impl ListSpec {
    pub fn problem(&self) -> Problem {
        match self {
            ListSpec::Means(_) => Problem::KMeans,
            ListSpec::Median(_) => Problem::KMedian,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            ListSpec::Means(p) => p.k,
            ListSpec::Median(p) => p.k,
        }
    }

    fn objective(&self) -> DistanceMode {
        match self {
            ListSpec::Means(_) => DistanceMode::Squared,
            ListSpec::Median(_) => DistanceMode::Linear,
        }
    }
}

fn parse_budget(s: &str) -> Result<Option<u64>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    s.parse::<u64>()
        .map(Some)
        .map_err(|_| Failure::config(format!("subset budget must be a count or `all`, got {s:?}")))
}

fn default_counts(k: usize, epsilon: f64) -> Result<(u64, usize, u64), Failure> {
    if k == 0 || !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Failure::config(format!(
            "need k >= 1 and epsilon in (0, 1], got k = {k}, epsilon = {epsilon}"
        )));
    }
    let n = (8.0 * k as f64 / epsilon).ceil() as u64;
    let m = ((2.0 / epsilon).ceil() as u64).min(n) as usize;
    let repeats = 1u64
        .checked_shl(k as u32)
        .filter(|_| k < 64)
        .ok_or_else(|| Failure::config(format!("2^{k} repeats overflow")))?;
    Ok((n, m, repeats))
}

pub fn list_spec(o: &ListOpts) -> Result<ListSpec, Failure> {
    let problem = Problem::from(o.problem);
    let mode = ParamMode::from(o.mode);
    if mode == ParamMode::Exact {
        if o.sample_size.is_some()
            || o.subset_size.is_some()
            || o.repeats.is_some()
            || o.subset_budget.is_some()
        {
            return Err(Failure::config(
                "exact mode fixes N, M, repeats and the subset budget; drop the overrides",
            ));
        }
        let spec = match problem {
            Problem::KMeans => ListSpec::Means(ListParams::exact(o.k, o.epsilon)?),
            Problem::KMedian => {
                let mut p = MedianParams::exact(o.k, o.epsilon, o.alpha, o.beta)?;
                p.generator = o.generator.into();
                ListSpec::Median(p)
            }
        };
        check_exact_size(&spec)?;
        return Ok(spec);
    }
    let (n, m, r) = default_counts(o.k, o.epsilon)?;
    let budget = match &o.subset_budget {
        Some(s) => parse_budget(s)?,
        None => Some(64),
    };
    let n = o.sample_size.unwrap_or(n);
    let m = o.subset_size.unwrap_or(m);
    let r = o.repeats.unwrap_or(r);
    Ok(match problem {
        Problem::KMeans => ListSpec::Means(ListParams::practical(o.k, o.epsilon, n, m, r, budget)?),
        Problem::KMedian => {
            let mut p =
                MedianParams::practical(o.k, o.epsilon, n, m, r, budget, o.generator.into())?;
            p.alpha = o.alpha;
            p.beta = o.beta;
            p.validate()?;
            ListSpec::Median(p)
        }
    })
}

/// Largest per-node subset count an exact-mode run may enumerate.
pub const EXACT_SUBSET_LIMIT: u128 = 1_000_000_000;

fn check_exact_size(spec: &ListSpec) -> CmdResult {
    let (k, n, m) = match spec {
        ListSpec::Means(p) => (p.k, p.sample_size, p.subset_size),
        ListSpec::Median(p) => (p.k, p.sample_size, p.subset_size),
    };
    let pool = n.saturating_add((k as u64 - 1).saturating_mul(m as u64));
    let count = binomial(pool, m as u64);
    if count > EXACT_SUBSET_LIMIT {
        let shown = if count == u128::MAX {
            "at least 2^128 - 1".to_string()
        } else {
            count.to_string()
        };
        return Err(Failure::config(format!(
            "exact mode needs N = {n}, M = {m}: up to C({pool}, {m}) = {shown} subsets per node; \
             use --mode practical"
        )));
    }
    Ok(())
}

/// Output of `solve`: the solution plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(flatten)]
    pub solution: SolutionDoc<f64>,
    pub seed: u64,
    /// Number of center sets in the candidate list.
    pub candidates: u64,
}

fn best_partition(
    data: &Dataset64,
    spec: &ListSpec,
    family: &ConstraintFamily,
    seed: u64,
) -> Result<(ckm_core::Solution64, TreeStats), Failure> {
    family.validate(data.len(), spec.k())?;
    let visitor = BestPartition {
        data,
        family,
        objective: spec.objective(),
    };
    let (acc, stats): (ckm_core::Result<BestSoFar<f64>>, TreeStats) = match spec {
        ListSpec::Means(p) => visit_k_means(data, p, seed, &visitor)?,
        ListSpec::Median(p) => visit_k_median(data, p, seed, &visitor)?,
    };
    Ok((visitor.finish(acc)?, stats))
}

fn report_stats(verbose: bool, stats: &TreeStats) {
    if verbose {
        eprintln!(
            "tree: {} nodes, {} subsets, {} candidate sets",
            stats.nodes, stats.subsets, stats.leaves
        );
    }
}

pub fn solve(a: &SolveArgs, verbose: bool) -> CmdResult {
    let spec = list_spec(&a.list)?;
    let data = load(&a.input)?;
    let (solution, stats) = best_partition(&data, &spec, &a.constraint, a.list.seed)?;
    report_stats(verbose, &stats);
    let report = SolveReport {
        solution: SolutionDoc::new(spec.problem(), &solution),
        seed: a.list.seed,
        candidates: stats.leaves,
    };
    emit_json(&report, a.output.as_ref())
}

pub fn list(a: &ListArgs, verbose: bool) -> CmdResult {
    let spec = list_spec(&a.list)?;
    let data = load(&a.input)?;
    let (entries, stats) = match &spec {
        ListSpec::Means(p) => {
            let l = list_k_means(&data, p, a.list.seed)?;
            emit_json(&l, a.output.as_ref())?;
            (l.entries, l.stats)
        }
        ListSpec::Median(p) => {
            let l = list_k_median(&data, p, a.list.seed)?;
            emit_json(&l, a.output.as_ref())?;
            (l.entries, l.stats)
        }
    };
    report_stats(verbose, &stats);
    if let Some(path) = &a.cache {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        write_list_cache(&entries, file)?;
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs, verbose: bool) -> CmdResult {
    let spec = list_spec(&a.list)?;
    let ListSpec::Means(params) = spec else {
        return Err(Failure::config("verify supports k-means lists only"));
    };
    if let Some(r) = a.min_rate {
        if !(0.0..=1.0).contains(&r) {
            return Err(Failure::config(format!("min-rate must lie in [0, 1], got {r}")));
        }
    }
    let data = load(&a.input)?;
    if data.len() > MAX_POINTS {
        return Err(Failure::config(format!(
            "verify needs at most {MAX_POINTS} points, dataset has {}",
            data.len()
        )));
    }
    a.constraint.validate(data.len(), params.k)?;
    if a.target.is_none() {
        let bound = EnumerationSpec::new(data.len(), params.k, a.constraint.clone()).count_bound();
        if verbose {
            eprintln!("brute force over at most {bound} clusterings");
        }
    }
    let target = match &a.target {
        Some(labels) => Some(Clustering::new(labels.clone(), params.k)?),
        None => None,
    };
    let seeds: Vec<u64> = (0..a.trials).map(|i| a.list.seed.wrapping_add(i)).collect();
    let report = verify_list_quality(&data, &a.constraint, &params, &seeds, target.as_ref())?;
    emit_json(&report, a.output.as_ref())?;
    eprintln!(
        "success rate {:.4} ({} of {}), 99% lower bound {:.4}",
        report.rate, report.successes, report.trials, report.lower_bound_99
    );
    match a.min_rate {
        Some(r) if report.rate < r => Err(Failure {
            code: EXIT_BELOW_THRESHOLD,
            message: format!("success rate {} is below {r}", report.rate),
        }),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
pub struct IdentityCheck {
    pub trials: usize,
    /// Largest `|cost - opt - m·Σ||v_r||²| / max(1, cost)`.
    pub max_relative_residual: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Serialize)]
pub struct LowerboundReport {
    pub k: usize,
    pub epsilon: f64,
    pub m: usize,
    pub d: usize,
    /// `k(m - 1)`.
    pub opt: f64,
    /// Exact rational `opt_k` of the block partition equals `k(m - 1)`.
    pub opt_matches: bool,
    pub counting: CountingReport,
    pub identity_check: IdentityCheck,
}

pub const IDENTITY_TOLERANCE: f64 = 1e-9;

pub fn identity_check(k: usize, m: usize, trials: usize, seed: u64) -> Result<IdentityCheck, Failure> {
    let inst = build_instance_m::<f64>(k, m)?;
    let d = k * m;
    let mut rng = RngStream::new(seed).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut labels: Vec<usize> = (0..d).map(|j| j / m).collect();
        labels.shuffle(&mut rng);
        let o = Clustering::new(labels, k)?;
        let c = CenterSet::new(
            (0..k)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        )?;
        let dec = residual_decomposition(&c, &o, &inst)?;
        worst = worst.max(dec.residual / dec.cost.max(1.0));
    }
    Ok(IdentityCheck {
        trials,
        max_relative_residual: worst,
        within_tolerance: worst <= IDENTITY_TOLERANCE,
    })
}

pub fn lowerbound(a: &LowerboundArgs) -> CmdResult {
    let inst = build_instance::<f64>(a.k, a.epsilon)?;
    let (k, m) = (inst.k, inst.m);
    if let Some(path) = &a.instance {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        write_dataset_csv(&inst.data, file)?;
    }
    let exact = build_instance_m::<Rational>(k, m)?;
    let opt_matches =
        opt_k(&exact.block_clustering(), &exact.data)? == opt_equal_partition::<Rational>(k, m);
    let report = LowerboundReport {
        k,
        epsilon: a.epsilon,
        m,
        d: inst.d(),
        opt: opt_equal_partition(k, m),
        opt_matches,
        counting: counting_report(k, m)?,
        identity_check: identity_check(k, m, a.trials, a.seed)?,
    };
    emit_json(&report, a.output.as_ref())
}

/// Header of the `bench` table.
pub const BENCH_COLUMNS: [&str; 9] = [
    "sample_size",
    "subset_size",
    "subset_budget",
    "repeats",
    "candidates",
    "millis",
    "cost",
    "opt",
    "ratio",
];

pub fn bench(a: &BenchArgs, verbose: bool) -> CmdResult {
    let (_, _, default_repeats) = default_counts(a.k, a.epsilon)?;
    let repeats = a.repeats.unwrap_or(default_repeats);
    let mut grid = Vec::new();
    for &n in &a.sample_sizes {
        for &m in &a.subset_sizes {
            for &b in &a.budgets {
                grid.push(ListParams::practical(a.k, a.epsilon, n, m, repeats, Some(b))?);
            }
        }
    }
    let data = load(&a.input)?;
    a.constraint.validate(data.len(), a.k)?;
    let opt = if data.len() <= 12 {
        match brute_force_opt(&data, a.k, &a.constraint) {
            Ok((_, v)) => Some(v),
            Err(Error::EnumerationCap { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let mut out = open_output(a.output.as_ref())?;
    let mut write = |line: String| -> CmdResult {
        writeln!(out, "{line}").map_err(|e| Failure {
            code: EXIT_IO,
            message: e.to_string(),
        })
    };
    write(BENCH_COLUMNS.join(","))?;
    for p in &grid {
        let start = Instant::now();
        let (sol, stats) = best_partition(&data, &ListSpec::Means(p.clone()), &a.constraint, a.seed)?;
        let millis = start.elapsed().as_secs_f64() * 1e3;
        report_stats(verbose, &stats);
        let (opt_s, ratio_s) = match opt {
            Some(o) if o > 0.0 => (o.to_string(), (sol.cost / o).to_string()),
            Some(o) => (o.to_string(), String::new()),
            None => (String::new(), String::new()),
        };
        write(format!(
            "{},{},{},{},{},{:.3},{},{},{}",
            p.sample_size,
            p.subset_size,
            p.subset_budget.map_or("all".to_string(), |b| b.to_string()),
            p.repeats,
            stats.leaves,
            millis,
            sol.cost,
            opt_s,
            ratio_s
        ))?;
    }
    out.flush().map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    Ok(())
}
