//! Solver comparison harness: instances x solvers x seeds, one CSV row per
//! pipeline run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::energy::{
    generate_scenario, ScenarioConfig, ValueOracle, DEFAULT_EPSILON, DEFAULT_KAPPA, DEFAULT_TIMESTEPS,
};
use crate::error::{Error, Result};
use crate::exact::idp_solve;
use crate::isg::{fit_isg, random_isg, IsgInstance, DEFAULT_DENSITY, DEFAULT_SIGMA, FIT_CAP};
use crate::pipeline::{default_tolerance, iterative_split, quality_ratio};
use crate::rng::derive_seed;
use crate::solvers::SolverParams;

pub const CSV_HEADER: [&str; 14] = [
    "instance_id",
    "n",
    "source",
    "sigma",
    "density",
    "kappa",
    "solver",
    "seed",
    "splits",
    "qubo_solves",
    "best_value",
    "ref_value",
    "quality_ratio",
    "runtime_ms",
];

pub const DEFAULT_SEEDS_PER_POINT: usize = 20;
/// Largest n for which the exact-dp reference is allowed.
pub const EXACT_REFERENCE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    Random {
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_density")]
        density: f64,
    },
    /// ISG fitted from a generated energy scenario.
    Fitted {
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_timesteps")]
        timesteps: usize,
    },
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_density() -> f64 {
    DEFAULT_DENSITY
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_timesteps() -> usize {
    DEFAULT_TIMESTEPS
}
fn default_seeds() -> usize {
    DEFAULT_SEEDS_PER_POINT
}

impl Default for InstanceSource {
    fn default() -> Self {
        InstanceSource::Random { sigma: DEFAULT_SIGMA, density: DEFAULT_DENSITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferencePolicy {
    #[default]
    ExactDp,
    BestFound,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SolverEntry {
    Named(String),
    Configured { name: String, params: SolverParams },
}

impl SolverEntry {
    pub fn resolve(&self) -> Result<(String, SolverParams)> {
        match self {
            SolverEntry::Named(name) => SolverParams::by_name(name)
                .map(|p| (name.clone(), p))
                .ok_or_else(|| Error::InvalidParam(format!("unknown solver {name:?}"))),
            SolverEntry::Configured { name, params } => Ok((name.clone(), params.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub source: InstanceSource,
    pub solvers: Vec<SolverEntry>,
    #[serde(default = "default_seeds")]
    pub seeds_per_point: usize,
    #[serde(default)]
    pub reference: ReferencePolicy,
    #[serde(default)]
    pub base_seed: u64,
    /// CSV destination; the CLI's `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: BenchConfig = toml::from_str(&text).map_err(|e| Error::format(path, e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.sizes.is_empty() || self.solvers.is_empty() {
            return bad("bench config needs at least one size and one solver".into());
        }
        if self.seeds_per_point == 0 {
            return bad("seeds_per_point must be >= 1".into());
        }
        let max_n = self.sizes.iter().copied().max().unwrap_or(0);
        if self.sizes.iter().any(|&n| n < 2) {
            return bad("sizes must be >= 2".into());
        }
        if self.reference == ReferencePolicy::ExactDp && max_n > EXACT_REFERENCE_CAP {
            return Err(Error::CapExceeded { what: "exact-dp reference", n: max_n, cap: EXACT_REFERENCE_CAP });
        }
        if matches!(self.source, InstanceSource::Fitted { .. }) && max_n > FIT_CAP {
            return Err(Error::CapExceeded { what: "fit", n: max_n, cap: FIT_CAP });
        }
        for entry in &self.solvers {
            entry.resolve()?.1.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub instance_id: String,
    pub n: usize,
    pub source: String,
    pub sigma: Option<f64>,
    pub density: f64,
    pub kappa: Option<f64>,
    pub solver: String,
    pub seed: u64,
    /// `None` on failed runs.
    pub splits: Option<usize>,
    pub qubo_solves: Option<usize>,
    pub best_value: Option<f64>,
    pub ref_value: Option<f64>,
    pub quality_ratio: Option<f64>,
    pub runtime_ms: f64,
}

/// A benchmark instance plus the columns describing where it came from.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub id: String,
    pub seed: u64,
    pub isg: IsgInstance,
    pub kappa: Option<f64>,
}

pub fn make_instance(source: &InstanceSource, n: usize, index: usize, base_seed: u64) -> Result<BenchInstance> {
    let seed = derive_seed(base_seed, ((n as u64) << 32) | index as u64);
    let id = format!("n{n:04}-i{index:04}");
    match *source {
        InstanceSource::Random { sigma, density } => {
            Ok(BenchInstance { id, seed, isg: random_isg(n, sigma, density, seed)?, kappa: None })
        }
        InstanceSource::Fitted { kappa, epsilon, timesteps } => {
            let config = ScenarioConfig { kappa, epsilon, ..ScenarioConfig::default() };
            let scenario = generate_scenario(n, timesteps, seed, &config)?;
            let mut isg = fit_isg(&ValueOracle::new(scenario)?)?;
            isg.meta.seed = Some(seed);
            Ok(BenchInstance { id, seed, isg, kappa: Some(kappa) })
        }
    }
}

/// Runs every solver through the splitting pipeline on one instance.
pub fn run_on_instance(
    instance: &BenchInstance,
    solvers: &[(String, SolverParams)],
    reference: ReferencePolicy,
) -> Result<Vec<BenchmarkRecord>> {
    let isg = &instance.isg;
    let tolerance = default_tolerance(isg);
    let source = match isg.meta.source {
        crate::isg::IsgSource::Fitted => "fitted",
        crate::isg::IsgSource::Random => "random",
    };
    let mut rows: Vec<BenchmarkRecord> = solvers
        .iter()
        .map(|(name, params)| {
            let start = Instant::now();
            let outcome = iterative_split(isg, params, instance.seed, tolerance);
            let runtime_ms = (start.elapsed().as_secs_f64() * 1e3).max(1e-6);
            let (splits, qubo_solves, best_value) = match outcome {
                Ok((structure, trace)) => {
                    (Some(trace.accepted_splits()), Some(trace.qubo_solves()), Some(structure.value))
                }
                Err(_) => (None, None, None),
            };
            BenchmarkRecord {
                instance_id: instance.id.clone(),
                n: isg.n(),
                source: source.to_string(),
                sigma: isg.meta.sigma,
                density: isg.meta.density,
                kappa: instance.kappa,
                solver: name.clone(),
                seed: instance.seed,
                splits,
                qubo_solves,
                best_value,
                ref_value: None,
                quality_ratio: None,
                runtime_ms,
            }
        })
        .collect();

    let ref_value = match reference {
        ReferencePolicy::ExactDp => Some(idp_solve(isg)?.value),
        ReferencePolicy::BestFound => rows.iter().filter_map(|r| r.best_value).reduce(f64::max),
    };
    for row in &mut rows {
        row.ref_value = ref_value;
        row.quality_ratio = match (row.best_value, ref_value) {
            (Some(b), Some(r)) => quality_ratio(b, r),
            _ => None,
        };
    }
    Ok(rows)
}

/// Full experiment matrix, rows sorted by `(n, instance_id, solver, seed)`.
/// `jobs` bounds the worker threads (0 = rayon default).
pub fn run_benchmark(config: &BenchConfig, jobs: usize) -> Result<Vec<BenchmarkRecord>> {
    config.validate()?;
    let solvers = config.solvers.iter().map(SolverEntry::resolve).collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> =
        config.sizes.iter().flat_map(|&n| (0..config.seeds_per_point).map(move |k| (n, k))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    let chunks: Vec<Result<Vec<BenchmarkRecord>>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, k)| {
                let instance = make_instance(&config.source, n, k, config.base_seed)?;
                run_on_instance(&instance, &solvers, config.reference)
            })
            .collect()
    });
    let mut rows = Vec::new();
    for chunk in chunks {
        rows.extend(chunk?);
    }
    rows.sort_by(|a, b| (a.n, &a.instance_id, &a.solver, a.seed).cmp(&(b.n, &b.instance_id, &b.solver, b.seed)));
    Ok(rows)
}

/// Formats like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_f(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

fn opt_u(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl BenchmarkRecord {
    fn fields(&self) -> [String; 14] {
        [
            self.instance_id.clone(),
            self.n.to_string(),
            self.source.clone(),
            opt_f(self.sigma),
            format_sig9(self.density),
            opt_f(self.kappa),
            self.solver.clone(),
            self.seed.to_string(),
            opt_u(self.splits),
            opt_u(self.qubo_solves),
            opt_f(self.best_value),
            opt_f(self.ref_value),
            opt_f(self.quality_ratio),
            format_sig9(self.runtime_ms),
        ]
    }
}

pub fn write_records(records: &[BenchmarkRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record(r.fields()).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::format(path, format!("unexpected header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let parse_f = |s: &str| -> std::result::Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
        }
    };
    let parse_u = |s: &str| -> std::result::Result<Option<usize>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
        }
    };
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let f = |i: usize| row.get(i).unwrap_or("");
        let parsed = (|| -> std::result::Result<BenchmarkRecord, String> {
            Ok(BenchmarkRecord {
                instance_id: f(0).to_string(),
                n: f(1).parse().map_err(|e| format!("n: {e}"))?,
                source: f(2).to_string(),
                sigma: parse_f(f(3))?,
                density: parse_f(f(4))?.ok_or("density missing")?,
                kappa: parse_f(f(5))?,
                solver: f(6).to_string(),
                seed: f(7).parse().map_err(|e| format!("seed: {e}"))?,
                splits: parse_u(f(8))?,
                qubo_solves: parse_u(f(9))?,
                best_value: parse_f(f(10))?,
                ref_value: parse_f(f(11))?,
                quality_ratio: parse_f(f(12))?,
                runtime_ms: parse_f(f(13))?.ok_or("runtime_ms missing")?,
            })
        })();
        out.push(parsed.map_err(|m| Error::format(path, m))?);
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub n: usize,
    pub solver: String,
    pub runs: usize,
    /// Rows whose quality ratio was undefined (zero reference or failure).
    pub undefined: usize,
    pub ratio_mean: Option<f64>,
    pub ratio_std: Option<f64>,
    pub runtime_mean_ms: f64,
    pub runtime_std_ms: f64,
}

/// Mean and sample standard deviation per `(n, solver)`.
pub fn aggregate(records: &[BenchmarkRecord]) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(Error::InvalidParam("no records to aggregate".into()));
    }
    let mut groups: BTreeMap<(usize, &str), Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.n, r.solver.as_str())).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((n, solver), rows)| {
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.quality_ratio).collect();
            let runtimes: Vec<f64> = rows.iter().map(|r| r.runtime_ms).collect();
            let (rm, rs) = mean_std(&runtimes);
            let stats = (!ratios.is_empty()).then(|| mean_std(&ratios));
            AggregateRow {
                n,
                solver: solver.to_string(),
                runs: rows.len(),
                undefined: rows.len() - ratios.len(),
                ratio_mean: stats.map(|s| s.0),
                ratio_std: stats.map(|s| s.1),
                runtime_mean_ms: rm,
                runtime_std_ms: rs,
            }
        })
        .collect())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isg::{IsgMeta, IsgSource};

    fn record(solver: &str, ratio: Option<f64>, runtime: f64) -> BenchmarkRecord {
        BenchmarkRecord {
            instance_id: "n0012-i0000".into(),
            n: 12,
            source: "random".into(),
            sigma: Some(0.2),
            density: 0.95,
            kappa: None,
            solver: solver.into(),
            seed: 42,
            splits: Some(3),
            qubo_solves: Some(7),
            best_value: ratio.map(|r| r * 2.0),
            ref_value: Some(2.0),
            quality_ratio: ratio,
            runtime_ms: runtime,
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1), "0.1");
        assert_eq!(format_sig9(-0.45), "-0.45");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(0.0), "0");
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&[record("sa", Some(0.8), 2.0)]).unwrap();
        assert_eq!(one[0].ratio_mean, Some(0.8));
        assert_eq!(one[0].ratio_std, Some(0.0));

        let same: Vec<_> = (0..20).map(|_| record("sa", Some(1.0), 1.0)).collect();
        let agg = aggregate(&same).unwrap();
        assert_eq!(agg[0].ratio_mean, Some(1.0));
        assert_eq!(agg[0].ratio_std, Some(0.0));

        let pair = aggregate(&[record("sa", Some(0.9), 1.0), record("sa", Some(1.1), 1.0)]).unwrap();
        assert!((pair[0].ratio_mean.unwrap() - 1.0).abs() < 1e-12);
        assert!((pair[0].ratio_std.unwrap() - 0.1414213562).abs() < 1e-9);

        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn aggregate_counts_undefined() {
        let rows = [record("tabu", None, 1.0), record("tabu", Some(1.0), 3.0), record("sa", Some(0.5), 1.0)];
        let agg = aggregate(&rows).unwrap();
        assert_eq!(agg.len(), 2);
        let tabu = agg.iter().find(|a| a.solver == "tabu").unwrap();
        assert_eq!(tabu.undefined, 1);
        assert_eq!(tabu.ratio_mean, Some(1.0));
        assert_eq!(tabu.runtime_mean_ms, 2.0);
    }

    #[test]
    fn csv_header_only_for_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_records(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER.join(","));
        assert!(read_records(&path).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let mut r = record("sqa", Some(0.75), 12.5);
        r.kappa = Some(0.05);
        write_records(std::slice::from_ref(&r), &path).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![r]);
    }

    #[test]
    fn three_node_row() {
        let meta = IsgMeta { source: IsgSource::Random, sigma: None, density: 1.0, seed: None, residual: None };
        let isg = IsgInstance::from_edges(3, &[(0, 1, 1.0), (0, 2, -0.5), (1, 2, -0.5)], meta).unwrap();
        let inst = BenchInstance { id: "three".into(), seed: 0, isg, kappa: None };
        let rows = run_on_instance(&inst, &[("exhaustive".into(), SolverParams::Exhaustive)], ReferencePolicy::ExactDp)
            .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].splits, Some(1));
        assert_eq!(rows[0].qubo_solves, Some(2));
        assert_eq!(rows[0].quality_ratio, Some(1.0));
    }

    #[test]
    fn config_parsing_and_validation() {
        let text = r#"
            sizes = [6, 8]
            seeds_per_point = 3
            reference = "best-found"
            solvers = ["sa", { name = "tabu-short", params = { kind = "tabu", restarts = 1 } }]
            [source]
            kind = "random"
            sigma = 2.0
        "#;
        let c: BenchConfig = toml::from_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.source, InstanceSource::Random { sigma: 2.0, density: 0.95 });
        assert_eq!(c.solvers[1].resolve().unwrap().0, "tabu-short");

        let defaults: BenchConfig = toml::from_str("sizes = [4]\nsolvers = [\"exhaustive\"]").unwrap();
        assert_eq!(defaults.seeds_per_point, 20);
        assert_eq!(defaults.reference, ReferencePolicy::ExactDp);

        let too_big: BenchConfig = toml::from_str("sizes = [30]\nsolvers = [\"sa\"]").unwrap();
        assert!(matches!(too_big.validate(), Err(Error::CapExceeded { cap: 20, .. })));
        let unknown: BenchConfig = toml::from_str("sizes = [4]\nsolvers = [\"annealer\"]").unwrap();
        assert!(unknown.validate().is_err());
    }
}
