//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Runs under `cargo test` with no harness.
//!
//! The n=12 benchmark CSV is left at `target/tmp/acceptance.csv` for plotting.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use netcoal_core::bench::{run_benchmark, write_records, BenchConfig, InstanceSource, ReferencePolicy, SolverEntry};
use netcoal_core::energy::{power_bounds, Role};
use netcoal_core::isg::isg_value;
use netcoal_core::pipeline::default_tolerance;
use netcoal_core::{
    brute_force_partitions, build_split_qubo, fit_isg, generate_scenario, idp_solve, iterative_split,
    optimize_dispatch, random_isg, solve, structure_value, Assignment, Coalition, Game, IsgInstance, Result,
    ScenarioConfig, SolverParams, ValueOracle,
};

type Outcome = std::result::Result<String, String>;

/// Treats an ISG purely as a value oracle, hiding its weights from the fit.
struct Additive(IsgInstance);

impl Game for Additive {
    fn num_agents(&self) -> usize {
        self.0.n()
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        isg_value(&self.0, c)
    }
}

/// Three agents, every pair worth 1, the grand coalition worth 6.
struct ThreeAgents;

impl Game for ThreeAgents {
    fn num_agents(&self) -> usize {
        3
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        Ok(match c.len() {
            2 => 1.0,
            3 => 6.0,
            _ => 0.0,
        })
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let n = 4 + (k as usize % 5);
        let g = random_isg(n, 0.2, 0.95, 1000 + k).map_err(|e| e.to_string())?;
        let dp = idp_solve(&g).map_err(|e| e.to_string())?;
        let bf = brute_force_partitions(&g).map_err(|e| e.to_string())?;
        let scale = dp.value.abs().max(bf.value.abs()).max(1.0);
        worst = worst.max((dp.value - bf.value).abs() / scale);
        let recomputed = structure_value(&dp.structure, &g).map_err(|e| e.to_string())?;
        if !close(recomputed, dp.value, 1e-9) {
            return Err(format!("instance {k}: reported {} but structure is worth {recomputed}", dp.value));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-9 && secs < 10.0, format!("50 oracles, worst rel gap {worst:.2e}, {secs:.2}s"))
}

fn fit_recovery() -> Outcome {
    let mut worst_w = 0.0f64;
    let mut worst_r = 0.0f64;
    for k in 0..20u64 {
        let n = 4 + (k as usize % 7);
        let truth = random_isg(n, 0.2, 0.95, 2000 + k).map_err(|e| e.to_string())?;
        let fitted = fit_isg(&Additive(truth.clone())).map_err(|e| e.to_string())?;
        for i in 0..n {
            for j in i + 1..n {
                worst_w = worst_w.max((fitted.weight(i, j) - truth.weight(i, j)).abs());
            }
        }
        worst_r = worst_r.max(fitted.meta.residual.unwrap_or(f64::INFINITY));
    }
    let three = fit_isg(&ThreeAgents).map_err(|e| e.to_string())?;
    let closed_form = [(0, 1), (0, 2), (1, 2)].iter().all(|&(i, j)| three.weight(i, j) == 1.75);
    check(
        worst_w <= 1e-8 && worst_r < 1e-9 && closed_form,
        format!(
            "20 oracles, max weight error {worst_w:.2e}, max residual {worst_r:.2e}; n=3 weights {:?}",
            [three.weight(0, 1), three.weight(0, 2), three.weight(1, 2)]
        ),
    )
}

fn acceptance_csv() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    fs::create_dir_all(&dir).expect("target tmp dir");
    dir.join("acceptance.csv")
}

fn quality_n12() -> Outcome {
    let start = Instant::now();
    let config = BenchConfig {
        sizes: vec![12],
        source: InstanceSource::Random { sigma: 0.2, density: 0.95 },
        solvers: ["exhaustive", "sa", "tabu", "sqa", "qbsolv"].map(|s| SolverEntry::Named(s.into())).to_vec(),
        seeds_per_point: 20,
        reference: ReferencePolicy::ExactDp,
        base_seed: 2023,
        output: None,
    };
    let rows = run_benchmark(&config, 0).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    write_records(&rows, &acceptance_csv()).map_err(|e| e.to_string())?;

    let exhaustive: HashMap<&str, f64> = rows
        .iter()
        .filter(|r| r.solver == "exhaustive")
        .filter_map(|r| Some((r.instance_id.as_str(), r.best_value?)))
        .collect();
    let mut failures = Vec::new();
    let worst_ratio = rows
        .iter()
        .filter(|r| r.solver == "exhaustive")
        .map(|r| r.quality_ratio.unwrap_or(f64::INFINITY))
        .fold(f64::NEG_INFINITY, f64::max);
    if exhaustive.len() != 20 || worst_ratio > 1.0 + 1e-9 {
        failures.push(format!("exhaustive ratio {worst_ratio}"));
    }
    let mut summary = vec![format!("exhaustive max ratio {worst_ratio:.12}")];
    for solver in ["sa", "tabu", "sqa", "qbsolv"] {
        let matched = rows
            .iter()
            .filter(|r| r.solver == solver)
            .filter(|r| match (r.best_value, exhaustive.get(r.instance_id.as_str())) {
                (Some(v), Some(&e)) => close(v, e, 1e-9),
                _ => false,
            })
            .count();
        summary.push(format!("{solver} {matched}/20"));
        if matched < 18 {
            failures.push(format!("{solver} matched {matched}/20"));
        }
    }
    if secs >= 60.0 {
        failures.push(format!("took {secs:.1}s"));
    }
    let detail = format!("{}; {secs:.2}s", summary.join(", "));
    check(failures.is_empty(), if failures.is_empty() { detail } else { format!("{detail}; {}", failures.join(", ")) })
}

fn csg_transfer() -> Outcome {
    // pairwise-additive oracles: the fitted instance reproduces the oracle
    let mut worst = 0.0f64;
    for k in 0..10u64 {
        let n = 6 + (k as usize % 5);
        let oracle = Additive(random_isg(n, 0.2, 0.95, 3000 + k).map_err(|e| e.to_string())?);
        let fitted = fit_isg(&oracle).map_err(|e| e.to_string())?;
        let (s, _) = iterative_split(&fitted, &SolverParams::Exhaustive, k, default_tolerance(&fitted))
            .map_err(|e| e.to_string())?;
        let under_oracle = structure_value(&s, &oracle).map_err(|e| e.to_string())?;
        worst = worst.max((under_oracle - s.value).abs() / s.value.abs().max(1.0));
    }
    if worst > 1e-9 {
        return Err(format!("additive oracles disagree with their fit by {worst:.2e}"));
    }

    // energy-model oracles: report only
    let mut ratios = Vec::new();
    for (k, n) in [6usize, 8, 10, 12, 14].into_iter().enumerate() {
        let scenario =
            generate_scenario(n, 4, 4000 + k as u64, &ScenarioConfig::default()).map_err(|e| e.to_string())?;
        let oracle = ValueOracle::new(scenario).map_err(|e| e.to_string())?;
        let fitted = fit_isg(&oracle).map_err(|e| e.to_string())?;
        let (s, _) = iterative_split(&fitted, &SolverParams::Exhaustive, k as u64, default_tolerance(&fitted))
            .map_err(|e| e.to_string())?;
        let achieved = structure_value(&s, &oracle).map_err(|e| e.to_string())?;
        let best = idp_solve(&oracle).map_err(|e| e.to_string())?.value;
        let ratio = if best != 0.0 { achieved / best } else { f64::NAN };
        if ratio > 1.0 + 1e-9 {
            return Err(format!("n={n}: ratio {ratio} exceeds the exact optimum"));
        }
        ratios.push(format!("n={n}:{ratio:.4}"));
    }
    Ok(format!("additive max gap {worst:.2e}; energy-model ratios {}", ratios.join(" ")))
}

fn instance_fidelity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for sigma in [0.2, 2.0] {
        let g = random_isg(100, sigma, 0.95, 5000).map_err(|e| e.to_string())?;
        let w: Vec<f64> = g.edges().map(|(_, _, w)| w).filter(|&w| w != 0.0).collect();
        let k = w.len() as f64;
        let mean = w.iter().sum::<f64>() / k;
        let sd = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        let se = sigma / (2.0 * (k - 1.0)).sqrt();
        let density = g.density();
        let density_se = (0.95f64 * 0.05 / 4950.0).sqrt();
        ok &= (sd - sigma).abs() <= 3.0 * se && density >= 0.9 && (density - 0.95).abs() <= 3.0 * density_se;
        parts.push(format!("sigma {sigma}: sd {sd:.4} ({:.1} SE), density {density:.4}", (sd - sigma) / se));
    }

    let scenario = generate_scenario(100, 4, 6000, &ScenarioConfig::default()).map_err(|e| e.to_string())?;
    let prosumers = scenario.agents.iter().filter(|a| a.role == Role::Prosumer).count();
    ok &= prosumers == 90 && scenario.prices.timesteps() == 4 && scenario.prices.delta_t == 0.25;
    ok &= scenario.epsilon == 0.5;
    for a in &scenario.agents {
        for t in 0..4 {
            let (lo, hi) = power_bounds(a, scenario.epsilon, t);
            let reach = 1.5 * a.p_init[t].abs();
            ok &=
                (hi - lo - if a.role == Role::Prosumer { 2.0 * reach } else { reach }).abs() <= 1e-12 * reach.max(1.0);
            ok &= lo <= a.p_init[t] && a.p_init[t] <= hi;
            ok &= match a.role {
                Role::PureProducer => a.p_init[t] >= 0.0,
                Role::PureConsumer => a.p_init[t] <= 0.0,
                Role::Prosumer => true,
            };
        }
    }
    for k in 0..20u64 {
        let members: Vec<usize> = (0..100).filter(|i| (i * 7 + k as usize * 13) % 9 == 0).collect();
        let c = Coalition::new(members, 100).map_err(|e| e.to_string())?;
        let d = optimize_dispatch(&c, &scenario).map_err(|e| e.to_string())?;
        for (row, &i) in d.powers.iter().zip(c.members()) {
            for (t, &p) in row.iter().enumerate() {
                let (lo, hi) = power_bounds(&scenario.agents[i], scenario.epsilon, t);
                ok &= lo - 1e-12 <= p && p <= hi + 1e-12;
            }
        }
    }
    parts.push(format!("scenario: {prosumers}/100 prosumers, 4 x 0.25h, eps 0.5, dispatch within bounds"));
    check(ok, parts.join("; "))
}

fn cut_weight(g: &IsgInstance, x: &Assignment) -> f64 {
    let mut cut = 0.0;
    for i in 0..g.n() {
        for j in i + 1..g.n() {
            if x.get(i) != x.get(j) {
                cut += g.weight(i, j);
            }
        }
    }
    cut
}

fn structural_invariants() -> Outcome {
    let mut assignments = 0u64;
    for m in 2..=10usize {
        let g = random_isg(m, 0.2, 0.95, 7000 + m as u64).map_err(|e| e.to_string())?;
        let q = build_split_qubo(&g, &Coalition::grand(m)).map_err(|e| e.to_string())?;
        let scale = g.total_abs_weight().max(1.0);
        for k in 0..1u64 << m {
            let x = Assignment::from_index(k, m);
            let e = q.energy(&x).map_err(|e| e.to_string())?;
            let flipped = q.energy(&x.complement()).map_err(|e| e.to_string())?;
            if (e - cut_weight(&g, &x)).abs() > 1e-12 * scale || (e - flipped).abs() > 1e-12 * scale {
                return Err(format!("m={m} x={k}: energy {e}, complement {flipped}"));
            }
            assignments += 1;
        }
    }

    let mut accepted = 0usize;
    for k in 0..10u64 {
        let g = random_isg(16, 0.2, 0.95, 7100 + k).map_err(|e| e.to_string())?;
        let (_, trace) = iterative_split(&g, &SolverParams::by_name("tabu").unwrap(), k, default_tolerance(&g))
            .map_err(|e| e.to_string())?;
        for step in trace.steps.iter().filter(|s| s.accepted) {
            let members = step.coalition.members();
            let bits = step.solver_result.best_x.bits();
            let side = |b: bool| {
                Coalition::new(members.iter().zip(bits).filter(|(_, &x)| x == b).map(|(&i, _)| i).collect(), 16)
            };
            let (a, b) = (side(false).map_err(|e| e.to_string())?, side(true).map_err(|e| e.to_string())?);
            let lhs = isg_value(&g, &step.coalition).map_err(|e| e.to_string())?;
            let rhs = isg_value(&g, &a).unwrap() + isg_value(&g, &b).unwrap() + step.solver_result.best_energy;
            if !close(lhs, rhs, 1e-9) {
                return Err(format!("bookkeeping: v(C) = {lhs}, parts + cut = {rhs}"));
            }
            accepted += 1;
        }
    }

    let q = build_split_qubo(&random_isg(24, 0.2, 0.95, 7200).unwrap(), &Coalition::grand(24)).unwrap();
    for name in ["exhaustive", "sa", "tabu", "random", "qbsolv", "sqa"] {
        let params = SolverParams::by_name(name).unwrap();
        let a = solve(&q, &params, 99).map_err(|e| e.to_string())?;
        let b = solve(&q, &params, 99).map_err(|e| e.to_string())?;
        if !a.same_outcome(&b) {
            return Err(format!("{name} is not deterministic"));
        }
    }

    let cli = cli_determinism()?;
    Ok(format!(
        "{assignments} assignments checked, {accepted} accepted splits balanced, 6 solvers and {cli} CLI commands reproducible"
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_netcoal")).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

/// Every subcommand, twice into separate directories; outputs must match
/// byte for byte apart from the bench runtime column.
fn cli_determinism() -> std::result::Result<usize, String> {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let commands: [&[&str]; 9] = [
        &["gen-scenario", "--n", "7", "--seed", "5", "--out", "s.json"],
        &["gen-isg", "--n", "12", "--seed", "5", "--out", "g.json"],
        &["fit", "--scenario", "s.json", "--out", "f.json"],
        &["split", "--isg", "g.json", "--solver", "sa", "--seed", "3", "--out", "split.json"],
        &["split", "--isg", "f.json", "--solver", "sqa", "--seed", "3", "--out", "split2.json"],
        &["exact", "--isg", "g.json", "--out", "exact.json"],
        &["exact", "--scenario", "s.json", "--out", "exact2.json"],
        &["bench", "--config", "b.toml", "--out", "b.csv", "--jobs", "2"],
        &["bench", "--config", "b.toml", "--out", "b1.csv", "--jobs", "1"],
    ];
    for dir in &runs {
        fs::write(dir.path().join("b.toml"), "sizes = [6, 8]\nseeds_per_point = 3\nsolvers = [\"tabu\", \"random\"]\n")
            .unwrap();
        for args in commands {
            run_cli(dir.path(), args)?;
        }
    }
    let strip_runtime = |text: String| -> String {
        text.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head)).collect::<Vec<_>>().join("\n")
    };
    for file in ["s.json", "g.json", "f.json", "split.json", "split2.json", "exact.json", "exact2.json"] {
        let a = fs::read(runs[0].path().join(file)).unwrap();
        if a != fs::read(runs[1].path().join(file)).unwrap() {
            return Err(format!("{file} differs between identical runs"));
        }
    }
    let csv = |dir: &tempfile::TempDir, f: &str| strip_runtime(fs::read_to_string(dir.path().join(f)).unwrap());
    let reference = csv(&runs[0], "b.csv");
    if reference != csv(&runs[1], "b.csv") || reference != csv(&runs[0], "b1.csv") {
        return Err("bench CSV differs between runs or job counts".into());
    }
    Ok(commands.len())
}

fn superadditive_grand() -> Outcome {
    let config = ScenarioConfig { kappa: 0.0, ..ScenarioConfig::default() };
    let mut runs = 0;
    for n in 4..=8usize {
        for seed in 0..10u64 {
            let scenario = generate_scenario(n, 4, 8000 + seed, &config).map_err(|e| e.to_string())?;
            let s = idp_solve(&ValueOracle::new(scenario).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            if s.structure.coalitions != vec![Coalition::grand(n)] {
                return Err(format!("n={n} seed={seed}: got {} coalitions", s.structure.coalitions.len()));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} scenarios (n 4..8), grand coalition every time"))
}

fn main() {
    // `cargo test -- --list` and friends
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle exactness", oracle_exactness),
        ("fit recovery", fit_recovery),
        ("solution quality n=12", quality_n12),
        ("CSG to ISG transfer", csg_transfer),
        ("instance fidelity", instance_fidelity),
        ("structural invariants", structural_invariants),
        ("superadditive grand coalition", superadditive_grand),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        match criterion() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
