//! Net-metering energy model.
//!
//! Agents carry a per-timestep power box derived from their initial power
//! and a flexibility factor. A coalition is metered on its aggregate power:
//! net demand pays the import price, net supply earns the (lower) export
//! price. The value of a coalition is the retail gain from netting, less a
//! dispersion penalty proportional to the pairwise distances of its members.
//!
//! Power sign convention: positive is production (export), negative is
//! consumption (import).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::RwLock;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coalition::{Coalition, Game};
use crate::error::{Error, Result};
use crate::rng::rng;

pub const DEFAULT_TIMESTEPS: usize = 4;
pub const DEFAULT_DELTA_T_HOURS: f64 = 0.25;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_KAPPA: f64 = 0.05;
pub const PROSUMER_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Prosumer,
    PureProducer,
    PureConsumer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSchedule {
    /// Import price per timestep, currency/kWh.
    pub import: Vec<f64>,
    /// Export price per timestep, currency/kWh. Never above `import`.
    pub export: Vec<f64>,
    /// Timestep length in hours.
    pub delta_t: f64,
}

impl PriceSchedule {
    pub fn timesteps(&self) -> usize {
        self.import.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentProfile {
    pub id: usize,
    pub role: Role,
    /// Initial power per timestep, kW.
    pub p_init: Vec<f64>,
    /// Cost per kWh produced (credit per kWh consumed).
    pub marginal_cost: f64,
    pub position: [f64; 2],
}

impl AgentProfile {
    pub fn distance(&self, other: &AgentProfile) -> f64 {
        let dx = self.position[0] - other.position[0];
        let dy = self.position[1] - other.position[1];
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<AgentProfile>,
    pub prices: PriceSchedule,
    pub epsilon: f64,
    pub kappa: f64,
    /// Generator seed; `None` for scenarios loaded from disk.
    pub seed: Option<u64>,
}

/// Feasible interval `[lo, hi]` for an agent's power at timestep `t`.
pub fn power_bounds(agent: &AgentProfile, epsilon: f64, t: usize) -> (f64, f64) {
    let p = agent.p_init[t];
    let scaled = p * (1.0 + epsilon);
    if p == 0.0 {
        return (0.0, 0.0);
    }
    match agent.role {
        Role::Prosumer => {
            let r = scaled.abs();
            (-r, r)
        }
        Role::PureProducer => (0.0, scaled),
        Role::PureConsumer => (scaled, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchResult {
    /// `powers[k][t]` is the power of the k-th coalition member (ascending
    /// agent id) at timestep `t`.
    pub powers: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Evaluates the coalition energy-management objective at the given powers.
pub fn dispatch_objective(coalition: &Coalition, scenario: &Scenario, powers: &[Vec<f64>]) -> f64 {
    let prices = &scenario.prices;
    let dt = prices.delta_t;
    let mut total = 0.0;
    for t in 0..prices.timesteps() {
        let mut cost = 0.0;
        let mut net = 0.0;
        for (k, &i) in coalition.members().iter().enumerate() {
            let p = powers[k][t];
            cost += scenario.agents[i].marginal_cost * p * dt;
            net += p;
        }
        total += cost - dt * (prices.import[t] * net.min(0.0) + prices.export[t] * net.max(0.0));
    }
    total
}

/// Exact minimum of the coalition dispatch problem.
///
/// The problem separates per timestep. For a fixed aggregate `s`, the
/// cheapest allocation fills agents in ascending marginal cost, so the cost
/// side is convex piecewise linear in `s`; the metering side is convex too
/// because export never pays more than import. The optimum therefore sits on
/// one of the finitely many breakpoints (fill prefixes and `s = 0`).
pub fn optimize_dispatch(coalition: &Coalition, scenario: &Scenario) -> Result<DispatchResult> {
    if coalition.is_empty() {
        return Err(Error::EmptyCoalition);
    }
    let n = scenario.agents.len();
    if let Some(&bad) = coalition.members().iter().find(|&&i| i >= n) {
        return Err(Error::AgentOutOfRange { index: bad, n });
    }

    let members = coalition.members();
    let steps = scenario.prices.timesteps();
    let mut powers = vec![vec![0.0; steps]; members.len()];

    // Fill order depends only on marginal cost; ties by agent id.
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&x, &y| {
        let ax = scenario.agents[members[x]].marginal_cost;
        let ay = scenario.agents[members[y]].marginal_cost;
        ax.total_cmp(&ay).then(members[x].cmp(&members[y]))
    });

    let mut lo = vec![0.0; members.len()];
    let mut hi = vec![0.0; members.len()];
    for t in 0..steps {
        for (k, &i) in members.iter().enumerate() {
            let (l, h) = power_bounds(&scenario.agents[i], scenario.epsilon, t);
            lo[k] = l;
            hi[k] = h;
        }
        let target = best_aggregate(scenario, members, &order, &lo, &hi, t);
        fill_to(target, &order, &lo, &hi, |k, p| powers[k][t] = p);
    }

    let objective = dispatch_objective(coalition, scenario, &powers);
    Ok(DispatchResult { powers, objective })
}

/// Scans breakpoints of the per-timestep objective in ascending aggregate
/// order and returns the first minimizer.
fn best_aggregate(scenario: &Scenario, members: &[usize], order: &[usize], lo: &[f64], hi: &[f64], t: usize) -> f64 {
    let buy = scenario.prices.import[t];
    let sell = scenario.prices.export[t];
    let metering = |s: f64| -(buy * s.min(0.0) + sell * s.max(0.0));

    let mut s = lo.iter().sum::<f64>();
    let mut cost = order.iter().map(|&k| scenario.agents[members[k]].marginal_cost * lo[k]).sum::<f64>();

    let mut best_s = s;
    let mut best = cost + metering(s);
    let mut consider = |s: f64, value: f64| {
        if value < best {
            best = value;
            best_s = s;
        }
    };

    for &k in order {
        let a = scenario.agents[members[k]].marginal_cost;
        let width = hi[k] - lo[k];
        if width <= 0.0 {
            continue;
        }
        let next = s + width;
        if s < 0.0 && next > 0.0 {
            // zero lies strictly inside this segment
            consider(0.0, cost + a * (0.0 - s));
        }
        cost += a * width;
        s = next;
        consider(s, cost + metering(s));
    }
    best_s
}

/// Raises agents from their lower bounds in fill order until the aggregate
/// reaches `target`.
fn fill_to(target: f64, order: &[usize], lo: &[f64], hi: &[f64], mut set: impl FnMut(usize, f64)) {
    let mut remaining = target - lo.iter().sum::<f64>();
    for &k in order {
        let width = hi[k] - lo[k];
        let raise = remaining.clamp(0.0, width.max(0.0));
        set(k, lo[k] + raise);
        remaining -= raise;
    }
}

/// Memoizing coalition value function over a scenario.
#[derive(Debug)]
pub struct ValueOracle {
    scenario: Scenario,
    singles: Vec<f64>,
    memo: RwLock<HashMap<Coalition, f64>>,
}

impl ValueOracle {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let singles = (0..scenario.agents.len())
            .map(|i| optimize_dispatch(&Coalition::singleton(i), &scenario).map(|d| d.objective))
            .collect::<Result<Vec<_>>>()?;
        Ok(ValueOracle { scenario, singles, memo: RwLock::new(HashMap::new()) })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Standalone dispatch cost of agent `i`.
    pub fn individual_cost(&self, i: usize) -> f64 {
        self.singles[i]
    }

    pub fn cached(&self) -> usize {
        self.memo.read().expect("memo lock poisoned").len()
    }

    fn compute(&self, coalition: &Coalition) -> Result<f64> {
        let joint = optimize_dispatch(coalition, &self.scenario)?.objective;
        let solo: f64 = coalition.members().iter().map(|&i| self.singles[i]).sum();
        let agents = &self.scenario.agents;
        let spread: f64 = coalition.pairs().map(|(i, j)| agents[i].distance(&agents[j])).sum();
        Ok(solo - joint - self.scenario.kappa * spread)
    }
}

impl Game for ValueOracle {
    fn num_agents(&self) -> usize {
        self.scenario.agents.len()
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        let n = self.num_agents();
        if let Some(&bad) = coalition.members().iter().find(|&&i| i >= n) {
            return Err(Error::AgentOutOfRange { index: bad, n });
        }
        if coalition.len() == 1 {
            return Ok(0.0);
        }
        if let Some(&v) = self.memo.read().expect("memo lock poisoned").get(coalition) {
            return Ok(v);
        }
        let v = self.compute(coalition)?;
        self.memo.write().expect("memo lock poisoned").insert(coalition.clone(), v);
        Ok(v)
    }
}

/// How marginal costs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MarginalCostModel {
    /// Uniform on `[lo_factor * min export price, hi_factor * max import price]`.
    Straddle {
        lo_factor: f64,
        hi_factor: f64,
    },
    Constant {
        value: f64,
    },
}

/// Scenario generator parameters. Defaults: 15-minute steps, flexibility
/// 0.5, dispersion coefficient 0.05, 90% prosumers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub delta_t_hours: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub prosumer_fraction: f64,
    pub import_base: f64,
    pub import_swing: f64,
    pub export_base: f64,
    pub export_swing: f64,
    pub price_jitter: f64,
    pub amplitude: (f64, f64),
    pub offset: (f64, f64),
    pub noise_sd: f64,
    pub marginal_cost: MarginalCostModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            delta_t_hours: DEFAULT_DELTA_T_HOURS,
            epsilon: DEFAULT_EPSILON,
            kappa: DEFAULT_KAPPA,
            prosumer_fraction: PROSUMER_FRACTION,
            import_base: 0.30,
            import_swing: 0.05,
            export_base: 0.10,
            export_swing: 0.03,
            price_jitter: 0.01,
            amplitude: (0.5, 2.0),
            offset: (-1.0, 1.0),
            noise_sd: 0.1,
            marginal_cost: MarginalCostModel::Straddle { lo_factor: 0.8, hi_factor: 1.2 },
        }
    }
}

pub fn generate_scenario(n: usize, timesteps: usize, seed: u64, config: &ScenarioConfig) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::InvalidParam("scenario needs at least one agent".into()));
    }
    if timesteps == 0 {
        return Err(Error::InvalidParam("scenario needs at least one timestep".into()));
    }
    if !(config.delta_t_hours > 0.0) || config.epsilon < 0.0 || config.kappa < 0.0 {
        return Err(Error::InvalidParam("delta_t must be > 0, epsilon and kappa >= 0".into()));
    }
    let mut rng = rng(seed);
    let phase_of = |t: usize| 2.0 * PI * t as f64 / timesteps as f64;

    let mut import = Vec::with_capacity(timesteps);
    let mut export = Vec::with_capacity(timesteps);
    for t in 0..timesteps {
        let jitter_b: f64 = rng.random_range(-1.0..=1.0) * config.price_jitter;
        let jitter_s: f64 = rng.random_range(-1.0..=1.0) * config.price_jitter;
        let buy = (config.import_base + config.import_swing * phase_of(t).sin() + jitter_b).max(0.0);
        let sell =
            (config.export_base + config.export_swing * (phase_of(t) + PI / 3.0).sin() + jitter_s).max(0.0).min(buy);
        import.push(buy);
        export.push(sell);
    }

    let prosumers = ((n as f64) * config.prosumer_fraction).round() as usize;
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut roles = vec![Role::Prosumer; n];
    for &i in &ids[prosumers.min(n)..] {
        roles[i] = if rng.random_bool(0.5) { Role::PureProducer } else { Role::PureConsumer };
    }

    let (cost_lo, cost_hi) = match config.marginal_cost {
        MarginalCostModel::Straddle { lo_factor, hi_factor } => {
            let min_sell = export.iter().copied().fold(f64::INFINITY, f64::min);
            let max_buy = import.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo_factor * min_sell, hi_factor * max_buy)
        }
        MarginalCostModel::Constant { value } => (value, value),
    };
    let noise =
        Normal::new(0.0, config.noise_sd.max(0.0)).map_err(|e| Error::InvalidParam(format!("noise_sd: {e}")))?;

    let mut agents = Vec::with_capacity(n);
    for (id, &role) in roles.iter().enumerate() {
        let amp = rng.random_range(config.amplitude.0..=config.amplitude.1);
        let phi = rng.random_range(0.0..2.0 * PI);
        let offset = rng.random_range(config.offset.0..=config.offset.1);
        let p_init = (0..timesteps)
            .map(|t| {
                let raw = amp * (phase_of(t) + phi).sin() + offset + noise.sample(&mut rng);
                match role {
                    Role::Prosumer => raw,
                    Role::PureProducer => raw.abs(),
                    Role::PureConsumer => -raw.abs(),
                }
            })
            .collect();
        let marginal_cost = if cost_hi > cost_lo { rng.random_range(cost_lo..cost_hi) } else { cost_lo };
        let position = [rng.random::<f64>(), rng.random::<f64>()];
        agents.push(AgentProfile { id, role, p_init, marginal_cost, position });
    }

    let scenario = Scenario {
        agents,
        prices: PriceSchedule { import, export, delta_t: config.delta_t_hours },
        epsilon: config.epsilon,
        kappa: config.kappa,
        seed: Some(seed),
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let p = &self.prices;
        let steps = p.import.len();
        if steps == 0 {
            return bad("timesteps must be >= 1".into());
        }
        if p.export.len() != steps {
            return bad(format!("export has {} entries, import has {steps}", p.export.len()));
        }
        if !(p.delta_t > 0.0) {
            return bad(format!("delta_t_hours must be > 0, got {}", p.delta_t));
        }
        for t in 0..steps {
            if !p.import[t].is_finite() || !p.export[t].is_finite() || p.export[t] > p.import[t] {
                return bad(format!("timestep {t}: export price must not exceed import price"));
            }
        }
        if !(self.epsilon >= 0.0) || !(self.kappa >= 0.0) {
            return bad("epsilon and kappa must be >= 0".into());
        }
        for (k, a) in self.agents.iter().enumerate() {
            if a.id != k {
                return bad(format!("agent ids must be 0..N-1 in order; position {k} has id {}", a.id));
            }
            if a.p_init.len() != steps {
                return bad(format!("agent {k}: p_init has {} entries, expected {steps}", a.p_init.len()));
            }
            if !a.marginal_cost.is_finite() {
                return bad(format!("agent {k}: marginal cost is not finite"));
            }
            let sign_ok = match a.role {
                Role::Prosumer => true,
                Role::PureProducer => a.p_init.iter().all(|&x| x >= 0.0),
                Role::PureConsumer => a.p_init.iter().all(|&x| x <= 0.0),
            };
            if !sign_ok || a.p_init.iter().any(|x| !x.is_finite()) {
                return bad(format!("agent {k}: p_init inconsistent with role {:?}", a.role));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            n: self.n(),
            timesteps: self.prices.timesteps(),
            delta_t_hours: self.prices.delta_t,
            epsilon: self.epsilon,
            kappa: self.kappa,
            prices: PricesFile { import: self.prices.import.clone(), export: self.prices.export.clone() },
            agents: self
                .agents
                .iter()
                .map(|a| AgentFile {
                    id: a.id,
                    role: a.role,
                    a: a.marginal_cost,
                    p_init: a.p_init.clone(),
                    pos: a.position,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.agents.len() != file.n {
            return Err(format!("\"n\" is {} but {} agents are listed", file.n, file.agents.len()));
        }
        if file.prices.import.len() != file.timesteps {
            return Err(format!(
                "\"timesteps\" is {} but {} prices are listed",
                file.timesteps,
                file.prices.import.len()
            ));
        }
        let scenario = Scenario {
            agents: file
                .agents
                .into_iter()
                .map(|a| AgentProfile { id: a.id, role: a.role, p_init: a.p_init, marginal_cost: a.a, position: a.pos })
                .collect(),
            prices: PriceSchedule {
                import: file.prices.import,
                export: file.prices.export,
                delta_t: file.delta_t_hours,
            },
            epsilon: file.epsilon,
            kappa: file.kappa,
            seed: None,
        };
        scenario.validate().map_err(|e| e.to_string())?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_json(&text).map_err(|m| Error::format(path, m))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n: usize,
    timesteps: usize,
    delta_t_hours: f64,
    epsilon: f64,
    kappa: f64,
    prices: PricesFile,
    agents: Vec<AgentFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PricesFile {
    import: Vec<f64>,
    export: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    id: usize,
    role: Role,
    a: f64,
    p_init: Vec<f64>,
    pos: [f64; 2],
}
