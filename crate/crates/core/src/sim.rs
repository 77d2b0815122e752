//! Scenario generation and Monte Carlo comparison of CSL, MTSSA and MTSSA-FL.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::{BandId, BidderId};
use crate::protocol::{
    self, AuctioneerKeys, FullAuctionOptions, PlaintextSolver, ProtocolError, SecureSolver,
    SubnetSolver, Valuations,
};
use crate::topology::{self, BaseStation, CellKind, ConflictGraph, TopologyError};

pub const DEFAULT_RUNS: usize = 25;
pub const DEFAULT_W: u64 = 8;
pub const DEFAULT_F: usize = 2;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("run {run}, {mechanism}, {num_bands} bands: {source}")]
    Protocol {
        run: usize,
        mechanism: MechanismKind,
        num_bands: usize,
        #[source]
        source: ProtocolError,
    },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config_err(field: &str, reason: impl Into<String>) -> SimError {
    SimError::Config { field: field.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WspConfig {
    #[serde(rename = "macro")]
    pub macro_cells: u32,
    pub small: u32,
}

/// A station with fixed position and marginal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub id: u32,
    pub wsp: u32,
    pub kind: CellKind,
    pub x: f64,
    pub y: f64,
    pub marginals: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum BandsField {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    region_side: Option<f64>,
    #[serde(default)]
    wsps: Vec<WspConfig>,
    bands: Option<BandsField>,
    s: Option<u64>,
    #[serde(rename = "W")]
    w: Option<u64>,
    #[serde(rename = "F")]
    f: Option<usize>,
    runs: Option<usize>,
    seed: Option<u64>,
    stations: Option<Vec<StationSpec>>,
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub region_side: f64,
    pub wsps: Vec<WspConfig>,
    /// Band counts to sweep, ascending.
    pub bands: Vec<usize>,
    pub s: u64,
    #[serde(rename = "W")]
    pub w: u64,
    #[serde(rename = "F")]
    pub f: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stations: Option<Vec<StationSpec>>,
}

impl ScenarioConfig {
    /// Random-placement scenario with defaults for `s`, `W`, `F`, `runs`.
    pub fn new(region_side: f64, wsps: Vec<WspConfig>, mut bands: Vec<usize>, seed: u64) -> Result<Self, SimError> {
        let w = DEFAULT_W;
        bands.sort_unstable();
        bands.dedup();
        let s = w * bands.iter().copied().max().unwrap_or(0) as u64;
        let default_f = DEFAULT_F.min(bands.first().copied().unwrap_or(DEFAULT_F));
        let config = ScenarioConfig {
            region_side,
            wsps,
            bands,
            s,
            w,
            f: default_f,
            runs: DEFAULT_RUNS,
            seed,
            stations: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let raw: RawScenario = serde_json::from_str(text)?;
        let region_side = raw.region_side.ok_or_else(|| config_err("region_side", "missing"))?;
        let mut bands = match raw.bands.ok_or_else(|| config_err("bands", "missing"))? {
            BandsField::One(m) => vec![m],
            BandsField::Many(v) => v,
        };
        bands.sort_unstable();
        bands.dedup();
        let max_m = bands.last().copied().unwrap_or(0) as u64;
        let w = raw.w.unwrap_or(DEFAULT_W);
        let default_f = DEFAULT_F.min(bands.first().copied().unwrap_or(DEFAULT_F));
        let config = ScenarioConfig {
            region_side,
            wsps: raw.wsps,
            bands,
            s: raw.s.unwrap_or(w.saturating_mul(max_m)),
            w,
            f: raw.f.unwrap_or(default_f),
            runs: raw.runs.unwrap_or(DEFAULT_RUNS),
            seed: raw.seed.unwrap_or(0),
            stations: raw.stations,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_reader(mut r: impl Read) -> Result<Self, SimError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.region_side.is_finite() && self.region_side > 0.0) {
            return Err(config_err("region_side", "must be a positive number of meters"));
        }
        if self.bands.is_empty() || self.bands.contains(&0) {
            return Err(config_err("bands", "need at least one band count, each at least 1"));
        }
        if self.w == 0 {
            return Err(config_err("W", "must be at least 1"));
        }
        let max_m = self.max_bands();
        if self.s < self.w.saturating_mul(max_m as u64) {
            return Err(config_err(
                "s",
                format!("{} is below W·M = {}", self.s, self.w * max_m as u64),
            ));
        }
        if self.f == 0 {
            return Err(config_err("F", "must be at least 1"));
        }
        if self.f > self.bands[0] {
            return Err(config_err("F", format!("{} exceeds M = {}", self.f, self.bands[0])));
        }
        if self.runs == 0 {
            return Err(config_err("runs", "must be at least 1"));
        }
        match &self.stations {
            None => {
                if self.wsps.is_empty() {
                    return Err(config_err("wsps", "need at least one WSP"));
                }
            }
            Some(list) => self.validate_stations(list)?,
        }
        Ok(())
    }

    fn validate_stations(&self, list: &[StationSpec]) -> Result<(), SimError> {
        let mut seen = BTreeSet::new();
        for (i, st) in list.iter().enumerate() {
            let field = |f: &str| format!("stations[{i}].{f}");
            if !seen.insert(st.id) {
                return Err(config_err(&field("id"), format!("duplicate id {}", st.id)));
            }
            let side = self.region_side;
            for (name, v) in [("x", st.x), ("y", st.y)] {
                if !(v.is_finite() && (0.0..=side).contains(&v)) {
                    return Err(config_err(&field(name), format!("{v} is outside [0, {side}]")));
                }
            }
            if st.marginals.len() < self.max_bands() {
                return Err(config_err(
                    &field("marginals"),
                    format!("{} values for up to {} bands", st.marginals.len(), self.max_bands()),
                ));
            }
            if st.marginals.iter().any(|&m| m == 0 || m > self.w) {
                return Err(config_err(&field("marginals"), format!("values must lie in [1, {}]", self.w)));
            }
            if st.marginals.windows(2).any(|p| p[0] < p[1]) {
                return Err(config_err(&field("marginals"), "must be non-increasing"));
            }
        }
        Ok(())
    }

    pub fn max_bands(&self) -> usize {
        self.bands.last().copied().unwrap_or(0)
    }

    pub fn num_stations(&self) -> usize {
        match &self.stations {
            Some(list) => list.len(),
            None => self.wsps.iter().map(|w| (w.macro_cells + w.small) as usize).sum(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Cardinality valuations: a share of `k` bands is worth the top `k` marginals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValuationModel {
    marginals: BTreeMap<BidderId, Vec<u64>>,
    bound: u64,
}

impl ValuationModel {
    pub fn new(marginals: BTreeMap<BidderId, Vec<u64>>, bound: u64) -> Self {
        ValuationModel { marginals, bound }
    }

    pub fn marginals(&self, station: BidderId) -> &[u64] {
        self.marginals.get(&station).map_or(&[], Vec::as_slice)
    }

    pub fn of_count(&self, station: BidderId, count: usize) -> u64 {
        self.marginals(station).iter().take(count).sum()
    }
}

impl Valuations for ValuationModel {
    fn value(&self, station: BidderId, bands: &[BandId]) -> u64 {
        self.of_count(station, bands.len())
    }

    fn bound(&self) -> u64 {
        self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub region_side: f64,
    pub stations: Vec<BaseStation>,
    pub valuations: ValuationModel,
}

impl Scenario {
    pub fn graph(&self) -> Result<ConflictGraph, TopologyError> {
        topology::build_conflict_graph(&self.stations, self.region_side)
    }
}

fn run_rng(seed: u64, run_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index as u64);
    rng
}

/// Placements and marginals for one run, determined by `(seed, run_index)`.
/// Stations are numbered from 1: each WSP's macro cells, then its small cells.
pub fn generate_scenario(config: &ScenarioConfig, run_index: usize) -> Scenario {
    let bound = config.s;
    if let Some(list) = &config.stations {
        let stations = list
            .iter()
            .map(|s| BaseStation { id: BidderId(s.id), wsp: s.wsp, kind: s.kind, x: s.x, y: s.y })
            .collect();
        let marginals = list.iter().map(|s| (BidderId(s.id), s.marginals.clone())).collect();
        return Scenario {
            region_side: config.region_side,
            stations,
            valuations: ValuationModel::new(marginals, bound),
        };
    }
    let mut rng = run_rng(config.seed, run_index);
    let side = config.region_side;
    let mut stations = Vec::new();
    let mut marginals = BTreeMap::new();
    let mut next = 1;
    for (w, wsp) in config.wsps.iter().enumerate() {
        let kinds = std::iter::repeat(CellKind::Macro)
            .take(wsp.macro_cells as usize)
            .chain(std::iter::repeat(CellKind::Small).take(wsp.small as usize));
        for kind in kinds {
            let id = BidderId(next);
            next += 1;
            stations.push(BaseStation {
                id,
                wsp: w as u32 + 1,
                kind,
                x: rng.gen_range(0.0..=side),
                y: rng.gen_range(0.0..=side),
            });
            let mut m: Vec<u64> = (0..config.max_bands()).map(|_| rng.gen_range(1..=config.w)).collect();
            m.sort_unstable_by(|a, b| b.cmp(a));
            marginals.insert(id, m);
        }
    }
    Scenario { region_side: side, stations, valuations: ValuationModel::new(marginals, bound) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(rename = "csl")]
    Csl,
    #[serde(rename = "mtssa")]
    Mtssa,
    #[serde(rename = "mtssa-fl")]
    MtssaFl,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 3] = [MechanismKind::Csl, MechanismKind::Mtssa, MechanismKind::MtssaFl];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Csl => "csl",
            MechanismKind::Mtssa => "mtssa",
            MechanismKind::MtssaFl => "mtssa-fl",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csl" => Ok(MechanismKind::Csl),
            "mtssa" => Ok(MechanismKind::Mtssa),
            "mtssa-fl" => Ok(MechanismKind::MtssaFl),
            other => Err(format!("unknown mechanism `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StationOutcome {
    pub bands: BTreeSet<BandId>,
    pub price: u64,
    pub utility: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MechanismOutcome {
    pub mechanism: MechanismKind,
    pub stations: BTreeMap<BidderId, StationOutcome>,
    /// Sum of all station payments.
    pub revenue: u64,
    /// CSL only: the WSP that leased the bands, every WSP's sealed bid and
    /// the second-highest of those bids.
    pub winning_wsp: Option<u32>,
    pub wsp_bids: BTreeMap<u32, u64>,
    pub lease_price: Option<u64>,
}

pub fn bands_for(m: usize) -> Vec<BandId> {
    (1..=m as u32).map(BandId).collect()
}

fn station_outcomes(
    valuations: &ValuationModel,
    awards: &BTreeMap<BidderId, topology::Award>,
) -> BTreeMap<BidderId, StationOutcome> {
    awards
        .iter()
        .map(|(&id, a)| {
            let v = valuations.of_count(id, a.bands.len());
            let outcome = StationOutcome {
                bands: a.bands.clone(),
                price: a.price,
                utility: v as i64 - a.price as i64,
            };
            (id, outcome)
        })
        .collect()
}

/// Runs one mechanism on one scenario with `num_bands` bands. Root orders are
/// drawn from `root_rng`.
pub fn run_mechanism<S, R>(
    kind: MechanismKind,
    scenario: &Scenario,
    num_bands: usize,
    band_cap: usize,
    solver: &mut S,
    root_rng: &mut R,
) -> Result<MechanismOutcome, ProtocolError>
where
    S: SubnetSolver + ?Sized,
    R: Rng + ?Sized,
{
    let bands = bands_for(num_bands);
    let graph = scenario.graph()?;
    let vals = &scenario.valuations;
    match kind {
        MechanismKind::Mtssa | MechanismKind::MtssaFl => {
            let options = FullAuctionOptions {
                band_cap: (kind == MechanismKind::MtssaFl).then_some(band_cap),
                ..FullAuctionOptions::default()
            };
            let out = protocol::run_full_auction(&graph, vals, &bands, &options, solver, root_rng)?;
            let mut stations = station_outcomes(vals, &out.awards);
            for id in graph.ids() {
                stations.entry(id).or_default();
            }
            Ok(MechanismOutcome {
                mechanism: kind,
                revenue: out.revenue(),
                stations,
                winning_wsp: None,
                wsp_bids: BTreeMap::new(),
                lease_price: None,
            })
        }
        MechanismKind::Csl => {
            let wsps: BTreeSet<u32> = scenario.stations.iter().map(|s| s.wsp).collect();
            let mut internal = BTreeMap::new();
            let mut wsp_bids = BTreeMap::new();
            for &w in &wsps {
                let sub = graph.induced(|s| s.wsp == w);
                let out = protocol::run_full_auction(
                    &sub,
                    vals,
                    &bands,
                    &FullAuctionOptions::default(),
                    &mut PlaintextSolver,
                    root_rng,
                )?;
                let welfare = out
                    .awards
                    .iter()
                    .map(|(&id, a)| vals.of_count(id, a.bands.len()))
                    .sum::<u64>();
                wsp_bids.insert(w, welfare);
                internal.insert(w, out);
            }
            // Highest sealed bid wins, lowest WSP id on ties.
            let mut ranked: Vec<(u32, u64)> = wsp_bids.iter().map(|(&w, &b)| (w, b)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let winning_wsp = ranked.first().map(|&(w, _)| w);
            let lease_price = Some(ranked.get(1).map_or(0, |&(_, b)| b));
            let mut stations: BTreeMap<BidderId, StationOutcome> =
                graph.ids().map(|id| (id, StationOutcome::default())).collect();
            if let Some(w) = winning_wsp {
                stations.extend(station_outcomes(vals, &internal[&w].awards));
            }
            let revenue = stations.values().map(|o| o.price).sum();
            Ok(MechanismOutcome { mechanism: kind, stations, revenue, winning_wsp, wsp_bids, lease_price })
        }
    }
}

/// One row of the per-run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mechanism: MechanismKind,
    pub num_bs: usize,
    pub num_bands: usize,
    pub run: usize,
    pub utilization: u64,
    pub revenue: u64,
    pub satisfaction: f64,
}

impl MetricsRow {
    /// Revenue is unsigned by construction; the other two are bounded.
    pub fn is_consistent(&self) -> bool {
        self.utilization <= (self.num_bs * self.num_bands) as u64
            && (0.0..=1.0).contains(&self.satisfaction)
    }
}

/// Utilization, revenue and satisfaction of one outcome. The satisfaction
/// denominator is every station's valuation of all `num_bands` bands.
pub fn compute_metrics(
    outcome: &MechanismOutcome,
    valuations: &ValuationModel,
    stations: &[BaseStation],
    num_bands: usize,
    run: usize,
) -> MetricsRow {
    let winners = outcome.stations.values().filter(|o| !o.bands.is_empty());
    let utilization = winners.clone().map(|o| o.bands.len() as u64).sum();
    let gained: i64 = winners.map(|o| o.utility).sum();
    let demand: u64 = stations.iter().map(|s| valuations.of_count(s.id, num_bands)).sum();
    let satisfaction = if demand == 0 { 0.0 } else { gained.max(0) as f64 / demand as f64 };
    MetricsRow {
        mechanism: outcome.mechanism,
        num_bs: stations.len(),
        num_bands,
        run,
        utilization,
        revenue: outcome.revenue,
        satisfaction,
    }
}

/// Which subnet solver the Monte Carlo uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Plaintext,
    /// The encrypted protocol with a fresh key of this size per run.
    Secure { bits: u64 },
}

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub mechanisms: Vec<MechanismKind>,
    pub engine: Engine,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions { mechanisms: MechanismKind::ALL.to_vec(), engine: Engine::Plaintext, jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub mechanism: MechanismKind,
    pub num_bs: usize,
    pub num_bands: usize,
    pub samples: usize,
    pub utilization: f64,
    pub revenue: f64,
    pub satisfaction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub run: usize,
    pub mechanism: MechanismKind,
    pub num_bands: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub means: Vec<MeanRow>,
    pub failures: Vec<RunFailure>,
}

impl MetricsReport {
    pub fn from_rows(rows: Vec<MetricsRow>) -> Self {
        let means = mean_rows(&rows);
        MetricsReport { rows, means, failures: Vec::new() }
    }

    /// True when every scheduled run produced a row.
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn mean(&self, mechanism: MechanismKind, num_bands: usize) -> Option<&MeanRow> {
        self.means.iter().find(|m| m.mechanism == mechanism && m.num_bands == num_bands)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            means: &'a [MeanRow],
            failures: &'a [RunFailure],
        }
        serde_json::to_string_pretty(&Summary { means: &self.means, failures: &self.failures })
            .expect("summary serializes")
    }

    pub fn plot_data(&self) -> PlotData {
        plot_data(&self.means)
    }
}

pub fn read_csv(r: impl Read) -> Result<Vec<MetricsRow>, SimError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(SimError::from)
}

/// Means per (mechanism, station count, band count), in that order.
pub fn mean_rows(rows: &[MetricsRow]) -> Vec<MeanRow> {
    let mut groups: BTreeMap<(MechanismKind, usize, usize), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.mechanism, r.num_bs, r.num_bands)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((mechanism, num_bs, num_bands), rs)| {
            let n = rs.len() as f64;
            MeanRow {
                mechanism,
                num_bs,
                num_bands,
                samples: rs.len(),
                utilization: rs.iter().map(|r| r.utilization as f64).sum::<f64>() / n,
                revenue: rs.iter().map(|r| r.revenue as f64).sum::<f64>() / n,
                satisfaction: rs.iter().map(|r| r.satisfaction).sum::<f64>() / n,
            }
        })
        .collect()
}

/// `metric → "<mechanism>/<num_bs> BSs" → [(num_bands, mean)]`.
pub type PlotData = BTreeMap<String, BTreeMap<String, Vec<(usize, f64)>>>;

pub fn plot_data(means: &[MeanRow]) -> PlotData {
    let mut out = PlotData::new();
    for m in means {
        let key = format!("{}/{} BSs", m.mechanism, m.num_bs);
        for (metric, v) in [
            ("utilization", m.utilization),
            ("revenue", m.revenue),
            ("satisfaction", m.satisfaction),
        ] {
            out.entry(metric.to_string()).or_default().entry(key.clone()).or_default().push((m.num_bands, v));
        }
    }
    for series in out.values_mut() {
        for points in series.values_mut() {
            points.sort_by_key(|p| p.0);
        }
    }
    out
}

fn solver_for(engine: Engine, seed: u64, run: usize) -> Result<Box<dyn SubnetSolver>, ProtocolError> {
    match engine {
        Engine::Plaintext => Ok(Box::new(PlaintextSolver)),
        Engine::Secure { bits } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(run as u64);
            let keys = AuctioneerKeys::generate(bits, &mut rng).map_err(|e| ProtocolError::Abort {
                stage: protocol::Stage::Init,
                reason: e.to_string(),
            })?;
            Ok(Box::new(SecureSolver::new(keys, rng.gen())))
        }
    }
}

/// Every mechanism and band count of one run, on one shared scenario.
pub fn run_once(
    config: &ScenarioConfig,
    options: &MonteCarloOptions,
    run: usize,
) -> Vec<Result<MetricsRow, RunFailure>> {
    let scenario = generate_scenario(config, run);
    let root_seed = run_rng(config.seed ^ 0x5eed_0f_2007, run).gen::<u64>();
    let mut out = Vec::new();
    for &m in &config.bands {
        for &kind in &options.mechanisms {
            let mut root_rng = ChaCha8Rng::seed_from_u64(root_seed);
            let result = solver_for(options.engine, config.seed, run).and_then(|mut solver| {
                run_mechanism(kind, &scenario, m, config.f, solver.as_mut(), &mut root_rng)
            });
            out.push(match result {
                Ok(outcome) => Ok(compute_metrics(&outcome, &scenario.valuations, &scenario.stations, m, run)),
                Err(e) => Err(RunFailure { run, mechanism: kind, num_bands: m, error: e.to_string() }),
            });
        }
    }
    out
}

/// Paired Monte Carlo over `config.runs` scenarios.
pub fn monte_carlo(config: &ScenarioConfig, options: &MonteCarloOptions) -> MetricsReport {
    let runs: Vec<usize> = (0..config.runs).collect();
    let per_run: Vec<Vec<Result<MetricsRow, RunFailure>>> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| runs.par_iter().map(|&r| run_once(config, options, r)).collect())
    } else {
        runs.iter().map(|&r| run_once(config, options, r)).collect()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for result in per_run.into_iter().flatten() {
        match result {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(|a, b| {
        (a.mechanism, a.num_bands, a.run).cmp(&(b.mechanism, b.num_bands, b.run))
    });
    let means = mean_rows(&rows);
    MetricsReport { rows, means, failures }
}

/// The 8-station, two-WSP desk-scale setup swept over 2, 4 and 6 bands.
pub fn desk_scenario(seed: u64) -> ScenarioConfig {
    let wsp = WspConfig { macro_cells: 2, small: 2 };
    ScenarioConfig::new(1000.0, vec![wsp, wsp], vec![2, 4, 6], seed).expect("valid preset")
}
