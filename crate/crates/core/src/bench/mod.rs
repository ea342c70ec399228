//! Scenario runner, Monte Carlo campaigns and step-size/amplitude sweeps.

mod config;

pub use config::{parse_list, ScenarioConfig, ScenarioKind, KEYS};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::algorithm::{AlgorithmKind, AlgorithmParams, Execution, Simulation};
use crate::diagnostics::{Reference, RunRecord, REFERENCE_TOL};
use crate::dither::{common_period, design_dither, recipe_periods, DitherConfig};
use crate::error::{Error, Result};
use crate::graph::{erdos_renyi_connected, WeightedGraph};
use crate::numerics::fmt_sig12;
use crate::problem::{personalized_instance, source_seeking_instance, Problem};
use crate::rng::{self, Stream};

/// One fully built problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub problem: Problem,
    pub graph: WeightedGraph,
    pub dithers: Vec<DitherConfig>,
    pub reference: Reference,
    pub w0: Vec<DVector<f64>>,
    pub common_period: u64,
}

impl Instance {
    /// Problem, graph and initial points all derive from `seed`.
    pub fn build(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = config.n_agents;
        let dim = config.effective_dim();
        let problem = match config.scenario {
            ScenarioKind::Personalized => personalized_instance(n, dim, seed)?,
            ScenarioKind::SourceSeeking => {
                source_seeking_instance(n, &config.target, config.sigma, seed)?
            }
        };
        let graph = erdos_renyi_connected(n, config.edge_prob, seed)?;
        let dithers = build_dithers(config, config.delta)?;
        let reference = Reference::solve(&problem, REFERENCE_TOL)?;
        let mut rng = rng::stream(seed, Stream::Init);
        let w0 = (0..n)
            .map(|_| DVector::from_vec(rng::uniform_in_ball(&mut rng, dim, config.init_radius)))
            .collect();
        let common_period = common_period(&dithers)?;
        Ok(Self {
            seed,
            problem,
            graph,
            dithers,
            reference,
            w0,
            common_period,
        })
    }

    pub fn probe_every(&self, config: &ScenarioConfig) -> usize {
        config.probe_every.unwrap_or(self.common_period as usize)
    }

    /// Runs ESGT on this instance with the given step size and amplitude.
    pub fn run_esgt<F>(
        &self,
        config: &ScenarioConfig,
        gamma: f64,
        delta: f64,
        observer: F,
    ) -> Result<RunRecord>
    where
        F: FnMut(u64, &[crate::algorithm::AgentState]),
    {
        let n = self.problem.n_agents();
        let params = AlgorithmParams::uniform(gamma, delta, n, config.rounds)?;
        let dithers = self
            .dithers
            .iter()
            .map(|d| d.with_delta(delta))
            .collect::<Result<Vec<_>>>()?;
        Simulation {
            kind: AlgorithmKind::Esgt,
            problem: &self.problem,
            graph: &self.graph,
            params: &params,
            dithers: &dithers,
            w0: &self.w0,
            probe_every: self.probe_every(config),
            reference: &self.reference,
            execution: if config.parallel {
                Execution::Parallel
            } else {
                Execution::Serial
            },
        }
        .run_with_observer(observer)
    }
}

/// Identical dither for every agent, with periods from the geometric recipe.
pub fn build_dithers(config: &ScenarioConfig, delta: f64) -> Result<Vec<DitherConfig>> {
    let dim = config.effective_dim();
    let periods = recipe_periods(dim, config.tau0, config.tau0i)?;
    let d = design_dither(dim, &periods, config.phi0, delta)?;
    Ok(vec![d; config.n_agents])
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "esgt".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    with_suffix(output, ".manifest.txt")
}

fn write_manifest(config: &ScenarioConfig, verb: &str, extra: &str) -> Result<PathBuf> {
    let path = manifest_path(&config.output);
    let mut text = format!("# esgt-bench {verb}\n");
    text.push_str(&config.to_text());
    text.push_str(extra);
    std::fs::write(&path, text)?;
    Ok(path)
}

fn instance_lines(instances: &[&Instance]) -> String {
    let mut out = String::new();
    for inst in instances {
        let spec = inst.problem.spec().map(|s| s.to_text()).unwrap_or_default();
        let _ = writeln!(
            out,
            "instance seed={} common_period={} edges={} problem=[{}]",
            inst.seed,
            inst.common_period,
            inst.graph.edges().len(),
            spec
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub record: RunRecord,
    pub instance: Instance,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Builds the instance for `base_seed`, runs ESGT, writes CSV and manifest.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let instance = Instance::build(config, config.base_seed)?;
    let record = instance.run_esgt(config, config.gamma, config.delta, |_, _| {})?;
    record.write_csv(&config.output)?;
    let manifest_path = write_manifest(config, "run", &instance_lines(&[&instance]))?;
    Ok(ScenarioOutcome {
        record,
        instance,
        csv_path: config.output.clone(),
        manifest_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub round: u64,
    pub cost_rel_err: f64,
    pub var_rel_err: f64,
    pub instances: usize,
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutcome {
    pub rows: Vec<AggregateRow>,
    pub records: Vec<(u64, RunRecord)>,
    pub failures: Vec<(u64, Error)>,
}

pub const AGGREGATE_HEADER: &str = "round,cost_rel_err,var_rel_err,instances";

impl MonteCarloOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.round,
                fmt_sig12(r.cost_rel_err),
                fmt_sig12(r.var_rel_err),
                r.instances
            );
        }
        out
    }
}

/// Per-probe means of the relative errors over the successful runs.
pub fn aggregate(records: &[&RunRecord]) -> Vec<AggregateRow> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let len = records.iter().map(|r| r.metrics.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| {
            let count = records.len() as f64;
            AggregateRow {
                round: first.metrics[k].round,
                cost_rel_err: records
                    .iter()
                    .map(|r| r.metrics[k].cost_rel_err)
                    .sum::<f64>()
                    / count,
                var_rel_err: records
                    .iter()
                    .map(|r| r.metrics[k].var_rel_err)
                    .sum::<f64>()
                    / count,
                instances: records.len(),
            }
        })
        .collect()
}

/// Runs seeds `base_seed .. base_seed + n_instances` and averages the
/// relative errors per probed round. Instances that fail are reported and
/// excluded; the campaign fails only if every instance does.
pub fn run_montecarlo(config: &ScenarioConfig) -> Result<MonteCarloOutcome> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.n_instances as u64)
        .map(|i| config.base_seed.wrapping_add(i))
        .collect();
    let one = |&seed: &u64| -> (u64, Result<(Instance, RunRecord)>) {
        let res = Instance::build(config, seed).and_then(|inst| {
            // instances already run concurrently; keep each one serial
            let cfg = ScenarioConfig {
                parallel: false,
                ..config.clone()
            };
            let rec = inst.run_esgt(&cfg, config.gamma, config.delta, |_, _| {})?;
            Ok((inst, rec))
        });
        (seed, res)
    };
    let results: Vec<_> = if config.parallel {
        seeds.par_iter().map(one).collect()
    } else {
        seeds.iter().map(one).collect()
    };
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (seed, res) in results {
        match res {
            Ok(pair) => ok.push((seed, pair)),
            Err(e) => failures.push((seed, e)),
        }
    }
    if ok.is_empty() {
        return Err(Error::AllInstancesFailed(seeds.len()));
    }
    let rows = aggregate(&ok.iter().map(|(_, (_, r))| r).collect::<Vec<_>>());
    let outcome = MonteCarloOutcome {
        rows,
        records: ok.iter().map(|(s, (_, r))| (*s, r.clone())).collect(),
        failures,
    };
    std::fs::write(&config.output, outcome.to_csv())?;
    if config.per_instance {
        for (seed, (_, rec)) in &ok {
            rec.write_csv(&with_suffix(&config.output, &format!(".seed{seed}.csv")))?;
        }
    }
    let mut extra = instance_lines(&ok.iter().map(|(_, (i, _))| i).collect::<Vec<_>>());
    for (seed, e) in &outcome.failures {
        let _ = writeln!(extra, "failed seed={seed} error={e}");
    }
    write_manifest(config, "montecarlo", &extra)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub delta: f64,
    /// `max ‖w^t − 𝟏w★‖` over the final `5τ` rounds.
    pub floor: f64,
    /// `‖w⁰ − 𝟏w★‖`.
    pub initial_deviation: f64,
}

pub const SWEEP_HEADER: &str = "gamma,delta,floor";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_sig12(r.gamma),
            fmt_sig12(r.delta),
            fmt_sig12(r.floor)
        );
    }
    out
}

/// Asymptotic deviation floor for every `(γ, δ)` pair on the `base_seed`
/// instance.
pub fn sweep(config: &ScenarioConfig, gammas: &[f64], deltas: &[f64]) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one gamma and one delta".into(),
        ));
    }
    let instance = Instance::build(config, config.base_seed)?;
    let tail = 5 * instance.common_period;
    let start = (config.rounds as u64).saturating_sub(tail);
    let grid: Vec<(f64, f64)> = gammas
        .iter()
        .flat_map(|&g| deltas.iter().map(move |&d| (g, d)))
        .collect();
    let one = |&(gamma, delta): &(f64, f64)| -> Result<SweepRow> {
        let cfg = ScenarioConfig {
            parallel: false,
            ..config.clone()
        };
        let mut floor: f64 = 0.0;
        let rec = instance
            .run_esgt(&cfg, gamma, delta, |t, states| {
                if t > start || config.rounds == 0 {
                    let dev = states
                        .iter()
                        .map(|s| (&s.w - &instance.reference.w_star).norm_squared())
                        .sum::<f64>()
                        .sqrt();
                    floor = floor.max(dev);
                }
            })
            .map_err(|e| {
                Error::InvalidParameter(format!("sweep point gamma={gamma} delta={delta}: {e}"))
            })?;
        Ok(SweepRow {
            gamma,
            delta,
            floor,
            initial_deviation: rec.metrics[0].deviation,
        })
    };
    let rows = if config.parallel {
        grid.par_iter().map(one).collect::<Result<Vec<_>>>()?
    } else {
        grid.iter().map(one).collect::<Result<Vec<_>>>()?
    };
    std::fs::write(&config.output, sweep_csv(&rows))?;
    let mut extra = instance_lines(&[&instance]);
    let _ = writeln!(
        extra,
        "sweep gammas={:?} deltas={:?} tail_rounds={tail}",
        gammas, deltas
    );
    write_manifest(config, "sweep", &extra)?;
    Ok(rows)
}

/// Least-squares fit of `floor − δ√N ≈ √γ C₁ + √γ δ C₂` with `C₁, C₂ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundFit {
    pub c1: f64,
    pub c2: f64,
    /// Root-mean-square residual of the fitted floors.
    pub rms_residual: f64,
    pub mean_floor: f64,
}

impl BoundFit {
    pub fn predict(&self, gamma: f64, delta: f64, n_agents: usize) -> f64 {
        gamma.sqrt() * (self.c1 + delta * self.c2) + delta * (n_agents as f64).sqrt()
    }
}

pub fn fit_ultimate_bound(rows: &[SweepRow], n_agents: usize) -> Result<BoundFit> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no sweep rows to fit".into()));
    }
    let sqrt_n = (n_agents as f64).sqrt();
    // regressors a = √γ, b = √γ δ; target y = floor − δ√N
    let data: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            let a = r.gamma.sqrt();
            (a, a * r.delta, r.floor - r.delta * sqrt_n)
        })
        .collect();
    let sse = |c1: f64, c2: f64| -> f64 {
        data.iter()
            .map(|(a, b, y)| (y - a * c1 - b * c2).powi(2))
            .sum()
    };
    let one_dim = |pick: fn(&(f64, f64, f64)) -> f64| -> f64 {
        let num: f64 = data.iter().map(|d| pick(d) * d.2).sum();
        let den: f64 = data.iter().map(|d| pick(d).powi(2)).sum();
        if den > 0.0 {
            (num / den).max(0.0)
        } else {
            0.0
        }
    };
    let mut candidates = vec![(0.0, 0.0), (one_dim(|d| d.0), 0.0), (0.0, one_dim(|d| d.1))];
    let (saa, sab, sbb) = data.iter().fold((0.0, 0.0, 0.0), |acc, (a, b, _)| {
        (acc.0 + a * a, acc.1 + a * b, acc.2 + b * b)
    });
    let (say, sby) = data
        .iter()
        .fold((0.0, 0.0), |acc, (a, b, y)| (acc.0 + a * y, acc.1 + b * y));
    let det = saa * sbb - sab * sab;
    if det.abs() > 1e-14 * (saa * sbb).max(f64::MIN_POSITIVE) {
        let c1 = (say * sbb - sby * sab) / det;
        let c2 = (saa * sby - sab * say) / det;
        if c1 >= 0.0 && c2 >= 0.0 {
            candidates.push((c1, c2));
        }
    }
    let (c1, c2) = candidates
        .into_iter()
        .min_by(|x, y| sse(x.0, x.1).total_cmp(&sse(y.0, y.1)))
        .expect("candidate list is nonempty");
    Ok(BoundFit {
        c1,
        c2,
        rms_residual: (sse(c1, c2) / data.len() as f64).sqrt(),
        mean_floor: rows.iter().map(|r| r.floor).sum::<f64>() / rows.len() as f64,
    })
}

/// Validated dither for the CLI: explicit periods or the recipe.
pub fn validate_dither(
    dim: usize,
    periods: Option<&[u64]>,
    tau0: u64,
    tau0i: u64,
    phi0: f64,
    delta: f64,
) -> Result<DitherConfig> {
    let periods = match periods {
        Some(p) => p.to_vec(),
        None => recipe_periods(dim, tau0, tau0i)?,
    };
    design_dither(dim, &periods, phi0, delta)
}
