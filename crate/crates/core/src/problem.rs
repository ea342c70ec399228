//! Local cost oracles and built-in problem families.
//!
//! Agents only ever call [`LocalCost::eval`]. Analytic gradients exist for the
//! gradient-tracking baseline, the centralized reference solver and tests.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub type EvalFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub enum CostModel {
    /// `wᵀQw + rᵀw + c`.
    Quadratic {
        q: DMatrix<f64>,
        r: DVector<f64>,
        c: f64,
    },
    /// `wᵀQw + rᵀw + log Σ_ℓ a_ℓ exp(b_ℓ w_ℓ)`, with `Q` symmetric and `a > 0`.
    Personalized {
        q: DMatrix<f64>,
        r: DVector<f64>,
        a: DVector<f64>,
        b: DVector<f64>,
    },
    /// `‖w − center‖²`.
    SquaredDistance { center: DVector<f64> },
    Custom {
        eval: EvalFn,
        gradient: Option<GradFn>,
    },
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::Quadratic { q, r, c } => f
                .debug_struct("Quadratic")
                .field("q", q)
                .field("r", r)
                .field("c", c)
                .finish(),
            CostModel::Personalized { q, r, a, b } => f
                .debug_struct("Personalized")
                .field("q", q)
                .field("r", r)
                .field("a", a)
                .field("b", b)
                .finish(),
            CostModel::SquaredDistance { center } => f
                .debug_struct("SquaredDistance")
                .field("center", center)
                .finish(),
            CostModel::Custom { gradient, .. } => f
                .debug_struct("Custom")
                .field("has_gradient", &gradient.is_some())
                .finish(),
        }
    }
}

/// One agent's cost, accessed through measurements.
#[derive(Debug, Clone)]
pub struct LocalCost {
    dim: usize,
    model: CostModel,
}

impl LocalCost {
    pub fn quadratic(q: DMatrix<f64>, r: DVector<f64>, c: f64) -> Result<Self> {
        let dim = r.len();
        check_square(&q, dim)?;
        Ok(Self {
            dim,
            model: CostModel::Quadratic { q, r, c },
        })
    }

    pub fn personalized(
        q: DMatrix<f64>,
        r: DVector<f64>,
        a: DVector<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        let dim = r.len();
        check_square(&q, dim)?;
        for v in [&a, &b] {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        if a.iter().any(|&x| x.is_nan() || x <= 0.0) {
            return Err(Error::InvalidParameter(
                "log-sum-exp weights must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            model: CostModel::Personalized { q, r, a, b },
        })
    }

    pub fn squared_distance(center: DVector<f64>) -> Self {
        Self {
            dim: center.len(),
            model: CostModel::SquaredDistance { center },
        }
    }

    pub fn custom(dim: usize, eval: EvalFn, gradient: Option<GradFn>) -> Self {
        Self {
            dim,
            model: CostModel::Custom { eval, gradient },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn has_gradient(&self) -> bool {
        !matches!(self.model, CostModel::Custom { gradient: None, .. })
    }

    pub fn eval(&self, w: &DVector<f64>) -> f64 {
        debug_assert_eq!(w.len(), self.dim);
        match &self.model {
            CostModel::Quadratic { q, r, c } => w.dot(&(q * w)) + r.dot(w) + c,
            CostModel::Personalized { q, r, a, b } => {
                w.dot(&(q * w)) + r.dot(w) + log_sum_exp(a, b, w)
            }
            CostModel::SquaredDistance { center } => (w - center).norm_squared(),
            CostModel::Custom { eval, .. } => eval(w),
        }
    }

    /// Analytic gradient, if the model has one.
    pub fn gradient(&self, w: &DVector<f64>) -> Option<DVector<f64>> {
        match &self.model {
            CostModel::Quadratic { q, r, .. } => Some(q * w + q.transpose() * w + r),
            CostModel::Personalized { q, r, a, b } => {
                let exps = softmax_weights(a, b, w);
                Some(q * w * 2.0 + r + b.component_mul(&exps))
            }
            CostModel::SquaredDistance { center } => Some((w - center) * 2.0),
            CostModel::Custom { gradient, .. } => gradient.as_ref().map(|g| g(w)),
        }
    }
}

fn check_square(q: &DMatrix<f64>, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "cost dimension must be positive".into(),
        ));
    }
    if q.nrows() != dim || q.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: q.nrows().max(q.ncols()),
        });
    }
    Ok(())
}

fn log_sum_exp(a: &DVector<f64>, b: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let logs: Vec<f64> = (0..w.len()).map(|l| a[l].ln() + b[l] * w[l]).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + logs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

// a_ℓ e^{b_ℓ w_ℓ} / Σ a e^{b w}, computed stably
fn softmax_weights(a: &DVector<f64>, b: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let logs = DVector::from_iterator(w.len(), (0..w.len()).map(|l| a[l].ln() + b[l] * w[l]));
    let m = logs.max();
    let e = logs.map(|x| (x - m).exp());
    let s = e.sum();
    e / s
}

/// Replayable description of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Personalized {
        n_agents: usize,
        dim: usize,
        seed: u64,
    },
    SourceSeeking {
        n_agents: usize,
        target: Vec<f64>,
        sigma: f64,
        seed: u64,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Problem> {
        match self {
            InstanceSpec::Personalized {
                n_agents,
                dim,
                seed,
            } => personalized_instance(*n_agents, *dim, *seed),
            InstanceSpec::SourceSeeking {
                n_agents,
                target,
                sigma,
                seed,
            } => source_seeking_instance(*n_agents, target, *sigma, *seed),
        }
    }

    /// `kind=... key=value ...` on one line.
    pub fn to_text(&self) -> String {
        match self {
            InstanceSpec::Personalized {
                n_agents,
                dim,
                seed,
            } => format!("kind=personalized n_agents={n_agents} dim={dim} seed={seed}"),
            InstanceSpec::SourceSeeking {
                n_agents,
                target,
                sigma,
                seed,
            } => {
                let t: Vec<String> = target.iter().map(|v| v.to_string()).collect();
                format!(
                    "kind=source_seeking n_agents={n_agents} target={} sigma={sigma} seed={seed}",
                    t.join(",")
                )
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut n_agents = None;
        let mut dim = None;
        let mut seed = None;
        let mut target = None;
        let mut sigma = None;
        for tok in text.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {tok:?}")))?;
            match k {
                "kind" => kind = Some(v.to_string()),
                "n_agents" => n_agents = Some(parse_num::<usize>(k, v)?),
                "dim" => dim = Some(parse_num::<usize>(k, v)?),
                "seed" => seed = Some(parse_num::<u64>(k, v)?),
                "sigma" => sigma = Some(parse_num::<f64>(k, v)?),
                "target" => {
                    target = Some(
                        v.split(',')
                            .map(|x| parse_num::<f64>(k, x))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                _ => return Err(Error::Parse(format!("unknown key {k:?}"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("missing {name}"));
        match kind.as_deref() {
            Some("personalized") => Ok(InstanceSpec::Personalized {
                n_agents: n_agents.ok_or_else(|| missing("n_agents"))?,
                dim: dim.ok_or_else(|| missing("dim"))?,
                seed: seed.ok_or_else(|| missing("seed"))?,
            }),
            Some("source_seeking") => Ok(InstanceSpec::SourceSeeking {
                n_agents: n_agents.ok_or_else(|| missing("n_agents"))?,
                target: target.ok_or_else(|| missing("target"))?,
                sigma: sigma.ok_or_else(|| missing("sigma"))?,
                seed: seed.ok_or_else(|| missing("seed"))?,
            }),
            Some(other) => Err(Error::Parse(format!("unknown kind {other:?}"))),
            None => Err(missing("kind")),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("bad value {v:?} for {key}")))
}

/// `N` local costs of a common dimension.
#[derive(Debug, Clone)]
pub struct Problem {
    costs: Vec<LocalCost>,
    dim: usize,
    spec: Option<InstanceSpec>,
}

impl Problem {
    pub fn new(costs: Vec<LocalCost>) -> Result<Self> {
        let dim = costs
            .first()
            .map(LocalCost::dim)
            .ok_or_else(|| Error::InvalidParameter("problem needs at least one cost".into()))?;
        if let Some(bad) = costs.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self {
            costs,
            dim,
            spec: None,
        })
    }

    fn with_spec(mut self, spec: InstanceSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn costs(&self) -> &[LocalCost] {
        &self.costs
    }

    pub fn cost(&self, i: usize) -> &LocalCost {
        &self.costs[i]
    }

    pub fn n_agents(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> Option<&InstanceSpec> {
        self.spec.as_ref()
    }

    /// Reorders agents: new agent `k` is old agent `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            costs: perm.iter().map(|&i| self.costs[i].clone()).collect(),
            dim: self.dim,
            spec: None,
        }
    }

    pub fn total_cost(&self, w: &DVector<f64>) -> f64 {
        self.costs.iter().map(|c| c.eval(w)).sum()
    }

    pub fn total_gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(self.dim);
        for (index, c) in self.costs.iter().enumerate() {
            g += c.gradient(w).ok_or(Error::NoAnalyticGradient { index })?;
        }
        Ok(g)
    }

    /// Minimizers `w_i★` of the squared-distance costs, if every cost is one.
    pub fn source_points(&self) -> Option<Vec<DVector<f64>>> {
        self.costs
            .iter()
            .map(|c| match c.model() {
                CostModel::SquaredDistance { center } => Some(center.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Random personalized-optimization instance: `Q_i = MᵀM + I` with `M`
/// uniform on `[-1, 1]`, `r_i` uniform on `[-1, 1]`, log-sum-exp weights
/// `a` uniform on `[0.1, 1.1]` and exponents `b` uniform on `[-1, 1]`.
pub fn personalized_instance(n_agents: usize, dim: usize, seed: u64) -> Result<Problem> {
    if n_agents == 0 || dim == 0 {
        return Err(Error::InvalidParameter(
            "n_agents and dim must be positive".into(),
        ));
    }
    let mut rng = rng::stream(seed, Stream::Problem);
    let mut draw = |lo: f64, hi: f64, len: usize| -> Vec<f64> {
        (0..len).map(|_| rng::uniform(&mut rng, lo, hi)).collect()
    };
    let costs = (0..n_agents)
        .map(|_| {
            let m = DMatrix::from_row_slice(dim, dim, &draw(-1.0, 1.0, dim * dim));
            let q = m.transpose() * &m + DMatrix::identity(dim, dim);
            let r = DVector::from_vec(draw(-1.0, 1.0, dim));
            let a = DVector::from_vec(draw(0.1, 1.1, dim));
            let b = DVector::from_vec(draw(-1.0, 1.0, dim));
            LocalCost::personalized(q, r, a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Problem::new(costs)?.with_spec(InstanceSpec::Personalized {
        n_agents,
        dim,
        seed,
    }))
}

/// Source-seeking instance: `f_i(w) = ‖w − w_i★‖²` with `w_i★` Gaussian
/// around `target` with covariance `sigma · I`.
pub fn source_seeking_instance(
    n_agents: usize,
    target: &[f64],
    sigma: f64,
    seed: u64,
) -> Result<Problem> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if n_agents == 0 || target.is_empty() {
        return Err(Error::InvalidParameter(
            "n_agents and target dimension must be positive".into(),
        ));
    }
    let mut rng = rng::stream(seed, Stream::Problem);
    let std = sigma.sqrt();
    let costs = (0..n_agents)
        .map(|_| {
            let z = rng::standard_normals(&mut rng, target.len());
            let center = DVector::from_iterator(
                target.len(),
                target.iter().zip(z).map(|(t, z)| t + std * z),
            );
            LocalCost::squared_distance(center)
        })
        .collect();
    Ok(Problem::new(costs)?.with_spec(InstanceSpec::SourceSeeking {
        n_agents,
        target: target.to_vec(),
        sigma,
        seed,
    }))
}

pub const SOLVER_MAX_ITERATIONS: usize = 1_000_000;

/// Gradient descent with backtracking on `Σ f_i`, stopping at
/// `‖Σ ∇f_i(w)‖ ≤ tol`.
pub fn solve_centralized(problem: &Problem, tol: f64) -> Result<DVector<f64>> {
    for (index, c) in problem.costs().iter().enumerate() {
        if !c.has_gradient() {
            return Err(Error::NoAnalyticGradient { index });
        }
    }
    let mut w = DVector::zeros(problem.dim());
    let mut f = problem.total_cost(&w);
    let mut g = problem.total_gradient(&w)?;
    let mut step = 1.0;
    for _ in 0..SOLVER_MAX_ITERATIONS {
        let gnorm2 = g.norm_squared();
        if gnorm2.sqrt() <= tol {
            return Ok(w);
        }
        step *= 2.0;
        loop {
            let cand = &w - &g * step;
            let fc = problem.total_cost(&cand);
            let armijo = fc <= f - 0.5 * step * gnorm2;
            // near the optimum the decrease drops below rounding in f;
            // fall back to requiring a smaller gradient
            let flat = (fc - f).abs() <= 1e-12 * (1.0 + f.abs());
            if armijo || flat {
                let gc = problem.total_gradient(&cand)?;
                // rounding can fake an Armijo decrease once f is flat
                if (armijo && !flat) || gc.norm_squared() < gnorm2 {
                    w = cand;
                    f = fc;
                    g = gc;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::MaxIterations(SOLVER_MAX_ITERATIONS));
            }
        }
    }
    Err(Error::MaxIterations(SOLVER_MAX_ITERATIONS))
}
