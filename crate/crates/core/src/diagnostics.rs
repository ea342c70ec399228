//! Mean / consensus-orthogonal decomposition of stacked agent vectors and
//! per-round metrics.
//!
//! Stacked vectors are `col(x_1, …, x_N)` with each block of length `n`.
//! The orthogonal complement of the agreement direction is built from a
//! Householder reflection that maps `𝟏/√N` to `−e₁`; its last `N − 1`
//! columns form `R_N`, and the basis used on stacked vectors is `R_N ⊗ I_n`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::algorithm::{AgentState, AlgorithmKind, AlgorithmParams};
use crate::dither::DitherConfig;
use crate::error::{Error, Result};
use crate::numerics::fmt_sig12;
use crate::problem::{solve_centralized, Problem};

pub const REFERENCE_TOL: f64 = 1e-10;
/// Below this magnitude `f(w★)` (or `‖w★‖`) the relative metric falls back
/// to the absolute one.
pub const RELATIVE_FLOOR: f64 = 1e-8;

pub const CSV_HEADER: &str = "round,cost_rel_err,var_rel_err,consensus_err,zbar_norm,tracker_err";

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusBasis {
    n_agents: usize,
    dim: usize,
    // N × (N − 1), orthonormal columns orthogonal to 𝟏
    agent_basis: DMatrix<f64>,
}

impl ConsensusBasis {
    pub fn new(n_agents: usize, dim: usize) -> Self {
        assert!(n_agents >= 1, "n_agents must be positive");
        let n = n_agents;
        let u = 1.0 / (n as f64).sqrt();
        // v = 𝟏/√N + e₁ avoids cancellation in the first entry
        let mut v = DVector::from_element(n, u);
        v[0] += 1.0;
        let vv = v.norm_squared();
        let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
        let agent_basis = h.columns(1, n - 1).into_owned();
        Self {
            n_agents,
            dim,
            agent_basis,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R_N`, of size `N × (N − 1)`.
    pub fn agent_basis(&self) -> &DMatrix<f64> {
        &self.agent_basis
    }

    /// The lifted `R = R_N ⊗ I_n`, of size `Nn × (N − 1)n`.
    pub fn lifted(&self) -> DMatrix<f64> {
        self.agent_basis
            .kronecker(&DMatrix::identity(self.dim, self.dim))
    }

    /// `(𝟏ᵀ/N ⊗ I) x` and `Rᵀ x`.
    pub fn split(&self, stacked: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let (n, dim) = (self.n_agents, self.dim);
        if stacked.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                got: stacked.len(),
            });
        }
        let block = |i: usize| stacked.rows(i * dim, dim);
        let mut mean = DVector::zeros(dim);
        for i in 0..n {
            mean += block(i);
        }
        mean /= n as f64;
        let mut orth = DVector::zeros((n - 1) * dim);
        for k in 0..n - 1 {
            let mut out = orth.rows_mut(k * dim, dim);
            for i in 0..n {
                out.axpy(self.agent_basis[(i, k)], &block(i), 1.0);
            }
        }
        Ok((mean, orth))
    }

    /// `𝟏 ⊗ mean + R · orth`.
    pub fn reconstruct(&self, mean: &DVector<f64>, orth: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, dim) = (self.n_agents, self.dim);
        if mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mean.len(),
            });
        }
        if orth.len() != (n - 1) * dim {
            return Err(Error::DimensionMismatch {
                expected: (n - 1) * dim,
                got: orth.len(),
            });
        }
        let mut out = DVector::zeros(n * dim);
        for i in 0..n {
            let mut b = out.rows_mut(i * dim, dim);
            b.copy_from(mean);
            for k in 0..n - 1 {
                b.axpy(self.agent_basis[(i, k)], &orth.rows(k * dim, dim), 1.0);
            }
        }
        Ok(out)
    }
}

pub fn build_basis(n_agents: usize, dim: usize) -> ConsensusBasis {
    ConsensusBasis::new(n_agents, dim)
}

pub fn split(
    stacked: &DVector<f64>,
    basis: &ConsensusBasis,
) -> Result<(DVector<f64>, DVector<f64>)> {
    basis.split(stacked)
}

pub fn stack(blocks: &[DVector<f64>]) -> DVector<f64> {
    let dim = blocks.first().map_or(0, |b| b.len());
    DVector::from_iterator(
        blocks.len() * dim,
        blocks.iter().flat_map(|b| b.iter().copied()),
    )
}

/// Minimizer `w★` and optimal value `f★ = Σ f_i(w★)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub w_star: DVector<f64>,
    pub f_star: f64,
}

impl Reference {
    pub fn solve(problem: &Problem, tol: f64) -> Result<Self> {
        let w_star = solve_centralized(problem, tol)?;
        let f_star = problem.total_cost(&w_star);
        Ok(Self { w_star, f_star })
    }

    pub fn cost_relative(&self) -> bool {
        self.f_star.abs() >= RELATIVE_FLOOR
    }

    pub fn var_relative(&self) -> bool {
        self.w_star.norm() >= RELATIVE_FLOOR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    /// `|Σ f_i(x̄) − f★| / |f★|` (absolute if `f★ ≈ 0`).
    pub cost_rel_err: f64,
    /// `‖x̄ − w★‖ / ‖w★‖` (absolute if `w★ ≈ 0`).
    pub var_rel_err: f64,
    /// `‖Rᵀ x‖`.
    pub consensus_err: f64,
    /// ESGT: `‖(1/N) Σ (s_i − (2γ/δ_i) f_i(w_i) d_i)‖`.
    /// GT: `‖(1/N) Σ (s_i − ∇f_i(w_i))‖`.
    pub zbar_norm: f64,
    /// `‖(1/N) Σ s_i‖`.
    pub tracker_err: f64,
    /// `x̄ = (1/N) Σ x_i`, with `x_i = w_i − δ_i d_i` for ESGT and `x_i = w_i` for GT.
    pub mean_point: DVector<f64>,
    /// `‖w − 𝟏 w★‖` on the stacked decision variables.
    pub deviation: f64,
    /// `‖x − 𝟏 w★‖`.
    pub center_deviation: f64,
}

/// Metrics of one snapshot.
#[allow(clippy::too_many_arguments)]
pub fn measure(
    kind: AlgorithmKind,
    states: &[AgentState],
    problem: &Problem,
    reference: &Reference,
    params: &AlgorithmParams,
    dithers: &[DitherConfig],
    basis: &ConsensusBasis,
    t: u64,
) -> Result<RoundMetrics> {
    let n = problem.n_agents();
    let dim = problem.dim();
    if states.len() != n || basis.n_agents() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: states.len().min(basis.n_agents()),
        });
    }
    if kind == AlgorithmKind::Esgt && (dithers.len() != n || params.deltas.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: dithers.len().min(params.deltas.len()),
        });
    }
    if reference.w_star.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: reference.w_star.len(),
        });
    }
    let mut xs = Vec::with_capacity(n);
    let mut zbar = DVector::zeros(dim);
    let mut sbar = DVector::zeros(dim);
    for (i, st) in states.iter().enumerate() {
        if st.w.len() != dim || st.s.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: st.w.len(),
            });
        }
        let cost = problem.cost(i);
        sbar += &st.s;
        match kind {
            AlgorithmKind::Esgt => {
                let d = dithers[i].sample(t);
                let delta = params.deltas[i];
                xs.push(&st.w - &d * delta);
                zbar += &st.s - d * (2.0 * params.gamma / delta * cost.eval(&st.w));
            }
            AlgorithmKind::Gt => {
                xs.push(st.w.clone());
                let g = cost
                    .gradient(&st.w)
                    .ok_or(Error::NoAnalyticGradient { index: i })?;
                zbar += &st.s - g;
            }
        }
    }
    zbar /= n as f64;
    sbar /= n as f64;
    let x = stack(&xs);
    let (mean, orth) = basis.split(&x)?;

    let cost_gap = (problem.total_cost(&mean) - reference.f_star).abs();
    let cost_rel_err = if reference.cost_relative() {
        cost_gap / reference.f_star.abs()
    } else {
        cost_gap
    };
    let var_gap = (&mean - &reference.w_star).norm();
    let var_rel_err = if reference.var_relative() {
        var_gap / reference.w_star.norm()
    } else {
        var_gap
    };
    let dev = |blocks: &mut dyn Iterator<Item = &DVector<f64>>| {
        blocks
            .map(|b| (b - &reference.w_star).norm_squared())
            .sum::<f64>()
            .sqrt()
    };
    Ok(RoundMetrics {
        round: t,
        cost_rel_err,
        var_rel_err,
        consensus_err: orth.norm(),
        zbar_norm: zbar.norm(),
        tracker_err: sbar.norm(),
        mean_point: mean,
        deviation: dev(&mut states.iter().map(|s| &s.w)),
        center_deviation: dev(&mut xs.iter()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSnapshot {
    pub kind: AlgorithmKind,
    pub n_agents: usize,
    pub dim: usize,
    pub gamma: f64,
    pub deltas: Vec<f64>,
    pub rounds: usize,
    pub probe_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunSnapshot,
    /// False when `f★ ≈ 0` and `cost_rel_err` holds absolute errors.
    pub cost_relative: bool,
    /// False when `w★ ≈ 0` and `var_rel_err` holds absolute errors.
    pub var_relative: bool,
    pub metrics: Vec<RoundMetrics>,
    pub final_states: Vec<AgentState>,
}

impl RunRecord {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for m in &self.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m.round,
                fmt_sig12(m.cost_rel_err),
                fmt_sig12(m.var_rel_err),
                fmt_sig12(m.consensus_err),
                fmt_sig12(m.zbar_norm),
                fmt_sig12(m.tracker_err)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn last(&self) -> &RoundMetrics {
        self.metrics
            .last()
            .expect("a run record always holds the initial metrics")
    }
}
