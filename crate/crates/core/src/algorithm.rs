//! Synchronous extremum-seeking gradient tracking (ESGT) and the classic
//! gradient-tracking (GT) baseline.
//!
//! Every round has two phases. Agents first publish an [`OutboundMessage`];
//! then each agent updates from the immutable snapshot of its neighbors'
//! messages. Agent updates inside a round are independent, so the parallel
//! schedule produces bit-identical results to the serial one.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::diagnostics::{measure, ConsensusBasis, Reference, RunRecord, RunSnapshot};
use crate::dither::DitherConfig;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::numerics::all_finite;
use crate::problem::{LocalCost, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Esgt,
    Gt,
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Esgt => "esgt",
            AlgorithmKind::Gt => "gt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

/// Step size `γ`, per-agent dither amplitudes `δ_i`, round count.
///
/// ESGT reads the amplitudes from here; the amplitude stored in each
/// [`DitherConfig`] is not used by the algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmParams {
    pub gamma: f64,
    pub deltas: Vec<f64>,
    pub rounds: usize,
}

impl AlgorithmParams {
    pub fn new(gamma: f64, deltas: Vec<f64>, rounds: usize) -> Result<Self> {
        let p = Self {
            gamma,
            deltas,
            rounds,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same amplitude for every agent.
    pub fn uniform(gamma: f64, delta: f64, n_agents: usize, rounds: usize) -> Result<Self> {
        Self::new(gamma, vec![delta; n_agents], rounds)
    }

    pub fn validate(&self) -> Result<()> {
        // γ = 0 is allowed: it freezes the optimization and leaves pure mixing
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if let Some(d) = self.deltas.iter().find(|&&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "dither amplitude must be positive, got {d}"
            )));
        }
        Ok(())
    }

    /// `δ_M = max δ_i`.
    pub fn max_delta(&self) -> f64 {
        self.deltas.iter().copied().fold(0.0, f64::max)
    }
}

/// Decision variable `w_i^t`, tracker `s_i^t`, and the agent's last cost
/// measurement `f_i(w_i^t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub w: DVector<f64>,
    pub s: DVector<f64>,
    pub round: u64,
    pub measurement: f64,
}

/// What agent `sender` publishes each round. ESGT agents never transmit the
/// raw `w_j`; they send the dither-compensated `w_j − δ_j d_j^t`. GT agents
/// send `w_j` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct OutboundMessage {
    pub sender: usize,
    pub shifted_decision: DVector<f64>,
    pub tracker: DVector<f64>,
}

fn check_setup(
    problem: &Problem,
    n_states: usize,
    dithers: &[DitherConfig],
    params: &AlgorithmParams,
) -> Result<()> {
    let n = problem.n_agents();
    for got in [n_states, dithers.len(), params.deltas.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    if let Some(d) = dithers.iter().find(|d| d.dim() != problem.dim()) {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: d.dim(),
        });
    }
    params.validate()
}

fn check_vectors(problem: &Problem, vs: impl IntoIterator<Item = usize>) -> Result<()> {
    for got in vs {
        if got != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got,
            });
        }
    }
    Ok(())
}

fn check_sync(states: &[AgentState], t: u64) -> Result<()> {
    match states.iter().find(|s| s.round != t) {
        Some(s) => Err(Error::InvalidParameter(format!(
            "agent at round {} while the network is at round {t}",
            s.round
        ))),
        None => Ok(()),
    }
}

/// ESGT initialization: `s_i⁰ = (2γ/δ_i) f_i(w_i⁰) d_i⁰`.
pub fn esgt_init(
    problem: &Problem,
    params: &AlgorithmParams,
    w0: &[DVector<f64>],
    dithers: &[DitherConfig],
) -> Result<Vec<AgentState>> {
    check_setup(problem, w0.len(), dithers, params)?;
    check_vectors(problem, w0.iter().map(|w| w.len()))?;
    Ok(w0
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let f = problem.cost(i).eval(w);
            let scale = 2.0 * params.gamma / params.deltas[i];
            AgentState {
                w: w.clone(),
                s: dithers[i].sample(0) * (scale * f),
                round: 0,
                measurement: f,
            }
        })
        .collect())
}

/// Phase one of an ESGT round.
pub fn esgt_messages(
    states: &[AgentState],
    dithers: &[DitherConfig],
    params: &AlgorithmParams,
) -> Vec<OutboundMessage> {
    states
        .iter()
        .enumerate()
        .map(|(j, st)| OutboundMessage {
            sender: j,
            shifted_decision: &st.w - dithers[j].sample(st.round) * params.deltas[j],
            tracker: st.s.clone(),
        })
        .collect()
}

fn mix(
    graph: &WeightedGraph,
    i: usize,
    messages: &[OutboundMessage],
) -> (DVector<f64>, DVector<f64>) {
    let dim = messages[i].tracker.len();
    let mut w = DVector::zeros(dim);
    let mut s = DVector::zeros(dim);
    for &(j, a) in graph.mixing_row(i) {
        w.axpy(a, &messages[j].shifted_decision, 1.0);
        s.axpy(a, &messages[j].tracker, 1.0);
    }
    (w, s)
}

/// Phase two of an ESGT round for agent `i`.
#[allow(clippy::too_many_arguments)]
pub fn esgt_agent_update(
    i: usize,
    state: &AgentState,
    messages: &[OutboundMessage],
    graph: &WeightedGraph,
    cost: &LocalCost,
    dither: &DitherConfig,
    delta: f64,
    gamma: f64,
) -> Result<AgentState> {
    let t = state.round;
    let (mixed_w, mixed_s) = mix(graph, i, messages);
    let d_now = dither.sample(t);
    let d_next = dither.sample(t + 1);
    let w = mixed_w - &state.s * gamma + &d_next * delta;
    let f = cost.eval(&w);
    let scale = 2.0 * gamma / delta;
    let s = mixed_s + (d_next * f - d_now * state.measurement) * scale;
    if !f.is_finite() || !all_finite(&w) || !all_finite(&s) {
        return Err(Error::NonFinite);
    }
    Ok(AgentState {
        w,
        s,
        round: t + 1,
        measurement: f,
    })
}

fn for_each_agent<F>(n: usize, execution: Execution, update: F) -> Result<Vec<AgentState>>
where
    F: Fn(usize) -> Result<AgentState> + Sync + Send,
{
    match execution {
        Execution::Serial => (0..n).map(update).collect(),
        Execution::Parallel => (0..n).into_par_iter().map(update).collect(),
    }
}

/// One synchronous ESGT round from round `t` to `t + 1`.
pub fn esgt_round(
    states: &[AgentState],
    graph: &WeightedGraph,
    problem: &Problem,
    dithers: &[DitherConfig],
    params: &AlgorithmParams,
    t: u64,
    execution: Execution,
) -> Result<Vec<AgentState>> {
    check_setup(problem, states.len(), dithers, params)?;
    if graph.n_agents() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            got: graph.n_agents(),
        });
    }
    check_vectors(problem, states.iter().flat_map(|s| [s.w.len(), s.s.len()]))?;
    check_sync(states, t)?;
    let messages = esgt_messages(states, dithers, params);
    for_each_agent(states.len(), execution, |i| {
        esgt_agent_update(
            i,
            &states[i],
            &messages,
            graph,
            problem.cost(i),
            &dithers[i],
            params.deltas[i],
            params.gamma,
        )
    })
}

/// GT initialization: `s_i⁰ = ∇f_i(w_i⁰)`.
pub fn gt_init(problem: &Problem, w0: &[DVector<f64>]) -> Result<Vec<AgentState>> {
    if w0.len() != problem.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: problem.n_agents(),
            got: w0.len(),
        });
    }
    check_vectors(problem, w0.iter().map(|w| w.len()))?;
    w0.iter()
        .enumerate()
        .map(|(i, w)| {
            let cost = problem.cost(i);
            let g = cost
                .gradient(w)
                .ok_or(Error::NoAnalyticGradient { index: i })?;
            Ok(AgentState {
                w: w.clone(),
                s: g,
                round: 0,
                measurement: cost.eval(w),
            })
        })
        .collect()
}

/// One synchronous GT round.
pub fn gt_round(
    states: &[AgentState],
    graph: &WeightedGraph,
    problem: &Problem,
    gamma: f64,
    t: u64,
    execution: Execution,
) -> Result<Vec<AgentState>> {
    let n = problem.n_agents();
    for got in [states.len(), graph.n_agents()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    check_vectors(problem, states.iter().flat_map(|s| [s.w.len(), s.s.len()]))?;
    check_sync(states, t)?;
    let messages: Vec<OutboundMessage> = states
        .iter()
        .enumerate()
        .map(|(j, st)| OutboundMessage {
            sender: j,
            shifted_decision: st.w.clone(),
            tracker: st.s.clone(),
        })
        .collect();
    for_each_agent(n, execution, |i| {
        let cost = problem.cost(i);
        let st = &states[i];
        let (mixed_w, mixed_s) = mix(graph, i, &messages);
        let w = mixed_w - &st.s * gamma;
        let g_new = cost
            .gradient(&w)
            .ok_or(Error::NoAnalyticGradient { index: i })?;
        let g_old = cost
            .gradient(&st.w)
            .ok_or(Error::NoAnalyticGradient { index: i })?;
        let s = mixed_s + g_new - g_old;
        let f = cost.eval(&w);
        if !all_finite(&w) || !all_finite(&s) {
            return Err(Error::NonFinite);
        }
        Ok(AgentState {
            w,
            s,
            round: st.round + 1,
            measurement: f,
        })
    })
}

/// A fully specified simulation.
#[derive(Debug, Clone, Copy)]
pub struct Simulation<'a> {
    pub kind: AlgorithmKind,
    pub problem: &'a Problem,
    pub graph: &'a WeightedGraph,
    pub params: &'a AlgorithmParams,
    /// Ignored by GT.
    pub dithers: &'a [DitherConfig],
    pub w0: &'a [DVector<f64>],
    pub probe_every: usize,
    pub reference: &'a Reference,
    pub execution: Execution,
}

impl Simulation<'_> {
    pub fn run(&self) -> Result<RunRecord> {
        self.run_with_observer(|_, _| {})
    }

    /// Runs all rounds, probing metrics at every multiple of `probe_every`
    /// (round 0 included) and calling `observer` after every round with the
    /// round index and the states reached.
    pub fn run_with_observer<F>(&self, mut observer: F) -> Result<RunRecord>
    where
        F: FnMut(u64, &[AgentState]),
    {
        if self.probe_every == 0 {
            return Err(Error::InvalidParameter(
                "probe_every must be positive".into(),
            ));
        }
        let n = self.problem.n_agents();
        if self.graph.n_agents() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.graph.n_agents(),
            });
        }
        let basis = ConsensusBasis::new(n, self.problem.dim());
        let mut states = match self.kind {
            AlgorithmKind::Esgt => esgt_init(self.problem, self.params, self.w0, self.dithers)?,
            AlgorithmKind::Gt => gt_init(self.problem, self.w0)?,
        };
        let probe = |states: &[AgentState], t: u64| {
            measure(
                self.kind,
                states,
                self.problem,
                self.reference,
                self.params,
                self.dithers,
                &basis,
                t,
            )
        };
        let mut metrics = vec![probe(&states, 0)?];
        observer(0, &states);
        for t in 0..self.params.rounds as u64 {
            let next = match self.kind {
                AlgorithmKind::Esgt => esgt_round(
                    &states,
                    self.graph,
                    self.problem,
                    self.dithers,
                    self.params,
                    t,
                    self.execution,
                ),
                AlgorithmKind::Gt => gt_round(
                    &states,
                    self.graph,
                    self.problem,
                    self.params.gamma,
                    t,
                    self.execution,
                ),
            };
            states = next.map_err(|e| Error::AtRound {
                round: t as usize,
                source: Box::new(e),
            })?;
            let reached = t + 1;
            if reached % self.probe_every as u64 == 0 {
                metrics.push(probe(&states, reached)?);
            }
            observer(reached, &states);
        }
        Ok(RunRecord {
            config: RunSnapshot {
                kind: self.kind,
                n_agents: n,
                dim: self.problem.dim(),
                gamma: self.params.gamma,
                deltas: self.params.deltas.clone(),
                rounds: self.params.rounds,
                probe_every: self.probe_every,
            },
            cost_relative: self.reference.cost_relative(),
            var_relative: self.reference.var_relative(),
            metrics,
            final_states: states,
        })
    }
}

/// Runs `kind` with a centrally solved reference point and serial execution.
#[allow(clippy::too_many_arguments)]
pub fn run(
    kind: AlgorithmKind,
    problem: &Problem,
    graph: &WeightedGraph,
    params: &AlgorithmParams,
    dithers: &[DitherConfig],
    w0: &[DVector<f64>],
    probe_every: usize,
) -> Result<RunRecord> {
    let reference = Reference::solve(problem, crate::diagnostics::REFERENCE_TOL)?;
    Simulation {
        kind,
        problem,
        graph,
        params,
        dithers,
        w0,
        probe_every,
        reference: &reference,
        execution: Execution::Serial,
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dither::design_dither;
    use crate::graph::erdos_renyi_connected;
    use crate::problem::personalized_instance;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn single(cost: LocalCost) -> (Problem, WeightedGraph) {
        (
            Problem::new(vec![cost]).unwrap(),
            WeightedGraph::from_edges(1, &[]).unwrap(),
        )
    }

    #[test]
    fn init_with_zero_phase_in_one_dim() {
        let (p, _) = single(LocalCost::squared_distance(v(&[3.0])));
        let d = design_dither(1, &[6], 0.0, 0.1).unwrap();
        let params = AlgorithmParams::uniform(0.01, 0.1, 1, 1).unwrap();
        let st = esgt_init(&p, &params, &[v(&[1.0])], &[d]).unwrap();
        assert_eq!(st[0].s, v(&[0.0]));
        assert_eq!(st[0].measurement, 4.0);
    }

    #[test]
    fn init_hand_arithmetic() {
        // f(w0) = 3, factor 2·0.01/0.1 = 0.2, d⁰ = (0, 1)
        let c = LocalCost::custom(2, std::sync::Arc::new(|_: &DVector<f64>| 3.0), None);
        let (p, _) = single(c);
        let d = design_dither(2, &[4], 0.0, 0.1).unwrap();
        let params = AlgorithmParams::uniform(0.01, 0.1, 1, 1).unwrap();
        let st = esgt_init(&p, &params, &[v(&[0.5, 0.5])], std::slice::from_ref(&d)).unwrap();
        assert!((st[0].s[0]).abs() <= 1e-15);
        assert!((st[0].s[1] - 0.6).abs() <= 1e-15);

        let frozen = AlgorithmParams::uniform(0.0, 0.1, 1, 1).unwrap();
        let st = esgt_init(&p, &frozen, &[v(&[0.5, 0.5])], &[d]).unwrap();
        assert_eq!(st[0].s, v(&[0.0, 0.0]));
    }

    #[test]
    fn init_dimension_mismatch() {
        let (p, _) = single(LocalCost::squared_distance(v(&[0.0, 0.0])));
        let d = design_dither(2, &[4], 0.0, 0.1).unwrap();
        let params = AlgorithmParams::uniform(0.01, 0.1, 1, 1).unwrap();
        assert!(matches!(
            esgt_init(&p, &params, &[v(&[1.0])], std::slice::from_ref(&d)),
            Err(Error::DimensionMismatch { .. })
        ));
        let two = AlgorithmParams::uniform(0.01, 0.1, 2, 1).unwrap();
        assert!(esgt_init(&p, &two, &[v(&[1.0, 0.0])], &[d]).is_err());
    }

    #[test]
    fn frozen_single_agent_keeps_center_fixed() {
        let (p, g) = single(LocalCost::squared_distance(v(&[1.0, -1.0])));
        let d = design_dither(2, &[5], 0.3, 0.1).unwrap();
        let params = AlgorithmParams::uniform(0.0, 0.1, 1, 40).unwrap();
        let mut st = esgt_init(&p, &params, &[v(&[2.0, 0.5])], std::slice::from_ref(&d)).unwrap();
        let x0 = &st[0].w - d.sample(0) * 0.1;
        for t in 0..40 {
            st = esgt_round(
                &st,
                &g,
                &p,
                std::slice::from_ref(&d),
                &params,
                t,
                Execution::Serial,
            )
            .unwrap();
            let x = &st[0].w - d.sample(t + 1) * 0.1;
            assert!((x - &x0).amax() <= 1e-14);
        }
    }

    #[test]
    fn single_agent_descends_on_square() {
        // averaged dynamics contract by 2γ² per round; 50 periods of 12 rounds
        let q = LocalCost::quadratic(DMatrix::from_element(1, 1, 1.0), v(&[0.0]), 0.0).unwrap();
        let (p, g) = single(q);
        let d = design_dither(1, &[12], 0.0, 0.1).unwrap();
        let params = AlgorithmParams::uniform(0.05, 0.1, 1, 600).unwrap();
        let mut st = esgt_init(&p, &params, &[v(&[1.0])], std::slice::from_ref(&d)).unwrap();
        for t in 0..600 {
            st = esgt_round(
                &st,
                &g,
                &p,
                std::slice::from_ref(&d),
                &params,
                t,
                Execution::Serial,
            )
            .unwrap();
        }
        let x = st[0].w[0] - 0.1 * d.sample(600)[0];
        assert!(x.abs() <= 0.1, "x = {x}");
    }

    #[test]
    fn symmetric_start_stays_symmetric() {
        let cost = personalized_instance(1, 3, 8).unwrap().cost(0).clone();
        let p = Problem::new(vec![cost; 5]).unwrap();
        let g = erdos_renyi_connected(5, 0.5, 3).unwrap();
        let d = vec![design_dither(3, &[4, 7], 0.0, 0.2).unwrap(); 5];
        let params = AlgorithmParams::uniform(0.01, 0.2, 5, 200).unwrap();
        let w0 = vec![v(&[1.0, -0.5, 2.0]); 5];
        let mut st = esgt_init(&p, &params, &w0, &d).unwrap();
        for t in 0..200 {
            st = esgt_round(&st, &g, &p, &d, &params, t, Execution::Serial).unwrap();
            for other in &st[1..] {
                assert!((&other.w - &st[0].w).amax() <= 1e-12);
                assert!((&other.s - &st[0].s).amax() <= 1e-12);
            }
        }
    }

    #[test]
    fn messages_carry_compensated_decision() {
        let p = personalized_instance(3, 2, 1).unwrap();
        let d: Vec<_> = (0..3)
            .map(|i| design_dither(2, &[4 + i], 0.1 * i as f64, 0.2).unwrap())
            .collect();
        let params = AlgorithmParams::new(0.01, vec![0.2, 0.1, 0.3], 1).unwrap();
        let w0 = vec![v(&[1.0, 2.0]), v(&[0.0, -1.0]), v(&[3.0, 0.5])];
        let st = esgt_init(&p, &params, &w0, &d).unwrap();
        for (j, m) in esgt_messages(&st, &d, &params).iter().enumerate() {
            assert_eq!(m.sender, j);
            let rebuilt = &m.shifted_decision + d[j].sample(0) * params.deltas[j];
            assert!((rebuilt - &w0[j]).amax() <= 1e-15);
        }
    }

    #[test]
    fn out_of_sync_rejected() {
        let p = personalized_instance(2, 2, 1).unwrap();
        let g = erdos_renyi_connected(2, 1.0, 0).unwrap();
        let d = vec![design_dither(2, &[4], 0.0, 0.2).unwrap(); 2];
        let params = AlgorithmParams::uniform(0.01, 0.2, 2, 1).unwrap();
        let mut st = esgt_init(&p, &params, &[v(&[0.0, 0.0]), v(&[1.0, 1.0])], &d).unwrap();
        st[1].round = 1;
        assert!(esgt_round(&st, &g, &p, &d, &params, 0, Execution::Serial).is_err());
    }

    #[test]
    fn gt_single_agent_is_gradient_descent() {
        let p = personalized_instance(1, 3, 2).unwrap();
        let g = WeightedGraph::from_edges(1, &[]).unwrap();
        let mut w = v(&[1.0, -2.0, 0.5]);
        let mut st = gt_init(&p, std::slice::from_ref(&w)).unwrap();
        for t in 0..50 {
            st = gt_round(&st, &g, &p, 0.05, t, Execution::Serial).unwrap();
            w = &w - p.cost(0).gradient(&w).unwrap() * 0.05;
            assert!((&st[0].w - &w).amax() <= 1e-12);
        }
    }

    #[test]
    fn gt_fixed_point_at_optimum() {
        let p = personalized_instance(4, 2, 6).unwrap();
        let g = erdos_renyi_connected(4, 0.6, 6).unwrap();
        let w_star = crate::problem::solve_centralized(&p, 1e-12).unwrap();
        // consensual optimum with zero trackers is an exact fixed point
        let mut st = gt_init(&p, &vec![w_star.clone(); 4]).unwrap();
        for a in st.iter_mut() {
            a.s.fill(0.0);
        }
        for t in 0..100 {
            st = gt_round(&st, &g, &p, 0.05, t, Execution::Serial).unwrap();
        }
        for a in &st {
            assert!((&a.w - &w_star).norm() <= 1e-9);
            assert!(a.s.norm() <= 1e-9);
        }
        // local-gradient initialization leaves the optimum, then returns
        let mut st = gt_init(&p, &vec![w_star.clone(); 4]).unwrap();
        let mean_s =
            |st: &[AgentState]| st.iter().fold(DVector::zeros(2), |acc, a| acc + &a.s) / 4.0;
        assert!(mean_s(&st).norm() <= 1e-9);
        for t in 0..4000 {
            st = gt_round(&st, &g, &p, 0.05, t, Execution::Serial).unwrap();
        }
        for a in &st {
            assert!((&a.w - &w_star).norm() <= 1e-8);
        }
        assert!(mean_s(&st).norm() <= 1e-8);
    }

    #[test]
    fn gt_requires_gradients() {
        let c = LocalCost::custom(1, std::sync::Arc::new(|w: &DVector<f64>| w[0] * w[0]), None);
        let p = Problem::new(vec![c]).unwrap();
        assert!(matches!(
            gt_init(&p, &[v(&[0.0])]),
            Err(Error::NoAnalyticGradient { index: 0 })
        ));
    }

    #[test]
    fn divergence_reports_round() {
        let p = personalized_instance(3, 2, 4).unwrap();
        let g = erdos_renyi_connected(3, 1.0, 0).unwrap();
        let d = vec![design_dither(2, &[6], 0.0, 0.2).unwrap(); 3];
        let params = AlgorithmParams::uniform(50.0, 0.2, 3, 1000).unwrap();
        let w0 = vec![v(&[4.0, 4.0]); 3];
        let err = run(AlgorithmKind::Esgt, &p, &g, &params, &d, &w0, 10).unwrap_err();
        match err {
            Error::AtRound { round, source } => {
                assert_eq!(*source, Error::NonFinite);
                assert!(round < 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rounds_records_initial_metrics() {
        let p = personalized_instance(3, 2, 4).unwrap();
        let g = erdos_renyi_connected(3, 1.0, 0).unwrap();
        let d = vec![design_dither(2, &[6], 0.0, 0.2).unwrap(); 3];
        let params = AlgorithmParams::uniform(0.01, 0.2, 3, 0).unwrap();
        let w0 = vec![v(&[1.0, 1.0]); 3];
        let rec = run(AlgorithmKind::Esgt, &p, &g, &params, &d, &w0, 5).unwrap();
        assert_eq!(rec.metrics.len(), 1);
        assert_eq!(rec.metrics[0].round, 0);
    }

    #[test]
    fn serial_and_parallel_bit_identical() {
        let p = personalized_instance(12, 3, 21).unwrap();
        let g = erdos_renyi_connected(12, 0.3, 21).unwrap();
        let d: Vec<_> = (0..12)
            .map(|_| design_dither(3, &[4, 6], 0.0, 0.2).unwrap())
            .collect();
        let params = AlgorithmParams::uniform(0.02, 0.2, 12, 300).unwrap();
        let w0: Vec<_> = (0..12).map(|i| v(&[i as f64 * 0.3, -1.0, 0.5])).collect();
        let (mut a, mut b) = (
            esgt_init(&p, &params, &w0, &d).unwrap(),
            esgt_init(&p, &params, &w0, &d).unwrap(),
        );
        for t in 0..300 {
            a = esgt_round(&a, &g, &p, &d, &params, t, Execution::Serial).unwrap();
            b = esgt_round(&b, &g, &p, &d, &params, t, Execution::Parallel).unwrap();
        }
        assert_eq!(a, b);
        let (mut a, mut b) = (gt_init(&p, &w0).unwrap(), gt_init(&p, &w0).unwrap());
        for t in 0..300 {
            a = gt_round(&a, &g, &p, 0.02, t, Execution::Serial).unwrap();
            b = gt_round(&b, &g, &p, 0.02, t, Execution::Parallel).unwrap();
        }
        assert_eq!(a, b);
    }
}
