//! Per-iteration execution of adapt-then-combine diffusion LMS over the
//! fading multiple-access network.
//!
//! One iteration, in order:
//!
//! 1. every node adapts its intermediate estimate from a fresh local
//!    measurement;
//! 2. every in-range neighbor transmits that intermediate estimate;
//! 3. per directed link, the fading gain, receiver noise, and the
//!    superposition of all other transmissions are realized — within one
//!    iteration a transmitter's gain into a receiver is a single shared
//!    draw across its desired and interfering roles;
//! 4. per-link SINRs gate the links into each node's active set;
//! 5. the combiner produces weights on the active set (stateful rules
//!    first fold this iteration's equalized receptions into their
//!    estimates, using the previous iteration's estimate as reference);
//! 6. each node combines its own intermediate with the equalized active
//!    receptions.
//!
//! All estimate updates within an iteration are synchronous: adaptation
//! everywhere uses the previous iteration's estimates.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::Rng;
use std::sync::Arc;

use crate::channel::{
    complex_gaussian, complex_gaussian_vector, gate_links, sinr, superpose_interference,
    ChannelParams, Equalizer,
};
use crate::combine::{ActiveSetWeights, AdaptiveCombiner, LEFT_STOCHASTIC_TOL};
use crate::error::Error;
use crate::linalg::psd_sqrt_factor;
use crate::topology::NetworkTopology;
use crate::Result;

/// The invariant parameter vector the network estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    omega: DVector<Complex64>,
}

impl GroundTruth {
    pub fn new(omega: DVector<Complex64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::Config {
                field: "omega_true".into(),
                message: "the estimated parameter vector cannot be empty".into(),
            });
        }
        if omega.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Config {
                field: "omega_true".into(),
                message: "the estimated parameter vector must be finite".into(),
            });
        }
        Ok(Self { omega })
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.omega
    }

    pub fn squared_norm(&self) -> f64 {
        self.omega.norm_squared()
    }

    /// The network-stacked copy `1_K (x) omega`.
    pub fn stacked(&self, node_count: usize) -> DVector<Complex64> {
        let m = self.dim();
        DVector::from_fn(node_count * m, |i, _| self.omega[i % m])
    }
}

/// One node's filter state and local statistics.
#[derive(Debug, Clone)]
pub struct NodeState {
    estimate: DVector<Complex64>,
    intermediate: DVector<Complex64>,
    step_size: f64,
    regressor_cov: DMatrix<Complex64>,
    regressor_factor: DMatrix<Complex64>,
    meas_noise_var: f64,
}

impl NodeState {
    /// `initial` is the estimate before the first iteration. The
    /// regressor covariance `E{u^* u}` must be Hermitian positive
    /// semidefinite; its square-root factor is fixed here so draws are
    /// cheap.
    pub fn new(
        initial: DVector<Complex64>,
        step_size: f64,
        regressor_cov: DMatrix<Complex64>,
        meas_noise_var: f64,
    ) -> Result<Self> {
        let m = initial.len();
        if m == 0 {
            return Err(Error::Config {
                field: "initial".into(),
                message: "estimates cannot be empty".into(),
            });
        }
        if !(step_size > 0.0) || !step_size.is_finite() {
            return Err(Error::Config {
                field: "step_size".into(),
                message: format!("must be positive and finite, got {step_size}"),
            });
        }
        if regressor_cov.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "regressor covariance is {}x{} for estimates of length {m}",
                regressor_cov.nrows(),
                regressor_cov.ncols()
            )));
        }
        if meas_noise_var < 0.0 || !meas_noise_var.is_finite() {
            return Err(Error::Config {
                field: "meas_noise_var".into(),
                message: format!("must be nonnegative and finite, got {meas_noise_var}"),
            });
        }
        let regressor_factor = psd_sqrt_factor(&regressor_cov, 1e-10)?;
        Ok(Self {
            intermediate: initial.clone(),
            estimate: initial,
            step_size,
            regressor_cov,
            regressor_factor,
            meas_noise_var,
        })
    }

    /// Fresh node starting from the zero vector, the conventional
    /// initialization.
    pub fn zeroed(
        dim: usize,
        step_size: f64,
        regressor_cov: DMatrix<Complex64>,
        meas_noise_var: f64,
    ) -> Result<Self> {
        Self::new(DVector::zeros(dim), step_size, regressor_cov, meas_noise_var)
    }

    pub fn dim(&self) -> usize {
        self.estimate.len()
    }

    pub fn estimate(&self) -> &DVector<Complex64> {
        &self.estimate
    }

    pub fn intermediate(&self) -> &DVector<Complex64> {
        &self.intermediate
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn regressor_cov(&self) -> &DMatrix<Complex64> {
        &self.regressor_cov
    }

    pub fn meas_noise_var(&self) -> f64 {
        self.meas_noise_var
    }

    /// Draw a regressor row with covariance `E{u^* u} = R_u`.
    pub fn draw_regressor(&self, rng: &mut impl Rng) -> RowDVector<Complex64> {
        let z = complex_gaussian_vector(self.dim(), 1.0, rng);
        (&self.regressor_factor * z).adjoint()
    }
}

/// The scalar observation `d = u omega + v` of the linear model.
pub fn measurement(
    regressor: &RowDVector<Complex64>,
    truth: &GroundTruth,
    noise: Complex64,
) -> Result<Complex64> {
    if regressor.len() != truth.dim() {
        return Err(Error::Dimension(format!(
            "regressor has length {} but the parameter vector {}",
            regressor.len(),
            truth.dim()
        )));
    }
    Ok((regressor * truth.vector())[(0, 0)] + noise)
}

/// LMS adaptation: `psi = omega + mu u^* (d - u omega)`.
pub fn adapt(
    previous: &DVector<Complex64>,
    regressor: &RowDVector<Complex64>,
    observation: Complex64,
    step_size: f64,
) -> Result<DVector<Complex64>> {
    if regressor.len() != previous.len() {
        return Err(Error::Dimension(format!(
            "regressor has length {} but the estimate {}",
            regressor.len(),
            previous.len()
        )));
    }
    let error = observation - (regressor * previous)[(0, 0)];
    Ok(previous + regressor.adjoint() * (error * step_size))
}

/// Fuse a node's own intermediate estimate with equalized receptions.
///
/// `received` holds `(l, reception, equalizer gain)` for every active
/// neighbor `l != k`, sorted by `l`; `weights` is aligned with the sorted
/// `active` set (which contains `k`). The self term bypasses the channel.
/// Weights must sum to one within [`LEFT_STOCHASTIC_TOL`]; a violation is
/// a combiner bug and is reported as a contract error.
pub fn combine(
    k: usize,
    own: &DVector<Complex64>,
    received: &[(usize, DVector<Complex64>, Complex64)],
    active: &[usize],
    weights: &[f64],
) -> Result<DVector<Complex64>> {
    if active.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} active links but {} weights",
            active.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > LEFT_STOCHASTIC_TOL {
        return Err(Error::Contract(format!(
            "combination weights for node {k} sum to {total}, not one"
        )));
    }
    if weights.iter().any(|w| *w < 0.0) {
        return Err(Error::Contract(format!(
            "negative combination weight for node {k}"
        )));
    }
    let mut out = DVector::zeros(own.len());
    for (&l, &w) in active.iter().zip(weights) {
        let scale = Complex64::new(w, 0.0);
        if l == k {
            out += own * scale;
            continue;
        }
        let idx = received
            .binary_search_by_key(&l, |(node, _, _)| *node)
            .map_err(|_| Error::Contract(format!(
                "active link ({l}, {k}) has no reception to combine"
            )))?;
        let (_, reception, gain) = &received[idx];
        if reception.len() != own.len() {
            return Err(Error::Dimension(format!(
                "reception from node {l} has length {} but expected {}",
                reception.len(),
                own.len()
            )));
        }
        out += reception * (gain * scale);
    }
    Ok(out)
}

/// Every random draw one iteration consumes, in a fixed layout so a run
/// can be replayed or cross-checked against the closed-form recursion.
#[derive(Debug, Clone)]
pub struct IterationDraws {
    /// Per node: the measurement regressor row.
    pub regressors: Vec<RowDVector<Complex64>>,
    /// Per node: the scalar measurement noise.
    pub meas_noise: Vec<Complex64>,
    /// Entry `(l, k)`: the fading gain of the directed link; only
    /// in-range off-diagonal entries are meaningful.
    pub gains: DMatrix<Complex64>,
    /// `link_noise[k]` is aligned with the sorted transmitters into `k`
    /// (the node's neighbors minus itself).
    pub link_noise: Vec<Vec<DVector<Complex64>>>,
}

/// The per-node outcome of one iteration.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Squared estimation error `||omega_true - omega_k||^2` per node.
    pub squared_errors: Vec<f64>,
    /// Realized active set per node (sorted, includes the node).
    pub active_sets: Vec<Vec<usize>>,
    /// Combination weights per node, aligned with its active set.
    pub weights: Vec<Vec<f64>>,
    /// Stacked error vector `omega_true - omega_k` over all nodes.
    pub error_vector: DVector<Complex64>,
}

/// Weight source driving the combination step of a run.
///
/// Stateless rules are shared read-only; the adaptive rule owns
/// per-trial state and folds each iteration's squared deviations in
/// before producing weights.
#[derive(Clone)]
pub enum Combiner {
    Rule(Arc<dyn ActiveSetWeights>),
    Adaptive(AdaptiveCombiner),
}

impl Combiner {
    pub fn rule(rule: impl ActiveSetWeights + 'static) -> Self {
        Combiner::Rule(Arc::new(rule))
    }

    pub fn adaptive(state: AdaptiveCombiner) -> Self {
        Combiner::Adaptive(state)
    }

    /// Weights for node `k` on `active`, given this iteration's squared
    /// deviations of the equalized receptions from the node's previous
    /// estimate (aligned with `active`; ignored by stateless rules).
    pub fn weights_for(
        &mut self,
        k: usize,
        active: &[usize],
        sq_deviations: &[f64],
    ) -> Result<Vec<f64>> {
        match self {
            Combiner::Rule(rule) => rule.weights(k, active),
            Combiner::Adaptive(state) => {
                state.update(k, active, sq_deviations)?;
                state.weights(k, active)
            }
        }
    }
}

impl std::fmt::Debug for Combiner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Combiner::Rule(_) => f.write_str("Combiner::Rule"),
            Combiner::Adaptive(state) => write!(f, "Combiner::Adaptive({state:?})"),
        }
    }
}

/// One network of diffusing nodes over one channel realization stream.
#[derive(Debug, Clone)]
pub struct DiffusionSim {
    topo: NetworkTopology,
    params: ChannelParams,
    equalizer: Equalizer,
    truth: GroundTruth,
    nodes: Vec<NodeState>,
    /// Static interference variance per directed link, precomputed.
    ini_var: DMatrix<f64>,
    iteration: usize,
}

impl DiffusionSim {
    pub fn new(
        topo: NetworkTopology,
        params: ChannelParams,
        equalizer: Equalizer,
        truth: GroundTruth,
        nodes: Vec<NodeState>,
    ) -> Result<Self> {
        let k_count = topo.node_count();
        if params.node_count() != k_count {
            return Err(Error::Dimension(format!(
                "channel parameters cover {} nodes but the topology has {k_count}",
                params.node_count()
            )));
        }
        if nodes.len() != k_count {
            return Err(Error::Dimension(format!(
                "{} node states for {k_count} nodes",
                nodes.len()
            )));
        }
        let m = truth.dim();
        if nodes.iter().any(|n| n.dim() != m) {
            return Err(Error::Dimension(
                "every node estimate must match the parameter vector length".into(),
            ));
        }
        let mut ini_var = DMatrix::zeros(k_count, k_count);
        for k in 0..k_count {
            for &l in topo.neighbors(k) {
                if l != k {
                    ini_var[(l, k)] = params.interference_variance(&topo, l, k)?;
                }
            }
        }
        Ok(Self {
            topo,
            params,
            equalizer,
            truth,
            nodes,
            ini_var,
            iteration: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.truth.dim()
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topo
    }

    pub fn node(&self, k: usize) -> &NodeState {
        &self.nodes[k]
    }

    /// Pin every node's estimate, e.g. to study the stationary regime.
    pub fn reset_estimates(&mut self, estimate: &DVector<Complex64>) -> Result<()> {
        if estimate.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "estimate has length {} but the model {}",
                estimate.len(),
                self.dim()
            )));
        }
        for node in &mut self.nodes {
            node.estimate = estimate.clone();
        }
        Ok(())
    }

    /// Current per-node squared errors and stacked error vector.
    fn error_snapshot(&self) -> (Vec<f64>, DVector<Complex64>) {
        let m = self.dim();
        let mut sq = Vec::with_capacity(self.nodes.len());
        let mut stacked = DVector::zeros(self.nodes.len() * m);
        for (k, node) in self.nodes.iter().enumerate() {
            let err = self.truth.vector() - &node.estimate;
            sq.push(err.norm_squared());
            stacked.rows_mut(k * m, m).copy_from(&err);
        }
        (sq, stacked)
    }

    /// Sorted transmitters into `k`: its neighbors minus itself.
    fn transmitters(&self, k: usize) -> Vec<usize> {
        self.topo
            .neighbors(k)
            .iter()
            .copied()
            .filter(|&l| l != k)
            .collect()
    }

    /// Realize every random quantity of the next iteration from `rng`.
    ///
    /// Draw order is fixed: per node ascending, the regressor then the
    /// measurement noise; then per receiver ascending, the gain of each
    /// sorted transmitter; then per receiver ascending, the noise vector
    /// of each sorted transmitter.
    pub fn draw_iteration(&self, rng: &mut impl Rng) -> Result<IterationDraws> {
        let k_count = self.node_count();
        let m = self.dim();
        let mut regressors = Vec::with_capacity(k_count);
        let mut meas_noise = Vec::with_capacity(k_count);
        for node in &self.nodes {
            regressors.push(node.draw_regressor(rng));
            meas_noise.push(complex_gaussian(node.meas_noise_var, rng));
        }
        let mut gains = DMatrix::zeros(k_count, k_count);
        for k in 0..k_count {
            for l in self.transmitters(k) {
                gains[(l, k)] = self.params.draw_gain(&self.topo, l, k, rng)?;
            }
        }
        let mut link_noise = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let noise = self
                .transmitters(k)
                .iter()
                .map(|&l| complex_gaussian_vector(m, self.params.noise_var(l, k), rng))
                .collect();
            link_noise.push(noise);
        }
        Ok(IterationDraws {
            regressors,
            meas_noise,
            gains,
            link_noise,
        })
    }

    /// Advance one iteration with externally supplied draws.
    pub fn step_with(
        &mut self,
        combiner: &mut Combiner,
        draws: &IterationDraws,
    ) -> Result<StepRecord> {
        let k_count = self.node_count();
        let m = self.dim();
        if draws.regressors.len() != k_count
            || draws.meas_noise.len() != k_count
            || draws.gains.shape() != (k_count, k_count)
            || draws.link_noise.len() != k_count
        {
            return Err(Error::Dimension(
                "iteration draws do not match the network shape".into(),
            ));
        }

        // (1) Synchronous adaptation from fresh local measurements.
        for k in 0..k_count {
            let d = measurement(&draws.regressors[k], &self.truth, draws.meas_noise[k])?;
            self.nodes[k].intermediate = adapt(
                &self.nodes[k].estimate,
                &draws.regressors[k],
                d,
                self.nodes[k].step_size,
            )?;
        }

        // (2)-(6) Reception, gating, weighting and combination per node.
        let mut new_estimates = Vec::with_capacity(k_count);
        let mut active_sets = Vec::with_capacity(k_count);
        let mut weight_rows = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let transmitters = self.transmitters(k);
            let gains: Vec<(usize, Complex64)> =
                transmitters.iter().map(|&l| (l, draws.gains[(l, k)])).collect();
            let transmissions: Vec<(usize, &DVector<Complex64>)> = transmitters
                .iter()
                .map(|&l| (l, &self.nodes[l].intermediate))
                .collect();

            let mut sinrs = Vec::with_capacity(transmitters.len());
            for &l in &transmitters {
                sinrs.push((l, sinr(&gains, l, self.params.noise_var(l, k))?));
            }
            let active = gate_links(k, &sinrs, self.params.sinr_threshold());

            // Realize and equalize every active reception.
            let mut received: Vec<(usize, DVector<Complex64>, Complex64)> = Vec::new();
            for &l in &active {
                if l == k {
                    continue;
                }
                if draws.link_noise[k].len() != transmitters.len() {
                    return Err(Error::Dimension(format!(
                        "link noise for receiver {k} does not cover its transmitters"
                    )));
                }
                let t_idx = transmitters
                    .binary_search(&l)
                    .expect("active links transmit");
                let noise = &draws.link_noise[k][t_idx];
                if noise.len() != m {
                    return Err(Error::Dimension(format!(
                        "link noise on ({l}, {k}) has length {}, expected {m}",
                        noise.len()
                    )));
                }
                let beta = draws.gains[(l, k)];
                let ini = superpose_interference(&transmissions, &gains, k, l)?;
                let reception = &self.nodes[l].intermediate * beta + ini + noise;
                let gain =
                    self.equalizer
                        .gain(beta, self.ini_var[(l, k)], self.params.noise_var(l, k))?;
                received.push((l, reception, gain));
            }

            // Squared deviations of the equalized receptions from the
            // node's previous estimate, feeding stateful combiners.
            let deviations: Vec<f64> = active
                .iter()
                .map(|&l| {
                    if l == k {
                        (&self.nodes[k].intermediate - &self.nodes[k].estimate).norm_squared()
                    } else {
                        let idx = received
                            .binary_search_by_key(&l, |(node, _, _)| *node)
                            .expect("every active link was received");
                        let (_, reception, gain) = &received[idx];
                        (reception * *gain - &self.nodes[k].estimate).norm_squared()
                    }
                })
                .collect();

            let weights = combiner.weights_for(k, &active, &deviations)?;
            let estimate = combine(k, &self.nodes[k].intermediate, &received, &active, &weights)?;
            new_estimates.push(estimate);
            active_sets.push(active);
            weight_rows.push(weights);
        }

        for (node, estimate) in self.nodes.iter_mut().zip(new_estimates) {
            node.estimate = estimate;
        }
        self.iteration += 1;

        let (squared_errors, error_vector) = self.error_snapshot();
        Ok(StepRecord {
            squared_errors,
            active_sets,
            weights: weight_rows,
            error_vector,
        })
    }

    /// Advance one iteration, drawing everything from `rng`.
    pub fn step(&mut self, combiner: &mut Combiner, rng: &mut impl Rng) -> Result<StepRecord> {
        let draws = self.draw_iteration(rng)?;
        self.step_with(combiner, &draws)
    }
}

/// Everything one trial produces for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    /// `squared_errors[i][k]`: node `k`'s squared error after `i`
    /// iterations; row 0 is the initial state.
    pub squared_errors: Vec<Vec<f64>>,
    /// Stacked error vectors per iteration (same indexing), kept only on
    /// request.
    pub error_vectors: Option<Vec<DVector<Complex64>>>,
}

/// Run one trial of `horizon` iterations, recording per-iteration errors
/// (and, optionally, full error vectors for bias studies).
pub fn run_trial(
    mut sim: DiffusionSim,
    mut combiner: Combiner,
    horizon: usize,
    rng: &mut impl Rng,
    record_error_vectors: bool,
) -> Result<TrialOutput> {
    let mut squared_errors = Vec::with_capacity(horizon + 1);
    let mut error_vectors = record_error_vectors.then(|| Vec::with_capacity(horizon + 1));
    let (sq0, err0) = sim.error_snapshot();
    squared_errors.push(sq0);
    if let Some(v) = error_vectors.as_mut() {
        v.push(err0);
    }
    for _ in 0..horizon {
        let record = sim.step(&mut combiner, rng)?;
        squared_errors.push(record.squared_errors);
        if let Some(v) = error_vectors.as_mut() {
            v.push(record.error_vector);
        }
    }
    Ok(TrialOutput {
        squared_errors,
        error_vectors,
    })
}

/// Trial-averaged squared-error traces.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdTrace {
    /// `per_node[i][k]`: mean squared deviation of node `k` after `i`
    /// iterations (row 0 is the initial state).
    pub per_node: Vec<Vec<f64>>,
    /// Node-averaged network trace, same indexing.
    pub network: Vec<f64>,
    pub trials: usize,
}

impl MsdTrace {
    /// Mean over the final `window` fraction of the trace (per node and
    /// network-wide), the conventional steady-state readout.
    pub fn steady_state(&self, window: f64) -> Result<(Vec<f64>, f64)> {
        if !(window > 0.0 && window <= 1.0) {
            return Err(Error::Analysis(format!(
                "steady-state window must lie in (0, 1], got {window}"
            )));
        }
        let len = self.network.len();
        let take = ((len as f64 * window).ceil() as usize).clamp(1, len);
        let start = len - take;
        let nodes = self.per_node[0].len();
        let mut per_node = vec![0.0; nodes];
        for row in &self.per_node[start..] {
            for (acc, v) in per_node.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for acc in &mut per_node {
            *acc /= take as f64;
        }
        let network = self.network[start..].iter().sum::<f64>() / take as f64;
        Ok((per_node, network))
    }
}

/// Accumulates squared-error records across trials in a fixed order.
#[derive(Debug, Clone)]
pub struct MsdAccumulator {
    sums: Vec<Vec<f64>>,
    trials: usize,
}

impl MsdAccumulator {
    pub fn new(iterations: usize, node_count: usize) -> Result<Self> {
        if iterations == 0 || node_count == 0 {
            return Err(Error::Analysis(
                "squared-error traces need at least one iteration and one node".into(),
            ));
        }
        Ok(Self {
            sums: vec![vec![0.0; node_count]; iterations],
            trials: 0,
        })
    }

    /// Fold in one trial's `squared_errors` matrix.
    pub fn add_trial(&mut self, squared_errors: &[Vec<f64>]) -> Result<()> {
        if squared_errors.len() != self.sums.len() {
            return Err(Error::Dimension(format!(
                "trial has {} iteration rows, accumulator {}",
                squared_errors.len(),
                self.sums.len()
            )));
        }
        for (acc, row) in self.sums.iter_mut().zip(squared_errors) {
            if row.len() != acc.len() {
                return Err(Error::Dimension(format!(
                    "trial row has {} nodes, accumulator {}",
                    row.len(),
                    acc.len()
                )));
            }
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        self.trials += 1;
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Trial-averaged traces; at least one trial must have been added.
    pub fn finalize(self) -> Result<MsdTrace> {
        if self.trials == 0 {
            return Err(Error::Analysis("no trials accumulated".into()));
        }
        let n = self.trials as f64;
        let nodes = self.sums[0].len() as f64;
        let per_node: Vec<Vec<f64>> = self
            .sums
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / n).collect())
            .collect();
        let network = per_node
            .iter()
            .map(|row| row.iter().sum::<f64>() / nodes)
            .collect();
        Ok(MsdTrace {
            per_node,
            network,
            trials: self.trials,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combine::Uniform;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn reference_truth() -> GroundTruth {
        GroundTruth::new(DVector::from_vec(vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(-0.5, -0.5),
        ]))
        .unwrap()
    }

    fn identity_cov(m: usize) -> DMatrix<Complex64> {
        DMatrix::identity(m, m)
    }

    #[test]
    fn adaptation_examples() {
        // Zero step size freezes the estimate.
        let omega = DVector::from_vec(vec![Complex64::new(0.3, -0.2)]);
        let u = RowDVector::from_vec(vec![Complex64::new(1.0, 2.0)]);
        // step_size = 0 is rejected by NodeState, but adapt itself is a
        // pure function and the degenerate value shows the structure.
        let frozen = adapt(&omega, &u, Complex64::new(5.0, 0.0), 0.0).unwrap();
        assert_eq!(frozen, omega);

        // From zero, u = [1, 0], d = 1, mu = 0.5: psi = [0.5, 0].
        let zero = DVector::zeros(2);
        let u = RowDVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let psi = adapt(&zero, &u, Complex64::new(1.0, 0.0), 0.5).unwrap();
        assert_eq!(
            psi,
            DVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)])
        );

        // At the true vector with noiseless data the update vanishes
        // exactly: the observation is recomputed from the same floats.
        let truth = reference_truth();
        let mut r = rng(3);
        for _ in 0..50 {
            let u = RowDVector::from_fn(2, |_, _| complex_gaussian(1.0, &mut r));
            let d = measurement(&u, &truth, Complex64::new(0.0, 0.0)).unwrap();
            let psi = adapt(truth.vector(), &u, d, 0.7).unwrap();
            assert_eq!(&psi, truth.vector());
        }
    }

    #[test]
    fn measurement_matches_the_reference_vector() {
        let truth = reference_truth();
        let u = RowDVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let d = measurement(&u, &truth, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(d, Complex64::new(1.0, 1.0));
        // Initial error of a zeroed network equals the squared norm.
        assert_relative_eq!(truth.squared_norm(), 2.5, max_relative = 1e-15);
    }

    #[test]
    fn zero_covariance_gives_zero_regressors_and_noise_only_data() {
        let node = NodeState::zeroed(2, 0.01, DMatrix::zeros(2, 2), 1.0).unwrap();
        let mut r = rng(4);
        let u = node.draw_regressor(&mut r);
        assert_eq!(u, RowDVector::zeros(2));
        let truth = reference_truth();
        let v = Complex64::new(0.25, -0.5);
        assert_eq!(measurement(&u, &truth, v).unwrap(), v);
    }

    #[test]
    fn regressor_sample_covariance_matches_the_prescription() {
        // Non-diagonal Hermitian covariance.
        let cov = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.3),
            Complex64::new(0.5, -0.3),
            Complex64::new(1.0, 0.0),
        ]);
        let node = NodeState::zeroed(2, 0.01, cov.clone(), 0.0).unwrap();
        let mut r = rng(99);
        let n = 100_000;
        let mut acc = DMatrix::<Complex64>::zeros(2, 2);
        for _ in 0..n {
            let u = node.draw_regressor(&mut r);
            acc += u.adjoint() * &u;
        }
        acc /= Complex64::new(n as f64, 0.0);
        let diff = (&acc - &cov).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let scale = cov.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(
            diff / scale < 0.03,
            "sample covariance off by {:.2}%",
            100.0 * diff / scale
        );
    }

    #[test]
    fn node_state_rejects_bad_statistics() {
        assert!(NodeState::zeroed(2, 0.0, identity_cov(2), 0.1).is_err());
        assert!(NodeState::zeroed(2, -0.1, identity_cov(2), 0.1).is_err());
        assert!(NodeState::zeroed(2, 0.1, identity_cov(3), 0.1).is_err());
        assert!(NodeState::zeroed(2, 0.1, identity_cov(2), -1.0).is_err());
        // Non-Hermitian covariance.
        let mut skew = identity_cov(2);
        skew[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(NodeState::zeroed(2, 0.1, skew, 0.1).is_err());
    }

    #[test]
    fn combine_examples_and_contract() {
        let own = DVector::from_vec(vec![Complex64::new(1.0, 2.0)]);
        // Lone node keeps its intermediate exactly.
        let out = combine(3, &own, &[], &[3], &[1.0]).unwrap();
        assert_eq!(out, own);

        // Two nodes, ideal exchange, arithmetic mean.
        let other = DVector::from_vec(vec![Complex64::new(3.0, 0.0)]);
        let received = vec![(1usize, other.clone(), Complex64::new(1.0, 0.0))];
        let out = combine(0, &own, &received, &[0, 1], &[0.5, 0.5]).unwrap();
        assert_eq!(out, (own.clone() + other) * Complex64::new(0.5, 0.0));

        // Weight sums must hit one within the contract tolerance.
        let err = combine(0, &own, &received, &[0, 1], &[0.5, 0.5 + 1e-9]);
        assert!(matches!(err, Err(Error::Contract(_))));
        // A missing reception for an active link is a contract violation.
        assert!(combine(0, &own, &[], &[0, 1], &[0.5, 0.5]).is_err());
    }

    fn pair_topology() -> NetworkTopology {
        // Two disconnected pairs: every receiver has exactly one
        // transmitter, so no third-party interference exists.
        NetworkTopology::new(
            vec![[0.0, 0.0], [0.3, 0.0], [10.0, 0.0], [10.3, 0.0]],
            0.5,
        )
        .unwrap()
    }

    fn ideal_draws(sim: &DiffusionSim, rng: &mut ChaCha8Rng) -> IterationDraws {
        // Real measurement draws, but a distortion-free channel: unit
        // gains, no receiver noise.
        let mut draws = sim.draw_iteration(rng).unwrap();
        for k in 0..sim.node_count() {
            for l in 0..sim.node_count() {
                if draws.gains[(l, k)] != Complex64::new(0.0, 0.0) {
                    draws.gains[(l, k)] = Complex64::new(1.0, 0.0);
                }
            }
            for noise in &mut draws.link_noise[k] {
                noise.fill(Complex64::new(0.0, 0.0));
            }
        }
        draws
    }

    fn pair_sim(meas_noise: f64, initial: Option<&DVector<Complex64>>) -> DiffusionSim {
        let topo = pair_topology();
        let params = ChannelParams::uniform(4, 1.0, 2.0, 1.0, 0.0, 0.0).unwrap();
        let truth = reference_truth();
        let nodes: Vec<NodeState> = (0..4)
            .map(|_| match initial {
                Some(v) => NodeState::new(v.clone(), 0.05, identity_cov(2), meas_noise).unwrap(),
                None => NodeState::zeroed(2, 0.05, identity_cov(2), meas_noise).unwrap(),
            })
            .collect();
        DiffusionSim::new(topo, params, Equalizer::Zf, truth, nodes).unwrap()
    }

    #[test]
    fn ideal_exchange_matches_a_textbook_reference_step_for_step() {
        let mut sim = pair_sim(0.01, None);
        let mut combiner = Combiner::rule(Uniform);
        let mut r = rng(7);

        // Independent reference: plain adapt-then-average on each pair.
        let truth = reference_truth();
        let mut reference: Vec<DVector<Complex64>> = vec![DVector::zeros(2); 4];
        let pairs = [(0usize, 1usize), (1, 0), (2, 3), (3, 2)];

        for _ in 0..50 {
            let draws = ideal_draws(&sim, &mut r);
            // Reference update with identical draws.
            let mut psis = Vec::with_capacity(4);
            for k in 0..4 {
                let d = (&draws.regressors[k] * truth.vector())[(0, 0)] + draws.meas_noise[k];
                let err = d - (&draws.regressors[k] * &reference[k])[(0, 0)];
                psis.push(&reference[k] + draws.regressors[k].adjoint() * (err * 0.05));
            }
            for (k, partner) in pairs {
                reference[k] = &psis[k] * Complex64::new(0.5, 0.0)
                    + &psis[partner] * Complex64::new(0.5, 0.0);
            }

            let record = sim.step_with(&mut combiner, &draws).unwrap();
            for k in 0..4 {
                assert_eq!(
                    sim.node(k).estimate(),
                    &reference[k],
                    "node {k} diverged from the reference at iteration {}",
                    sim.iteration()
                );
            }
            // Both pair members are mutually active.
            assert_eq!(record.active_sets[0], vec![0, 1]);
            assert_eq!(record.active_sets[2], vec![2, 3]);
        }
    }

    #[test]
    fn true_vector_is_a_fixed_point_of_noiseless_ideal_exchange() {
        let truth = reference_truth();
        let mut sim = pair_sim(0.0, Some(truth.vector()));
        let mut combiner = Combiner::rule(Uniform);
        let mut r = rng(11);
        for _ in 0..100 {
            let draws = ideal_draws(&sim, &mut r);
            let record = sim.step_with(&mut combiner, &draws).unwrap();
            for k in 0..4 {
                assert_eq!(sim.node(k).estimate(), truth.vector());
                assert_eq!(record.squared_errors[k], 0.0);
            }
        }
    }

    #[test]
    fn lone_node_runs_noncooperative_lms_with_decaying_error() {
        let topo = NetworkTopology::new(vec![[0.0, 0.0]], 0.4).unwrap();
        let params = ChannelParams::uniform(1, 1.0, 2.0, 1.0, 0.01, 0.1).unwrap();
        let truth = reference_truth();
        let mut acc = MsdAccumulator::new(301, 1).unwrap();
        for trial in 0..100 {
            let nodes = vec![NodeState::zeroed(2, 0.05, identity_cov(2), 0.01).unwrap()];
            let sim = DiffusionSim::new(
                topo.clone(),
                params.clone(),
                Equalizer::Zf,
                truth.clone(),
                nodes,
            )
            .unwrap();
            let out = run_trial(sim, Combiner::rule(Uniform), 300, &mut rng(1000 + trial), false)
                .unwrap();
            acc.add_trial(&out.squared_errors).unwrap();
        }
        let trace = acc.finalize().unwrap();
        assert_relative_eq!(trace.network[0], 2.5, max_relative = 1e-12);
        // Expected error decays through the transient and lands well
        // below the starting point.
        assert!(trace.network[60] < trace.network[0] / 2.0);
        assert!(trace.network[120] < trace.network[60] / 2.0);
        assert!(*trace.network.last().unwrap() < 0.01);
    }

    #[test]
    fn drawn_and_injected_steps_agree() {
        let mut a = pair_sim(0.01, None);
        let mut b = a.clone();
        let mut ca = Combiner::rule(Uniform);
        let mut cb = ca.clone();
        let mut ra = rng(21);
        let mut rb = rng(21);
        for _ in 0..10 {
            let ra_record = a.step(&mut ca, &mut ra).unwrap();
            let draws = b.draw_iteration(&mut rb).unwrap();
            let rb_record = b.step_with(&mut cb, &draws).unwrap();
            assert_eq!(ra_record.error_vector, rb_record.error_vector);
            assert_eq!(ra_record.squared_errors, rb_record.squared_errors);
        }
    }

    #[test]
    fn trials_are_reproducible_under_the_same_stream() {
        let sim = pair_sim(0.01, None);
        let out1 = run_trial(sim.clone(), Combiner::rule(Uniform), 40, &mut rng(5), true).unwrap();
        let out2 = run_trial(sim, Combiner::rule(Uniform), 40, &mut rng(5), true).unwrap();
        assert_eq!(out1, out2);
    }

    #[test]
    fn msd_accumulator_averages_and_guards_shape() {
        let mut acc = MsdAccumulator::new(3, 2).unwrap();
        acc.add_trial(&[vec![4.0, 2.0], vec![2.0, 0.0], vec![1.0, 1.0]])
            .unwrap();
        acc.add_trial(&[vec![0.0, 2.0], vec![2.0, 4.0], vec![3.0, 1.0]])
            .unwrap();
        let trace = acc.clone().finalize().unwrap();
        assert_eq!(trace.per_node[0], vec![2.0, 2.0]);
        assert_eq!(trace.per_node[1], vec![2.0, 2.0]);
        assert_eq!(trace.network, vec![2.0, 2.0, 2.0]);
        assert_eq!(trace.trials, 2);

        // A single-trial, single-node trace is exactly that trial.
        let mut single = MsdAccumulator::new(2, 1).unwrap();
        single.add_trial(&[vec![2.5], vec![1.25]]).unwrap();
        let strace = single.finalize().unwrap();
        assert_eq!(strace.network, vec![2.5, 1.25]);

        // Shape violations and empty accumulators are rejected.
        assert!(acc.clone().add_trial(&[vec![1.0, 2.0]]).is_err());
        assert!(acc.add_trial(&[vec![1.0], vec![2.0], vec![3.0]]).is_err());
        assert!(MsdAccumulator::new(3, 2).unwrap().finalize().is_err());

        // Steady-state windows.
        let trace = MsdTrace {
            per_node: vec![vec![4.0], vec![2.0], vec![1.0], vec![1.0]],
            network: vec![4.0, 2.0, 1.0, 1.0],
            trials: 1,
        };
        let (nodes, net) = trace.steady_state(0.5).unwrap();
        assert_eq!(nodes, vec![1.0]);
        assert_eq!(net, 1.0);
        assert!(trace.steady_state(0.0).is_err());
        assert!(trace.steady_state(1.5).is_err());
    }

    #[test]
    fn adaptive_combiner_state_evolves_inside_a_run() {
        let mut sim = pair_sim(0.01, None);
        let adaptive = AdaptiveCombiner::new(4, 0.2, 1.0).unwrap();
        let mut combiner = Combiner::adaptive(adaptive);
        let mut r = rng(33);
        for _ in 0..20 {
            sim.step(&mut combiner, &mut r).unwrap();
        }
        match &combiner {
            Combiner::Adaptive(state) => {
                // The self estimate tracked something much smaller than
                // the initialization once adaptation kicked in.
                assert!(state.alpha_sq(0, 0) < 1.0);
                // Cross-pair links never activate (out of range), so
                // their estimates hold the initialization.
                assert_eq!(state.alpha_sq(2, 0), 1.0);
            }
            Combiner::Rule(_) => unreachable!(),
        }
    }
}
