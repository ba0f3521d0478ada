//! Combination weight rules.
//!
//! Each node fuses its own intermediate estimate with the equalized
//! receptions from currently active neighbors using nonnegative weights.
//! Rules that depend only on the active set implement
//! [`ActiveSetWeights`]; the adaptive rule carries state across
//! iterations and is driven by the engine through
//! [`AdaptiveCombiner::update`] followed by its weight computation.
//!
//! The inverse-variance rule weights each active link by the reciprocal
//! of its per-iteration error variance
//!
//! ```text
//! alpha_lk^2 = mu_l^2 sigma_v_l^2 tr(R_u_l)                    (l = k)
//! alpha_lk^2 = mu_l^2 sigma_v_l^2 tr(R_u_l)
//!              + E{|g_lk|^2 | active} M (sigma_i^2 + sigma_n^2) (l != k)
//! ```
//!
//! which minimizes the expected squared-weight cost over the gate
//! distribution; the adaptive rule tracks the same quantity online from
//! received data. Baselines from the distributed-estimation literature
//! (uniform, maximum degree, Laplacian, relative variance) are provided
//! for comparison.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::LinkMomentSet;
use crate::error::Error;
use crate::topology::NetworkTopology;
use crate::Result;

/// Column sums of a combination matrix must be one within this.
pub const LEFT_STOCHASTIC_TOL: f64 = 1e-10;

/// Default learning factor of the adaptive rule.
pub const DEFAULT_LEARNING_FACTOR: f64 = 0.1;

/// Default initialization of the adaptive variance estimates; yields
/// uniform weights until data arrives.
pub const DEFAULT_ALPHA_SQ_INIT: f64 = 1.0;

/// A combination rule that is a pure function of the realized active set.
///
/// `active` is sorted and always contains `k` itself; the returned vector
/// is aligned with `active` and nonnegative. Every rule the simulation
/// runs sums to one over the active set; the nominal gated rule used by
/// the moment analysis sums to one only in expectation.
///
/// Rules are stateless value computations, hence `Send + Sync`.
pub trait ActiveSetWeights: Send + Sync {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>>;
}

/// Weight rule selector, as it appears in config documents and CSV rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinerKind {
    Uniform,
    MaxDegree,
    Laplacian,
    RelativeVariance,
    Optimal,
    Adaptive,
}

impl CombinerKind {
    pub const ALL: [CombinerKind; 6] = [
        CombinerKind::Uniform,
        CombinerKind::MaxDegree,
        CombinerKind::Laplacian,
        CombinerKind::RelativeVariance,
        CombinerKind::Optimal,
        CombinerKind::Adaptive,
    ];

    /// Stable snake_case name used in CSV output and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            CombinerKind::Uniform => "uniform",
            CombinerKind::MaxDegree => "max_degree",
            CombinerKind::Laplacian => "laplacian",
            CombinerKind::RelativeVariance => "relative_variance",
            CombinerKind::Optimal => "optimal",
            CombinerKind::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for CombinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(CombinerKind::Uniform),
            "max_degree" => Ok(CombinerKind::MaxDegree),
            "laplacian" => Ok(CombinerKind::Laplacian),
            "relative_variance" => Ok(CombinerKind::RelativeVariance),
            "optimal" => Ok(CombinerKind::Optimal),
            "adaptive" => Ok(CombinerKind::Adaptive),
            other => Err(Error::Combine(format!(
                "unknown combiner `{other}` (expected uniform, max_degree, laplacian, \
                 relative_variance, optimal or adaptive)"
            ))),
        }
    }
}

fn require_member(k: usize, active: &[usize]) -> Result<usize> {
    active.binary_search(&k).map_err(|_| {
        Error::Combine(format!("active set of node {k} does not contain the node itself"))
    })
}

/// Equal weights over the active set.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl ActiveSetWeights for Uniform {
    fn weights(&self, _k: usize, active: &[usize]) -> Result<Vec<f64>> {
        if active.is_empty() {
            return Err(Error::Combine("empty active set".into()));
        }
        Ok(vec![1.0 / active.len() as f64; active.len()])
    }
}

/// Maximum-degree weights: every neighbor gets `1/K`, the node keeps the
/// remainder. Valid because an active set never exceeds `K` members.
#[derive(Debug, Clone, Copy)]
pub struct MaxDegree {
    node_count: usize,
}

impl MaxDegree {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Combine("maximum-degree rule needs at least one node".into()));
        }
        Ok(Self { node_count })
    }
}

impl ActiveSetWeights for MaxDegree {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>> {
        let self_pos = require_member(k, active)?;
        if active.len() > self.node_count {
            return Err(Error::Combine(format!(
                "active set of size {} exceeds the network size {}",
                active.len(),
                self.node_count
            )));
        }
        let share = 1.0 / self.node_count as f64;
        let mut w = vec![share; active.len()];
        w[self_pos] = 1.0 - (active.len() - 1) as f64 * share;
        Ok(w)
    }
}

/// Laplacian weights `A = I - kappa L` on the active star of each node,
/// with `kappa = 1/K`. For a star of `n` active members the column of
/// node `k` reads `kappa` per neighbor and `1 - (n-1) kappa` for itself,
/// which coincides with [`MaxDegree`].
#[derive(Debug, Clone, Copy)]
pub struct Laplacian {
    kappa: f64,
    node_count: usize,
}

impl Laplacian {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Combine("Laplacian rule needs at least one node".into()));
        }
        Ok(Self {
            kappa: 1.0 / node_count as f64,
            node_count,
        })
    }
}

impl ActiveSetWeights for Laplacian {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>> {
        let self_pos = require_member(k, active)?;
        if active.len() > self.node_count {
            return Err(Error::Combine(format!(
                "active set of size {} exceeds the network size {}",
                active.len(),
                self.node_count
            )));
        }
        // Column k of I - kappa (D - Adj) restricted to the active star:
        // off-diagonal Laplacian entries are -1 per edge, the diagonal
        // carries the degree.
        let degree = (active.len() - 1) as f64;
        let w = active
            .iter()
            .enumerate()
            .map(|(pos, _)| {
                if pos == self_pos {
                    1.0 - self.kappa * degree
                } else {
                    self.kappa
                }
            })
            .collect();
        Ok(w)
    }
}

/// Inverse-variance weights over arbitrary positive costs: the shared
/// kernel of the optimal, adaptive and relative-variance rules.
///
/// `costs` is aligned with the active set. Infinite costs contribute
/// zero weight (a link with no usable statistics); a zero cost is
/// rejected because it expresses infinite preference and only arises
/// from degenerate configurations.
pub fn inverse_variance_weights(costs: &[f64]) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::Combine("empty active set".into()));
    }
    let mut inv = Vec::with_capacity(costs.len());
    let mut total = 0.0;
    for &c in costs {
        if c.is_nan() || c < 0.0 {
            return Err(Error::Combine(format!("invalid link error variance {c}")));
        }
        if c == 0.0 {
            return Err(Error::Combine(
                "zero link error variance expresses infinite preference; \
                 this only arises from degenerate configurations"
                    .into(),
            ));
        }
        let w = 1.0 / c;
        total += w;
        inv.push(w);
    }
    if total == 0.0 {
        return Err(Error::Combine(
            "no active link has finite error variance".into(),
        ));
    }
    for w in &mut inv {
        *w /= total;
    }
    Ok(inv)
}

/// Per-node adaptation noise floor `mu^2 sigma_v^2 tr(R_u)`: the error
/// variance a node's intermediate estimate carries before any channel
/// distortion.
pub fn adaptation_noise_floor(
    step_size: &[f64],
    meas_noise_var: &[f64],
    regressor_trace: &[f64],
) -> Result<Vec<f64>> {
    if step_size.len() != meas_noise_var.len() || step_size.len() != regressor_trace.len() {
        return Err(Error::Dimension(format!(
            "per-node statistics disagree in length: {} step sizes, {} noise variances, {} \
             regressor traces",
            step_size.len(),
            meas_noise_var.len(),
            regressor_trace.len()
        )));
    }
    step_size
        .iter()
        .zip(meas_noise_var)
        .zip(regressor_trace)
        .map(|((&mu, &sv), &tr)| {
            if mu < 0.0 || sv < 0.0 || tr < 0.0 || !(mu * sv * tr).is_finite() {
                return Err(Error::Combine(format!(
                    "negative or non-finite node statistics (mu = {mu}, sigma_v^2 = {sv}, \
                     tr(R_u) = {tr})"
                )));
            }
            Ok(mu * mu * sv * tr)
        })
        .collect()
}

/// Error variance of one link's contribution: the transmitter's
/// adaptation noise floor plus, off the self link, the equalized
/// channel distortion.
pub fn link_error_alpha_sq(
    tx_floor: f64,
    eq_gain_sq: f64,
    ini_var: f64,
    noise_var: f64,
    dim: usize,
    is_self: bool,
) -> Result<f64> {
    if tx_floor < 0.0 || eq_gain_sq < 0.0 || ini_var < 0.0 || noise_var < 0.0 {
        return Err(Error::Combine(
            "negative inputs to the link error variance".into(),
        ));
    }
    if is_self {
        Ok(tx_floor)
    } else {
        Ok(tx_floor + eq_gain_sq * dim as f64 * (ini_var + noise_var))
    }
}

/// The full matrix of link error variances under estimated channel
/// moments: entry `(l, k)` is `alpha_lk^2`. Links outside the
/// neighborhood, and links that never activated in the moment sample,
/// carry `+inf` (zero weight under the inverse-variance rule).
pub fn link_error_variance(
    floor: &[f64],
    moments: &LinkMomentSet,
    topo: &NetworkTopology,
    dim: usize,
) -> Result<DMatrix<f64>> {
    let n = topo.node_count();
    if floor.len() != n || moments.node_count() != n {
        return Err(Error::Dimension(format!(
            "node statistics cover {} nodes, moments {}, topology {}",
            floor.len(),
            moments.node_count(),
            n
        )));
    }
    let mut alpha = DMatrix::from_element(n, n, f64::INFINITY);
    for k in 0..n {
        for &l in topo.neighbors(k) {
            if l == k {
                alpha[(k, k)] = link_error_alpha_sq(floor[k], 0.0, 0.0, 0.0, dim, true)?;
                continue;
            }
            let m = moments.get(l, k).ok_or_else(|| Error::Combine(format!(
                "no link moments for the connected pair ({l}, {k})"
            )))?;
            alpha[(l, k)] = match m.eq_gain_sq {
                Some(gsq) => link_error_alpha_sq(
                    floor[l],
                    gsq,
                    m.interference_var,
                    m.noise_var,
                    dim,
                    false,
                )?,
                // Never observed active: no usable statistics, weight zero.
                None => f64::INFINITY,
            };
        }
    }
    Ok(alpha)
}

/// Inverse-variance weights driven by precomputed link error variances.
#[derive(Debug, Clone)]
pub struct OptimalWeights {
    alpha_sq: DMatrix<f64>,
}

impl OptimalWeights {
    pub fn new(alpha_sq: DMatrix<f64>) -> Result<Self> {
        if alpha_sq.nrows() != alpha_sq.ncols() {
            return Err(Error::Combine("link error variance matrix must be square".into()));
        }
        if alpha_sq.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Combine(
                "link error variances must be nonnegative".into(),
            ));
        }
        Ok(Self { alpha_sq })
    }

    pub fn from_moments(
        floor: &[f64],
        moments: &LinkMomentSet,
        topo: &NetworkTopology,
        dim: usize,
    ) -> Result<Self> {
        Self::new(link_error_variance(floor, moments, topo, dim)?)
    }

    pub fn alpha_sq(&self, l: usize, k: usize) -> f64 {
        self.alpha_sq[(l, k)]
    }
}

impl ActiveSetWeights for OptimalWeights {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>> {
        require_member(k, active)?;
        if active.iter().any(|&l| l >= self.alpha_sq.nrows()) {
            return Err(Error::Combine("active set references an unknown node".into()));
        }
        let costs: Vec<f64> = active.iter().map(|&l| self.alpha_sq[(l, k)]).collect();
        inverse_variance_weights(&costs)
    }
}

/// Inverse weighting by the adaptation noise floor alone, ignoring all
/// channel terms. Reconstructed from the distributed-estimation
/// literature as the "relative variance" baseline.
#[derive(Debug, Clone)]
pub struct RelativeVariance {
    floor: Vec<f64>,
}

impl RelativeVariance {
    pub fn new(floor: Vec<f64>) -> Result<Self> {
        if floor.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Combine("noise floors must be nonnegative".into()));
        }
        Ok(Self { floor })
    }
}

impl ActiveSetWeights for RelativeVariance {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>> {
        require_member(k, active)?;
        if active.iter().any(|&l| l >= self.floor.len()) {
            return Err(Error::Combine("active set references an unknown node".into()));
        }
        let costs: Vec<f64> = active.iter().map(|&l| self.floor[l]).collect();
        inverse_variance_weights(&costs)
    }
}

/// Fixed nominal weights applied multiplicatively to the gate: active
/// link `l` contributes weight `zeta_lk` whether or not other links are
/// active, so realized weights sum to one only in expectation. This is
/// the model under which the moment analysis factorizes
/// (`E{a_lk} = zeta_lk p_lk`), not a rule the simulation runs.
#[derive(Debug, Clone)]
pub struct NominalGated {
    zeta: DMatrix<f64>,
}

impl NominalGated {
    /// Validates support and the column budget
    /// `sum_{l != k} zeta_lk < 1`, which keeps expected weights
    /// realizable by a left-stochastic matrix.
    pub fn new(zeta: DMatrix<f64>, topo: &NetworkTopology) -> Result<Self> {
        let n = topo.node_count();
        if zeta.nrows() != n || zeta.ncols() != n {
            return Err(Error::Dimension(format!(
                "nominal weights are {}x{} but the topology has {} nodes",
                zeta.nrows(),
                zeta.ncols(),
                n
            )));
        }
        for k in 0..n {
            let mut off_sum = 0.0;
            for l in 0..n {
                let z = zeta[(l, k)];
                if z.is_nan() || z < 0.0 {
                    return Err(Error::Combine(format!(
                        "nominal weight ({l}, {k}) = {z} is not a nonnegative real"
                    )));
                }
                if z > 0.0 && !topo.is_neighbor(l, k) {
                    return Err(Error::Combine(format!(
                        "nominal weight ({l}, {k}) is positive outside the neighborhood"
                    )));
                }
                if l != k {
                    off_sum += z;
                }
            }
            if off_sum >= 1.0 {
                return Err(Error::Combine(format!(
                    "nominal weights into node {k} sum to {off_sum} over the neighbors; \
                     must stay below one"
                )));
            }
        }
        Ok(Self { zeta })
    }

    /// Uniform nominal weights `1/|N_k|` on each neighborhood: the
    /// default for moment estimation when no rule is prescribed.
    pub fn uniform(topo: &NetworkTopology) -> Result<Self> {
        let n = topo.node_count();
        let mut zeta = DMatrix::zeros(n, n);
        for k in 0..n {
            let share = 1.0 / topo.degree(k) as f64;
            for &l in topo.neighbors(k) {
                zeta[(l, k)] = share;
            }
        }
        Self::new(zeta, topo)
    }

    pub fn zeta(&self, l: usize, k: usize) -> f64 {
        self.zeta[(l, k)]
    }
}

impl ActiveSetWeights for NominalGated {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>> {
        require_member(k, active)?;
        if active.iter().any(|&l| l >= self.zeta.nrows()) {
            return Err(Error::Combine("active set references an unknown node".into()));
        }
        Ok(active.iter().map(|&l| self.zeta[(l, k)]).collect())
    }
}

/// Nominal weights minimizing the expected squared-weight cost
/// `sum_l zeta_lk^2 p_lk alpha_lk^2` subject to `sum_l p_lk zeta_lk = 1`
/// on each static neighborhood:
///
/// ```text
/// zeta_lk = alpha_lk^{-2} / sum_{m in N_k} p_mk alpha_mk^{-2}
/// ```
///
/// Activation probabilities come from the link moments (the self link
/// counts as always active). Links with infinite error variance get
/// weight zero.
pub fn nominal_zeta(
    alpha_sq: &DMatrix<f64>,
    moments: &LinkMomentSet,
    topo: &NetworkTopology,
) -> Result<DMatrix<f64>> {
    let n = topo.node_count();
    if alpha_sq.nrows() != n || alpha_sq.ncols() != n || moments.node_count() != n {
        return Err(Error::Dimension(
            "link error variances, moments and topology disagree on the node count".into(),
        ));
    }
    let mut zeta = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut denom = 0.0;
        for &l in topo.neighbors(k) {
            let a = alpha_sq[(l, k)];
            if a.is_nan() || a < 0.0 {
                return Err(Error::Combine(format!(
                    "invalid link error variance {a} on ({l}, {k})"
                )));
            }
            if a == 0.0 {
                return Err(Error::Combine(format!(
                    "zero link error variance on ({l}, {k}) expresses infinite preference"
                )));
            }
            let p = if l == k {
                1.0
            } else {
                moments
                    .get(l, k)
                    .ok_or_else(|| Error::Combine(format!(
                        "no link moments for the connected pair ({l}, {k})"
                    )))?
                    .activation
            };
            denom += p / a;
        }
        if denom == 0.0 {
            return Err(Error::Combine(format!(
                "node {k} has no link with finite error variance"
            )));
        }
        for &l in topo.neighbors(k) {
            zeta[(l, k)] = (1.0 / alpha_sq[(l, k)]) / denom;
        }
    }
    Ok(zeta)
}

/// Expected squared-weight cost of a nominal gated rule on one
/// neighborhood: `sum_l zeta_l^2 p_l cost_l`. The quantity the nominal
/// weights minimize subject to `sum_l p_l zeta_l = 1`.
pub fn nominal_weight_cost(zeta: &[f64], activation: &[f64], cost: &[f64]) -> f64 {
    zeta.iter()
        .zip(activation)
        .zip(cost)
        .map(|((&z, &p), &c)| z * z * p * c)
        .sum()
}

/// Online tracker of per-link error variances, feeding the adaptive
/// inverse-variance rule.
///
/// Active links blend the realized squared deviation of the equalized
/// reception from the node's previous estimate into an exponential
/// moving average; inactive links hold their last value so intermittent
/// links keep usable statistics.
#[derive(Debug, Clone)]
pub struct AdaptiveCombiner {
    alpha_sq_est: DMatrix<f64>,
    learning_factor: f64,
}

impl AdaptiveCombiner {
    pub fn new(node_count: usize, learning_factor: f64, init: f64) -> Result<Self> {
        if !(learning_factor > 0.0 && learning_factor < 1.0) {
            return Err(Error::Combine(format!(
                "learning factor must lie strictly inside (0, 1), got {learning_factor}"
            )));
        }
        if !(init > 0.0) || !init.is_finite() {
            return Err(Error::Combine(format!(
                "variance estimates must start positive and finite, got {init}"
            )));
        }
        Ok(Self {
            alpha_sq_est: DMatrix::from_element(node_count, node_count, init),
            learning_factor,
        })
    }

    pub fn learning_factor(&self) -> f64 {
        self.learning_factor
    }

    /// Current variance estimate for link `(l, k)`.
    pub fn alpha_sq(&self, l: usize, k: usize) -> f64 {
        self.alpha_sq_est[(l, k)]
    }

    /// Blend the realized squared deviations of this iteration's active
    /// links into the running estimates. `sq_deviations` is aligned with
    /// `active`; the self entry carries the deviation of the node's own
    /// intermediate estimate. Inactive links are left untouched.
    pub fn update(&mut self, k: usize, active: &[usize], sq_deviations: &[f64]) -> Result<()> {
        require_member(k, active)?;
        if active.len() != sq_deviations.len() {
            return Err(Error::Dimension(format!(
                "{} active links but {} deviations",
                active.len(),
                sq_deviations.len()
            )));
        }
        if active.iter().any(|&l| l >= self.alpha_sq_est.nrows()) {
            return Err(Error::Combine("active set references an unknown node".into()));
        }
        for (&l, &dev) in active.iter().zip(sq_deviations) {
            if dev.is_nan() || dev < 0.0 {
                return Err(Error::Combine(format!(
                    "squared deviation on link ({l}, {k}) is {dev}, not a nonnegative real"
                )));
            }
            let prev = self.alpha_sq_est[(l, k)];
            self.alpha_sq_est[(l, k)] =
                (1.0 - self.learning_factor) * prev + self.learning_factor * dev;
        }
        Ok(())
    }
}

impl ActiveSetWeights for AdaptiveCombiner {
    fn weights(&self, k: usize, active: &[usize]) -> Result<Vec<f64>> {
        require_member(k, active)?;
        if active.iter().any(|&l| l >= self.alpha_sq_est.nrows()) {
            return Err(Error::Combine("active set references an unknown node".into()));
        }
        let costs: Vec<f64> = active.iter().map(|&l| self.alpha_sq_est[(l, k)]).collect();
        inverse_variance_weights(&costs)
    }
}

/// A validated left-stochastic combination matrix: column `k` holds the
/// weights node `k` applies, supported on a prescribed set per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    weights: DMatrix<f64>,
}

impl CombinationMatrix {
    /// `support[k]` lists the nodes allowed to carry weight in column
    /// `k` (sorted). Entries must be nonnegative, vanish off the
    /// support, and sum to one per column within [`LEFT_STOCHASTIC_TOL`].
    pub fn new(weights: DMatrix<f64>, support: &[Vec<usize>]) -> Result<Self> {
        let n = weights.ncols();
        if weights.nrows() != n {
            return Err(Error::Combine("combination matrix must be square".into()));
        }
        if support.len() != n {
            return Err(Error::Dimension(format!(
                "{} support sets for {} columns",
                support.len(),
                n
            )));
        }
        for k in 0..n {
            let mut sum = 0.0;
            for l in 0..n {
                let w = weights[(l, k)];
                if w.is_nan() || w < 0.0 {
                    return Err(Error::Combine(format!(
                        "weight ({l}, {k}) = {w} is not a nonnegative real"
                    )));
                }
                if w > 0.0 && support[k].binary_search(&l).is_err() {
                    return Err(Error::Combine(format!(
                        "weight ({l}, {k}) is positive outside the allowed support"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > LEFT_STOCHASTIC_TOL {
                return Err(Error::Combine(format!(
                    "weights into node {k} sum to {sum}, not one"
                )));
            }
        }
        Ok(Self { weights })
    }

    /// Evaluate a rule on every full neighborhood of a topology.
    pub fn from_rule(rule: &dyn ActiveSetWeights, topo: &NetworkTopology) -> Result<Self> {
        let n = topo.node_count();
        let mut weights = DMatrix::zeros(n, n);
        let support: Vec<Vec<usize>> = (0..n).map(|k| topo.neighbors(k).to_vec()).collect();
        for k in 0..n {
            let w = rule.weights(k, &support[k])?;
            for (&l, &wl) in support[k].iter().zip(&w) {
                weights[(l, k)] = wl;
            }
        }
        Self::new(weights, &support)
    }

    pub fn node_count(&self) -> usize {
        self.weights.ncols()
    }

    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.weights[(l, k)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }
}
