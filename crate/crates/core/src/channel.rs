//! Fading multiple-access links between nodes.
//!
//! Each ordered pair (transmitter `l`, receiver `k`) of connected nodes
//! carries an analog transmission through a flat Rayleigh-fading channel
//! with distance path loss: the complex link gain is
//!
//! ```text
//! beta_lk = h_lk * sqrt(P_o / r_lk^alpha)
//! ```
//!
//! with `h_lk` zero-mean circular complex Gaussian of variance
//! `sigma_h_lk^2`, so `E|beta_lk|^2 = sigma_h_lk^2 * P_o / r_lk^alpha`.
//! Gains are independent across ordered pairs and over time; within one
//! iteration the gain a receiver sees from a given transmitter is shared
//! between its roles as desired signal on one link and interference on
//! the others.
//!
//! All in-range neighbors transmit every iteration. A reception from `l`
//! at `k` is corrupted by the superposition of every other neighbor's
//! transmission (inter-node interference) plus white complex Gaussian
//! receiver noise. A link is used for combination only when its SINR
//! clears a configured threshold; the node's own intermediate estimate
//! bypasses the channel entirely.
//!
//! The complex Gaussian convention throughout: variance `v` means
//! `E|x|^2 = v`, i.e. real and imaginary parts are independent
//! `N(0, v/2)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::combine::ActiveSetWeights;
use crate::error::Error;
use crate::topology::NetworkTopology;
use crate::Result;

/// Convert a power ratio from decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Draw a zero-mean circular complex Gaussian scalar with `E|x|^2 = var`.
pub fn complex_gaussian(var: f64, rng: &mut impl Rng) -> Complex64 {
    if var == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let component = Normal::new(0.0, (var / 2.0).sqrt()).expect("validated variance");
    Complex64::new(component.sample(rng), component.sample(rng))
}

/// Draw a length-`m` vector of i.i.d. circular complex Gaussians with
/// per-component variance `var`.
pub fn complex_gaussian_vector(m: usize, var: f64, rng: &mut impl Rng) -> DVector<Complex64> {
    if var == 0.0 {
        return DVector::zeros(m);
    }
    let component = Normal::new(0.0, (var / 2.0).sqrt()).expect("validated variance");
    DVector::from_fn(m, |_, _| {
        Complex64::new(component.sample(rng), component.sample(rng))
    })
}

/// Receiver-side equalizer applied to a reception before combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equalizer {
    /// Zero forcing: `g = beta^* / |beta|^2`, so `g * beta = 1` exactly.
    Zf,
    /// Linear MMSE against interference plus noise:
    /// `g = beta^* / (sigma_i^2 + sigma_n^2 + |beta|^2)`.
    Mmse,
    /// No equalization (`g = 1`). Receptions keep their random channel
    /// phase, which makes the combination step biased; exists to quantify
    /// exactly that effect.
    None,
}

impl Equalizer {
    /// The equalizer gain for a link with gain `beta`, interference
    /// variance `ini_var` and receiver noise variance `noise_var`.
    pub fn gain(self, beta: Complex64, ini_var: f64, noise_var: f64) -> Result<Complex64> {
        match self {
            Equalizer::Zf => zf_gain(beta),
            Equalizer::Mmse => mmse_gain(beta, ini_var, noise_var),
            Equalizer::None => Ok(Complex64::new(1.0, 0.0)),
        }
    }

    /// Stable lowercase name used in CSV output and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Equalizer::Zf => "zf",
            Equalizer::Mmse => "mmse",
            Equalizer::None => "none",
        }
    }
}

impl std::str::FromStr for Equalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zf" => Ok(Equalizer::Zf),
            "mmse" => Ok(Equalizer::Mmse),
            "none" => Ok(Equalizer::None),
            other => Err(Error::Channel(format!(
                "unknown equalizer `{other}` (expected zf, mmse or none)"
            ))),
        }
    }
}

/// Zero-forcing gain `beta^* / |beta|^2`; requires a nonzero gain. A zero
/// gain reaching an equalizer means gating is broken upstream, so this is
/// reported as an error rather than silently producing infinities.
///
/// The product `g * beta` recovers `1 + 0i`: bit-exactly when the two
/// cross products round identically (real, imaginary or equal-magnitude
/// components), and to within a couple of ulp for arbitrary gains, since
/// the two component divisions round independently.
pub fn zf_gain(beta: Complex64) -> Result<Complex64> {
    let power = beta.norm_sqr();
    if power == 0.0 {
        return Err(Error::Channel(
            "zero-forcing gain undefined for a zero link gain".into(),
        ));
    }
    Ok(beta.conj() / power)
}

/// Linear MMSE gain `beta^* / (ini_var + noise_var + |beta|^2)`.
pub fn mmse_gain(beta: Complex64, ini_var: f64, noise_var: f64) -> Result<Complex64> {
    if ini_var < 0.0 || noise_var < 0.0 {
        return Err(Error::Channel(
            "negative variance passed to the MMSE gain".into(),
        ));
    }
    let denom = ini_var + noise_var + beta.norm_sqr();
    if denom == 0.0 {
        return Err(Error::Channel(
            "MMSE gain undefined: zero gain and zero interference and noise power".into(),
        ));
    }
    Ok(beta.conj() / denom)
}

/// Static parameters of the wireless layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    tx_power: f64,
    pathloss_exp: f64,
    /// Fading variance `sigma_h^2` per ordered pair (row: transmitter,
    /// column: receiver). Diagonal unused.
    fading_var: DMatrix<f64>,
    /// Receiver noise variance per ordered pair. Diagonal unused.
    noise_var: DMatrix<f64>,
    /// Linear SINR acceptance threshold; zero disables gating.
    sinr_threshold: f64,
}

impl ChannelParams {
    /// Full per-link parameterization.
    pub fn new(
        tx_power: f64,
        pathloss_exp: f64,
        fading_var: DMatrix<f64>,
        noise_var: DMatrix<f64>,
        sinr_threshold: f64,
    ) -> Result<Self> {
        if !(tx_power > 0.0) || !tx_power.is_finite() {
            return Err(Error::Channel(format!(
                "transmit power must be positive and finite, got {tx_power}"
            )));
        }
        if !(pathloss_exp > 0.0) || !pathloss_exp.is_finite() {
            return Err(Error::Channel(format!(
                "path-loss exponent must be positive and finite, got {pathloss_exp}"
            )));
        }
        if fading_var.nrows() != fading_var.ncols() {
            return Err(Error::Channel("fading variance matrix must be square".into()));
        }
        if noise_var.shape() != fading_var.shape() {
            return Err(Error::Dimension(format!(
                "fading variance is {}x{} but noise variance is {}x{}",
                fading_var.nrows(),
                fading_var.ncols(),
                noise_var.nrows(),
                noise_var.ncols()
            )));
        }
        for m in [&fading_var, &noise_var] {
            if m.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::Channel(
                    "per-link variances must be nonnegative and finite".into(),
                ));
            }
        }
        if sinr_threshold < 0.0 || !sinr_threshold.is_finite() {
            return Err(Error::Channel(format!(
                "SINR threshold must be nonnegative and finite, got {sinr_threshold}"
            )));
        }
        Ok(Self {
            tx_power,
            pathloss_exp,
            fading_var,
            noise_var,
            sinr_threshold,
        })
    }

    /// Same fading and noise variance on every link.
    pub fn uniform(
        node_count: usize,
        tx_power: f64,
        pathloss_exp: f64,
        fading_var: f64,
        noise_var: f64,
        sinr_threshold: f64,
    ) -> Result<Self> {
        Self::new(
            tx_power,
            pathloss_exp,
            DMatrix::from_element(node_count, node_count, fading_var),
            DMatrix::from_element(node_count, node_count, noise_var),
            sinr_threshold,
        )
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    pub fn pathloss_exp(&self) -> f64 {
        self.pathloss_exp
    }

    pub fn node_count(&self) -> usize {
        self.fading_var.nrows()
    }

    pub fn fading_var(&self, l: usize, k: usize) -> f64 {
        self.fading_var[(l, k)]
    }

    pub fn noise_var(&self, l: usize, k: usize) -> f64 {
        self.noise_var[(l, k)]
    }

    pub fn sinr_threshold(&self) -> f64 {
        self.sinr_threshold
    }

    fn check_link(&self, topo: &NetworkTopology, l: usize, k: usize) -> Result<f64> {
        if l == k {
            return Err(Error::Link {
                from: l,
                to: k,
                message: "a node does not transmit to itself over the channel".into(),
            });
        }
        if !topo.is_neighbor(l, k) {
            return Err(Error::Link {
                from: l,
                to: k,
                message: "nodes are not connected".into(),
            });
        }
        let r = topo.distance(l, k);
        if r == 0.0 {
            return Err(Error::Link {
                from: l,
                to: k,
                message: "coincident nodes make the path loss singular".into(),
            });
        }
        Ok(r)
    }

    /// Mean-square link gain `E|beta_lk|^2 = sigma_h^2 * P_o / r^alpha`.
    pub fn gain_variance(&self, topo: &NetworkTopology, l: usize, k: usize) -> Result<f64> {
        let r = self.check_link(topo, l, k)?;
        Ok(self.fading_var[(l, k)] * self.tx_power / r.powf(self.pathloss_exp))
    }

    /// Draw the fading gain of link `(l, k)` for one iteration.
    pub fn draw_gain(
        &self,
        topo: &NetworkTopology,
        l: usize,
        k: usize,
        rng: &mut impl Rng,
    ) -> Result<Complex64> {
        let var = self.gain_variance(topo, l, k)?;
        Ok(complex_gaussian(var, rng))
    }

    /// Aggregate interference variance on link `(l, k)` under the static
    /// neighborhood: the summed mean-square gains of every neighbor of `k`
    /// other than `k` and `l`. This is the value the closed-form analysis
    /// and the MMSE equalizer use; the realized interference power varies
    /// with the transmitted estimates.
    pub fn interference_variance(
        &self,
        topo: &NetworkTopology,
        l: usize,
        k: usize,
    ) -> Result<f64> {
        self.check_link(topo, l, k)?;
        let mut total = 0.0;
        for interferer in topo.interferers(l, k) {
            total += self.gain_variance(topo, interferer, k)?;
        }
        Ok(total)
    }
}

/// Superpose the interference corrupting the reception from `l` at `k`:
/// the gain-weighted sum of every other transmission in `transmissions`.
///
/// `transmissions` holds the intermediate estimates of all transmitting
/// neighbors of `k` (it may include `l` and `k`; both are skipped), and
/// `gains` the matching link gains into `k`. Both are sorted by node id;
/// summation follows that order, so results are bit-reproducible.
pub fn superpose_interference(
    transmissions: &[(usize, &DVector<Complex64>)],
    gains: &[(usize, Complex64)],
    k: usize,
    l: usize,
) -> Result<DVector<Complex64>> {
    let m = transmissions
        .first()
        .map(|(_, v)| v.len())
        .ok_or_else(|| Error::Channel("no transmissions to superpose".into()))?;
    let mut total = DVector::zeros(m);
    for (node, psi) in transmissions {
        if *node == k || *node == l {
            continue;
        }
        if psi.len() != m {
            return Err(Error::Dimension(format!(
                "transmission from node {node} has length {} but expected {m}",
                psi.len()
            )));
        }
        let gain = gains
            .iter()
            .find(|(g, _)| g == node)
            .map(|(_, b)| *b)
            .ok_or_else(|| Error::Link {
                from: *node,
                to: k,
                message: "interfering transmitter has no drawn link gain".into(),
            })?;
        total += *psi * gain;
    }
    Ok(total)
}

/// SINR of the link from `l` into the receiver holding `gains`: desired
/// power over the power of every other listed transmitter plus noise.
/// A zero denominator yields `+inf`, which always clears the gate.
pub fn sinr(gains: &[(usize, Complex64)], l: usize, noise_var: f64) -> Result<f64> {
    if noise_var < 0.0 {
        return Err(Error::Channel("negative noise variance in SINR".into()));
    }
    let desired = gains
        .iter()
        .find(|(node, _)| *node == l)
        .map(|(_, b)| b.norm_sqr())
        .ok_or_else(|| Error::Channel(format!("no drawn gain for transmitter {l}")))?;
    let mut denom = noise_var;
    for (node, b) in gains {
        if *node != l {
            denom += b.norm_sqr();
        }
    }
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(desired / denom)
}

/// The active set of receiver `k` given per-transmitter SINRs: `k` itself
/// plus every transmitter whose SINR meets the threshold. Sorted.
pub fn gate_links(k: usize, sinrs: &[(usize, f64)], threshold: f64) -> Vec<usize> {
    let mut active: Vec<usize> = sinrs
        .iter()
        .filter(|(_, s)| *s >= threshold)
        .map(|(node, _)| *node)
        .collect();
    active.push(k);
    active.sort_unstable();
    active
}

/// Everything that happened on one directed link in one iteration.
#[derive(Debug, Clone)]
pub struct LinkRealization {
    /// Fading gain `beta_lk`.
    pub gain: Complex64,
    /// Superposed interference vector.
    pub interference: DVector<Complex64>,
    /// Receiver noise vector.
    pub noise: DVector<Complex64>,
    /// Realized SINR.
    pub sinr: f64,
    /// Whether the link cleared the gate.
    pub active: bool,
}

/// Monte Carlo and closed-form moments of one directed link, as consumed
/// by the performance analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMoments {
    /// Mean-square channel gain (exact).
    pub gain_var: f64,
    /// Static-neighborhood interference variance (exact).
    pub interference_var: f64,
    /// Receiver noise variance (exact).
    pub noise_var: f64,
    /// Probability the link clears the gate.
    pub activation: f64,
    /// `E{|g|^2 | active}`. `None` when the link never activated in the
    /// sample, in which case the analysis treats its weight as zero.
    /// Under zero forcing this moment is heavy-tailed (the gain inverts
    /// the fading magnitude), and the estimate is the plain conditional
    /// sample mean, so expect slow convergence at loose gates.
    pub eq_gain_sq: Option<f64>,
    /// `E{g * beta | active}`. Exactly one under zero forcing and exactly
    /// zero without equalization (the phase is uniform), estimated for
    /// MMSE.
    pub post_eq_mean: Complex64,
    /// `E{a}`: mean combination weight under the estimating weight rule
    /// (zero whenever the link is gated out).
    pub weight_mean: f64,
    /// `E{a^2 |g|^2}`: mean-square weighted equalizer energy; this is the
    /// factor multiplying interference and noise variances in the
    /// steady-state analysis.
    pub weight_sq_gain: f64,
}

impl LinkMoments {
    fn self_link() -> Self {
        LinkMoments {
            gain_var: 0.0,
            interference_var: 0.0,
            noise_var: 0.0,
            activation: 1.0,
            eq_gain_sq: Some(1.0),
            post_eq_mean: Complex64::new(1.0, 0.0),
            weight_mean: 0.0,
            weight_sq_gain: 0.0,
        }
    }
}

/// Per-link moments for every connected ordered pair, including the
/// self entry of each node (which only carries weight moments).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMomentSet {
    node_count: usize,
    equalizer: Equalizer,
    /// `entries[k]` holds `(l, moments)` for each `l` in `N_k`, sorted.
    entries: Vec<Vec<(usize, LinkMoments)>>,
}

impl LinkMomentSet {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn equalizer(&self) -> Equalizer {
        self.equalizer
    }

    /// Moments of the directed link `(l, k)`, if `l` is in `N_k`.
    pub fn get(&self, l: usize, k: usize) -> Option<&LinkMoments> {
        self.entries[k]
            .binary_search_by_key(&l, |(node, _)| *node)
            .ok()
            .map(|idx| &self.entries[k][idx].1)
    }

    /// Moment set of a distortion-free channel: every link always active
    /// with unit post-equalization gain, no interference, no noise, and
    /// weights fixed by `rule` on the full neighborhood. Useful as the
    /// reference point of the analysis.
    pub fn ideal(
        topo: &NetworkTopology,
        rule: &dyn ActiveSetWeights,
    ) -> Result<Self> {
        let k_count = topo.node_count();
        let mut entries = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let active = topo.neighbors(k).to_vec();
            let weights = rule.weights(k, &active)?;
            let row = active
                .iter()
                .zip(&weights)
                .map(|(&l, &w)| {
                    let moments = LinkMoments {
                        gain_var: if l == k { 0.0 } else { 1.0 },
                        interference_var: 0.0,
                        noise_var: 0.0,
                        activation: 1.0,
                        eq_gain_sq: Some(1.0),
                        post_eq_mean: Complex64::new(1.0, 0.0),
                        weight_mean: w,
                        weight_sq_gain: w * w,
                    };
                    (l, moments)
                })
                .collect();
            entries.push(row);
        }
        Ok(Self {
            node_count: k_count,
            equalizer: Equalizer::Zf,
            entries,
        })
    }
}

/// Estimate per-link moments by Monte Carlo under a given equalizer and
/// active-set weight rule.
///
/// For each receiver, `n_samples` independent channel draws are gated and
/// weighted exactly like one simulation iteration. Receivers are
/// processed in independent seeded streams derived from `rng`, so results
/// do not depend on thread scheduling.
pub fn estimate_link_moments(
    params: &ChannelParams,
    topo: &NetworkTopology,
    equalizer: Equalizer,
    rule: &dyn ActiveSetWeights,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<LinkMomentSet> {
    if n_samples == 0 {
        return Err(Error::Channel("moment estimation needs samples".into()));
    }
    if params.node_count() != topo.node_count() {
        return Err(Error::Dimension(format!(
            "channel parameters cover {} nodes but the topology has {}",
            params.node_count(),
            topo.node_count()
        )));
    }
    let k_count = topo.node_count();
    let seeds: Vec<[u8; 32]> = (0..k_count).map(|_| rng.gen()).collect();

    let estimate_receiver = |k: usize| -> Result<Vec<(usize, LinkMoments)>> {
        let mut rng = ChaCha8Rng::from_seed(seeds[k]);
        let transmitters: Vec<usize> = topo
            .neighbors(k)
            .iter()
            .copied()
            .filter(|&l| l != k)
            .collect();
        let mut active_count = vec![0usize; transmitters.len()];
        let mut gsq_sum = vec![0.0f64; transmitters.len()];
        let mut post_eq_sum = vec![Complex64::new(0.0, 0.0); transmitters.len()];
        let mut weight_sum = vec![0.0f64; transmitters.len()];
        let mut wsq_gain_sum = vec![0.0f64; transmitters.len()];
        let mut self_weight_sum = 0.0f64;
        let mut self_wsq_sum = 0.0f64;
        let mut gains: Vec<(usize, Complex64)> = Vec::with_capacity(transmitters.len());
        let ini_vars: Vec<f64> = transmitters
            .iter()
            .map(|&l| params.interference_variance(topo, l, k))
            .collect::<Result<_>>()?;

        for _ in 0..n_samples {
            gains.clear();
            for &l in &transmitters {
                gains.push((l, params.draw_gain(topo, l, k, &mut rng)?));
            }
            let mut active = vec![k];
            let mut link_sinr = Vec::with_capacity(transmitters.len());
            for (idx, &l) in transmitters.iter().enumerate() {
                let s = sinr(&gains, l, params.noise_var(l, k))?;
                link_sinr.push(s);
                if s >= params.sinr_threshold() {
                    active.push(l);
                    let _ = idx;
                }
            }
            active.sort_unstable();
            let weights = rule.weights(k, &active)?;
            for (idx, &l) in transmitters.iter().enumerate() {
                if link_sinr[idx] < params.sinr_threshold() {
                    continue;
                }
                let beta = gains[idx].1;
                let g = equalizer.gain(beta, ini_vars[idx], params.noise_var(l, k))?;
                let gsq = g.norm_sqr();
                let pos = active.binary_search(&l).expect("active links are in the set");
                let w = weights[pos];
                active_count[idx] += 1;
                gsq_sum[idx] += gsq;
                post_eq_sum[idx] += g * beta;
                weight_sum[idx] += w;
                wsq_gain_sum[idx] += w * w * gsq;
            }
            let self_pos = active.binary_search(&k).expect("self is always active");
            self_weight_sum += weights[self_pos];
            self_wsq_sum += weights[self_pos] * weights[self_pos];
        }

        let n = n_samples as f64;
        let mut row: Vec<(usize, LinkMoments)> = Vec::with_capacity(transmitters.len() + 1);
        for (idx, &l) in transmitters.iter().enumerate() {
            let count = active_count[idx];
            let eq_gain_sq = (count > 0).then(|| gsq_sum[idx] / count as f64);
            let post_eq_mean = match equalizer {
                Equalizer::Zf => Complex64::new(1.0, 0.0),
                Equalizer::None => Complex64::new(0.0, 0.0),
                Equalizer::Mmse => {
                    if count > 0 {
                        post_eq_sum[idx] / count as f64
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }
            };
            let moments = LinkMoments {
                gain_var: params.gain_variance(topo, l, k)?,
                interference_var: ini_vars[idx],
                noise_var: params.noise_var(l, k),
                activation: count as f64 / n,
                eq_gain_sq,
                post_eq_mean,
                weight_mean: weight_sum[idx] / n,
                weight_sq_gain: wsq_gain_sum[idx] / n,
            };
            row.push((l, moments));
        }
        let mut self_moments = LinkMoments::self_link();
        self_moments.weight_mean = self_weight_sum / n;
        self_moments.weight_sq_gain = self_wsq_sum / n;
        row.push((k, self_moments));
        row.sort_by_key(|(l, _)| *l);
        Ok(row)
    };

    #[cfg(feature = "parallel")]
    let entries: Result<Vec<_>> = {
        use rayon::prelude::*;
        (0..k_count).into_par_iter().map(estimate_receiver).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let entries: Result<Vec<_>> = (0..k_count).map(estimate_receiver).collect();

    Ok(LinkMomentSet {
        node_count: k_count,
        equalizer,
        entries: entries?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combine::Uniform as UniformRule;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_node_topo(r: f64) -> NetworkTopology {
        NetworkTopology::new(vec![[0.0, 0.0], [r, 0.0]], 1.0).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn gain_variance_follows_path_loss() {
        let topo = two_node_topo(0.3);
        let params = ChannelParams::uniform(2, 2.0, 2.5, 0.5, 0.1, 0.0).unwrap();
        // 0.5 * 2.0 / 0.3^2.5
        let expected = 1.0 / 0.3f64.powf(2.5);
        assert_relative_eq!(
            params.gain_variance(&topo, 0, 1).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn link_checks_reject_self_nonneighbor_and_coincident() {
        let topo =
            NetworkTopology::new(vec![[0.0, 0.0], [0.0, 0.0], [0.9, 0.9]], 0.5).unwrap();
        let params = ChannelParams::uniform(3, 1.0, 2.0, 1.0, 0.1, 0.0).unwrap();
        assert!(params.gain_variance(&topo, 1, 1).is_err());
        assert!(params.gain_variance(&topo, 0, 2).is_err());
        assert!(params.gain_variance(&topo, 0, 1).is_err()); // coincident
    }

    #[test]
    fn drawn_gains_have_the_prescribed_moments() {
        let topo = two_node_topo(0.3);
        // 1.0 * 0.9 / 0.3^2 = 10 exactly.
        let params = ChannelParams::uniform(2, 1.0, 2.0, 0.9, 0.1, 0.0).unwrap();
        let expected = 10.0;
        let mut r = rng(1234);
        let n = 200_000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        let mut pseudo = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let b = params.draw_gain(&topo, 0, 1, &mut r).unwrap();
            mean += b;
            power += b.norm_sqr();
            pseudo += b * b;
        }
        mean /= n as f64;
        power /= n as f64;
        pseudo /= n as f64;
        // Standard errors: |mean| ~ sqrt(var/n) ~ 0.007, power ~ var*sqrt(2/n).
        assert!(mean.norm() < 0.03, "sample mean {mean} too far from zero");
        assert_relative_eq!(power, expected, max_relative = 0.02);
        // Circularity: E{beta^2} = 0.
        assert!(pseudo.norm() < 0.1, "pseudo-variance {pseudo} not circular");
    }

    #[test]
    fn zero_fading_variance_gives_zero_gain() {
        let topo = two_node_topo(0.3);
        let params = ChannelParams::uniform(2, 1.0, 2.0, 0.0, 0.1, 0.0).unwrap();
        let mut r = rng(7);
        assert_eq!(
            params.draw_gain(&topo, 0, 1, &mut r).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn interference_variance_matches_brute_force_resummation() {
        let topo = NetworkTopology::generate(8, 0.6, 1.0, 21).unwrap();
        let params = ChannelParams::uniform(8, 1.3, 2.2, 0.7, 0.1, 0.0).unwrap();
        for k in 0..8 {
            for &l in topo.neighbors(k) {
                if l == k {
                    continue;
                }
                let got = params.interference_variance(&topo, l, k).unwrap();
                let mut expected = 0.0;
                for j in 0..8 {
                    if j != k && j != l && topo.is_neighbor(j, k) {
                        expected += 0.7 * 1.3 / topo.distance(j, k).powf(2.2);
                    }
                }
                assert_relative_eq!(got, expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn interference_variance_is_zero_without_third_parties() {
        let topo = two_node_topo(0.4);
        let params = ChannelParams::uniform(2, 1.0, 2.0, 1.0, 0.1, 0.0).unwrap();
        assert_eq!(params.interference_variance(&topo, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn superposition_is_the_gain_weighted_sum_of_other_transmissions() {
        let psi = |re: f64| DVector::from_vec(vec![Complex64::new(re, 1.0)]);
        let owned: Vec<(usize, DVector<Complex64>)> =
            vec![(0, psi(1.0)), (1, psi(2.0)), (2, psi(3.0)), (3, psi(4.0))];
        let transmissions: Vec<(usize, &DVector<Complex64>)> =
            owned.iter().map(|(n, v)| (*n, v)).collect();
        let gains = vec![
            (0, Complex64::new(0.5, 0.0)),
            (1, Complex64::new(0.0, 1.0)),
            (2, Complex64::new(1.0, 0.0)),
            (3, Complex64::new(2.0, 0.0)),
        ];
        // Receiver 3, desired transmitter 1: sum over {0, 2}.
        let ini = superpose_interference(&transmissions, &gains, 3, 1).unwrap();
        let expected = psi(1.0) * Complex64::new(0.5, 0.0) + psi(3.0) * Complex64::new(1.0, 0.0);
        assert_eq!(ini, expected);
        // Three interferers, re-summed element-wise by hand.
        let ini3 = superpose_interference(&transmissions, &gains, 9, 0).unwrap();
        for row in 0..1 {
            let mut by_hand = Complex64::new(0.0, 0.0);
            for (node, g) in &gains[1..] {
                by_hand += owned[*node].1[row] * g;
            }
            assert_eq!(ini3[row], by_hand);
        }
        // A single interferer passes straight through its gain:
        // gain 2 on [1, j] contributes [2, 2j].
        let unit = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let one_source = [(7usize, &unit)];
        let one_gain = [(7usize, Complex64::new(2.0, 0.0))];
        let single = superpose_interference(&one_source, &one_gain, 9, 8).unwrap();
        assert_eq!(
            single,
            DVector::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0)])
        );
        // No third parties: zero vector.
        let none = superpose_interference(&transmissions[..2], &gains[..2], 1, 0).unwrap();
        assert_eq!(none, DVector::zeros(1));
    }

    #[test]
    fn superposition_requires_gains_for_all_interferers() {
        let psi = DVector::from_vec(vec![Complex64::new(1.0, 0.0)]);
        let owned: Vec<(usize, DVector<Complex64>)> =
            vec![(0, psi.clone()), (1, psi.clone()), (2, psi)];
        let transmissions: Vec<(usize, &DVector<Complex64>)> =
            owned.iter().map(|(n, v)| (*n, v)).collect();
        let gains = vec![(1, Complex64::new(1.0, 0.0))];
        assert!(superpose_interference(&transmissions, &gains, 2, 1).is_err());
    }

    #[test]
    fn sinr_matches_hand_computation_and_infinity_sentinel() {
        let gains = vec![
            (0, Complex64::new(1.0, 1.0)),  // |.|^2 = 2
            (1, Complex64::new(0.5, 0.5)),  // |.|^2 = 0.5
            (2, Complex64::new(-0.5, 0.2)), // |.|^2 = 0.29
        ];
        let s = sinr(&gains, 0, 0.21).unwrap();
        assert_relative_eq!(s, 2.0 / (0.5 + 0.29 + 0.21), max_relative = 1e-12);

        // Lone transmitter, zero noise: infinite SINR clears any gate.
        let lone = vec![(4, Complex64::new(0.3, 0.0))];
        assert_eq!(sinr(&lone, 4, 0.0).unwrap(), f64::INFINITY);
        assert!(gate_links(9, &[(4, f64::INFINITY)], 1e12).contains(&4));

        // Zero desired power with zero denominator still reads as +inf.
        let dead = vec![(4, Complex64::new(0.0, 0.0))];
        assert_eq!(sinr(&dead, 4, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn gate_is_inclusive_and_always_contains_self() {
        let sinrs = vec![(0, 0.09), (2, 0.1), (5, 3.0)];
        let active = gate_links(3, &sinrs, 0.1);
        assert_eq!(active, vec![2, 3, 5]);
        // Zero threshold keeps everything.
        assert_eq!(gate_links(3, &sinrs, 0.0), vec![0, 2, 3, 5]);
        // Absurd threshold keeps only the node itself.
        assert_eq!(gate_links(3, &sinrs, f64::INFINITY), vec![3]);
    }

    #[test]
    fn zero_forcing_inverts_the_gain() {
        // Bit-exact on axis-aligned and symmetric gains.
        for beta in [
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-3.5, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(-0.25, 0.25),
        ] {
            let g = zf_gain(beta).unwrap();
            assert_eq!(g * beta, Complex64::new(1.0, 0.0), "beta = {beta}");
        }
        assert_eq!(zf_gain(Complex64::new(2.0, 0.0)).unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(zf_gain(Complex64::new(0.0, 1.0)).unwrap(), Complex64::new(0.0, -1.0));
        // Within rounding noise for arbitrary gains.
        let mut r = rng(5);
        for _ in 0..1000 {
            let beta = complex_gaussian(2.0, &mut r);
            let g = zf_gain(beta).unwrap();
            assert!((g * beta - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(zf_gain(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn mmse_shrinks_toward_zero_forcing_as_distortion_vanishes() {
        let beta = Complex64::new(0.8, -0.6);
        let zf = zf_gain(beta).unwrap();
        let soft = mmse_gain(beta, 0.4, 0.1).unwrap();
        assert!(soft.norm() < zf.norm());
        assert_relative_eq!(
            soft.norm(),
            beta.norm() / (0.4 + 0.1 + beta.norm_sqr()),
            max_relative = 1e-12
        );
        // With no interference and no noise the two coincide exactly.
        assert_eq!(mmse_gain(beta, 0.0, 0.0).unwrap(), zf);
        assert!(mmse_gain(Complex64::new(0.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn equalizer_none_passes_through() {
        assert_eq!(
            Equalizer::None
                .gain(Complex64::new(0.3, 0.4), 1.0, 1.0)
                .unwrap(),
            Complex64::new(1.0, 0.0)
        );
    }

    // Gate probability and conditional equalizer moments of an isolated
    // link, frozen from quadrature: |beta|^2 is exponential with mean 10
    // (P_o = 1, r = 0.3, alpha = 2, sigma_h^2 = 0.9), gate at
    // SINR >= 2 with noise variance 1, no interferers, so the gate keeps
    // |beta|^2 >= 2.
    const GATE_PROBABILITY: f64 = 0.8187307530779818;
    const ZF_GAIN_SQ: f64 = 0.14933487469322396;
    const MMSE_GAIN_SQ: f64 = 0.10114558322553108;
    const MMSE_POST_EQ: f64 = 0.8777464394919414;

    fn isolated_link_moments(equalizer: Equalizer, seed: u64) -> LinkMomentSet {
        let topo = two_node_topo(0.3);
        let params = ChannelParams::uniform(2, 1.0, 2.0, 0.9, 1.0, 2.0).unwrap();
        estimate_link_moments(&params, &topo, equalizer, &UniformRule, 200_000, &mut rng(seed))
            .unwrap()
    }

    #[test]
    fn activation_matches_the_exponential_tail() {
        let set = isolated_link_moments(Equalizer::Zf, 42);
        let m = set.get(0, 1).unwrap();
        // Standard error of a Bernoulli mean at n = 2e5 is ~0.00086.
        assert!((m.activation - GATE_PROBABILITY).abs() < 0.003);
        assert_eq!(m.gain_var, 10.0);
        assert_eq!(m.interference_var, 0.0);
        assert_eq!(m.noise_var, 1.0);
    }

    #[test]
    fn zf_conditional_gain_energy_matches_quadrature() {
        let set = isolated_link_moments(Equalizer::Zf, 43);
        let m = set.get(0, 1).unwrap();
        assert_relative_eq!(m.eq_gain_sq.unwrap(), ZF_GAIN_SQ, max_relative = 0.02);
        assert_eq!(m.post_eq_mean, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn mmse_conditional_moments_match_quadrature() {
        let set = isolated_link_moments(Equalizer::Mmse, 44);
        let m = set.get(0, 1).unwrap();
        assert_relative_eq!(m.eq_gain_sq.unwrap(), MMSE_GAIN_SQ, max_relative = 0.02);
        assert_relative_eq!(m.post_eq_mean.re, MMSE_POST_EQ, max_relative = 0.02);
        assert!(m.post_eq_mean.im.abs() < 0.01);
    }

    #[test]
    fn weight_moments_reflect_the_gated_uniform_rule() {
        // Two nodes: the active set is {k} or {k, l}, so the uniform rule
        // gives the neighbor weight 1/2 exactly when active. Hence
        // E{a} = p/2 and E{a^2 |g|^2} = E{|g|^2 | active} p / 4.
        let set = isolated_link_moments(Equalizer::Zf, 45);
        let m = set.get(0, 1).unwrap();
        assert_relative_eq!(m.weight_mean, m.activation / 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            m.weight_sq_gain,
            m.eq_gain_sq.unwrap() * m.activation / 4.0,
            max_relative = 1e-12
        );
        // Self entry mirrors it: weight 1 when alone, 1/2 when shared.
        let s = set.get(1, 1).unwrap();
        assert_relative_eq!(
            s.weight_mean,
            1.0 - m.activation / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn moment_estimation_is_deterministic_and_seed_stable() {
        let a = isolated_link_moments(Equalizer::Zf, 46);
        let b = isolated_link_moments(Equalizer::Zf, 46);
        assert_eq!(a, b);
        let c = isolated_link_moments(Equalizer::Zf, 47);
        assert_ne!(a, c);
        // Different seeds agree on the activation probability within the
        // Monte Carlo resolution.
        let pa = a.get(0, 1).unwrap().activation;
        let pc = c.get(0, 1).unwrap().activation;
        assert!((pa - pc).abs() < 0.02);
    }

    #[test]
    fn impossible_gate_reports_unavailable_equalizer_moment() {
        let topo = two_node_topo(0.3);
        // Threshold far above anything 2e3 samples can reach.
        let params = ChannelParams::uniform(2, 1.0, 2.0, 0.9, 1.0, 1e9).unwrap();
        let set =
            estimate_link_moments(&params, &topo, Equalizer::Zf, &UniformRule, 2_000, &mut rng(3))
                .unwrap();
        let m = set.get(0, 1).unwrap();
        assert_eq!(m.activation, 0.0);
        assert_eq!(m.eq_gain_sq, None);
        assert_eq!(m.weight_mean, 0.0);
        assert_eq!(m.weight_sq_gain, 0.0);
    }

    #[test]
    fn ideal_moments_are_noise_free_and_fully_active() {
        let topo = NetworkTopology::generate(4, 0.8, 1.0, 2).unwrap();
        let set = LinkMomentSet::ideal(&topo, &UniformRule).unwrap();
        for k in 0..4 {
            for &l in topo.neighbors(k) {
                let m = set.get(l, k).unwrap();
                assert_eq!(m.activation, 1.0);
                assert_eq!(m.interference_var, 0.0);
                assert_eq!(m.noise_var, 0.0);
                assert_eq!(m.post_eq_mean, Complex64::new(1.0, 0.0));
                assert_eq!(m.weight_mean, 1.0 / topo.degree(k) as f64);
            }
        }
    }

    proptest! {
        #[test]
        fn complex_gaussian_scales_with_variance(seed in 0u64..1000) {
            let mut r = rng(seed);
            let x = complex_gaussian(4.0, &mut r);
            let mut r2 = rng(seed);
            let y = complex_gaussian(1.0, &mut r2);
            // Same underlying normal draws, scaled by sqrt of variance ratio.
            prop_assert!((x - y * 2.0).norm() < 1e-12);
        }

        #[test]
        fn raising_the_threshold_never_grows_the_active_set(
            seed in 0u64..200,
            low in 0.0f64..1.0,
            bump in 0.0f64..2.0,
        ) {
            let mut r = rng(seed);
            let gains: Vec<(usize, Complex64)> = (0..5)
                .map(|i| (i, complex_gaussian(1.0, &mut r)))
                .collect();
            let sinrs: Vec<(usize, f64)> = gains
                .iter()
                .map(|(l, _)| (*l, sinr(&gains, *l, 0.05).unwrap()))
                .collect();
            let loose = gate_links(5, &sinrs, low);
            let tight = gate_links(5, &sinrs, low + bump);
            prop_assert!(tight.iter().all(|n| loose.contains(n)));
            prop_assert!(tight.contains(&5));
        }
    }
}
