//! Uplink pilot training, channel estimation, detection and the SNR loss
//! incurred when two closely spaced paths merge under a low-resolution
//! receive array.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::array::{select_successive, AntennaSelection};
use crate::channel::{steering_uplink_unchecked, ArrayGeometry, ChannelMatrix, Orientation};
use crate::linalg::{complex_normal_matrix, complex_normal_vector, inverse, left_pinv, norm_sqr};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Orthonormal `K × τ` pilot matrix together with the pilot SNR `ρ_τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    matrix: CMatrix,
    power: f64,
}

impl PilotBlock {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Pilot SNR `ρ_τ` (linear).
    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn num_users(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn length(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Additive white noise variance `σ_n²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    variance: f64,
}

impl NoiseModel {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::config(format!("noise variance must be > 0, got {variance}")));
        }
        Ok(Self { variance })
    }

    /// Variance-zero model for noiseless checks.
    pub fn noiseless() -> Self {
        Self { variance: 0.0 }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { variance: 1.0 }
    }
}

/// First `K` rows of the `τ`-point DFT matrix scaled by `1/√τ`.
pub fn generate_pilots(k: usize, tau: usize, power: f64) -> Result<PilotBlock> {
    if k == 0 {
        return Err(Error::config("need at least one user"));
    }
    if tau < k {
        return Err(Error::config(format!("pilot length {tau} shorter than user count {k}")));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(Error::config(format!("pilot power must be >= 0, got {power}")));
    }
    let scale = 1.0 / (tau as f64).sqrt();
    let matrix = CMatrix::from_fn(k, tau, |r, c| {
        let idx = (r * c) % tau;
        Complex64::from_polar(scale, -2.0 * PI * idx as f64 / tau as f64)
    });
    Ok(PilotBlock { matrix, power })
}

fn expect_uplink(h: &ChannelMatrix) -> Result<&CMatrix> {
    match h.orientation() {
        Orientation::UplinkColumns => Ok(h.data()),
        Orientation::DownlinkRows => Err(Error::config("expected an uplink (N x K) channel matrix")),
    }
}

/// `Y = √ρ_τ·H·P + N` with i.i.d. `CN(0, σ_n²)` noise.
pub fn received_pilot<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    pilots: &PilotBlock,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<CMatrix> {
    let h = expect_uplink(h)?;
    if h.ncols() != pilots.num_users() {
        return Err(Error::config(format!(
            "channel has {} users but pilots have {}",
            h.ncols(),
            pilots.num_users()
        )));
    }
    let clean = h * pilots.matrix() * Complex64::from(pilots.power().sqrt());
    if noise.variance() == 0.0 {
        return Ok(clean);
    }
    Ok(clean + complex_normal_matrix(rng, h.nrows(), pilots.length(), noise.variance()))
}

fn check_estimation_inputs(y: &CMatrix, pilots: &PilotBlock) -> Result<()> {
    if !(pilots.power() > 0.0) {
        return Err(Error::config("pilot power must be positive for estimation"));
    }
    if y.ncols() != pilots.length() {
        return Err(Error::config(format!(
            "received block has {} columns but pilots have length {}",
            y.ncols(),
            pilots.length()
        )));
    }
    Ok(())
}

/// Least-squares estimate `Ĥ = Y·Pᴴ/√ρ_τ`.
pub fn estimate_ls(y: &CMatrix, pilots: &PilotBlock) -> Result<ChannelMatrix> {
    check_estimation_inputs(y, pilots)?;
    let est = y * pilots.matrix().adjoint() * Complex64::from(1.0 / pilots.power().sqrt());
    Ok(ChannelMatrix::uplink(est))
}

/// LMMSE estimate `(1/√ρ_τ)·Y·Pᴴ·((1/ρ_τ)·R⁻¹ + I_K)⁻¹` for the `K × K`
/// channel correlation `R = E{HᴴH}`.
pub fn estimate_lmmse(y: &CMatrix, pilots: &PilotBlock, correlation: &CMatrix) -> Result<ChannelMatrix> {
    check_estimation_inputs(y, pilots)?;
    let k = pilots.num_users();
    if correlation.shape() != (k, k) {
        return Err(Error::config(format!("correlation must be {k}x{k}")));
    }
    let r_inv = inverse(correlation)?;
    let shrink = inverse(&(r_inv * Complex64::from(1.0 / pilots.power()) + CMatrix::identity(k, k)))?;
    let ls = estimate_ls(y, pilots)?.into_data();
    Ok(ChannelMatrix::uplink(ls * shrink))
}

/// Analytic correlation `N·I_K` for i.i.d. unit-variance path gains.
pub fn analytic_correlation(n: usize, k: usize) -> CMatrix {
    CMatrix::identity(k, k) * Complex64::from(n as f64)
}

/// Sample correlation `(1/T)·Σ HᴴH` over channel realizations.
pub fn sample_correlation(realizations: &[CMatrix]) -> Result<CMatrix> {
    let first = realizations.first().ok_or_else(|| Error::config("no realizations"))?;
    let mut acc = CMatrix::zeros(first.ncols(), first.ncols());
    for h in realizations {
        acc += h.adjoint() * h;
    }
    Ok(acc / Complex64::from(realizations.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Mrc,
    Zf,
}

impl Detector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Detector::Mrc => "mrc",
            Detector::Zf => "zf",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrc" => Ok(Detector::Mrc),
            "zf" => Ok(Detector::Zf),
            other => Err(format!("unknown detector `{other}` (mrc|zf)")),
        }
    }
}

/// `r = √ρ_u·H̃ᴴ·H·x + H̃ᴴ·n`.
pub fn mrc_detect<R: Rng + ?Sized>(
    h_est: &CMatrix,
    h_true: &CMatrix,
    x: &CVector,
    rho_u: f64,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<CVector> {
    if h_est.shape() != h_true.shape() || h_true.ncols() != x.len() {
        return Err(Error::config("mrc_detect: dimension mismatch"));
    }
    let mut y = h_true * x * Complex64::from(rho_u.sqrt());
    if noise.variance() > 0.0 {
        y += complex_normal_vector(rng, h_true.nrows(), noise.variance());
    }
    Ok(h_est.adjoint() * y)
}

/// Zero-forcing detection `(H̃ᴴH̃)⁻¹H̃ᴴ·y`.
pub fn zf_detect(h_est: &CMatrix, y: &CVector) -> Result<CVector> {
    if h_est.nrows() != y.len() {
        return Err(Error::config("zf_detect: dimension mismatch"));
    }
    Ok(left_pinv(h_est)? * y)
}

/// Linear combiner `V` (`N × K`) whose column `k` detects user `k`.
pub fn combiner(h_est: &CMatrix, detector: Detector) -> Result<CMatrix> {
    match detector {
        Detector::Mrc => Ok(h_est.clone()),
        Detector::Zf => Ok(left_pinv(h_est)?.adjoint()),
    }
}

/// Per-user SINR of a linear combiner:
/// `ρ_u|v_kᴴh_k|² / (ρ_u·Σ_{i≠k}|v_kᴴh_i|² + σ_n²‖v_k‖²)`.
///
/// For `V = H̃` this is the MRC SINR inside the ergodic uplink rate.
pub fn combiner_sinr(v: &CMatrix, h_true: &CMatrix, rho_u: f64, noise: NoiseModel) -> Result<Vec<f64>> {
    if v.shape() != h_true.shape() {
        return Err(Error::config("combiner and channel shapes differ"));
    }
    let cross = v.adjoint() * h_true;
    let k = h_true.ncols();
    Ok((0..k)
        .map(|u| {
            let signal = rho_u * cross[(u, u)].norm_sqr();
            let interference: f64 = (0..k).filter(|&i| i != u).map(|i| cross[(u, i)].norm_sqr()).sum::<f64>() * rho_u;
            let vn = norm_sqr(&v.column(u).into_owned()) * noise.variance();
            let denom = interference + vn;
            if denom == 0.0 {
                if signal == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                signal / denom
            }
        })
        .collect())
}

/// Instantaneous per-user uplink rates `log2(1 + SINR_k)`.
pub fn uplink_rates(h_est: &CMatrix, h_true: &CMatrix, rho_u: f64, detector: Detector) -> Result<Vec<f64>> {
    let v = combiner(h_est, detector)?;
    Ok(combiner_sinr(&v, h_true, rho_u, NoiseModel::default())?
        .into_iter()
        .map(|s| (1.0 + s).log2())
        .collect())
}

/// `sin(N·x)/sin(x)`, continued by its limit where `sin(x)` vanishes.
pub fn dirichlet(n: usize, x: f64) -> f64 {
    let nf = n as f64;
    let s = x.sin();
    if s.abs() < 1e-12 {
        nf * (nf * x).cos() / x.cos()
    } else {
        (nf * x).sin() / s
    }
}

/// Two equal-power paths seen by an `N`-element compact receive array and the
/// single composite angle they are resolved as.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrLossInputs {
    pub theta1: f64,
    pub theta2: f64,
    pub composite_theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub n: usize,
    pub spacing: f64,
}

impl SnrLossInputs {
    /// Validates that the paths are distinct but unresolvable by the
    /// `N`-element array (`0 < |sin θ₁ − sin θ₂| ≤ 1/(N·d/λ)`).
    pub fn new(
        theta1: f64,
        theta2: f64,
        composite_theta: f64,
        phi1: f64,
        phi2: f64,
        n: usize,
        spacing: f64,
    ) -> Result<Self> {
        let inputs = Self { theta1, theta2, composite_theta, phi1, phi2, n, spacing };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("N must be positive"));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::config("spacing must be positive"));
        }
        let vals = [self.theta1, self.theta2, self.composite_theta, self.phi1, self.phi2];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite SNR-loss input"));
        }
        let sep = (self.theta1.sin() - self.theta2.sin()).abs();
        if sep == 0.0 {
            return Err(Error::domain("the two paths must have distinct angles"));
        }
        let resolution = 1.0 / (self.n as f64 * self.spacing);
        if sep > resolution * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "paths separated by {sep} in spatial frequency are resolvable (resolution {resolution})"
            )));
        }
        Ok(())
    }
}

/// Closed-form normalized SNR loss
/// `1 − (Λ₁² + Λ₂² + 2Λ₁Λ₂cosΓ) / (2N² + 2NΛcosΓ)`.
pub fn snr_loss_closed_form(inputs: &SnrLossInputs) -> f64 {
    let n = inputs.n;
    let nf = n as f64;
    let (w1, w2, ws) = (inputs.theta1.sin(), inputs.theta2.sin(), inputs.composite_theta.sin());
    let pd = PI * inputs.spacing;
    let big_theta = w1 - w2;
    let lambda = dirichlet(n, pd * big_theta);
    let lambda1 = dirichlet(n, pd * (ws - w1));
    let lambda2 = dirichlet(n, pd * (ws - w2));
    let gamma = inputs.phi1 - inputs.phi2 - pd * (nf - 1.0) * big_theta;
    let num = lambda1 * lambda1 + lambda2 * lambda2 + 2.0 * lambda1 * lambda2 * gamma.cos();
    let den = 2.0 * nf * nf + 2.0 * nf * lambda * gamma.cos();
    if den == 0.0 {
        return 0.0;
    }
    1.0 - num / den
}

/// The same loss computed from explicit vectors: the true two-path channel
/// with unit-magnitude gains `e^{jφ}` against a single composite path of
/// magnitude `√2`, both on a successive `N`-element array.
pub fn snr_loss_numeric(inputs: &SnrLossInputs) -> Result<f64> {
    let n = inputs.n;
    if n == 1 {
        // A single element cannot distinguish directions.
        return Ok(0.0);
    }
    let geometry = ArrayGeometry::new(n, inputs.spacing)?;
    let sel = select_successive(n, n)?;
    let a1 = steering_uplink_unchecked(&sel, &geometry, inputs.theta1.sin());
    let a2 = steering_uplink_unchecked(&sel, &geometry, inputs.theta2.sin());
    let scale = (n as f64 / 2.0).sqrt();
    let h = (a1 * Complex64::from_polar(1.0, inputs.phi1) + a2 * Complex64::from_polar(1.0, inputs.phi2))
        * Complex64::from(scale);
    let hs = steering_uplink_unchecked(&sel, &geometry, inputs.composite_theta.sin()) * Complex64::from(2f64.sqrt());
    let snr_resolved = norm_sqr(&h);
    if snr_resolved == 0.0 {
        return Err(Error::numerical("two-path channel vanishes"));
    }
    // Energy left after projecting onto the composite direction; equal to
    // 1 − merged/resolved without the cancellation when the loss is tiny.
    let u = &hs / Complex64::from(hs.norm());
    let residual = &h - &u * u.dotc(&h);
    Ok(norm_sqr(&residual) / snr_resolved)
}

/// Matched-filter power `|a_U(w)ᴴ·h|²` of an uplink channel over a grid.
pub fn periodogram(h: &CVector, selection: &AntennaSelection, geometry: &ArrayGeometry, grid: &[f64]) -> Result<Vec<f64>> {
    selection.check_geometry(geometry)?;
    if h.len() != selection.len() {
        return Err(Error::config("channel length differs from selection size"));
    }
    Ok(grid
        .iter()
        .map(|&w| steering_uplink_unchecked(selection, geometry, w).dotc(h).norm_sqr())
        .collect())
}

fn composite_grid(geometry: &ArrayGeometry) -> Vec<f64> {
    crate::array::beam_grid(16 * geometry.num_elements())
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Spatial frequency maximizing the periodogram of `h`: a grid search over
/// `16·M` points followed by a golden-section polish.
pub fn periodogram_peak(h: &CVector, selection: &AntennaSelection, geometry: &ArrayGeometry) -> Result<f64> {
    let grid = composite_grid(geometry);
    let p = periodogram(h, selection, geometry, &grid)?;
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    let step = grid[1] - grid[0];
    let lo = (grid[best] - step).max(-1.0);
    let hi = (grid[best] + step).min(1.0);
    let f = |w: f64| steering_uplink_unchecked(selection, geometry, w).dotc(h).norm_sqr();
    Ok(golden_max(f, lo, hi, 1e-12))
}

fn two_path_channel(
    theta1: f64,
    theta2: f64,
    phi1: f64,
    phi2: f64,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
) -> CVector {
    let a1 = steering_uplink_unchecked(selection, geometry, theta1.sin());
    let a2 = steering_uplink_unchecked(selection, geometry, theta2.sin());
    a1 * Complex64::from_polar(1.0, phi1) + a2 * Complex64::from_polar(1.0, phi2)
}

/// Composite (dominant) angle, in radians, under which two equal-power paths
/// appear to the receive array.
pub fn composite_angle(
    theta1: f64,
    theta2: f64,
    phi1: f64,
    phi2: f64,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
) -> Result<f64> {
    selection.check_geometry(geometry)?;
    let h = two_path_channel(theta1, theta2, phi1, phi2, selection, geometry);
    Ok(periodogram_peak(&h, selection, geometry)?.asin())
}

/// Spatial frequencies of the periodogram peaks holding at least half of the
/// maximum power, in increasing order.
pub fn resolved_peaks(h: &CVector, selection: &AntennaSelection, geometry: &ArrayGeometry) -> Result<Vec<f64>> {
    let grid = composite_grid(geometry);
    let p = periodogram(h, selection, geometry, &grid)?;
    let max = p.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let last = p.len() - 1;
    Ok((0..p.len())
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { p[i - 1] };
            let right = if i == last { f64::NEG_INFINITY } else { p[i + 1] };
            p[i] >= left && p[i] > right && p[i] >= 0.5 * max
        })
        .map(|i| grid[i])
        .collect())
}

/// Number of effective paths a receive array resolves for a two-path channel.
pub fn resolved_path_count(
    theta1: f64,
    theta2: f64,
    phi1: f64,
    phi2: f64,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
) -> Result<usize> {
    selection.check_geometry(geometry)?;
    let h = two_path_channel(theta1, theta2, phi1, phi2, selection, geometry);
    Ok(resolved_peaks(&h, selection, geometry)?.len())
}
