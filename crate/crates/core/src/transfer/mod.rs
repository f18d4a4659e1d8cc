//! Uplink-to-downlink channel transfer: recover the multipath parameters seen
//! by the `N` receive antennas and rebuild the `M`-element downlink channel.

use std::fmt;
use std::str::FromStr;

use rustfft::FftPlanner;

use crate::array::AntennaSelection;
use crate::channel::{steering_downlink_unchecked, ArrayGeometry, PathSet};
use crate::{CVector, Complex64, Error, Result};

mod dft;
mod mnomp;

pub use dft::{dft_transfer, find_peaks};
pub use mnomp::{mnomp_transfer, newton_derivatives, newton_refine, nomp_detect, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferAlgorithm {
    Dft,
    Mnomp,
}

impl TransferAlgorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransferAlgorithm::Dft => "dft",
            TransferAlgorithm::Mnomp => "mnomp",
        }
    }

    /// Default FFT oversampling factor `ζ`.
    pub fn default_oversampling(&self) -> usize {
        match self {
            TransferAlgorithm::Dft => 8,
            TransferAlgorithm::Mnomp => 4,
        }
    }
}

impl fmt::Display for TransferAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransferAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dft" => Ok(TransferAlgorithm::Dft),
            "mnomp" => Ok(TransferAlgorithm::Mnomp),
            other => Err(format!("unknown transfer algorithm `{other}` (dft|mnomp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferConfig {
    /// FFT oversampling factor `ζ`; the search grid has `M·ζ` bins.
    pub oversampling: usize,
    /// Residual-energy stopping threshold.
    pub threshold: f64,
    /// Hard cap on the number of recovered paths.
    pub max_paths: usize,
    /// Newton steps per path per refinement (`R_s`).
    pub newton_steps: usize,
    /// Cyclic refinement passes over all detected paths (`R_c`).
    pub cyclic_rounds: usize,
    /// Diagonal loading of the gain least-squares fit.
    pub regularization: f64,
}

impl TransferConfig {
    pub fn new(algorithm: TransferAlgorithm, threshold: f64) -> Self {
        Self {
            oversampling: algorithm.default_oversampling(),
            threshold,
            max_paths: 10,
            newton_steps: 2,
            cyclic_rounds: 2,
            regularization: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.oversampling == 0 {
            return Err(Error::config("oversampling factor must be >= 1"));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::config(format!("threshold must be finite and >= 0, got {}", self.threshold)));
        }
        if self.max_paths == 0 {
            return Err(Error::config("max_paths must be >= 1"));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::config("regularization must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Noise-matched threshold `N/ρ_τ`: the expected estimation-noise energy of
/// an `N`-element LS channel estimate.
pub fn default_threshold(n: usize, rho_tau: f64) -> Result<f64> {
    if !(rho_tau > 0.0) || !rho_tau.is_finite() {
        return Err(Error::config(format!("pilot SNR must be positive and finite, got {rho_tau}")));
    }
    Ok(n as f64 / rho_tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    /// Reconstructed downlink channel over all `M` elements, as a column.
    pub channel: CVector,
    /// Recovered path gains on the channel's own scale (`ĝ`).
    pub gains: Vec<Complex64>,
    /// Recovered spatial frequencies, wrapped to one period.
    pub spatial_freqs: Vec<f64>,
    /// Whether the residual fell below the threshold before `max_paths`.
    pub threshold_met: bool,
    /// Residual energy after each accepted step, starting with `‖h_S‖²`.
    pub residual_trace: Vec<f64>,
}

impl TransferResult {
    pub fn num_paths(&self) -> usize {
        self.gains.len()
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_trace.last().unwrap_or(&0.0)
    }

    /// The recovered paths as a [`PathSet`]. Fails for out-of-range frequencies
    /// (possible with element spacing above half a wavelength) or no paths.
    pub fn path_set(&self) -> Result<PathSet> {
        PathSet::from_spatial(self.gains.clone(), &self.spatial_freqs)
    }
}

/// Runs the chosen transfer algorithm on an uplink channel estimate.
pub fn transfer(
    algorithm: TransferAlgorithm,
    h_s: &CVector,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
    config: &TransferConfig,
) -> Result<TransferResult> {
    match algorithm {
        TransferAlgorithm::Dft => dft_transfer(h_s, selection, geometry, config),
        TransferAlgorithm::Mnomp => mnomp_transfer(h_s, selection, geometry, config),
    }
}

fn check_inputs(h_s: &CVector, selection: &AntennaSelection, geometry: &ArrayGeometry, config: &TransferConfig) -> Result<()> {
    config.validate()?;
    selection.check_geometry(geometry)?;
    if h_s.len() != selection.len() {
        return Err(Error::config(format!(
            "channel estimate has {} entries but {} antennas are selected",
            h_s.len(),
            selection.len()
        )));
    }
    if h_s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain("channel estimate contains non-finite entries"));
    }
    Ok(())
}

/// Places `h_S` at the selected element positions of an `M·ζ` zero vector.
pub fn zero_pad(h_s: &CVector, selection: &AntennaSelection, oversampling: usize) -> Result<CVector> {
    if h_s.len() != selection.len() {
        return Err(Error::config("channel length differs from selection size"));
    }
    if oversampling == 0 {
        return Err(Error::config("oversampling factor must be >= 1"));
    }
    let mut out = CVector::zeros(selection.total() * oversampling);
    for (v, o) in h_s.iter().zip(selection.offsets()) {
        out[o] = *v;
    }
    Ok(out)
}

/// Spatial matched filter on the oversampled grid: bin `I` holds
/// `conj(a_S(w_I)ᴴ·h_S)/√N`, with `w_I` given by [`bin_frequency`].
pub fn spatial_matched_filter(h_s: &CVector, selection: &AntennaSelection, oversampling: usize) -> Result<Vec<Complex64>> {
    let padded = zero_pad(h_s, selection, oversampling)?;
    let mut buf: Vec<Complex64> = padded.iter().map(|z| z.conj()).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let scale = 1.0 / selection.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    Ok(buf)
}

/// Spatial frequency of FFT bin `index` on a grid of `bins` points,
/// wrapped to `[-1/(2d), 1/(2d))`.
pub fn bin_frequency(index: usize, bins: usize, spacing: f64) -> f64 {
    wrap_frequency(index as f64 / (bins as f64 * spacing), spacing)
}

/// Wraps a spatial frequency to `[-1/(2d), 1/(2d))`.
pub fn wrap_frequency(w: f64, spacing: f64) -> f64 {
    let period = 1.0 / spacing;
    let half = 0.5 * period;
    let r = (w + half).rem_euclid(period) - half;
    if r >= half {
        r - period
    } else {
        r
    }
}

/// `√M·Σ c_l·a_D(w_l)`.
fn reconstruct(coeffs: &[Complex64], freqs: &[f64], geometry: &ArrayGeometry) -> CVector {
    let m = geometry.num_elements();
    let scale = (m as f64).sqrt();
    let mut h = CVector::zeros(m);
    for (c, &w) in coeffs.iter().zip(freqs) {
        h += steering_downlink_unchecked(geometry, w) * (*c * scale);
    }
    h
}
