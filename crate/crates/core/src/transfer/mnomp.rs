use crate::array::AntennaSelection;
use crate::channel::{steering_uplink_unchecked, ArrayGeometry};
use crate::linalg::{norm_sqr, solve};
use crate::{CMatrix, CVector, Complex64, Error, Result};

use super::{bin_frequency, check_inputs, reconstruct, spatial_matched_filter, wrap_frequency, TransferConfig, TransferResult};

/// A single path estimate in the normalized model `y = √N·g·a_S(w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub gain: Complex64,
    pub freq: f64,
}

/// Coarse detection of the strongest path left in `residual`: the grid bin
/// with the largest matched-filter output, ties to the lower bin.
pub fn nomp_detect(
    residual: &CVector,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
    oversampling: usize,
) -> Result<Detection> {
    let spectrum = spatial_matched_filter(residual, selection, oversampling)?;
    let mut best = 0;
    for (i, z) in spectrum.iter().enumerate() {
        if z.norm_sqr() > spectrum[best].norm_sqr() {
            best = i;
        }
    }
    Ok(Detection {
        gain: spectrum[best].conj(),
        freq: bin_frequency(best, spectrum.len(), geometry.spacing()),
    })
}

fn centroid(selection: &AntennaSelection) -> f64 {
    selection.offsets().map(|o| o as f64).sum::<f64>() / selection.len() as f64
}

/// Steering vector and its first two `w`-derivatives with the phase reference
/// moved to the centroid of the selected elements.
fn steering_with_derivatives(selection: &AntennaSelection, geometry: &ArrayGeometry, w: f64) -> (CVector, CVector, CVector) {
    let slope = 2.0 * std::f64::consts::PI * geometry.spacing();
    let center = centroid(selection);
    let shift = Complex64::from_polar(1.0, slope * center * w);
    let a = steering_uplink_unchecked(selection, geometry, w) * shift;
    let factors: Vec<Complex64> = selection
        .offsets()
        .map(|o| Complex64::new(0.0, -slope * (o as f64 - center)))
        .collect();
    let d1 = CVector::from_iterator(a.len(), a.iter().zip(&factors).map(|(v, f)| v * f));
    let d2 = CVector::from_iterator(a.len(), a.iter().zip(&factors).map(|(v, f)| v * f * f));
    (a, d1, d2)
}

/// First and second derivatives in `w` of `J(w) = ‖y − √N·g·a_S(w)‖²` with
/// the gain held fixed. The gain is held fixed relative to the centroid of the
/// selected elements, so the curvature does not pick up the phase slope the
/// gain re-fit removes anyway.
pub fn newton_derivatives(
    y: &CVector,
    path: &Detection,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
) -> (f64, f64) {
    let sqrt_n = (selection.len() as f64).sqrt();
    let slope = 2.0 * std::f64::consts::PI * geometry.spacing();
    let (a, d1, d2) = steering_with_derivatives(selection, geometry, path.freq);
    let g = path.gain * Complex64::from_polar(sqrt_n, -slope * centroid(selection) * path.freq);
    let resid = y - &a * g;
    let first = -2.0 * (g * resid.dotc(&d1)).re;
    let second = -2.0 * (g * resid.dotc(&d2)).re + 2.0 * g.norm_sqr() * norm_sqr(&d1);
    (first, second)
}

fn fit_gain(y: &CVector, selection: &AntennaSelection, geometry: &ArrayGeometry, w: f64) -> Complex64 {
    let sqrt_n = (selection.len() as f64).sqrt();
    steering_uplink_unchecked(selection, geometry, w).dotc(y) / sqrt_n
}

fn path_residual(y: &CVector, path: &Detection, selection: &AntennaSelection, geometry: &ArrayGeometry) -> f64 {
    let sqrt_n = (selection.len() as f64).sqrt();
    let a = steering_uplink_unchecked(selection, geometry, path.freq);
    norm_sqr(&(y - a * (path.gain * sqrt_n)))
}

/// Up to `steps` Newton updates of one path against `y`, the signal with every
/// other path removed. A step is kept only where the curvature is positive and
/// the fit does not get worse; the gain is re-fitted after each step.
pub fn newton_refine(
    y: &CVector,
    path: Detection,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
    steps: usize,
) -> Detection {
    let mut current = path;
    let mut current_res = path_residual(y, &current, selection, geometry);
    for _ in 0..steps {
        let (first, second) = newton_derivatives(y, &current, selection, geometry);
        if !(second > 0.0) {
            break;
        }
        let freq = current.freq - first / second;
        if !freq.is_finite() {
            break;
        }
        let candidate = Detection { gain: fit_gain(y, selection, geometry, freq), freq };
        let res = path_residual(y, &candidate, selection, geometry);
        if res <= current_res {
            current = candidate;
            current_res = res;
        } else {
            break;
        }
    }
    current
}

fn steering_matrix(paths: &[Detection], selection: &AntennaSelection, geometry: &ArrayGeometry) -> CMatrix {
    let cols: Vec<CVector> = paths
        .iter()
        .map(|p| steering_uplink_unchecked(selection, geometry, p.freq))
        .collect();
    CMatrix::from_columns(&cols)
}

/// Residual `y − √N·Σ g_l·a_S(w_l)`.
fn model_residual(y: &CVector, paths: &[Detection], selection: &AntennaSelection, geometry: &ArrayGeometry) -> CVector {
    let sqrt_n = (selection.len() as f64).sqrt();
    let mut r = y.clone();
    for p in paths {
        r -= steering_uplink_unchecked(selection, geometry, p.freq) * (p.gain * sqrt_n);
    }
    r
}

/// Joint regularized least-squares re-fit of all gains at fixed frequencies.
fn refit_gains(
    y: &CVector,
    paths: &mut [Detection],
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
    regularization: f64,
) -> Result<()> {
    let a = steering_matrix(paths, selection, geometry);
    let l = paths.len();
    let gram = a.adjoint() * &a + CMatrix::identity(l, l) * Complex64::from(regularization);
    let rhs = a.adjoint() * CMatrix::from_column_slice(y.len(), 1, y.as_slice());
    let sol = solve(&gram, &rhs)?;
    let sqrt_n = (selection.len() as f64).sqrt();
    for (p, g) in paths.iter_mut().zip(sol.column(0).iter()) {
        p.gain = g / sqrt_n;
    }
    Ok(())
}

/// Multi-snapshot Newtonized OMP restricted to the `N` receive antennas:
/// greedy grid detection, Newton refinement of each new path, cyclic
/// refinement of all paths and a joint gain re-fit per iteration.
///
/// Stops when the residual energy drops below the threshold or `max_paths`
/// paths are found. An iteration that would increase the residual is undone
/// and ends the search with `threshold_met = false`.
pub fn mnomp_transfer(
    h_s: &CVector,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
    config: &TransferConfig,
) -> Result<TransferResult> {
    check_inputs(h_s, selection, geometry, config)?;
    let mut paths: Vec<Detection> = Vec::new();
    let mut residual = h_s.clone();
    let mut energy = norm_sqr(&residual);
    let mut trace = vec![energy];

    while (paths.is_empty() || energy >= config.threshold) && paths.len() < config.max_paths {
        let detected = nomp_detect(&residual, selection, geometry, config.oversampling)?;
        if detected.gain.norm_sqr() == 0.0 {
            break;
        }
        let mut candidate = paths.clone();
        candidate.push(newton_refine(&residual, detected, selection, geometry, config.newton_steps));

        for _ in 0..config.cyclic_rounds {
            for l in 0..candidate.len() {
                let others: Vec<Detection> = candidate
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != l)
                    .map(|(_, p)| *p)
                    .collect();
                let target = model_residual(h_s, &others, selection, geometry);
                candidate[l] = newton_refine(&target, candidate[l], selection, geometry, config.newton_steps);
            }
        }

        refit_gains(h_s, &mut candidate, selection, geometry, config.regularization)?;
        let next = model_residual(h_s, &candidate, selection, geometry);
        let next_energy = norm_sqr(&next);
        if !next_energy.is_finite() {
            return Err(Error::numerical("residual became non-finite"));
        }
        if next_energy > energy {
            break;
        }
        paths = candidate;
        residual = next;
        energy = next_energy;
        trace.push(energy);
    }

    let threshold_met = energy < config.threshold;
    let coeffs: Vec<Complex64> = paths.iter().map(|p| p.gain).collect();
    let freqs: Vec<f64> = paths.iter().map(|p| wrap_frequency(p.freq, geometry.spacing())).collect();
    let count_sqrt = (paths.len() as f64).sqrt();
    Ok(TransferResult {
        channel: reconstruct(&coeffs, &freqs, geometry),
        gains: coeffs.iter().map(|c| c * count_sqrt).collect(),
        spatial_freqs: freqs,
        threshold_met,
        residual_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{select_random, select_successive};
    use crate::channel::{downlink_channel, draw_path_set, uplink_channel, PathSet};
    use crate::transfer::TransferAlgorithm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // J(w) with the gain frozen at `w0` relative to the element centroid.
    fn objective(y: &CVector, g: Complex64, w0: f64, w: f64, sel: &AntennaSelection, geo: &ArrayGeometry) -> f64 {
        let c: f64 = sel.offsets().map(|o| o as f64).sum::<f64>() / sel.len() as f64;
        let turn = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * geo.spacing() * c * (w - w0));
        path_residual(y, &Detection { gain: g * turn, freq: w }, sel, geo)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let geo = ArrayGeometry::half_wavelength(64).unwrap();
        let sel = select_random(64, 12, false, &mut rng).unwrap();
        let y = crate::linalg::complex_normal_vector(&mut rng, 12, 1.0);
        let p = Detection { gain: Complex64::new(0.4, -0.2), freq: 0.317 };
        let (d1, d2) = newton_derivatives(&y, &p, &sel, &geo);
        let h = 1e-5;
        let f = |w: f64| objective(&y, p.gain, p.freq, w, &sel, &geo);
        let fd1 = (f(p.freq + h) - f(p.freq - h)) / (2.0 * h);
        let fd2 = (f(p.freq + h) - 2.0 * f(p.freq) + f(p.freq - h)) / (h * h);
        assert!((d1 - fd1).abs() < 1e-5 * d1.abs().max(1.0), "{d1} vs {fd1}");
        assert!((d2 - fd2).abs() < 1e-3 * d2.abs().max(1.0), "{d2} vs {fd2}");
    }

    #[test]
    fn newton_refines_off_grid_path() {
        let geo = ArrayGeometry::half_wavelength(128).unwrap();
        let sel = select_successive(128, 32).unwrap();
        let w = 0.123456;
        let paths = PathSet::from_spatial(vec![Complex64::new(1.0, 0.5)], &[w]).unwrap();
        let y = uplink_channel(&paths, &sel, &geo).unwrap();
        let coarse = nomp_detect(&y, &sel, &geo, 4).unwrap();
        let fine = newton_refine(&y, coarse, &sel, &geo, 6);
        assert!((fine.freq - w).abs() < (coarse.freq - w).abs());
        assert!((fine.freq - w).abs() < 1e-8);
        assert!((fine.gain - Complex64::new(1.0, 0.5)).norm() < 1e-6);
    }

    #[test]
    fn noiseless_recovery_is_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let geo = ArrayGeometry::half_wavelength(128).unwrap();
        let sel = select_random(128, 32, false, &mut rng).unwrap();
        let paths = PathSet::from_spatial(
            vec![Complex64::new(1.0, 0.2), Complex64::new(-0.6, 0.7), Complex64::new(0.3, -0.9)],
            &[-0.61, 0.052, 0.47],
        )
        .unwrap();
        let y = uplink_channel(&paths, &sel, &geo).unwrap();
        let cfg = TransferConfig::new(TransferAlgorithm::Mnomp, 1e-6);
        let r = mnomp_transfer(&y, &sel, &geo, &cfg).unwrap();
        let truth = downlink_channel(&paths, &geo);
        let nmse = (r.channel - &truth).norm_squared() / truth.norm_squared();
        assert!(nmse < 1e-4, "nmse {nmse}");
    }

    #[test]
    fn residual_trace_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let geo = ArrayGeometry::half_wavelength(64).unwrap();
        for _ in 0..20 {
            let sel = select_random(64, 16, false, &mut rng).unwrap();
            let p = draw_path_set(4, -1.0, 1.0, &mut rng).unwrap();
            let y = uplink_channel(&p, &sel, &geo).unwrap() + crate::linalg::complex_normal_vector(&mut rng, 16, 0.1);
            let cfg = TransferConfig::new(TransferAlgorithm::Mnomp, 1.6);
            let r = mnomp_transfer(&y, &sel, &geo, &cfg).unwrap();
            assert!(r.residual_trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(r.num_paths() <= cfg.max_paths);
        }
    }

    #[test]
    fn zero_input_finds_nothing() {
        let geo = ArrayGeometry::half_wavelength(16).unwrap();
        let sel = select_successive(16, 4).unwrap();
        let cfg = TransferConfig::new(TransferAlgorithm::Mnomp, 0.1);
        let r = mnomp_transfer(&CVector::zeros(4), &sel, &geo, &cfg).unwrap();
        assert_eq!(r.num_paths(), 0);
        assert!(r.threshold_met);
        assert_eq!(r.channel.norm(), 0.0);
    }
}
