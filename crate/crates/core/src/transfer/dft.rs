use crate::array::AntennaSelection;
use crate::channel::ArrayGeometry;
use crate::{CVector, Complex64, Result};

use super::{bin_frequency, check_inputs, reconstruct, spatial_matched_filter, TransferConfig, TransferResult};

/// Indices of circular local maxima of `|x|` (each at least as large as both
/// neighbours), sorted by decreasing magnitude, ties by increasing index.
pub fn find_peaks(x: &[Complex64]) -> Vec<usize> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mag: Vec<f64> = x.iter().map(|z| z.norm()).collect();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = mag[(i + n - 1) % n];
            let right = mag[(i + 1) % n];
            mag[i] >= left && mag[i] >= right
        })
        .collect();
    peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
    peaks
}

/// DFT-based transfer: take the strongest matched-filter peaks until the
/// unexplained energy drops to the threshold, then rebuild the downlink
/// channel from those peaks.
pub fn dft_transfer(
    h_s: &CVector,
    selection: &AntennaSelection,
    geometry: &ArrayGeometry,
    config: &TransferConfig,
) -> Result<TransferResult> {
    check_inputs(h_s, selection, geometry, config)?;
    let n = selection.len() as f64;
    let spectrum = spatial_matched_filter(h_s, selection, config.oversampling)?;
    let bins = spectrum.len();
    let peaks = find_peaks(&spectrum);

    let total: f64 = h_s.iter().map(|z| z.norm_sqr()).sum();
    let mut residual = total;
    let mut trace = vec![total];
    let mut chosen = Vec::new();
    let mut threshold_met = false;
    for &p in &peaks {
        if chosen.len() == config.max_paths {
            break;
        }
        chosen.push(p);
        residual -= n * spectrum[p].norm_sqr();
        trace.push(residual);
        if residual <= config.threshold {
            threshold_met = true;
            break;
        }
    }

    let coeffs: Vec<Complex64> = chosen.iter().map(|&p| spectrum[p].conj()).collect();
    let freqs: Vec<f64> = chosen.iter().map(|&p| bin_frequency(p, bins, geometry.spacing())).collect();
    let count_sqrt = (chosen.len() as f64).sqrt();
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
    use crate::array::select_successive;
    use crate::channel::{downlink_channel, uplink_channel, PathSet};
    use crate::transfer::TransferAlgorithm;

    #[test]
    fn peaks_sorted_with_ties_to_lower_index() {
        let x: Vec<Complex64> = [0.0, 3.0, 0.0, 5.0, 1.0, 3.0, 0.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        assert_eq!(find_peaks(&x), vec![3, 1, 5]);
        // Circular neighbourhood: index 0 beats its wrap-around neighbour.
        let y: Vec<Complex64> = [4.0, 1.0, 2.0, 1.0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        assert_eq!(find_peaks(&y), vec![0, 2]);
        assert!(find_peaks(&[]).is_empty());
    }

    #[test]
    fn on_grid_single_path_is_exact() {
        let m = 64;
        let g = ArrayGeometry::half_wavelength(m).unwrap();
        let sel = select_successive(m, 16).unwrap();
        // Bin 40 of 8·64 = 512 bins sits at w = 80/512.
        let w = 80.0 / 512.0;
        let gain = Complex64::new(0.7, -1.1);
        let paths = PathSet::from_spatial(vec![gain], &[w]).unwrap();
        let h_s = uplink_channel(&paths, &sel, &g).unwrap();
        let cfg = TransferConfig::new(TransferAlgorithm::Dft, 1e-9);
        let r = dft_transfer(&h_s, &sel, &g, &cfg).unwrap();
        assert!(r.threshold_met);
        assert_eq!(r.num_paths(), 1);
        assert!((r.spatial_freqs[0] - w).abs() < 1e-15);
        assert!((r.gains[0] - gain).norm() < 1e-12);
        assert!((r.channel - downlink_channel(&paths, &g)).camax() < 1e-12);
    }

    #[test]
    fn stops_at_max_paths_and_flags() {
        let g = ArrayGeometry::half_wavelength(32).unwrap();
        let sel = select_successive(32, 8).unwrap();
        let paths = PathSet::from_spatial(
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.8, 0.3), Complex64::new(-0.5, 0.9)],
            &[-0.513, 0.1234, 0.7771],
        )
        .unwrap();
        let h_s = uplink_channel(&paths, &sel, &g).unwrap();
        let mut cfg = TransferConfig::new(TransferAlgorithm::Dft, 0.0);
        cfg.max_paths = 2;
        let r = dft_transfer(&h_s, &sel, &g, &cfg).unwrap();
        assert!(!r.threshold_met);
        assert_eq!(r.num_paths(), 2);
    }

    #[test]
    fn zero_channel_yields_one_zero_path() {
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let sel = select_successive(16, 4).unwrap();
        let cfg = TransferConfig::new(TransferAlgorithm::Dft, 0.0);
        let r = dft_transfer(&CVector::zeros(4), &sel, &g, &cfg).unwrap();
        assert_eq!(r.num_paths(), 1);
        assert!(r.threshold_met);
        assert_eq!(r.channel.norm(), 0.0);
    }
}
