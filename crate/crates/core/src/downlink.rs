//! Downlink precoding, achievable rates and channel-estimate accuracy.

use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelMatrix, Orientation};
use crate::linalg::{norm_sqr, right_pinv};
use crate::{CMatrix, CVector, Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precoder {
    Mrt,
    Zf,
}

impl Precoder {
    pub fn as_str(&self) -> &'static str {
        match self {
            Precoder::Mrt => "mrt",
            Precoder::Zf => "zf",
        }
    }
}

impl fmt::Display for Precoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precoder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mrt" => Ok(Precoder::Mrt),
            "zf" => Ok(Precoder::Zf),
            other => Err(format!("unknown precoder `{other}` (mrt|zf)")),
        }
    }
}

fn expect_downlink(h: &ChannelMatrix) -> Result<&CMatrix> {
    match h.orientation() {
        Orientation::DownlinkRows => Ok(h.data()),
        Orientation::UplinkColumns => Err(Error::config("expected a downlink (K x M) channel matrix")),
    }
}

fn normalize_columns(mut w: CMatrix) -> CMatrix {
    for mut col in w.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= Complex64::from(norm);
        }
    }
    w
}

/// `M × K` matched-filter precoder `Ĥᴴ` with unit-norm columns.
pub fn mrt_precoder(h_est: &ChannelMatrix) -> Result<CMatrix> {
    let h = expect_downlink(h_est)?;
    if let Some(k) = h.row_iter().position(|r| r.norm() == 0.0) {
        return Err(Error::domain(format!("user {k} has an all-zero channel estimate")));
    }
    Ok(normalize_columns(h.adjoint()))
}

/// `M × K` zero-forcing precoder `Ĥᴴ(ĤĤᴴ)⁻¹` with unit-norm columns.
pub fn zf_precoder(h_est: &ChannelMatrix) -> Result<CMatrix> {
    Ok(normalize_columns(right_pinv(expect_downlink(h_est)?)?))
}

pub fn precoder(h_est: &ChannelMatrix, kind: Precoder) -> Result<CMatrix> {
    match kind {
        Precoder::Mrt => mrt_precoder(h_est),
        Precoder::Zf => zf_precoder(h_est),
    }
}

/// Per-user SINR `|h_k w_k|² / (Σ_{i≠k}|h_k w_i|² + 1/ρ_d)` of precoder `W`
/// over the true downlink channel.
pub fn downlink_sinr(h_true: &ChannelMatrix, w: &CMatrix, rho_d: f64) -> Result<Vec<f64>> {
    let h = expect_downlink(h_true)?;
    if h.ncols() != w.nrows() || h.nrows() != w.ncols() {
        return Err(Error::config("precoder shape does not match the channel"));
    }
    if !(rho_d >= 0.0) {
        return Err(Error::config("downlink SNR must be >= 0"));
    }
    let gains = h * w;
    let k = h.nrows();
    let noise = if rho_d == 0.0 { f64::INFINITY } else { 1.0 / rho_d };
    Ok((0..k)
        .map(|u| {
            let signal = gains[(u, u)].norm_sqr();
            let interference: f64 = (0..k).filter(|&i| i != u).map(|i| gains[(u, i)].norm_sqr()).sum();
            let denom = interference + noise;
            if denom == 0.0 {
                f64::INFINITY
            } else {
                signal / denom
            }
        })
        .collect())
}

/// Instantaneous per-user downlink rates `log2(1 + SINR_k)`.
pub fn downlink_rates(h_true: &ChannelMatrix, w: &CMatrix, rho_d: f64) -> Result<Vec<f64>> {
    Ok(downlink_sinr(h_true, w, rho_d)?.into_iter().map(|s| (1.0 + s).log2()).collect())
}

/// `‖ĥ − h‖² / ‖h‖²` (linear).
pub fn nmse(estimate: &CVector, truth: &CVector) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::config("estimate and truth differ in length"));
    }
    let denom = norm_sqr(truth);
    if denom == 0.0 {
        return Err(Error::domain("NMSE of an all-zero channel is undefined"));
    }
    Ok(norm_sqr(&(estimate - truth)) / denom)
}

/// Converts a linear ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Mean of linear-scale NMSE samples, in dB.
pub fn mean_nmse_db(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::config("no NMSE samples"));
    }
    Ok(to_db(samples.iter().sum::<f64>() / samples.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_normal_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dl(rng: &mut ChaCha8Rng, k: usize, m: usize) -> ChannelMatrix {
        ChannelMatrix::downlink(complex_normal_matrix(rng, k, m, 1.0))
    }

    #[test]
    fn precoders_have_unit_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = dl(&mut rng, 4, 16);
        for kind in [Precoder::Mrt, Precoder::Zf] {
            let w = precoder(&h, kind).unwrap();
            assert_eq!(w.shape(), (16, 4));
            for c in w.column_iter() {
                assert!((c.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zf_nulls_interference_with_perfect_csi() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let h = dl(&mut rng, 5, 32);
        let w = zf_precoder(&h).unwrap();
        let g = h.data() * &w;
        for r in 0..5 {
            for c in 0..5 {
                if r != c {
                    assert!(g[(r, c)].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_user_mrt_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let h = dl(&mut rng, 1, 8);
        let w = mrt_precoder(&h).unwrap();
        let rate = downlink_rates(&h, &w, 2.0).unwrap()[0];
        let want = (1.0 + 2.0 * h.data().norm_squared()).log2();
        assert!((rate - want).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_zf_errors() {
        let mut h = CMatrix::zeros(2, 4);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        h[(1, 1)] = Complex64::new(2.0, 0.0);
        assert!(matches!(zf_precoder(&ChannelMatrix::downlink(h)), Err(Error::Numerical(_))));
    }

    #[test]
    fn mrt_rejects_zero_row_and_is_phase_aligned() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut h = complex_normal_matrix(&mut rng, 2, 4, 1.0);
        let w = mrt_precoder(&ChannelMatrix::downlink(h.clone())).unwrap();
        let g = &h * &w;
        for u in 0..2 {
            assert!(g[(u, u)].im.abs() < 1e-12 && g[(u, u)].re > 0.0);
        }
        h.row_mut(1).fill(Complex64::new(0.0, 0.0));
        assert!(matches!(mrt_precoder(&ChannelMatrix::downlink(h)), Err(Error::Domain(_))));
    }

    #[test]
    fn orientation_is_checked() {
        let h = ChannelMatrix::uplink(CMatrix::identity(4, 2));
        assert!(mrt_precoder(&h).is_err());
    }

    #[test]
    fn nmse_cases() {
        let t = CVector::from_element(4, Complex64::new(1.0, 0.0));
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        assert!((nmse(&CVector::zeros(4), &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(nmse(&t, &CVector::zeros(4)), Err(Error::Domain(_))));
        assert!((mean_nmse_db(&[1e-3, 1e-5]).unwrap() - to_db(0.000505)).abs() < 1e-12);
    }
}
