//! Parametric block-fading channels for an `M`-element ULA whose receive side
//! only uses the `N` antennas of an [`AntennaSelection`].
//!
//! Angles are carried both as physical angles `θ` (radians) and as spatial
//! frequencies `w = sin θ`. Steering vectors use 0-based element offsets on
//! both links, so the uplink channel of a user is exactly the downlink channel
//! restricted to the selected antennas.

use std::f64::consts::PI;

use rand::Rng;

use crate::array::AntennaSelection;
use crate::linalg::complex_normal;
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Uniform linear array: `num_elements` antennas spaced `d/λ` wavelengths apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::config(format!(
                "array needs at least 2 elements, got {num_elements}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::config(format!("element spacing must be > 0, got {spacing}")));
        }
        Ok(Self { num_elements, spacing })
    }

    /// Half-wavelength ULA.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Element spacing in wavelengths (`d/λ`).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Phase slope `2π·d/λ` of one element step per unit spatial frequency.
    pub(crate) fn phase_slope(&self) -> f64 {
        2.0 * PI * self.spacing
    }
}

/// Multipath parameters of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    gains: Vec<Complex64>,
    angles: Vec<f64>,
}

impl PathSet {
    pub fn new(gains: Vec<Complex64>, angles: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::config("a path set needs at least one path"));
        }
        if gains.len() != angles.len() {
            return Err(Error::config(format!(
                "{} gains but {} angles",
                gains.len(),
                angles.len()
            )));
        }
        if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::domain(format!("non-finite path angle {a}")));
        }
        Ok(Self { gains, angles })
    }

    /// Builds a path set from spatial frequencies `w = sin θ`.
    pub fn from_spatial(gains: Vec<Complex64>, spatial_freqs: &[f64]) -> Result<Self> {
        if let Some(w) = spatial_freqs.iter().find(|w| !(w.abs() <= 1.0)) {
            return Err(Error::domain(format!("spatial frequency {w} outside [-1, 1]")));
        }
        Self::new(gains, spatial_freqs.iter().map(|w| w.asin()).collect())
    }

    pub fn count(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// Physical angles in radians.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn spatial_freqs(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.sin()).collect()
    }
}

/// Orientation tag of a [`ChannelMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `N × K`: one uplink channel per column.
    UplinkColumns,
    /// `K × M`: one downlink channel per row.
    DownlinkRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    data: CMatrix,
    orientation: Orientation,
}

impl ChannelMatrix {
    pub fn uplink(data: CMatrix) -> Self {
        Self { data, orientation: Orientation::UplinkColumns }
    }

    pub fn downlink(data: CMatrix) -> Self {
        Self { data, orientation: Orientation::DownlinkRows }
    }

    /// Stacks per-user uplink vectors as columns.
    pub fn from_uplink_columns(cols: &[CVector]) -> Result<Self> {
        let n = cols.first().map(|c| c.len()).ok_or_else(|| Error::config("no users"))?;
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::config("uplink channel vectors differ in length"));
        }
        Ok(Self::uplink(CMatrix::from_columns(cols)))
    }

    /// Stacks per-user downlink vectors as rows.
    pub fn from_downlink_rows(rows: &[CVector]) -> Result<Self> {
        let m = rows.first().map(|r| r.len()).ok_or_else(|| Error::config("no users"))?;
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::config("downlink channel vectors differ in length"));
        }
        let mut data = CMatrix::zeros(rows.len(), m);
        for (k, r) in rows.iter().enumerate() {
            data.set_row(k, &r.transpose());
        }
        Ok(Self::downlink(data))
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn num_users(&self) -> usize {
        match self.orientation {
            Orientation::UplinkColumns => self.data.ncols(),
            Orientation::DownlinkRows => self.data.nrows(),
        }
    }

    /// Channel vector of user `k` (a column copy in either orientation).
    pub fn user(&self, k: usize) -> CVector {
        match self.orientation {
            Orientation::UplinkColumns => self.data.column(k).into_owned(),
            Orientation::DownlinkRows => self.data.row(k).transpose(),
        }
    }
}

/// Draws `num_paths` paths with angles uniform on `[angle_low, angle_high]`
/// and i.i.d. `CN(0, 1)` gains.
pub fn draw_path_set<R: Rng + ?Sized>(
    num_paths: usize,
    angle_low: f64,
    angle_high: f64,
    rng: &mut R,
) -> Result<PathSet> {
    draw_path_set_with_powers(&vec![1.0; num_paths], angle_low, angle_high, rng)
}

/// Like [`draw_path_set`] but path `i` has gain variance `powers[i]`.
pub fn draw_path_set_with_powers<R: Rng + ?Sized>(
    powers: &[f64],
    angle_low: f64,
    angle_high: f64,
    rng: &mut R,
) -> Result<PathSet> {
    if powers.is_empty() {
        return Err(Error::config("number of paths must be positive"));
    }
    if powers.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::config("path powers must be finite and non-negative"));
    }
    let limit = PI / 2.0;
    if !(angle_low < angle_high && angle_low > -limit && angle_high < limit) {
        return Err(Error::config(format!(
            "angle range [{angle_low}, {angle_high}] must be increasing and inside (-pi/2, pi/2)"
        )));
    }
    let mut gains = Vec::with_capacity(powers.len());
    let mut angles = Vec::with_capacity(powers.len());
    for &p in powers {
        angles.push(rng.random_range(angle_low..=angle_high));
        gains.push(complex_normal(rng, p));
    }
    PathSet::new(gains, angles)
}

fn check_spatial(w: f64) -> Result<()> {
    if w.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("spatial frequency {w} outside [-1, 1]")))
    }
}

/// Element phase term `exp(-j·2π·(d/λ)·offset·w)`.
#[inline]
pub(crate) fn phase(slope: f64, offset: usize, w: f64) -> Complex64 {
    Complex64::from_polar(1.0, -slope * offset as f64 * w)
}

/// Downlink steering vector over all `M` elements, unit norm.
pub fn steering_downlink(geometry: &ArrayGeometry, w: f64) -> Result<CVector> {
    check_spatial(w)?;
    Ok(steering_downlink_unchecked(geometry, w))
}

pub(crate) fn steering_downlink_unchecked(geometry: &ArrayGeometry, w: f64) -> CVector {
    let m = geometry.num_elements();
    let slope = geometry.phase_slope();
    let scale = 1.0 / (m as f64).sqrt();
    CVector::from_iterator(m, (0..m).map(|i| phase(slope, i, w) * scale))
}

/// Uplink steering vector over the selected antennas, unit norm.
///
/// Equals `sqrt(M/N)` times the downlink steering vector restricted to the
/// selection.
pub fn steering_uplink(selection: &AntennaSelection, geometry: &ArrayGeometry, w: f64) -> Result<CVector> {
    check_spatial(w)?;
    selection.check_geometry(geometry)?;
    Ok(steering_uplink_unchecked(selection, geometry, w))
}

pub(crate) fn steering_uplink_unchecked(selection: &AntennaSelection, geometry: &ArrayGeometry, w: f64) -> CVector {
    let n = selection.len();
    let slope = geometry.phase_slope();
    let scale = 1.0 / (n as f64).sqrt();
    CVector::from_iterator(n, selection.offsets().map(|o| phase(slope, o, w) * scale))
}

/// `sqrt(N/P)·Σ g_i·a_U(w_i)`.
pub fn uplink_channel(paths: &PathSet, selection: &AntennaSelection, geometry: &ArrayGeometry) -> Result<CVector> {
    selection.check_geometry(geometry)?;
    let n = selection.len();
    let scale = (n as f64 / paths.count() as f64).sqrt();
    let mut h = CVector::zeros(n);
    for (g, w) in paths.gains().iter().zip(paths.spatial_freqs()) {
        h += steering_uplink_unchecked(selection, geometry, w) * (*g * scale);
    }
    Ok(h)
}

/// `sqrt(M/P)·Σ g_i·a_D(w_i)`, returned as a column vector (the transpose of
/// the downlink row channel).
pub fn downlink_channel(paths: &PathSet, geometry: &ArrayGeometry) -> CVector {
    let m = geometry.num_elements();
    let scale = (m as f64 / paths.count() as f64).sqrt();
    let mut h = CVector::zeros(m);
    for (g, w) in paths.gains().iter().zip(paths.spatial_freqs()) {
        h += steering_downlink_unchecked(geometry, w) * (*g * scale);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{select_comb, select_random, select_successive};
    use crate::linalg::norm_sqr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &CVector, b: &CVector, tol: f64) -> bool {
        a.len() == b.len() && (a - b).camax() < tol
    }

    #[test]
    fn draw_is_reproducible_and_in_range() {
        let lo = (-60f64).to_radians();
        let hi = 60f64.to_radians();
        let a = draw_path_set(3, lo, hi, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = draw_path_set(3, lo, hi, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(), 3);
        assert!(a.angles().iter().all(|t| (lo..=hi).contains(t)));
    }

    #[test]
    fn degenerate_range_gives_near_zero_angle() {
        let p = draw_path_set(1, 0.0, 1e-9, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(p.angles()[0].abs() <= 1e-9);
    }

    #[test]
    fn invalid_ranges_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(draw_path_set(2, 0.5, 0.1, &mut rng).is_err());
        assert!(draw_path_set(2, -2.0, 0.1, &mut rng).is_err());
        assert!(draw_path_set(0, -0.5, 0.5, &mut rng).is_err());
    }

    #[test]
    fn gain_power_is_unit_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let p = draw_path_set(1, -1.0, 1.0, &mut rng).unwrap();
            acc += p.gains()[0].norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn steering_broadside_and_endfire() {
        let g2 = ArrayGeometry::half_wavelength(2).unwrap();
        let a = steering_downlink(&g2, 0.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!(close(&a, &CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]), 1e-15));

        let g4 = ArrayGeometry::half_wavelength(4).unwrap();
        let a = steering_downlink(&g4, 1.0).unwrap();
        let want = CVector::from_vec(vec![c(0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)]);
        assert!(close(&a, &want, 1e-15));
    }

    #[test]
    fn steering_rejects_out_of_domain() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        assert!(matches!(steering_downlink(&g, 1.2), Err(Error::Domain(_))));
        let sel = select_successive(4, 2).unwrap();
        assert!(matches!(steering_uplink(&sel, &g, -1.01), Err(Error::Domain(_))));
    }

    #[test]
    fn steering_uplink_hand_case() {
        // Indices {1, 3} at w = 1: offsets 0 and 2 give exp(0) and exp(-j2π).
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let sel = AntennaSelection::new(vec![1, 3], 4, crate::array::SelectionKind::Random).unwrap();
        let a = steering_uplink(&sel, &g, 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!(close(&a, &CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]), 1e-14));
    }

    #[test]
    fn steering_norms_and_subsample_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = ArrayGeometry::half_wavelength(64).unwrap();
        for _ in 0..100 {
            let n = rng.random_range(1..=64);
            let sel = select_random(64, n, false, &mut rng).unwrap();
            let w: f64 = rng.random_range(-1.0..=1.0);
            let up = steering_uplink(&sel, &g, w).unwrap();
            let down = steering_downlink(&g, w).unwrap();
            assert!((up.norm() - 1.0).abs() < 1e-12);
            assert!((down.norm() - 1.0).abs() < 1e-12);
            let sub = sel.subsample(&down) * Complex64::from((64.0 / n as f64).sqrt());
            assert!(close(&up, &sub, 1e-12));
        }
    }

    #[test]
    fn successive_selection_matches_compact_array() {
        // With a1 = 1 the selected array is an N-element ULA at the same spacing.
        let g = ArrayGeometry::half_wavelength(16).unwrap();
        let small = ArrayGeometry::half_wavelength(5).unwrap();
        let sel = select_successive(16, 5).unwrap();
        for w in [-0.7, 0.0, 0.31, 0.99] {
            let up = steering_uplink(&sel, &g, w).unwrap();
            assert!(close(&up, &steering_downlink(&small, w).unwrap(), 1e-14));
        }
    }

    #[test]
    fn single_path_channels() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let p = PathSet::from_spatial(vec![c(1.0, 0.0)], &[0.0]).unwrap();
        let hd = downlink_channel(&p, &g);
        assert!(close(&hd, &CVector::from_element(4, c(1.0, 0.0)), 1e-15));

        let g32 = ArrayGeometry::half_wavelength(64).unwrap();
        let sel = select_comb(64, 32).unwrap();
        let p = PathSet::from_spatial(vec![c(1.0, 0.0)], &[0.3]).unwrap();
        let hu = uplink_channel(&p, &sel, &g32).unwrap();
        assert!((hu.norm() - 32f64.sqrt()).abs() < 1e-12);
        let a = steering_uplink(&sel, &g32, 0.3).unwrap() * Complex64::from(32f64.sqrt());
        assert!(close(&hu, &a, 1e-12));
    }

    #[test]
    fn zero_gain_path_rescales_by_path_count() {
        let g = ArrayGeometry::half_wavelength(32).unwrap();
        let sel = select_successive(32, 8).unwrap();
        let one = PathSet::from_spatial(vec![c(0.3, -0.4)], &[0.2]).unwrap();
        let two = PathSet::from_spatial(vec![c(0.3, -0.4), c(0.0, 0.0)], &[0.2, -0.5]).unwrap();
        let h1 = uplink_channel(&one, &sel, &g).unwrap();
        let h2 = uplink_channel(&two, &sel, &g).unwrap();
        assert!(close(&h2, &(h1 * Complex64::from(0.5f64.sqrt())), 1e-13));
    }

    #[test]
    fn reciprocity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = ArrayGeometry::half_wavelength(128).unwrap();
        for _ in 0..50 {
            let paths = draw_path_set(3, -1.0, 1.0, &mut rng).unwrap();
            let sel = select_random(128, 32, false, &mut rng).unwrap();
            let hu = uplink_channel(&paths, &sel, &g).unwrap();
            let hd = downlink_channel(&paths, &g);
            assert!(close(&sel.subsample(&hd), &hu, 1e-12));
        }
    }

    #[test]
    fn channel_energy_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = ArrayGeometry::half_wavelength(64).unwrap();
        let sel = select_random(64, 32, false, &mut rng).unwrap();
        let trials = 10_000;
        let (mut up, mut down) = (0.0, 0.0);
        for _ in 0..trials {
            let p = draw_path_set(3, -1.0, 1.0, &mut rng).unwrap();
            up += norm_sqr(&uplink_channel(&p, &sel, &g).unwrap());
            down += norm_sqr(&downlink_channel(&p, &g));
        }
        let up = up / trials as f64;
        let down = down / trials as f64;
        assert!((up - 32.0).abs() < 1.0, "uplink {up}");
        assert!((down - 64.0).abs() < 2.0, "downlink {down}");
    }

    #[test]
    fn channel_matrix_orientation() {
        let cols = vec![CVector::from_element(3, c(1.0, 0.0)), CVector::from_element(3, c(0.0, 1.0))];
        let up = ChannelMatrix::from_uplink_columns(&cols).unwrap();
        assert_eq!(up.data().shape(), (3, 2));
        assert_eq!(up.user(1), cols[1]);
        let down = ChannelMatrix::from_downlink_rows(&cols).unwrap();
        assert_eq!(down.data().shape(), (2, 3));
        assert_eq!(down.user(0), cols[0]);
        assert_eq!(down.num_users(), 2);
    }
}
