//! Receive-antenna selection over the BS array and the resulting beam patterns.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::ArrayGeometry;
use crate::{CVector, Complex64, Error, Result};

/// Number of points in the default beam-pattern grid over `w ∈ [-1, 1]`.
pub const BEAM_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionKind {
    Random,
    Successive,
    Comb,
}

impl SelectionKind {
    pub const ALL: [SelectionKind; 3] = [SelectionKind::Random, SelectionKind::Successive, SelectionKind::Comb];

    pub fn as_str(&self) -> &'static str {
        match self {
            SelectionKind::Random => "random",
            SelectionKind::Successive => "successive",
            SelectionKind::Comb => "comb",
        }
    }
}

impl fmt::Display for SelectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(SelectionKind::Random),
            "successive" => Ok(SelectionKind::Successive),
            "comb" => Ok(SelectionKind::Comb),
            other => Err(format!("unknown selection kind `{other}` (random|successive|comb)")),
        }
    }
}

/// Ordered set of 1-based receive-antenna indices within an `M`-element array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntennaSelection {
    indices: Vec<usize>,
    total: usize,
    kind: SelectionKind,
}

impl AntennaSelection {
    pub fn new(indices: Vec<usize>, total: usize, kind: SelectionKind) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::config("antenna selection is empty"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("antenna indices must be strictly increasing"));
        }
        if indices[0] < 1 || *indices.last().unwrap() > total {
            return Err(Error::config(format!("antenna indices must lie in [1, {total}]")));
        }
        Ok(Self { indices, total, kind })
    }

    /// 1-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// 0-based element offsets `a_n - 1`.
    pub fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|i| i - 1)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Total number of array elements `M`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn kind(&self) -> SelectionKind {
        self.kind
    }

    /// Aperture spanned by the selection, in elements (`max - min + 1`).
    pub fn span(&self) -> usize {
        self.indices.last().unwrap() - self.indices[0] + 1
    }

    pub fn check_geometry(&self, geometry: &ArrayGeometry) -> Result<()> {
        if self.total != geometry.num_elements() {
            return Err(Error::config(format!(
                "selection is over {} elements but the array has {}",
                self.total,
                geometry.num_elements()
            )));
        }
        Ok(())
    }

    /// `[v]_A`: entries of an `M`-vector at the selected indices.
    pub fn subsample(&self, v: &CVector) -> CVector {
        CVector::from_iterator(self.len(), self.offsets().map(|o| v[o]))
    }
}

fn check_counts(m: usize, n: usize) -> Result<()> {
    if n == 0 || n > m {
        return Err(Error::config(format!("need 1 <= N <= M, got N={n}, M={m}")));
    }
    Ok(())
}

/// The first `N` elements.
pub fn select_successive(m: usize, n: usize) -> Result<AntennaSelection> {
    check_counts(m, n)?;
    AntennaSelection::new((1..=n).collect(), m, SelectionKind::Successive)
}

/// `N` elements uniformly spread with stride `M/N`. `N` must divide `M`.
pub fn select_comb(m: usize, n: usize) -> Result<AntennaSelection> {
    check_counts(m, n)?;
    if !m.is_multiple_of(n) {
        return Err(Error::config(format!("comb selection needs N | M, got N={n}, M={m}")));
    }
    let stride = m / n;
    AntennaSelection::new((0..n).map(|i| 1 + i * stride).collect(), m, SelectionKind::Comb)
}

/// `N` distinct elements drawn uniformly without replacement.
///
/// With `pinned`, elements 1 and `M` are always included and the remaining
/// `N - 2` are drawn from the interior, so the selection spans the full aperture.
pub fn select_random<R: Rng + ?Sized>(m: usize, n: usize, pinned: bool, rng: &mut R) -> Result<AntennaSelection> {
    check_counts(m, n)?;
    let mut indices: Vec<usize> = if pinned {
        if n < 2 {
            return Err(Error::config("pinned random selection needs N >= 2"));
        }
        let mut v: Vec<usize> = rand::seq::index::sample(rng, m - 2, n - 2)
            .into_iter()
            .map(|i| i + 2)
            .collect();
        v.push(1);
        v.push(m);
        v
    } else {
        rand::seq::index::sample(rng, m, n).into_iter().map(|i| i + 1).collect()
    };
    indices.sort_unstable();
    AntennaSelection::new(indices, m, SelectionKind::Random)
}

/// Builds a selection of the given kind; `rng` is only consumed for `Random`.
pub fn select<R: Rng + ?Sized>(kind: SelectionKind, m: usize, n: usize, pinned: bool, rng: &mut R) -> Result<AntennaSelection> {
    match kind {
        SelectionKind::Random => select_random(m, n, pinned, rng),
        SelectionKind::Successive => select_successive(m, n),
        SelectionKind::Comb => select_comb(m, n),
    }
}

/// `n` uniformly spaced points over `[-1, 1]`, endpoints included.
pub fn beam_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect(),
    }
}

/// Magnitude of the broadside-steered array response `|Σ_n exp(j·2π·(d/λ)·(a_n-1)·w)|`
/// at each grid point. Peaks at `N` for `w = 0`.
pub fn array_factor(selection: &AntennaSelection, geometry: &ArrayGeometry, grid: &[f64]) -> Result<Vec<f64>> {
    selection.check_geometry(geometry)?;
    if let Some(w) = grid.iter().find(|w| !(w.abs() <= 1.0)) {
        return Err(Error::domain(format!("grid point {w} outside [-1, 1]")));
    }
    let slope = 2.0 * PI * geometry.spacing();
    Ok(grid
        .iter()
        .map(|&w| {
            selection
                .offsets()
                .map(|o| Complex64::from_polar(1.0, slope * o as f64 * w))
                .sum::<Complex64>()
                .norm()
        })
        .collect())
}

/// Rule-based angular resolution, in spatial frequency, of a half-wavelength
/// receive array: `2/N` for a compact (successive) array, `2/M` for arrays whose
/// elements span the whole aperture.
pub fn angular_resolution(kind: SelectionKind, m: usize, n: usize) -> Result<f64> {
    check_counts(m, n)?;
    Ok(match kind {
        SelectionKind::Successive => 2.0 / n as f64,
        SelectionKind::Comb | SelectionKind::Random => 2.0 / m as f64,
    })
}

/// Resolution `2/M` of the full `M`-element transmit array.
pub fn transmit_resolution(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::config("M must be positive"));
    }
    Ok(2.0 / m as f64)
}

/// Resolution implied by the aperture a concrete selection actually spans.
pub fn span_resolution(selection: &AntennaSelection) -> f64 {
    2.0 / selection.span() as f64
}
