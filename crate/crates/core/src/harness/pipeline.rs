use std::time::Instant;

use rayon::prelude::*;

use crate::array::{select, select_successive, AntennaSelection, SelectionKind};
use crate::channel::{draw_path_set, draw_path_set_with_powers, downlink_channel, uplink_channel, ArrayGeometry, ChannelMatrix, PathSet};
use crate::downlink::{downlink_rates, nmse, precoder, Precoder};
use crate::transfer::{default_threshold, transfer, TransferAlgorithm, TransferConfig};
use crate::uplink::{
    analytic_correlation, estimate_lmmse, estimate_ls, generate_pilots, received_pilot, uplink_rates, Detector, NoiseModel,
};
use crate::{CMatrix, CVector, Error, Result};

use super::config::{Estimator, ExperimentConfig, ReceiveArray};
use super::seed::{SeedStream, LANE_NOISE, LANE_SELECTION};

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Zero for a single sample.
    pub stderr: f64,
    pub count: usize,
}

impl Summary {
    /// Sums in slice order so the result does not depend on scheduling.
    pub fn of(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, count };
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, count }
    }
}

/// Runs `f` for every trial index, in parallel or serially, returning the
/// outputs in trial order. The first failing trial (by index) wins.
pub fn map_trials<T, F>(trials: usize, parallel: bool, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let out: Vec<Result<T>> = if parallel {
        (0..trials as u64).into_par_iter().map(&f).collect()
    } else {
        (0..trials as u64).map(&f).collect()
    };
    out.into_iter().collect()
}

/// One simulated cell: array sizes, users, propagation and SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSetup {
    /// Transmit (and total) element count.
    pub m: usize,
    /// Receive chains; equals `m` for a full array.
    pub n: usize,
    pub receive: ReceiveArray,
    pub pinned: bool,
    pub k: usize,
    pub tau: usize,
    pub paths: usize,
    pub path_powers: Option<Vec<f64>>,
    pub angle_range: (f64, f64),
    pub spacing: f64,
    pub rho_tau: f64,
    pub rho_u: f64,
    pub rho_d: f64,
    pub estimator: Estimator,
}

impl LinkSetup {
    pub fn from_config(cfg: &ExperimentConfig, snr_db: f64, receive: ReceiveArray, n: usize) -> Self {
        let (rho_tau, rho_u, rho_d) = cfg.snrs(snr_db);
        let n = if receive == ReceiveArray::Full { cfg.m } else { n };
        Self {
            m: cfg.m,
            n,
            receive,
            pinned: cfg.pinned,
            k: cfg.k,
            tau: cfg.tau(),
            paths: cfg.paths,
            path_powers: cfg.path_powers.clone(),
            angle_range: cfg.angle_range_rad(),
            spacing: cfg.spacing,
            rho_tau,
            rho_u,
            rho_d,
            estimator: cfg.estimator,
        }
    }

    /// The same cell served by a full-digital array of `elements` elements.
    pub fn full_array(&self, elements: usize) -> Self {
        Self { m: elements, n: elements, receive: ReceiveArray::Full, ..self.clone() }
    }

    fn draw_paths(&self, seeds: &SeedStream, trial: u64, user: usize) -> Result<PathSet> {
        let mut rng = seeds.user(trial, user);
        match &self.path_powers {
            Some(p) => draw_path_set_with_powers(p, self.angle_range.0, self.angle_range.1, &mut rng),
            None => draw_path_set(self.paths, self.angle_range.0, self.angle_range.1, &mut rng),
        }
    }

    fn selection(&self, seeds: &SeedStream, trial: u64) -> Result<AntennaSelection> {
        match self.receive {
            ReceiveArray::Full => select_successive(self.m, self.m),
            ReceiveArray::Selected(kind) => {
                let mut rng = seeds.rng(trial, LANE_SELECTION);
                select(kind, self.m, self.n, self.pinned && kind == SelectionKind::Random, &mut rng)
            }
        }
    }

    /// Draws channels, selection and the uplink channel estimate of one trial.
    pub fn realize(&self, seeds: &SeedStream, trial: u64) -> Result<Realization> {
        let geometry = ArrayGeometry::new(self.m, self.spacing)?;
        let selection = self.selection(seeds, trial)?;
        let paths: Vec<PathSet> = (0..self.k).map(|u| self.draw_paths(seeds, trial, u)).collect::<Result<_>>()?;
        let up_cols: Vec<CVector> = paths.iter().map(|p| uplink_channel(p, &selection, &geometry)).collect::<Result<_>>()?;
        let down_cols: Vec<CVector> = paths.iter().map(|p| downlink_channel(p, &geometry)).collect();
        let h_up = ChannelMatrix::from_uplink_columns(&up_cols)?;
        let h_down = ChannelMatrix::from_downlink_rows(&down_cols)?;
        let h_est = match self.estimator {
            Estimator::Perfect => h_up.data().clone(),
            Estimator::Ls | Estimator::Lmmse => {
                let pilots = generate_pilots(self.k, self.tau, self.rho_tau)?;
                let mut rng = seeds.rng(trial, LANE_NOISE);
                let y = received_pilot(&h_up, &pilots, NoiseModel::default(), &mut rng)?;
                if self.estimator == Estimator::Ls {
                    estimate_ls(&y, &pilots)?.into_data()
                } else {
                    estimate_lmmse(&y, &pilots, &analytic_correlation(selection.len(), self.k))?.into_data()
                }
            }
        };
        Ok(Realization { geometry, selection, paths, h_up: h_up.into_data(), down_cols, h_down, h_est })
    }
}

/// Everything drawn for one trial of a [`LinkSetup`].
#[derive(Debug, Clone)]
pub struct Realization {
    pub geometry: ArrayGeometry,
    pub selection: AntennaSelection,
    pub paths: Vec<PathSet>,
    /// True uplink channel, `N × K`.
    pub h_up: CMatrix,
    /// True downlink channel of each user, as `M`-columns.
    pub down_cols: Vec<CVector>,
    /// True downlink channel, `K × M`.
    pub h_down: ChannelMatrix,
    /// Uplink channel estimate, `N × K`.
    pub h_est: CMatrix,
}

/// Transfer settings shared by every user of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferPlan {
    pub algorithm: TransferAlgorithm,
    pub config: TransferConfig,
}

impl TransferPlan {
    /// Uses the configured threshold override, else the noise-matched one.
    pub fn from_config(cfg: &ExperimentConfig, algorithm: TransferAlgorithm, n: usize, rho_tau: f64) -> Result<Self> {
        let threshold = match cfg.threshold {
            Some(t) => t,
            None => default_threshold(n, rho_tau)?,
        };
        let mut config = TransferConfig::new(algorithm, threshold);
        config.oversampling = cfg.oversampling(algorithm);
        config.max_paths = cfg.max_paths;
        config.newton_steps = cfg.newton_steps;
        config.cyclic_rounds = cfg.cyclic_rounds;
        config.regularization = cfg.regularization;
        Ok(Self { algorithm, config })
    }
}

/// Per-trial outcome of transferring every user's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTrial {
    /// Downlink channel estimates as `M`-columns.
    pub estimates: Vec<CVector>,
    pub nmse: Vec<f64>,
    pub paths_found: Vec<usize>,
    pub runtime_us: f64,
}

pub fn transfer_trial(r: &Realization, plan: &TransferPlan, timed: bool) -> Result<TransferTrial> {
    let mut out = TransferTrial { estimates: Vec::new(), nmse: Vec::new(), paths_found: Vec::new(), runtime_us: 0.0 };
    for (u, truth) in r.down_cols.iter().enumerate() {
        let h_s = r.h_est.column(u).into_owned();
        let start = timed.then(Instant::now);
        let res = transfer(plan.algorithm, &h_s, &r.selection, &r.geometry, &plan.config)?;
        if let Some(s) = start {
            out.runtime_us += s.elapsed().as_secs_f64() * 1e6;
        }
        out.nmse.push(nmse(&res.channel, truth)?);
        out.paths_found.push(res.num_paths());
        out.estimates.push(res.channel);
    }
    Ok(out)
}

/// Uplink sum SE of one trial.
pub fn uplink_trial_se(r: &Realization, rho_u: f64, detector: Detector) -> Result<f64> {
    Ok(uplink_rates(&r.h_est, &r.h_up, rho_u, detector)?.iter().sum())
}

/// Downlink sum SE of one trial when precoding on `estimate` (`K × M` rows).
pub fn downlink_trial_se(r: &Realization, estimate: &ChannelMatrix, rho_d: f64, kind: Precoder) -> Result<f64> {
    let w = precoder(estimate, kind)?;
    Ok(downlink_rates(&r.h_down, &w, rho_d)?.iter().sum())
}

/// How a system obtains its downlink CSI.
#[derive(Debug, Clone, PartialEq)]
pub enum DownlinkCsi {
    /// Exact downlink channel.
    Perfect,
    /// Full array: the uplink estimate is the downlink estimate by reciprocity.
    Reciprocal,
    /// Selected receive antennas followed by channel transfer.
    Transfer(TransferPlan),
}

pub fn downlink_estimate(r: &Realization, csi: &DownlinkCsi) -> Result<ChannelMatrix> {
    match csi {
        DownlinkCsi::Perfect => Ok(r.h_down.clone()),
        DownlinkCsi::Reciprocal => {
            if r.selection.len() != r.geometry.num_elements() {
                return Err(Error::config("reciprocal CSI needs a receive chain on every element"));
            }
            let cols: Vec<CVector> = (0..r.h_est.ncols()).map(|u| r.h_est.column(u).into_owned()).collect();
            ChannelMatrix::from_downlink_rows(&cols)
        }
        DownlinkCsi::Transfer(plan) => ChannelMatrix::from_downlink_rows(&transfer_trial(r, plan, false)?.estimates),
    }
}

/// Ergodic uplink sum SE over `trials` trials.
pub fn uplink_se(setup: &LinkSetup, detector: Detector, trials: usize, seeds: &SeedStream, parallel: bool) -> Result<Summary> {
    let samples = map_trials(trials, parallel, |t| uplink_trial_se(&setup.realize(seeds, t)?, setup.rho_u, detector))?;
    Ok(Summary::of(&samples))
}

/// Ergodic downlink sum SE over `trials` trials.
pub fn downlink_se(
    setup: &LinkSetup,
    csi: &DownlinkCsi,
    kind: Precoder,
    trials: usize,
    seeds: &SeedStream,
    parallel: bool,
) -> Result<Summary> {
    let samples = map_trials(trials, parallel, |t| {
        let r = setup.realize(seeds, t)?;
        let est = downlink_estimate(&r, csi)?;
        downlink_trial_se(&r, &est, setup.rho_d, kind)
    })?;
    Ok(Summary::of(&samples))
}
