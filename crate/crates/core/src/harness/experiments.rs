use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::array::{array_factor, beam_grid, select, select_successive, AntennaSelection, SelectionKind};
use crate::channel::ArrayGeometry;
use crate::econ::{cost, energy_efficiency, power, Architecture, ArchitectureKind};
use crate::transfer::TransferAlgorithm;
use crate::uplink::{composite_angle, resolved_path_count, snr_loss_closed_form, snr_loss_numeric, SnrLossInputs};
use crate::{Error, Result};

use super::config::{ExperimentConfig, Link, ReceiveArray, System};
use super::pipeline::{downlink_se, map_trials, transfer_trial, uplink_se, DownlinkCsi, LinkSetup, Summary, TransferPlan};
use super::seed::{SeedStream, LANE_SELECTION};
use super::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    BeamPattern,
    SnrLoss,
    TransferNmse,
    Se,
    Ee,
    CostTable,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::BeamPattern,
        Experiment::SnrLoss,
        Experiment::TransferNmse,
        Experiment::Se,
        Experiment::Ee,
        Experiment::CostTable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::BeamPattern => "beam-pattern",
            Experiment::SnrLoss => "snr-loss",
            Experiment::TransferNmse => "transfer-nmse",
            Experiment::Se => "se",
            Experiment::Ee => "ee",
            Experiment::CostTable => "cost-table",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Experiment::ALL
            .iter()
            .find(|e| e.name() == s.trim())
            .copied()
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// One summarized metric of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub metric: String,
    /// Human-readable sweep coordinates, e.g. `snr_db=10 selection=random`.
    pub sweep: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub experiment: Experiment,
    pub table: Table,
    pub records: Vec<MetricRecord>,
}

impl ExperimentResult {
    fn new(experiment: Experiment, table: Table) -> Self {
        Self { experiment, table, records: Vec::new() }
    }

    fn record(&mut self, metric: &str, sweep: String, s: Summary) {
        self.records.push(MetricRecord { metric: metric.into(), sweep, mean: s.mean, stderr: s.stderr, trials: s.count });
    }

    /// First record matching a metric name and every given sweep fragment.
    pub fn find(&self, metric: &str, sweep_parts: &[&str]) -> Option<&MetricRecord> {
        self.records.iter().find(|r| {
            r.metric == metric && sweep_parts.iter().all(|p| r.sweep.split(' ').any(|tok| tok == *p))
        })
    }
}

/// Runs one experiment end to end.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate().map_err(|(field, msg)| Error::Config(format!("{field}: {msg}")))?;
    match experiment {
        Experiment::BeamPattern => beam_pattern(cfg),
        Experiment::SnrLoss => snr_loss(cfg),
        Experiment::TransferNmse => transfer_nmse(cfg),
        Experiment::Se => match cfg.link {
            Link::Uplink => se_uplink(cfg),
            Link::Downlink => se_downlink(cfg),
        },
        Experiment::Ee => ee(cfg),
        Experiment::CostTable => cost_table(cfg),
    }
}

fn fixed_selection(cfg: &ExperimentConfig, receive: ReceiveArray, seeds: &SeedStream) -> Result<AntennaSelection> {
    match receive {
        ReceiveArray::Full => select_successive(cfg.m, cfg.m),
        ReceiveArray::Selected(kind) => {
            let mut rng = seeds.rng(0, LANE_SELECTION);
            select(kind, cfg.m, cfg.n, cfg.pinned && kind == SelectionKind::Random, &mut rng)
        }
    }
}

fn beam_pattern(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seeds = SeedStream::new(cfg.seed);
    let geometry = ArrayGeometry::new(cfg.m, cfg.spacing)?;
    let grid = beam_grid(cfg.beam_points);
    let mut out = ExperimentResult::new(
        Experiment::BeamPattern,
        Table::new(&["w", "angle_deg", "magnitude", "magnitude_db", "selection"]),
    );
    for &receive in &cfg.selections {
        let sel = fixed_selection(cfg, receive, &seeds)?;
        let n = sel.len() as f64;
        let af = array_factor(&sel, &geometry, &grid)?;
        for (w, mag) in grid.iter().zip(&af) {
            out.table.push(vec![
                Cell::float(*w),
                Cell::float(w.asin().to_degrees()),
                Cell::float(*mag),
                Cell::float(20.0 * (mag / n).log10()),
                Cell::text(receive.as_str()),
            ]);
        }
        let side = grid
            .iter()
            .zip(&af)
            .filter(|(w, _)| w.abs() >= 0.1)
            .map(|(_, m)| *m)
            .fold(0.0, f64::max);
        out.record("max_side_peak", format!("selection={receive}"), Summary::of(&[side]));
    }
    Ok(out)
}

fn snr_loss(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let half = (cfg.separation_deg / 2.0).to_radians();
    let center = cfg.center_deg.to_radians();
    let (t1, t2) = (center - half, center + half);
    let geometry = ArrayGeometry::new(cfg.m, cfg.spacing)?;
    let sel = select_successive(cfg.m, cfg.n)?;
    let mut out = ExperimentResult::new(
        Experiment::SnrLoss,
        Table::new(&["phase_diff_rad", "loss_closed", "loss_numeric", "resolved_path_count", "composite_deg"]),
    );
    let steps = cfg.phase_points.max(2) - 1;
    for i in 0..=steps {
        let dphi = 2.0 * PI * i as f64 / steps as f64;
        let composite = match cfg.composite {
            super::config::CompositeRule::Midpoint => (0.5 * (t1.sin() + t2.sin())).asin(),
            super::config::CompositeRule::Peak => composite_angle(t1, t2, 0.0, dphi, &sel, &geometry)?,
        };
        let inputs = SnrLossInputs::new(t1, t2, composite, 0.0, dphi, cfg.n, cfg.spacing)?;
        let closed = snr_loss_closed_form(&inputs);
        let numeric = snr_loss_numeric(&inputs)?;
        let count = resolved_path_count(t1, t2, 0.0, dphi, &sel, &geometry)?;
        out.table.push(vec![
            Cell::float(dphi),
            Cell::float(closed),
            Cell::float(numeric),
            Cell::int(count),
            Cell::float(composite.to_degrees()),
        ]);
        out.record("snr_loss", format!("phase_diff_rad={dphi}"), Summary::of(&[closed]));
    }
    Ok(out)
}

fn transfer_nmse(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seeds = SeedStream::new(cfg.seed);
    let mut out = ExperimentResult::new(
        Experiment::TransferNmse,
        Table::new(&[
            "snr_db",
            "algorithm",
            "selection",
            "N",
            "nmse_db",
            "mean_paths_found",
            "mean_runtime_us",
            "nmse_db_stderr",
            "trials",
        ]),
    );
    for &snr in &cfg.snr_db {
        for &alg in &cfg.algorithms {
            for &receive in &cfg.selections {
                let ns = if receive == ReceiveArray::Full { vec![cfg.m] } else { cfg.n_values() };
                for n in ns {
                    let setup = LinkSetup::from_config(cfg, snr, receive, n);
                    let plan = TransferPlan::from_config(cfg, alg, setup.n, setup.rho_tau)?;
                    let trials = map_trials(cfg.trials, cfg.parallel, |t| {
                        transfer_trial(&setup.realize(&seeds, t)?, &plan, cfg.record_timing)
                    })?;
                    let users = cfg.k as f64;
                    let per_trial: Vec<f64> = trials.iter().map(|t| t.nmse.iter().sum::<f64>() / users).collect();
                    let paths: Vec<f64> =
                        trials.iter().map(|t| t.paths_found.iter().sum::<usize>() as f64 / users).collect();
                    let nmse = Summary::of(&per_trial);
                    let nmse_db = 10.0 * nmse.mean.log10();
                    let nmse_db_stderr = 10.0 / std::f64::consts::LN_10 * nmse.stderr / nmse.mean;
                    let runtime = if cfg.record_timing {
                        let r: Vec<f64> = trials.iter().map(|t| t.runtime_us / users).collect();
                        Cell::float(Summary::of(&r).mean)
                    } else {
                        Cell::text("NA")
                    };
                    out.table.push(vec![
                        Cell::float(snr),
                        Cell::text(alg.as_str()),
                        Cell::text(receive.as_str()),
                        Cell::int(setup.n),
                        Cell::float(nmse_db),
                        Cell::float(Summary::of(&paths).mean),
                        runtime,
                        Cell::float(nmse_db_stderr),
                        Cell::int(cfg.trials),
                    ]);
                    let sweep = format!("snr_db={snr} algorithm={alg} selection={receive} N={}", setup.n);
                    out.record("nmse_linear", sweep.clone(), nmse);
                    out.record("paths_found", sweep, Summary::of(&paths));
                }
            }
        }
    }
    Ok(out)
}

fn se_uplink(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seeds = SeedStream::new(cfg.seed);
    let mut out = ExperimentResult::new(
        Experiment::Se,
        Table::new(&["snr_db", "selection", "detector", "se_bits", "se_stderr", "trials"]),
    );
    for &snr in &cfg.snr_db {
        for &receive in &cfg.selections {
            for &det in &cfg.detectors {
                let setup = LinkSetup::from_config(cfg, snr, receive, cfg.n);
                let s = uplink_se(&setup, det, cfg.trials, &seeds, cfg.parallel)?;
                out.table.push(vec![
                    Cell::float(snr),
                    Cell::text(receive.as_str()),
                    Cell::text(det.as_str()),
                    Cell::float(s.mean),
                    Cell::float(s.stderr),
                    Cell::int(s.count),
                ]);
                out.record("se_uplink", format!("snr_db={snr} selection={receive} detector={det}"), s);
            }
        }
    }
    Ok(out)
}

/// Setup and CSI source of one downlink system; `None` when it does not use
/// the given receive array (only the asymmetrical system selects antennas).
fn system_setup(
    cfg: &ExperimentConfig,
    system: System,
    snr: f64,
    receive: ReceiveArray,
    alg: TransferAlgorithm,
) -> Result<(LinkSetup, DownlinkCsi, &'static str)> {
    let base = LinkSetup::from_config(cfg, snr, receive, cfg.n);
    Ok(match system {
        System::Adbn => {
            let plan = TransferPlan::from_config(cfg, alg, base.n, base.rho_tau)?;
            (base, DownlinkCsi::Transfer(plan), alg.as_str())
        }
        System::DbmN => (base.full_array(cfg.n), DownlinkCsi::Reciprocal, "none"),
        System::DbmM => (base.full_array(cfg.m), DownlinkCsi::Reciprocal, "none"),
        System::PerfectM => (base.full_array(cfg.m), DownlinkCsi::Perfect, "perfect"),
    })
}

fn adbn_receive(cfg: &ExperimentConfig) -> Vec<ReceiveArray> {
    cfg.selections.iter().copied().filter(|r| *r != ReceiveArray::Full).collect()
}

fn se_downlink(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seeds = SeedStream::new(cfg.seed);
    let mut out = ExperimentResult::new(
        Experiment::Se,
        Table::new(&["snr_db", "system", "precoder", "transfer_algorithm", "se_bits", "se_stderr", "trials", "selection"]),
    );
    let full = [ReceiveArray::Full];
    for &snr in &cfg.snr_db {
        for &system in &cfg.systems {
            let adbn = adbn_receive(cfg);
            let (receives, algs): (&[ReceiveArray], &[TransferAlgorithm]) = match system {
                System::Adbn => (&adbn, &cfg.algorithms),
                _ => (&full, &cfg.algorithms[..1]),
            };
            for &receive in receives {
                for &alg in algs {
                    for &pre in &cfg.precoders {
                        let (setup, csi, label) = system_setup(cfg, system, snr, receive, alg)?;
                        let s = downlink_se(&setup, &csi, pre, cfg.trials, &seeds, cfg.parallel)?;
                        out.table.push(vec![
                            Cell::float(snr),
                            Cell::text(system.as_str()),
                            Cell::text(pre.as_str()),
                            Cell::text(label),
                            Cell::float(s.mean),
                            Cell::float(s.stderr),
                            Cell::int(s.count),
                            Cell::text(receive.as_str()),
                        ]);
                        out.record(
                            "se_downlink",
                            format!("snr_db={snr} system={system} precoder={pre} transfer={label} selection={receive}"),
                            s,
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

fn system_architecture(cfg: &ExperimentConfig, system: System) -> Result<Architecture> {
    match system {
        System::Adbn => Architecture::new(ArchitectureKind::Adbn, cfg.m, cfg.n),
        System::DbmN => Architecture::new(ArchitectureKind::Dbm, cfg.n, cfg.n),
        System::DbmM | System::PerfectM => Architecture::new(ArchitectureKind::Dbm, cfg.m, cfg.m),
    }
}

type CachedSe = HashMap<(String, String), (f64, f64, usize)>;

fn read_se_cache(path: &std::path::Path) -> Result<CachedSe> {
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(io)?;
    let header = rdr.headers().map_err(io)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column `{name}`", path.display())))
    };
    let (c_snr, c_sys, c_up, c_down) = (col("snr_db")?, col("system")?, col("se_uplink")?, col("se_downlink")?);
    let c_trials = header.iter().position(|h| h == "trials");
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io)?;
        let num = |i: usize| {
            rec[i].parse::<f64>().map_err(|_| Error::Config(format!("{}: bad number `{}`", path.display(), &rec[i])))
        };
        let trials = c_trials.and_then(|i| rec[i].parse().ok()).unwrap_or(0);
        let snr = super::table::format_float(num(c_snr)?);
        out.insert((snr, rec[c_sys].to_string()), (num(c_up)?, num(c_down)?, trials));
    }
    Ok(out)
}

fn ee(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let seeds = SeedStream::new(cfg.seed);
    let cache = cfg.se_cache.as_deref().map(read_se_cache).transpose()?;
    let mut out = ExperimentResult::new(
        Experiment::Ee,
        Table::new(&[
            "snr_db",
            "system",
            "power_w",
            "se_uplink",
            "se_downlink",
            "ee_bits_per_joule",
            "se_uplink_stderr",
            "se_downlink_stderr",
            "trials",
        ]),
    );
    let receive = adbn_receive(cfg)
        .first()
        .copied()
        .ok_or_else(|| Error::config("ee needs at least one antenna selection rule"))?;
    let (alg, det, pre) = (cfg.algorithms[0], cfg.detectors[0], cfg.precoders[0]);
    for &snr in &cfg.snr_db {
        for &system in &cfg.systems {
            let p_bs = power(&system_architecture(cfg, system)?, &cfg.profile, cfg.epsilon)?;
            let (up, down, trials) = match &cache {
                Some(c) => {
                    let key = (super::table::format_float(snr), system.as_str().to_string());
                    let (u, d, t) = *c.get(&key).ok_or_else(|| {
                        Error::Config(format!("SE cache has no entry for snr_db={} system={system}", key.0))
                    })?;
                    (Summary { mean: u, stderr: f64::NAN, count: t }, Summary { mean: d, stderr: f64::NAN, count: t }, t)
                }
                None => {
                    let (setup, csi, _) = system_setup(cfg, system, snr, receive, alg)?;
                    let up = uplink_se(&setup, det, cfg.trials, &seeds, cfg.parallel)?;
                    let down = downlink_se(&setup, &csi, pre, cfg.trials, &seeds, cfg.parallel)?;
                    (up, down, cfg.trials)
                }
            };
            let value = energy_efficiency(up.mean, down.mean, cfg.epsilon, p_bs, cfg.bandwidth_hz)?;
            out.table.push(vec![
                Cell::float(snr),
                Cell::text(system.as_str()),
                Cell::float(p_bs),
                Cell::float(up.mean),
                Cell::float(down.mean),
                Cell::float(value),
                Cell::float(up.stderr),
                Cell::float(down.stderr),
                Cell::int(trials),
            ]);
            let sweep = format!("snr_db={snr} system={system}");
            out.record("se_uplink", sweep.clone(), up);
            out.record("se_downlink", sweep.clone(), down);
            out.record("ee", sweep, Summary { mean: value, stderr: f64::NAN, count: trials });
        }
    }
    Ok(out)
}

fn cost_table(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = ExperimentResult::new(
        Experiment::CostTable,
        Table::new(&["architecture", "M", "N", "epsilon", "cost_usd", "power_w"]),
    );
    for n in cfg.n_values() {
        for kind in ArchitectureKind::ALL {
            let arch = Architecture::new(kind, cfg.m, n)?;
            let c = cost(&arch, &cfg.profile);
            let p = power(&arch, &cfg.profile, cfg.epsilon)?;
            out.table.push(vec![
                Cell::text(kind.as_str()),
                Cell::int(cfg.m),
                Cell::int(n),
                Cell::float(cfg.epsilon),
                Cell::float(c),
                Cell::float(p),
            ]);
            let sweep = format!("architecture={kind} N={n}");
            out.record("cost_usd", sweep.clone(), Summary::of(&[c]));
            out.record("power_w", sweep, Summary::of(&[p]));
        }
    }
    Ok(out)
}
