use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::array::SelectionKind;
use crate::downlink::Precoder;
use crate::econ::{Component, HardwareProfile};
use crate::transfer::TransferAlgorithm;
use crate::uplink::Detector;
use crate::{Error, Result};

/// Receive front end of a simulated system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiveArray {
    /// `N` of the `M` elements, chosen by the given rule.
    Selected(SelectionKind),
    /// Every one of the `M` elements has a receive chain.
    Full,
}

impl ReceiveArray {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReceiveArray::Selected(k) => k.as_str(),
            ReceiveArray::Full => "full",
        }
    }
}

impl fmt::Display for ReceiveArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReceiveArray {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("full") {
            Ok(ReceiveArray::Full)
        } else {
            s.parse::<SelectionKind>().map(ReceiveArray::Selected)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Perfect,
    Ls,
    Lmmse,
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "perfect" => Ok(Estimator::Perfect),
            "ls" => Ok(Estimator::Ls),
            "lmmse" => Ok(Estimator::Lmmse),
            other => Err(format!("unknown estimator `{other}` (perfect|ls|lmmse)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Uplink,
    Downlink,
}

impl FromStr for Link {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uplink" => Ok(Link::Uplink),
            "downlink" => Ok(Link::Downlink),
            other => Err(format!("unknown link `{other}` (uplink|downlink)")),
        }
    }
}

/// Systems compared in downlink and energy-efficiency runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    /// Asymmetrical: `M` transmit, `N` selected receive chains, channel transfer.
    Adbn,
    /// Full-digital `N`-element array.
    DbmN,
    /// Full-digital `M`-element array.
    DbmM,
    /// `M`-element array with perfect downlink CSI.
    PerfectM,
}

impl System {
    pub fn as_str(&self) -> &'static str {
        match self {
            System::Adbn => "adbn",
            System::DbmN => "dbm_n",
            System::DbmM => "dbm_m",
            System::PerfectM => "perfect_m",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adbn" => Ok(System::Adbn),
            "dbm_n" => Ok(System::DbmN),
            "dbm_m" => Ok(System::DbmM),
            "perfect_m" => Ok(System::PerfectM),
            other => Err(format!("unknown system `{other}` (adbn|dbm_n|dbm_m|perfect_m)")),
        }
    }
}

/// How the single composite direction is chosen in the SNR-loss sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompositeRule {
    /// Midpoint of the two spatial frequencies.
    Midpoint,
    /// Periodogram maximizer for each phase difference.
    Peak,
}

impl FromStr for CompositeRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "midpoint" => Ok(CompositeRule::Midpoint),
            "peak" => Ok(CompositeRule::Peak),
            other => Err(format!("unknown composite rule `{other}` (midpoint|peak)")),
        }
    }
}

/// Every tunable of an experiment run. Defaults describe a 128-element
/// array with 32 receive chains serving 10 three-path users.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// Pilot length; `None` means `K`.
    pub tau: Option<usize>,
    pub paths: usize,
    pub path_powers: Option<Vec<f64>>,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub spacing: f64,
    pub selections: Vec<ReceiveArray>,
    /// Random selections always include both end elements.
    pub pinned: bool,
    pub snr_db: Vec<f64>,
    pub snr_tau_db: Option<f64>,
    pub snr_u_db: Option<f64>,
    pub snr_d_db: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub oversampling_dft: usize,
    pub oversampling_mnomp: usize,
    pub newton_steps: usize,
    pub cyclic_rounds: usize,
    pub max_paths: usize,
    pub threshold: Option<f64>,
    pub regularization: f64,
    pub estimator: Estimator,
    pub detectors: Vec<Detector>,
    pub precoders: Vec<Precoder>,
    pub algorithms: Vec<TransferAlgorithm>,
    pub link: Link,
    pub systems: Vec<System>,
    pub epsilon: f64,
    pub bandwidth_hz: f64,
    /// Receive-chain counts swept by `transfer-nmse`; `None` means `[N]`.
    pub n_values: Option<Vec<usize>>,
    pub record_timing: bool,
    pub parallel: bool,
    pub beam_points: usize,
    pub center_deg: f64,
    pub separation_deg: f64,
    pub phase_points: usize,
    pub composite: CompositeRule,
    pub se_cache: Option<PathBuf>,
    pub profile: HardwareProfile,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 128,
            n: 32,
            k: 10,
            tau: None,
            paths: 3,
            path_powers: None,
            angle_min_deg: -60.0,
            angle_max_deg: 60.0,
            spacing: 0.5,
            selections: SelectionKind::ALL.iter().map(|k| ReceiveArray::Selected(*k)).collect(),
            pinned: false,
            snr_db: vec![10.0],
            snr_tau_db: None,
            snr_u_db: None,
            snr_d_db: None,
            trials: 1000,
            seed: 0,
            oversampling_dft: 8,
            oversampling_mnomp: 4,
            newton_steps: 2,
            cyclic_rounds: 2,
            max_paths: 10,
            threshold: None,
            regularization: 1e-4,
            estimator: Estimator::Lmmse,
            detectors: vec![Detector::Zf],
            precoders: vec![Precoder::Zf],
            algorithms: vec![TransferAlgorithm::Mnomp],
            link: Link::Uplink,
            systems: vec![System::Adbn, System::DbmN, System::DbmM, System::PerfectM],
            epsilon: 1.0 / 3.0,
            bandwidth_hz: 500e6,
            n_values: None,
            record_timing: false,
            parallel: true,
            beam_points: crate::array::BEAM_GRID_POINTS,
            center_deg: 52.8,
            separation_deg: 2.97,
            phase_points: 73,
            composite: CompositeRule::Midpoint,
            se_cache: None,
            profile: HardwareProfile::reference(),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    path: PathBuf,
    line: usize,
}

const MAX_INCLUDE_DEPTH: usize = 16;

fn include_target(content: &str) -> Option<&str> {
    let rest = content.strip_prefix("include")?;
    if !rest.starts_with(|c: char| c.is_whitespace() || c == '=') {
        return None;
    }
    let target = rest.trim_start().trim_start_matches('=').trim();
    (!target.is_empty()).then_some(target)
}

fn read_entries(path: &Path, depth: usize, out: &mut Vec<Entry>) -> Result<()> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            line: 0,
            field: "include".into(),
            message: "include nesting too deep (cycle?)".into(),
        });
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_text(&text, path, base, depth, out)
}

fn parse_text(text: &str, path: &Path, base: &Path, depth: usize, out: &mut Vec<Entry>) -> Result<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(target) = include_target(content) {
            read_entries(&base.join(target), depth + 1, out)?;
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line,
                field: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        out.push(Entry {
            key: key.trim().to_ascii_lowercase(),
            value: value.trim().to_string(),
            path: path.to_path_buf(),
            line,
        });
    }
    Ok(())
}

fn parse_one<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("cannot parse `{v}`: {e}"))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    items.into_iter().map(parse_one).collect()
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

impl ExperimentConfig {
    /// Reads a config file, resolving `include` lines relative to the file
    /// that contains them. Later assignments override earlier ones.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        read_entries(path, 0, &mut entries)?;
        Self::from_entries(entries)
    }

    /// Parses config text; `include` paths resolve against `base_dir`.
    pub fn from_str_with_base(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        parse_text(text, &base_dir.join("<inline>"), base_dir, 0, &mut entries)?;
        Self::from_entries(entries)
    }

    fn from_entries(entries: Vec<Entry>) -> Result<Self> {
        let mut cfg = Self::default();
        let mut origin: HashMap<String, (PathBuf, usize)> = HashMap::new();
        for e in entries {
            cfg.apply(&e.key, &e.value).map_err(|message| Error::Schema {
                path: e.path.clone(),
                line: e.line,
                field: e.key.clone(),
                message,
            })?;
            origin.insert(e.key, (e.path, e.line));
        }
        cfg.validate().map_err(|(field, message)| match origin.get(field) {
            Some((path, line)) => Error::Schema { path: path.clone(), line: *line, field: field.into(), message },
            None => Error::Config(format!("{field}: {message}")),
        })?;
        Ok(cfg)
    }

    /// Sets one field from its textual value.
    pub fn apply(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        if let Some(name) = key.strip_prefix("cost.") {
            let c: Component = name.parse()?;
            return self.profile.set_cost(c, parse_one(v)?).map_err(|e| e.to_string());
        }
        if let Some(name) = key.strip_prefix("power.") {
            let c: Component = name.parse()?;
            return self.profile.set_power(c, parse_one(v)?).map_err(|e| e.to_string());
        }
        match key {
            "m" => self.m = parse_one(v)?,
            "n" => self.n = parse_one(v)?,
            "k" => self.k = parse_one(v)?,
            "tau" => self.tau = Some(parse_one(v)?),
            "paths" => self.paths = parse_one(v)?,
            "path_powers" => self.path_powers = Some(parse_list(v)?),
            "angle_min_deg" => self.angle_min_deg = parse_one(v)?,
            "angle_max_deg" => self.angle_max_deg = parse_one(v)?,
            "spacing" => self.spacing = parse_one(v)?,
            "selections" | "selection" => self.selections = parse_list(v)?,
            "pinned" => self.pinned = parse_bool(v)?,
            "snr_db" => self.snr_db = parse_list(v)?,
            "snr_tau_db" => self.snr_tau_db = Some(parse_one(v)?),
            "snr_u_db" => self.snr_u_db = Some(parse_one(v)?),
            "snr_d_db" => self.snr_d_db = Some(parse_one(v)?),
            "trials" => self.trials = parse_one(v)?,
            "seed" => self.seed = parse_one(v)?,
            "oversampling_dft" => self.oversampling_dft = parse_one(v)?,
            "oversampling_mnomp" => self.oversampling_mnomp = parse_one(v)?,
            "newton_steps" => self.newton_steps = parse_one(v)?,
            "cyclic_rounds" => self.cyclic_rounds = parse_one(v)?,
            "max_paths" => self.max_paths = parse_one(v)?,
            "threshold" => self.threshold = Some(parse_one(v)?),
            "regularization" => self.regularization = parse_one(v)?,
            "estimator" => self.estimator = parse_one(v)?,
            "detectors" | "detector" => self.detectors = parse_list(v)?,
            "precoders" | "precoder" => self.precoders = parse_list(v)?,
            "algorithms" | "algorithm" => self.algorithms = parse_list(v)?,
            "link" => self.link = parse_one(v)?,
            "systems" => self.systems = parse_list(v)?,
            "epsilon" => self.epsilon = parse_one(v)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_one(v)?,
            "n_values" => self.n_values = Some(parse_list(v)?),
            "record_timing" => self.record_timing = parse_bool(v)?,
            "parallel" => self.parallel = parse_bool(v)?,
            "beam_points" => self.beam_points = parse_one(v)?,
            "center_deg" => self.center_deg = parse_one(v)?,
            "separation_deg" => self.separation_deg = parse_one(v)?,
            "phase_points" => self.phase_points = parse_one(v)?,
            "composite" => self.composite = parse_one(v)?,
            "se_cache" => self.se_cache = Some(PathBuf::from(v)),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Cross-field checks; the error names the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let positive = |name: &'static str, v: usize| if v == 0 { Err((name, "must be >= 1".to_string())) } else { Ok(()) };
        positive("m", self.m)?;
        positive("n", self.n)?;
        positive("k", self.k)?;
        positive("paths", self.paths)?;
        positive("trials", self.trials)?;
        positive("oversampling_dft", self.oversampling_dft)?;
        positive("oversampling_mnomp", self.oversampling_mnomp)?;
        positive("max_paths", self.max_paths)?;
        positive("phase_points", self.phase_points)?;
        if self.m < 2 {
            return Err(("m", "array needs at least 2 elements".into()));
        }
        if self.n > self.m {
            return Err(("n", format!("N={} exceeds M={}", self.n, self.m)));
        }
        if let Some(ns) = &self.n_values {
            if let Some(bad) = ns.iter().find(|&&n| n == 0 || n > self.m) {
                return Err(("n_values", format!("{bad} is outside [1, M]")));
            }
        }
        if self.tau.unwrap_or(self.k) < self.k {
            return Err(("tau", "pilot length must be >= K".into()));
        }
        if let Some(p) = &self.path_powers {
            if p.len() != self.paths {
                return Err(("path_powers", format!("expected {} entries, got {}", self.paths, p.len())));
            }
            if p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(("path_powers", "entries must be finite and >= 0".into()));
            }
        }
        let limit = 90.0;
        if !(self.angle_min_deg < self.angle_max_deg && self.angle_min_deg > -limit && self.angle_max_deg < limit) {
            return Err(("angle_max_deg", "angle range must be increasing and inside (-90, 90)".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(("spacing", "must be positive".into()));
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(("snr_db", "values must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(("epsilon", "must lie in [0, 1]".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(("bandwidth_hz", "must be positive".into()));
        }
        if let Some(t) = self.threshold {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(("threshold", "must be finite and >= 0".into()));
            }
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(("regularization", "must be finite and >= 0".into()));
        }
        if self.beam_points < 2 {
            return Err(("beam_points", "need at least 2 grid points".into()));
        }
        if self.separation_deg <= 0.0 {
            return Err(("separation_deg", "must be positive".into()));
        }
        if (self.center_deg.abs() + self.separation_deg / 2.0) >= 90.0 {
            return Err(("center_deg", "paths must stay inside (-90, 90) degrees".into()));
        }
        for sel in &self.selections {
            if *sel == ReceiveArray::Selected(SelectionKind::Comb) {
                for n in self.n_values.clone().unwrap_or_else(|| vec![self.n]) {
                    if !self.m.is_multiple_of(n) {
                        return Err(("selections", format!("comb selection needs N | M (N={n}, M={})", self.m)));
                    }
                }
            }
        }
        if self.pinned && self.n < 2 {
            return Err(("pinned", "pinned random selection needs N >= 2".into()));
        }
        Ok(())
    }

    pub fn tau(&self) -> usize {
        self.tau.unwrap_or(self.k)
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.n_values.clone().unwrap_or_else(|| vec![self.n])
    }

    pub fn angle_range_rad(&self) -> (f64, f64) {
        (self.angle_min_deg.to_radians(), self.angle_max_deg.to_radians())
    }

    pub fn oversampling(&self, alg: TransferAlgorithm) -> usize {
        match alg {
            TransferAlgorithm::Dft => self.oversampling_dft,
            TransferAlgorithm::Mnomp => self.oversampling_mnomp,
        }
    }

    /// Linear `(ρ_τ, ρ_u, ρ_d)` for one sweep point.
    pub fn snrs(&self, snr_db: f64) -> (f64, f64, f64) {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        (
            lin(self.snr_tau_db.unwrap_or(snr_db)),
            lin(self.snr_u_db.unwrap_or(snr_db)),
            lin(self.snr_d_db.unwrap_or(snr_db)),
        )
    }
}
