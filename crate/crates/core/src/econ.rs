//! Hardware cost, power consumption and energy efficiency of base-station
//! architectures built from a per-component reference profile.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Pa,
    PaDriver,
    Lna,
    Switch,
    Mixer,
    LoAmp,
    PhaseShifter,
    IfTxChain,
    IfRxChain,
    Dac,
    Adc,
}

impl Component {
    pub const ALL: [Component; 11] = [
        Component::Pa,
        Component::PaDriver,
        Component::Lna,
        Component::Switch,
        Component::Mixer,
        Component::LoAmp,
        Component::PhaseShifter,
        Component::IfTxChain,
        Component::IfRxChain,
        Component::Dac,
        Component::Adc,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Component::Pa => "pa",
            Component::PaDriver => "pa_driver",
            Component::Lna => "lna",
            Component::Switch => "switch",
            Component::Mixer => "mixer",
            Component::LoAmp => "lo_amp",
            Component::PhaseShifter => "phase_shifter",
            Component::IfTxChain => "if_tx_chain",
            Component::IfRxChain => "if_rx_chain",
            Component::Dac => "dac",
            Component::Adc => "adc",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Component::ALL
            .iter()
            .find(|c| c.name() == key)
            .copied()
            .ok_or_else(|| format!("unknown hardware component `{s}`"))
    }
}

/// Unit cost (USD) and power draw (W) of every hardware component.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareProfile {
    cost: [f64; 11],
    power: [f64; 11],
}

impl HardwareProfile {
    /// Reference figures for a 28 GHz, 500 MHz testbed.
    pub fn reference() -> Self {
        Self {
            cost: [50.0, 30.0, 27.0, 27.0, 24.0, 30.0, 170.0, 140.0, 140.0, 55.0, 451.0],
            power: [3.68, 0.85, 0.33, 0.1, 0.0, 0.6, 0.0, 1.75, 1.25, 2.07, 2.82],
        }
    }

    pub fn cost(&self, c: Component) -> f64 {
        self.cost[c.index()]
    }

    pub fn power(&self, c: Component) -> f64 {
        self.power[c.index()]
    }

    pub fn set_cost(&mut self, c: Component, usd: f64) -> Result<()> {
        check_entry(usd, "cost")?;
        self.cost[c.index()] = usd;
        Ok(())
    }

    pub fn set_power(&mut self, c: Component, watts: f64) -> Result<()> {
        check_entry(watts, "power")?;
        self.power[c.index()] = watts;
        Ok(())
    }
}

impl Default for HardwareProfile {
    fn default() -> Self {
        Self::reference()
    }
}

fn check_entry(v: f64, what: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("component {what} must be finite and >= 0, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchitectureKind {
    /// Asymmetrical digital: `M` transmit chains, `N` receive chains.
    Adbn,
    /// Symmetrical full digital with `M` chains each way.
    Dbm,
    /// Fully connected hybrid with `N` chains and `M·N` phase shifters.
    Hbfn,
    /// Sub-array hybrid with `N` chains and `M` phase shifters.
    Hbsn,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 4] =
        [ArchitectureKind::Adbn, ArchitectureKind::Dbm, ArchitectureKind::Hbfn, ArchitectureKind::Hbsn];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArchitectureKind::Adbn => "ADBN",
            ArchitectureKind::Dbm => "DBM",
            ArchitectureKind::Hbfn => "HBFN",
            ArchitectureKind::Hbsn => "HBSN",
        }
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchitectureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ArchitectureKind::ALL
            .iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .copied()
            .ok_or_else(|| format!("unknown architecture `{s}` (adbn|dbm|hbfn|hbsn)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub kind: ArchitectureKind,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Tx,
    Rx,
    /// Active in both modes.
    Both,
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Antennas,
    /// RF chains of the active side; the larger side for cost.
    Chains,
    AntennasTimesChains,
}

struct Item {
    component: Component,
    count: f64,
    scale: Scale,
    side: Side,
}

const fn item(component: Component, count: f64, scale: Scale, side: Side) -> Item {
    Item { component, count, scale, side }
}

impl Architecture {
    pub fn new(kind: ArchitectureKind, m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 || n > m {
            return Err(Error::config(format!("need 1 <= N <= M, got M={m}, N={n}")));
        }
        Ok(Self { kind, m, n })
    }

    fn chains(&self) -> (f64, f64) {
        let (m, n) = (self.m as f64, self.n as f64);
        match self.kind {
            ArchitectureKind::Adbn => (m, n),
            ArchitectureKind::Dbm => (m, m),
            ArchitectureKind::Hbfn | ArchitectureKind::Hbsn => (n, n),
        }
    }

    fn items(&self) -> Vec<Item> {
        use Component::*;
        use Scale::*;
        use Side::*;
        let mut v = vec![
            item(Pa, 1.0, Antennas, Tx),
            item(PaDriver, 1.0, Antennas, Tx),
            item(Mixer, 1.0, Chains, Both),
            item(LoAmp, 1.0, Chains, Both),
            item(IfTxChain, 1.0, Chains, Tx),
            item(Dac, 1.0, Chains, Tx),
            item(IfRxChain, 1.0, Chains, Rx),
            item(Adc, 1.0, Chains, Rx),
        ];
        match self.kind {
            ArchitectureKind::Adbn => {
                v.push(item(Lna, 1.0, Chains, Rx));
                v.push(item(Switch, 1.0, Chains, Rx));
            }
            ArchitectureKind::Dbm => {
                v.push(item(Lna, 1.0, Antennas, Rx));
                v.push(item(Switch, 1.0, Antennas, Rx));
            }
            ArchitectureKind::Hbfn => {
                v.push(item(Lna, 1.0, Antennas, Rx));
                v.push(item(Switch, 2.0, Antennas, Rx));
                v.push(item(PhaseShifter, 1.0, AntennasTimesChains, Both));
            }
            ArchitectureKind::Hbsn => {
                v.push(item(Lna, 1.0, Antennas, Rx));
                v.push(item(Switch, 2.0, Antennas, Rx));
                v.push(item(PhaseShifter, 1.0, Antennas, Both));
            }
        }
        v
    }

    /// Number of units of `it` powered in transmit mode, receive mode, and
    /// installed in total.
    fn multiplicity(&self, it: &Item) -> (f64, f64, f64) {
        let m = self.m as f64;
        let (tx, rx) = self.chains();
        let (on_tx, on_rx, installed) = match it.scale {
            Scale::Antennas => (m, m, m),
            Scale::Chains => (tx, rx, tx.max(rx)),
            Scale::AntennasTimesChains => (m * tx, m * rx, m * tx.max(rx)),
        };
        let (on_tx, on_rx) = match it.side {
            Side::Tx => (on_tx, 0.0),
            Side::Rx => (0.0, on_rx),
            Side::Both => (on_tx, on_rx),
        };
        let installed = match (it.side, it.scale) {
            (Side::Tx, Scale::Chains) => tx,
            (Side::Rx, Scale::Chains) => rx,
            _ => installed,
        };
        (it.count * on_tx, it.count * on_rx, it.count * installed)
    }
}

/// Total hardware cost in USD.
pub fn cost(arch: &Architecture, profile: &HardwareProfile) -> f64 {
    arch.items()
        .iter()
        .map(|it| arch.multiplicity(it).2 * profile.cost(it.component))
        .sum()
}

/// Average power in W with the transmit side active a fraction `1 − ε` of the
/// time and the receive side a fraction `ε`.
pub fn power(arch: &Architecture, profile: &HardwareProfile, epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::config(format!("slot ratio must lie in [0, 1], got {epsilon}")));
    }
    let (mut tx, mut rx) = (0.0, 0.0);
    for it in arch.items() {
        let (on_tx, on_rx, _) = arch.multiplicity(&it);
        tx += on_tx * profile.power(it.component);
        rx += on_rx * profile.power(it.component);
    }
    Ok((1.0 - epsilon) * tx + epsilon * rx)
}

/// Energy efficiency in bit/J: `(ε·η_U + (1 − ε)·η_D)·B / P_BS`.
pub fn energy_efficiency(se_up: f64, se_down: f64, epsilon: f64, p_bs: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::config(format!("slot ratio must lie in [0, 1], got {epsilon}")));
    }
    if !(p_bs > 0.0) {
        return Err(Error::config(format!("base-station power must be positive, got {p_bs}")));
    }
    if !(bandwidth_hz > 0.0) {
        return Err(Error::config(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    if se_up < 0.0 || se_down < 0.0 {
        return Err(Error::domain("spectral efficiencies must be >= 0"));
    }
    Ok((epsilon * se_up + (1.0 - epsilon) * se_down) * bandwidth_hz / p_bs)
}
