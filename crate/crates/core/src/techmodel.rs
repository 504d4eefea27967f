//! Gate-level cost model and performance estimator.
//!
//! A [`TechLibrary`] gives per-gate delay and power; a [`StructuralNetlist`]
//! gives gate counts per module plus the gate sequence of the critical
//! path. From those the estimator derives frequency and power, and combines
//! them with a dhrystone cycles-per-iteration figure into DMIPS/MHz and
//! DMIPS/W.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Dhrystones per second of the VAX 11/780 reference machine (1 DMIPS).
pub const VAX_DHRYSTONES_PER_SECOND: f64 = 1757.0;

#[derive(Clone, Debug, PartialEq)]
pub enum TechError {
    DuplicateGate(String),
    NonPositiveDelay { gate: String, delay_ps: f64 },
    NegativePower { gate: String },
    DuplicateModule(String),
    UnknownGate(String),
    EmptyCriticalPath,
    NonPositive(&'static str),
}

impl fmt::Display for TechError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TechError::DuplicateGate(g) => write!(f, "gate `{g}` defined twice"),
            TechError::NonPositiveDelay { gate, delay_ps } => {
                write!(f, "gate `{gate}` has non-positive delay {delay_ps} ps")
            }
            TechError::NegativePower { gate } => write!(f, "gate `{gate}` has negative power"),
            TechError::DuplicateModule(m) => write!(f, "module `{m}` defined twice"),
            TechError::UnknownGate(g) => write!(f, "gate `{g}` not in technology library"),
            TechError::EmptyCriticalPath => write!(f, "critical path is empty"),
            TechError::NonPositive(what) => write!(f, "{what} must be positive"),
        }
    }
}

impl core::error::Error for TechError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateProps {
    pub delay_ps: f64,
    /// Dynamic power in nW per MHz of clock.
    pub dyn_nw_per_mhz: f64,
    pub static_nw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TechLibrary {
    pub name: String,
    pub voltage: f64,
    gates: BTreeMap<String, GateProps>,
}

impl TechLibrary {
    pub fn new(name: impl Into<String>, voltage: f64) -> TechLibrary {
        TechLibrary {
            name: name.into(),
            voltage,
            gates: BTreeMap::new(),
        }
    }

    pub fn add_gate(&mut self, name: &str, props: GateProps) -> Result<(), TechError> {
        // `!(x > 0)` also rejects NaN.
        if !(props.delay_ps > 0.0) {
            return Err(TechError::NonPositiveDelay {
                gate: name.to_string(),
                delay_ps: props.delay_ps,
            });
        }
        if !(props.dyn_nw_per_mhz >= 0.0 && props.static_nw >= 0.0) {
            return Err(TechError::NegativePower { gate: name.to_string() });
        }
        if self.gates.contains_key(name) {
            return Err(TechError::DuplicateGate(name.to_string()));
        }
        self.gates.insert(name.to_string(), props);
        Ok(())
    }

    pub fn gate(&self, name: &str) -> Result<&GateProps, TechError> {
        self.gates
            .get(name)
            .ok_or_else(|| TechError::UnknownGate(name.to_string()))
    }

    pub fn gates(&self) -> impl Iterator<Item = (&str, &GateProps)> {
        self.gates.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

/// Gate counts per module and the declared critical path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructuralNetlist {
    pub modules: Vec<(String, BTreeMap<String, u64>)>,
    pub critical_path: Vec<String>,
}

impl StructuralNetlist {
    pub fn add_module(&mut self, name: &str) -> Result<&mut BTreeMap<String, u64>, TechError> {
        if self.modules.iter().any(|(m, _)| m == name) {
            return Err(TechError::DuplicateModule(name.to_string()));
        }
        self.modules.push((name.to_string(), BTreeMap::new()));
        Ok(&mut self.modules.last_mut().expect("just pushed").1)
    }

    /// Checks that the path is non-empty and every gate resolves in `lib`.
    pub fn validate(&self, lib: &TechLibrary) -> Result<(), TechError> {
        if self.critical_path.is_empty() {
            return Err(TechError::EmptyCriticalPath);
        }
        let used = self
            .modules
            .iter()
            .flat_map(|(_, counts)| counts.keys())
            .chain(self.critical_path.iter());
        for gate in used {
            lib.gate(gate)?;
        }
        Ok(())
    }
}

pub fn total_gates(nl: &StructuralNetlist) -> u64 {
    nl.modules
        .iter()
        .flat_map(|(_, counts)| counts.values())
        .sum()
}

/// Sum of gate delays along the critical path, in picoseconds.
pub fn critical_delay(nl: &StructuralNetlist, lib: &TechLibrary) -> Result<f64, TechError> {
    if nl.critical_path.is_empty() {
        return Err(TechError::EmptyCriticalPath);
    }
    nl.critical_path
        .iter()
        .map(|g| lib.gate(g).map(|p| p.delay_ps))
        .sum()
}

/// Clock frequency in MHz for a critical delay in picoseconds.
pub fn frequency_mhz(critical_delay_ps: f64) -> f64 {
    1e6 / critical_delay_ps
}

/// Static plus frequency-linear dynamic power of every gate, in watts.
pub fn total_power(nl: &StructuralNetlist, lib: &TechLibrary, frequency_mhz: f64) -> Result<f64, TechError> {
    let mut nw = 0.0;
    for (_, counts) in &nl.modules {
        for (gate, count) in counts {
            let p = lib.gate(gate)?;
            nw += *count as f64 * (p.static_nw + p.dyn_nw_per_mhz * frequency_mhz);
        }
    }
    Ok(nw * 1e-9)
}

/// Dhrystone iterations per second at 1 MHz, divided by the VAX baseline.
pub fn dmips_per_mhz(cycles_per_iteration: f64) -> Result<f64, TechError> {
    if !(cycles_per_iteration > 0.0) {
        return Err(TechError::NonPositive("cycles per iteration"));
    }
    Ok(1e6 / (cycles_per_iteration * VAX_DHRYSTONES_PER_SECOND))
}

/// DMIPS per watt.
pub fn efficiency(dmips_per_mhz: f64, frequency_mhz: f64, power_w: f64) -> Result<f64, TechError> {
    if !(power_w > 0.0) {
        return Err(TechError::NonPositive("power"));
    }
    Ok(dmips_per_mhz * frequency_mhz / power_w)
}

/// Storage needed for a program, in memory cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeSize {
    /// Trit cells on a 9-trit machine.
    pub trits: u64,
    /// Bit cells for the same count of 32-bit words.
    pub bits_32: u64,
    /// Bit cells for the same count of 16-bit words.
    pub bits_16: u64,
}

pub fn code_size_cells(instructions: u64, data_words: u64) -> CodeSize {
    let n = instructions + data_words;
    CodeSize {
        trits: 9 * n,
        bits_32: 32 * n,
        bits_16: 16 * n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub total_gates: u64,
    pub critical_delay_ps: f64,
    pub frequency_mhz: f64,
    pub power_w: f64,
    pub dmips_per_mhz: f64,
    pub dmips: f64,
    pub dmips_per_watt: f64,
}

/// Optional overrides for [`estimate`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub frequency_mhz: Option<f64>,
    pub power_w: Option<f64>,
}

/// Full estimate from a library and netlist. Frequency comes from the
/// critical path unless overridden; power is evaluated at that frequency
/// unless overridden.
pub fn estimate(
    nl: &StructuralNetlist,
    lib: &TechLibrary,
    dmips_per_mhz: f64,
    overrides: Overrides,
) -> Result<Estimate, TechError> {
    nl.validate(lib)?;
    let delay = critical_delay(nl, lib)?;
    let freq = overrides.frequency_mhz.unwrap_or_else(|| frequency_mhz(delay));
    let power = match overrides.power_w {
        Some(p) => p,
        None => total_power(nl, lib, freq)?,
    };
    Ok(Estimate {
        total_gates: total_gates(nl),
        critical_delay_ps: if overrides.frequency_mhz.is_some() { 1e6 / freq } else { delay },
        frequency_mhz: freq,
        power_w: power,
        dmips_per_mhz,
        dmips: dmips_per_mhz * freq,
        dmips_per_watt: efficiency(dmips_per_mhz, freq, power)?,
    })
}

/// Estimate from an already measured frequency and power, with no gate model.
pub fn estimate_measured(dmips_per_mhz: f64, frequency_mhz: f64, power_w: f64) -> Result<Estimate, TechError> {
    if !(frequency_mhz > 0.0) {
        return Err(TechError::NonPositive("frequency"));
    }
    Ok(Estimate {
        total_gates: 0,
        critical_delay_ps: 1e6 / frequency_mhz,
        frequency_mhz,
        power_w,
        dmips_per_mhz,
        dmips: dmips_per_mhz * frequency_mhz,
        dmips_per_watt: efficiency(dmips_per_mhz, frequency_mhz, power_w)?,
    })
}
