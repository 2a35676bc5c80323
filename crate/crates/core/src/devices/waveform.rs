use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Balanced three-phase source with an optional step change in current
/// amplitude. Currents in milliamperes, voltages in volts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Waveform {
    pub frequency_hz: f64,
    pub nominal_current_ma: i32,
    pub voltage_peak_v: i32,
    /// Peak current from `fault_at_us` onwards.
    pub fault_current_ma: i32,
    pub fault_at_us: Option<u64>,
}

impl Default for Waveform {
    fn default() -> Self {
        Waveform {
            frequency_hz: 60.0,
            nominal_current_ma: 1_000,
            voltage_peak_v: 89_815,
            fault_current_ma: 20_000,
            fault_at_us: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub currents: [i32; 3],
    pub voltages: [i32; 3],
}

impl Waveform {
    pub fn faulted(&self, t_us: u64) -> bool {
        self.fault_at_us.is_some_and(|f| t_us >= f)
    }

    pub fn sample(&self, t_us: u64) -> Sample {
        let amp = if self.faulted(t_us) { self.fault_current_ma } else { self.nominal_current_ma };
        let theta = 2.0 * PI * self.frequency_hz * (t_us as f64 / 1e6);
        let phase = |peak: i32, k: f64| (f64::from(peak) * (theta - k * 2.0 * PI / 3.0).sin()).round() as i32;
        Sample {
            currents: [phase(amp, 0.0), phase(amp, 1.0), phase(amp, 2.0)],
            voltages: [
                phase(self.voltage_peak_v, 0.0),
                phase(self.voltage_peak_v, 1.0),
                phase(self.voltage_peak_v, 2.0),
            ],
        }
    }
}
