//! Endpoint behaviors: merging unit, protection relay, Omicron test set and
//! the attack injector.

mod mu;
mod omicron;
mod pied;
mod waveform;

pub use mu::{mu_step, DeviceConfigError, MergingUnit, MuConfig};
pub use omicron::{omicron_on_goose, BreakerPosition, BreakerState, Omicron, OmicronConfig, TripPolicy};
pub use pied::{pied_on_sv, publish_heartbeat, publish_trip, Pied, PiedConfig, PiedState};
pub use waveform::{Sample, Waveform};

use crate::codec::{encode_goose, CodecError, GooseFrame};
use crate::ids::Host;
use crate::netsim::{PortRef, SimError, SimTime, Simulator};

#[derive(Debug, thiserror::Error)]
pub enum InjectError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("template does not encode: {0}")]
    Template(#[from] CodecError),
}

/// Schedules one copy of `template` per entry in `schedule`, each stamped
/// with its own injection time so every frame has a distinct digest.
pub fn inject(
    sim: &mut Simulator,
    host: Host,
    template: &GooseFrame,
    port: &PortRef,
    schedule: &[SimTime],
) -> Result<(), InjectError> {
    sim.network().check_port(port).map_err(SimError::from)?;
    for &at in schedule {
        let mut frame = template.clone();
        frame.timestamp = at.as_us();
        sim.inject(host, port, encode_goose(&frame)?, at)?;
    }
    Ok(())
}
