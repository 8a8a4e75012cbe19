pub mod bandwidth;
pub mod experiment;
pub mod pricing;
pub mod simulate;
pub mod sweep;

use feedrecall::WorldState;

use crate::ConfigError;

pub(crate) fn world_state(bit: u8, what: &str) -> Result<WorldState, ConfigError> {
    WorldState::from_bit(bit).map_err(|_| ConfigError(format!("{what} must be 0 or 1, got {bit}")))
}

/// Offset separating independent seed streams used by one command, so that
/// stream `seed + i` of one purpose never coincides with another's.
pub(crate) const STREAM_STRIDE: u64 = 1 << 40;
