use std::path::Path;

use gear_core::harness::{Engine, RunConfig, RunLog};

use crate::error::Result;
use crate::logfile::{LogHeader, LogWriter};

/// Runs `config` and streams every record to a log at `out` as it is produced.
pub fn run_logged(config: &RunConfig, out: &Path) -> Result<RunLog> {
    let mut engine = Engine::new(config.clone())?;
    let mut writer = LogWriter::create(out, &LogHeader::new(config, engine.root().clone()))?;
    while !engine.is_done() {
        writer.append(engine.step()?)?;
    }
    Ok(engine.into_log())
}
