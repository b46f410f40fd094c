use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{echo_efficiency, run_storage_recall, CouplingGate, MemorySetup, Result, SolverError};
use crate::model::ensure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub switch_time_s: f64,
    /// Time between pulse centre and echo, `2·t_s`.
    pub storage_time_s: f64,
    pub efficiency: f64,
}

/// One storage run per switch time, coupling off during the hold.
///
/// Runs are independent and execute on the current rayon pool; results come
/// back in the order of `switch_times`.
pub fn sweep_storage_time(base: &MemorySetup, switch_times: &[f64]) -> Result<Vec<SweepPoint>> {
    ensure(
        !switch_times.is_empty(),
        "switch_times_s",
        0.0,
        "needs at least one switch time",
    )?;
    let gate = match base.gate {
        CouplingGate::OffDuringHold { .. } => base.gate,
        CouplingGate::AlwaysOn => CouplingGate::OffDuringHold { guard_s: None },
    };
    switch_times
        .par_iter()
        .map(|&ts| {
            let wrap = |source: SolverError| SolverError::SweepRun {
                switch_time: ts,
                source: Box::new(source),
            };
            let mut setup = base.clone();
            setup.schedule.switch_time = ts;
            setup.gate = gate;
            if let Some(t_end) = setup.grid.t_end {
                let needed = setup.pulse.center_time + 2.0 * ts;
                if t_end <= needed {
                    return Err(wrap(
                        crate::model::invalid(
                            "t_end_s",
                            t_end,
                            "echo of this switch time falls outside the grid window",
                        )
                        .into(),
                    ));
                }
            }
            let result = run_storage_recall(&setup).map_err(wrap)?;
            Ok(SweepPoint {
                switch_time_s: ts,
                storage_time_s: 2.0 * ts,
                efficiency: echo_efficiency(&result).map_err(wrap)?,
            })
        })
        .collect()
}
