//! CSV renderings of trajectories.
//!
//! Event log: `time,target_rank,parent_mass,s1,...,s8` (split vectors
//! truncated or zero-padded to eight entries). Snapshots:
//! `time,lambda1,...,lambda16,dust`. Reals are written with 17 significant
//! digits.

use std::io::{self, Write};

use crate::scalar::Scalar;
use crate::sim::Trajectory;

pub const SPLIT_COLUMNS: usize = 8;
pub const SNAPSHOT_COLUMNS: usize = 16;

/// Scientific notation with 17 significant digits.
pub fn fmt_real<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

pub fn write_events<T: Scalar, W: Write>(traj: &Trajectory<T>, mut w: W) -> io::Result<()> {
    write!(w, "time,target_rank,parent_mass")?;
    for i in 1..=SPLIT_COLUMNS {
        write!(w, ",s{}", i)?;
    }
    writeln!(w)?;
    for e in &traj.events {
        write!(w, "{},{},{}", fmt_real(e.time), e.target_rank, fmt_real(e.parent_mass))?;
        for i in 0..SPLIT_COLUMNS {
            write!(w, ",{}", fmt_real(e.s.get(i).copied().unwrap_or_else(T::zero)))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_snapshots<T: Scalar, W: Write>(traj: &Trajectory<T>, mut w: W) -> io::Result<()> {
    write!(w, "time")?;
    for i in 1..=SNAPSHOT_COLUMNS {
        write!(w, ",lambda{}", i)?;
    }
    writeln!(w, ",dust")?;
    for snap in &traj.snapshots {
        write!(w, "{}", fmt_real(snap.time))?;
        for k in 1..=SNAPSHOT_COLUMNS {
            write!(w, ",{}", fmt_real(snap.state.lambda(k)))?;
        }
        writeln!(w, ",{}", fmt_real(snap.state.dust()))?;
    }
    Ok(())
}
