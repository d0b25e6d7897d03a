use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::model::RampDirection;
use crate::qops::QState;
use crate::scalar::Real;

/// What kind of stroke produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrokeKind {
    UnitaryExpand,
    UnitaryCompress,
    /// Bath contact at fixed field.
    Isomagnetic,
    /// Driven ramp with the bath still attached.
    AlwaysOn,
}

impl StrokeKind {
    pub fn label(self) -> &'static str {
        match self {
            StrokeKind::UnitaryExpand => "expansion",
            StrokeKind::UnitaryCompress => "compression",
            StrokeKind::Isomagnetic => "isomagnetic",
            StrokeKind::AlwaysOn => "always-on",
        }
    }

    pub(crate) fn unitary(dir: RampDirection) -> Self {
        match dir {
            RampDirection::Expand => StrokeKind::UnitaryExpand,
            RampDirection::Compress => StrokeKind::UnitaryCompress,
        }
    }
}

/// Scalar bookkeeping recorded at every grid point of a stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GridPoint<R: Real> {
    pub t: R,
    /// Field `B(t)`.
    pub field: R,
    /// `Tr[ρ_sys ∂H_sys/∂B]`.
    pub field_expectation: R,
    /// `Tr[ρ_sys H_sys(B(t))]`.
    pub e_sys: R,
    /// `Tr[ρ H_tot(B(t))]`.
    pub e_tot: R,
}

/// Time-gridded record of one stroke.
///
/// Scalar observables are kept at every grid point; full density matrices
/// only at evenly strided snapshots (always including both endpoints), so
/// that strokes with 10⁵ steps stay small.
#[derive(Debug, Clone)]
pub struct Trajectory<R: Real> {
    pub kind: StrokeKind,
    /// Ramp direction for work strokes, `None` at fixed field.
    pub direction: Option<RampDirection>,
    pub grid: Vec<GridPoint<R>>,
    /// `(grid index, state)` pairs, ascending.
    pub snapshots: Vec<(usize, QState<R>)>,
    /// Step-halving estimate of the final-state error, when refined.
    pub refinement_error: Option<R>,
}

/// Number of stored density-matrix snapshots per stroke (plus endpoints).
pub const SNAPSHOTS: usize = 256;

impl<R: Real> Trajectory<R> {
    pub(crate) fn new(kind: StrokeKind, direction: Option<RampDirection>) -> Self {
        Self {
            kind,
            direction,
            grid: Vec::new(),
            snapshots: Vec::new(),
            refinement_error: None,
        }
    }

    pub fn times(&self) -> Vec<R> {
        self.grid.iter().map(|g| g.t).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len().saturating_sub(1)
    }

    pub fn duration(&self) -> R {
        match (self.grid.first(), self.grid.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => R::zero(),
        }
    }

    pub fn initial_state(&self) -> &QState<R> {
        &self.snapshots.first().expect("non-empty trajectory").1
    }

    pub fn final_state(&self) -> &QState<R> {
        &self.snapshots.last().expect("non-empty trajectory").1
    }

    pub fn states(&self) -> impl Iterator<Item = &QState<R>> {
        self.snapshots.iter().map(|(_, s)| s)
    }

    /// Writes one CSV row per snapshot: `t, p0..p{d-1}, E_sys, E_tot`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.snapshots.first().map_or(0, |(_, s)| s.dim());
        let mut header = vec!["t".to_string()];
        header.extend((0..dim).map(|i| format!("p{i}")));
        header.push("E_sys".into());
        header.push("E_tot".into());
        w.write_record(&header).map_err(csv_err)?;
        for (k, state) in &self.snapshots {
            let g = &self.grid[*k];
            let mut row = vec![g.t.as_f64().to_string()];
            row.extend(state.populations().iter().map(|p| p.as_f64().to_string()));
            row.push(g.e_sys.as_f64().to_string());
            row.push(g.e_tot.as_f64().to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| OttoError::arg(e.to_string()))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> OttoError {
    OttoError::arg(format!("csv: {e}"))
}

/// Grid indices at which snapshots are kept for an `n`-step stroke.
pub(crate) fn snapshot_stride(n: usize) -> usize {
    (n / SNAPSHOTS).max(1)
}

pub(crate) fn keep_snapshot(k: usize, n: usize) -> bool {
    k == 0 || k == n || k.is_multiple_of(snapshot_stride(n))
}
