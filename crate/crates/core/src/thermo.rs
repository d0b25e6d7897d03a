//! Work and heat bookkeeping, efficiency and power, entropy production and
//! operating-mode classification.
//!
//! Sign convention: energy flowing *into* the working pair is positive, so an
//! engine has `Q_H ≥ 0`, `Q_C ≤ 0` and `W_tot ≤ 0`.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::qops::{partial_trace, trace_distance, von_neumann_entropy, QState};
use crate::scalar::Real;

/// Values within this band of zero count as zero when classifying modes.
pub const MODE_TOL: f64 = 1e-9;

/// Thermal-machine operating regime read off the signs of `(Q_H, Q_C, W_tot)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingMode {
    /// `Q_H ≥ 0, Q_C ≤ 0, W ≤ 0`.
    Engine,
    /// `Q_H ≥ 0, Q_C ≤ 0, W ≥ 0`.
    Accelerator,
    /// `Q_H ≤ 0, Q_C ≤ 0, W ≥ 0`.
    Heater,
    /// `Q_H ≤ 0, Q_C ≥ 0, W ≥ 0`.
    Refrigerator,
    /// None of the four permitted patterns.
    Unphysical,
}

impl OperatingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatingMode::Engine => "engine",
            OperatingMode::Accelerator => "accelerator",
            OperatingMode::Heater => "heater",
            OperatingMode::Refrigerator => "refrigerator",
            OperatingMode::Unphysical => "unphysical",
        }
    }
}

impl fmt::Display for OperatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Matches `(Q_H, Q_C, W_tot)` against the sign table; `|x| ≤ tol` counts as
/// zero. A zero component satisfies both `≥` and `≤`, in which case the first
/// matching row (engine, accelerator, heater, refrigerator) wins.
pub fn classify_mode<R: Real>(q_h: R, q_c: R, w_tot: R, tol: R) -> OperatingMode {
    let sign = |x: R| {
        if x.abs() <= tol {
            0
        } else if x > R::zero() {
            1
        } else {
            -1
        }
    };
    let (h, c, w) = (sign(q_h), sign(q_c), sign(w_tot));
    if h >= 0 && c <= 0 && w <= 0 {
        OperatingMode::Engine
    } else if h >= 0 && c <= 0 && w >= 0 {
        OperatingMode::Accelerator
    } else if h <= 0 && c <= 0 && w >= 0 {
        OperatingMode::Heater
    } else if h <= 0 && c >= 0 && w >= 0 {
        OperatingMode::Refrigerator
    } else {
        OperatingMode::Unphysical
    }
}

/// Quasi-static Otto efficiency `1 − B_L/B_H`.
pub fn otto_benchmark<R: Real>(b_low: R, b_high: R) -> R {
    R::one() - b_low / b_high
}

/// `|W_tot|/Q_H`, undefined (`None`) unless heat is absorbed.
pub fn efficiency<R: Real>(w_tot: R, q_h: R) -> Option<R> {
    (q_h > R::zero()).then(|| w_tot.abs() / q_h)
}

/// Duration of one cycle: two ramps and the isomagnetic stroke.
pub fn cycle_time<R: Real>(tau: R, t_h: R) -> Result<R> {
    if !(tau > R::zero()) || !(t_h >= R::zero()) {
        return Err(OttoError::arg(format!(
            "need tau > 0 and t_h >= 0, got {tau}, {t_h}"
        )));
    }
    Ok(R::lit(2.0) * tau + t_h)
}

/// `|W_tot|/(2τ + t_h)`.
pub fn power<R: Real>(w_tot: R, tau: R, t_h: R) -> Result<R> {
    Ok(w_tot.abs() / cycle_time(tau, t_h)?)
}

/// Which pair the cold-stroke measurement acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineModel {
    /// Measure the working pair.
    #[serde(rename = "A", alias = "a")]
    SystemMeasurement,
    /// Measure the ancilla pair and reset it.
    #[serde(rename = "B", alias = "b")]
    AncillaMeasurement,
}

/// Net work per cycle.
///
/// Model A sums the two ramps. Model B uses the heat balance
/// `−(Q_H − |Q_C|)`, negative when work is extracted.
pub fn total_work<R: Real>(model: EngineModel, w1: R, w2: R, q_h: R, q_c: R) -> R {
    match model {
        EngineModel::SystemMeasurement => w1 + w2,
        EngineModel::AncillaMeasurement => -(q_h - q_c.abs()),
    }
}

/// `S(ρ_sys) + S(ρ_anc) − S(ρ)` across the pair cut.
pub fn mutual_information<R: Real>(rho: &QState<R>) -> Result<R> {
    if rho.dim() != 16 {
        return Err(OttoError::arg(
            "mutual information needs a 16-dimensional state",
        ));
    }
    let s_sys = von_neumann_entropy(&partial_trace(rho, &[1, 2])?)?;
    let s_anc = von_neumann_entropy(&partial_trace(rho, &[3, 4])?)?;
    Ok(s_sys + s_anc - von_neumann_entropy(rho)?)
}

/// Register states at the cycle's vertices: start (A), after expansion (B),
/// after heating (C), after compression (D), and after measurement (PM,
/// before any ancilla reset).
#[derive(Debug, Clone)]
pub struct Vertices<R: Real> {
    pub a: QState<R>,
    pub b: QState<R>,
    pub c: QState<R>,
    pub d: QState<R>,
    pub pm: QState<R>,
}

impl<R: Real> Vertices<R> {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &QState<R>)> {
        [
            ("A", &self.a),
            ("B", &self.b),
            ("C", &self.c),
            ("D", &self.d),
            ("PM", &self.pm),
        ]
        .into_iter()
    }
}

fn sys_entropy<R: Real>(rho: &QState<R>) -> Result<R> {
    von_neumann_entropy(&partial_trace(rho, &[1, 2])?)
}

/// Entropy change of the working pair over a cycle:
/// `[S_B − S_A] + [S_D − S_C] + [S_PM − S_A]` on reduced states.
pub fn system_entropy_change<R: Real>(v: &Vertices<R>) -> Result<R> {
    let s = |r: &QState<R>| sys_entropy(r);
    let s_a = s(&v.a)?;
    Ok((s(&v.b)? - s_a) + (s(&v.d)? - s(&v.c)?) + (s(&v.pm)? - s_a))
}

/// `Σ = ΔS_sys − Q_H/T − I(ρ_D)`.
pub fn entropy_production<R: Real>(v: &Vertices<R>, q_h: R, temperature: R) -> Result<R> {
    if !(temperature > R::zero()) {
        return Err(OttoError::arg("temperature must be positive"));
    }
    Ok(system_entropy_change(v)? - q_h / temperature - mutual_information(&v.d)?)
}

/// Trace distance between consecutive cycle outputs; `None` for the first
/// cycle.
pub fn limit_cycle_distance<R: Real>(
    prev: Option<&QState<R>>,
    curr: &QState<R>,
) -> Result<Option<R>> {
    prev.map(|p| trace_distance(p, curr)).transpose()
}

/// Thermodynamic record of one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CycleLedger<R: Real> {
    /// 1-based position in a run.
    pub cycle_index: usize,
    #[serde(rename = "W1")]
    pub w1: R,
    #[serde(rename = "W2")]
    pub w2: R,
    #[serde(rename = "W_tot")]
    pub w_tot: R,
    #[serde(rename = "Q_H")]
    pub q_h: R,
    #[serde(rename = "Q_C")]
    pub q_c: R,
    pub p_m: R,
    /// `None` when `Q_H ≤ 0`.
    pub eta: Option<R>,
    pub power: R,
    pub mode: OperatingMode,
    pub sigma: R,
    pub mutual_info: R,
    /// `None` for the first cycle of a run.
    #[serde(rename = "D_n")]
    pub d_n: Option<R>,
    /// `W1 + W2`, logged for both engine models.
    pub w_ramps: R,
    /// `W1 + W2 + Q_H + Q_C`: zero when the working pair's energy closes.
    pub first_law_gap: R,
}

/// Column names of [`write_ledger_csv`].
pub const LEDGER_COLUMNS: [&str; 13] = [
    "n", "W1", "W2", "W_tot", "Q_H", "Q_C", "p_m", "eta", "power", "mode", "sigma", "I", "D_n",
];

fn num<R: Real>(x: R) -> String {
    x.as_f64().to_string()
}

fn opt<R: Real>(x: Option<R>) -> String {
    x.map_or_else(String::new, num)
}

impl<R: Real> CycleLedger<R> {
    /// Row for [`LEDGER_COLUMNS`]; undefined values are empty fields.
    pub fn record(&self) -> Vec<String> {
        vec![
            self.cycle_index.to_string(),
            num(self.w1),
            num(self.w2),
            num(self.w_tot),
            num(self.q_h),
            num(self.q_c),
            num(self.p_m),
            opt(self.eta),
            num(self.power),
            self.mode.as_str().to_string(),
            num(self.sigma),
            num(self.mutual_info),
            opt(self.d_n),
        ]
    }
}

/// One CSV row per cycle with a single header row.
pub fn write_ledger_csv<R: Real, W: Write>(ledgers: &[CycleLedger<R>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| OttoError::arg(format!("csv: {e}"));
    w.write_record(LEDGER_COLUMNS).map_err(err)?;
    for l in ledgers {
        w.write_record(l.record()).map_err(err)?;
    }
    w.flush().map_err(|e| OttoError::arg(e.to_string()))
}

/// Cumulative efficiency and power over the first `n` cycles of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Cumulative<R: Real> {
    pub cycles: usize,
    /// `|ΣW_tot| / ΣQ_in`, `Q_in = max(Q_H, 0)`; `None` if no heat entered.
    pub eta: Option<R>,
    /// `|ΣW_tot| / (N(2τ + t_h))`, a time-averaged power.
    pub power: R,
    /// `|ΣW_tot| / (2τ + t_h)`, dividing by a single cycle time.
    pub power_per_cycle_time: R,
}

/// Cumulative metrics of a non-empty run.
pub fn cumulative_metrics<R: Real>(
    ledgers: &[CycleLedger<R>],
    tau: R,
    t_h: R,
) -> Result<Cumulative<R>> {
    if ledgers.is_empty() {
        return Err(OttoError::arg("cumulative metrics need at least one cycle"));
    }
    let t_cycle = cycle_time(tau, t_h)?;
    let w: R = ledgers.iter().map(|l| l.w_tot).sum();
    let q_in: R = ledgers.iter().map(|l| l.q_h.max(R::zero())).sum();
    let n = ledgers.len();
    Ok(Cumulative {
        cycles: n,
        eta: (q_in > R::zero()).then(|| w.abs() / q_in),
        power: w.abs() / (R::lit(n as f64) * t_cycle),
        power_per_cycle_time: w.abs() / t_cycle,
    })
}

/// Cumulative metrics after each cycle `1..=N`.
pub fn cumulative_series<R: Real>(
    ledgers: &[CycleLedger<R>],
    tau: R,
    t_h: R,
) -> Result<Vec<Cumulative<R>>> {
    (1..=ledgers.len())
        .map(|n| cumulative_metrics(&ledgers[..n], tau, t_h))
        .collect()
}

/// Why a many-cycle run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Consecutive outputs agreed to within the limit-cycle threshold.
    LimitCycleReached,
}

/// Ledgers of a many-cycle run and its cumulative metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunHistory<R: Real> {
    pub ledgers: Vec<CycleLedger<R>>,
    pub cumulative_eta: Option<R>,
    pub cumulative_power: R,
    /// Cumulative work over a single cycle time.
    pub cumulative_power_per_cycle_time: R,
    pub status: RunStatus,
    /// State handed to the cycle after the last one.
    #[serde(skip)]
    pub final_state: Option<QState<R>>,
    /// Vertex states of the last cycle.
    #[serde(skip)]
    pub final_vertices: Option<Vertices<R>>,
}

impl<R: Real> RunHistory<R> {
    pub fn last(&self) -> &CycleLedger<R> {
        self.ledgers.last().expect("non-empty history")
    }

    /// Recomputes the cumulative fields from the ledgers.
    pub fn recompute(&self, tau: R, t_h: R) -> Result<Cumulative<R>> {
        cumulative_metrics(&self.ledgers, tau, t_h)
    }
}
