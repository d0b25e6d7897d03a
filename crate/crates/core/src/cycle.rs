//! The four-stroke cycle (expand → heat → compress → measure), chained runs
//! and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_gkls, heat_between, isomagnetic_stroke, propagate_unitary, work_integral,
    ThermalizationMode, Trajectory,
};
use crate::error::{OttoError, Result};
use crate::measurement::{
    apply_measurement, heat_of_measurement, reset_ancilla, MeasurementBasis, MeasurementSpec, Pair,
};
use crate::model::{build_h_sys, ModelParams, RampDirection};
use crate::qops::QState;
use crate::scalar::Real;
use crate::thermo::{
    classify_mode, cumulative_metrics, efficiency, entropy_production, limit_cycle_distance,
    mutual_information, power, total_work, CycleLedger, EngineModel, RunHistory, RunStatus,
    Vertices, MODE_TOL,
};

/// A run stops once consecutive cycle outputs are closer than this.
pub const LIMIT_CYCLE_TOL: f64 = 1e-10;

/// Whether the bath stays attached during the work strokes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathMode {
    /// Bath only during the isomagnetic stroke.
    #[default]
    Ideal,
    /// Bath attached throughout; ramps integrate the master equation.
    AlwaysOn,
}

/// Everything that defines a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleConfig<R: Real> {
    pub params: ModelParams<R>,
    pub engine: EngineModel,
    pub bath: BathMode,
    pub thermalization: ThermalizationMode,
    pub measurement: MeasurementSpec,
    pub n_cycles: usize,
    /// Replace the ancilla by `|00⟩` after each measurement. Defaults to
    /// `true` for model B and `false` for model A.
    pub reset_ancilla: bool,
    /// End a run early once the limit cycle is reached.
    pub stop_at_limit_cycle: bool,
}

impl<R: Real> CycleConfig<R> {
    /// Single ideal cycle with the `|00⟩` projector on the pair that `engine`
    /// measures.
    pub fn new(params: ModelParams<R>, engine: EngineModel) -> Self {
        Self {
            params,
            engine,
            bath: BathMode::Ideal,
            thermalization: ThermalizationMode::ExactGibbs,
            measurement: MeasurementSpec::new(Self::target_of(engine), MeasurementBasis::Proj00),
            n_cycles: 1,
            reset_ancilla: engine == EngineModel::AncillaMeasurement,
            stop_at_limit_cycle: true,
        }
    }

    /// Pair measured by an engine model.
    pub fn target_of(engine: EngineModel) -> Pair {
        match engine {
            EngineModel::SystemMeasurement => Pair::System,
            EngineModel::AncillaMeasurement => Pair::Ancilla,
        }
    }

    pub fn with_basis(mut self, basis: MeasurementBasis) -> Self {
        self.measurement.basis = basis;
        self
    }

    /// Bath attached throughout, with finite-time thermalization.
    pub fn always_on(mut self) -> Self {
        self.bath = BathMode::AlwaysOn;
        self.thermalization = ThermalizationMode::FiniteTimeGkls;
        self
    }

    pub fn with_cycles(mut self, n: usize) -> Self {
        self.n_cycles = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_cycles == 0 {
            return Err(OttoError::arg("n_cycles must be at least 1"));
        }
        let want = Self::target_of(self.engine);
        if self.measurement.target != want {
            return Err(OttoError::arg(format!(
                "engine model {:?} measures the {:?} pair, not {:?}",
                self.engine, want, self.measurement.target
            )));
        }
        if self.bath == BathMode::AlwaysOn
            && self.thermalization != ThermalizationMode::FiniteTimeGkls
        {
            return Err(OttoError::arg(
                "an always-on bath needs finite-time thermalization",
            ));
        }
        Ok(())
    }
}

/// Initial register state `|0000⟩⟨0000|`.
pub fn initial_state<R: Real>() -> QState<R> {
    QState::basis(4, 0).expect("valid basis state")
}

/// One completed cycle.
#[derive(Debug, Clone)]
pub struct CycleOutcome<R: Real> {
    /// `cycle_index = 1` and `D_n = None`; [`run_many`] fills both in.
    pub ledger: CycleLedger<R>,
    /// State handed to the next cycle (after any ancilla reset).
    pub rho_out: QState<R>,
    pub vertices: Vertices<R>,
    pub strokes: Strokes<R>,
}

/// Trajectories of the three timed strokes.
#[derive(Debug, Clone)]
pub struct Strokes<R: Real> {
    pub expand: Trajectory<R>,
    pub heat: Trajectory<R>,
    pub compress: Trajectory<R>,
}

fn ramp<R: Real>(
    config: &CycleConfig<R>,
    rho: &QState<R>,
    dir: RampDirection,
) -> Result<Trajectory<R>> {
    match config.bath {
        BathMode::Ideal => propagate_unitary(rho, &config.params, dir),
        BathMode::AlwaysOn => evolve_gkls(rho, &config.params, config.params.tau, Some(dir)),
    }
}

/// Runs one cycle from `rho_in`.
pub fn run_cycle<R: Real>(config: &CycleConfig<R>, rho_in: &QState<R>) -> Result<CycleOutcome<R>> {
    config.validate()?;
    if rho_in.dim() != 16 {
        return Err(OttoError::arg("a cycle needs a 16-dimensional input state"));
    }
    let p = &config.params;

    let expand = ramp(config, rho_in, RampDirection::Expand)?;
    let w1 = work_integral(&expand, p, RampDirection::Expand)?;
    let rho_b = expand.final_state().clone();

    let heat = isomagnetic_stroke(&rho_b, p, config.thermalization)?;
    let rho_c = heat.final_state().clone();
    let q_h = heat_between(&rho_b, &rho_c, p)?;

    let compress = ramp(config, &rho_c, RampDirection::Compress)?;
    let w2 = work_integral(&compress, p, RampDirection::Compress)?;
    let rho_d = compress.final_state().clone();

    let (rho_pm, p_m) = apply_measurement(&rho_d, &config.measurement)?;
    let q_c = heat_of_measurement(&rho_d, &rho_pm, &build_h_sys(p, p.b_low))?;
    let rho_out = if config.reset_ancilla {
        reset_ancilla(&rho_pm)?
    } else {
        rho_pm.clone()
    };

    let vertices = Vertices {
        a: rho_in.clone(),
        b: rho_b,
        c: rho_c,
        d: rho_d,
        pm: rho_pm,
    };
    let w_tot = total_work(config.engine, w1, w2, q_h, q_c);
    let ledger = CycleLedger {
        cycle_index: 1,
        w1,
        w2,
        w_tot,
        q_h,
        q_c,
        p_m,
        eta: efficiency(w_tot, q_h),
        power: power(w_tot, p.tau, p.t_h)?,
        mode: classify_mode(q_h, q_c, w_tot, R::tol(MODE_TOL)),
        sigma: entropy_production(&vertices, q_h, p.temperature)?,
        mutual_info: mutual_information(&vertices.d)?,
        d_n: None,
        w_ramps: w1 + w2,
        first_law_gap: w1 + w2 + q_h + q_c,
    };
    Ok(CycleOutcome {
        ledger,
        rho_out,
        vertices,
        strokes: Strokes {
            expand,
            heat,
            compress,
        },
    })
}

/// Chains `config.n_cycles` cycles from `|0000⟩`.
pub fn run_many<R: Real>(config: &CycleConfig<R>) -> Result<RunHistory<R>> {
    run_many_from(config, &initial_state())
}

/// Chains cycles from `rho0`, feeding each output into the next cycle.
pub fn run_many_from<R: Real>(config: &CycleConfig<R>, rho0: &QState<R>) -> Result<RunHistory<R>> {
    config.validate()?;
    let mut ledgers = Vec::with_capacity(config.n_cycles);
    let mut rho = rho0.clone();
    let mut prev: Option<QState<R>> = None;
    let mut status = RunStatus::Completed;
    // Cycles are deterministic: an input identical to the previous one
    // reproduces the previous outcome, which exact thermalization makes the
    // common case.
    let mut last: Option<(QState<R>, CycleOutcome<R>)> = None;
    let mut vertices = None;
    for n in 1..=config.n_cycles {
        let out = match &last {
            Some((input, out)) if *input == rho => out.clone(),
            _ => run_cycle(config, &rho)?,
        };
        last = Some((rho.clone(), out.clone()));
        vertices = Some(out.vertices);
        let mut ledger = out.ledger;
        ledger.cycle_index = n;
        ledger.d_n = limit_cycle_distance(prev.as_ref(), &out.rho_out)?;
        let converged = ledger.d_n.is_some_and(|d| d < R::lit(LIMIT_CYCLE_TOL));
        ledgers.push(ledger);
        rho = out.rho_out;
        prev = Some(rho.clone());
        if converged && config.stop_at_limit_cycle && n < config.n_cycles {
            status = RunStatus::LimitCycleReached;
            break;
        }
    }
    let cum = cumulative_metrics(&ledgers, config.params.tau, config.params.t_h)?;
    Ok(RunHistory {
        ledgers,
        cumulative_eta: cum.eta,
        cumulative_power: cum.power,
        cumulative_power_per_cycle_time: cum.power_per_cycle_time,
        status,
        final_state: Some(rho),
        final_vertices: vertices,
    })
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepRow<R: Real> {
    pub value: R,
    pub history: RunHistory<R>,
}

/// Independent runs with `variable` set to each of `values`, evaluated in
/// parallel and returned in input order.
pub fn sweep<R: Real>(
    base: &CycleConfig<R>,
    variable: &str,
    values: &[R],
) -> Result<Vec<SweepRow<R>>> {
    base.params.clone().set(variable, R::zero())?;
    values
        .par_iter()
        .map(|&value| {
            let mut config = base.clone();
            config.params.set(variable, value)?;
            Ok(SweepRow {
                value,
                history: run_many(&config)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinBasis;
    use crate::qops::partial_trace;
    use crate::thermo::OperatingMode;

    fn model_a() -> CycleConfig<f64> {
        CycleConfig::new(ModelParams::default(), EngineModel::SystemMeasurement)
    }

    #[test]
    fn config_validation() {
        let mut c = model_a();
        assert!(c.validate().is_ok());
        c.measurement.target = Pair::Ancilla;
        assert!(c.validate().is_err());
        let mut c = model_a();
        c.bath = BathMode::AlwaysOn;
        assert!(c.validate().is_err());
        assert!(model_a().always_on().validate().is_ok());
        assert!(model_a().with_cycles(0).validate().is_err());
        let b = CycleConfig::new(
            ModelParams::<f64>::default(),
            EngineModel::AncillaMeasurement,
        );
        assert_eq!(b.measurement.target, Pair::Ancilla);
        assert!(b.reset_ancilla && !model_a().reset_ancilla);
    }

    #[test]
    fn model_a_projects_system_to_ground_pair() {
        let out = run_cycle(&model_a(), &initial_state()).unwrap();
        let sys = partial_trace(&out.rho_out, &[1, 2]).unwrap();
        assert!((sys.populations()[0] - 1.0).abs() < 1e-12);
        let l = &out.ledger;
        assert_eq!(l.w_tot, l.w1 + l.w2);
        assert!(l.q_h > 0.0);
        assert!(l.q_c <= 0.0);
        assert!(l.p_m > 0.0 && l.p_m <= 1.0);
        assert_eq!(l.mode, OperatingMode::Engine);
        assert!((l.power - l.w_tot.abs() / 12.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_ideal_cycle_closes_the_first_law() {
        // With g = 0 the working pair is closed during the ramps and the
        // measured pair's energy changes only through Q_H and Q_C.
        let l = run_cycle(&model_a(), &initial_state()).unwrap().ledger;
        assert!(l.first_law_gap.abs() < 1e-8, "gap {}", l.first_law_gap);
    }

    #[test]
    fn model_b_uses_heat_balance_and_resets() {
        let p = ModelParams::<f64> {
            j1: 2.0,
            g: 0.75,
            ..Default::default()
        };
        let c = CycleConfig::new(p, EngineModel::AncillaMeasurement);
        let out = run_cycle(&c, &initial_state()).unwrap();
        let l = &out.ledger;
        assert!((l.w_tot + (l.q_h - l.q_c.abs())).abs() < 1e-15);
        let anc = partial_trace(&out.rho_out, &[3, 4]).unwrap();
        assert!((anc.populations()[0] - 1.0).abs() < 1e-12);
        let sys_pm = partial_trace(&out.vertices.pm, &[1, 2]).unwrap();
        let sys_out = partial_trace(&out.rho_out, &[1, 2]).unwrap();
        assert!(sys_pm.rho().max_abs_diff(sys_out.rho()) < 1e-12);
    }

    #[test]
    fn run_many_with_one_cycle_matches_run_cycle() {
        let c = model_a();
        let one = run_cycle(&c, &initial_state()).unwrap();
        let h = run_many(&c).unwrap();
        assert_eq!(h.ledgers.len(), 1);
        assert_eq!(h.ledgers[0], one.ledger);
        assert_eq!(h.cumulative_eta, one.ledger.eta);
        assert_eq!(h.cumulative_power, one.ledger.power);
    }

    #[test]
    fn run_many_detects_the_limit_cycle() {
        // Exact Gibbs erases the memory of the input: cycle 2 reproduces cycle 1.
        let c = CycleConfig::new(
            ModelParams::<f64>::default(),
            EngineModel::AncillaMeasurement,
        )
        .with_cycles(5);
        let h = run_many(&c).unwrap();
        assert_eq!(h.status, RunStatus::LimitCycleReached);
        assert_eq!(h.ledgers.len(), 2);
        assert_eq!(h.ledgers[0].d_n, None);
        assert!(h.ledgers[1].d_n.unwrap() < LIMIT_CYCLE_TOL);
        let mut c = c;
        c.stop_at_limit_cycle = false;
        assert_eq!(run_many(&c).unwrap().ledgers.len(), 5);
    }

    #[test]
    fn runs_are_deterministic() {
        let c = model_a().with_cycles(2);
        let a = run_many(&c).unwrap();
        let b = run_many(&c).unwrap();
        assert_eq!(a.ledgers, b.ledgers);
    }

    #[test]
    fn sweep_preserves_order_and_rejects_unknown_names() {
        let vals = [1.0, 2.0, 3.0];
        let rows = sweep(&model_a(), "tau", &vals).unwrap();
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), vals);
        let direct = run_many(&{
            let mut c = model_a();
            c.params.tau = 2.0;
            c
        })
        .unwrap();
        assert_eq!(rows[1].history.ledgers, direct.ledgers);
        assert!(sweep(&model_a(), "gamma_x", &vals).is_err());
        assert!(sweep(&model_a(), "tau", &[]).unwrap().is_empty());
    }

    #[test]
    fn impossible_outcome_propagates() {
        // At g = 0 and T → 0 the ancilla sits in its ground state, which is
        // orthogonal to |11⟩.
        let p = ModelParams::<f64> {
            temperature: 1e-3,
            ..Default::default()
        };
        let c = CycleConfig::new(p, EngineModel::AncillaMeasurement)
            .with_basis(MeasurementBasis::Proj11);
        let err = run_cycle(&c, &initial_state()).unwrap_err();
        assert!(matches!(err, OttoError::ImpossibleOutcome(_)));
    }

    #[test]
    fn literal_basis_gives_mirrored_ramp_work() {
        let p = ModelParams::<f64> {
            basis: SpinBasis::ZeroExcited,
            ..Default::default()
        };
        let lit = run_cycle(
            &CycleConfig::new(p, EngineModel::SystemMeasurement),
            &initial_state(),
        )
        .unwrap();
        let mirror = run_cycle(&model_a(), &initial_state()).unwrap();
        assert!((lit.ledger.w1 - 2.0).abs() < 1e-8);
        assert!((mirror.ledger.w1 + 2.0).abs() < 1e-8);
    }
}
