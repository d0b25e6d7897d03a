use serde::{Deserialize, Serialize};

use crate::dynamics::bath::{coupling_operators, BathSpec, DaviesGenerator};
use crate::dynamics::trajectory::{keep_snapshot, GridPoint, StrokeKind, Trajectory};
use crate::dynamics::unitary::{check_register, Observer};
use crate::error::{OttoError, Result};
use crate::model::{build_h_sys, field_at, ModelOperators, ModelParams, RampDirection};
use crate::qops::{
    eigh, eigh_with_guess, gibbs_state, partial_trace, trace_distance, CMatrix, QState, Spectrum,
};
use crate::scalar::Real;

/// How the isomagnetic stroke brings the register into contact with the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalizationMode {
    /// Replace the state by the global Gibbs state of `H_tot(B_H)`.
    #[default]
    ExactGibbs,
    /// Integrate the master equation for `t_h`.
    FiniteTimeGkls,
}

/// Early-stop threshold for finite-time thermalization: trace distance moved
/// per unit time.
pub const STATIONARY_RATE: f64 = 1e-8;

/// RK4 sub-steps are sized so that `dt · (fastest escape rate) ≤ this`.
const STIFFNESS_STEP: f64 = 0.25;

fn step_count<R: Real>(duration: R, dt: R) -> usize {
    let ratio = (duration / dt).as_f64();
    (ratio - 1e-9).ceil().max(1.0) as usize
}

/// Integrates `n` steps of length `dt`. `generator(k)` returns the frozen
/// generator for step `k`, or `None` to reuse the previous one.
#[allow(clippy::too_many_arguments)]
fn integrate<R: Real>(
    rho0: &QState<R>,
    n: usize,
    dt: R,
    kind: StrokeKind,
    direction: Option<RampDirection>,
    stop_rate: Option<R>,
    mut generator: impl FnMut(usize) -> Result<Option<DaviesGenerator<R>>>,
    record: impl Fn(R, &QState<R>) -> Result<GridPoint<R>>,
) -> Result<Trajectory<R>> {
    let mut traj = Trajectory::new(kind, direction);
    let mut rho = rho0.clone();
    traj.grid.push(record(R::zero(), &rho)?);
    traj.snapshots.push((0, rho.clone()));
    let mut gen: Option<DaviesGenerator<R>> = None;
    let trace_tol = R::tol(1e-6);
    let pos_tol = R::tol(1e-7);
    for k in 0..n {
        if let Some(g) = generator(k)? {
            gen = Some(g);
        }
        let g = gen.as_ref().expect("generator for the first step");
        let v = &g.spectrum.eigenvectors;
        let mut sigma = v.conjugate_adj(rho.rho());
        if !g.is_trivial() {
            let m = ((dt * g.stiffness).as_f64() / STIFFNESS_STEP)
                .ceil()
                .max(1.0) as usize;
            let h = dt / R::lit(m as f64);
            for _ in 0..m {
                sigma = g.rk4(&sigma, h);
            }
        }
        sigma = g.rotate(&sigma, dt);
        let next = QState::new_unchecked(v.conjugate(&sigma).hermitian_part())?;

        let tr = next.trace();
        if (tr - R::one()).abs() > trace_tol {
            return Err(OttoError::integration(
                kind.label(),
                format!("trace drifted to {} at step {}; reduce gkls_dt", tr, k + 1),
            ));
        }
        let min = next.min_eigenvalue()?;
        if min < -pos_tol {
            return Err(OttoError::integration(
                kind.label(),
                format!(
                    "eigenvalue {:e} at step {}; reduce gkls_dt",
                    min.as_f64(),
                    k + 1
                ),
            ));
        }
        let moved = match stop_rate {
            Some(_) => Some(trace_distance(&next, &rho)?),
            None => None,
        };
        rho = next;
        let step = k + 1;
        let t = R::lit(step as f64) * dt;
        traj.grid.push(record(t, &rho)?);
        let stationary = matches!((moved, stop_rate), (Some(d), Some(r)) if d <= r * dt);
        if keep_snapshot(step, n) || stationary {
            traj.snapshots.push((step, rho.clone()));
        }
        if stationary {
            break;
        }
    }
    if traj.snapshots.last().map(|s| s.0) != Some(traj.grid.len() - 1) {
        traj.snapshots.push((traj.grid.len() - 1, rho));
    }
    Ok(traj)
}

/// Master-equation evolution of a register under a time-independent `h`
/// with local couplings `couplings`.
pub fn evolve_static<R: Real>(
    rho0: &QState<R>,
    h: &CMatrix<R>,
    couplings: &[CMatrix<R>],
    bath: &BathSpec<R>,
    duration: R,
    dt: R,
) -> Result<Trajectory<R>> {
    if !(duration > R::zero()) || !(dt > R::zero()) {
        return Err(OttoError::arg("duration and time step must be positive"));
    }
    if h.dim() != rho0.dim() || couplings.iter().any(|x| x.dim() != h.dim()) {
        return Err(OttoError::arg("operator dimensions do not match the state"));
    }
    let n = step_count(duration, dt);
    let dt = duration / R::lit(n as f64);
    let spec = eigh(h)?;
    let mut first = Some(DaviesGenerator::new(spec, couplings, bath)?);
    integrate(
        rho0,
        n,
        dt,
        StrokeKind::Isomagnetic,
        None,
        None,
        |_| Ok(first.take()),
        |t, rho| {
            let e = rho.expectation(h);
            Ok(GridPoint {
                t,
                field: R::zero(),
                field_expectation: R::zero(),
                e_sys: e,
                e_tot: e,
            })
        },
    )
}

/// Master-equation evolution of the ladder.
///
/// With `driven = Some(dir)` the field follows the ramp over `duration = τ`
/// and the generator is rebuilt from the instantaneous midpoint spectrum at
/// every step. With `None` the field is held at `B_H` for `duration`.
pub fn evolve_gkls<R: Real>(
    rho0: &QState<R>,
    params: &ModelParams<R>,
    duration: R,
    driven: Option<RampDirection>,
) -> Result<Trajectory<R>> {
    match driven {
        Some(dir) => evolve_driven(rho0, params, duration, dir),
        None => evolve_fixed(rho0, params, duration, params.b_high, None),
    }
}

/// Bath contact at a fixed field, optionally stopping once the state moves
/// less than `stop_rate` in trace distance per unit time.
pub fn evolve_fixed<R: Real>(
    rho0: &QState<R>,
    params: &ModelParams<R>,
    duration: R,
    field: R,
    stop_rate: Option<R>,
) -> Result<Trajectory<R>> {
    check_register(rho0)?;
    params.validate()?;
    if !(duration > R::zero()) {
        return Err(OttoError::arg("duration must be positive"));
    }
    let ops = ModelOperators::new(params);
    let obs = Observer::new(&ops);
    let bath = BathSpec::from_params(params);
    let couplings = coupling_operators(params)?;
    let n = step_count(duration, params.gkls_dt);
    let dt = duration / R::lit(n as f64);
    let spec = eigh(&ops.h_tot(field))?;
    let mut first = Some(DaviesGenerator::new(spec, &couplings, &bath)?);
    integrate(
        rho0,
        n,
        dt,
        StrokeKind::Isomagnetic,
        None,
        stop_rate,
        |_| Ok(first.take()),
        |t, rho| Ok(obs.point(t, field, rho)),
    )
}

fn evolve_driven<R: Real>(
    rho0: &QState<R>,
    params: &ModelParams<R>,
    duration: R,
    dir: RampDirection,
) -> Result<Trajectory<R>> {
    check_register(rho0)?;
    params.validate()?;
    if (duration - params.tau).abs() > R::tol(1e-12) * params.tau {
        return Err(OttoError::arg("a driven stroke lasts exactly tau"));
    }
    let ops = ModelOperators::new(params);
    let obs = Observer::new(&ops);
    let bath = BathSpec::from_params(params);
    let couplings = coupling_operators(params)?;
    let n = step_count(params.tau, params.gkls_dt);
    let dt = params.tau / R::lit(n as f64);
    let mut basis: Option<CMatrix<R>> = None;
    integrate(
        rho0,
        n,
        dt,
        StrokeKind::AlwaysOn,
        Some(dir),
        None,
        |k| {
            let t_mid = (R::lit(k as f64) + R::lit(0.5)) * dt;
            let h = ops.h_tot(field_at(t_mid, params, dir)?);
            let spec: Spectrum<R> = match &basis {
                Some(v) => eigh_with_guess(&h, v)?,
                None => eigh(&h)?,
            };
            basis = Some(spec.eigenvectors.clone());
            Ok(Some(DaviesGenerator::new(spec, &couplings, &bath)?))
        },
        |t, rho| {
            let t = t.min(params.tau);
            Ok(obs.point(t, field_at(t, params, dir)?, rho))
        },
    )
}

/// Isomagnetic stroke at `B_H` as a trajectory.
///
/// [`ThermalizationMode::ExactGibbs`] yields a two-point trajectory from the
/// input to the Gibbs state, spanning `t_h`.
pub fn isomagnetic_stroke<R: Real>(
    rho: &QState<R>,
    params: &ModelParams<R>,
    mode: ThermalizationMode,
) -> Result<Trajectory<R>> {
    check_register(rho)?;
    params.validate()?;
    let ops = ModelOperators::new(params);
    let obs = Observer::new(&ops);
    let b = params.b_high;
    match mode {
        ThermalizationMode::ExactGibbs => {
            let gibbs = gibbs_state(&ops.h_tot(b), params.temperature)?;
            let mut traj = Trajectory::new(StrokeKind::Isomagnetic, None);
            traj.grid.push(obs.point(R::zero(), b, rho));
            traj.grid.push(obs.point(params.t_h, b, &gibbs));
            traj.snapshots.push((0, rho.clone()));
            traj.snapshots.push((1, gibbs));
            Ok(traj)
        }
        ThermalizationMode::FiniteTimeGkls if params.t_h == R::zero() => {
            let mut traj = Trajectory::new(StrokeKind::Isomagnetic, None);
            traj.grid.push(obs.point(R::zero(), b, rho));
            traj.snapshots.push((0, rho.clone()));
            Ok(traj)
        }
        ThermalizationMode::FiniteTimeGkls => {
            evolve_fixed(rho, params, params.t_h, b, Some(R::lit(STATIONARY_RATE)))
        }
    }
}

/// Brings the register into contact with the hot bath; returns the final
/// state and the time spent.
pub fn thermalize<R: Real>(
    rho: &QState<R>,
    params: &ModelParams<R>,
    mode: ThermalizationMode,
) -> Result<(QState<R>, R)> {
    let traj = isomagnetic_stroke(rho, params, mode)?;
    Ok((traj.final_state().clone(), traj.duration()))
}

/// Heat absorbed by the system pair over a fixed-field stroke,
/// `Tr[H_sys(B)(ρ_sys(end) − ρ_sys(start))]`.
pub fn heat_integral<R: Real>(traj: &Trajectory<R>, _params: &ModelParams<R>) -> Result<R> {
    if traj.kind != StrokeKind::Isomagnetic {
        return Err(OttoError::arg(format!(
            "heat integral needs an isomagnetic stroke, got {}",
            traj.kind.label()
        )));
    }
    let (first, last) = (traj.grid.first(), traj.grid.last());
    match (first, last) {
        (Some(a), Some(b)) => Ok(b.e_sys - a.e_sys),
        _ => Err(OttoError::arg("empty trajectory")),
    }
}

/// `Tr[H_sys(B_H)(ρ_sys(end) − ρ_sys(start))]` from two register states.
pub fn heat_between<R: Real>(
    start: &QState<R>,
    end: &QState<R>,
    params: &ModelParams<R>,
) -> Result<R> {
    check_register(start)?;
    check_register(end)?;
    let h = build_h_sys(params, params.b_high);
    let a = partial_trace(start, &[1, 2])?;
    let b = partial_trace(end, &[1, 2])?;
    Ok(b.expectation(&h) - a.expectation(&h))
}
