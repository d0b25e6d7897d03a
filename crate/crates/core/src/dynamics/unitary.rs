use crate::dynamics::trajectory::{keep_snapshot, GridPoint, StrokeKind, Trajectory};
use crate::error::{OttoError, Result};
use crate::model::{embed_sys, field_at, field_rate, ModelOperators, ModelParams, RampDirection};
use crate::qops::{eigh, eigh_with_guess, phase_propagator, trace_distance, CMatrix, QState};
use crate::scalar::Real;

/// Register operators needed to record per-step observables.
#[derive(Debug, Clone)]
pub(crate) struct Observer<R: Real> {
    sys_static: CMatrix<R>,
    field: CMatrix<R>,
    tot_static: CMatrix<R>,
}

impl<R: Real> Observer<R> {
    pub(crate) fn new(ops: &ModelOperators<R>) -> Self {
        Self {
            sys_static: embed_sys(&ops.sys_static),
            field: ops.tot_field.clone(),
            tot_static: ops.tot_static.clone(),
        }
    }

    pub(crate) fn point(&self, t: R, b: R, rho: &QState<R>) -> GridPoint<R> {
        let f = rho.expectation(&self.field);
        GridPoint {
            t,
            field: b,
            field_expectation: f,
            e_sys: rho.expectation(&self.sys_static) + b * f,
            e_tot: rho.expectation(&self.tot_static) + b * f,
        }
    }
}

pub(crate) fn check_register<R: Real>(rho: &QState<R>) -> Result<()> {
    if rho.n_qubits() != 4 {
        return Err(OttoError::arg(format!(
            "expected a 4-qubit state, got {} qubits",
            rho.n_qubits()
        )));
    }
    Ok(())
}

/// Sub-propagators of the midpoint rule over a ramp of `n` steps, in time
/// order. Each step diagonalizes `H_tot` at the step midpoint, warm-started
/// from the previous eigenbasis.
pub(crate) struct RampSteps<'a, R: Real> {
    ops: &'a ModelOperators<R>,
    params: &'a ModelParams<R>,
    dir: RampDirection,
    n: usize,
    k: usize,
    basis: Option<CMatrix<R>>,
}

impl<'a, R: Real> RampSteps<'a, R> {
    pub(crate) fn new(
        ops: &'a ModelOperators<R>,
        params: &'a ModelParams<R>,
        dir: RampDirection,
        n: usize,
    ) -> Self {
        Self {
            ops,
            params,
            dir,
            n,
            k: 0,
            basis: None,
        }
    }

    pub(crate) fn dt(&self) -> R {
        self.params.tau / R::lit(self.n as f64)
    }

    /// Midpoint spectrum of the next step.
    pub(crate) fn next_spectrum(&mut self) -> Option<Result<crate::qops::Spectrum<R>>> {
        if self.k == self.n {
            return None;
        }
        let dt = self.dt();
        let t_mid = (R::lit(self.k as f64) + R::lit(0.5)) * dt;
        self.k += 1;
        let spec = field_at(t_mid, self.params, self.dir).and_then(|b| {
            let h = self.ops.h_tot(b);
            match &self.basis {
                Some(v) => eigh_with_guess(&h, v),
                None => eigh(&h),
            }
        });
        if let Ok(s) = &spec {
            self.basis = Some(s.eigenvectors.clone());
        }
        Some(spec)
    }
}

impl<R: Real> Iterator for RampSteps<'_, R> {
    type Item = Result<CMatrix<R>>;

    fn next(&mut self) -> Option<Self::Item> {
        let dt = self.dt();
        self.next_spectrum()
            .map(|spec| spec.map(|s| phase_propagator(&s, dt)))
    }
}

/// Time-ordered evolution over a ramp on a fixed grid of `n` steps.
pub fn propagate_unitary_fixed<R: Real>(
    rho0: &QState<R>,
    params: &ModelParams<R>,
    dir: RampDirection,
    n: usize,
) -> Result<Trajectory<R>> {
    check_register(rho0)?;
    params.validate()?;
    if n == 0 {
        return Err(OttoError::arg("a stroke needs at least one step"));
    }
    let ops = ModelOperators::new(params);
    let obs = Observer::new(&ops);
    let mut traj = Trajectory::new(StrokeKind::unitary(dir), Some(dir));
    let dt = params.tau / R::lit(n as f64);
    let mut rho = rho0.clone();
    traj.grid
        .push(obs.point(R::zero(), field_at(R::zero(), params, dir)?, &rho));
    traj.snapshots.push((0, rho.clone()));
    for (k, u) in RampSteps::new(&ops, params, dir, n).enumerate() {
        rho = rho.evolve(&u?);
        let step = k + 1;
        let t = if step == n {
            params.tau
        } else {
            R::lit(step as f64) * dt
        };
        traj.grid
            .push(obs.point(t, field_at(t, params, dir)?, &rho));
        if keep_snapshot(step, n) {
            traj.snapshots.push((step, rho.clone()));
        }
    }
    Ok(traj)
}

/// `tol`, widened to the round-off accumulated over `n` steps so that single
/// precision refinement terminates.
fn refinement_tolerance<R: Real>(tol: R, n: usize) -> R {
    tol.max(R::epsilon() * R::lit(16.0 * n as f64))
}

/// Time-ordered evolution over a ramp with automatic step doubling.
///
/// Starts at `params.n_steps` and doubles until both the final state (trace
/// distance) and the work integral change by less than `params.refine_tol`
/// between successive grids. Returns the finer trajectory.
pub fn propagate_unitary<R: Real>(
    rho0: &QState<R>,
    params: &ModelParams<R>,
    dir: RampDirection,
) -> Result<Trajectory<R>> {
    let mut n = params.n_steps;
    let mut coarse = propagate_unitary_fixed(rho0, params, dir, n)?;
    let mut w_coarse = work_integral(&coarse, params, dir)?;
    loop {
        if 2 * n > params.max_steps {
            return Err(OttoError::integration(
                StrokeKind::unitary(dir).label(),
                format!(
                    "step doubling reached {} steps without meeting tolerance {:e}",
                    n,
                    params.refine_tol.as_f64()
                ),
            ));
        }
        n *= 2;
        let mut fine = propagate_unitary_fixed(rho0, params, dir, n)?;
        let w_fine = work_integral(&fine, params, dir)?;
        let d_state = trace_distance(coarse.final_state(), fine.final_state())?;
        let d_work = (w_fine - w_coarse).abs();
        let tol = refinement_tolerance(params.refine_tol, n);
        if d_state <= tol && d_work <= tol * w_fine.abs().max(R::one()) {
            fine.refinement_error = Some(d_state);
            return Ok(fine);
        }
        coarse = fine;
        w_coarse = w_fine;
    }
}

/// Full ramp propagator `U(τ)` on an `n`-step grid.
pub fn ramp_propagator<R: Real>(
    params: &ModelParams<R>,
    dir: RampDirection,
    n: usize,
) -> Result<CMatrix<R>> {
    params.validate()?;
    let ops = ModelOperators::new(params);
    let mut u = CMatrix::identity(16);
    for step in RampSteps::new(&ops, params, dir, n) {
        u = step?.matmul(&u);
    }
    Ok(u)
}

/// Ramp propagator refined by step doubling until successive grids agree to
/// `params.refine_tol` entrywise.
pub fn ramp_propagator_refined<R: Real>(
    params: &ModelParams<R>,
    dir: RampDirection,
) -> Result<(CMatrix<R>, usize)> {
    let mut n = params.n_steps;
    let mut coarse = ramp_propagator(params, dir, n)?;
    loop {
        if 2 * n > params.max_steps {
            return Err(OttoError::integration(
                StrokeKind::unitary(dir).label(),
                format!("propagator not converged at {n} steps"),
            ));
        }
        n *= 2;
        let fine = ramp_propagator(params, dir, n)?;
        if fine.max_abs_diff(&coarse) <= refinement_tolerance(params.refine_tol, n) {
            return Ok((fine, n));
        }
        coarse = fine;
    }
}

/// `∫ Tr[ρ_sys(t) dH_sys/dt] dt` by the trapezoidal rule on the stroke grid.
pub fn work_integral<R: Real>(
    traj: &Trajectory<R>,
    params: &ModelParams<R>,
    dir: RampDirection,
) -> Result<R> {
    match (traj.kind, traj.direction) {
        (StrokeKind::Isomagnetic, _) => {
            return Err(OttoError::arg("work integral over an isomagnetic stroke"))
        }
        (_, Some(d)) if d != dir => {
            return Err(OttoError::arg(
                "work integral direction does not match the stroke",
            ))
        }
        (_, None) => return Err(OttoError::arg("work integral over an undriven stroke")),
        _ => {}
    }
    let rate = field_rate(params, dir);
    let half = R::lit(0.5);
    let w = traj
        .grid
        .windows(2)
        .map(|p| (p[1].t - p[0].t) * (p[0].field_expectation + p[1].field_expectation) * half)
        .sum::<R>();
    Ok(rate * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpinBasis;
    use crate::qops::{partial_trace, propagator, von_neumann_entropy};

    fn ground() -> QState<f64> {
        QState::basis(4, 0).unwrap()
    }

    #[test]
    fn constant_field_matches_single_exponential() {
        let p = ModelParams {
            b_low: 1.5,
            b_high: 1.5,
            g: 0.75,
            delta1: 0.4,
            tau: 2.0,
            ..Default::default()
        };
        let rho0 = QState::pure(
            &(0..16)
                .map(|k| crate::C::new(1.0 + k as f64, 0.3 * k as f64))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let traj = propagate_unitary_fixed(&rho0, &p, RampDirection::Expand, 64).unwrap();
        let h = ModelOperators::new(&p).h_tot(1.5);
        let exact = rho0.evolve(&propagator(&h, 2.0).unwrap());
        assert!(traj.final_state().rho().max_abs_diff(exact.rho()) < 1e-12);
    }

    #[test]
    fn decoupled_ground_state_is_stationary() {
        for basis in [SpinBasis::ZeroGround, SpinBasis::ZeroExcited] {
            let p = ModelParams {
                basis,
                ..Default::default()
            };
            let traj = propagate_unitary_fixed(&ground(), &p, RampDirection::Expand, 32).unwrap();
            let sys = partial_trace(traj.final_state(), &[1, 2]).unwrap();
            assert!((sys.populations()[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_work_on_aligned_state() {
        let literal = ModelParams::<f64> {
            basis: SpinBasis::ZeroExcited,
            ..Default::default()
        };
        let traj = propagate_unitary_fixed(&ground(), &literal, RampDirection::Expand, 16).unwrap();
        let w = work_integral(&traj, &literal, RampDirection::Expand).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
        let mirrored = ModelParams::<f64>::default();
        let traj =
            propagate_unitary_fixed(&ground(), &mirrored, RampDirection::Expand, 16).unwrap();
        let w = work_integral(&traj, &mirrored, RampDirection::Expand).unwrap();
        assert!((w + 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_ramp_does_no_work() {
        let p = ModelParams {
            b_high: 1.0,
            delta1: 0.5,
            g: 0.5,
            ..Default::default()
        };
        let traj = propagate_unitary_fixed(&ground(), &p, RampDirection::Compress, 16).unwrap();
        assert_eq!(
            work_integral(&traj, &p, RampDirection::Compress).unwrap(),
            0.0
        );
    }

    #[test]
    fn work_integral_checks_direction() {
        let p = ModelParams::default();
        let traj = propagate_unitary_fixed(&ground(), &p, RampDirection::Expand, 8).unwrap();
        assert!(work_integral(&traj, &p, RampDirection::Compress).is_err());
    }

    #[test]
    fn spectrum_of_state_is_preserved() {
        let p = ModelParams {
            g: 0.75,
            delta1: 1.0,
            delta2: 0.5,
            ..Default::default()
        };
        let mixed = crate::qops::gibbs_state(&ModelOperators::new(&p).h_tot(0.3), 2.0).unwrap();
        let traj = propagate_unitary_fixed(&mixed, &p, RampDirection::Expand, 64).unwrap();
        let s0: f64 = von_neumann_entropy(&mixed).unwrap();
        for s in traj.states() {
            assert!((von_neumann_entropy(s).unwrap() - s0).abs() < 1e-10);
        }
    }

    #[test]
    fn refined_stroke_converges() {
        let p = ModelParams {
            g: 0.75,
            delta2: 0.5,
            ..Default::default()
        };
        let traj = propagate_unitary(&ground(), &p, RampDirection::Expand).unwrap();
        assert!(traj.refinement_error.unwrap() <= 1e-8);
        assert!(traj.n_steps() > p.n_steps);
    }

    #[test]
    fn refinement_cap_is_reported() {
        let p = ModelParams {
            g: 0.75,
            delta1: 1.0,
            n_steps: 2,
            max_steps: 4,
            ..Default::default()
        };
        let err = propagate_unitary(&ground(), &p, RampDirection::Expand).unwrap_err();
        assert!(matches!(err, OttoError::Integration { .. }));
    }

    #[test]
    fn ramp_propagator_matches_state_evolution() {
        let p = ModelParams {
            g: 0.75,
            delta1: 1.0,
            ..Default::default()
        };
        let u = ramp_propagator(&p, RampDirection::Compress, 40).unwrap();
        let rho = propagate_unitary_fixed(&ground(), &p, RampDirection::Compress, 40).unwrap();
        assert!(
            ground()
                .evolve(&u)
                .rho()
                .max_abs_diff(rho.final_state().rho())
                < 1e-12
        );
    }
}
