//! The Helmholtz point-vortex system
//!
//!   dp_m/dt = Σ_{l≠m} (γ_l / 2π) (p_m - p_l)^⊥ / |p_m - p_l|²,
//!
//! integrated with fixed-step classical RK4 and a close-approach guard.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::kernel::{biot_savart, BlobSpec};
use crate::vector::PlaneVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexConfiguration {
    positions: Vec<PlaneVector>,
    gammas: Vec<f64>,
}

impl VortexConfiguration {
    pub fn new(positions: Vec<PlaneVector>, gammas: Vec<f64>) -> Result<Self> {
        if positions.len() != gammas.len() {
            return Err(Error::Invalid(format!(
                "{} positions but {} circulations",
                positions.len(),
                gammas.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) || gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("vortex configuration"));
        }
        if let Some(&g) = gammas.iter().find(|g| **g == 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: g,
                reason: "point vortex circulations must be nonzero",
            });
        }
        check_distinct(&positions)?;
        Ok(VortexConfiguration { positions, gammas })
    }

    pub fn positions(&self) -> &[PlaneVector] {
        &self.positions
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same circulations, new positions (validated).
    pub fn with_positions(&self, positions: Vec<PlaneVector>) -> Result<Self> {
        VortexConfiguration::new(positions, self.gammas.clone())
    }

    pub fn total_circulation(&self) -> f64 {
        self.gammas.iter().sum()
    }
}

fn check_distinct(positions: &[PlaneVector]) -> Result<()> {
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if positions[i] == positions[j] {
                return Err(Error::Coincident { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Smallest pairwise distance; infinite for fewer than two points.
pub fn min_pairwise_distance(positions: &[PlaneVector]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            best = best.min(positions[i].distance(positions[j]));
        }
    }
    best
}

/// Velocity of each vortex induced by all the others through `kernel`.
pub fn rhs_with_kernel(
    positions: &[PlaneVector],
    gammas: &[f64],
    kernel: BlobSpec,
) -> Result<Vec<PlaneVector>> {
    let m = positions.len();
    let mut out = vec![PlaneVector::ZERO; m];
    for (i, out_i) in out.iter_mut().enumerate() {
        for l in 0..m {
            if l == i {
                continue;
            }
            let k = biot_savart(positions[i] - positions[l], kernel).map_err(|e| match e {
                Error::SingularAtOrigin => Error::Coincident { first: i, second: l },
                other => other,
            })?;
            *out_i += k * gammas[l];
        }
    }
    Ok(out)
}

/// Right-hand side of the Helmholtz system.
pub fn helmholtz_rhs(config: &VortexConfiguration) -> Result<Vec<PlaneVector>> {
    rhs_with_kernel(&config.positions, &config.gammas, BlobSpec::singular())
}

/// One classical RK4 step of size `dt` (any sign).
pub fn rk4_step(
    positions: &[PlaneVector],
    gammas: &[f64],
    dt: f64,
    kernel: BlobSpec,
) -> Result<Vec<PlaneVector>> {
    let shifted = |base: &[PlaneVector], k: &[PlaneVector], h: f64| -> Vec<PlaneVector> {
        base.iter().zip(k).map(|(p, v)| *p + *v * h).collect()
    };
    let k1 = rhs_with_kernel(positions, gammas, kernel)?;
    let k2 = rhs_with_kernel(&shifted(positions, &k1, 0.5 * dt), gammas, kernel)?;
    let k3 = rhs_with_kernel(&shifted(positions, &k2, 0.5 * dt), gammas, kernel)?;
    let k4 = rhs_with_kernel(&shifted(positions, &k3, dt), gammas, kernel)?;
    Ok(rk4_combine(positions, &k1, &k2, &k3, &k4, dt))
}

/// x + dt/6 (k1 + 2 k2 + 2 k3 + k4), shared by every RK4 stepper in the crate.
pub(crate) fn rk4_combine(
    x: &[PlaneVector],
    k1: &[PlaneVector],
    k2: &[PlaneVector],
    k3: &[PlaneVector],
    k4: &[PlaneVector],
    dt: f64,
) -> Vec<PlaneVector> {
    let sixth = dt / 6.0;
    (0..x.len())
        .map(|i| x[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth)
        .collect()
}

/// Times 0, dt, 2dt, ... up to `t_end`, the last step shortened to land on
/// `t_end` exactly.
pub fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let ratio = t_end / dt;
    let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let mut times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    times.push(t_end);
    times
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    pub min_separation: f64,
}

impl IntegratorSpec {
    pub fn new(dt: f64, t_end: f64, min_separation: f64) -> Result<Self> {
        let spec = IntegratorSpec {
            dt,
            t_end,
            min_separation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_param(self.dt > 0.0 && self.dt.is_finite(), "dt", self.dt, "must be positive")?;
        check_param(self.t_end >= 0.0 && self.t_end.is_finite(), "t_end", self.t_end, "must be nonnegative")?;
        check_param(
            self.min_separation > 0.0 && self.min_separation.is_finite(),
            "min_separation",
            self.min_separation,
            "must be positive",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    /// Two vortices came closer than the configured minimum separation.
    CollapseGuard { time: f64, min_distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<PlaneVector>>,
    pub gammas: Vec<f64>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn final_positions(&self) -> &[PlaneVector] {
        self.states.last().map(|s| s.as_slice()).unwrap_or(&[])
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn configuration(&self, k: usize) -> Result<VortexConfiguration> {
        VortexConfiguration::new(self.states[k].clone(), self.gammas.clone())
    }
}

/// Integrates the Helmholtz system with RK4.
pub fn integrate(config: &VortexConfiguration, spec: IntegratorSpec) -> Result<Trajectory> {
    integrate_with_kernel(config, spec, BlobSpec::singular())
}

/// Integrates the vortex system with an arbitrary (singular or blob) kernel.
pub fn integrate_with_kernel(
    config: &VortexConfiguration,
    spec: IntegratorSpec,
    kernel: BlobSpec,
) -> Result<Trajectory> {
    spec.validate()?;
    let grid = time_grid(spec.t_end, spec.dt);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![config.positions.clone()],
        gammas: config.gammas.clone(),
        stop: StopReason::Completed,
    };
    let d0 = min_pairwise_distance(&config.positions);
    if d0 < spec.min_separation {
        traj.stop = StopReason::CollapseGuard {
            time: 0.0,
            min_distance: d0,
        };
        return Ok(traj);
    }
    let mut state = config.positions.clone();
    for (k, w) in grid.windows(2).enumerate() {
        let h = w[1] - w[0];
        state = rk4_step(&state, &config.gammas, h, kernel)?;
        if state.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteState { step: k + 1, time: w[1] });
        }
        traj.times.push(w[1]);
        traj.states.push(state.clone());
        let d = min_pairwise_distance(&state);
        if d < spec.min_separation {
            traj.stop = StopReason::CollapseGuard {
                time: w[1],
                min_distance: d,
            };
            break;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Center {
    /// (Σ γ_m p_m) / (Σ γ_m), defined when the total circulation is nonzero.
    Vorticity(PlaneVector),
    /// Σ γ_m p_m, reported when the total circulation vanishes.
    LinearImpulse(PlaneVector),
}

impl Center {
    pub fn value(&self) -> PlaneVector {
        match *self {
            Center::Vorticity(p) | Center::LinearImpulse(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub hamiltonian: f64,
    pub center: Center,
    pub angular_impulse: f64,
    pub total_circulation: f64,
}

/// Kirchhoff invariants of a point-vortex configuration.
pub fn conserved_quantities(config: &VortexConfiguration) -> Result<ConservedQuantities> {
    let p = &config.positions;
    let g = &config.gammas;
    let mut hamiltonian = 0.0;
    for m in 0..p.len() {
        for l in 0..p.len() {
            if m == l {
                continue;
            }
            let d = p[m].distance(p[l]);
            if d == 0.0 {
                return Err(Error::Coincident { first: m, second: l });
            }
            hamiltonian += g[m] * g[l] * d.ln();
        }
    }
    hamiltonian *= -1.0 / (4.0 * PI);
    let total_circulation: f64 = g.iter().sum();
    let impulse = p
        .iter()
        .zip(g)
        .fold(PlaneVector::ZERO, |acc, (p, g)| acc + *p * *g);
    let center = if total_circulation != 0.0 {
        Center::Vorticity(impulse * (1.0 / total_circulation))
    } else {
        Center::LinearImpulse(impulse)
    };
    let angular_impulse = p.iter().zip(g).map(|(p, g)| g * p.norm_sq()).sum();
    Ok(ConservedQuantities {
        hamiltonian,
        center,
        angular_impulse,
        total_circulation,
    })
}

/// Scale used to turn Hamiltonian drift into a relative number:
/// max(|H|, (1/4π) Σ_{m≠l} |γ_m γ_l|). The Hamiltonian of two vortices at
/// unit distance is zero, so |H| alone cannot serve as the denominator.
pub fn hamiltonian_scale(config: &VortexConfiguration, h: f64) -> f64 {
    let g = &config.gammas;
    let mut s = 0.0;
    for m in 0..g.len() {
        for l in 0..g.len() {
            if m != l {
                s += (g[m] * g[l]).abs();
            }
        }
    }
    h.abs().max(s / (4.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(x: f64, y: f64) -> PlaneVector {
        PlaneVector::new(x, y)
    }

    fn opposite_pair() -> VortexConfiguration {
        VortexConfiguration::new(vec![v(0.0, 0.5), v(0.0, -0.5)], vec![2.0 * PI, -2.0 * PI]).unwrap()
    }

    fn corotating_pair() -> VortexConfiguration {
        VortexConfiguration::new(vec![v(0.5, 0.0), v(-0.5, 0.0)], vec![2.0 * PI, 2.0 * PI]).unwrap()
    }

    #[test]
    fn single_vortex_is_stationary() {
        let c = VortexConfiguration::new(vec![v(0.3, -1.0)], vec![1.7]).unwrap();
        assert_eq!(helmholtz_rhs(&c).unwrap(), vec![PlaneVector::ZERO]);
        let traj = integrate(&c, IntegratorSpec::new(0.01, 2.0, 1e-6).unwrap()).unwrap();
        assert!(traj.states.iter().all(|s| s[0] == v(0.3, -1.0)));
        assert_eq!(traj.stop, StopReason::Completed);
    }

    #[test]
    fn opposite_pair_translates() {
        let rhs = helmholtz_rhs(&opposite_pair()).unwrap();
        for u in rhs {
            assert_abs_diff_eq!(u.x, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(u.y, 0.0, epsilon = 1e-15);
        }
        let traj = integrate(&opposite_pair(), IntegratorSpec::new(1e-3, 1.0, 1e-3).unwrap()).unwrap();
        let end = traj.final_positions();
        assert!((end[0] - v(1.0, 0.5)).norm() < 1e-6);
        assert!((end[1] - v(1.0, -0.5)).norm() < 1e-6);
        assert_eq!(traj.times.len(), 1001);
    }

    #[test]
    fn corotating_pair_returns_after_one_period() {
        let rhs = helmholtz_rhs(&corotating_pair()).unwrap();
        assert_abs_diff_eq!(rhs[0].y, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs[1].y, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs[0].x, 0.0, epsilon = 1e-15);
        let traj = integrate(&corotating_pair(), IntegratorSpec::new(1e-3, PI, 1e-3).unwrap()).unwrap();
        assert_abs_diff_eq!(traj.final_time(), PI);
        let end = traj.final_positions();
        assert!((end[0] - v(0.5, 0.0)).norm() < 1e-6);
        assert!((end[1] - v(-0.5, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn conserved_quantity_examples() {
        let c = VortexConfiguration::new(vec![v(2.0, 3.0)], vec![1.5]).unwrap();
        let q = conserved_quantities(&c).unwrap();
        assert_eq!(q.hamiltonian, 0.0);
        assert_eq!(q.center, Center::Vorticity(v(2.0, 3.0)));

        let q = conserved_quantities(&opposite_pair()).unwrap();
        match q.center {
            Center::LinearImpulse(p) => {
                assert_abs_diff_eq!(p.x, 0.0);
                assert_abs_diff_eq!(p.y, 2.0 * PI, epsilon = 1e-15);
            }
            other => panic!("expected linear impulse, got {other:?}"),
        }
        assert_eq!(q.total_circulation, 0.0);

        let q = conserved_quantities(&corotating_pair()).unwrap();
        assert_eq!(q.hamiltonian, 0.0);
        assert_abs_diff_eq!(q.angular_impulse, 2.0 * PI * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn invalid_configurations() {
        assert!(matches!(
            VortexConfiguration::new(vec![v(1.0, 1.0), v(1.0, 1.0)], vec![1.0, 2.0]),
            Err(Error::Coincident { first: 0, second: 1 })
        ));
        assert!(VortexConfiguration::new(vec![v(0.0, 0.0)], vec![0.0]).is_err());
        assert!(VortexConfiguration::new(vec![v(0.0, 0.0)], vec![1.0, 2.0]).is_err());
        assert!(VortexConfiguration::new(vec![v(f64::NAN, 0.0)], vec![1.0]).is_err());
        assert!(IntegratorSpec::new(0.0, 1.0, 0.1).is_err());
        assert!(IntegratorSpec::new(0.1, 1.0, 0.0).is_err());
        assert!(IntegratorSpec::new(0.1, -1.0, 0.1).is_err());
    }

    #[test]
    fn collapse_guard_flags_close_approach() {
        // an opposite pair whose separation is already below the guard
        let c = VortexConfiguration::new(vec![v(0.0, 0.01), v(0.0, -0.01)], vec![1.0, -1.0]).unwrap();
        let traj = integrate(&c, IntegratorSpec::new(1e-3, 1.0, 0.05).unwrap()).unwrap();
        assert!(matches!(traj.stop, StopReason::CollapseGuard { time, .. } if time == 0.0));
        assert_eq!(traj.states.len(), 1);

        // a translating pair running into a weak third vortex
        let c = VortexConfiguration::new(
            vec![v(0.0, 0.5), v(0.0, -0.5), v(3.0, 0.2)],
            vec![2.0 * PI, -2.0 * PI, 0.01],
        )
        .unwrap();
        let traj = integrate(&c, IntegratorSpec::new(1e-3, 5.0, 0.8).unwrap()).unwrap();
        match traj.stop {
            StopReason::CollapseGuard { time, min_distance } => {
                assert!(min_distance < 0.8);
                assert!(time > 0.0 && time < 5.0);
                assert_eq!(traj.final_time(), time);
            }
            StopReason::Completed => panic!("guard did not trip"),
        }
    }

    #[test]
    fn time_grid_lands_on_end() {
        assert_eq!(time_grid(0.0, 0.1), vec![0.0]);
        let g = time_grid(1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = time_grid(1.0, 1e-3);
        assert_eq!(g.len(), 1001);
    }

    fn drift_over_steps(config: &VortexConfiguration, steps: usize, dt: f64) -> (f64, f64, f64) {
        let q0 = conserved_quantities(config).unwrap();
        let traj = integrate(config, IntegratorSpec::new(dt, steps as f64 * dt, 1e-6).unwrap()).unwrap();
        let scale = config
            .positions()
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max);
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..traj.states.len() {
            let q = conserved_quantities(&traj.configuration(k).unwrap()).unwrap();
            let h = (q.hamiltonian - q0.hamiltonian).abs() / hamiltonian_scale(config, q0.hamiltonian);
            let c = (q.center.value() - q0.center.value()).norm()
                / q0.center.value().norm().max(scale * q0.total_circulation.abs().max(config.gammas()[0].abs()));
            let a = (q.angular_impulse - q0.angular_impulse).abs() / q0.angular_impulse.abs().max(f64::MIN_POSITIVE);
            worst = (worst.0.max(h), worst.1.max(c), worst.2.max(a));
        }
        worst
    }

    #[test]
    fn two_vortex_invariants_hold_over_ten_thousand_steps() {
        for config in [opposite_pair(), corotating_pair()] {
            let (h, c, a) = drift_over_steps(&config, 10_000, 1e-3);
            assert!(h <= 1e-8, "hamiltonian drift {h}");
            assert!(c <= 1e-12, "center drift {c}");
            if config.total_circulation() != 0.0 {
                assert!(a <= 1e-8, "angular impulse drift {a}");
            }
        }
    }

    #[test]
    fn time_reversal_recovers_initial_state() {
        for config in [opposite_pair(), corotating_pair()] {
            let dt = 1e-3;
            let mut state = config.positions().to_vec();
            for _ in 0..2000 {
                state = rk4_step(&state, config.gammas(), dt, BlobSpec::singular()).unwrap();
            }
            for _ in 0..2000 {
                state = rk4_step(&state, config.gammas(), -dt, BlobSpec::singular()).unwrap();
            }
            for (a, b) in state.iter().zip(config.positions()) {
                assert!((*a - *b).norm() < 1e-8);
            }
        }
    }

    fn config_strategy() -> impl Strategy<Value = VortexConfiguration> {
        prop::collection::vec(((-5.0..5.0f64, -5.0..5.0f64), 0.1..3.0f64, any::<bool>()), 2..6)
            .prop_filter_map("distinct", |items| {
                let pos: Vec<PlaneVector> = items.iter().map(|((x, y), _, _)| v(*x, *y)).collect();
                let g: Vec<f64> = items.iter().map(|(_, g, s)| if *s { *g } else { -*g }).collect();
                if min_pairwise_distance(&pos) < 0.05 {
                    return None;
                }
                VortexConfiguration::new(pos, g).ok()
            })
    }

    proptest! {
        #[test]
        fn rhs_is_translation_equivariant(c in config_strategy(), sx in -10.0..10.0f64, sy in -10.0..10.0f64) {
            let base = helmholtz_rhs(&c).unwrap();
            let moved = c.with_positions(c.positions().iter().map(|p| *p + v(sx, sy)).collect()).unwrap();
            let shifted = helmholtz_rhs(&moved).unwrap();
            let scale = base.iter().map(|u| u.norm()).fold(0.0, f64::max);
            for (a, b) in base.iter().zip(&shifted) {
                // translation perturbs the differences by rounding of order |shift|·ulp
                prop_assert!((*a - *b).norm() <= 1e-12 * scale.max(1.0));
            }
        }

        #[test]
        fn rhs_is_rotation_equivariant(c in config_strategy(), angle in 0.0..(2.0 * PI)) {
            let base = helmholtz_rhs(&c).unwrap();
            let rotated = c.with_positions(c.positions().iter().map(|p| p.rotate(angle)).collect()).unwrap();
            let turned = helmholtz_rhs(&rotated).unwrap();
            let scale = base.iter().map(|u| u.norm()).fold(0.0, f64::max);
            for (a, b) in base.iter().zip(&turned) {
                prop_assert!((a.rotate(angle) - *b).norm() <= 1e-13 * scale.max(1.0));
            }
        }

        #[test]
        fn rhs_scales_inversely_with_length(c in config_strategy(), lambda in 0.1..10.0f64) {
            let base = helmholtz_rhs(&c).unwrap();
            let scaled = c.with_positions(c.positions().iter().map(|p| *p * lambda).collect()).unwrap();
            let out = helmholtz_rhs(&scaled).unwrap();
            for (a, b) in base.iter().zip(&out) {
                prop_assert!((*a * (1.0 / lambda) - *b).norm() <= 1e-13 * a.norm().max(1e-300) / lambda + 1e-300);
            }
        }
    }
}
