//! Crank–Nicolson time stepping of `G dΦ/dt = K Φ`, energy and dissipation
//! ledgers, and exponential decay fits.
//!
//! With `E = ‖Φ‖²_G` the semidiscrete energy law is `dE/dt = −2 D(Φ)`, where
//! `D` is the viscous and drag dissipation. The records keep `∫ D` as is, so
//! the balance reads `E(0) − E(t) = 2 ∫₀ᵗ D`.

use serde::{Deserialize, Serialize};

use crate::error::{FsiError, Result};
use crate::fields::StateVector;
use crate::generator::OperatorPair;
use crate::linalg::{CsrMatrix, Factorization, C64, ONE};

/// One factorization of `G − (dt/2)K`, reused for every step of a run.
pub struct Stepper<'a> {
    pair: &'a OperatorPair,
    pub dt: f64,
    lhs: Factorization,
    rhs: CsrMatrix,
}

impl<'a> Stepper<'a> {
    pub fn new(pair: &'a OperatorPair, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FsiError::Parameters(format!("time step must be positive, got {dt}")));
        }
        let half = 0.5 * dt;
        let lhs = Factorization::new(ONE, &pair.g, C64::new(-half, 0.0), &pair.k)?;
        let rhs = CsrMatrix::lin_comb(1.0, &pair.g, half, &pair.k);
        Ok(Self { pair, dt, lhs, rhs })
    }

    /// One step on reduced coordinates.
    pub fn advance(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.lhs.solve(&self.rhs.matvec(x))
    }

    pub fn pair(&self) -> &OperatorPair {
        self.pair
    }
}

/// One Crank–Nicolson step of a full state.
pub fn step(pair: &OperatorPair, s: &StateVector, dt: f64) -> Result<StateVector> {
    let x = pair.restrict(s)?;
    let y = Stepper::new(pair, dt)?.advance(&x)?;
    Ok(pair.extend(&y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `‖Φ(t)‖²_G`.
    pub energies: Vec<f64>,
    /// Running trapezoidal `∫₀ᵗ D(Φ) ds`.
    pub dissipation_integral: Vec<f64>,
    /// `|(Φ(t), Φ₀)_G|`.
    pub complement_defect: Vec<f64>,
    /// Reduced coordinates at the final time.
    #[serde(skip)]
    pub final_state: Vec<C64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `|E(0) − E(T) − 2∫D| / E(0)`; zero for the zero trajectory.
    pub fn energy_balance_residual(&self) -> f64 {
        let (Some(&e0), Some(&et), Some(&d)) = (
            self.energies.first(),
            self.energies.last(),
            self.dissipation_integral.last(),
        ) else {
            return 0.0;
        };
        if e0 == 0.0 {
            return (et + 2.0 * d).abs();
        }
        (e0 - et - 2.0 * d).abs() / e0
    }

    /// Whether every step kept or lowered the energy, allowing round-off of
    /// relative size `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        self.energies.windows(2).all(|w| w[1] <= w[0] + tol * e0)
    }

    pub fn max_complement_defect(&self) -> f64 {
        self.complement_defect.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// CSV with columns `t,energy,dissipation_integral,complement_defect`.
    pub fn to_csv(&self) -> String {
        use crate::output::fmt_f64;
        let mut out = String::from("t,energy,dissipation_integral,complement_defect\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(self.times[i]),
                fmt_f64(self.energies[i]),
                fmt_f64(self.dissipation_integral[i]),
                fmt_f64(self.complement_defect[i])
            ));
        }
        out
    }
}

/// Integrates a full state over `[0, t_end]`.
pub fn simulate(pair: &OperatorPair, init: &StateVector, t_end: f64, dt: f64) -> Result<TrajectoryRecord> {
    let x = pair.restrict(init)?;
    simulate_reduced(pair, &x, t_end, dt)
}

/// Integrates reduced coordinates over `[0, t_end]` with `round(t_end/dt)`
/// steps of size `dt`.
pub fn simulate_reduced(pair: &OperatorPair, init: &[C64], t_end: f64, dt: f64) -> Result<TrajectoryRecord> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(FsiError::Parameters(format!("final time must be positive, got {t_end}")));
    }
    crate::error::check_len("initial state", pair.dim(), init.len())?;
    let stepper = Stepper::new(pair, dt)?;
    let n_steps = ((t_end / dt).round() as usize).max(1);

    let mut x = init.to_vec();
    let mut d_prev = pair.dissipation_reduced(&x);
    let mut rec = TrajectoryRecord {
        dt,
        times: vec![0.0],
        energies: vec![pair.inner(&x, &x).re],
        dissipation_integral: vec![0.0],
        complement_defect: vec![pair.null_component(&x).norm()],
        final_state: Vec::new(),
    };
    for n in 1..=n_steps {
        x = stepper.advance(&x)?;
        if !crate::linalg::is_finite(&x) {
            return Err(FsiError::Solver(format!("non-finite state after step {n}")));
        }
        let d = pair.dissipation_reduced(&x);
        let acc = rec.dissipation_integral[n - 1] + 0.5 * dt * (d_prev + d);
        d_prev = d;
        rec.times.push(n as f64 * dt);
        rec.energies.push(pair.inner(&x, &x).re);
        rec.dissipation_integral.push(acc);
        rec.complement_defect.push(pair.null_component(&x).norm());
    }
    rec.final_state = x;
    Ok(rec)
}

/// Runs the flow for time `t` with a fine step `dt` and rescales the result
/// to unit energy. Fast viscous transients of rough data are gone afterwards,
/// so coarse-step studies see the smooth part of the dynamics only.
pub fn settle(pair: &OperatorPair, init: &[C64], t: f64, dt: f64) -> Result<Vec<C64>> {
    let mut x = simulate_reduced(pair, init, t, dt)?.final_state;
    let n = pair.norm(&x);
    if n == 0.0 {
        return Err(FsiError::Degenerate("state decayed to zero while settling".into()));
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(x)
}

/// Fit of `E(t) ≈ M² e^{−2δt}` on a tail window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub m: f64,
    pub delta: f64,
    pub r_squared: f64,
    /// Start of the fit window.
    pub t_start: f64,
    pub n_points: usize,
}

/// Least-squares line through `(t, ln E)` over the last `window` fraction of
/// the time range.
pub fn fit_decay(rec: &TrajectoryRecord, window: f64) -> Result<DecayFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(FsiError::Parameters(format!("fit window must lie in (0, 1], got {window}")));
    }
    let (Some(&t0), Some(&t1)) = (rec.times.first(), rec.times.last()) else {
        return Err(FsiError::Degenerate("empty trajectory".into()));
    };
    let t_start = t1 - window * (t1 - t0);
    let pts: Vec<(f64, f64)> = rec
        .times
        .iter()
        .zip(&rec.energies)
        .filter(|(t, _)| **t >= t_start - 1e-12 * t1.abs().max(1.0))
        .map(|(&t, &e)| (t, e))
        .collect();
    if pts.len() < 3 {
        return Err(FsiError::Degenerate(format!("fit window holds only {} points", pts.len())));
    }
    if let Some((t, e)) = pts.iter().find(|(_, e)| !(e.is_finite() && *e > f64::MIN_POSITIVE)) {
        return Err(FsiError::Degenerate(format!("energy {e:e} at t = {t} cannot be fitted")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, e) in &pts {
        let (dt, dy) = (t - mt, e.ln() - my);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(FsiError::Degenerate("fit window has zero width".into()));
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let r_squared = if syy == 0.0 { 1.0 } else { (sty * sty / (stt * syy)).clamp(0.0, 1.0) };
    Ok(DecayFit {
        m: (0.5 * intercept).exp(),
        delta: -0.5 * slope,
        r_squared,
        t_start,
        n_points: pts.len(),
    })
}
