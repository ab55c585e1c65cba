//! Extended phase graph simulation of an inversion-prepared FISP train.
//!
//! States are kept as `(F+_n, F-_n, Z_n)` for `n = 0..cap`. Each TR applies
//! the RF rotation, relaxation up to the echo (where `F+_0` is sampled), the
//! remaining relaxation, and one unit of gradient dephasing (state shift).

use crate::sequence::SequenceSchedule;
use crate::{Error, Result, C64};

/// Default cap on the number of dephasing orders tracked.
pub const DEFAULT_MAX_STATES: usize = 101;

#[derive(Clone, Copy, Debug)]
pub struct EpgSimulator {
    /// Maximum number of configuration states; the effective cap is
    /// `min(L + 1, max_states)`.
    pub max_states: usize,
    /// Apply the 180 degree inversion before the train.
    pub inversion: bool,
}

impl Default for EpgSimulator {
    fn default() -> Self {
        EpgSimulator {
            max_states: DEFAULT_MAX_STATES,
            inversion: true,
        }
    }
}

impl EpgSimulator {
    /// Simulates the echo train for one tissue with equilibrium magnetization `m0`.
    pub fn simulate(&self, schedule: &SequenceSchedule, t1: f64, t2: f64, m0: f64) -> Result<Vec<C64>> {
        if !(t2 > 0.0) || !t1.is_finite() || !t2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "relaxation times must be positive and finite (T1={t1}, T2={t2})"
            )));
        }
        if t1 < t2 {
            return Err(Error::NonPhysical { t1, t2 });
        }
        let len = schedule.len();
        let cap = (len + 1).min(self.max_states.max(1));
        let mut fp = vec![C64::new(0.0, 0.0); cap];
        let mut fm = vec![C64::new(0.0, 0.0); cap];
        let mut z = vec![C64::new(0.0, 0.0); cap];

        z[0] = C64::new(m0, 0.0);
        if self.inversion {
            z[0] = -z[0];
            let e1 = (-schedule.ti_ms / t1).exp();
            z[0] = z[0] * e1 + m0 * (1.0 - e1);
        }

        let te = schedule.te_ms;
        let mut signal = Vec::with_capacity(len);
        for t in 0..len {
            let active = (t + 1).min(cap);
            rotate(&mut fp[..active], &mut fm[..active], &mut z[..active], schedule.flip_deg[t].to_radians());
            relax(&mut fp[..active], &mut fm[..active], &mut z[..active], te, t1, t2, m0);
            signal.push(fp[0]);
            let rest = schedule.tr_ms[t] - te;
            relax(&mut fp[..active], &mut fm[..active], &mut z[..active], rest, t1, t2, m0);
            shift(&mut fp, &mut fm, (active + 1).min(cap));
        }
        Ok(signal)
    }
}

/// Fingerprint of `(t1, t2)` for unit equilibrium magnetization.
pub fn epg_fingerprint(schedule: &SequenceSchedule, t1: f64, t2: f64) -> Result<Vec<C64>> {
    EpgSimulator::default().simulate(schedule, t1, t2, 1.0)
}

fn rotate(fp: &mut [C64], fm: &mut [C64], z: &mut [C64], alpha: f64) {
    if alpha == 0.0 {
        return;
    }
    let c2 = (alpha / 2.0).cos().powi(2);
    let s2 = (alpha / 2.0).sin().powi(2);
    let sa = alpha.sin();
    let ca = alpha.cos();
    let i = C64::i();
    for n in 0..fp.len() {
        let (p, m, l) = (fp[n], fm[n], z[n]);
        fp[n] = p * c2 + m * s2 - i * sa * l;
        fm[n] = p * s2 + m * c2 + i * sa * l;
        z[n] = (m - p) * (i * 0.5 * sa) + l * ca;
    }
}

fn relax(fp: &mut [C64], fm: &mut [C64], z: &mut [C64], dt: f64, t1: f64, t2: f64, m0: f64) {
    if dt <= 0.0 {
        return;
    }
    let e1 = (-dt / t1).exp();
    let e2 = (-dt / t2).exp();
    for v in fp.iter_mut().chain(fm.iter_mut()) {
        *v *= e2;
    }
    for v in z.iter_mut() {
        *v *= e1;
    }
    z[0] += m0 * (1.0 - e1);
}

/// One unit of dephasing over the first `active` states.
fn shift(fp: &mut [C64], fm: &mut [C64], active: usize) {
    for n in (1..active).rev() {
        fp[n] = fp[n - 1];
    }
    for n in 0..active - 1 {
        fm[n] = fm[n + 1];
    }
    fm[active - 1] = C64::new(0.0, 0.0);
    fp[0] = fm[0].conj();
}
