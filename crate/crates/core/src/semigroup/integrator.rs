//! Dormand–Prince 5(4) with PI step-size control.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Autonomous right-hand side `dx = f(x)`.
pub(crate) trait Rhs {
    fn eval(&self, x: &[f64], dx: &mut [f64]);
}

impl<F: Fn(&[f64], &mut [f64])> Rhs for F {
    fn eval(&self, x: &[f64], dx: &mut [f64]) {
        self(x, dx)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrator state. The stage buffers follow the state dimension; after the
/// system changes shape the
/// `after_step` hook of [`Dopri5::advance`] reports it.
pub(crate) struct Dopri5 {
    rtol: f64,
    atol: f64,
    h: Option<f64>,
    fac_old: f64,
    last_rejected: bool,
    fsal_valid: bool,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    pub stats: StepStats,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h: None,
            fac_old: 1e-4,
            last_rejected: false,
            fsal_valid: false,
            k: Default::default(),
            tmp: Vec::new(),
            y_new: Vec::new(),
            stats: StepStats::default(),
        }
    }

    fn resize(&mut self, n: usize) {
        if self.tmp.len() != n {
            for k in &mut self.k {
                k.resize(n, 0.0);
            }
            self.tmp.resize(n, 0.0);
            self.y_new.resize(n, 0.0);
            self.fsal_valid = false;
        }
    }

    fn initial_step<F: Rhs>(&mut self, f: &F, y: &[f64], span: f64) -> f64 {
        let n = y.len().max(1) as f64;
        let f0 = &self.k[0];
        let (mut dny, mut dnf) = (0.0, 0.0);
        for (yi, fi) in y.iter().zip(f0) {
            let sk = self.atol + self.rtol * yi.abs();
            dny += (yi / sk).powi(2);
            dnf += (fi / sk).powi(2);
        }
        let (dny, dnf) = ((dny / n).sqrt(), (dnf / n).sqrt());
        let mut h = if dny <= 1e-10 || dnf <= 1e-10 {
            1e-6
        } else {
            0.01 * dny / dnf
        };
        h = h.min(span);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * f0[i];
        }
        f.eval(&self.tmp, &mut self.k[1]);
        let mut der2 = 0.0;
        for i in 0..y.len() {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.abs().max(dnf);
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(span)
    }

    /// Advance `y` from `*t` to exactly `t_end` with adaptive steps.
    ///
    /// `after_step` runs after every accepted step and may modify the state
    /// (for example to enlarge the domain); returning `true` signals that the
    /// system changed shape.
    pub fn advance<F, G>(
        &mut self,
        f: &mut F,
        y: &mut Vec<f64>,
        t: &mut f64,
        t_end: f64,
        mut after_step: G,
    ) -> Result<()>
    where
        F: Rhs,
        G: FnMut(&mut F, &mut Vec<f64>, f64) -> Result<bool>,
    {
        while *t < t_end {
            self.resize(y.len());
            if !self.fsal_valid {
                f.eval(y, &mut self.k[0]);
                self.fsal_valid = true;
            }
            let span = t_end - *t;
            let h_prop = match self.h {
                Some(h) => h,
                None => self.initial_step(f, y, span),
            };
            let clamped = h_prop >= span * (1.0 - 1e-12);
            let h = if clamped { span } else { h_prop };
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: *t });
            }
            let err = self.try_step(f, y, h);
            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / self.fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.fac_old = err.max(1e-4);
                self.last_rejected = false;
                self.stats.accepted += 1;
                std::mem::swap(y, &mut self.y_new);
                self.k.swap(0, 6);
                *t = if clamped { t_end } else { *t + h };
                // a short clamped step says nothing about the natural step size
                self.h = Some(if clamped { h_new.max(h_prop) } else { h_new });
                if after_step(f, y, *t)? {
                    self.resize(y.len());
                    self.fsal_valid = false;
                }
            } else {
                let h_new = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                self.last_rejected = true;
                self.stats.rejected += 1;
                self.h = Some(h_new);
            }
        }
        Ok(())
    }

    /// One trial step of size `h`; the result lands in `y_new`, the stage
    /// derivative at `y_new` in `k[6]`. Returns the scaled error norm.
    fn try_step<F: Rhs>(&mut self, f: &F, y: &[f64], h: f64) -> f64 {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f.eval(tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f.eval(tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f.eval(tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f.eval(tmp, k5);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f.eval(tmp, k6);
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f.eval(y_new, k7);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sc);
        }
        err
    }
}
