use ecdm::inference::{Analysis, TestOutcome};
use ecdm::PairedSample;
use serde::Serialize;

use crate::Failure;

/// Six significant digits, `%g` style.
pub fn g6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub t_hat: f64,
    pub w1: f64,
    pub w2: f64,
    pub delta_scale: f64,
    pub u_n: f64,
    pub test: TestOutcome,
    pub kappa: Option<f64>,
    pub kappa_threshold: f64,
    pub kappa_small: bool,
    pub rv: f64,
    pub rv_clamped: f64,
}

impl Report {
    pub fn from_analysis(sample: &PairedSample, a: &Analysis) -> Self {
        Self {
            n: sample.n(),
            p1: sample.p1(),
            p2: sample.p2(),
            t_hat: a.bundle.t_hat,
            w1: a.bundle.w1,
            w2: a.bundle.w2,
            delta_scale: a.bundle.delta_scale,
            u_n: a.bundle.u_n,
            test: a.test,
            kappa: a.diagnostics.kappa,
            kappa_threshold: a.diagnostics.kappa_threshold,
            kappa_small: a.diagnostics.kappa_small,
            rv: a.diagnostics.rv,
            rv_clamped: a.diagnostics.rv_clamped,
        }
    }

    pub fn check_finite(&self) -> Result<(), Failure> {
        let t = &self.test;
        let values = [
            self.t_hat,
            self.w1,
            self.w2,
            self.delta_scale,
            t.statistic,
            t.critical_value,
            t.p_value,
            t.ci.lower,
            t.ci.upper,
            self.rv,
            self.kappa.unwrap_or(0.0),
        ];
        if values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Failure::input("non-finite value in report; check the input scale"))
        }
    }

    pub fn text(&self) -> String {
        let t = &self.test;
        let kappa = match self.kappa {
            Some(k) => format!(
                "{} ({} threshold {})",
                g6(k),
                if self.kappa_small { "below" } else { "not below" },
                g6(self.kappa_threshold)
            ),
            None => "undefined (T_n = 0)".to_string(),
        };
        format!(
            "n = {}, p1 = {}, p2 = {}\n\
             T_n = {}\n\
             W_1n = {}\n\
             W_2n = {}\n\
             delta_hat = {}\n\
             statistic T_n/delta_hat = {}\n\
             z_alpha (alpha = {}) = {}\n\
             p-value = {}\n\
             reject H0 = {}\n\
             CI({}%) for Delta = [{}, {}]{}\n\
             kappa_hat = {}\n\
             rv_hat = {}\n",
            self.n,
            self.p1,
            self.p2,
            g6(self.t_hat),
            g6(self.w1),
            g6(self.w2),
            g6(self.delta_scale),
            g6(t.statistic),
            g6(t.alpha),
            g6(t.critical_value),
            g6(t.p_value),
            t.reject,
            g6(100.0 * (1.0 - t.alpha)),
            g6(t.ci.lower),
            g6(t.ci.upper),
            if t.ci.degenerate { " (degenerate)" } else { "" },
            kappa,
            g6(self.rv),
        )
    }
}
