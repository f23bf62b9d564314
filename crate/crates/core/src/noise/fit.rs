use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    /// `C exp(-t / tau)`
    Exponential,
    /// `C exp(-(t / tau)^2)`
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub tau: f64,
    pub tau_std_error: f64,
    pub contrast: f64,
    pub contrast_std_error: f64,
    pub kind: DecayKind,
}

fn model(kind: DecayKind, t: f64, c: f64, tau: f64) -> (f64, [f64; 2]) {
    let x = t / tau;
    match kind {
        DecayKind::Exponential => {
            let e = (-x).exp();
            (c * e, [e, c * e * x / tau])
        }
        DecayKind::Gaussian => {
            let e = (-x * x).exp();
            (c * e, [e, c * e * 2.0 * x * x / tau])
        }
    }
}

/// Levenberg-Marquardt least squares of a decaying envelope; standard errors
/// from the residual variance and the Gauss-Newton covariance.
pub fn fit_decay(times: &[f64], values: &[f64], kind: DecayKind) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 4 {
        return Err(Error::Fit("decay fit needs at least four matching points".into()));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Fit("values must be probabilities and times non-negative".into()));
    }
    // log-linear starting point on the positive samples
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 1e-6)
        .map(|(t, v)| (if kind == DecayKind::Gaussian { t * t } else { *t }, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit("too few positive samples".into()));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let span = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    if !(slope < 0.0) || !(-slope * span > 1e-6) {
        return Err(Error::Fit("data show no decay".into()));
    }
    let mut p = Vector2::new((my - slope * mx).exp(), if kind == DecayKind::Gaussian { (-1.0 / slope).sqrt() } else { -1.0 / slope });

    let residuals = |p: &Vector2<f64>| -> f64 {
        times.iter().zip(values).map(|(t, v)| (v - model(kind, *t, p[0], p[1]).0).powi(2)).sum()
    };
    let normal = |p: &Vector2<f64>| -> (Matrix2<f64>, Vector2<f64>) {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (t, v) in times.iter().zip(values) {
            let (f, g) = model(kind, *t, p[0], p[1]);
            let g = Vector2::new(g[0], g[1]);
            jtj += g * g.transpose();
            jtr += g * (v - f);
        }
        (jtj, jtr)
    };
    let mut lambda = 1e-3;
    let mut rss = residuals(&p);
    for _ in 0..500 {
        let (jtj, jtr) = normal(&p);
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj;
            a[(0, 0)] *= 1.0 + lambda;
            a[(1, 1)] *= 1.0 + lambda;
            let Some(step) = a.lu().solve(&jtr) else { break };
            let trial = p + step;
            if trial[1] > 0.0 {
                let r = residuals(&trial);
                if r <= rss {
                    let converged = (rss - r) <= 1e-16 * rss.max(1e-300) || step.norm() <= 1e-14 * trial.norm();
                    p = trial;
                    rss = r;
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    if converged {
                        lambda = -1.0;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted || lambda < 0.0 || rss == 0.0 {
            break;
        }
    }
    if !(p[1].is_finite() && p[1] > 0.0) {
        return Err(Error::Fit("fitted time constant is not positive".into()));
    }
    let (jtj, _) = normal(&p);
    let dof = (times.len() - 2) as f64;
    let cov = jtj.try_inverse().ok_or_else(|| Error::Fit("singular fit covariance".into()))? * (rss / dof);
    Ok(DecayFit {
        tau: p[1],
        tau_std_error: cov[(1, 1)].max(0.0).sqrt(),
        contrast: p[0],
        contrast_std_error: cov[(0, 0)].max(0.0).sqrt(),
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let t: Vec<f64> = (0..12).map(|i| i as f64 * 0.5e-3).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.97 * (-t / 4e-3).exp()).collect();
        let f = fit_decay(&t, &y, DecayKind::Exponential).unwrap();
        assert!((f.tau - 4e-3).abs() < 1e-12);
        assert!((f.contrast - 0.97).abs() < 1e-10);
    }

    #[test]
    fn exact_gaussian() {
        let t: Vec<f64> = (0..12).map(|i| i as f64 * 0.3e-3).collect();
        let y: Vec<f64> = t.iter().map(|t| (-(t / 2e-3f64).powi(2)).exp()).collect();
        let f = fit_decay(&t, &y, DecayKind::Gaussian).unwrap();
        assert!((f.tau - 2e-3).abs() < 1e-12);
    }

    #[test]
    fn rejects_flat_and_short() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(fit_decay(&t, &[0.5; 5], DecayKind::Exponential).is_err());
        assert!(fit_decay(&t[..3], &[0.5, 0.4, 0.3], DecayKind::Exponential).is_err());
        assert!(fit_decay(&t, &[0.1, 0.2, 0.3, 0.4, 0.5], DecayKind::Exponential).is_err());
    }
}
