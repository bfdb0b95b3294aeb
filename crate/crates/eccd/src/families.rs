//! Exponential-family models in canonical form.
//!
//! A family is described by its cumulant function F applied to the natural
//! parameter eta, so that E[y] = F'(eta) and Var[y] = F''(eta) * d(tau) for a
//! dispersion d(tau). Working on this scale keeps every downstream formula
//! family-agnostic: gradients need F', curvatures need F'', and the canonical
//! link is inverted by `eta_for_mean`.

use crate::error::{EccdError, Result};
use ndarray::ArrayView1;

/// Supported response distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Bernoulli,
    Poisson,
    Gamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Bernoulli => "bernoulli",
            Family::Poisson => "poisson",
            Family::Gamma => "gamma",
        }
    }
}

/// A family together with its dispersion parameter.
///
/// The dispersion scales the log-likelihood but not the cumulant derivatives;
/// it defaults to 1 for every family (unit variance for Gaussian, unit shape
/// for Gamma, and it is identically 1 for Bernoulli and Poisson).
#[derive(Debug, Clone, Copy)]
pub struct FamilySpec {
    pub kind: Family,
    pub dispersion: f64,
}

impl FamilySpec {
    pub fn new(kind: Family) -> Self {
        FamilySpec { kind, dispersion: 1.0 }
    }

    pub fn with_dispersion(kind: Family, dispersion: f64) -> Result<Self> {
        if !(dispersion > 0.0) || !dispersion.is_finite() {
            return Err(EccdError::Config(format!(
                "dispersion must be a positive finite number, got {dispersion}"
            )));
        }
        Ok(FamilySpec { kind, dispersion })
    }

    /// Cumulant function F(eta).
    pub fn cgf(&self, eta: f64) -> Result<f64> {
        match self.kind {
            Family::Gaussian => Ok(0.5 * eta * eta),
            // log(1 + e^eta) rewritten so neither branch exponentiates a
            // large positive argument.
            Family::Bernoulli => Ok(eta.max(0.0) + (-eta.abs()).exp().ln_1p()),
            Family::Poisson => Ok(eta.exp()),
            Family::Gamma => {
                self.check_gamma_eta(eta)?;
                Ok(-(-eta).ln())
            }
        }
    }

    /// Mean response F'(eta); the inverse of the canonical link.
    pub fn mean(&self, eta: f64) -> Result<f64> {
        match self.kind {
            Family::Gaussian => Ok(eta),
            Family::Bernoulli => Ok(sigmoid(eta)),
            Family::Poisson => Ok(eta.exp()),
            Family::Gamma => {
                self.check_gamma_eta(eta)?;
                Ok(-1.0 / eta)
            }
        }
    }

    /// Curvature F''(eta), the unit-dispersion variance of the response.
    pub fn variance_weight(&self, eta: f64) -> Result<f64> {
        match self.kind {
            Family::Gaussian => Ok(1.0),
            Family::Bernoulli => {
                let m = sigmoid(eta);
                Ok(m * (1.0 - m))
            }
            Family::Poisson => Ok(eta.exp()),
            Family::Gamma => {
                self.check_gamma_eta(eta)?;
                Ok(1.0 / (eta * eta))
            }
        }
    }

    /// Natural parameter with mean `mu`, i.e. the solution of F'(eta) = mu.
    pub fn eta_for_mean(&self, mu: f64) -> Result<f64> {
        match self.kind {
            Family::Gaussian => Ok(mu),
            Family::Bernoulli => {
                if mu > 0.0 && mu < 1.0 {
                    Ok((mu / (1.0 - mu)).ln())
                } else {
                    Err(EccdError::Domain(format!(
                        "bernoulli mean must lie strictly inside (0, 1), got {mu}"
                    )))
                }
            }
            Family::Poisson => {
                if mu > 0.0 {
                    Ok(mu.ln())
                } else {
                    Err(EccdError::Domain(format!("poisson mean must be positive, got {mu}")))
                }
            }
            Family::Gamma => {
                if mu > 0.0 {
                    Ok(-1.0 / mu)
                } else {
                    Err(EccdError::Domain(format!("gamma mean must be positive, got {mu}")))
                }
            }
        }
    }

    /// Per-observation saturated log-likelihood term y*eta_sat - F(eta_sat)
    /// (dispersion excluded), with the usual 0*log(0) = 0 conventions at the
    /// boundary of the mean space.
    pub fn saturated_term(&self, y: f64) -> Result<f64> {
        match self.kind {
            Family::Gaussian => Ok(0.5 * y * y),
            Family::Bernoulli => {
                if y == 0.0 || y == 1.0 {
                    Ok(0.0)
                } else if y > 0.0 && y < 1.0 {
                    Ok(y * y.ln() + (1.0 - y) * (1.0 - y).ln())
                } else {
                    Err(EccdError::Domain(format!("bernoulli response outside [0, 1]: {y}")))
                }
            }
            Family::Poisson => {
                if y == 0.0 {
                    Ok(0.0)
                } else if y > 0.0 {
                    Ok(y * y.ln() - y)
                } else {
                    Err(EccdError::Domain(format!("poisson response must be >= 0: {y}")))
                }
            }
            Family::Gamma => {
                if y > 0.0 {
                    Ok(-1.0 - y.ln())
                } else {
                    Err(EccdError::Domain(format!("gamma response must be positive: {y}")))
                }
            }
        }
    }

    /// Fill `mean` and `weight` with F' and F'' over a vector of etas.
    ///
    /// This is the solver's hot refresh path, so it avoids per-element Result
    /// plumbing. Out-of-domain Gamma etas produce NaN, which the solver's
    /// finiteness guards turn into an abort.
    pub fn mean_weight_into(&self, eta: ArrayView1<f64>, mean: &mut [f64], weight: &mut [f64]) {
        debug_assert_eq!(eta.len(), mean.len());
        debug_assert_eq!(eta.len(), weight.len());
        match self.kind {
            Family::Gaussian => {
                for (i, &e) in eta.iter().enumerate() {
                    mean[i] = e;
                    weight[i] = 1.0;
                }
            }
            Family::Bernoulli => {
                for (i, &e) in eta.iter().enumerate() {
                    let m = sigmoid(e);
                    mean[i] = m;
                    weight[i] = m * (1.0 - m);
                }
            }
            Family::Poisson => {
                for (i, &e) in eta.iter().enumerate() {
                    let m = e.exp();
                    mean[i] = m;
                    weight[i] = m;
                }
            }
            Family::Gamma => {
                for (i, &e) in eta.iter().enumerate() {
                    if e < 0.0 {
                        mean[i] = -1.0 / e;
                        weight[i] = 1.0 / (e * e);
                    } else {
                        mean[i] = f64::NAN;
                        weight[i] = f64::NAN;
                    }
                }
            }
        }
    }

    /// Log-likelihood sum_i [y_i eta_i - F(eta_i)] / d(tau), constants dropped.
    pub fn log_likelihood(&self, y: ArrayView1<f64>, eta: ArrayView1<f64>) -> Result<f64> {
        if y.len() != eta.len() {
            return Err(EccdError::Dimension(format!(
                "response length {} != linear predictor length {}",
                y.len(),
                eta.len()
            )));
        }
        let mut acc = 0.0;
        for (&yi, &ei) in y.iter().zip(eta.iter()) {
            acc += yi * ei - self.cgf(ei)?;
        }
        Ok(acc / self.dispersion)
    }

    fn check_gamma_eta(&self, eta: f64) -> Result<()> {
        if eta < 0.0 {
            Ok(())
        } else {
            Err(EccdError::Domain(format!(
                "gamma natural parameter must be negative, got {eta}"
            )))
        }
    }
}

/// Numerically stable logistic function.
fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let t = eta.exp();
        t / (1.0 + t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn spec(kind: Family) -> FamilySpec {
        FamilySpec::new(kind)
    }

    /// Domain on which finite differences of each family are well conditioned.
    fn eta_range(kind: Family) -> (f64, f64) {
        match kind {
            Family::Gaussian => (-30.0, 30.0),
            Family::Bernoulli => (-30.0, 30.0),
            Family::Poisson => (-10.0, 5.0),
            Family::Gamma => (-10.0, -0.1),
        }
    }

    #[test]
    fn cgf_reference_values() {
        assert_eq!(spec(Family::Gaussian).cgf(2.0).unwrap(), 2.0);
        assert_eq!(spec(Family::Poisson).cgf(0.0).unwrap(), 1.0);
        let b = spec(Family::Bernoulli).cgf(0.0).unwrap();
        assert!((b - 2.0f64.ln()).abs() < 1e-15);
        let g = spec(Family::Gamma).cgf(-1.0).unwrap();
        assert!(g.abs() < 1e-15);
    }

    #[test]
    fn mean_reference_values() {
        assert_eq!(spec(Family::Bernoulli).mean(0.0).unwrap(), 0.5);
        assert_eq!(spec(Family::Gaussian).mean(-3.5).unwrap(), -3.5);
        assert_eq!(spec(Family::Gamma).mean(-2.0).unwrap(), 0.5);
    }

    #[test]
    fn variance_weight_reference_values() {
        assert_eq!(spec(Family::Bernoulli).variance_weight(0.0).unwrap(), 0.25);
        assert_eq!(spec(Family::Gaussian).variance_weight(7.0).unwrap(), 1.0);
        let w = spec(Family::Poisson).variance_weight(1.0).unwrap();
        assert!((w - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn eta_for_mean_reference_values() {
        assert_eq!(spec(Family::Bernoulli).eta_for_mean(0.5).unwrap(), 0.0);
        assert_eq!(spec(Family::Poisson).eta_for_mean(1.0).unwrap(), 0.0);
        assert_eq!(spec(Family::Gamma).eta_for_mean(2.0).unwrap(), -0.5);
    }

    #[test]
    fn gamma_domain_is_negative_reals() {
        let g = spec(Family::Gamma);
        assert!(g.cgf(0.5).is_err());
        assert!(g.mean(0.0).is_err());
        assert!(g.variance_weight(1.0).is_err());
        assert!(g.cgf(-0.5).is_ok());
    }

    #[test]
    fn eta_for_mean_rejects_boundary_means() {
        assert!(spec(Family::Bernoulli).eta_for_mean(0.0).is_err());
        assert!(spec(Family::Bernoulli).eta_for_mean(1.0).is_err());
        assert!(spec(Family::Poisson).eta_for_mean(0.0).is_err());
        assert!(spec(Family::Gamma).eta_for_mean(-1.0).is_err());
    }

    #[test]
    fn dispersion_must_be_positive() {
        assert!(FamilySpec::with_dispersion(Family::Gaussian, 0.0).is_err());
        assert!(FamilySpec::with_dispersion(Family::Gaussian, -1.0).is_err());
        assert!(FamilySpec::with_dispersion(Family::Gamma, 2.5).is_ok());
    }

    #[test]
    fn bernoulli_is_overflow_safe_for_huge_eta() {
        let b = spec(Family::Bernoulli);
        for &eta in &[-900.0, -750.0, 750.0, 900.0] {
            let m = b.mean(eta).unwrap();
            let w = b.variance_weight(eta).unwrap();
            let f = b.cgf(eta).unwrap();
            assert!(m.is_finite() && w.is_finite() && f.is_finite());
            assert!((0.0..=1.0).contains(&m));
            assert!(w >= 0.0);
        }
        assert_eq!(b.mean(900.0).unwrap(), 1.0);
        assert_eq!(b.mean(-900.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_matches_central_difference_of_cgf() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let h = 1e-5;
        for kind in [Family::Gaussian, Family::Bernoulli, Family::Poisson, Family::Gamma] {
            let fam = spec(kind);
            let (lo, hi) = eta_range(kind);
            for _ in 0..1000 {
                let eta = rng.random_range(lo..hi);
                let fd = (fam.cgf(eta + h).unwrap() - fam.cgf(eta - h).unwrap()) / (2.0 * h);
                let m = fam.mean(eta).unwrap();
                assert!(
                    (m - fd).abs() <= 1e-6,
                    "{}: mean({eta}) = {m} vs finite difference {fd}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn weight_matches_central_difference_of_mean() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let h = 1e-5;
        for kind in [Family::Gaussian, Family::Bernoulli, Family::Poisson, Family::Gamma] {
            let fam = spec(kind);
            let (lo, hi) = eta_range(kind);
            for _ in 0..1000 {
                let eta = rng.random_range(lo..hi);
                let fd = (fam.mean(eta + h).unwrap() - fam.mean(eta - h).unwrap()) / (2.0 * h);
                let w = fam.variance_weight(eta).unwrap();
                assert!(
                    (w - fd).abs() <= 1e-6,
                    "{}: weight({eta}) = {w} vs finite difference {fd}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn mean_is_monotone_in_eta() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        for kind in [Family::Gaussian, Family::Bernoulli, Family::Poisson, Family::Gamma] {
            let fam = spec(kind);
            let (lo, hi) = eta_range(kind);
            for _ in 0..200 {
                let a = rng.random_range(lo..hi);
                let b = rng.random_range(lo..hi);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                if a == b {
                    continue;
                }
                assert!(fam.mean(a).unwrap() <= fam.mean(b).unwrap());
            }
        }
    }

    #[test]
    fn eta_for_mean_inverts_mean() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        for kind in [Family::Gaussian, Family::Bernoulli, Family::Poisson, Family::Gamma] {
            let fam = spec(kind);
            // Keep etas where the inverse link is well conditioned.
            let (lo, hi) = match kind {
                Family::Bernoulli => (-12.0, 12.0),
                other => eta_range(other),
            };
            for _ in 0..500 {
                let eta = rng.random_range(lo..hi);
                let mu = fam.mean(eta).unwrap();
                let back = fam.eta_for_mean(mu).unwrap();
                assert!(
                    (back - eta).abs() <= 1e-9 * (1.0 + eta.abs()),
                    "{}: eta {eta} -> mu {mu} -> eta {back}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn vectorized_refresh_matches_scalar_ops() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        for kind in [Family::Gaussian, Family::Bernoulli, Family::Poisson, Family::Gamma] {
            let fam = spec(kind);
            let (lo, hi) = eta_range(kind);
            let eta = Array1::from_iter((0..64).map(|_| rng.random_range(lo..hi)));
            let mut m = vec![0.0; eta.len()];
            let mut w = vec![0.0; eta.len()];
            fam.mean_weight_into(eta.view(), &mut m, &mut w);
            for (i, &e) in eta.iter().enumerate() {
                assert_eq!(m[i], fam.mean(e).unwrap());
                assert_eq!(w[i], fam.variance_weight(e).unwrap());
            }
        }
    }

    #[test]
    fn gamma_vectorized_refresh_marks_bad_etas_with_nan() {
        let fam = spec(Family::Gamma);
        let eta = Array1::from(vec![-1.0, 0.5]);
        let mut m = vec![0.0; 2];
        let mut w = vec![0.0; 2];
        fam.mean_weight_into(eta.view(), &mut m, &mut w);
        assert_eq!(m[0], 1.0);
        assert!(m[1].is_nan() && w[1].is_nan());
    }

    #[test]
    fn saturated_terms_handle_boundary_responses() {
        assert_eq!(spec(Family::Bernoulli).saturated_term(0.0).unwrap(), 0.0);
        assert_eq!(spec(Family::Bernoulli).saturated_term(1.0).unwrap(), 0.0);
        assert_eq!(spec(Family::Poisson).saturated_term(0.0).unwrap(), 0.0);
        assert_eq!(spec(Family::Gaussian).saturated_term(3.0).unwrap(), 4.5);
        assert!(spec(Family::Poisson).saturated_term(-1.0).is_err());
        assert!(spec(Family::Gamma).saturated_term(0.0).is_err());
    }
}
