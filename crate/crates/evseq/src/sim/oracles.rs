//! Quadrature oracles: independent numerical routes to quantities the
//! library computes in closed form. Test suites compare the two.

use crate::eprocess::{Adjuster, Calibrator};
use crate::error::{Error, Result};
use crate::sim::quad::{de_zero_inf, ln_integral_simpson, tanh_sinh_unit};

/// ∫₀¹ f(p) dp for a calibrator; must be 1 for every built-in.
///
/// Integrated in u = −ln p coordinates: the integrated calibrator keeps
/// mass `1/|ln p|` below any p, so no p-space rule can resolve the tail.
pub fn calibrator_integral(cal: &Calibrator) -> Result<f64> {
    cal.validate()?;
    Ok(de_zero_inf(|u| cal.density_neg_log(u)))
}

/// ∫₁^∞ a(y)/y² dy for an adjuster (computed as ∫₀¹ a(1/u) du); must be at
/// most 1.
pub fn adjuster_integral(adj: &Adjuster) -> f64 {
    tanh_sinh_unit(|u, _| adj.apply_to_max(1.0 / u))
}

/// Gaussian-mixture supermartingale evaluated by direct numerical
/// integration over the bet: `∫ exp(λS − λ²σ²t/2) dN(0, ρ²)(λ)`, with
/// `S = Y_t − tμ`. Independent of the closed form in
/// [`crate::confseq::subgaussian_mixture_log_wealth`].
pub fn subgaussian_mixture_log_wealth_quadrature(
    t: u64,
    sum: f64,
    mu: f64,
    sigma: f64,
    rho_mix: f64,
) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let tf = t as f64;
    let s = sum - tf * mu;
    let prec = sigma * sigma * tf + 1.0 / (rho_mix * rho_mix);
    let mode = s / prec;
    let sd = 1.0 / prec.sqrt();
    let (lo, hi) = (mode - 12.0 * sd, mode + 12.0 * sd);
    let ln_norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - rho_mix.ln();
    ln_integral_simpson(
        |lam| lam * s - lam * lam * sigma * sigma * tf / 2.0 - lam * lam / (2.0 * rho_mix * rho_mix),
        lo,
        hi,
        2000,
    ) + ln_norm
}

/// Confidence band obtained by bisecting the quadrature-evaluated mixture
/// supermartingale against `1/α`; the oracle for the closed-form band.
pub fn subgaussian_band_by_quadrature(
    t: u64,
    sum: f64,
    sigma: f64,
    rho: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    if t == 0 || !(sigma > 0.0) || !(rho > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter("bad oracle inputs".into()));
    }
    let rho_mix = rho / sigma;
    let threshold = (1.0 / alpha).ln();
    let center = sum / t as f64;
    let wealth =
        |mu: f64| subgaussian_mixture_log_wealth_quadrature(t, sum, mu, sigma, rho_mix);
    // The wealth is a symmetric increasing function of |μ − center|;
    // bracket the crossing then bisect.
    let mut step = sigma.max(1.0);
    let mut hi = center + step;
    while wealth(hi) < threshold {
        step *= 2.0;
        hi = center + step;
        if step > 1e12 {
            return Err(Error::Invariant("oracle failed to bracket the band".into()));
        }
    }
    let mut lo = center;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if wealth(mid) < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let half_width = 0.5 * (lo + hi) - center;
    Ok((center - half_width, center + half_width))
}

/// Right-Haar marginal integral for the t-test, integrated directly over
/// ℓ = ln σ:
/// `ln ∫₀^∞ σ^{−t−1} exp(−Σx²/(2σ²) + δΣx/σ − tδ²/2) dσ`.
/// Independent of the recurrence/DE evaluation in [`crate::param::ttest`].
pub fn ttest_ln_haar_marginal_quadrature(t: u64, sum: f64, sum_sq: f64, delta: f64) -> f64 {
    let tf = t as f64;
    let a = sum_sq / 2.0;
    let b = delta * sum;
    // Mode of g(ℓ) = −tℓ − a e^{−2ℓ} + b e^{−ℓ} at z* = e^{−ℓ*}:
    // 2a z² − b z − t = 0.
    let z_star = (b + (b * b + 8.0 * a * tf).sqrt()) / (4.0 * a);
    let ell_star = -z_star.ln();
    let curvature = 2.0 * a * z_star * z_star + tf;
    let sd = 1.0 / curvature.sqrt();
    // The right tail decays only like e^{−tℓ}; extend accordingly.
    let lo = ell_star - 12.0 * sd - 2.0;
    let hi = ell_star + 12.0 * sd + 60.0 / tf + 2.0;
    ln_integral_simpson(
        |ell| {
            let z = (-ell).exp();
            -tf * ell - a * z * z + b * z
        },
        lo,
        hi,
        4000,
    ) - tf * delta * delta / 2.0
}

/// Log wealth of the t-test e-process by quadrature of both Haar integrals.
pub fn ttest_log_wealth_quadrature(
    t: u64,
    sum: f64,
    sum_sq: f64,
    delta0: f64,
    delta1: f64,
) -> f64 {
    ttest_ln_haar_marginal_quadrature(t, sum, sum_sq, delta1)
        - ttest_ln_haar_marginal_quadrature(t, sum, sum_sq, delta0)
}
