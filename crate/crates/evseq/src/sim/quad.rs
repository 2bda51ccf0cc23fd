//! Numerical quadrature used by the verification oracles.
//!
//! Tanh-sinh (double-exponential) quadrature handles the integrable endpoint
//! singularities of the calibrator family; a mode-centered composite Simpson
//! rule in log space handles the Gaussian-mixture and scale-prior integrals.

/// ∫₀¹ f(p) dp by tanh-sinh quadrature.
///
/// The integrand receives both `p` and `1 − p`, each computed to full
/// precision, so behavior next to either endpoint is resolved even when the
/// node is within 1e−300 of it.
pub fn tanh_sinh_unit<F: Fn(f64, f64) -> f64>(f: F) -> f64 {
    let t_max = 5.5_f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut prev = f64::NAN;
    let mut level = 5u32;
    loop {
        let steps = 1usize << level;
        let h = t_max / steps as f64;
        let mut sum = 0.0;
        for k in -(steps as i64)..=(steps as i64) {
            let t = k as f64 * h;
            let w = half_pi * t.sinh();
            // p = σ(2w), 1−p = σ(−2w), both via the stable logistic form.
            let (p, q) = if w >= 0.0 {
                let e = (-2.0 * w).exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            } else {
                let e = (2.0 * w).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            };
            // dp/dt = (π/2) cosh t · sech²(w)/2 = 2 (π/2) cosh t · p·q.
            let weight = 2.0 * half_pi * t.cosh() * p * q;
            if weight == 0.0 || !weight.is_finite() {
                continue;
            }
            let v = f(p, q);
            if v.is_finite() {
                sum += v * weight;
            }
        }
        let s = sum * h;
        if !prev.is_nan() && (s - prev).abs() <= 1e-13 * prev.abs().max(1.0) {
            return s;
        }
        prev = s;
        level += 1;
        if level > 11 {
            return s;
        }
    }
}

/// ∫₀^∞ g(u) du by double-exponential quadrature with `u = exp(π/2 sinh t)`.
///
/// Handles algebraically decaying tails (e.g. `1/u²`): the nodes reach
/// `u ≈ e^{43}` where such a tail holds less than 1e−18 of the mass.
pub fn de_zero_inf<F: Fn(f64) -> f64>(g: F) -> f64 {
    let t_max = 4.0_f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut prev = f64::NAN;
    let mut level = 5u32;
    loop {
        let steps = 1usize << level;
        let h = t_max / steps as f64;
        let mut sum = 0.0;
        for k in -(steps as i64)..=(steps as i64) {
            let t = k as f64 * h;
            let u = (half_pi * t.sinh()).exp();
            let weight = u * half_pi * t.cosh();
            if !weight.is_finite() || weight == 0.0 {
                continue;
            }
            let v = g(u);
            if v.is_finite() {
                sum += v * weight;
            }
        }
        let s = sum * h;
        if !prev.is_nan() && (s - prev).abs() <= 1e-13 * prev.abs().max(1.0) {
            return s;
        }
        prev = s;
        level += 1;
        if level > 11 {
            return s;
        }
    }
}

/// `ln ∫ exp(g(x)) dx` over `[lo, hi]` by composite Simpson with max-shift.
pub fn ln_integral_simpson<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = (hi - lo) / n as f64;
    let mut vals = Vec::with_capacity(n + 1);
    for k in 0..=n {
        vals.push(g(lo + k as f64 * h));
    }
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for (k, &v) in vals.iter().enumerate() {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * (v - m).exp();
    }
    m + (sum * h / 3.0).ln()
}
