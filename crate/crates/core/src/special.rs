//! Special functions.

/// Exponentially scaled modified Bessel function of the first kind, `e^{-x} I0(x)`.
///
/// Power series below `x = 30`, large-argument asymptotic series above.
pub fn scaled_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        scaled_series(x)
    } else {
        scaled_asymptotic(x)
    }
}

fn scaled_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum * (-x).exp()
}

fn scaled_asymptotic(x: f64) -> f64 {
    // e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Modified Bessel function I0.
pub fn bessel_i0(x: f64) -> f64 {
    scaled_bessel_i0(x) * x.abs().exp()
}
