//! Small special-function kit: log-gamma (Lanczos) and moments of the
//! standard Gaussian density used by the bound constants.

/// Lanczos approximation (g = 7, n = 9), |rel err| < 1e-13 on x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    assert!(x > 0.0, "ln_gamma requires x > 0");
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// E |X|^{2s} for X ~ N(0, I_d): 2^s Gamma(d/2 + s) / Gamma(d/2).
pub fn gaussian_abs_moment_2s(dim: usize, s: f64) -> f64 {
    let d = dim as f64;
    (s * 2f64.ln() + ln_gamma(d / 2.0 + s) - ln_gamma(d / 2.0)).exp()
}

/// gamma = E |X|^4 = d (d + 2) for the standard Gaussian on R^d.
pub fn gaussian_fourth_moment(dim: usize) -> f64 {
    let d = dim as f64;
    d * (d + 2.0)
}

/// gamma(s) = (E |X|^{2s})^{2/s}, the mollifier-moment constant.
pub fn gamma_s(dim: usize, s: f64) -> f64 {
    gaussian_abs_moment_2s(dim, s).powf(2.0 / s)
}
