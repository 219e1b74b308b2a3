use libm::erfc;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Below this point the ratio is taken from the Mills-ratio continued fraction.
const TAIL_SWITCH: f64 = -30.0;
const CF_TERMS: usize = 80;

pub fn pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `1 / R(x)` for the Mills ratio `R(x) = Phi(-x) / phi(x)`, `x > 0`, by
/// backward evaluation of `R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...))))`.
fn reciprocal_mills(x: f64) -> f64 {
    let mut f = x;
    for k in (1..=CF_TERMS).rev() {
        f = x + k as f64 / f;
    }
    f
}

/// Inverse Mills ratio `phi(z) / Phi(z)`, finite for every real `z`.
pub fn inverse_mills(z: f64) -> f64 {
    if z < TAIL_SWITCH {
        reciprocal_mills(-z)
    } else {
        pdf(z) / cdf(z)
    }
}

/// `ln Phi(z)` without underflow in either tail.
pub fn ln_cdf(z: f64) -> f64 {
    if z < TAIL_SWITCH {
        -0.5 * z * z - (2.0 * std::f64::consts::PI).sqrt().ln() - inverse_mills(z).ln()
    } else if z > 5.0 {
        (-cdf(-z)).ln_1p()
    } else {
        cdf(z).ln()
    }
}
