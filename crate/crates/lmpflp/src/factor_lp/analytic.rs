/// Connection-side term `V(z)` of the closed-form bound.
pub fn v_of_z(z: f64) -> f64 {
    let a = 2.0 - z / (1.0 - z);
    let b = 2.0 - 2.0 * z / (1.0 - z) + (1.0 + z / (1.0 - 2.0 * z)).ln() + 4.0 * z * z / ((1.0 - z) * (1.0 - 2.0 * z));
    a.max(b)
}

/// `M(z) - 1`.
pub fn m_minus_one(z: f64) -> f64 {
    (1.0 + z / (1.0 - 2.0 * z)).ln() - z / (1.0 - z) + 2.0 * z * z / ((1.0 - z) * (1.0 - 2.0 * z))
}

/// `M(z)` written as the integral of `N` over the three bands.
pub fn m_integral_form(z: f64) -> f64 {
    let y = z * z / (1.0 - z);
    ((1.0 - z).ln() - (1.0 - 2.0 * z).ln()) + (1.0 - 2.0 * z - y) / (1.0 - z) + y * (1.0 / (1.0 - z) + 1.0 / (0.5 - z))
}

pub fn analytic_value(z: f64, t: f64) -> f64 {
    v_of_z(z) + t * m_minus_one(z)
}

/// `2 - 1/(4(7+3T))`.
pub fn corollary_bound(t: f64) -> f64 {
    2.0 - 1.0 / (4.0 * (7.0 + 3.0 * t))
}

/// Minimizes [`analytic_value`] over `z ∈ [0, 1/3)`; returns `(value, z)`.
pub fn analytic_bound(t: f64) -> (f64, f64) {
    let hi = 1.0 / 3.0 - 1e-9;
    // coarse scan guards against a non-unimodal profile
    let n = 2000usize;
    let mut best = (analytic_value(0.0, t), 0.0);
    let mut k_best = 0usize;
    for k in 1..=n {
        let z = hi * k as f64 / n as f64;
        let v = analytic_value(z, t);
        if v < best.0 {
            best = (v, z);
            k_best = k;
        }
    }
    let mut a = hi * k_best.saturating_sub(1) as f64 / n as f64;
    let mut b = hi * (k_best + 1).min(n) as f64 / n as f64;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (analytic_value(c, t), analytic_value(d, t));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = analytic_value(c, t);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = analytic_value(d, t);
        }
    }
    let z = (a + b) / 2.0;
    let v = analytic_value(z, t);
    if v < best.0 {
        (v, z)
    } else {
        best
    }
}
