//! Scalar special functions shared by the Franck–Condon and Wigner code.

/// ln(n!) by direct summation; exact enough for the n ≤ a few hundred used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre polynomial L_n^alpha(x) by the upward three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Bose–Einstein occupation 1/(exp(omega/temperature) − 1), both in units of ω_b.
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    let x = omega / temperature;
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}
