//! Number-state wavefunctions in the `x = a + a†` scaling.

use std::f64::consts::PI;

/// Rescale threshold for the recurrence; values are carried as
/// `mantissa · exp(log_scale)`.
const RESCALE: f64 = 1e150;

/// `φ_n(x)` for `n < count`: position wavefunctions of the number states
/// normalized so that `∫ φ_n(x)² dx = 1` with `x = a + a†`.
///
/// Uses the normalized three-term recurrence with the Gaussian envelope
/// folded into a running log-scale, so neither the envelope nor the
/// polynomial part can underflow or overflow on its own.
pub fn wavefunctions(count: usize, x: f64) -> Vec<f64> {
    let q = x / 2f64.sqrt();
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    // φ_n(x) = ψ_n(q) / 2^{1/4}, ψ_0(q) = π^{-1/4} e^{-q²/2}.
    let mut log_scale = -0.5 * q * q - 0.25 * PI.ln() - 0.25 * 2f64.ln();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = cur * log_scale.exp();
    for n in 0..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[n + 1] = cur * log_scale.exp();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_density_at_origin() {
        let phi = wavefunctions(1, 0.0);
        let density = phi[0] * phi[0];
        assert!((density - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wavefunctions_are_orthonormal() {
        let n = 12;
        let h = 0.01;
        let mut gram = vec![vec![0.0; n]; n];
        let mut x = -14.0;
        while x <= 14.0 {
            let phi = wavefunctions(n, x);
            for i in 0..n {
                for j in 0..n {
                    gram[i][j] += phi[i] * phi[j] * h;
                }
            }
            x += h;
        }
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i][j] - expect).abs() < 1e-9, "{i},{j}: {}", gram[i][j]);
            }
        }
    }

    #[test]
    fn far_tail_does_not_overflow() {
        let phi = wavefunctions(400, 40.0);
        assert!(phi.iter().all(|v| v.is_finite()));
    }
}
