//! C∞ transition functions built from `exp(-1/x)`.

/// `exp(-1/x)` for `x > 0`, zero otherwise.
pub fn flat_exp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::exp(-1.0 / x)
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, C∞ and strictly increasing in between.
///
/// `S(u) = e(u) / (e(u) + e(1 - u))` with `e(x) = exp(-1/x)`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = flat_exp(u);
    let b = flat_exp(1.0 - u);
    a / (a + b)
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_derivative(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let a = flat_exp(u);
    let b = flat_exp(1.0 - u);
    let da = a / (u * u);
    let db = -b / ((1.0 - u) * (1.0 - u));
    let den = a + b;
    (da * den - a * (da + db)) / (den * den)
}

/// Radial cutoff: `η ≡ 0` below `inner`, `η ≡ 1` above `outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    /// Panics unless `0 <= inner < outer`.
    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(inner >= 0.0 && inner < outer, "cutoff radii must satisfy 0 <= inner < outer");
        Self { inner, outer }
    }

    pub fn eval(&self, r: f64) -> f64 {
        smooth_step((r - self.inner) / (self.outer - self.inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_monotone_with_flat_ends() {
        assert_eq!(smooth_step(-0.3), 0.0);
        assert_eq!(smooth_step(1.2), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for k in 1..1000 {
            let v = smooth_step(k as f64 / 1000.0);
            // Both tails round to exactly 0 or 1 in double precision.
            if (50..950).contains(&k) {
                assert!(v > prev);
            } else {
                assert!(v >= prev);
            }
            prev = v;
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for k in 1..50 {
            let u = k as f64 / 50.0;
            let h = 1e-6;
            let fd = (smooth_step(u + h) - smooth_step(u - h)) / (2.0 * h);
            assert!((fd - smooth_step_derivative(u)).abs() < 1e-7, "u = {u}");
        }
    }
}
