/// Central-difference check of an analytic gradient.
///
/// `loss_fn` maps a flat parameter vector to `(loss, gradient)`. Returns
/// `max_k |g_analytic - g_fd| / max(1, |g_fd|)`.
pub fn grad_check<F>(mut loss_fn: F, theta: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let (_, analytic) = loss_fn(theta);
    assert_eq!(analytic.len(), theta.len(), "gradient length");
    let mut probe = theta.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        probe[k] = theta[k] + h;
        let (up, _) = loss_fn(&probe);
        probe[k] = theta[k] - h;
        let (down, _) = loss_fn(&probe);
        probe[k] = theta[k];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((analytic[k] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let err = grad_check(|t| (t[0] * t[0], vec![2.0 * t[0]]), &[1.0], 1e-5);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn constant() {
        let err = grad_check(|_| (3.0, vec![0.0, 0.0]), &[1.0, -2.0], 1e-5);
        assert_eq!(err, 0.0);
    }

    #[test]
    fn detects_wrong_gradient() {
        let err = grad_check(|t| (t[0] * t[0], vec![3.0 * t[0]]), &[1.0], 1e-5);
        assert!((err - 0.5).abs() < 1e-6, "{err}");
    }
}
