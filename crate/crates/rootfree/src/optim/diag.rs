use crate::precision::PrecisionPolicy;

use super::{DiagState, Hyper, OptimError, Result};

fn check_dims(mu: &[f64], g: &[f64], state_dim: usize) -> Result<()> {
    if mu.len() != g.len() || mu.len() != state_dim {
        return Err(OptimError::ShapeMismatch(format!(
            "mu has {} entries, gradient {}, state {}",
            mu.len(),
            g.len(),
            state_dim
        )));
    }
    Ok(())
}

/// SGD with momentum and weight decay:
/// `m ← α1 m + g + κ μ`, `μ ← μ - β1 m`.
pub fn sgd_step(
    mu: &[f64],
    g: &[f64],
    m: &[f64],
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(mu, g, m.len())?;
    let mut m_new: Vec<f64> = (0..mu.len())
        .map(|i| h.alpha1 * m[i] + g[i] + h.kappa * mu[i])
        .collect();
    policy.state_vec(&mut m_new);
    let mut mu_new: Vec<f64> = (0..mu.len()).map(|i| mu[i] - h.beta1 * m_new[i]).collect();
    policy.state_vec(&mut mu_new);
    Ok((mu_new, m_new))
}

/// Root-based RMSProp:
/// `ŝ ← (1-β2γ)ŝ + β2 g²`, then `μ ← μ - β1 g/(√ŝ + λ)` through the
/// momentum buffer (`α1 = κ = 0` reduces to the plain update). The damping
/// `λ` is added after the root. The accumulator is initialized to zero.
pub fn rmsprop_step(
    mu: &[f64],
    g: &[f64],
    state: &DiagState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Vec<f64>, DiagState)> {
    check_dims(mu, g, state.s.len())?;
    let n = mu.len();

    let mut s_new: Vec<f64> = (0..n)
        .map(|i| (1.0 - h.beta2 * h.gamma) * state.s[i] + h.beta2 * g[i] * g[i])
        .collect();
    policy.state_vec(&mut s_new);

    let mut precond = vec![0.0; n];
    for i in 0..n {
        let denom = s_new[i].sqrt() + h.lambda;
        if denom == 0.0 {
            if g[i] != 0.0 {
                return Err(OptimError::DivisionGuard { index: i });
            }
            continue;
        }
        precond[i] = g[i] / denom;
    }

    let mut m_new: Vec<f64> = (0..n)
        .map(|i| h.alpha1 * state.m[i] + precond[i] + h.kappa * mu[i])
        .collect();
    policy.state_vec(&mut m_new);

    let mut mu_new: Vec<f64> = (0..n).map(|i| mu[i] - h.beta1 * m_new[i]).collect();
    policy.state_vec(&mut mu_new);

    Ok((mu_new, DiagState { s: s_new, m: m_new }))
}

/// Square-root-free RMSProp, full-fledged form:
/// `s ← (1-β2γ)s + β2 B g²`, `m ← α1 m + g/(s+λ) + κ μ`, `μ ← μ - β1 m`,
/// in that order. The preconditioner is initialized to one and the
/// batch-size factor `B` matches the scaled-loss Fisher.
pub fn rf_rmsprop_step(
    mu: &[f64],
    g: &[f64],
    state: &DiagState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Vec<f64>, DiagState)> {
    check_dims(mu, g, state.s.len())?;
    let n = mu.len();
    let b = h.b_factor();

    let mut s_new: Vec<f64> = (0..n)
        .map(|i| (1.0 - h.beta2 * h.gamma) * state.s[i] + h.beta2 * b * g[i] * g[i])
        .collect();
    policy.state_vec(&mut s_new);

    let mut precond = vec![0.0; n];
    for i in 0..n {
        let denom = s_new[i] + h.lambda;
        if denom == 0.0 {
            if g[i] != 0.0 {
                return Err(OptimError::DivisionGuard { index: i });
            }
            continue;
        }
        precond[i] = g[i] / denom;
    }

    let mut m_new: Vec<f64> = (0..n)
        .map(|i| h.alpha1 * state.m[i] + precond[i] + h.kappa * mu[i])
        .collect();
    policy.state_vec(&mut m_new);

    let mut mu_new: Vec<f64> = (0..n).map(|i| mu[i] - h.beta1 * m_new[i]).collect();
    policy.state_vec(&mut mu_new);

    Ok((mu_new, DiagState { s: s_new, m: m_new }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const REF: PrecisionPolicy = PrecisionPolicy::REFERENCE;

    fn bare(beta1: f64, beta2: f64) -> Hyper {
        Hyper {
            beta1,
            beta2,
            gamma: 1.0,
            lambda: 0.0,
            kappa: 0.0,
            alpha1: 0.0,
            b: 1,
            ..Hyper::default()
        }
    }

    #[test]
    fn sgd_zero_gradient_leaves_parameters() {
        let h = bare(0.1, 1.0);
        let (mu, m) = sgd_step(&[1.0, 2.0], &[0.0, 0.0], &[0.0, 0.0], &h, &REF).unwrap();
        assert_eq!(mu, vec![1.0, 2.0]);
        assert_eq!(m, vec![0.0, 0.0]);
    }

    #[test]
    fn sgd_without_momentum_is_plain_gradient_descent() {
        let h = bare(0.1, 1.0);
        let (mu, _) = sgd_step(&[1.0], &[2.0], &[0.0], &h, &REF).unwrap();
        assert_relative_eq!(mu[0], 1.0 - 0.1 * 2.0);
    }

    #[test]
    fn sgd_on_quadratic_hand_value() {
        // Q = diag(2), b = 0, μ = 1: g = 2, μ' = 1 - 0.1*2 = 0.8.
        let h = bare(0.1, 1.0);
        let (mu, _) = sgd_step(&[1.0], &[2.0], &[0.0], &h, &REF).unwrap();
        assert_relative_eq!(mu[0], 0.8);
    }

    #[test]
    fn rmsprop_reproduces_the_root_based_worked_example() {
        // 1-D, μ=2, g=2, ŝ0=0, β1=β2=1, λ=0: ŝ=4, μ' = 2 - 2/2 = 1.
        let h = bare(1.0, 1.0);
        let state = DiagState::new(1, 0.0);
        let (mu, s) = rmsprop_step(&[2.0], &[2.0], &state, &h, &REF).unwrap();
        assert_relative_eq!(s.s[0], 4.0);
        assert_relative_eq!(mu[0], 1.0);
    }

    #[test]
    fn rmsprop_breaks_affine_invariance_on_the_reparameterized_instance() {
        // b0=1, g=4: ŝ=16, b' = 1 - 4/4 = 0, while 2·b' ≠ a' = 1.
        let h = bare(1.0, 1.0);
        let state = DiagState::new(1, 0.0);
        let (b1, _) = rmsprop_step(&[1.0], &[4.0], &state, &h, &REF).unwrap();
        assert_relative_eq!(b1[0], 0.0);
    }

    #[test]
    fn rmsprop_zero_gradient_decays_accumulator() {
        let h = bare(0.5, 0.25);
        let state = DiagState::new(2, 1.0);
        let (mu, s) = rmsprop_step(&[3.0, -1.0], &[0.0, 0.0], &state, &h, &REF).unwrap();
        assert_eq!(mu, vec![3.0, -1.0]);
        assert_relative_eq!(s.s[0], 0.75);
    }

    #[test]
    fn rmsprop_guards_division_by_zero() {
        let h = bare(1.0, 1.0);
        let state = DiagState::new(1, 0.0);
        // g = 0 in the only coordinate with s+λ = 0: no error, no movement.
        let (mu, _) = rmsprop_step(&[5.0], &[0.0], &state, &h, &REF).unwrap();
        assert_eq!(mu, vec![5.0]);
    }

    #[test]
    fn rf_rmsprop_reproduces_the_root_free_worked_example() {
        // 1-D, μ=2, g=2, s0=0, B=1, β1=β2=1, λ=κ=α1=0: s=4, μ' = 2 - 2/4 = 1.5.
        let h = Hyper {
            gamma: 0.0,
            ..bare(1.0, 1.0)
        };
        let state = DiagState::new(1, 0.0);
        let (mu, s) = rf_rmsprop_step(&[2.0], &[2.0], &state, &h, &REF).unwrap();
        assert_relative_eq!(s.s[0], 4.0);
        assert_relative_eq!(mu[0], 1.5);
    }

    #[test]
    fn rf_rmsprop_zero_gradient_only_decays() {
        let h = bare(1.0, 0.5);
        let state = DiagState::new(1, 1.0);
        let (mu, s) = rf_rmsprop_step(&[2.0], &[0.0], &state, &h, &REF).unwrap();
        assert_relative_eq!(s.s[0], 0.5);
        assert_eq!(mu, vec![2.0]);
    }

    #[test]
    fn rf_rmsprop_update_lines_apply_in_order() {
        // The μ line must read the post-update s and m.
        let h = Hyper {
            alpha1: 0.5,
            kappa: 0.1,
            lambda: 0.25,
            b: 2,
            ..bare(0.5, 0.5)
        };
        let state = DiagState {
            s: vec![2.0],
            m: vec![0.4],
        };
        let mu = [1.0];
        let g = [3.0];
        let s1 = (1.0 - 0.5) * 2.0 + 0.5 * 2.0 * 9.0; // 10.0
        let m1 = 0.5 * 0.4 + 3.0 / (s1 + 0.25) + 0.1 * 1.0;
        let mu1 = 1.0 - 0.5 * m1;
        let (mu_new, st) = rf_rmsprop_step(&mu, &g, &state, &h, &REF).unwrap();
        assert_relative_eq!(st.s[0], s1);
        assert_relative_eq!(st.m[0], m1);
        assert_relative_eq!(mu_new[0], mu1);
    }

    #[test]
    fn shape_mismatch_is_refused() {
        let h = bare(1.0, 1.0);
        let state = DiagState::new(2, 0.0);
        assert!(matches!(
            rmsprop_step(&[1.0], &[1.0, 2.0], &state, &h, &REF),
            Err(OptimError::ShapeMismatch(_))
        ));
    }
}
