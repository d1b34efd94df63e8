use crate::linalg::{spd_solve, sym_eig, Mat};
use crate::precision::PrecisionPolicy;

use super::{FullState, Hyper, OptimError, Result};

fn check_dims(mu: &[f64], g: &[f64], state: &FullState) -> Result<()> {
    if mu.len() != g.len() || state.s.rows() != mu.len() || !state.s.is_square() {
        return Err(OptimError::ShapeMismatch(format!(
            "mu has {} entries, gradient {}, S is {}x{}",
            mu.len(),
            g.len(),
            state.s.rows(),
            state.s.cols()
        )));
    }
    Ok(())
}

/// Symmetric square root of a PSD accumulator. Eigenvalues within roundoff
/// of zero are clamped to zero; genuinely negative ones are refused.
fn psd_sqrt(a: &Mat) -> Result<Mat> {
    let eig = sym_eig(a)?;
    let scale = a.max_abs().max(1.0);
    let tol = 1e-12 * scale;
    if eig.min_value() < -tol {
        return Err(OptimError::Definiteness(
            crate::linalg::LinalgError::NotPositiveDefinite {
                eigenvalue: eig.min_value(),
            },
        ));
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()))
}

/// Full-matrix AdaGrad with the square root:
/// `Ŝ ← Ŝ + β2 g gᵀ`, then `μ ← μ - β1 (Ŝ^{1/2} + λI)⁻¹ g` through the
/// momentum buffer. The accumulator starts at zero; a singular preconditioner
/// with `λ = 0` is a definiteness error.
pub fn adagrad_full_root_step(
    mu: &[f64],
    g: &[f64],
    state: &FullState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Vec<f64>, FullState)> {
    check_dims(mu, g, state)?;
    let n = mu.len();

    let s_new = policy.state_mat(state.s.add(&Mat::outer(g, g).scale(h.beta2)));

    let root = policy.linalg_mat(psd_sqrt(&s_new)?);
    let precond_mat = root.add_scaled_identity(h.lambda);
    let precond = spd_solve(&precond_mat, g)?;

    let mut m_new: Vec<f64> = (0..n)
        .map(|i| h.alpha1 * state.m[i] + precond[i] + h.kappa * mu[i])
        .collect();
    policy.state_vec(&mut m_new);

    let mut mu_new: Vec<f64> = (0..n).map(|i| mu[i] - h.beta1 * m_new[i]).collect();
    policy.state_vec(&mut mu_new);

    Ok((mu_new, FullState { s: s_new, m: m_new }))
}

/// Full-matrix square-root-free update:
/// `S ← (1-β2γ)S + β2 (B g gᵀ + λ I)`, then `μ ← μ - β1 S⁻¹ g` through the
/// momentum buffer. `S` stays positive definite whenever it starts positive
/// definite; starting from zero is allowed only if the first damped outer
/// product is itself positive definite.
pub fn adagrad_full_rf_step(
    mu: &[f64],
    g: &[f64],
    state: &FullState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Vec<f64>, FullState)> {
    check_dims(mu, g, state)?;
    let n = mu.len();

    let mut update = Mat::outer(g, g).scale(h.beta2 * h.b_factor());
    if h.lambda > 0.0 {
        update = update.add_scaled_identity(h.beta2 * h.lambda);
    }
    let s_new = policy.state_mat(state.s.scale(1.0 - h.beta2 * h.gamma).add(&update));

    let precond = spd_solve(&s_new, g)?;

    let mut m_new: Vec<f64> = (0..n)
        .map(|i| h.alpha1 * state.m[i] + precond[i] + h.kappa * mu[i])
        .collect();
    policy.state_vec(&mut m_new);

    let mut mu_new: Vec<f64> = (0..n).map(|i| mu[i] - h.beta1 * m_new[i]).collect();
    policy.state_vec(&mut mu_new);

    Ok((mu_new, FullState { s: s_new, m: m_new }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{rmsprop_step, DiagState};
    use approx::assert_relative_eq;

    const REF: PrecisionPolicy = PrecisionPolicy::REFERENCE;

    fn bare() -> Hyper {
        Hyper {
            beta1: 1.0,
            beta2: 1.0,
            gamma: 0.0,
            lambda: 0.0,
            kappa: 0.0,
            alpha1: 0.0,
            b: 1,
            ..Hyper::default()
        }
    }

    #[test]
    fn root_step_reproduces_the_worked_example() {
        // Ŝ0=0, g=2, μ=2: Ŝ=4, Ŝ^{1/2}=2, μ' = 2 - 2/2 = 1.
        let state = FullState::new(1, 0.0);
        let (mu, st) = adagrad_full_root_step(&[2.0], &[2.0], &state, &bare(), &REF).unwrap();
        assert_relative_eq!(st.s[(0, 0)], 4.0);
        assert_relative_eq!(mu[0], 1.0);
    }

    #[test]
    fn root_step_zero_gradient_requires_damping() {
        let state = FullState::new(2, 0.0);
        let h = Hyper {
            lambda: 0.5,
            ..bare()
        };
        let (mu, _) = adagrad_full_root_step(&[1.0, 2.0], &[0.0, 0.0], &state, &h, &REF).unwrap();
        assert_eq!(mu, vec![1.0, 2.0]);
        // Without damping the zero accumulator cannot be inverted.
        assert!(matches!(
            adagrad_full_root_step(&[1.0, 2.0], &[0.0, 0.0], &state, &bare(), &REF),
            Err(OptimError::Definiteness(_))
        ));
    }

    #[test]
    fn root_step_with_diagonal_gradients_matches_rmsprop_accumulation() {
        // On axis-aligned gradients the full-matrix root method decouples into
        // per-coordinate RMSProp with γ=0 accumulation. Damping keeps the
        // not-yet-touched coordinate invertible on both sides.
        let h = Hyper {
            beta1: 0.3,
            beta2: 0.7,
            lambda: 0.1,
            ..bare()
        };
        let mut full = FullState::new(2, 0.0);
        let mut diag = DiagState::new(2, 0.0);
        let mut mu_full = vec![1.0, -2.0];
        let mut mu_diag = vec![1.0, -2.0];
        let grads = [[0.5, 0.0], [0.0, -1.5], [2.0, 0.0]];
        let diag_h = Hyper { gamma: 0.0, ..h.clone() };
        for g in grads {
            let (mf, sf) = adagrad_full_root_step(&mu_full, &g, &full, &h, &REF).unwrap();
            mu_full = mf;
            full = sf;
            let (md, sd) = rmsprop_step(&mu_diag, &g, &diag, &diag_h, &REF).unwrap();
            mu_diag = md;
            diag = sd;
        }
        for (a, b) in mu_full.iter().zip(&mu_diag) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rf_step_reproduces_the_worked_example() {
        // S0=0, β2=1, γ=0, g=2, μ=2: S=4, μ' = 2 - 2/4 = 1.5.
        let state = FullState::new(1, 0.0);
        let (mu, st) = adagrad_full_rf_step(&[2.0], &[2.0], &state, &bare(), &REF).unwrap();
        assert_relative_eq!(st.s[(0, 0)], 4.0);
        assert_relative_eq!(mu[0], 1.5);
    }

    #[test]
    fn rf_step_is_affine_consistent_on_the_worked_example() {
        // Reparameterized instance (A = 2): b0=1, g_b=4 → S_b=16, b' = 0.75,
        // and 2·0.75 recovers 1.5.
        let state = FullState::new(1, 0.0);
        let (b1, st) = adagrad_full_rf_step(&[1.0], &[4.0], &state, &bare(), &REF).unwrap();
        assert_relative_eq!(st.s[(0, 0)], 16.0);
        assert_relative_eq!(b1[0], 0.75);
        assert_relative_eq!(2.0 * b1[0], 1.5);
    }

    #[test]
    fn rf_step_zero_gradient_decays_geometrically() {
        let h = Hyper {
            gamma: 1.0,
            beta2: 0.5,
            ..bare()
        };
        let state = FullState::new(2, 1.0);
        let (mu, st) = adagrad_full_rf_step(&[1.0, 1.0], &[0.0, 0.0], &state, &h, &REF).unwrap();
        assert_eq!(mu, vec![1.0, 1.0]);
        assert_relative_eq!(st.s[(0, 0)], 0.5);
        assert_relative_eq!(st.s[(1, 1)], 0.5);
    }

    #[test]
    fn rf_step_rejects_singular_preconditioner() {
        // Rank-one update from a zero start in 2-D is singular without damping.
        let state = FullState::new(2, 0.0);
        assert!(matches!(
            adagrad_full_rf_step(&[1.0, 1.0], &[1.0, 0.0], &state, &bare(), &REF),
            Err(OptimError::Definiteness(_))
        ));
        // Damping rescues it.
        let h = Hyper {
            lambda: 1e-4,
            ..bare()
        };
        assert!(adagrad_full_rf_step(&[1.0, 1.0], &[1.0, 0.0], &state, &h, &REF).is_ok());
    }
}
