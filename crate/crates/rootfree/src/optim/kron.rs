use crate::linalg::{mat_exp, mat_exp_trunc1, spd_inverse, spd_power, Mat};
use crate::precision::PrecisionPolicy;

use super::{ExpMode, Hyper, IfKronState, KronState, OptimError, Result};

fn check_shapes(mu: &Mat, g: &Mat, p: usize, d: usize) -> Result<()> {
    if mu.rows() != p || mu.cols() != d || g.rows() != p || g.cols() != d {
        return Err(OptimError::ShapeMismatch(format!(
            "parameter is {}x{}, gradient {}x{}, state factors {}x{} and {}x{}",
            mu.rows(),
            mu.cols(),
            g.rows(),
            g.cols(),
            p,
            p,
            d,
            d
        )));
    }
    Ok(())
}

/// Root-based Shampoo:
/// `Ŝ_C ← (1-β2γ)Ŝ_C + β2 G Gᵀ`, `Ŝ_K ← (1-β2γ)Ŝ_K + β2 Gᵀ G`, then the
/// preconditioned gradient `(Ŝ_C+λI)^{-1/4} G (Ŝ_K+λI)^{-1/4}` flows through
/// the momentum buffer into the parameters. Damping is added before the
/// quarter root; a singular accumulator with `λ = 0` is a definiteness error.
pub fn shampoo_step(
    mu: &Mat,
    g: &Mat,
    state: &KronState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Mat, KronState)> {
    let (p, d) = (state.s_c.rows(), state.s_k.rows());
    check_shapes(mu, g, p, d)?;
    let decay = 1.0 - h.beta2 * h.gamma;

    let s_c = policy.state_mat(
        state
            .s_c
            .scale(decay)
            .add(&g.matmul(&g.transpose()).scale(h.beta2)),
    );
    let s_k = policy.state_mat(
        state
            .s_k
            .scale(decay)
            .add(&g.transpose().matmul(g).scale(h.beta2)),
    );

    let root_c = policy.linalg_mat(spd_power(&s_c.add_scaled_identity(h.lambda), -0.25)?);
    let root_k = policy.linalg_mat(spd_power(&s_k.add_scaled_identity(h.lambda), -0.25)?);
    let precond = policy.linalg_mat(root_c.matmul(g).matmul(&root_k));

    let m = policy.state_mat(state.m.scale(h.alpha1).add(&precond).add(&mu.scale(h.kappa)));
    let mu_new = policy.state_mat(mu.sub(&m.scale(h.beta1)));

    Ok((mu_new, KronState { s_c, s_k, m }))
}

/// Square-root-free Shampoo, full-fledged form:
///
/// ```text
/// S_C ← (1-β2γ) S_C + (β2/d)(B G S_K⁻¹ Gᵀ + λ Tr(S_K⁻¹) I_p)
/// S_K ← (1-β2γ) S_K + (β2/p)(B Gᵀ S_C⁻¹ G + λ Tr(S_C⁻¹) I_d)
/// M   ← α1 M + S_C⁻¹ G S_K⁻¹ + κ Mat(μ)
/// Mat(μ) ← Mat(μ) - β1 M
/// ```
///
/// The two factor lines update simultaneously: each right-hand side reads the
/// pre-update factors. The momentum line reads the freshly updated ones.
/// Factors stay positive definite when initialized positive definite.
pub fn rf_shampoo_step(
    mu: &Mat,
    g: &Mat,
    state: &KronState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Mat, KronState)> {
    let (p, d) = (state.s_c.rows(), state.s_k.rows());
    check_shapes(mu, g, p, d)?;
    let decay = 1.0 - h.beta2 * h.gamma;
    let b = h.b_factor();

    let s_k_inv = policy.linalg_mat(spd_inverse(&state.s_k)?);
    let s_c_inv = policy.linalg_mat(spd_inverse(&state.s_c)?);

    let mut c_term = g
        .matmul(&s_k_inv)
        .matmul(&g.transpose())
        .scale(b);
    if h.lambda > 0.0 {
        c_term = c_term.add_scaled_identity(h.lambda * s_k_inv.trace());
    }
    let s_c = policy.state_mat(
        state
            .s_c
            .scale(decay)
            .add(&c_term.scale(h.beta2 / d as f64)),
    );

    let mut k_term = g
        .transpose()
        .matmul(&s_c_inv)
        .matmul(g)
        .scale(b);
    if h.lambda > 0.0 {
        k_term = k_term.add_scaled_identity(h.lambda * s_c_inv.trace());
    }
    let s_k = policy.state_mat(
        state
            .s_k
            .scale(decay)
            .add(&k_term.scale(h.beta2 / p as f64)),
    );

    let s_c_new_inv = policy.linalg_mat(spd_inverse(&s_c)?);
    let s_k_new_inv = policy.linalg_mat(spd_inverse(&s_k)?);
    let precond = policy.linalg_mat(s_c_new_inv.matmul(g).matmul(&s_k_new_inv));

    let m = policy.state_mat(state.m.scale(h.alpha1).add(&precond).add(&mu.scale(h.kappa)));
    let mu_new = policy.state_mat(mu.sub(&m.scale(h.beta1)));

    Ok((mu_new, KronState { s_c, s_k, m }))
}

/// Inverse-free Shampoo: updates the factors of `S⁻¹ = (CCᵀ) ⊗ (KKᵀ)`
/// directly through matrix exponentials,
///
/// ```text
/// C ← C exp(-(β2/2d)(B Cᵀ G KKᵀ Gᵀ C + λ Tr(KKᵀ) CᵀC - γ d I_p))
/// K ← K exp(-(β2/2p)(B Kᵀ Gᵀ CCᵀ G K + λ Tr(CCᵀ) KᵀK - γ p I_d))
/// M ← α1 M + CCᵀ G KKᵀ + κ Mat(μ)
/// Mat(μ) ← Mat(μ) - β1 M
/// ```
///
/// Both exponent arguments read the pre-update `C` and `K`; the momentum
/// line reads the updated ones. In `Trunc1` mode `exp(N) ≈ I + N` and the
/// step involves no inverse and no decomposition at all.
pub fn if_shampoo_step(
    mu: &Mat,
    g: &Mat,
    state: &IfKronState,
    h: &Hyper,
    policy: &PrecisionPolicy,
) -> Result<(Mat, IfKronState)> {
    let (p, d) = (state.c.rows(), state.k.rows());
    check_shapes(mu, g, p, d)?;
    let b = h.b_factor();

    let cct = policy.linalg_mat(state.c.matmul(&state.c.transpose()));
    let kkt = policy.linalg_mat(state.k.matmul(&state.k.transpose()));

    // p x p exponent argument for the C factor.
    let ctg = state.c.transpose().matmul(g);
    let mut arg_c = ctg.matmul(&kkt).matmul(&ctg.transpose()).scale(b);
    if h.lambda > 0.0 {
        let ctc = state.c.transpose().matmul(&state.c);
        arg_c = arg_c.add(&ctc.scale(h.lambda * kkt.trace()));
    }
    arg_c = arg_c.add_scaled_identity(-h.gamma * d as f64);
    let n_c = policy.linalg_mat(arg_c.scale(-h.beta2 / (2.0 * d as f64)).symmetrized());

    // d x d exponent argument for the K factor, from the pre-update C.
    let ktgt = state.k.transpose().matmul(&g.transpose());
    let mut arg_k = ktgt.matmul(&cct).matmul(&ktgt.transpose()).scale(b);
    if h.lambda > 0.0 {
        let ktk = state.k.transpose().matmul(&state.k);
        arg_k = arg_k.add(&ktk.scale(h.lambda * cct.trace()));
    }
    arg_k = arg_k.add_scaled_identity(-h.gamma * p as f64);
    let n_k = policy.linalg_mat(arg_k.scale(-h.beta2 / (2.0 * p as f64)).symmetrized());

    let (exp_c, exp_k) = match h.exp_mode {
        ExpMode::Trunc1 => (mat_exp_trunc1(&n_c)?, mat_exp_trunc1(&n_k)?),
        ExpMode::Exact => (mat_exp(&n_c)?, mat_exp(&n_k)?),
    };
    let c_new = policy.state_mat(state.c.matmul(&exp_c));
    let k_new = policy.state_mat(state.k.matmul(&exp_k));

    let cct_new = policy.linalg_mat(c_new.matmul(&c_new.transpose()));
    let kkt_new = policy.linalg_mat(k_new.matmul(&k_new.transpose()));
    let precond = policy.linalg_mat(cct_new.matmul(g).matmul(&kkt_new));

    let m = policy.state_mat(state.m.scale(h.alpha1).add(&precond).add(&mu.scale(h.kappa)));
    let mu_new = policy.state_mat(mu.sub(&m.scale(h.beta1)));

    Ok((
        mu_new,
        IfKronState {
            c: c_new,
            k: k_new,
            m,
        },
    ))
}
