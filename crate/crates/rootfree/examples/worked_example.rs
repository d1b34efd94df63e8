//! The one-dimensional worked example: reparameterize ℓ(a) = ½a² as a = 2b
//! and take one adaptive step from a0 = 2 (so b0 = 1). The root-based update
//! lands on a1 = 1 but b1 = 0 — the two runs stop being the same trajectory.
//! Dropping the root gives a1 = 1.5 and b1 = 0.75 with a1 = 2·b1 exactly.

use rootfree::optim::{
    apply_step, rmsprop_step, DiagState, ExpMode, FullState, Hyper, Method, OptimizerState,
};
use rootfree::precision::PrecisionPolicy;
use rootfree::problems::Reduction;

fn main() {
    let h = Hyper {
        beta1: 1.0,
        beta2: 1.0,
        gamma: 0.0,
        lambda: 0.0,
        kappa: 0.0,
        alpha1: 0.0,
        b: 1,
        reduction: Reduction::Sum,
        exp_mode: ExpMode::Trunc1,
    };
    let policy = PrecisionPolicy::REFERENCE;

    // Gradients of ½a² at a0 = 2 and of ½(2b)² at b0 = 1.
    let (g_a, g_b) = (2.0, 4.0);

    let zero = DiagState::new(1, 0.0);
    let (a1, _) = rmsprop_step(&[2.0], &[g_a], &zero, &h, &policy).unwrap();
    let (b1, _) = rmsprop_step(&[1.0], &[g_b], &zero, &h, &policy).unwrap();
    println!("root-based step:  a1 = {}   b1 = {}   2*b1 = {}", a1[0], b1[0], 2.0 * b1[0]);
    println!("  -> invariance broken: |a1 - 2 b1| = {}", (a1[0] - 2.0 * b1[0]).abs());

    let zero_full = OptimizerState::Full(FullState::new(1, 0.0));
    let (a1, _) = apply_step(Method::RfAdagradFull, (1, 1), &[2.0], &[g_a], &zero_full, &h, &policy)
        .unwrap();
    let (b1, _) = apply_step(Method::RfAdagradFull, (1, 1), &[1.0], &[g_b], &zero_full, &h, &policy)
        .unwrap();
    println!("root-free step:   a1 = {}  b1 = {}  2*b1 = {}", a1[0], b1[0], 2.0 * b1[0]);
    println!("  -> invariance preserved: |a1 - 2 b1| = {}", (a1[0] - 2.0 * b1[0]).abs());
}
