//! The sign-descent limit: with an empty accumulator, a root-based method's
//! first step has the same magnitude no matter how large the gradient is
//! (the root cancels the scale), while the root-free counterpart's step
//! shrinks inversely with the gradient — adaptivity without the sign.

use rootfree::optim::{apply_step, ExpMode, Hyper, Method};
use rootfree::precision::PrecisionPolicy;
use rootfree::problems::Reduction;

fn main() {
    let h = Hyper {
        beta1: 1.0,
        beta2: 0.5,
        gamma: 1.0,
        lambda: 0.0,
        kappa: 0.0,
        alpha1: 0.0,
        b: 1,
        reduction: Reduction::Sum,
        exp_mode: ExpMode::Trunc1,
    };
    let policy = PrecisionPolicy::REFERENCE;
    let mu = [2.0];

    println!("first-step magnitude from zero accumulator state, 1-D:");
    println!("{:>18} {:>12} {:>12} {:>12}", "method", "g=0.7", "g=7", "g=70");
    for method in [
        Method::Rmsprop,
        Method::Shampoo,
        Method::RfRmsprop,
        Method::RfAdagradFull,
    ] {
        let step = |g: f64| -> f64 {
            let state = method.init_state(1, (1, 1), 0.0);
            let (mu1, _) = apply_step(method, (1, 1), &mu, &[g], &state, &h, &policy).unwrap();
            (mu1[0] - mu[0]).abs()
        };
        println!(
            "{:>18} {:>12.6} {:>12.6} {:>12.6}",
            method.as_str(),
            step(0.7),
            step(7.0),
            step(70.0)
        );
    }
    println!("\nroot-based rows are constant (sign descent); root-free rows scale as 1/|g|");
}
