//! The empirical Fisher flavors side by side on a small logistic regression:
//! the per-sample sum Σ g_i g_iᵀ is full rank, the aggregated-gradient outer
//! product (Σ g_i)(Σ g_i)ᵀ is rank one, and the exact (label-expectation)
//! mini-batch Fisher averages over subsets to exactly 1/N of the full-batch
//! one.

use rootfree::fisher::{
    check_unbiasedness, emp_fisher_new, emp_fisher_scaled, emp_fisher_standard, exact_fisher,
};
use rootfree::linalg::sym_eig;
use rootfree::problems::{synthetic_logreg, Problem};

fn main() {
    let n = 6;
    let p = synthetic_logreg(n, 3, 0.0, 11);
    let mu = vec![0.5, -0.2, 0.3];
    let grads: Vec<Vec<f64>> = (0..n).map(|i| p.per_sample_grad(&mu, i)).collect();

    let standard = emp_fisher_standard(&grads).unwrap();
    let new = emp_fisher_new(&grads).unwrap();
    let scaled = emp_fisher_scaled(&grads, n).unwrap();
    let exact = exact_fisher(&p, &mu, &(0..n).collect::<Vec<_>>()).unwrap();

    let spectrum = |m: &rootfree::linalg::Mat| -> Vec<f64> {
        sym_eig(m).unwrap().values.iter().rev().cloned().collect()
    };
    println!("eigenvalues (descending):");
    println!("  standard (per-sample sum): {:?}", spectrum(&standard.matrix));
    println!("  aggregated (rank-one):     {:?}", spectrum(&new.matrix));
    println!("  scaled (1/N aggregated):   {:?}", spectrum(&scaled.matrix));
    println!("  exact (label expectation): {:?}", spectrum(&exact.matrix));

    let dist = new.matrix.sub(&standard.matrix).fro_norm();
    println!("\nFrobenius distance standard vs aggregated: {dist:.4}");

    println!("\nmini-batch unbiasedness, averaging (1/B)·F over all C({n},B) subsets:");
    for b in 1..=n {
        let dev = check_unbiasedness(&p, &mu, b).unwrap();
        println!("  B = {b}: max entrywise gap to (1/N)·F_full = {dev:.2e}");
    }
}
