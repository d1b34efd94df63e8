//! Why the root has to go for low-precision training: computing an inverse
//! quarter root under an emulated reduced-precision format falls apart as
//! the matrix gets ill-conditioned, while the inverse-free update (no roots,
//! no inverses, no decompositions) runs entire optimizations in bf16.

use rootfree::precision::FloatFormat;
use rootfree::verify::verify_precision_stress;

fn main() {
    println!("inverse quarter root of a 6x6 SPD matrix, emulated format vs f64 reference:");
    println!("{:>10} {:>12} {:>12} {:>12}", "cond", "bf16", "fp16", "fp32");
    for cond in [1e2, 1e4, 1e6, 1e8] {
        let err = |fmt: FloatFormat| -> String {
            let reports = verify_precision_stress(cond, 1, fmt, 21).unwrap();
            let observed = reports[0].trace.as_ref().unwrap()[0];
            if observed.is_finite() {
                format!("{observed:.2e}")
            } else {
                "NaN".to_string()
            }
        };
        println!(
            "{:>10.0e} {:>12} {:>12} {:>12}",
            cond,
            err(FloatFormat::BF16),
            err(FloatFormat::FP16),
            err(FloatFormat::FP32)
        );
    }

    println!("\n500 steps of inverse-free Shampoo (truncated exponential) on an 8x6");
    println!("matrix least-squares problem, all state rounded through the format:");
    for fmt in [FloatFormat::BF16, FloatFormat::FP16, FloatFormat::FP64] {
        let reports = verify_precision_stress(1e8, 500, fmt, 21).unwrap();
        let finite = reports[1].pass;
        let losses = reports[2].trace.as_ref().unwrap();
        println!(
            "  {:>5}: finite = {finite}, final loss {:.4} (f64 reference {:.4})",
            fmt.name, losses[0], losses[1]
        );
    }
}
