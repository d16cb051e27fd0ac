//! Optimized first-tick precision as a function of clockwork dimension,
//! with all decay channels available.

use tickwork::optimize::{optimize_precision, OptimizationConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let d: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let restarts: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(12 * d);
    let config = OptimizationConfig::new(d, 42).with_restarts(restarts);
    let result = optimize_precision(d, &config).expect("optimization");
    println!(
        "d={d} R={:.5} ratio={:.3} secs={:.2}",
        result.best_r,
        result.best_r / (d * d) as f64,
        result.wall_clock.as_secs_f64()
    );
}
