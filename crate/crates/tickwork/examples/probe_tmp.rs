use tickwork::optimize::{optimize_precision, OptimizationConfig};

fn main() {
    for d in 2..=12usize {
        let config = OptimizationConfig::new(d, 42).with_restarts(12 * d);
        let result = optimize_precision(d, &config).expect("optimization");
        println!(
            "d={d:>2} R={:>10.4} ratio={:.3} secs={:.2}",
            result.best_r,
            result.best_r / (d * d) as f64,
            result.wall_clock.as_secs_f64()
        );
    }
}
