fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(|s| s.as_str()).unwrap_or("cube_momentum");
    let started = std::time::Instant::now();
    match abd_multibody::bench::run_benchmark(name) {
        Ok(report) => {
            for c in &report.checks {
                println!("[{}] {} : measured {:.6e} ({})",
                    if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.bound);
            }
            println!("elapsed: {:.2}s", started.elapsed().as_secs_f64());
        }
        Err(e) => println!("ERROR: {e}"),
    }
}
