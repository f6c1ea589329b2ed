//! Times circuits of 10 local gates per mode and fits the scaling exponent.

fn main() -> gaussim::error::Result<()> {
    let report = gaussim::bench::run(&[32, 64, 128, 256], 3, 0)?;
    for p in &report.points {
        println!("{:>5} modes, {:>5} gates: {:.4} s", p.n_modes, p.gates, p.seconds);
    }
    println!("log-log slope {:.2}", report.slope);
    Ok(())
}
