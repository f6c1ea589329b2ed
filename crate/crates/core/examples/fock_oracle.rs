//! Cross-checks the Gaussian engine against the Fock oracle, and runs a
//! photon-counting circuit that only the oracle can execute. Squeezed
//! vacuum only ever shows even photon numbers.

use gaussim::circuit::{execute, execute_fock, parse, Backend, ExecOptions};
use gaussim::fock::compare;

fn main() -> gaussim::error::Result<()> {
    let ir = parse(
        "modes 2
         init 0 coherent 1 0.5
         sq 1 r=0.3 phi=0.2
         bs 0 1 theta=0.6 phi=0.1
         loss 0 eta=0.8
         amp 1 gain=1.1",
    )?;
    let gauss = execute(&ir, 0, &ExecOptions::default())?;
    let (_, oracle) = execute_fock(&ir, 0, &ExecOptions::with_backend(Backend::Fock { cutoff: 25 }))?;
    println!("{}", compare(&gauss.final_state, &oracle, 1e-6));

    let counting = parse("modes 1\ninit 0 squeezed 1 0\nn = photoncount 0")?;
    let fock = ExecOptions::with_backend(Backend::Fock { cutoff: 30 });
    for seed in 0..8 {
        let r = execute(&counting, seed, &fock)?;
        let rec = r.record("n").expect("count record");
        println!("seed {seed}: n = {:?} with probability {:.4}", rec.values().unwrap(), rec.density_or_prob);
    }
    Ok(())
}
