//! Parses a circuit, prints its canonical form and the structured run
//! document.

use gaussim::circuit::{execute, parse, print, report, ExecOptions};

fn main() -> gaussim::error::Result<()> {
    let ir = parse(
        "# squeeze, entangle, measure, correct
         modes 2
         sq 0 r=0.5 phi=0
         bs 0 1 theta=pi/4 phi=0
         m = homodyne 1 angle=0 eff=0.9
         disp 0 dx=0.5*m - 0.1 dp=0",
    )?;
    print!("{}", print(&ir));
    let result = execute(&ir, 3, &ExecOptions::default())?;
    print!("{}", report::run_json(&result));

    match parse("modes 1\ndisp 0 dx=m*m dp=0") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
