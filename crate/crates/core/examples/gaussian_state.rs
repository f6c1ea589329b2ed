//! Builds a two-mode state from gates and prints its moments.

use gaussim::state::GaussianState;
use gaussim::symplectic::{apply_symplectic, compose, SymplecticOp};

fn main() -> gaussim::error::Result<()> {
    let vacuum = GaussianState::vacuum(2)?;
    let squeeze = SymplecticOp::squeeze(0, 0.5, 0.0)?;
    let displace = SymplecticOp::displace(0, 1.0, -0.5)?.embed(&[0, 1])?;
    let split = SymplecticOp::beamsplitter(0, 1, std::f64::consts::FRAC_PI_4, 0.0)?;

    let gates = compose(&split, &compose(&displace, &squeeze.embed(&[0, 1])?)?)?;
    println!("symplectic residual: {:.1e}", gates.symplectic_residual());

    let state = apply_symplectic(&vacuum, &gates)?;
    println!("mean: {:.4?}", state.mean().as_slice());
    println!("covariance:{}", state.cov());
    let report = state.validate();
    println!("physical: {} (min eigenvalue of cov + iΩ: {:.2e})", report.valid, report.min_eigenvalue);
    println!("purity determinant: {:.6}", state.purity_determinant());
    Ok(())
}
