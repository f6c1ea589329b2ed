//! Loss, amplification and additive noise acting on a squeezed state.

use gaussim::channel::{apply_channel, compose_channels, GaussianChannel};
use gaussim::state::GaussianState;
use gaussim::symplectic::{apply_symplectic, SymplecticOp};
use nalgebra::DMatrix;

fn main() -> gaussim::error::Result<()> {
    let squeezed = apply_symplectic(&GaussianState::vacuum(1)?, &SymplecticOp::squeeze(0, 0.8, 0.0)?)?;
    println!("squeezed x variance: {:.4}", squeezed.cov()[(0, 0)]);

    let loss = GaussianChannel::loss(0, 0.7)?;
    let amp = GaussianChannel::amplifier(0, 1.2)?;
    let noise = GaussianChannel::additive_noise(0, DMatrix::from_diagonal_element(2, 2, 0.05))?;
    for (name, ch) in [("loss 0.7", &loss), ("amplifier 1.2", &amp), ("noise 0.05", &noise)] {
        let out = apply_channel(&squeezed, ch)?;
        let cp = ch.is_cp();
        println!(
            "{name:>14}: x variance {:.4}, CP min eigenvalue {:.2e}",
            out.cov()[(0, 0)],
            cp.min_eigenvalue
        );
    }

    // Loss of 1/G after gain G leaves the quadratures unscaled but noisier.
    let chain = compose_channels(&GaussianChannel::loss(0, 1.0 / 1.2)?, &amp)?;
    println!("loss after gain, X = {}", chain.x());
    println!("                 Y = {}", chain.y());
    Ok(())
}
