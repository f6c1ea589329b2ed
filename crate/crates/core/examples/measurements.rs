//! Homodyne, heterodyne and no-absorption conditioning on one arm of a
//! two-mode squeezed state.

use gaussim::measurement::{self, OutcomeSource};
use gaussim::state::GaussianState;
use gaussim::symplectic::{apply_symplectic, SymplecticOp};

fn main() -> gaussim::error::Result<()> {
    let tms = apply_symplectic(&GaussianState::vacuum(2)?, &SymplecticOp::two_mode_squeeze(0, 1, 0.3)?)?;

    let (rec, post) = measurement::homodyne(&tms, 1, 0.0, 1.0, OutcomeSource::Forced(&[1.0]), "x")?;
    println!("homodyne x = 1: density {:.6}", rec.density_or_prob);
    println!("  kept arm mean {:.4?}, cov{:.4}", post.mean().as_slice(), post.cov());

    let (rec, post) = measurement::homodyne(&tms, 1, 0.0, 0.6, OutcomeSource::Forced(&[1.0]), "x")?;
    println!("60% efficient homodyne: density {:.6}, kept x mean {:.6}", rec.density_or_prob, post.mean()[0]);

    let (rec, post) = measurement::heterodyne(&tms, 1, OutcomeSource::Forced(&[1.0, -0.5]), "h")?;
    println!("heterodyne (1, -0.5): density {:.6}, kept mean {:.4?}", rec.density_or_prob, post.mean().as_slice());

    let p = measurement::vacuum_projection_probability(&tms, &[1])?;
    let (_, post) = measurement::condition_on_no_absorption(&tms, &[1], "v")?;
    println!("no-absorption probability {p:.6}; kept arm cov{}", post.cov());
    Ok(())
}
