use std::fmt;

use super::{FockState, TruncationHealth};
use crate::state::GaussianState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The oracle state is not truncation-healthy, so a mismatch says
    /// nothing about the engine.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub mean_deviation: f64,
    pub cov_deviation: f64,
    pub tolerance: f64,
    pub health: TruncationHealth,
    pub verdict: Verdict,
}

impl ComparisonReport {
    pub fn max_deviation(&self) -> f64 {
        self.mean_deviation.max(self.cov_deviation)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Compares engine moments with oracle moments entry by entry.
///
/// Mode counts must agree; a mismatch is reported as an infinite deviation.
pub fn compare(gauss: &GaussianState, fock: &FockState, tol: f64) -> ComparisonReport {
    let health = fock.health();
    let (mean_deviation, cov_deviation) = if gauss.n_modes() == fock.n_modes() {
        let (mean, cov) = fock.moments();
        ((gauss.mean() - mean).amax(), (gauss.cov() - cov).amax())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let verdict = if !health.healthy {
        Verdict::Inconclusive
    } else if mean_deviation <= tol && cov_deviation <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    ComparisonReport {
        mean_deviation,
        cov_deviation,
        tolerance: tol,
        health,
        verdict,
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE (truncation unhealthy)",
        };
        writeln!(f, "verdict: {verdict}")?;
        writeln!(f, "mean deviation: {:.3e}", self.mean_deviation)?;
        writeln!(f, "covariance deviation: {:.3e}", self.cov_deviation)?;
        writeln!(f, "tolerance: {:.1e}", self.tolerance)?;
        writeln!(f, "top-level population: {:.3e}", self.health.top_population)?;
        write!(f, "leaked trace: {:.3e}", self.health.leaked_trace)
    }
}
