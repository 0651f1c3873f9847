//! Simulation and analysis toolkit for undetected-photon infrared
//! spectroscopy with a double-pass SPDC interferometer.
//!
//! The crate follows the measurement chain: refractive-index data
//! ([`dispersion`]), phase matching in the nonlinear crystal ([`spdc`]),
//! FTIR spectra and their conversion to sample transmissivity ([`spectra`]),
//! the interferometer map and fringe visibility ([`interferometer`]),
//! parameter sweeps of the visibility figure of merit ([`sweep`]) and
//! secondary-structure decomposition of the Amide I band ([`structfit`]).

// Negated comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dispersion;
pub mod interferometer;
pub mod pipeline;
pub mod spdc;
pub mod spectra;
pub mod structfit;
pub mod sweep;
pub mod synthetic;

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dispersion(#[from] dispersion::DispersionError),
    #[error(transparent)]
    Spdc(#[from] spdc::SpdcError),
    #[error(transparent)]
    Spectra(#[from] spectra::SpectraError),
    #[error(transparent)]
    Interferometer(#[from] interferometer::InterferometerError),
    #[error(transparent)]
    Fit(#[from] structfit::FitError),
    #[error(transparent)]
    Sweep(#[from] sweep::SweepError),
}

impl Error {
    /// Fringe extraction or a fit failed, as opposed to bad input.
    pub fn is_computation_failure(&self) -> bool {
        match self {
            Error::Interferometer(e) => e.is_fringe_failure(),
            Error::Fit(e) => matches!(
                e,
                structfit::FitError::NonConvergence { .. }
                    | structfit::FitError::NoSeeds
                    | structfit::FitError::EmptyWindow { .. }
                    | structfit::FitError::ZeroArea
            ),
            Error::Sweep(_) => true,
            _ => false,
        }
    }
}
