//! Bidirectional selective state-space model (BiSSM) for multi-label
//! time-series classification, built from first principles.
//!
//! The crate is organized around a small dense-tensor type with a reverse-mode
//! autodiff tape ([`tensor`], [`tape`]), the SSM discretization / scan kernels
//! ([`ssm`]), the full encoder + Mamba-layer network ([`model`]), an AdamW
//! training harness ([`train`]), rank-statistic evaluation metrics
//! ([`metrics`]), ECG record preprocessing and synthesis ([`data`]), and a
//! runtime verification suite with independent oracles ([`verify`]).
//!
//! Everything here is `no_std`-compatible (with `alloc`); file formats, the
//! CLI, and benchmarking live in the companion `ecgmamba-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod ssm;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use tape::{NodeId, Tape};
pub use tensor::{DType, Tensor};

use core::sync::atomic::{AtomicBool, Ordering};

static CHECKED: AtomicBool = AtomicBool::new(false);

/// Enable or disable checked mode (finite-value assertions on op outputs,
/// positivity checks in discretization, NaN-gradient halts in training).
pub fn set_checked(on: bool) {
    CHECKED.store(on, Ordering::Relaxed);
}

/// Whether checked mode is active.
pub fn checked() -> bool {
    CHECKED.load(Ordering::Relaxed)
}

/// Float functions that are std methods when std is available and libm
/// routines otherwise. Only the ones missing from `core` live here.
pub(crate) mod flt {
    macro_rules! shim {
        ($name:ident, $std:ident, $libm:ident) => {
            #[inline(always)]
            pub fn $name(x: f64) -> f64 {
                #[cfg(feature = "std")]
                {
                    x.$std()
                }
                #[cfg(not(feature = "std"))]
                {
                    libm::$libm(x)
                }
            }
        };
    }

    shim!(exp, exp, exp);
    shim!(exp_m1, exp_m1, expm1);
    shim!(ln, ln, log);
    shim!(ln_1p, ln_1p, log1p);
    shim!(sqrt, sqrt, sqrt);
    shim!(sin, sin, sin);
    shim!(cos, cos, cos);
    shim!(floor, floor, floor);
    shim!(round, round, round);

    #[inline(always)]
    pub fn powf(x: f64, y: f64) -> f64 {
        #[cfg(feature = "std")]
        {
            x.powf(y)
        }
        #[cfg(not(feature = "std"))]
        {
            libm::pow(x, y)
        }
    }
}
