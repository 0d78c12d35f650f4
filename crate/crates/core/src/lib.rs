//! Acoustic front-ends and Gaussian mixture back-end for closed-set speaker
//! identification under additive noise.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `cepstra` crate.
//!
//! Pipeline in brief:
//!
//! * [`audio`]: buffers, pre-emphasis, framing and resampling.
//! * [`noise`]: SNR-exact additive noise mixing.
//! * [`dsp`]: FFT power spectra, DCT-II, mel/gammatone/Bark filterbanks, LPC.
//! * [`features`]: MFCC, GFCC, PNCC, PLP and LSF extractors plus deltas.
//! * [`gmm`]: diagonal-covariance mixtures trained by EM.
//! * [`eval`]: enrollment, identification and identification-rate reports.
#![no_std]
// `num_traits::Float` supplies float math without std. Whenever std is in
// the build graph (tests, or a dependent that enables it) the inherent
// methods win and the import reads as unused.
#![allow(unused_imports)]
// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod audio;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod gmm;
pub mod matrix;
pub mod noise;
pub mod seed;
pub mod synth;

pub use audio::{AudioBuffer, FrameSequence, Utterance, Window};
pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureKind, FeatureMatrix};
pub use gmm::GmmModel;
pub use matrix::Matrix;
