//! Two-stream HMM toolkit for offline cursive word recognition.
//!
//! The pipeline mirrors a classical right-to-left handwriting recognizer:
//! binary raster pages are denoised and deskewed, segmented into lines and
//! words via projection profiles, and each word image is turned into two
//! frame-synchronous feature streams (an 18-feature sliding-window stream and
//! a four-direction projection stream). Per-character discrete HMMs are
//! trained with embedded Baum-Welch under vector quantization, word models
//! are built by concatenation, and the two streams are combined by weighted
//! log-likelihood fusion or by a composite parallel model.
//!
//! The [`harness`] module ships a synthetic glyph alphabet and corpus
//! generator so the whole system can be trained and evaluated end to end
//! without external data.

pub mod config;
pub mod error;
pub mod features;
pub mod harness;
pub mod hmm;
pub mod lexicon;
pub mod multistream;
pub mod preprocess;
pub mod raster;
pub mod segment;

pub use error::{Error, Result};
pub use raster::{BBox, BinaryImage, GrayImage, PnmImage};
