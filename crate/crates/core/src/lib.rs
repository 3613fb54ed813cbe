//! Character-level LSTM toolkit for ABC folk tunes.
//!
//! The pipeline runs corpus text through [`corpus`] (vocabulary, stateful
//! batches), trains a stacked LSTM from [`model`] with [`adam`] via
//! [`train`], samples new text with [`sampler`], and turns tunes into
//! Standard MIDI Files with [`abc`] and [`midi`]. The `abc-lstm` binary
//! exposes the same steps as subcommands (see [`cli`]).
//!
//! ```no_run
//! use abc_lstm::config::RunConfig;
//! use abc_lstm::train::train;
//!
//! let mut cfg = RunConfig::default();
//! cfg.corpus = vec!["data/nottingham".into()];
//! cfg.epochs = 2;
//! let outcome = train(&cfg, |m| eprintln!("epoch {} loss {:.3}", m.epoch, m.mean_loss))?;
//! # Ok::<(), abc_lstm::train::TrainError>(())
//! ```

pub mod abc;
pub mod adam;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod gradcheck;
pub mod midi;
pub mod model;
pub mod numerics;
pub mod plot;
pub mod sampler;
pub mod train;
