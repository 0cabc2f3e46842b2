//! Dual-phase dynamic images for short facial motion clips.
//!
//! A clip annotated with onset, apex and offset frames is summarized into a
//! single raster by approximate rank pooling. Besides the full-clip image,
//! the rising (onset to apex) and falling (apex to offset) halves yield two
//! extra training images. The crate also ships a synthetic clip generator,
//! spatial augmentation, k-fold evaluation and a small softmax classifier so
//! the whole pipeline runs end to end without external data.

pub mod augment;
pub mod cli;
pub mod evalkit;
pub mod experiment;
pub mod frameseq;
pub mod rankpool;
pub mod refclf;
pub mod seed;
pub mod synthgen;
