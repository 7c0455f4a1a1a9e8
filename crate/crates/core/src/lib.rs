#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod chess;
pub mod engine;
pub mod evolve;
pub mod counterintuit;
pub mod novelty;
pub mod scoring;
pub mod themes;
pub mod uniqueness;
