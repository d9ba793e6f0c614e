//! Headless rendering and command-line front end.

pub mod canvas;
pub mod commands;
pub mod scene;
