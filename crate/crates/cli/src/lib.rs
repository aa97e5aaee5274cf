//! Library side of the experiment runner: configuration documents, file
//! formats, command execution, and the acceptance suite. The `quadtilt`
//! binary is a thin argument-parsing layer over [`runner::execute`].

pub mod acceptance;
pub mod config;
pub mod io;
pub mod runner;
