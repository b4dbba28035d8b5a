pub mod autoparallel;
pub mod catalog;
pub mod cli;
pub mod connection;
pub mod degeneracy;
pub mod dsl;
pub mod jet;
pub mod json;
pub mod linalg;
pub mod scalar;
pub mod taylor;
pub mod verify;
