pub mod bloch;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod interferometer;
pub mod markov;
pub mod noise;
pub mod oracle;
pub mod perturbative;
pub mod positivity;
pub mod tomography;
