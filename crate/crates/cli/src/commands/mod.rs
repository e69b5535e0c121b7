pub mod bound;
pub mod optimize;
pub mod plot;
pub mod run;
pub mod sweep;
