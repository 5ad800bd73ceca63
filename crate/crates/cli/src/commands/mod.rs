pub mod fit;
pub mod reproduce;
pub mod sample;
pub mod serve;
pub mod sweep;
pub mod train;
pub mod verify;
