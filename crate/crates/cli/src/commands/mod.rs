pub mod evaluate;
pub mod generate;
pub mod plot;
pub mod prepare;
pub mod train;
