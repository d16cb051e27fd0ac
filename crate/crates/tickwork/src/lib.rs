pub mod clock;
pub mod d2;
pub mod error;
pub mod integrate;
pub mod linalg;
pub mod stats;
pub mod entropy;
pub mod optimize;
