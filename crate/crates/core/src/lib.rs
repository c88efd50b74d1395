pub mod adapter;
pub mod align;
pub mod curation;
pub mod encoder;
pub mod gradients;
pub mod hybrid;
mod layers;
pub mod model;
pub mod numerics;
pub mod pretrain;
pub mod table;
