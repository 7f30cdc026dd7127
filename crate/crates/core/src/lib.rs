pub mod circuit;
pub mod corpus;
pub mod cqtp;
pub mod device;
pub mod pipeline;
pub mod sim;
pub mod thim;
pub mod tswap;
