pub mod bench;
pub mod compare;
pub mod encode;
pub mod lagscan;
pub mod network;
pub mod te;
