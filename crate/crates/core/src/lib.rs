pub mod bidcode;
pub mod mechanism;
pub mod paillier;
pub mod protocol;
pub mod sim;
pub mod topology;
