pub mod analysis;
pub mod ansatz;
pub mod diagram;
pub mod grammar;
pub mod sim;
pub mod sql;
pub mod trainer;
pub mod workload;
