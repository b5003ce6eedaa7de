pub mod apex;
pub mod porting;
pub mod report;
pub mod suite;
pub mod sweep;
pub mod timebase;
pub mod workloads;
