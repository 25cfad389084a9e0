pub mod block;
pub mod driver;
pub mod exec;
pub mod free_boundary;
pub mod ivp;
pub mod model;
pub mod output;
pub mod quasi_uniform;
pub mod reference;
pub mod shooting;
pub mod solution;
pub mod tables;
