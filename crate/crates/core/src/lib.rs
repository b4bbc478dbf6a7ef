pub mod bootstrap;
pub mod committee;
pub mod config;
pub mod corpus;
pub mod features;
pub mod ingest;
pub mod learners;
