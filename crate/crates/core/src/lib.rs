pub mod access;
pub mod api;
pub mod analytics;
pub mod auth;
pub mod clock;
pub mod config;
pub mod corpus;
pub mod matching;
pub mod model;
pub mod scoring;
pub mod workflow;
pub mod store;
pub mod platform;
