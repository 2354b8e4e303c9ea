//! Virtual blind road guidance: record a walkable trail, turn it into a
//! point-of-interest graph, plan over it and steer a walker along the result.

pub mod blind_road;
pub mod geometry;
pub mod route_following;
pub mod sensors;
pub mod sim;
pub mod wayfinding;
