//! Light and heat from HDR panoramas of rooms.
//!
//! Pipeline: an HDR panorama and a room layout give per-pixel luminance,
//! illuminance, and energy influx; the influx drives a transient surface
//! heat simulation on each room plane; the resulting temperatures are baked
//! back into a panoramic heat map.

pub mod analysis;
pub mod error;
pub mod heatsim;
pub mod layout;
pub mod pano;
pub mod photometry;
pub mod scene;
pub mod synthetic;
pub mod thermography;

pub use error::{Error, Result};
pub use scene::{RunConfig, Scene};
