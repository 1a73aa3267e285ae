//! Per-pixel luminance, illuminance, and energy influx, plus circular patch
//! statistics.
//!
//! All conversions are linear in the radiometric signal. The illuminance step
//! assumes Lambertian surfaces of known diffuse reflectance.

use std::f64::consts::PI;
use std::ops::Deref;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pano::{HdrPanorama, ScalarMap};
use crate::{Error, Result};

/// Default luminous efficacy for converting radiance to luminance, lm/W.
pub const DEFAULT_EFFICACY: f64 = 179.0;
/// Default photometric channel weights (Rec. 709 luminance coefficients).
pub const DEFAULT_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];
/// Sunlight illuminance equivalent to 1 W/m².
pub const DEFAULT_LUX_PER_WATT: f64 = 120.0;

macro_rules! map_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(ScalarMap);

        impl $name {
            pub fn new(map: ScalarMap) -> Result<Self> {
                if let Some(i) = map.data().iter().position(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::input(format!(
                        "{} sample {} is negative or non-finite",
                        stringify!($name),
                        i
                    )));
                }
                Ok(Self(map))
            }

            pub fn into_inner(self) -> ScalarMap {
                self.0
            }
        }

        impl Deref for $name {
            type Target = ScalarMap;

            fn deref(&self) -> &ScalarMap {
                &self.0
            }
        }
    };
}

map_newtype!(
    /// Luminance, cd/m².
    LuminanceMap
);
map_newtype!(
    /// Illuminance, lx.
    IlluminanceMap
);
map_newtype!(
    /// Energy influx, W/m².
    FluxMap
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhotometryConfig {
    /// lm/W
    pub efficacy: f64,
    pub weights: [f64; 3],
    /// lx per W/m²
    pub lux_per_watt: f64,
}

impl Default for PhotometryConfig {
    fn default() -> Self {
        Self {
            efficacy: DEFAULT_EFFICACY,
            weights: DEFAULT_WEIGHTS,
            lux_per_watt: DEFAULT_LUX_PER_WATT,
        }
    }
}

impl PhotometryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("luminance weights must be finite and non-negative"));
        }
        if !(self.efficacy.is_finite() && self.efficacy >= 0.0) {
            return Err(Error::config("luminous efficacy must be finite and non-negative"));
        }
        if !(self.lux_per_watt.is_finite() && self.lux_per_watt > 0.0) {
            return Err(Error::config(format!(
                "lux per W/m² must be positive, got {}",
                self.lux_per_watt
            )));
        }
        Ok(())
    }

    /// Panorama straight through to energy influx.
    pub fn flux(&self, pano: &HdrPanorama, reflectance: &Reflectance) -> Result<FluxMap> {
        self.validate()?;
        let l = luminance_from_hdr(pano, self.efficacy, self.weights)?;
        let e = illuminance_from_luminance(&l, reflectance)?;
        flux_from_illuminance(&e, self.lux_per_watt)
    }
}

/// `L = efficacy · (w·rgb) · scale` per pixel.
pub fn luminance_from_hdr(pano: &HdrPanorama, efficacy: f64, weights: [f64; 3]) -> Result<LuminanceMap> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::input("luminance weights must be finite and non-negative"));
    }
    let k = efficacy * pano.scale();
    let data = pano
        .pixels()
        .par_iter()
        .map(|p| k * (weights[0] * p[0] + weights[1] * p[1] + weights[2] * p[2]))
        .collect();
    LuminanceMap::new(ScalarMap::new(pano.width(), pano.height(), data)?)
}

/// Diffuse reflectance, either one value for the scene or one per pixel.
#[derive(Debug, Clone, PartialEq)]
pub enum Reflectance {
    Uniform(f64),
    PerPixel(ScalarMap),
}

fn check_reflectance(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!(
            "reflectance must lie in (0, 1], got {r}"
        )))
    }
}

/// Lambertian conversion `E = L·π / R`.
pub fn illuminance_from_luminance(l: &LuminanceMap, r: &Reflectance) -> Result<IlluminanceMap> {
    let map = match r {
        Reflectance::Uniform(r) => {
            check_reflectance(*r)?;
            let r = *r;
            l.map(|x| x * PI / r)
        }
        Reflectance::PerPixel(rm) => {
            if let Some(bad) = rm.data().iter().find(|r| check_reflectance(**r).is_err()) {
                check_reflectance(*bad)?;
            }
            l.zip_map(rm, |x, r| x * PI / r)?
        }
    };
    IlluminanceMap::new(map)
}

/// `φ_q = E / lux_per_watt`.
pub fn flux_from_illuminance(e: &IlluminanceMap, lux_per_watt: f64) -> Result<FluxMap> {
    if !(lux_per_watt.is_finite() && lux_per_watt > 0.0) {
        return Err(Error::config(format!(
            "lux per W/m² must be positive, got {lux_per_watt}"
        )));
    }
    FluxMap::new(e.map(|x| x / lux_per_watt))
}

/// Circular region in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub u: f64,
    pub v: f64,
    pub radius: f64,
}

impl PatchSpec {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        let (dx, dy) = (x as f64 - self.u, y as f64 - self.v);
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchStat {
    pub mean: f64,
    pub count: usize,
}

/// Mean over pixels whose centers fall inside the circle, summed row-major.
///
/// Non-finite samples (masked pixels) are skipped and not counted.
pub fn patch_mean(map: &ScalarMap, patch: &PatchSpec) -> Result<PatchStat> {
    if !(patch.radius > 0.0 && patch.radius.is_finite()) {
        return Err(Error::input(format!("patch radius must be positive, got {}", patch.radius)));
    }
    if !patch.u.is_finite() || !patch.v.is_finite() {
        return Err(Error::input("patch center must be finite"));
    }
    let clip = |c: f64, n: usize| -> (usize, usize) {
        let lo = (c - patch.radius).ceil().max(0.0);
        let hi = (c + patch.radius).floor().min(n as f64 - 1.0);
        (lo as usize, hi.max(-1.0) as usize)
    };
    let (x0, x1) = clip(patch.u, map.width());
    let (y0, y1) = clip(patch.v, map.height());
    let mut sum = 0.0;
    let mut count = 0usize;
    if patch.u + patch.radius >= 0.0 && patch.v + patch.radius >= 0.0 {
        for y in y0..=y1.min(map.height() - 1) {
            for x in x0..=x1.min(map.width() - 1) {
                let val = map.get(x, y);
                if patch.contains(x, y) && val.is_finite() {
                    sum += val;
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::input(format!(
            "patch at ({}, {}) r={} covers no pixel centers of a {}x{} map",
            patch.u,
            patch.v,
            patch.radius,
            map.width(),
            map.height()
        )));
    }
    Ok(PatchStat {
        mean: sum / count as f64,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn uniform_pano(rgb: [f64; 3], scale: f64) -> HdrPanorama {
        HdrPanorama::new(8, 4, vec![rgb; 32], scale).unwrap()
    }

    #[test]
    fn zero_image_zero_luminance() {
        let l = luminance_from_hdr(&uniform_pano([0.0; 3], 1.0), 179.0, DEFAULT_WEIGHTS).unwrap();
        assert!(l.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_white_is_efficacy() {
        let l = luminance_from_hdr(&uniform_pano([1.0; 3], 1.0), 179.0, DEFAULT_WEIGHTS).unwrap();
        // 0.2126 + 0.7152 + 0.0722 = 1
        assert!(l.data().iter().all(|&x| (x - 179.0).abs() < 1e-12));
    }

    #[test]
    fn scale_is_linear() {
        let a = luminance_from_hdr(&uniform_pano([0.3, 0.2, 0.9], 1.0), 179.0, DEFAULT_WEIGHTS).unwrap();
        let b = luminance_from_hdr(&uniform_pano([0.3, 0.2, 0.9], 2.0), 179.0, DEFAULT_WEIGHTS).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-15);
        }
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(luminance_from_hdr(&uniform_pano([1.0; 3], 1.0), 179.0, [0.5, -0.1, 0.6]).is_err());
    }

    fn lum(v: f64) -> LuminanceMap {
        LuminanceMap::new(ScalarMap::filled(2, 1, v)).unwrap()
    }

    #[test]
    fn lambertian_illuminance() {
        let e = illuminance_from_luminance(&lum(0.0), &Reflectance::Uniform(0.5)).unwrap();
        assert_eq!(e.get(0, 0), 0.0);
        let e = illuminance_from_luminance(&lum(100.0), &Reflectance::Uniform(0.5)).unwrap();
        assert_relative_eq!(e.get(0, 0), 628.318_530_717_958_6, max_relative = 1e-15);
        let e = illuminance_from_luminance(&lum(1.0 / PI), &Reflectance::Uniform(1.0)).unwrap();
        assert_relative_eq!(e.get(1, 0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn non_physical_reflectance_rejected() {
        for r in [0.0, -0.2, 1.01, f64::NAN] {
            assert!(illuminance_from_luminance(&lum(1.0), &Reflectance::Uniform(r)).is_err());
        }
        let rm = ScalarMap::new(2, 1, vec![0.5, 0.0]).unwrap();
        assert!(illuminance_from_luminance(&lum(1.0), &Reflectance::PerPixel(rm)).is_err());
        let rm = ScalarMap::new(2, 1, vec![0.5, 0.25]).unwrap();
        let e = illuminance_from_luminance(&lum(1.0), &Reflectance::PerPixel(rm)).unwrap();
        assert_relative_eq!(e.get(1, 0), 4.0 * PI);
    }

    #[test]
    fn lux_to_watts() {
        let e = IlluminanceMap::new(ScalarMap::new(3, 1, vec![120.0, 12_000.0, 0.0]).unwrap()).unwrap();
        let f = flux_from_illuminance(&e, 120.0).unwrap();
        assert_relative_eq!(f.get(0, 0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(f.get(1, 0), 100.0, max_relative = 1e-12);
        assert_eq!(f.get(2, 0), 0.0);
        assert!(matches!(flux_from_illuminance(&e, 0.0), Err(Error::Config(_))));
        assert!(matches!(flux_from_illuminance(&e, -120.0), Err(Error::Config(_))));
    }

    #[test]
    fn patch_constant_and_outside() {
        let map = ScalarMap::filled(20, 10, 7.5);
        let s = patch_mean(&map, &PatchSpec { u: 3.2, v: 4.0, radius: 2.0 }).unwrap();
        assert_eq!(s.mean, 7.5);
        let edge = patch_mean(&map, &PatchSpec { u: -1.5, v: 0.0, radius: 2.0 }).unwrap();
        assert!(edge.count > 0);
        assert!(patch_mean(&map, &PatchSpec { u: 40.0, v: 4.0, radius: 2.0 }).is_err());
        assert!(patch_mean(&map, &PatchSpec { u: -5.0, v: -5.0, radius: 2.0 }).is_err());
        assert!(patch_mean(&map, &PatchSpec { u: 5.0, v: 5.0, radius: 0.0 }).is_err());
    }

    fn brute_force(map: &ScalarMap, p: &PatchSpec) -> Option<(f64, usize)> {
        let mut sum = 0.0;
        let mut n = 0;
        for y in 0..map.height() {
            for x in 0..map.width() {
                let (dx, dy) = (x as f64 - p.u, y as f64 - p.v);
                if dx * dx + dy * dy <= p.radius * p.radius {
                    sum += map.get(x, y);
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sum / n as f64, n))
    }

    #[test]
    fn single_hot_pixel_in_patch() {
        let mut map = ScalarMap::filled(16, 8, 0.0);
        map.set(5, 4, 10.0);
        let p = PatchSpec { u: 5.3, v: 3.6, radius: 2.5 };
        let (_, n) = brute_force(&map, &p).unwrap();
        // centers within 2.5 of (5.3, 3.6)
        assert_eq!(n, 20);
        let s = patch_mean(&map, &p).unwrap();
        assert_eq!(s.count, n);
        assert_eq!(s.mean, 10.0 / n as f64);
    }

    proptest! {
        #[test]
        fn patch_mean_matches_brute_force(
            u in -4.0f64..28.0, v in -4.0f64..14.0, r in 0.3f64..6.0, seed in 0u64..1000
        ) {
            let map = ScalarMap::from_fn(24, 10, |x, y| ((x * 31 + y * 17) as u64 ^ seed) as f64 % 13.0);
            let p = PatchSpec { u, v, radius: r };
            match (patch_mean(&map, &p), brute_force(&map, &p)) {
                (Ok(s), Some((m, n))) => {
                    prop_assert_eq!(s.count, n);
                    prop_assert_eq!(s.mean, m);
                }
                (Err(_), None) => {}
                (a, b) => prop_assert!(false, "mismatch {:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn pipeline_is_linear(a in 0.01f64..50.0, r in 0.05f64..1.0, g in 0.0f64..5.0) {
            let cfg = PhotometryConfig::default();
            let base = uniform_pano([g, 0.5 * g, 1.0], 1.0);
            let scaled = base.clone().with_scale(a).unwrap();
            let f1 = cfg.flux(&base, &Reflectance::Uniform(r)).unwrap();
            let f2 = cfg.flux(&scaled, &Reflectance::Uniform(r)).unwrap();
            for (x, y) in f1.data().iter().zip(f2.data()) {
                prop_assert!((a * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
            }
        }

        #[test]
        fn lower_reflectance_more_illuminance(l in 0.001f64..1e4, r1 in 0.01f64..1.0, d in 0.001f64..0.5) {
            let r2 = (r1 - d).max(0.005);
            prop_assume!(r2 < r1);
            let m = lum(l);
            let e1 = illuminance_from_luminance(&m, &Reflectance::Uniform(r1)).unwrap();
            let e2 = illuminance_from_luminance(&m, &Reflectance::Uniform(r2)).unwrap();
            prop_assert!(e2.get(0, 0) > e1.get(0, 0));
        }
    }
}
