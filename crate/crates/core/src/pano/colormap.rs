use image::{Rgb, RgbImage};

use super::ScalarMap;

// Coarse samples of a perceptually ordered blue-cyan-green-yellow-red ramp.
const RAMP: [[f64; 3]; 9] = [
    [0.19, 0.07, 0.23],
    [0.27, 0.33, 0.80],
    [0.16, 0.62, 0.96],
    [0.10, 0.85, 0.75],
    [0.40, 0.98, 0.36],
    [0.78, 0.94, 0.20],
    [0.99, 0.73, 0.22],
    [0.93, 0.36, 0.08],
    [0.48, 0.02, 0.01],
];

fn ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let x = RAMP[i][c] * (1.0 - f) + RAMP[i + 1][c] * f;
        *o = (x * 255.0).round() as u8;
    }
    out
}

/// Renders `map` with values clamped to `[lo, hi]`. Non-finite samples are black.
pub fn false_color(map: &ScalarMap, lo: f64, hi: f64) -> RgbImage {
    let span = if hi > lo { hi - lo } else { 1.0 };
    RgbImage::from_fn(map.width() as u32, map.height() as u32, |x, y| {
        let v = map.get(x as usize, y as usize);
        if v.is_finite() {
            Rgb(ramp((v - lo) / span))
        } else {
            Rgb([0, 0, 0])
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints_and_clamping() {
        let map = ScalarMap::new(4, 1, vec![-5.0, 0.0, 10.0, f64::NAN]).unwrap();
        let img = false_color(&map, 0.0, 10.0);
        assert_eq!(img.get_pixel(0, 0), img.get_pixel(1, 0));
        assert_eq!(img.get_pixel(2, 0).0, ramp(1.0));
        assert_eq!(img.get_pixel(3, 0).0, [0, 0, 0]);
    }
}
