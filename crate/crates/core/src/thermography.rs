//! TLinear radiometric re-emissivity correction for thermal camera frames.
//!
//! ```text
//! W(T)  = R / (exp(B / T) − F) + O
//! S     = ε̂ W_obj + (1 − ε̂) W(T_back)
//! W_obj = (S − (1 − ε) W(T_back)) / ε
//! T     = B / ln(R / (W_obj − O) + F)
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pano::ScalarMap;
use crate::{Error, Result};

/// Camera calibration constants. There are no defaults: the values must come
/// from the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlirCalibration {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "O")]
    pub o: f64,
    /// Emissivity the camera assumed when producing TLinear values.
    pub eps_hat: f64,
    /// Reflected background temperature, K.
    #[serde(rename = "T_back_K")]
    pub t_back: f64,
}

impl FlirCalibration {
    pub fn from_json(text: &str) -> Result<Self> {
        let cal: Self = serde_json::from_str(text).map_err(|e| Error::input(format!("calibration JSON: {e}")))?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cal: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r, self.b, self.f, self.o, self.eps_hat, self.t_back];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("calibration constants must be finite"));
        }
        if self.r <= 0.0 || self.b <= 0.0 || self.f < 0.0 {
            return Err(Error::input("calibration requires R > 0, B > 0, F >= 0"));
        }
        if !(0.0..=1.0).contains(&self.eps_hat) {
            return Err(Error::input(format!("eps_hat must lie in [0, 1], got {}", self.eps_hat)));
        }
        if self.t_back <= 0.0 {
            return Err(Error::input("T_back_K must be positive"));
        }
        self.counts(self.t_back).map(|_| ())
    }

    /// `W(T)` in counts.
    pub fn counts(&self, t: f64) -> Result<f64> {
        counts_from_temp(t, self)
    }

    /// `W(T_back)`.
    pub fn background_counts(&self) -> Result<f64> {
        self.counts(self.t_back)
    }
}

pub fn counts_from_temp(t: f64, cal: &FlirCalibration) -> Result<f64> {
    let denom = (cal.b / t).exp() - cal.f;
    if !(t > 0.0) || !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::input(format!("temperature {t} K is outside the calibration domain")));
    }
    Ok(cal.r / denom + cal.o)
}

/// Flux at the detector for an object emitting `w_obj` counts.
pub fn detector_flux(w_obj: f64, cal: &FlirCalibration) -> Result<f64> {
    Ok(cal.eps_hat * w_obj + (1.0 - cal.eps_hat) * cal.background_counts()?)
}

/// Object counts recovered from detector flux `s` under actual emissivity `eps`.
pub fn correct_emissivity(s: f64, eps: f64, cal: &FlirCalibration) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::input(format!("emissivity must lie in (0, 1], got {eps}")));
    }
    Ok((s - (1.0 - eps) * cal.background_counts()?) / eps)
}

pub fn temp_from_counts(w: f64, cal: &FlirCalibration) -> Result<f64> {
    let arg = cal.r / (w - cal.o) + cal.f;
    if !(w > cal.o) || !(arg > 1.0) || !arg.is_finite() {
        return Err(Error::input(format!("{w} counts is outside the calibration domain")));
    }
    Ok(cal.b / arg.ln())
}

/// Re-expresses one TLinear temperature under emissivity `eps`.
pub fn reprocess_temp(t: f64, eps: f64, cal: &FlirCalibration) -> Result<f64> {
    let s = detector_flux(counts_from_temp(t, cal)?, cal)?;
    temp_from_counts(correct_emissivity(s, eps, cal)?, cal)
}

/// Camera temperature image in kelvin.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFrame {
    pub temps: ScalarMap,
}

/// Sidecar describing a 16-bit frame: `T = factor · count + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub width: usize,
    pub height: usize,
    /// K per count.
    pub factor: f64,
    /// K.
    pub offset: f64,
}

impl FrameHeader {
    /// Header matching the common TLinear high-resolution mode (0.01 K per count).
    pub fn centikelvin(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            factor: 0.01,
            offset: 0.0,
        }
    }
}

pub const BOSON_WIDTH: usize = 640;
pub const BOSON_HEIGHT: usize = 512;

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

impl ThermalFrame {
    pub fn new(temps: ScalarMap) -> Result<Self> {
        if let Some(bad) = temps.data().iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::input(format!("thermal frame holds non-physical temperature {bad}")));
        }
        Ok(Self { temps })
    }

    pub fn width(&self) -> usize {
        self.temps.width()
    }

    pub fn height(&self) -> usize {
        self.temps.height()
    }

    /// Reads a raw little-endian `u16` frame and its `<path>.json` sidecar.
    pub fn read(path: &Path) -> Result<Self> {
        Self::read_with_header(path).map(|(f, _)| f)
    }

    pub fn read_with_header(path: &Path) -> Result<(Self, FrameHeader)> {
        let side = sidecar_path(path);
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let header: FrameHeader = serde_json::from_str(&text).map_err(|e| Error::format(&side, e.to_string()))?;
        if !(header.factor.is_finite() && header.factor > 0.0 && header.offset.is_finite()) {
            return Err(Error::format(&side, "factor must be positive and offset finite"));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let n = header.width * header.height;
        if n == 0 || bytes.len() != 2 * n {
            return Err(Error::format(
                path,
                format!("expected {} bytes for {}x{}, found {}", 2 * n, header.width, header.height, bytes.len()),
            ));
        }
        let data = bytes
            .chunks_exact(2)
            .map(|c| header.factor * u16::from_le_bytes([c[0], c[1]]) as f64 + header.offset)
            .collect();
        Ok((Self::new(ScalarMap::new(header.width, header.height, data)?)?, header))
    }

    /// Quantizes to `u16` under `header` and writes frame plus sidecar.
    pub fn write(&self, path: &Path, header: &FrameHeader) -> Result<()> {
        if header.width != self.width() || header.height != self.height() {
            return Err(Error::input("frame header dimensions disagree with the frame"));
        }
        let mut bytes = Vec::with_capacity(2 * self.temps.data().len());
        for &t in self.temps.data() {
            let c = ((t - header.offset) / header.factor).round();
            if !(0.0..=u16::MAX as f64).contains(&c) {
                return Err(Error::input(format!("{t} K does not fit the frame encoding")));
            }
            bytes.extend_from_slice(&(c as u16).to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(header).expect("header serializes");
        std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
    }

    /// Applies the full re-emissivity correction to every pixel.
    pub fn reprocess(&self, eps: f64, cal: &FlirCalibration) -> Result<ThermalFrame> {
        cal.validate()?;
        let data = self
            .temps
            .data()
            .par_iter()
            .map(|&t| reprocess_temp(t, eps, cal))
            .collect::<Result<Vec<f64>>>()?;
        Ok(ThermalFrame {
            temps: ScalarMap::new(self.width(), self.height(), data)?,
        })
    }
}

/// Non-physical constants for tests and demos only; not a real camera.
pub fn synthetic_calibration() -> FlirCalibration {
    FlirCalibration {
        r: 16556.0,
        b: 1428.0,
        f: 1.0,
        o: -342.0,
        eps_hat: 0.95,
        t_back: 293.15,
    }
}
