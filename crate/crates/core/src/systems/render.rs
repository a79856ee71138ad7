use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::RealArray;

/// World rectangle shown in a frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    pub viewport: Viewport,
    /// Ball radius in world units.
    pub radius: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 100,
            height: 50,
            viewport: Viewport {
                x_min: -2.0,
                x_max: 2.0,
                y_min: -1.0,
                y_max: 1.0,
            },
            radius: 0.25,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        let v = &self.viewport;
        if self.width == 0 || self.height == 0 || !(v.x_max > v.x_min && v.y_max > v.y_min) || !(self.radius > 0.0) {
            return Err(Error::invalid(
                "render needs positive frame size, radius and a non-empty viewport",
            ));
        }
        Ok(())
    }

    fn px_per_unit(&self) -> (f64, f64) {
        let v = &self.viewport;
        (
            self.width as f64 / (v.x_max - v.x_min),
            self.height as f64 / (v.y_max - v.y_min),
        )
    }

    /// Rasterises antialiased unit-intensity discs at `centres`. A pixel's
    /// value is its approximate coverage, `clamp(r + ½ − dist, 0, 1)` in
    /// pixel units; overlapping discs combine by maximum.
    pub fn render(&self, centres: &[[f64; 2]]) -> Result<Vec<f64>> {
        self.validate()?;
        let v = &self.viewport;
        for c in centres {
            if c[0] - self.radius < v.x_min
                || c[0] + self.radius > v.x_max
                || c[1] - self.radius < v.y_min
                || c[1] + self.radius > v.y_max
            {
                return Err(Error::domain(
                    "render",
                    format!("ball at ({:.3}, {:.3}) leaves the viewport", c[0], c[1]),
                ));
            }
        }
        let (sx, sy) = self.px_per_unit();
        let r = self.radius * sx;
        let mut frame = vec![0.0; self.width * self.height];
        for c in centres {
            let cx = (c[0] - v.x_min) * sx;
            let cy = (v.y_max - c[1]) * sy;
            for row in 0..self.height {
                let py = row as f64 + 0.5;
                for col in 0..self.width {
                    let px = col as f64 + 0.5;
                    let dist = (px - cx).hypot((py - cy) * sx / sy);
                    let value = (r + 0.5 - dist).clamp(0.0, 1.0);
                    let cell = &mut frame[row * self.width + col];
                    *cell = f64::max(*cell, value);
                }
            }
        }
        Ok(frame)
    }
}

/// A sequence of greyscale frames in `[0, 1]`, one flattened row-major
/// frame per row.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMovie {
    pub width: usize,
    pub height: usize,
    pub frames: RealArray,
}

impl PixelMovie {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        self.frames.row(k)
    }

    /// Writes `frame_00000.pgm, …` into `dir`, returning the file names.
    pub fn write_pgm_frames(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        (0..self.len())
            .map(|k| {
                let name = PathBuf::from(format!("frame_{k:05}.pgm"));
                write_pgm(&dir.join(&name), self.width, self.height, self.frame(k))?;
                Ok(name)
            })
            .collect()
    }
}

/// Frames of the two-body state trajectory `states` (`(p₁,p₂,q₁,q₂)` rows).
pub fn render_two_body(states: &RealArray, cfg: &RenderConfig) -> Result<PixelMovie> {
    if states.cols() != 8 {
        return Err(Error::dims("two-body states", 8, states.cols()));
    }
    let mut data = Vec::with_capacity(states.rows() * cfg.width * cfg.height);
    for k in 0..states.rows() {
        let s = states.row(k);
        data.extend(cfg.render(&[[s[4], s[5]], [s[6], s[7]]])?);
    }
    Ok(PixelMovie {
        width: cfg.width,
        height: cfg.height,
        frames: RealArray::matrix(states.rows(), cfg.width * cfg.height, data),
    })
}

/// Binary PGM (P5), 8 bits, values in `[0, 1]` scaled to 0–255.
pub fn write_pgm(path: &Path, width: usize, height: usize, frame: &[f64]) -> Result<()> {
    if frame.len() != width * height {
        return Err(Error::dims("pgm frame", width * height, frame.len()));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = frame
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

/// Reads a P5 file written by [`write_pgm`]: `(width, height, values)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = std::fs::read(path)?;
    let bad = || Error::Format(format!("{} is not an 8-bit P5 image", path.display()));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_string());
    }
    pos += 1;
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
    if fields[0] != "P5" || parse(&fields[3])? != 255 {
        return Err(bad());
    }
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let pixels = bytes.get(pos..pos + w * h).ok_or_else(bad)?;
    Ok((w, h, pixels.iter().map(|b| *b as f64 / 255.0).collect()))
}
