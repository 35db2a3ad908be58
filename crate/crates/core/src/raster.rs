//! Density rasters of random subsums.
//!
//! Sampling is fixed so a seed pins the output bit for bit: samples are cut into
//! chunks of [`CHUNK`], chunk `c` draws from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `c`, and each sample is one `next_u64` whose low `N` bits are the pattern.
//! Chunk counts are merged by integer addition, so the thread count does not matter.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Series;
use crate::error::{Error, Result};
use crate::exactnum::Vec2f;

pub const MAX_RASTER_TERMS: u32 = 40;
pub const MAX_SAMPLES: u64 = 100_000_000;
pub const MAX_SIDE: usize = 8192;
pub const CHUNK: u64 = 1 << 16;

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Region> {
        let r = Region { x_min, x_max, y_min, y_max };
        if !(x_max > x_min && y_max > y_min) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::BadRegion);
        }
        Ok(r)
    }

    /// `(col, row)` with row 0 at the top, or `None` outside.
    fn cell(&self, p: Vec2f, width: usize, height: usize) -> Option<(usize, usize)> {
        if !(p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max) {
            return None;
        }
        let fx = (p.x - self.x_min) / (self.x_max - self.x_min);
        let fy = (self.y_max - p.y) / (self.y_max - self.y_min);
        let col = ((fx * width as f64) as usize).min(width - 1);
        let row = ((fy * height as f64) as usize).min(height - 1);
        Some((col, row))
    }
}

/// `x0,x1,y0,y1`.
impl FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Region> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad region {s:?}"))))
            .collect::<Result<_>>()?;
        match v[..] {
            [a, b, c, d] => Region::new(a, b, c, d),
            _ => Err(Error::Parse(format!("region needs four numbers, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterParams {
    pub terms: u32,
    pub samples: u64,
    pub region: Region,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub region: Region,
    pub width: usize,
    pub height: usize,
    /// row-major, row 0 at the top
    pub counts: Vec<u64>,
    pub samples: u64,
    pub outside: u64,
    pub seed: u64,
    pub terms: u32,
}

impl DensityGrid {
    pub fn get(&self, col: usize, row: usize) -> u64 {
        self.counts[row * self.width + col]
    }

    pub fn nonzero_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Binary PGM, maxval 255, brightness `round(255·ln(1+c)/ln(1+max))`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let scale = if max == 0 { 0.0 } else { 255.0 / (max as f64).ln_1p() };
        out.extend(self.counts.iter().map(|&c| ((c as f64).ln_1p() * scale).round() as u8));
        out
    }

    /// One line per row, comma-separated counts.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.counts.len() * 3);
        for row in self.counts.chunks(self.width) {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                write!(s, "{c}").expect("writing to a string");
            }
            s.push('\n');
        }
        s
    }
}

/// Subsums of all patterns of `ts`, indexed by bitmask.
fn subsum_table(ts: &[Vec2f]) -> Vec<Vec2f> {
    let mut out = vec![Vec2f::ZERO; 1 << ts.len()];
    for (b, t) in ts.iter().enumerate() {
        let step = 1 << b;
        for m in 0..step {
            out[m | step] = out[m] + *t;
        }
    }
    out
}

pub fn raster(series: &dyn Series, p: &RasterParams) -> Result<DensityGrid> {
    if p.terms > MAX_RASTER_TERMS {
        return Err(Error::TooLarge { size: p.terms as u64, max: MAX_RASTER_TERMS as u64 });
    }
    if p.samples > MAX_SAMPLES {
        return Err(Error::TooLarge { size: p.samples, max: MAX_SAMPLES });
    }
    if p.width == 0 || p.height == 0 || p.width > MAX_SIDE || p.height > MAX_SIDE {
        return Err(Error::Precondition(format!("resolution must be between 1 and {MAX_SIDE} per side")));
    }
    let region = Region::new(p.region.x_min, p.region.x_max, p.region.y_min, p.region.y_max)?;
    let terms: Vec<Vec2f> = (1..=p.terms as u64).map(|i| series.term_f64(i)).collect::<Result<_>>()?;
    let lo_bits = terms.len() / 2;
    let lo = subsum_table(&terms[..lo_bits]);
    let hi = subsum_table(&terms[lo_bits..]);
    let lo_mask = (1u64 << lo_bits) - 1;
    let pattern_mask = if p.terms == 64 { u64::MAX } else { (1u64 << p.terms) - 1 };
    let cells = p.width * p.height;

    let chunks = p.samples.div_ceil(CHUNK);
    let (counts, outside) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(c);
            let n = CHUNK.min(p.samples - c * CHUNK);
            let mut counts = vec![0u64; cells];
            let mut outside = 0u64;
            for _ in 0..n {
                let m = rng.next_u64() & pattern_mask;
                let s = lo[(m & lo_mask) as usize] + hi[(m >> lo_bits) as usize];
                match region.cell(s, p.width, p.height) {
                    Some((col, row)) => counts[row * p.width + col] += 1,
                    None => outside += 1,
                }
            }
            (counts, outside)
        })
        .reduce(
            || (vec![0u64; cells], 0),
            |(mut a, oa), (b, ob)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, oa + ob)
            },
        );
    Ok(DensityGrid {
        region,
        width: p.width,
        height: p.height,
        counts,
        samples: p.samples,
        outside,
        seed: p.seed,
        terms: p.terms,
    })
}
