//! Spacetime diagrams of run records.
//!
//! Space runs over `x ∈ [0, 2N)` with periodic identification and time
//! upward. Slot `s` of the initial surface is the link between `x = s` and
//! `x = s+1` at `t ∈ [0, 1]`. The `k`-th crossing of pair `(i, i+1)` is the
//! vertex at `x = i+1`, `t = 2k + 1 + (i mod 2)`; its L link leaves toward
//! `x-1` and its R link toward `x+1`.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::dynamics::RunRecord;
use crate::error::{Error, Result};
use crate::lattice::Direction;

/// Pixels per lattice unit in image output.
pub const CELL: u32 = 8;

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const ZERO: Rgb<u8> = Rgb([0, 64, 255]);
const ONE: Rgb<u8> = Rgb([230, 0, 0]);
const UNREALIZED: Rgb<u8> = Rgb([150, 150, 150]);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DrawnLink {
    /// Lower endpoint; `x` may be -1 or 2N before wrapping.
    pub start: (i64, i64),
    pub direction: Direction,
    pub value: Option<u8>,
}

impl DrawnLink {
    fn dx(&self) -> i64 {
        match self.direction {
            Direction::R => 1,
            Direction::L => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagram {
    pub half_width: usize,
    /// Largest time coordinate reached by any link.
    pub height: i64,
    pub vertices: Vec<(i64, i64)>,
    pub links: Vec<DrawnLink>,
}

impl Diagram {
    pub fn from_record(record: &RunRecord) -> Result<Self> {
        record.validate()?;
        let n = record.config.geometry.half_width();
        let mut links = Vec::new();
        for s in 0..2 * n {
            let value = record.samols_initial.as_ref().map(|bits| bits[s]);
            let s = s as i64;
            links.push(if s % 2 == 0 {
                DrawnLink {
                    start: (s, 0),
                    direction: Direction::R,
                    value,
                }
            } else {
                DrawnLink {
                    start: (s + 1, 0),
                    direction: Direction::L,
                    value,
                }
            });
        }
        let mut vertices = Vec::new();
        for e in &record.events {
            let i = e.slot_pair.0 as i64;
            let at = (i + 1, 2 * e.pair_ordinal as i64 + 1 + i % 2);
            vertices.push(at);
            links.push(DrawnLink {
                start: at,
                direction: Direction::L,
                value: e.outcome.map(|o| o.alpha_l),
            });
            links.push(DrawnLink {
                start: at,
                direction: Direction::R,
                value: e.outcome.map(|o| o.alpha_r),
            });
        }
        let height = links.iter().map(|l| l.start.1 + 1).max().unwrap_or(1);
        Ok(Self {
            half_width: n,
            height,
            vertices,
            links,
        })
    }

    fn width(&self) -> i64 {
        2 * self.half_width as i64
    }

    /// Text grid: link midpoints at `(2x ± 1, 2t + 1)`, vertices at
    /// `(2x, 2t)`, time increasing upward.
    pub fn to_text(&self) -> String {
        let cols = 2 * self.width();
        let rows = 2 * self.height + 1;
        let mut grid = vec![vec![' '; cols as usize]; rows as usize];
        let mut put = |col: i64, row: i64, c: char| {
            grid[(rows - 1 - row) as usize][col.rem_euclid(cols) as usize] = c;
        };
        for link in &self.links {
            let c = match (link.value, link.direction) {
                (Some(v), _) => char::from(b'0' + v),
                (None, Direction::R) => '/',
                (None, Direction::L) => '\\',
            };
            put(2 * link.start.0 + link.dx(), 2 * link.start.1 + 1, c);
        }
        for &(x, t) in &self.vertices {
            put(2 * x, 2 * t, '*');
        }
        let mut out = String::new();
        for row in grid {
            out.push_str(row.iter().collect::<String>().trim_end());
            out.push('\n');
        }
        out
    }

    /// Raster with [`CELL`] pixels per unit. Links are colored by value and
    /// the pixel at each link's midpoint carries that color.
    pub fn to_image(&self) -> RgbImage {
        let w = (self.width() as u32) * CELL;
        let h = (self.height as u32) * CELL + 1;
        let mut img = RgbImage::from_pixel(w, h, WHITE);
        for link in &self.links {
            let color = match link.value {
                Some(0) => ZERO,
                Some(_) => ONE,
                None => UNREALIZED,
            };
            for step in 0..=CELL as i64 {
                let (px, py) = self.pixel(link.start.0 * CELL as i64 + link.dx() * step, link.start.1 * CELL as i64 + step);
                img.put_pixel(px, py, color);
            }
        }
        for &(x, t) in &self.vertices {
            let (px, py) = self.pixel(x * CELL as i64, t * CELL as i64);
            img.put_pixel(px, py, BLACK);
        }
        img
    }

    fn pixel(&self, px: i64, pt: i64) -> (u32, u32) {
        let w = self.width() * CELL as i64;
        (px.rem_euclid(w) as u32, (self.height * CELL as i64 - pt) as u32)
    }

    /// Value read back from a rendered image at a link's midpoint.
    pub fn image_value(&self, img: &RgbImage, link: &DrawnLink) -> Result<Option<u8>> {
        let half = CELL as i64 / 2;
        let (px, py) = self.pixel(link.start.0 * CELL as i64 + link.dx() * half, link.start.1 * CELL as i64 + half);
        match *img.get_pixel(px, py) {
            ZERO => Ok(Some(0)),
            ONE => Ok(Some(1)),
            UNREALIZED => Ok(None),
            other => Err(Error::Record(format!("unexpected color {other:?} at a link midpoint"))),
        }
    }

    /// Value read back from the text grid at a link's midpoint.
    pub fn text_value(&self, text: &str, link: &DrawnLink) -> Result<Option<u8>> {
        let rows: Vec<Vec<char>> = text.lines().map(|l| l.chars().collect()).collect();
        let row = 2 * self.height - (2 * link.start.1 + 1);
        let col = (2 * link.start.0 + link.dx()).rem_euclid(2 * self.width());
        match rows.get(row as usize).and_then(|r| r.get(col as usize)) {
            Some('0') => Ok(Some(0)),
            Some('1') => Ok(Some(1)),
            Some('/') | Some('\\') => Ok(None),
            other => Err(Error::Record(format!("unexpected character {other:?} at a link midpoint"))),
        }
    }
}

pub fn write_image(path: &Path, diagram: &Diagram) -> Result<()> {
    diagram
        .to_image()
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, DynamicsKind, RunConfig};
    use crate::lattice::LatticeGeometry;
    use crate::quantum::JumpSpec;

    fn record(n: usize, kind: DynamicsKind, schedule: Vec<usize>) -> RunRecord {
        let mut config = RunConfig::new(LatticeGeometry::new(n).unwrap(), kind, schedule.len());
        config.jump = JumpSpec::new(0.5).unwrap();
        config.schedule = Some(schedule);
        config.seed = 3;
        run(&config).unwrap()
    }

    #[test]
    fn empty_record_is_initial_surface() {
        let d = Diagram::from_record(&record(2, DynamicsKind::Grw, vec![])).unwrap();
        assert_eq!(d.to_text(), "\n / \\ / \\\n\n");
    }

    #[test]
    fn stacked_vertices() {
        let d = Diagram::from_record(&record(1, DynamicsKind::Grw, vec![0, 1])).unwrap();
        assert_eq!(d.vertices, vec![(1, 1), (2, 2)]);
        assert_eq!(d.links.iter().filter(|l| l.value.is_some()).count(), 4);
        assert_eq!(d.height, 3);
    }

    #[test]
    fn text_and_image_agree() {
        for kind in [DynamicsKind::Grw, DynamicsKind::Samols, DynamicsKind::Unitary] {
            let d = Diagram::from_record(&record(3, kind, vec![0, 2, 4, 1, 3, 5, 0, 2, 4])).unwrap();
            let text = d.to_text();
            let img = d.to_image();
            for link in &d.links {
                assert_eq!(d.text_value(&text, link).unwrap(), link.value);
                assert_eq!(d.image_value(&img, link).unwrap(), link.value);
            }
        }
    }
}
