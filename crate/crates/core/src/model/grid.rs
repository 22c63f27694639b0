use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::scene::{Bounds, WorldPose};
use super::ModelError;

/// Integer cell address, column-major order `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Free/obstacle raster over a scene's bounds. Row 0 is the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    origin: [f64; 2],
    width: usize,
    height: usize,
    obstacles: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(resolution: f64, origin: [f64; 2], width: usize, height: usize) -> Result<Self, ModelError> {
        if !(resolution > 0.0) || width == 0 || height == 0 {
            return Err(ModelError::Invalid(format!(
                "grid needs positive resolution and dimensions, got {resolution} x {width}x{height}"
            )));
        }
        Ok(Self {
            resolution,
            origin,
            width,
            height,
            obstacles: vec![false; width * height],
        })
    }

    /// A grid that covers `bounds` exactly with `cols x rows` cells.
    pub fn covering(bounds: &Bounds, cols: usize, rows: usize) -> Result<Self, ModelError> {
        let res = bounds.width / cols as f64;
        let res_y = bounds.height / rows as f64;
        if (res - res_y).abs() > 1e-9 {
            return Err(ModelError::Invalid("grid cells must be square".into()));
        }
        Self::new(res, [bounds.min_x, bounds.min_y], cols, rows)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            min_x: self.origin[0],
            min_y: self.origin[1],
            width: self.width as f64 * self.resolution,
            height: self.height as f64 * self.resolution,
        }
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell_at_index(&self, i: usize) -> Cell {
        Cell::new(i % self.width, i / self.width)
    }

    pub fn in_grid(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.obstacles[self.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_obstacle(c)
    }

    pub fn set_obstacle(&mut self, c: Cell, obstacle: bool) {
        let i = self.index(c);
        self.obstacles[i] = obstacle;
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Cell::new(c, r)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(move |c| self.is_free(*c))
    }

    /// Cell containing a world point; points on the far edge belong to the last cell.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        let fx = (x - self.origin[0]) / self.resolution;
        let fy = (y - self.origin[1]) / self.resolution;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > self.width as f64 + eps || fy > self.height as f64 + eps {
            return None;
        }
        let col = ((fx + eps).floor().max(0.0) as usize).min(self.width - 1);
        let row = ((fy + eps).floor().max(0.0) as usize).min(self.height - 1);
        Some(Cell::new(col, row))
    }

    pub fn cell_of_pose(&self, pose: &WorldPose) -> Option<Cell> {
        self.cell_of(pose.x, pose.y)
    }

    pub fn center(&self, c: Cell) -> [f64; 2] {
        [
            self.origin[0] + (c.col as f64 + 0.5) * self.resolution,
            self.origin[1] + (c.row as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn center_pose(&self, c: Cell, heading: f64) -> WorldPose {
        let [x, y] = self.center(c);
        WorldPose::new(x, y, heading)
    }

    /// 8-neighbourhood of a cell that lies inside the grid.
    pub fn neighbors8(&self, c: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
        const D: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        D.iter().filter_map(move |&(dc, dr)| {
            let col = c.col as i64 + dc;
            let row = c.row as i64 + dr;
            self.in_grid(col, row)
                .then(|| (Cell::new(col as usize, row as usize), dc != 0 && dr != 0))
        })
    }

    /// Portable graymap dump (`P5`), free cells white, obstacles black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.obstacles.iter().map(|&o| if o { 0u8 } else { 255u8 }));
        out
    }

    pub fn to_rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| if self.obstacles[r * self.width + c] { '#' } else { '.' })
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(resolution: f64, origin: [f64; 2], rows: &[impl AsRef<str>]) -> Result<Self, ModelError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().chars().count()).unwrap_or(0);
        let mut grid = Self::new(resolution, origin, width, height)?;
        for (r, line) in rows.iter().enumerate() {
            let line = line.as_ref();
            if line.chars().count() != width {
                return Err(ModelError::Invalid(format!("grid row {r} has wrong length")));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => grid.obstacles[r * width + c] = true,
                    other => return Err(ModelError::Invalid(format!("bad grid char {other:?}"))),
                }
            }
        }
        Ok(grid)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    resolution: f64,
    origin: [f64; 2],
    width: usize,
    height: usize,
    rows: Vec<String>,
}

impl Serialize for OccupancyGrid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridRepr {
            resolution: self.resolution,
            origin: self.origin,
            width: self.width,
            height: self.height,
            rows: self.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OccupancyGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = GridRepr::deserialize(d)?;
        let grid = OccupancyGrid::from_rows(repr.resolution, repr.origin, &repr.rows)
            .map_err(serde::de::Error::custom)?;
        if grid.width != repr.width || grid.height != repr.height {
            return Err(serde::de::Error::custom("grid dimensions disagree with rows"));
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_lookup_and_centers() {
        let g = OccupancyGrid::new(0.1, [0.0, 0.0], 10, 10).unwrap();
        assert_eq!(g.cell_of(0.0, 0.0), Some(Cell::new(0, 0)));
        assert_eq!(g.cell_of(0.0, 0.9), Some(Cell::new(0, 9)));
        assert_eq!(g.cell_of(1.0, 1.0), Some(Cell::new(9, 9)));
        assert_eq!(g.cell_of(1.2, 0.0), None);
        let [x, y] = g.center(Cell::new(3, 4));
        assert!((x - 0.35).abs() < 1e-12 && (y - 0.45).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(OccupancyGrid::new(0.0, [0.0, 0.0], 3, 3).is_err());
    }

    #[test]
    fn rows_round_trip_through_json() {
        let g = OccupancyGrid::from_rows(0.5, [1.0, 2.0], &["..#", "#.."]).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: OccupancyGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(g, back);
        assert!(back.is_obstacle(Cell::new(2, 0)));
        assert_eq!(&g.to_pgm()[..11], b"P5\n3 2\n255\n");
    }
}
