use super::Point;
use std::collections::VecDeque;
use std::fmt::Write as _;
use thiserror::Error;

/// Boolean occupancy grid over the unit square. Row 0 is the top row, as in
/// PBM files; cell `(col, row)` covers `[col/w, (col+1)/w] × [1-(row+1)/h, 1-row/h]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PbmError {
    #[error("missing P1 magic number")]
    Magic,
    #[error("bad header: {0}")]
    Header(String),
    #[error("expected {expected} cells, found {found}")]
    CellCount { expected: usize, found: usize },
    #[error("invalid cell character {0:?}")]
    Cell(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutDirection {
    LeftRight,
    DownUp,
}

impl GridMask {
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Option<Self> {
        (width > 0 && height > 0 && width * height == cells.len()).then_some(GridMask { width, height, cells })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        GridMask { width, height, cells: vec![value; width * height] }
    }

    /// Occupancy sampled at cell centers.
    pub fn from_predicate(width: usize, height: usize, f: impl Fn(Point) -> bool) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                cells.push(f(Self::center_of(width, height, col, row)));
            }
        }
        GridMask { width, height, cells }
    }

    fn center_of(width: usize, height: usize, col: usize, row: usize) -> Point {
        Point::new((col as f64 + 0.5) / width as f64, 1.0 - (row as f64 + 0.5) / height as f64)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Self::center_of(self.width, self.height, col, row)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.cells[row * self.width + col] = value;
    }

    pub fn parse_pbm(text: &str) -> Result<Self, PbmError> {
        let mut chars = String::with_capacity(text.len());
        for line in text.lines() {
            chars.push_str(line.split('#').next().unwrap_or(""));
            chars.push('\n');
        }
        let mut rest = chars.trim_start();
        if !rest.starts_with("P1") {
            return Err(PbmError::Magic);
        }
        rest = &rest[2..];
        let mut dims = [0usize; 2];
        for d in dims.iter_mut() {
            rest = rest.trim_start();
            let end = rest.find(|c: char| c.is_whitespace()).unwrap_or(rest.len());
            *d = rest[..end].parse().map_err(|_| PbmError::Header(rest[..end].to_string()))?;
            rest = &rest[end..];
        }
        let [width, height] = dims;
        if width == 0 || height == 0 {
            return Err(PbmError::Header(format!("{width}x{height}")));
        }
        let mut cells = Vec::with_capacity(width * height);
        for c in rest.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '0' => cells.push(false),
                '1' => cells.push(true),
                other => return Err(PbmError::Cell(other)),
            }
        }
        if cells.len() != width * height {
            return Err(PbmError::CellCount { expected: width * height, found: cells.len() });
        }
        Ok(GridMask { width, height, cells })
    }

    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.width, self.height);
        for row in self.cells.chunks(self.width) {
            let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Flood fill over cells with occupancy `value`, from `seeds`.
fn flood(mask: &GridMask, value: bool, seeds: &[(usize, usize)], nbrs: &[(isize, isize)]) -> Vec<bool> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    for &(c, r) in seeds {
        if mask.get(c, r) == value && !seen[r * w + c] {
            seen[r * w + c] = true;
            queue.push_back((c, r));
        }
    }
    while let Some((c, r)) = queue.pop_front() {
        for &(dc, dr) in nbrs {
            let (nc, nr) = (c as isize + dc, r as isize + dr);
            if nc < 0 || nr < 0 || nc >= w as isize || nr >= h as isize {
                continue;
            }
            let (nc, nr) = (nc as usize, nr as usize);
            if mask.get(nc, nr) == value && !seen[nr * w + nc] {
                seen[nr * w + nc] = true;
                queue.push_back((nc, nr));
            }
        }
    }
    seen
}

/// True iff the occupied cells cut every crossing in `direction`, i.e. no
/// 8-connected chain of empty cells joins the two opposite edges.
pub fn grid_cut_check(mask: &GridMask, direction: CutDirection) -> bool {
    let (w, h) = (mask.width, mask.height);
    let (seeds, target): (Vec<(usize, usize)>, Box<dyn Fn(usize, usize) -> bool>) = match direction {
        CutDirection::LeftRight => ((0..h).map(|r| (0, r)).collect(), Box::new(move |c, _| c == w - 1)),
        CutDirection::DownUp => ((0..w).map(|c| (c, h - 1)).collect(), Box::new(|_, r| r == 0)),
    };
    let seen = flood(mask, false, &seeds, &N8);
    !seen.iter().enumerate().any(|(i, &s)| s && target(i % w, i / w))
}

/// A 4-connected component of occupied cells meeting both the bottom and the
/// top row, as `(col, row)` pairs in row-major order.
pub fn grid_spanning_continuum(mask: &GridMask) -> Option<Vec<(usize, usize)>> {
    let (w, h) = (mask.width, mask.height);
    let mut done = vec![false; w * h];
    for c in 0..w {
        if !mask.get(c, 0) || done[c] {
            continue;
        }
        let comp = flood(mask, true, &[(c, 0)], &N4);
        for (i, &s) in comp.iter().enumerate() {
            done[i] |= s;
        }
        if (0..w).any(|cc| comp[(h - 1) * w + cc]) {
            return Some((0..w * h).filter(|&i| comp[i]).map(|i| (i % w, i / w)).collect());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_empty_masks() {
        let full = GridMask::filled(5, 4, true);
        assert!(grid_cut_check(&full, CutDirection::LeftRight));
        assert_eq!(grid_spanning_continuum(&full).unwrap().len(), 20);
        let empty = GridMask::filled(5, 4, false);
        assert!(!grid_cut_check(&empty, CutDirection::LeftRight));
        assert!(grid_spanning_continuum(&empty).is_none());
    }

    #[test]
    fn single_column_cuts() {
        let mut m = GridMask::filled(7, 6, false);
        for r in 0..6 {
            m.set(3, r, true);
        }
        assert!(grid_cut_check(&m, CutDirection::LeftRight));
        assert!(!grid_cut_check(&m, CutDirection::DownUp));
        let comp = grid_spanning_continuum(&m).unwrap();
        assert_eq!(comp, (0..6).map(|r| (3, r)).collect::<Vec<_>>());
    }

    #[test]
    fn diagonal_gap_is_a_corridor() {
        // Occupied cells touching only at a corner do not block the 8-connected complement.
        let m = GridMask::parse_pbm("P1 2 2\n1 0\n0 1\n").unwrap();
        assert!(!grid_cut_check(&m, CutDirection::LeftRight));
        assert!(grid_spanning_continuum(&m).is_none());
    }

    #[test]
    fn pbm_round_trip() {
        let text = "P1\n# comment\n3 2\n1 0 1\n0 1 0\n";
        let m = GridMask::parse_pbm(text).unwrap();
        assert_eq!(m.cells(), &[true, false, true, false, true, false]);
        assert_eq!(GridMask::parse_pbm(&m.to_pbm()).unwrap(), m);
        assert_eq!(GridMask::parse_pbm("P1 2 2 0110").unwrap().cells(), &[false, true, true, false]);
        assert!(matches!(GridMask::parse_pbm("P2 1 1 0"), Err(PbmError::Magic)));
        assert!(matches!(GridMask::parse_pbm("P1 2 2 011"), Err(PbmError::CellCount { .. })));
    }

    #[test]
    fn cell_geometry() {
        let m = GridMask::filled(4, 2, false);
        assert_eq!(m.cell_center(0, 0), Point::new(0.125, 0.75));
        assert_eq!(m.cell_center(3, 1), Point::new(0.875, 0.25));
    }
}
