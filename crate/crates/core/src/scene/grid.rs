use super::geometry::Point;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Edge length of a grid cell in meters.
pub const CELL_SIZE: f64 = 0.25;

/// Integer cell coordinates; `i` runs along +x, `j` along +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

impl Cell {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    pub fn center(self) -> Point {
        Point::new(
            (self.i as f64 + 0.5) * CELL_SIZE,
            (self.j as f64 + 0.5) * CELL_SIZE,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneHeader {
    scene_id: String,
    cell_size: f64,
    #[serde(default)]
    small_scene: bool,
    #[serde(default)]
    wide_scene: bool,
}

/// Occupancy grid of a single-floor scene. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGrid {
    scene_id: String,
    width: usize,
    height: usize,
    navigable: Vec<bool>,
    small_scene: bool,
    wide_scene: bool,
}

impl SceneGrid {
    /// Builds a grid from row-major navigability flags (`navigable[j * width + i]`).
    pub fn from_navigable(
        scene_id: impl Into<String>,
        width: usize,
        height: usize,
        navigable: Vec<bool>,
    ) -> Result<Self> {
        if navigable.len() != width * height {
            return Err(Error::Shape(format!(
                "{} occupancy flags for a {width}x{height} grid",
                navigable.len()
            )));
        }
        if !navigable.iter().any(|&n| n) {
            return Err(Error::NoNavigableCells);
        }
        Ok(Self {
            scene_id: scene_id.into(),
            width,
            height,
            navigable,
            small_scene: false,
            wide_scene: false,
        })
    }

    /// Builds a grid from map rows where `#` is blocked and `.` is navigable.
    /// The first row is `j = 0`.
    pub fn from_rows(scene_id: impl Into<String>, rows: &[&str]) -> Result<Self> {
        let (width, height, navigable) = parse_rows(rows.iter().copied().enumerate(), 1)?;
        Self::from_navigable(scene_id, width, height, navigable)
    }

    pub fn with_flags(mut self, small_scene: bool, wide_scene: bool) -> Self {
        self.small_scene = small_scene;
        self.wide_scene = wide_scene;
        self
    }

    /// Parses the scene file format: a JSON header line followed by the character map.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header_line = lines.next().ok_or_else(|| Error::SceneParse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header: SceneHeader =
            serde_json::from_str(header_line).map_err(|e| Error::SceneParse {
                line: 1,
                message: format!("malformed header: {e}"),
            })?;
        if header.cell_size != CELL_SIZE {
            return Err(Error::SceneParse {
                line: 1,
                message: format!("cell_size must be {CELL_SIZE}, got {}", header.cell_size),
            });
        }
        let rows: Vec<(usize, &str)> = lines
            .enumerate()
            .map(|(k, l)| (k, l.trim_end_matches('\r')))
            .collect();
        // Trailing blank lines are tolerated.
        let last = rows.iter().rposition(|(_, l)| !l.is_empty()).map_or(0, |p| p + 1);
        let (width, height, navigable) = parse_rows(rows[..last].iter().copied(), 2)?;
        Ok(Self::from_navigable(header.scene_id, width, height, navigable)?
            .with_flags(header.small_scene, header.wide_scene))
    }

    /// Serializes to the scene file format accepted by [`SceneGrid::parse`].
    pub fn to_scene_text(&self) -> String {
        let header = SceneHeader {
            scene_id: self.scene_id.clone(),
            cell_size: CELL_SIZE,
            small_scene: self.small_scene,
            wide_scene: self.wide_scene,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for j in 0..self.height {
            for i in 0..self.width {
                out.push(if self.navigable[j * self.width + i] { '.' } else { '#' });
            }
            out.push('\n');
        }
        out
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        CELL_SIZE
    }

    pub fn small_scene(&self) -> bool {
        self.small_scene
    }

    pub fn wide_scene(&self) -> bool {
        self.wide_scene
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.j * self.width + cell.i
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    /// Whether integer coordinates name a navigable cell; anything outside the grid is blocked.
    pub fn is_navigable_ij(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.width
            && (j as usize) < self.height
            && self.navigable[j as usize * self.width + i as usize]
    }

    pub fn is_navigable_cell(&self, cell: Cell) -> bool {
        self.is_navigable_ij(cell.i as i64, cell.j as i64)
    }

    /// Cell coordinates containing `p`, possibly outside the grid.
    fn containing_ij(p: Point) -> (i64, i64) {
        ((p.x / CELL_SIZE).floor() as i64, (p.y / CELL_SIZE).floor() as i64)
    }

    pub fn is_navigable_point(&self, p: Point) -> bool {
        if !p.is_finite() {
            return false;
        }
        let (i, j) = Self::containing_ij(p);
        self.is_navigable_ij(i, j)
    }

    /// The navigable cell containing `p`.
    pub fn snap_to_cell(&self, p: Point) -> Result<Cell> {
        if !self.is_navigable_point(p) {
            return Err(Error::NotNavigable { x: p.x, y: p.y });
        }
        let (i, j) = Self::containing_ij(p);
        Ok(Cell::new(i as usize, j as usize))
    }

    pub fn navigable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.navigable
            .iter()
            .enumerate()
            .filter(|(_, &n)| n)
            .map(|(k, _)| self.cell_at(k))
    }

    /// 4-connected navigable neighbours in the fixed order +x, +y, -x, -y.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFSETS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        OFFSETS.iter().filter_map(move |&(di, dj)| {
            let (i, j) = (cell.i as i64 + di, cell.j as i64 + dj);
            self.is_navigable_ij(i, j)
                .then(|| Cell::new(i as usize, j as usize))
        })
    }

    /// Whether `p` is exactly (to 1e-9 m) a cell center.
    pub fn is_cell_center(&self, p: Point) -> bool {
        let on_center = |v: f64| {
            let u = v / CELL_SIZE - 0.5;
            (u - u.round()).abs() < 1e-9
        };
        on_center(p.x) && on_center(p.y)
    }
}

fn parse_rows<'a>(
    rows: impl Iterator<Item = (usize, &'a str)>,
    first_line: usize,
) -> Result<(usize, usize, Vec<bool>)> {
    let mut width = None;
    let mut height = 0;
    let mut navigable = Vec::new();
    for (k, row) in rows {
        let line = k + first_line;
        let before = navigable.len();
        for ch in row.chars() {
            match ch {
                '.' => navigable.push(true),
                '#' => navigable.push(false),
                other => {
                    return Err(Error::SceneParse {
                        line,
                        message: format!("unexpected character {other:?}"),
                    })
                }
            }
        }
        let w = navigable.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::SceneParse {
                    line,
                    message: format!("ragged row: expected {expected} cells, got {w}"),
                })
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.unwrap_or(0);
    if width == 0 || height == 0 {
        return Err(Error::NoNavigableCells);
    }
    Ok((width, height, navigable))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"scene_id": "t", "cell_size": 0.25, "small_scene": false, "wide_scene": false}"#;

    fn parse(map: &str) -> Result<SceneGrid> {
        SceneGrid::parse(&format!("{HEADER}\n{map}\n"))
    }

    #[test]
    fn open_row() {
        let g = parse(".......").unwrap();
        assert_eq!((g.width(), g.height()), (7, 1));
        assert_eq!(g.navigable_cells().count(), 7);
    }

    #[test]
    fn blocked_cell() {
        let g = parse("..#....").unwrap();
        assert!(!g.is_navigable_cell(Cell::new(2, 0)));
        assert_eq!(g.navigable_cells().count(), 6);
    }

    #[test]
    fn all_blocked_is_rejected() {
        assert!(matches!(parse("#######"), Err(Error::NoNavigableCells)));
    }

    #[test]
    fn ragged_and_bad_header() {
        assert!(matches!(
            parse("...\n.."),
            Err(Error::SceneParse { line: 3, .. })
        ));
        assert!(matches!(
            SceneGrid::parse("{not json}\n..."),
            Err(Error::SceneParse { line: 1, .. })
        ));
        assert!(SceneGrid::parse(r#"{"scene_id": "t", "cell_size": 0.5}"#.to_owned().as_str()).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = SceneGrid::from_rows("rt", &["..#", "#.."]).unwrap().with_flags(true, false);
        let back = SceneGrid::parse(&g.to_scene_text()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn point_queries() {
        let g = SceneGrid::from_rows("c", &["..#...."]).unwrap();
        assert!(g.is_navigable_point(Point::new(0.125, 0.125)));
        assert!(!g.is_navigable_point(Point::new(-0.1, 0.125)));
        assert!(!g.is_navigable_point(Cell::new(2, 0).center()));
        assert_eq!(g.snap_to_cell(Point::new(0.125, 0.125)).unwrap(), Cell::new(0, 0));
        assert_eq!(g.snap_to_cell(Point::new(0.30, 0.10)).unwrap(), Cell::new(1, 0));
        assert!(g.snap_to_cell(Point::new(-1.0, -1.0)).is_err());
    }

    #[test]
    fn cell_centers() {
        assert_eq!(Cell::new(3, 1).center(), Point::new(0.875, 0.375));
        let g = SceneGrid::from_rows("c", &["...."]).unwrap();
        assert!(g.is_cell_center(Point::new(0.875, 0.125)));
        assert!(!g.is_cell_center(Point::new(0.9, 0.125)));
    }
}
