//! Periodic staggered grids, field containers, two-grid pairs and snapshot
//! I/O.
//!
//! Scalar cells are centered at `x = (i + 1/2) h`; the face associated with
//! cell `i` along an axis is its right boundary at `x = (i + 1) h`. Edges
//! carry that whole-multiple offset along two axes at once. A coarse grid
//! whose spacing is an odd multiple `H = (2n+1) h` of the fine spacing has
//! every point coincide with a fine point of the same stagger class, which is
//! what lets two-grid filters avoid interpolation entirely.

use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Uniform periodic 1D grid of `n` cells over `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n: usize,
    pub length: f64,
    pub h: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooSmall(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadLength(length));
        }
        Ok(Self {
            n,
            length,
            h: length / n as f64,
        })
    }

    /// Coordinate of point `i` of a field stored at `location`.
    pub fn coordinate(&self, location: StaggerLocation, i: usize) -> f64 {
        if location.is_whole(0) {
            (i as f64 + 1.0) * self.h
        } else {
            (i as f64 + 0.5) * self.h
        }
    }
}

/// Uniform periodic cubic grid of `n^3` cells over `[0, length)^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3D {
    pub n: usize,
    pub length: f64,
    pub h: f64,
}

impl Grid3D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooSmall(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::BadLength(length));
        }
        Ok(Self {
            n,
            length,
            h: length / n as f64,
        })
    }

    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Coordinate of point `(i1, i2, i3)` of a field stored at `location`.
    pub fn coordinate(&self, location: StaggerLocation, index: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for axis in 0..3 {
            x[axis] = if location.is_whole(axis) {
                (index[axis] as f64 + 1.0) * self.h
            } else {
                (index[axis] as f64 + 0.5) * self.h
            };
        }
        x
    }
}

/// Where a field lives relative to the cell: pressure-like fields at cell
/// centers, velocity component `i` on the faces normal to axis `i`,
/// off-diagonal stress components on the edges shared by two face normals.
///
/// `Edge(i, j)` is unordered: `Edge(0, 1)` and `Edge(1, 0)` compare equal.
#[derive(Debug, Clone, Copy)]
pub enum StaggerLocation {
    Center,
    Face(usize),
    Edge(usize, usize),
}

impl StaggerLocation {
    pub fn face(axis: usize) -> Self {
        assert!(axis < 3, "axis out of range: {axis}");
        Self::Face(axis)
    }

    pub fn edge(a: usize, b: usize) -> Self {
        assert!(a < 3 && b < 3 && a != b, "bad edge axes: {a}, {b}");
        Self::Edge(a.min(b), a.max(b))
    }

    /// True if the coordinate along `axis` sits on whole multiples of `h`.
    pub fn is_whole(&self, axis: usize) -> bool {
        match *self {
            Self::Center => false,
            Self::Face(i) => axis == i,
            Self::Edge(i, j) => axis == i || axis == j,
        }
    }

    pub fn whole_mask(&self) -> [bool; 3] {
        [self.is_whole(0), self.is_whole(1), self.is_whole(2)]
    }

    /// Inverse of [`whole_mask`](Self::whole_mask); `None` for the corner
    /// pattern (whole along all three axes), which no field uses.
    pub fn from_whole_mask(mask: [bool; 3]) -> Option<Self> {
        let whole: Vec<usize> = (0..3).filter(|&a| mask[a]).collect();
        match whole.as_slice() {
            [] => Some(Self::Center),
            [i] => Some(Self::Face(*i)),
            [i, j] => Some(Self::Edge(*i, *j)),
            _ => None,
        }
    }

    /// True for the locations a 1D field can occupy.
    pub fn is_one_dimensional(&self) -> bool {
        matches!(self, Self::Center | Self::Face(0))
    }

    pub(crate) fn snapshot_tag(&self) -> u8 {
        match (self.is_whole(0), self.is_whole(1), self.is_whole(2)) {
            (false, false, false) => 0,
            (true, false, false) => 1,
            (false, true, false) => 2,
            (false, false, true) => 3,
            (true, true, false) => 4,
            (true, false, true) => 5,
            (false, true, true) => 6,
            (true, true, true) => unreachable!("corner location"),
        }
    }

    pub(crate) fn from_snapshot_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Self::Center),
            1 => Some(Self::Face(0)),
            2 => Some(Self::Face(1)),
            3 => Some(Self::Face(2)),
            4 => Some(Self::Edge(0, 1)),
            5 => Some(Self::Edge(0, 2)),
            6 => Some(Self::Edge(1, 2)),
            _ => None,
        }
    }
}

impl PartialEq for StaggerLocation {
    fn eq(&self, other: &Self) -> bool {
        self.whole_mask() == other.whole_mask()
    }
}

impl Eq for StaggerLocation {}

impl Hash for StaggerLocation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.whole_mask().hash(state);
    }
}

/// Real scalar field on a 1D grid at a fixed stagger location.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1 {
    pub grid: Grid1D,
    pub location: StaggerLocation,
    pub values: Vec<f64>,
}

impl Field1 {
    pub fn new(grid: Grid1D, location: StaggerLocation, values: Vec<f64>) -> Result<Self> {
        if !location.is_one_dimensional() {
            return Err(Error::InvalidLocation {
                location,
                context: "a 1D field (center or face only)",
            });
        }
        if values.len() != grid.n {
            return Err(Error::ShapeMismatch {
                got: values.len(),
                want: grid.n,
            });
        }
        Ok(Self {
            grid,
            location,
            values,
        })
    }

    pub fn zeros(grid: Grid1D, location: StaggerLocation) -> Self {
        Self::new(grid, location, vec![0.0; grid.n]).expect("zero field")
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.grid.coordinate(self.location, i)
    }
}

/// Real scalar field on a cubic grid at a fixed stagger location, stored
/// row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub grid: Grid3D,
    pub location: StaggerLocation,
    pub values: Vec<f64>,
}

impl Field3 {
    pub fn new(grid: Grid3D, location: StaggerLocation, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::ShapeMismatch {
                got: values.len(),
                want: grid.points(),
            });
        }
        Ok(Self {
            grid,
            location,
            values,
        })
    }

    pub fn zeros(grid: Grid3D, location: StaggerLocation) -> Self {
        Self::new(grid, location, vec![0.0; grid.points()]).expect("zero field")
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.grid.n + i2) * self.grid.n + i3
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.values[self.idx(i1, i2, i3)]
    }

    pub fn coordinate(&self, index: [usize; 3]) -> [f64; 3] {
        self.grid.coordinate(self.location, index)
    }
}

/// Staggered velocity field: component `i` lives on `Face(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub components: [Field3; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid3D) -> Self {
        Self {
            components: std::array::from_fn(|i| Field3::zeros(grid, StaggerLocation::Face(i))),
        }
    }

    pub fn from_components(components: [Field3; 3]) -> Result<Self> {
        let grid = components[0].grid;
        for (i, c) in components.iter().enumerate() {
            if c.location != StaggerLocation::Face(i) {
                return Err(Error::InvalidLocation {
                    location: c.location,
                    context: "a velocity component (face of its own axis)",
                });
            }
            if c.grid != grid {
                return Err(Error::GridMismatch(
                    "velocity components on different grids".into(),
                ));
            }
        }
        Ok(Self { components })
    }

    pub fn grid(&self) -> Grid3D {
        self.components[0].grid
    }
}

/// Staggered (not necessarily symmetric) rank-2 tensor field: diagonal
/// components at cell centers, component `(i, j)` with `i != j` on
/// `Edge(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub components: [[Field3; 3]; 3],
}

impl TensorField {
    pub fn zeros(grid: Grid3D) -> Self {
        Self {
            components: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let loc = if i == j {
                        StaggerLocation::Center
                    } else {
                        StaggerLocation::edge(i, j)
                    };
                    Field3::zeros(grid, loc)
                })
            }),
        }
    }

    pub fn grid(&self) -> Grid3D {
        self.components[0][0].grid
    }
}

/// Fine/coarse 1D grid pair with odd compression factor `2n+1`.
///
/// Factor 1 is the degenerate identity pair (useful in tests); every coarse
/// point then is its own fine point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPair1 {
    pub fine: Grid1D,
    pub coarse: Grid1D,
    pub factor: usize,
}

/// Fine/coarse cubic grid pair with odd compression factor `2n+1` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPair3 {
    pub fine: Grid3D,
    pub coarse: Grid3D,
    pub factor: usize,
}

fn pair_factor(n_fine: usize, n_coarse: usize) -> Result<usize> {
    if n_coarse == 0 || n_fine % n_coarse != 0 || (n_fine / n_coarse) % 2 == 0 {
        return Err(Error::IncompatiblePair { n_fine, n_coarse });
    }
    Ok(n_fine / n_coarse)
}

pub fn make_grid_pair_1d(fine: Grid1D, coarse: Grid1D) -> Result<GridPair1> {
    if fine.length != coarse.length {
        return Err(Error::GridMismatch(format!(
            "pair lengths differ: fine {}, coarse {}",
            fine.length, coarse.length
        )));
    }
    let factor = pair_factor(fine.n, coarse.n)?;
    Ok(GridPair1 {
        fine,
        coarse,
        factor,
    })
}

pub fn make_grid_pair_3d(fine: Grid3D, coarse: Grid3D) -> Result<GridPair3> {
    if fine.length != coarse.length {
        return Err(Error::GridMismatch(format!(
            "pair lengths differ: fine {}, coarse {}",
            fine.length, coarse.length
        )));
    }
    let factor = pair_factor(fine.n, coarse.n)?;
    Ok(GridPair3 {
        fine,
        coarse,
        factor,
    })
}

/// Fine index of the fine-grid point that coincides with coarse point `i`
/// along one axis. Half-offset (center-class) axes map to `F i + n`,
/// whole-offset (face-class) axes to `F i + 2n`, where `F = 2n+1`.
pub fn coincident_fine_index_axis(factor: usize, whole: bool, i: usize) -> usize {
    debug_assert!(factor % 2 == 1);
    let n = (factor - 1) / 2;
    if whole {
        factor * i + 2 * n
    } else {
        factor * i + n
    }
}

impl GridPair1 {
    pub fn coincident_fine_index(&self, location: StaggerLocation, i: usize) -> usize {
        coincident_fine_index_axis(self.factor, location.is_whole(0), i)
    }
}

impl GridPair3 {
    pub fn coincident_fine_index(
        &self,
        location: StaggerLocation,
        index: [usize; 3],
    ) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in 0..3 {
            out[axis] =
                coincident_fine_index_axis(self.factor, location.is_whole(axis), index[axis]);
        }
        out
    }
}

const SNAPSHOT_MAGIC: [u8; 4] = *b"DLES";
const SNAPSHOT_VERSION: u32 = 1;

/// A field read back from a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    One(Field1),
    Three(Field3),
}

fn write_header<W: Write>(
    w: &mut W,
    ndim: u8,
    sizes: &[u64],
    location: StaggerLocation,
) -> Result<()> {
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&[ndim])?;
    for s in sizes {
        w.write_all(&s.to_le_bytes())?;
    }
    w.write_all(&[location.snapshot_tag()])?;
    Ok(())
}

fn write_payload<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 * 1024);
    for chunk in values.chunks(1024) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Writes a 1D field in the `DLES` binary snapshot format.
pub fn write_snapshot_1d(path: &Path, field: &Field1) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, 1, &[field.grid.n as u64], field.location)?;
    write_payload(&mut w, &field.values)?;
    w.flush()?;
    Ok(())
}

/// Writes a 3D field in the `DLES` binary snapshot format (axis 0 slowest).
pub fn write_snapshot_3d(path: &Path, field: &Field3) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = field.grid.n as u64;
    write_header(&mut w, 3, &[n, n, n], field.location)?;
    write_payload(&mut w, &field.values)?;
    w.flush()?;
    Ok(())
}

fn bad_snapshot(path: &Path, reason: impl Into<String>) -> Error {
    Error::BadSnapshot {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Reads a snapshot file. The domain length is not stored in the format and
/// must be supplied by the caller.
pub fn read_snapshot(path: &Path, length: f64) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| bad_snapshot(path, "truncated header"))?;
    if magic != SNAPSHOT_MAGIC {
        return Err(bad_snapshot(path, "bad magic"));
    }
    let mut version = [0u8; 4];
    r.read_exact(&mut version)
        .map_err(|_| bad_snapshot(path, "truncated header"))?;
    let version = u32::from_le_bytes(version);
    if version != SNAPSHOT_VERSION {
        return Err(bad_snapshot(path, format!("unsupported version {version}")));
    }
    let mut ndim = [0u8; 1];
    r.read_exact(&mut ndim)
        .map_err(|_| bad_snapshot(path, "truncated header"))?;
    let ndim = ndim[0];
    if ndim != 1 && ndim != 3 {
        return Err(bad_snapshot(path, format!("unsupported ndim {ndim}")));
    }
    let mut sizes = Vec::with_capacity(ndim as usize);
    for _ in 0..ndim {
        let mut s = [0u8; 8];
        r.read_exact(&mut s)
            .map_err(|_| bad_snapshot(path, "truncated header"))?;
        sizes.push(u64::from_le_bytes(s));
    }
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)
        .map_err(|_| bad_snapshot(path, "truncated header"))?;
    let location = StaggerLocation::from_snapshot_tag(tag[0])
        .ok_or_else(|| bad_snapshot(path, format!("unknown stagger tag {}", tag[0])))?;

    let count = sizes.iter().product::<u64>() as usize;
    let mut payload = vec![0u8; count * 8];
    r.read_exact(&mut payload)
        .map_err(|_| bad_snapshot(path, "truncated payload"))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(bad_snapshot(path, "trailing bytes after payload"));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    match ndim {
        1 => {
            let field = Field1::new(Grid1D::new(sizes[0] as usize, length)?, location, values)?;
            Ok(Snapshot::One(field))
        }
        _ => {
            if !(sizes[0] == sizes[1] && sizes[1] == sizes[2]) {
                return Err(bad_snapshot(path, "non-cubic 3D snapshot"));
            }
            let field = Field3::new(Grid3D::new(sizes[0] as usize, length)?, location, values)?;
            Ok(Snapshot::Three(field))
        }
    }
}

pub fn read_snapshot_1d(path: &Path, length: f64) -> Result<Field1> {
    match read_snapshot(path, length)? {
        Snapshot::One(f) => Ok(f),
        Snapshot::Three(_) => Err(bad_snapshot(path, "expected a 1D snapshot")),
    }
}

pub fn read_snapshot_3d(path: &Path, length: f64) -> Result<Field3> {
    match read_snapshot(path, length)? {
        Snapshot::One(_) => Err(bad_snapshot(path, "expected a 3D snapshot")),
        Snapshot::Three(f) => Ok(f),
    }
}
