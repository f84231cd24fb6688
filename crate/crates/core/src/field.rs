//! Scalar fields sampled on a rectilinear lattice.
//!
//! A grid with `N` points on an axis includes both bounds, so the step is
//! `(max − min)/(N − 1)`. Values are stored x-fastest:
//! `index = ix + Nx·(iy + Ny·iz)`.
//!
//! `NaN` marks an undefined sample. Samples are canonicalised to the quiet
//! `f64::NAN` bit pattern so fields compare bit for bit.

use std::io::{self, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalError, Expr, ParamSet, Program, Var, Vars};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis {axis} needs min < max, got [{min}, {max}]")]
    EmptyRange { axis: char, min: f64, max: f64 },
    #[error("axis {axis} needs at least 2 points, got {count}")]
    TooFewPoints { axis: char, count: usize },
    #[error("index ({0}, {1}, {2}) is outside the grid")]
    IndexOutOfRange(usize, usize, usize),
    #[error("grid of {0:?} points is too large")]
    TooLarge([usize; 3]),
}

/// One lattice axis: `count` points spanning `[min, max]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Axis {
        Axis { min, max, count }
    }

    pub(crate) fn validate(&self, axis: char) -> Result<(), GridError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(GridError::EmptyRange {
                axis,
                min: self.min,
                max: self.max,
            });
        }
        if self.count < 2 {
            return Err(GridError::TooFewPoints {
                axis,
                count: self.count,
            });
        }
        Ok(())
    }

    /// Coordinate of point `i`. Written as a blend of the bounds so the first
    /// and last points are exactly `min` and `max`.
    pub fn point(&self, i: usize) -> f64 {
        let s = i as f64 / (self.count - 1) as f64;
        (1.0 - s) * self.min + s * self.max
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }
}

/// The sampling working space: bounds plus point counts per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

impl GridSpec {
    pub fn new(x: Axis, y: Axis, z: Axis) -> Result<GridSpec, GridError> {
        let spec = GridSpec { x, y, z };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds from `[xmin, xmax, ymin, ymax, zmin, zmax]` and `[Nx, Ny, Nz]`.
    pub fn from_bounds(bounds: [f64; 6], counts: [usize; 3]) -> Result<GridSpec, GridError> {
        GridSpec::new(
            Axis::new(bounds[0], bounds[1], counts[0]),
            Axis::new(bounds[2], bounds[3], counts[1]),
            Axis::new(bounds[4], bounds[5], counts[2]),
        )
    }

    /// Same bounds `[-half, half]` and count on every axis.
    pub fn cube(half: f64, count: usize) -> Result<GridSpec, GridError> {
        let a = Axis::new(-half, half, count);
        GridSpec::new(a, a, a)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        self.x.validate('x')?;
        self.y.validate('y')?;
        self.z.validate('z')?;
        self.checked_len().ok_or(GridError::TooLarge(self.counts()))?;
        Ok(())
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.x.count, self.y.count, self.z.count]
    }

    pub fn bounds(&self) -> [f64; 6] {
        [self.x.min, self.x.max, self.y.min, self.y.max, self.z.min, self.z.max]
    }

    fn checked_len(&self) -> Option<usize> {
        let n = self.x.count.checked_mul(self.y.count)?.checked_mul(self.z.count)?;
        // Must also fit the 8-byte-per-value payload.
        n.checked_mul(8)?;
        Some(n)
    }

    pub fn len(&self) -> usize {
        self.x.count * self.y.count * self.z.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.x.count * (iy + self.y.count * iz)
    }

    /// Lattice coordinates of a flat index.
    pub fn unindex(&self, i: usize) -> (usize, usize, usize) {
        let ix = i % self.x.count;
        let rest = i / self.x.count;
        (ix, rest % self.y.count, rest / self.y.count)
    }

    pub fn grid_point(&self, ix: usize, iy: usize, iz: usize) -> Result<[f64; 3], GridError> {
        if ix >= self.x.count || iy >= self.y.count || iz >= self.z.count {
            return Err(GridError::IndexOutOfRange(ix, iy, iz));
        }
        Ok(self.point_unchecked(ix, iy, iz))
    }

    pub(crate) fn point_unchecked(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [self.x.point(ix), self.y.point(iy), self.z.point(iz)]
    }

    /// Length of one cell's main diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        let (a, b, c) = (self.x.step(), self.y.step(), self.z.step());
        (a * a + b * b + c * c).sqrt()
    }
}

/// Free function form of [`GridSpec::grid_point`].
pub fn grid_point(spec: &GridSpec, ix: usize, iy: usize, iz: usize) -> Result<[f64; 3], GridError> {
    spec.grid_point(ix, iy, iz)
}

/// Sampled values over a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("expected {expected} values for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<ScalarField, FieldError> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(FieldError::LengthMismatch {
                expected: spec.len(),
                actual: values.len(),
            });
        }
        Ok(ScalarField { spec, values })
    }

    /// Fills the grid from a closure over world coordinates.
    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> f64 + Sync) -> Result<ScalarField, FieldError> {
        spec.validate()?;
        let values = (0..spec.len())
            .into_par_iter()
            .map(|i| {
                let (ix, iy, iz) = spec.unindex(i);
                canonical(f(spec.point_unchecked(ix, iy, iz)))
            })
            .collect();
        Ok(ScalarField { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.spec.index(ix, iy, iz)]
    }

    /// Negated copy; undefined samples stay undefined.
    pub fn negated(&self) -> ScalarField {
        ScalarField {
            spec: self.spec,
            values: self.values.iter().map(|v| canonical(-v)).collect(),
        }
    }
}

pub(crate) fn canonical(v: f64) -> f64 {
    if v.is_nan() {
        f64::NAN
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("expression uses `{0}`, only x, y, z are allowed in a field")]
    SurfaceVariable(Var),
}

/// Evaluates `e` at every lattice point.
///
/// Work is split into z-slabs that run on the current rayon pool. Every value
/// depends only on its own lattice point, so the result is bit-identical for
/// any number of workers.
pub fn sample_field(e: &Expr, spec: &GridSpec, params: &ParamSet) -> Result<ScalarField, SampleError> {
    spec.validate()?;
    if let Some(v) = e
        .free_names()
        .variables
        .into_iter()
        .find(|v| matches!(v, Var::U | Var::V))
    {
        return Err(SampleError::SurfaceVariable(v));
    }
    let program = Program::compile(e, params)?;
    let [nx, ny, _] = spec.counts();
    let mut values = vec![0.0; spec.len()];
    values.par_chunks_mut(nx * ny).enumerate().for_each(|(iz, slab)| {
        let z = spec.z.point(iz);
        let mut stack = Vec::new();
        for iy in 0..ny {
            let y = spec.y.point(iy);
            for ix in 0..nx {
                let v = program.eval_with(Vars::xyz(spec.x.point(ix), y, z), &mut stack);
                slab[ix + nx * iy] = canonical(v);
            }
        }
    });
    Ok(ScalarField { spec: *spec, values })
}

pub const IFLD_MAGIC: &[u8; 4] = b"IFLD";
pub const IFLD_VERSION: u32 = 1;
pub const IFLD_HEADER_LEN: usize = 4 + 4 + 12 + 48;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}, expected \"IFLD\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}, expected 1")]
    Version(u32),
    #[error("stream ended before the payload was complete")]
    Truncated,
    #[error("grid of {0:?} points is too large")]
    SizeOverflow([usize; 3]),
    #[error("invalid grid in header: {0}")]
    Grid(GridError),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> FormatError {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FormatError::Truncated
        } else {
            FormatError::Io(e)
        }
    }
}

/// Writes the IFLD v1 binary layout, all little-endian:
/// magic, `u32` version, `u32` Nx, Ny, Nz, six `f64` bounds, then the values.
pub fn write_field<W: Write>(field: &ScalarField, mut sink: W) -> io::Result<()> {
    let spec = field.spec();
    let mut header = Vec::with_capacity(IFLD_HEADER_LEN);
    header.extend_from_slice(IFLD_MAGIC);
    header.extend_from_slice(&IFLD_VERSION.to_le_bytes());
    for n in spec.counts() {
        let n = u32::try_from(n).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "axis count exceeds u32"))?;
        header.extend_from_slice(&n.to_le_bytes());
    }
    for b in spec.bounds() {
        header.extend_from_slice(&b.to_le_bytes());
    }
    sink.write_all(&header)?;
    let mut payload = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&payload)?;
    sink.flush()
}

pub fn read_field<R: Read>(mut source: R) -> Result<ScalarField, FormatError> {
    let mut header = [0u8; IFLD_HEADER_LEN];
    source.read_exact(&mut header)?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if &magic != IFLD_MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != IFLD_VERSION {
        return Err(FormatError::Version(version));
    }
    let counts = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let bounds: [f64; 6] = std::array::from_fn(|i| f64_at(20 + 8 * i));
    let byte_len = counts[0]
        .checked_mul(counts[1])
        .and_then(|n| n.checked_mul(counts[2]))
        .and_then(|n| n.checked_mul(8))
        .ok_or(FormatError::SizeOverflow(counts))?;
    let spec = GridSpec::from_bounds(bounds, counts).map_err(FormatError::Grid)?;
    // Read incrementally so a lying header cannot force a huge allocation.
    let mut payload = Vec::new();
    let read = source.take(byte_len as u64).read_to_end(&mut payload)?;
    if read != byte_len {
        return Err(FormatError::Truncated);
    }
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(ScalarField { spec, values })
}

/// Inside/outside/unknown mark of one lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Mark {
    Outside = 0,
    Inside = 1,
    Unknown = 2,
}

impl Mark {
    /// Inside iff `value <= iso`; `NaN` is unknown.
    pub fn of(value: f64, iso: f64) -> Mark {
        if value.is_nan() {
            Mark::Unknown
        } else if value <= iso {
            Mark::Inside
        } else {
            Mark::Outside
        }
    }
}

/// Per-point classification of a field against an iso-level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    counts: [usize; 3],
    marks: Vec<Mark>,
}

impl Occupancy {
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn count(&self, mark: Mark) -> usize {
        self.marks.iter().filter(|m| **m == mark).count()
    }

    pub fn inside(&self) -> usize {
        self.count(Mark::Inside)
    }

    pub fn outside(&self) -> usize {
        self.count(Mark::Outside)
    }

    pub fn unknown(&self) -> usize {
        self.count(Mark::Unknown)
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

pub fn classify(field: &ScalarField, iso: f64) -> Occupancy {
    Occupancy {
        counts: field.spec.counts(),
        marks: field.values.iter().map(|v| Mark::of(*v, iso)).collect(),
    }
}
