//! Hourly gridded wind components and point evaluation at hub height.
//!
//! # WGRD layout
//!
//! All integers and floats little-endian:
//!
//! | field   | type                        |
//! |---------|-----------------------------|
//! | magic   | `b"WGRD"`                   |
//! | version | u32 (= 1)                   |
//! | n_time  | u32                         |
//! | n_lat   | u32                         |
//! | n_lon   | u32                         |
//! | t0      | i64, Unix seconds UTC       |
//! | step    | i64, seconds                |
//! | lats    | n_lat × f64, ascending      |
//! | lons    | n_lon × f64, ascending      |
//! | u10, v10, u100, v100 | 4 × n_time·n_lat·n_lon × f32, `[time][lat][lon]` |

use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WGRD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 * 4 + 8 * 2;

/// Lower reference height of the source data, m.
pub const LOW_REFERENCE_HEIGHT: f64 = 10.0;
/// Upper reference height and anchor of the power law, m.
pub const HIGH_REFERENCE_HEIGHT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    U10,
    V10,
    U100,
    V100,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::U10, Variable::V10, Variable::U100, Variable::V100];

    pub fn name(&self) -> &'static str {
        match self {
            Variable::U10 => "u10",
            Variable::V10 => "v10",
            Variable::U100 => "u100",
            Variable::V100 => "v100",
        }
    }

    pub fn from_name(s: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindGrid {
    lons: Vec<f64>,
    lats: Vec<f64>,
    t0: i64,
    step: i64,
    n_time: usize,
    u10: Vec<f32>,
    v10: Vec<f32>,
    u100: Vec<f32>,
    v100: Vec<f32>,
}

fn check_axis(name: &str, c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::Format(format!("{name} axis is empty")));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{name} axis has non-finite values")));
    }
    if c.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Format(format!("{name} not strictly increasing")));
    }
    Ok(())
}

impl WindGrid {
    /// Validating constructor. Arrays are `[time][lat][lon]`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lons: Vec<f64>,
        lats: Vec<f64>,
        t0: i64,
        step: i64,
        n_time: usize,
        u10: Vec<f32>,
        v10: Vec<f32>,
        u100: Vec<f32>,
        v100: Vec<f32>,
    ) -> Result<Self> {
        check_axis("longitudes", &lons)?;
        check_axis("latitudes", &lats)?;
        if step <= 0 {
            return Err(Error::Format(format!("step must be positive, got {step}")));
        }
        if n_time == 0 {
            return Err(Error::Format("n_time must be positive".into()));
        }
        let n = n_time * lats.len() * lons.len();
        for (var, a) in Variable::ALL.iter().zip([&u10, &v10, &u100, &v100]) {
            if a.len() != n {
                return Err(Error::Format(format!(
                    "{} has {} values, expected {n}",
                    var.name(),
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!(
                    "{} has non-finite values",
                    var.name()
                )));
            }
        }
        Ok(Self {
            lons,
            lats,
            t0,
            step,
            n_time,
            u10,
            v10,
            u100,
            v100,
        })
    }

    pub fn lons(&self) -> &[f64] {
        &self.lons
    }

    pub fn lats(&self) -> &[f64] {
        &self.lats
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    fn cells(&self) -> usize {
        self.lats.len() * self.lons.len()
    }

    pub fn data(&self, var: Variable) -> &[f32] {
        match var {
            Variable::U10 => &self.u10,
            Variable::V10 => &self.v10,
            Variable::U100 => &self.u100,
            Variable::V100 => &self.v100,
        }
    }

    /// Stored value at a node.
    pub fn value(&self, var: Variable, t: usize, lat_idx: usize, lon_idx: usize) -> f32 {
        self.data(var)[t * self.cells() + lat_idx * self.lons.len() + lon_idx]
    }

    pub fn time_of(&self, index: usize) -> i64 {
        self.t0 + index as i64 * self.step
    }

    /// Indices of the time steps with `start <= t < end`, or `None` unless the
    /// grid has a step for the whole interval.
    pub fn steps_covering(&self, start: i64, end: i64) -> Option<Range<usize>> {
        let last = self.time_of(self.n_time - 1);
        if start < self.t0 || last < end - self.step || end <= start {
            return None;
        }
        let first = (start - self.t0 + self.step - 1).div_euclid(self.step) as usize;
        let stop =
            ((end - self.t0 + self.step - 1).div_euclid(self.step) as usize).min(self.n_time);
        Some(first..stop)
    }

    /// Interpolation stencil for a point, or an out-of-domain error.
    pub fn locate(&self, lon: f64, lat: f64) -> Result<Stencil> {
        let out = || Error::OutOfGrid { lon, lat };
        let (i0, i1, fx) = axis_cell(&self.lons, lon).ok_or_else(out)?;
        let (j0, j1, fy) = axis_cell(&self.lats, lat).ok_or_else(out)?;
        let nx = self.lons.len();
        Ok(Stencil {
            corners: [j0 * nx + i0, j0 * nx + i1, j1 * nx + i0, j1 * nx + i1],
            fx,
            fy,
        })
    }

    /// Bilinear blend of the four cell corners around `(lon, lat)` at step `t`.
    pub fn bilinear(&self, var: Variable, t: usize, lon: f64, lat: f64) -> Result<f64> {
        if t >= self.n_time {
            return Err(Error::TimeOutOfRange {
                index: t,
                n_time: self.n_time,
            });
        }
        let s = self.locate(lon, lat)?;
        Ok(s.apply(self.frame(var, t)))
    }

    /// All cells of one variable at one time step, `[lat][lon]`.
    #[inline]
    pub fn frame(&self, var: Variable, t: usize) -> &[f32] {
        let n = self.cells();
        &self.data(var)[t * n..(t + 1) * n]
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && &bytes[..4] != MAGIC {
                return Err(Error::Format("bad magic".into()));
            }
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut cur = Cursor { bytes, pos: 4 };
        let version = cur.u32();
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_time = cur.u32() as usize;
        let n_lat = cur.u32() as usize;
        let n_lon = cur.u32() as usize;
        let t0 = cur.i64();
        let step = cur.i64();

        let cells = n_time
            .checked_mul(n_lat)
            .and_then(|v| v.checked_mul(n_lon))
            .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
        let expected = HEADER_LEN + 8 * (n_lat + n_lon) + 4 * 4 * cells;
        if bytes.len() != expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        let lats = (0..n_lat).map(|_| cur.f64()).collect();
        let lons = (0..n_lon).map(|_| cur.f64()).collect();
        let mut read = || (0..cells).map(|_| cur.f32()).collect::<Vec<_>>();
        let u10 = read();
        let v10 = read();
        let u100 = read();
        let v100 = read();
        Self::new(lons, lats, t0, step, n_time, u10, v10, u100, v100)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cells = self.u10.len();
        let mut out =
            Vec::with_capacity(HEADER_LEN + 8 * (self.lats.len() + self.lons.len()) + 16 * cells);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_time as u32).to_le_bytes());
        out.extend_from_slice(&(self.lats.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.lons.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.t0.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        for v in self.lats.iter().chain(&self.lons) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for a in [&self.u10, &self.v10, &self.u100, &self.v100] {
            for v in a.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

/// Reads and validates a WGRD file.
pub fn load_windgrid(path: impl AsRef<Path>) -> Result<WindGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    WindGrid::from_bytes(&bytes)
}

/// Column order of the grid CSV exchange format.
pub const GRID_CSV_COLUMNS: [&str; 7] = ["time_index", "lat", "lon", "u10", "v10", "u100", "v100"];

fn sorted_axis(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Builds a grid from `time_index,lat,lon,u10,v10,u100,v100` rows. Every
/// combination of the time indices `0..n`, latitudes and longitudes present
/// must appear exactly once.
pub fn grid_from_csv<R: std::io::Read>(input: R, t0: i64, step: i64) -> Result<WindGrid> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = r.headers()?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(GRID_CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut rows: Vec<(usize, f64, f64, [f32; 4])> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let t: usize = field(0)
            .parse()
            .map_err(|_| Error::parse(row, format!("invalid time_index `{}`", field(0))))?;
        let num = |k: usize| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::parse(
                        row,
                        format!("invalid {} `{}`", GRID_CSV_COLUMNS[k], field(k)),
                    )
                })
        };
        let (lat, lon) = (num(1)?, num(2)?);
        let vals = [
            num(3)? as f32,
            num(4)? as f32,
            num(5)? as f32,
            num(6)? as f32,
        ];
        rows.push((t, lat, lon, vals));
    }
    if rows.is_empty() {
        return Err(Error::Format("grid CSV has no rows".into()));
    }
    let lats = sorted_axis(rows.iter().map(|r| r.1).collect());
    let lons = sorted_axis(rows.iter().map(|r| r.2).collect());
    let n_time = rows.iter().map(|r| r.0).max().expect("nonempty") + 1;
    let cells = lats.len() * lons.len();
    let mut filled = vec![false; n_time * cells];
    let mut data = [
        vec![0f32; n_time * cells],
        vec![0f32; n_time * cells],
        vec![0f32; n_time * cells],
        vec![0f32; n_time * cells],
    ];
    for (t, lat, lon, vals) in rows {
        let j = lats
            .binary_search_by(|x| x.total_cmp(&lat))
            .expect("axis value");
        let i = lons
            .binary_search_by(|x| x.total_cmp(&lon))
            .expect("axis value");
        let k = t * cells + j * lons.len() + i;
        if filled[k] {
            return Err(Error::Format(format!(
                "duplicate grid cell: time {t}, lat {lat}, lon {lon}"
            )));
        }
        filled[k] = true;
        for (arr, v) in data.iter_mut().zip(vals) {
            arr[k] = v;
        }
    }
    if let Some(k) = filled.iter().position(|f| !f) {
        let (t, rest) = (k / cells, k % cells);
        return Err(Error::Format(format!(
            "ragged grid: no row for time {t}, lat {}, lon {}",
            lats[rest / lons.len()],
            lons[rest % lons.len()]
        )));
    }
    let [u10, v10, u100, v100] = data;
    WindGrid::new(lons, lats, t0, step, n_time, u10, v10, u100, v100)
}

/// Writes a grid in the CSV exchange format.
pub fn grid_to_csv(grid: &WindGrid) -> String {
    use std::fmt::Write as _;
    let mut s = GRID_CSV_COLUMNS.join(",");
    s.push('\n');
    for t in 0..grid.n_time() {
        for (j, lat) in grid.lats().iter().enumerate() {
            for (i, lon) in grid.lons().iter().enumerate() {
                let v = |var| grid.value(var, t, j, i);
                let _ = writeln!(
                    s,
                    "{t},{lat},{lon},{},{},{},{}",
                    v(Variable::U10),
                    v(Variable::V10),
                    v(Variable::U100),
                    v(Variable::V100)
                );
            }
        }
    }
    s
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.bytes[self.pos..self.pos + N]
            .try_into()
            .expect("length checked");
        self.pos += N;
        out
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn i64(&mut self) -> i64 {
        i64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
}

/// Cell indices and fractional offset of `x` on an ascending axis. A point
/// exactly on a node gets offset 0 so node values come back unchanged.
fn axis_cell(c: &[f64], x: f64) -> Option<(usize, usize, f64)> {
    let n = c.len();
    if !(x >= c[0] && x <= c[n - 1]) {
        return None;
    }
    let i = c.partition_point(|&v| v <= x) - 1;
    if i == n - 1 {
        return Some((i, i, 0.0));
    }
    Some((i, i + 1, (x - c[i]) / (c[i + 1] - c[i])))
}

/// Precomputed corner offsets and weights for one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    /// Offsets of (lat0,lon0), (lat0,lon1), (lat1,lon0), (lat1,lon1) within a frame.
    corners: [usize; 4],
    fx: f64,
    fy: f64,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, frame: &[f32]) -> f64 {
        let [a, b, c, d] = self.corners.map(|i| frame[i] as f64);
        let lower = a + self.fx * (b - a);
        let upper = c + self.fx * (d - c);
        lower + self.fy * (upper - lower)
    }

    /// Wind speeds at 10 m and 100 m at time step `t`. Components are
    /// interpolated before the norm is taken.
    #[inline]
    pub fn speeds(&self, grid: &WindGrid, t: usize) -> (f64, f64) {
        let u10 = self.apply(grid.frame(Variable::U10, t));
        let v10 = self.apply(grid.frame(Variable::V10, t));
        let u100 = self.apply(grid.frame(Variable::U100, t));
        let v100 = self.apply(grid.frame(Variable::V100, t));
        (
            speed_from_components(u10, v10),
            speed_from_components(u100, v100),
        )
    }
}

#[inline]
pub fn speed_from_components(u: f64, v: f64) -> f64 {
    (u * u + v * v).sqrt()
}

/// Power-law shear exponent from the two reference-height speeds,
/// `ln(v100 / v10) / ln(10)`. `None` when either speed is zero (calm air).
#[inline]
pub fn shear_exponent(v10: f64, v100: f64) -> Option<f64> {
    if v10 > 0.0 && v100 > 0.0 {
        Some((v100 / v10).ln() / (HIGH_REFERENCE_HEIGHT / LOW_REFERENCE_HEIGHT).ln())
    } else {
        None
    }
}

/// Power law anchored at 100 m: `v100 · (h / 100)^alpha`.
#[inline]
pub fn speed_at_height(v100: f64, alpha: f64, height: f64) -> Result<f64> {
    if !(height > 0.0) {
        return Err(Error::domain(format!(
            "height must be positive, got {height}"
        )));
    }
    Ok(extrapolate(v100, alpha, height))
}

#[inline]
pub(crate) fn extrapolate(v100: f64, alpha: f64, height: f64) -> f64 {
    if height == HIGH_REFERENCE_HEIGHT {
        v100
    } else {
        v100 * (height / HIGH_REFERENCE_HEIGHT).powf(alpha)
    }
}

/// Speed at `height` given the reference speeds; calm hours use alpha = 0.
/// The flag reports whether the calm fallback was taken.
#[inline]
pub fn speed_at_hub(v10: f64, v100: f64, height: f64) -> (f64, bool) {
    match shear_exponent(v10, v100) {
        Some(alpha) => (extrapolate(v100, alpha, height), false),
        None => (extrapolate(v100, 0.0, height), true),
    }
}

/// Wind speed at `(lon, lat)`, time step `t` and height `h`.
pub fn hub_height_speed(grid: &WindGrid, lon: f64, lat: f64, t: usize, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::domain(format!("height must be positive, got {h}")));
    }
    let v10 = speed_from_components(
        grid.bilinear(Variable::U10, t, lon, lat)?,
        grid.bilinear(Variable::V10, t, lon, lat)?,
    );
    let v100 = speed_from_components(
        grid.bilinear(Variable::U100, t, lon, lat)?,
        grid.bilinear(Variable::V100, t, lon, lat)?,
    );
    Ok(speed_at_hub(v10, v100, h).0)
}
