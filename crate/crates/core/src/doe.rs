//! Design space definition and Latin hypercube sampling.
//!
//! Every variable, including the even-only layer count and the categorical
//! layup, is sampled as a stratified latent in `[0, 1)` and then mapped onto
//! the design space by [`snap`].

use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::fmt::sig;

/// Name written to the DOE header for the generator behind [`lhs_sample`].
pub const GENERATOR_NAME: &str = "chacha8";

/// Number of sampled design variables.
pub const N_VARIABLES: usize = 7;

pub const DOE_HEADER: &str =
    "sample_id,n_layers,thickness_mm,orientation_set,punch_velocity_mps,layer_temp_C,tool_temp_C,air_temp_C";

/// Ply layup families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    /// (0, 45, -45, 90), quasi-isotropic.
    A,
    /// (30, -30, 60, -60).
    B,
}

impl Orientation {
    pub fn angles_deg(self) -> [f64; 4] {
        match self {
            Orientation::A => [0.0, 45.0, -45.0, 90.0],
            Orientation::B => [30.0, -30.0, 60.0, -60.0],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Orientation::A => "A",
            Orientation::B => "B",
        }
    }

    /// Binary feature encoding: A = 0, B = 1.
    pub fn code(self) -> f64 {
        match self {
            Orientation::A => 0.0,
            Orientation::B => 1.0,
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s.trim() {
            "A" => Some(Orientation::A),
            "B" => Some(Orientation::B),
            _ => None,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn lerp(&self, u: f64) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + u * (self.hi - self.lo)
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(CoreError::InvalidArgument(format!(
                "{name} interval [{}, {}] is not a valid range",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    /// Inclusive layer count bounds; only the even counts inside are used.
    pub n_layers: (u32, u32),
    /// Per-ply thickness, mm.
    pub thickness: Interval,
    pub orientation_sets: Vec<Orientation>,
    /// m/s
    pub punch_velocity: Interval,
    /// Initial organosheet temperature, °C.
    pub layer_temp: Interval,
    /// Punch / die temperature, °C.
    pub tool_temp: Interval,
    /// °C
    pub air_temp: Interval,
}

impl Default for ParameterSpace {
    fn default() -> Self {
        Self {
            n_layers: (4, 16),
            thickness: Interval::new(0.1, 0.6),
            orientation_sets: vec![Orientation::A, Orientation::B],
            punch_velocity: Interval::new(4.0, 6.5),
            layer_temp: Interval::new(200.0, 400.0),
            tool_temp: Interval::new(20.0, 220.0),
            air_temp: Interval::new(10.0, 30.0),
        }
    }
}

impl ParameterSpace {
    /// Even layer counts inside the configured bounds, ascending.
    pub fn even_layers(&self) -> Vec<u32> {
        let (lo, hi) = self.n_layers;
        let start = lo + lo % 2;
        (start..=hi).step_by(2).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.n_layers;
        if lo > hi || self.even_layers().is_empty() {
            return Err(CoreError::InvalidArgument(format!(
                "layer range {lo}..={hi} contains no even count"
            )));
        }
        if self.orientation_sets.is_empty() {
            return Err(CoreError::InvalidArgument("no orientation sets".into()));
        }
        self.thickness.check("thickness")?;
        self.punch_velocity.check("punch_velocity")?;
        self.layer_temp.check("layer_temp")?;
        self.tool_temp.check("tool_temp")?;
        self.air_temp.check("air_temp")?;
        if self.thickness.lo <= 0.0 {
            return Err(CoreError::InvalidArgument("thickness must be positive".into()));
        }
        Ok(())
    }
}

/// One sample of the seven design and process parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub n_layers: u32,
    /// mm per ply
    pub thickness: f64,
    pub orientation: Orientation,
    /// m/s
    pub punch_velocity: f64,
    /// °C
    pub layer_temp: f64,
    /// °C
    pub tool_temp: f64,
    /// °C
    pub air_temp: f64,
}

/// Feature names in the fixed column order of [`DesignPoint::features`].
pub const FEATURE_NAMES: [&str; N_VARIABLES] = [
    "n_layers",
    "thickness_mm",
    "orientation_set",
    "punch_velocity_mps",
    "layer_temp_C",
    "tool_temp_C",
    "air_temp_C",
];

impl DesignPoint {
    /// Total laminate thickness, mm.
    pub fn stack_thickness(&self) -> f64 {
        f64::from(self.n_layers) * self.thickness
    }

    /// Numeric feature vector; orientation encoded A = 0, B = 1.
    pub fn features(&self) -> [f64; N_VARIABLES] {
        [
            f64::from(self.n_layers),
            self.thickness,
            self.orientation.code(),
            self.punch_velocity,
            self.layer_temp,
            self.tool_temp,
            self.air_temp,
        ]
    }

    pub fn validate(&self, space: &ParameterSpace) -> Result<()> {
        let (lo, hi) = space.n_layers;
        if !self.n_layers.is_multiple_of(2) || self.n_layers < lo || self.n_layers > hi {
            return Err(CoreError::InvalidArgument(format!(
                "n_layers {} is not an even count in {lo}..={hi}",
                self.n_layers
            )));
        }
        if !space.orientation_sets.contains(&self.orientation) {
            return Err(CoreError::InvalidArgument(format!(
                "orientation {} not in design space",
                self.orientation
            )));
        }
        let checks = [
            ("thickness", self.thickness, space.thickness),
            ("punch_velocity", self.punch_velocity, space.punch_velocity),
            ("layer_temp", self.layer_temp, space.layer_temp),
            ("tool_temp", self.tool_temp, space.tool_temp),
            ("air_temp", self.air_temp, space.air_temp),
        ];
        for (name, value, range) in checks {
            if !range.contains(value) {
                return Err(CoreError::InvalidArgument(format!(
                    "{name} = {value} outside [{}, {}]",
                    range.lo, range.hi
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoeMatrix {
    pub points: Vec<DesignPoint>,
    pub seed: u64,
    pub space: ParameterSpace,
}

impl DoeMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The matrix as it reads back from its CSV form (reals at six
    /// significant digits). Downstream stages work on this so that a run
    /// started from the file and one started in memory agree exactly.
    pub fn canonical(&self) -> Result<DoeMatrix> {
        let mut buf = Vec::new();
        write_doe(self, &mut buf)?;
        read_doe(&buf[..], &self.space)
    }
}

/// Maps seven latents in `[0, 1)` onto the design space.
///
/// Latent order follows [`FEATURE_NAMES`]. Discrete values use half-open
/// uniform bins, so a layup latent of exactly 0.5 selects the second set.
pub fn snap(latents: &[f64], space: &ParameterSpace) -> Result<DesignPoint> {
    if latents.len() != N_VARIABLES {
        return Err(CoreError::InvalidArgument(format!(
            "expected {N_VARIABLES} latents, got {}",
            latents.len()
        )));
    }
    if let Some((i, u)) = latents.iter().enumerate().find(|(_, u)| !(0.0..1.0).contains(*u)) {
        return Err(CoreError::InvalidArgument(format!("latent {i} = {u} outside [0, 1)")));
    }
    let layers = space.even_layers();
    let orientations = &space.orientation_sets;
    if layers.is_empty() || orientations.is_empty() {
        return Err(CoreError::InvalidArgument("empty discrete domain".into()));
    }
    let bin = |u: f64, n: usize| ((u * n as f64) as usize).min(n - 1);
    Ok(DesignPoint {
        n_layers: layers[bin(latents[0], layers.len())],
        thickness: space.thickness.lerp(latents[1]),
        orientation: orientations[bin(latents[2], orientations.len())],
        punch_velocity: space.punch_velocity.lerp(latents[3]),
        layer_temp: space.layer_temp.lerp(latents[4]),
        tool_temp: space.tool_temp.lerp(latents[5]),
        air_temp: space.air_temp.lerp(latents[6]),
    })
}

/// Stratified latents: column `j` holds one uniform draw from each of the
/// `n` equal strata of `[0, 1)`, in an independently shuffled order.
pub fn lhs_latents(n: usize, dims: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(CoreError::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![0.0; dims]; n];
    let below_one = 1.0 - f64::EPSILON / 2.0;
    let mut strata: Vec<usize> = Vec::with_capacity(n);
    for j in 0..dims {
        strata.clear();
        strata.extend(0..n);
        strata.shuffle(&mut rng);
        for (row, &s) in rows.iter_mut().zip(&strata) {
            let jitter: f64 = rng.random();
            row[j] = ((s as f64 + jitter) / n as f64).min(below_one);
        }
    }
    Ok(rows)
}

/// Latin hypercube design of `n` points over `space`.
pub fn lhs_sample(space: &ParameterSpace, n: usize, seed: u64) -> Result<DoeMatrix> {
    space.validate()?;
    let points = lhs_latents(n, N_VARIABLES, seed)?
        .iter()
        .map(|u| snap(u, space))
        .collect::<Result<Vec<_>>>()?;
    Ok(DoeMatrix {
        points,
        seed,
        space: space.clone(),
    })
}

pub fn write_doe<W: Write>(matrix: &DoeMatrix, mut sink: W) -> Result<()> {
    writeln!(sink, "# seed={} generator={GENERATOR_NAME}", matrix.seed)?;
    writeln!(sink, "{DOE_HEADER}")?;
    for (i, p) in matrix.points.iter().enumerate() {
        writeln!(
            sink,
            "{i},{},{},{},{},{},{},{}",
            p.n_layers,
            sig(p.thickness, 6),
            p.orientation,
            sig(p.punch_velocity, 6),
            sig(p.layer_temp, 6),
            sig(p.tool_temp, 6),
            sig(p.air_temp, 6),
        )?;
    }
    Ok(())
}

/// Reads a DOE CSV and validates every row against `space`.
///
/// Row numbers in errors are 1-based data rows (the header is row 0).
pub fn read_doe<R: BufRead>(source: R, space: &ParameterSpace) -> Result<DoeMatrix> {
    let columns: Vec<&str> = DOE_HEADER.split(',').collect();
    let mut seed = 0u64;
    let mut saw_header = false;
    let mut points = Vec::new();
    for line in source.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for kv in comment.split_whitespace() {
                if let Some(v) = kv.strip_prefix("seed=") {
                    seed = v.parse().map_err(|_| CoreError::Parse {
                        row: 0,
                        column: "seed".into(),
                        message: format!("bad seed `{v}`"),
                    })?;
                }
            }
            continue;
        }
        if !saw_header {
            if line != DOE_HEADER {
                return Err(CoreError::Parse {
                    row: 0,
                    column: "header".into(),
                    message: format!("expected `{DOE_HEADER}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let row = points.len() + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(CoreError::Parse {
                row,
                column: "*".into(),
                message: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        let err = |col: usize, message: String| CoreError::Parse {
            row,
            column: columns[col].to_string(),
            message,
        };
        let real = |col: usize| -> Result<f64> {
            fields[col]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(col, format!("not a number: `{}`", fields[col])))
        };
        let id: usize = fields[0]
            .parse()
            .map_err(|_| err(0, format!("not an index: `{}`", fields[0])))?;
        if id != row - 1 {
            return Err(err(0, format!("expected sample_id {}, found {id}", row - 1)));
        }
        let n_layers: u32 = fields[1]
            .parse()
            .map_err(|_| err(1, format!("not an integer: `{}`", fields[1])))?;
        let (lo, hi) = space.n_layers;
        if !n_layers.is_multiple_of(2) || n_layers < lo || n_layers > hi {
            return Err(err(1, format!("{n_layers} is not an even count in {lo}..={hi}")));
        }
        let orientation =
            Orientation::from_label(fields[3]).ok_or_else(|| err(3, format!("unknown orientation `{}`", fields[3])))?;
        if !space.orientation_sets.contains(&orientation) {
            return Err(err(3, format!("orientation {orientation} not in design space")));
        }
        let ranged = |col: usize, range: Interval| -> Result<f64> {
            let v = real(col)?;
            if range.contains(v) {
                Ok(v)
            } else {
                Err(err(col, format!("{v} outside [{}, {}]", range.lo, range.hi)))
            }
        };
        points.push(DesignPoint {
            n_layers,
            thickness: ranged(2, space.thickness)?,
            orientation,
            punch_velocity: ranged(4, space.punch_velocity)?,
            layer_temp: ranged(5, space.layer_temp)?,
            tool_temp: ranged(6, space.tool_temp)?,
            air_temp: ranged(7, space.air_temp)?,
        });
    }
    Ok(DoeMatrix {
        points,
        seed,
        space: space.clone(),
    })
}
