//! Benchmark problems on `[-1, 1]^d`: labeling rules, seeded generators and
//! dataset files.
//!
//! Boundaries use strict inequalities; a point exactly on a border goes to the
//! outer (or intermediate) class.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::DataPoint;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    Circle,
    #[serde(rename = "3-circles")]
    ThreeCircles,
    Hypersphere,
    Annulus,
    NonConvex,
    BinaryAnnulus,
    Sphere,
    Squares,
    WavyLines,
}

impl ProblemId {
    pub const ALL: [ProblemId; 9] = [
        ProblemId::Circle,
        ProblemId::ThreeCircles,
        ProblemId::Hypersphere,
        ProblemId::Annulus,
        ProblemId::NonConvex,
        ProblemId::BinaryAnnulus,
        ProblemId::Sphere,
        ProblemId::Squares,
        ProblemId::WavyLines,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Circle => "circle",
            ProblemId::ThreeCircles => "3-circles",
            ProblemId::Hypersphere => "hypersphere",
            ProblemId::Annulus => "annulus",
            ProblemId::NonConvex => "non-convex",
            ProblemId::BinaryAnnulus => "binary-annulus",
            ProblemId::Sphere => "sphere",
            ProblemId::Squares => "squares",
            ProblemId::WavyLines => "wavy-lines",
        }
    }

    pub fn def(self) -> ProblemDef {
        let (dim, num_classes) = match self {
            ProblemId::Circle => (2, 2),
            ProblemId::ThreeCircles => (2, 4),
            ProblemId::Hypersphere => (4, 2),
            ProblemId::Annulus => (2, 3),
            ProblemId::NonConvex => (2, 2),
            ProblemId::BinaryAnnulus => (2, 2),
            ProblemId::Sphere => (3, 2),
            ProblemId::Squares => (2, 4),
            ProblemId::WavyLines => (2, 4),
        };
        let train_size = match dim {
            2 => 200,
            3 => 500,
            _ => 1000,
        };
        ProblemDef {
            id: self,
            dim,
            num_classes,
            train_size,
            test_size: 4000,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let known: Vec<_> = ProblemId::ALL.iter().map(|p| p.name()).collect();
            Error::invalid(format!("unknown problem '{s}' (known: {})", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDef {
    pub id: ProblemId,
    pub dim: usize,
    pub num_classes: usize,
    pub train_size: usize,
    pub test_size: usize,
}

/// Squared circle radius, `2/π`: half of the square's area.
pub const CIRCLE_R2: f64 = 2.0 / PI;
/// Squared hypersphere radius as used by the four-dimensional problem.
pub const HYPERSPHERE_R2: f64 = 2.0 / PI;
/// Annulus radii: `r1² = 0.8 - 2/π`, `r2² = 0.8`, so the ring covers half the square.
pub const ANNULUS_INNER_R2: f64 = 0.8 - 2.0 / PI;
pub const ANNULUS_OUTER_R2: f64 = 0.8;

/// Sphere radius `∛(3/π)`: half of the cube's volume.
pub fn sphere_radius() -> f64 {
    (3.0 / PI).cbrt()
}

/// Disks of the 3-circles problem as `(center, radius)`; class `i + 1` is the
/// interior of disk `i`, class 0 everything else. The disks are disjoint and
/// together cover three quarters of the square.
pub fn three_circles_disks() -> [([f64; 2], f64); 3] {
    [
        ([-1.0, 1.0], 1.0),
        ([1.0, 0.0], (6.0 / PI - 1.0).sqrt()),
        ([-0.5, -0.5], 0.5),
    ]
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Ground-truth class of `x` for `problem`.
pub fn label_point(problem: ProblemId, x: &[f64]) -> Result<usize> {
    let def = problem.def();
    if x.len() != def.dim {
        return Err(Error::invalid(format!(
            "{problem} points have dimension {}, got {}",
            def.dim,
            x.len()
        )));
    }
    let r2 = norm2(x);
    let class = match problem {
        ProblemId::Circle => usize::from(r2 >= CIRCLE_R2),
        ProblemId::Hypersphere => usize::from(r2 >= HYPERSPHERE_R2),
        ProblemId::Sphere => usize::from(r2 >= sphere_radius().powi(2)),
        ProblemId::Annulus => {
            if r2 < ANNULUS_INNER_R2 {
                0
            } else if r2 < ANNULUS_OUTER_R2 {
                1
            } else {
                2
            }
        }
        ProblemId::BinaryAnnulus => usize::from((ANNULUS_INNER_R2..ANNULUS_OUTER_R2).contains(&r2)),
        ProblemId::ThreeCircles => three_circles_disks()
            .iter()
            .position(|(c, r)| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) < r * r)
            .map_or(0, |i| i + 1),
        ProblemId::NonConvex => usize::from(x[1] <= -2.0 * x[0] + 1.5 * (PI * x[0]).sin()),
        ProblemId::Squares => 2 * usize::from(x[0] <= 0.0) + usize::from(x[1] <= 0.0),
        ProblemId::WavyLines => {
            let wave = (PI * x[0]).sin();
            let above_first = x[1] > wave + x[0];
            let above_second = x[1] > wave - x[0];
            2 * usize::from(!above_first) + usize::from(!above_second)
        }
    };
    Ok(class)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub problem: ProblemId,
    pub seed: u64,
    pub points: Vec<DataPoint>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.problem.def().dim
    }
}

/// `n` points drawn uniformly from `[-1, 1]^d` (coordinates in draw order) and
/// labeled by [`label_point`].
pub fn generate_dataset(problem: ProblemId, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("dataset size must be ≥ 1"));
    }
    let dim = problem.def().dim;
    let mut prng = rng::seeded(seed);
    let points = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng::uniform(&mut prng, -1.0, 1.0)).collect();
            let class_index = label_point(problem, &x)?;
            Ok(DataPoint { x, class_index })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { problem, seed, points })
}

/// Fraction of points in each class (length = the problem's class count).
pub fn class_balance(data: &Dataset) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::invalid("class balance of an empty dataset"));
    }
    let mut counts = vec![0usize; data.problem.def().num_classes];
    for p in &data.points {
        *counts
            .get_mut(p.class_index)
            .ok_or_else(|| Error::invalid(format!("class {} out of range", p.class_index)))? += 1;
    }
    let n = data.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Sidecar written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub problem: ProblemId,
    pub n: usize,
    pub seed: u64,
    pub generator: String,
}

/// `<csv path>.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `x1,…,xd,class` rows plus the JSON manifest. Floats use the shortest
/// representation that parses back to the same bits.
pub fn save_dataset(data: &Dataset, csv_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
    let dim = data.dim();
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.push("class".into());
    w.write_record(&header).map_err(|e| csv_error(csv_path, e))?;
    for p in &data.points {
        let mut row: Vec<String> = p.x.iter().map(|v| format!("{v:?}")).collect();
        row.push(p.class_index.to_string());
        w.write_record(&row).map_err(|e| csv_error(csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;

    let manifest = DatasetManifest {
        problem: data.problem,
        n: data.len(),
        seed: data.seed,
        generator: rng::GENERATOR_NAME.into(),
    };
    let mpath = manifest_path(csv_path);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::parse(mpath.display().to_string(), e))?;
    fs::write(&mpath, text + "\n").map_err(|e| Error::io(&mpath, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        Error::parse(path.display().to_string(), e)
    }
}

/// Reads a dataset written by [`save_dataset`]. Stored labels must agree with
/// the problem's labeling rule.
pub fn load_dataset(csv_path: &Path) -> Result<Dataset> {
    let mpath = manifest_path(csv_path);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::parse(mpath.display().to_string(), e))?;
    let dim = manifest.problem.def().dim;
    let ctx = csv_path.display().to_string();

    let mut r = csv::Reader::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
    let header = r.headers().map_err(|e| csv_error(csv_path, e))?.clone();
    let mut expected: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    expected.push("class".into());
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(
            ctx,
            format!("header {header:?} does not match {expected:?}"),
        ));
    }
    let mut points = Vec::with_capacity(manifest.n);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(csv_path, e))?;
        let at = |msg: String| Error::parse(format!("{ctx} row {}", line + 1), msg);
        let x = rec
            .iter()
            .take(dim)
            .map(|s| s.parse::<f64>().map_err(|e| at(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let class_index = rec[dim].parse::<usize>().map_err(|e| at(e.to_string()))?;
        if label_point(manifest.problem, &x)? != class_index {
            return Err(at(format!(
                "label {class_index} disagrees with the {} rule",
                manifest.problem
            )));
        }
        points.push(DataPoint { x, class_index });
    }
    if points.len() != manifest.n {
        return Err(Error::parse(
            ctx,
            format!("manifest says {} rows, found {}", manifest.n, points.len()),
        ));
    }
    Ok(Dataset {
        problem: manifest.problem,
        seed: manifest.seed,
        points,
    })
}
