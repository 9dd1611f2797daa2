//! Figure datasets and ridge metrics computed from parsed `(a, b)` counts.
//!
//! Every figure is plain data: a grid, series, bar chart or weighted scatter,
//! written as CSV with a manifest so any plotting tool can render it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::postprocess::{aggregate_k_histogram, candidate_key, merge_pairs, mod_inverse, rank_pairs, AbPair};
use crate::simulator::RidgeOrientation;

pub const DEFAULT_ANGLE_BIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureKind {
    Grid,
    Series,
    Bar,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// `cells[row][col]`
    Grid {
        cells: Vec<Vec<f64>>,
    },
    Series {
        points: Vec<(f64, f64)>,
    },
    Bar {
        bars: Vec<(String, f64)>,
    },
    /// `(x, y, weight)`
    Scatter {
        points: Vec<(f64, f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureDataset {
    pub name: String,
    pub title: String,
    /// Column names in CSV order; grids use `[row, col, value]`.
    pub axes: Vec<String>,
    pub payload: Payload,
}

impl FigureDataset {
    fn new(name: &str, title: String, axes: &[&str], payload: Payload) -> Self {
        Self { name: name.to_string(), title, axes: axes.iter().map(|s| s.to_string()).collect(), payload }
    }

    pub fn kind(&self) -> FigureKind {
        match self.payload {
            Payload::Grid { .. } => FigureKind::Grid,
            Payload::Series { .. } => FigureKind::Series,
            Payload::Bar { .. } => FigureKind::Bar,
            Payload::Scatter { .. } => FigureKind::Scatter,
        }
    }

    pub fn grid(&self) -> Option<&Vec<Vec<f64>>> {
        match &self.payload {
            Payload::Grid { cells } => Some(cells),
            _ => None,
        }
    }

    /// Sum of every value (grid cells, series y, bar heights, scatter weights).
    pub fn total(&self) -> f64 {
        match &self.payload {
            Payload::Grid { cells } => cells.iter().flatten().sum(),
            Payload::Series { points } => points.iter().map(|p| p.1).sum(),
            Payload::Bar { bars } => bars.iter().map(|b| b.1).sum(),
            Payload::Scatter { points } => points.iter().map(|p| p.2).sum(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.axes.join(",");
        out.push('\n');
        match &self.payload {
            Payload::Grid { cells } => {
                for (r, row) in cells.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        writeln!(out, "{r},{c},{v}").unwrap();
                    }
                }
            }
            Payload::Series { points } => {
                for (x, y) in points {
                    writeln!(out, "{x},{y}").unwrap();
                }
            }
            Payload::Bar { bars } => {
                for (label, v) in bars {
                    writeln!(out, "{label},{v}").unwrap();
                }
            }
            Payload::Scatter { points } => {
                for (x, y, w) in points {
                    writeln!(out, "{x},{y},{w}").unwrap();
                }
            }
        }
        out
    }
}

fn is_unit(b: u64, modulus: u64) -> bool {
    mod_inverse(b, modulus).is_ok()
}

fn zero_grid(modulus: u64) -> Vec<Vec<f64>> {
    vec![vec![0.0; modulus as usize]; modulus as usize]
}

/// Summed counts at `grid[a][b]`.
pub fn heatmap_grid(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let mut cells = zero_grid(modulus);
    for p in pairs {
        cells[p.a as usize][p.b as usize] += p.count as f64;
    }
    FigureDataset::new(
        "raw_count_heatmap",
        "Raw Count Heatmap (a vs b)".into(),
        &["a", "b", "count"],
        Payload::Grid { cells },
    )
}

/// The `N` pairs on the ridge of key `k`.
pub fn ridge_mask(k: u64, modulus: u64, orientation: RidgeOrientation) -> BTreeSet<(u64, u64)> {
    (0..modulus)
        .flat_map(|a| (0..modulus).map(move |b| (a, b)))
        .filter(|&(a, b)| orientation.holds(a, b, k, modulus))
        .collect()
}

/// `grid[a][b] = (a + k b) mod N`
pub fn residue_map(k: u64, modulus: u64) -> FigureDataset {
    let cells = (0..modulus).map(|a| (0..modulus).map(|b| ((a + k * b) % modulus) as f64).collect()).collect();
    FigureDataset::new(
        "residue_map",
        format!("Residue Map of a + {k}b mod {modulus}"),
        &["a", "b", "residue"],
        Payload::Grid { cells },
    )
}

/// `(invertible_total, noninvertible_total)`
pub fn efficiency_split(pairs: &[AbPair], modulus: u64) -> (u64, u64) {
    pairs.iter().fold(
        (0, 0),
        |(inv, non), p| {
            if is_unit(p.b, modulus) {
                (inv + p.count, non)
            } else {
                (inv, non + p.count)
            }
        },
    )
}

pub fn efficiency_figure(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let (inv, non) = efficiency_split(pairs, modulus);
    FigureDataset::new(
        "attack_efficiency",
        "ECC Attack Efficiency: Valid vs Invalid b".into(),
        &["class", "count"],
        Payload::Bar { bars: vec![("invertible_b".into(), inv as f64), ("non_invertible_b".into(), non as f64)] },
    )
}

/// Angle of `((-a) mod N, b)` reduced mod pi, binned to `bin_width` and
/// weighted by count, over pairs with invertible `b`.
pub fn ridge_angle_histogram(pairs: &[AbPair], modulus: u64, bin_width: f64) -> FigureDataset {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut bins: BTreeMap<i64, f64> = BTreeMap::new();
    for p in pairs.iter().filter(|p| is_unit(p.b, modulus)) {
        let y = ((modulus - p.a % modulus) % modulus) as f64;
        let angle = y.atan2(p.b as f64).rem_euclid(std::f64::consts::PI);
        *bins.entry((angle / bin_width).round() as i64).or_default() += p.count as f64;
    }
    let decimals = (-bin_width.log10()).ceil().max(0.0) as usize;
    let bars = bins.into_iter().map(|(bin, v)| (format!("{:.*}", decimals, bin as f64 * bin_width), v)).collect();
    FigureDataset::new(
        "ridge_angle_histogram",
        "Distribution of Phase Ridge Angles".into(),
        &["angle_rad", "count"],
        Payload::Bar { bars },
    )
}

/// Population variance of each row `a` over all `b`, absent cells as zero.
pub fn variance_per_a(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let heat = heatmap_grid(pairs, modulus);
    let cells = heat.grid().expect("heatmap is a grid");
    let points = cells
        .iter()
        .enumerate()
        .map(|(a, row)| {
            let mean = row.iter().sum::<f64>() / modulus as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / modulus as f64;
            (a as f64, var)
        })
        .collect();
    FigureDataset::new(
        "variance_per_a",
        "Noise: Variance of Count across b for fixed a".into(),
        &["a", "variance"],
        Payload::Series { points },
    )
}

/// Counts in descending order against their 0-based rank.
pub fn rank_count_series(pairs: &[AbPair]) -> FigureDataset {
    let points = rank_pairs(pairs).into_iter().enumerate().map(|(rank, p)| (rank as f64, p.count as f64)).collect();
    FigureDataset::new(
        "bitstring_rank_vs_count",
        "Bitstring Rank vs. Count".into(),
        &["rank", "count"],
        Payload::Series { points },
    )
}

pub fn k_histogram_figure(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let bars =
        aggregate_k_histogram(pairs, modulus).into_iter().enumerate().map(|(k, v)| (k.to_string(), v as f64)).collect();
    FigureDataset::new(
        "recovered_k_histogram",
        "Histogram of Recovered k Values".into(),
        &["k", "count"],
        Payload::Bar { bars },
    )
}

/// Pairs that decode to `k`, as `(b, a, count)` points.
pub fn key_locations(pairs: &[AbPair], modulus: u64, k: u64) -> FigureDataset {
    let points = merge_pairs(pairs)
        .into_iter()
        .filter(|p| candidate_key(p.a, p.b, modulus) == Some(k))
        .map(|p| (p.b as f64, p.a as f64, p.count as f64))
        .collect();
    FigureDataset::new(
        "key_locations",
        format!("Locations of (a, b) Decoding to k = {k}"),
        &["b", "a", "count"],
        Payload::Scatter { points },
    )
}

/// Counts per `b`, zero for non-units.
pub fn invertibility_mask(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let mut totals = vec![0u64; modulus as usize];
    for p in pairs.iter().filter(|p| is_unit(p.b, modulus)) {
        totals[p.b as usize] += p.count;
    }
    let bars = totals.into_iter().enumerate().map(|(b, v)| (b.to_string(), v as f64)).collect();
    FigureDataset::new(
        "invertibility_mask",
        "Invertibility Mask for b Register".into(),
        &["b", "count"],
        Payload::Bar { bars },
    )
}

/// `grid[b][b^{-1}]` weighted by count.
pub fn modular_inverse_grid(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let mut cells = zero_grid(modulus);
    for p in pairs {
        if let Ok(inv) = mod_inverse(p.b, modulus) {
            cells[p.b as usize][inv as usize] += p.count as f64;
        }
    }
    FigureDataset::new(
        "modular_inverse_frequency",
        format!("Modular Inverse Frequency Map: b vs b^-1 (mod {modulus})"),
        &["b", "b_inverse", "count"],
        Payload::Grid { cells },
    )
}

/// Counts summed by `(a + k b) mod N`.
pub fn linear_residue_bar(pairs: &[AbPair], modulus: u64, k: u64) -> FigureDataset {
    let mut totals = vec![0u64; modulus as usize];
    for p in pairs {
        totals[((p.a + k * p.b) % modulus) as usize] += p.count;
    }
    let bars = totals.into_iter().enumerate().map(|(r, v)| (r.to_string(), v as f64)).collect();
    FigureDataset::new(
        "linear_residue_map",
        format!("a + {k}\u{b7}b mod {modulus} Map"),
        &["residue", "count"],
        Payload::Bar { bars },
    )
}

/// Heatmap restricted to invertible `b`.
pub fn invertible_heatmap(pairs: &[AbPair], modulus: u64) -> FigureDataset {
    let mut cells = zero_grid(modulus);
    for p in pairs.iter().filter(|p| is_unit(p.b, modulus)) {
        cells[p.a as usize][p.b as usize] += p.count as f64;
    }
    FigureDataset::new(
        "invertible_heatmap",
        format!("Heatmap: (a, b) with Invertible b (mod {modulus})"),
        &["a", "b", "count"],
        Payload::Grid { cells },
    )
}

/// All twelve figure datasets, keyed to the key `target_k`.
pub fn all_figures(pairs: &[AbPair], modulus: u64, target_k: u64) -> Vec<FigureDataset> {
    vec![
        heatmap_grid(pairs, modulus),
        k_histogram_figure(pairs, modulus),
        rank_count_series(pairs),
        key_locations(pairs, modulus, target_k),
        invertibility_mask(pairs, modulus),
        modular_inverse_grid(pairs, modulus),
        linear_residue_bar(pairs, modulus, target_k),
        efficiency_figure(pairs, modulus),
        invertible_heatmap(pairs, modulus),
        ridge_angle_histogram(pairs, modulus, DEFAULT_ANGLE_BIN),
        residue_map(target_k, modulus),
        variance_per_a(pairs, modulus),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeMetrics {
    /// Fraction of shots on the ridge of the target key.
    pub on_ridge_mass: f64,
    pub invertible_mass: f64,
    /// Recovered keys by descending total count, ties by ascending key.
    pub top_k: Vec<(u64, u64)>,
    pub zipf_series: Vec<u64>,
}

pub fn ridge_metrics(pairs: &[AbPair], modulus: u64, k: u64, orientation: RidgeOrientation) -> RidgeMetrics {
    let total: u64 = pairs.iter().map(|p| p.count).sum();
    let mask = ridge_mask(k, modulus, orientation);
    let on_ridge: u64 = pairs.iter().filter(|p| mask.contains(&(p.a, p.b))).map(|p| p.count).sum();
    let (inv, _) = efficiency_split(pairs, modulus);
    let frac = |x: u64| if total == 0 { 0.0 } else { x as f64 / total as f64 };
    let mut top_k: Vec<(u64, u64)> = aggregate_k_histogram(pairs, modulus)
        .into_iter()
        .enumerate()
        .filter(|(_, v)| *v > 0)
        .map(|(k, v)| (k as u64, v))
        .collect();
    top_k.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    RidgeMetrics {
        on_ridge_mass: frac(on_ridge),
        invertible_mass: frac(inv),
        top_k,
        zipf_series: rank_pairs(pairs).into_iter().map(|p| p.count).collect(),
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub title: String,
    pub kind: FigureKind,
    pub file: String,
    pub axes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub source_run: String,
    pub figures: Vec<ManifestEntry>,
}

/// Writes `<dir>/<name>.csv` per figure and `<dir>/manifest.json`.
pub fn write_figures(dir: &Path, figures: &[FigureDataset], source_run: &str) -> io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(figures.len());
    for fig in figures {
        let file = format!("{}.csv", fig.name);
        fs::write(dir.join(&file), fig.to_csv())?;
        entries.push(ManifestEntry {
            name: fig.name.clone(),
            title: fig.title.clone(),
            kind: fig.kind(),
            file,
            axes: fig.axes.clone(),
        });
    }
    let manifest = Manifest { source_run: source_run.to_string(), figures: entries };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(manifest)
}
