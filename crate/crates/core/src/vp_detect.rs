//! Vanishing point detection on the Gaussian sphere.
//!
//! Every pair of image segments defines a candidate vanishing direction: the
//! intersection of their great circles. Candidates vote into a 1° polar grid
//! over the upper hemisphere with weight `len0 * len1 * sin(2θ)`, where `θ` is
//! the image angle between the segments. The strongest cell fixes the first
//! direction; the second is searched over 360 candidates on the great circle
//! orthogonal to it, and the third completes the right-handed triplet.

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{canonical_hemisphere, CameraIntrinsics, LineObservation};
use crate::scalar::Real;

pub const LAT_CELLS: usize = 90;
pub const LON_CELLS: usize = 360;

/// Latitude × longitude accumulator over the upper Gaussian hemisphere,
/// one degree per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid<T: Real> {
    cells: Vec<T>,
}

impl<T: Real> Default for PolarGrid<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> PolarGrid<T> {
    pub fn new() -> Self {
        Self {
            cells: vec![T::zero(); LAT_CELLS * LON_CELLS],
        }
    }

    #[inline]
    pub fn get(&self, lat: usize, lon: usize) -> T {
        self.cells[lat * LON_CELLS + lon]
    }

    /// Adds a non-negative score to a cell; negative scores are ignored.
    #[inline]
    pub fn add(&mut self, lat: usize, lon: usize, score: T) {
        if score > T::zero() {
            self.cells[lat * LON_CELLS + lon] += score;
        }
    }

    /// Score of the cell containing a direction (any hemisphere).
    ///
    /// In the equatorial row the hemisphere seam splits a line direction
    /// between longitudes `lon` and `lon + 180`; both are looked up and the
    /// larger score is returned.
    pub fn score_of(&self, v: &Vector3<T>) -> T {
        let (lat, lon) = polar_cell(&canonical_hemisphere(*v));
        let own = self.get(lat, lon);
        if lat == 0 {
            own.max(self.get(0, (lon + LON_CELLS / 2) % LON_CELLS))
        } else {
            own
        }
    }

    /// Cell-wise sum.
    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += *b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| *c <= T::zero())
    }

    /// The maximum cell as `(lat, lon, score)`; the first in row-major order
    /// wins ties.
    pub fn max_cell(&self) -> (usize, usize, T) {
        let mut best = (0, T::zero());
        for (i, c) in self.cells.iter().enumerate() {
            if *c > best.1 {
                best = (i, *c);
            }
        }
        (best.0 / LON_CELLS, best.0 % LON_CELLS, best.1)
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn nonzero_cells(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > T::zero())
            .map(|(i, c)| (i / LON_CELLS, i % LON_CELLS, *c))
    }
}

/// Unit direction through the center of a grid cell.
pub fn cell_center<T: Real>(lat: usize, lon: usize) -> Vector3<T> {
    let lat = T::lit((lat as f64 + 0.5).to_radians());
    let lon = T::lit((lon as f64 + 0.5).to_radians());
    Vector3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

/// Grid cell of a hemisphere-canonical unit direction.
pub fn polar_cell<T: Real>(v: &Vector3<T>) -> (usize, usize) {
    let z = v.z.as_f64().clamp(-1.0, 1.0);
    let lat = z
        .asin()
        .to_degrees()
        .floor()
        .clamp(0.0, (LAT_CELLS - 1) as f64) as usize;
    let lon =
        v.y.as_f64()
            .atan2(v.x.as_f64())
            .rem_euclid(std::f64::consts::TAU)
            .to_degrees()
            .floor();
    let lon = (lon.max(0.0) as usize) % LON_CELLS;
    (lat, lon)
}

/// Intersection of two great circles, canonicalized to the upper hemisphere.
pub fn pair_vp_candidate<T: Real>(s1: &Vector3<T>, s2: &Vector3<T>) -> Result<Vector3<T>> {
    let v = s1.cross(s2);
    let n = v.norm();
    if n <= T::lit(1e-9) {
        return Err(Error::CoplanarNormals);
    }
    Ok(canonical_hemisphere(v / n))
}

/// Vote weight of a segment pair: `len0 * len1 * sin(2θ)`, clamped at zero.
pub fn pair_score<T: Real>(len0: T, len1: T, theta: T) -> T {
    (len0 * len1 * (theta + theta).sin()).max(T::zero())
}

/// Acute angle in `[0, π/2]` between two image directions.
pub fn acute_angle<T: Real>(a: &Vector2<T>, b: &Vector2<T>) -> T {
    let cross = (a.x * b.y - a.y * b.x).abs();
    let dot = a.dot(b).abs();
    cross.atan2(dot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VpConfig {
    /// Segments shorter than this (pixels) do not vote.
    pub min_segment_length: f64,
    /// Maximum number of segment pairs; larger sets are subsampled.
    pub pair_cap: usize,
    pub seed: u64,
    /// Clustering tolerance in radians.
    pub cluster_tolerance: f64,
}

impl Default for VpConfig {
    fn default() -> Self {
        Self {
            min_segment_length: 15.0,
            pair_cap: 20_000,
            seed: 0,
            cluster_tolerance: 1.5f64.to_radians(),
        }
    }
}

/// Pair `(i, j)`, `i < j`, at position `idx` of the row-major upper triangle.
fn pair_from_index(idx: usize, n: usize) -> (usize, usize) {
    // Row i starts at i*n - i*(i+1)/2.
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if row_start(mid, n) <= idx {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = if row_start(hi, n) <= idx && hi < n - 1 {
        hi
    } else {
        lo
    };
    let j = i + 1 + (idx - row_start(i, n));
    (i, j)
}

fn row_start(i: usize, n: usize) -> usize {
    i * n - i * (i + 1) / 2
}

/// The pairs voted on: all of them, or a seeded uniform subset of exactly
/// `pair_cap` pairs.
pub fn select_pairs(n: usize, pair_cap: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    if total <= pair_cap {
        let mut pairs = Vec::with_capacity(total);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
        return pairs;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, total, pair_cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| pair_from_index(k, n)).collect()
}

/// Adds the votes of the given pairs into `grid`.
pub fn accumulate_pairs<T: Real>(
    grid: &mut PolarGrid<T>,
    lines: &[LineObservation<T>],
    pairs: &[(usize, usize)],
) {
    for &(i, j) in pairs {
        let (a, b) = (&lines[i], &lines[j]);
        let theta = acute_angle(&a.direction(), &b.direction());
        let score = pair_score(a.length, b.length, theta);
        if score <= T::zero() {
            continue;
        }
        if let Ok(v) = pair_vp_candidate(&a.s, &b.s) {
            let (lat, lon) = polar_cell(&v);
            grid.add(lat, lon, score);
        }
    }
}

/// Builds the polar-grid accumulator over all segment pairs (or a seeded
/// subset of `pair_cap` of them).
pub fn build_accumulator<T: Real>(
    lines: &[LineObservation<T>],
    pair_cap: usize,
    seed: u64,
) -> Result<PolarGrid<T>> {
    if lines.len() < 2 {
        return Err(Error::InsufficientLines {
            needed: 2,
            got: lines.len(),
        });
    }
    let pairs = select_pairs(lines.len(), pair_cap, seed);
    let mut grid = PolarGrid::new();
    accumulate_pairs(&mut grid, lines, &pairs);
    Ok(grid)
}

/// Three mutually orthogonal vanishing directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingPointSet<T: Real> {
    /// Unit directions in camera coordinates, hemisphere-canonical.
    pub directions: [Vector3<T>; 3],
    pub total_score: T,
    /// Homogeneous image vanishing points, `K δ`.
    pub pixel_vps: [Vector3<T>; 3],
}

impl<T: Real> VanishingPointSet<T> {
    pub fn from_directions(
        directions: [Vector3<T>; 3],
        total_score: T,
        k: &CameraIntrinsics<T>,
    ) -> Self {
        let km = k.matrix();
        Self {
            directions,
            total_score,
            pixel_vps: directions.map(|d| km * d),
        }
    }
}

/// Unit basis `(u, w)` of the plane orthogonal to `v`.
fn orthogonal_basis<T: Real>(v: &Vector3<T>) -> (Vector3<T>, Vector3<T>) {
    let i = v.iamin();
    let mut e = Vector3::zeros();
    e[i] = T::one();
    let u = v.cross(&e).normalize();
    let w = v.cross(&u);
    (u, w)
}

/// Exhaustive orthogonal-triplet search over the accumulator.
///
/// Returns the directions in camera coordinates together with the pixel
/// vanishing points for `k`.
pub fn search_orthogonal_triplet<T: Real>(
    grid: &PolarGrid<T>,
    k: &CameraIntrinsics<T>,
) -> Result<VanishingPointSet<T>> {
    let (lat, lon, s1) = grid.max_cell();
    if s1 <= T::zero() {
        return Err(Error::EmptyGrid);
    }
    let v1: Vector3<T> = cell_center(lat, lon);
    let (u, w) = orthogonal_basis(&v1);

    let mut best: Option<(T, usize, Vector3<T>)> = None;
    for step in 0..360 {
        let phi = T::lit((step as f64).to_radians());
        let v2 = canonical_hemisphere(u * phi.cos() + w * phi.sin());
        let v3 = canonical_hemisphere(v1.cross(&v2));
        let (_, lon2) = polar_cell(&v2);
        let score = s1 + grid.score_of(&v2) + grid.score_of(&v3);
        let better = match &best {
            None => true,
            Some((bs, blon, _)) => score > *bs || (score == *bs && lon2 < *blon),
        };
        if better {
            best = Some((score, lon2, v2));
        }
    }
    let (total, _, v2) = best.expect("360 candidates evaluated");

    let d1 = v1;
    let d2 = (v2 - d1 * d1.dot(&v2)).normalize();
    let d3 = d1.cross(&d2);
    let directions = [d1, d2, d3].map(canonical_hemisphere);
    Ok(VanishingPointSet::from_directions(directions, total, k))
}

/// Filters short segments, accumulates and searches.
pub fn estimate_vps<T: Real>(
    lines: &[LineObservation<T>],
    k: &CameraIntrinsics<T>,
    config: &VpConfig,
) -> Result<VanishingPointSet<T>> {
    let min_len = T::lit(config.min_segment_length);
    let kept: Vec<_> = lines
        .iter()
        .filter(|l| l.length >= min_len)
        .copied()
        .collect();
    let grid = build_accumulator(&kept, config.pair_cap, config.seed)?;
    search_orthogonal_triplet(&grid, k)
}

/// Per-line vanishing direction assignment; `None` means unassigned.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterLabels(pub Vec<Option<usize>>);

impl ClusterLabels {
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for k in self.0.iter().flatten() {
            c[*k] += 1;
        }
        c
    }

    /// Indices of lines labeled `axis`.
    pub fn members(&self, axis: usize) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(move |(_, l)| **l == Some(axis))
            .map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Assigns each line to the direction its great circle passes closest to,
/// provided `|s · δ| <= sin(tau)`.
pub fn cluster_lines<T: Real>(
    lines: &[LineObservation<T>],
    directions: &[Vector3<T>],
    tau: T,
) -> ClusterLabels {
    let limit = tau.sin();
    let labels = lines
        .iter()
        .map(|line| {
            let mut best: Option<(usize, T)> = None;
            for (k, d) in directions.iter().enumerate() {
                let r = line.s.dot(d).abs();
                if best.is_none_or(|(_, b)| r < b) {
                    best = Some((k, r));
                }
            }
            best.filter(|(_, r)| *r <= limit).map(|(k, _)| k)
        })
        .collect();
    ClusterLabels(labels)
}
