//! Inverse problem: the axis that makes an oriented point cloud a
//! semi-helix with the narrowest angle window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::curve_frame;
use crate::error::{Error, Result};
use crate::euclid::{Direction, VecN};
use crate::linalg::{self, Mat};
use crate::surface::{ParamImmersion, SampleGrid};
use crate::Real;

/// Points with unit normals of equal count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientedPointCloud<T> {
    pub points: Vec<VecN<T>>,
    pub normals: Vec<Direction<T>>,
}

impl<T: Real> OrientedPointCloud<T> {
    /// Normals must be unit within `1e-6`; they are renormalized.
    pub fn new(points: Vec<VecN<T>>, normals: Vec<VecN<T>>) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        let n = normals.first().map_or(0, VecN::dim);
        if points.iter().chain(&normals).any(|v| v.dim() != n) {
            return Err(Error::InvalidInput("cloud has mixed dimensions".into()));
        }
        let normals = normals
            .into_iter()
            .map(|v| {
                if (v.norm() - T::one()).abs() > T::lit(1e-6) {
                    return Err(Error::InvalidInput(format!(
                        "normal of length {} is not unit",
                        v.norm()
                    )));
                }
                Direction::new(v)
            })
            .collect::<Result<_>>()?;
        Ok(Self { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.normals.first().map_or(0, Direction::dim)
    }
}

/// Seeded uniform samples of a chart with normals in the flow-circle
/// orientation for the axis `d`.
pub fn sample_cloud<T: Real>(
    m: &ParamImmersion<T>,
    d: &Direction<T>,
    count: usize,
    seed: u64,
) -> Result<OrientedPointCloud<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    while points.len() < count {
        let u: Vec<T> = m
            .domain()
            .axes()
            .iter()
            .map(|iv| {
                let s: f64 = rng.gen_range(0.0..1.0);
                let s = if iv.open { s.max(1e-9) } else { s };
                iv.lo + T::lit(s) * iv.width()
            })
            .collect();
        let frame = curve_frame(m, &u, d)?;
        points.push(frame.point);
        normals.push(frame.xi);
    }
    Ok(OrientedPointCloud { points, normals })
}

/// Cloud of all grid nodes of a chart, oriented as in [`sample_cloud`].
pub fn grid_cloud<T: Real>(
    m: &ParamImmersion<T>,
    d: &Direction<T>,
    grid: &SampleGrid,
) -> Result<OrientedPointCloud<T>> {
    let frames = grid
        .nodes(m.domain())
        .par_iter()
        .map(|u| curve_frame(m, u, d))
        .collect::<Result<Vec<_>>>()?;
    let (points, normals) = frames.into_iter().map(|f| (f.point, f.xi)).unzip();
    Ok(OrientedPointCloud { points, normals })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionFit<T> {
    /// Sign-normalized: first coordinate with magnitude above `1e-6` positive.
    pub direction: Direction<T>,
    /// Midrange of the angles `arcsin⟨d, ξ_i⟩`.
    pub theta0: T,
    /// Half-range of the angles.
    pub spread: T,
    /// Two orthogonal candidates reached the same spread within `1e-9`.
    pub ambiguous: bool,
    pub iterations: usize,
}

fn angle_range<T: Real>(d: &VecN<T>, normals: &[Direction<T>]) -> (T, T) {
    normals.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), xi| {
        let s = xi.dot(d).max(-T::one()).min(T::one()).asin();
        (lo.min(s), hi.max(s))
    })
}

fn half_range<T: Real>(d: &VecN<T>, normals: &[Direction<T>]) -> T {
    let (lo, hi) = angle_range(d, normals);
    (hi - lo) * T::half()
}

/// Pattern search on the sphere around `start` with tangent directions
/// taken from the eigenbasis, so the search commutes with rotations.
fn refine<T: Real>(start: &VecN<T>, eigvecs: &Mat<T>, normals: &[Direction<T>]) -> (VecN<T>, T, usize) {
    let n = start.dim();
    let mut d = start.clone();
    let mut best = half_range(&d, normals);
    let mut step = T::lit(0.05);
    let mut iterations = 0;
    while step > T::lit(1e-12) && iterations < 20_000 {
        iterations += 1;
        let tangents = tangent_basis(&d, eigvecs);
        let mut moves: Vec<VecN<T>> = Vec::with_capacity(2 * n * n);
        for (i, a) in tangents.iter().enumerate() {
            moves.push(a.clone());
            moves.push(a.scale(-T::one()));
            for b in &tangents[i + 1..] {
                let s = T::half().sqrt();
                moves.push((a + b).scale(s));
                moves.push((a - b).scale(s));
                moves.push((b - a).scale(s));
                moves.push((a + b).scale(-s));
            }
        }
        let mut improved = None;
        for t in &moves {
            let cand = d.scale(step.cos()).axpy(step.sin(), t);
            let cand = cand.scale(T::one() / cand.norm());
            let val = half_range(&cand, normals);
            if val < best - T::lit(1e-15) && improved.as_ref().is_none_or(|(_, v)| val < *v) {
                improved = Some((cand, val));
            }
        }
        match improved {
            Some((cand, val)) => {
                let gain = best - val;
                d = cand;
                best = val;
                if gain < T::lit(1e-10) {
                    step = step * T::half();
                } else {
                    step = step * T::lit(1.5);
                }
                step = step.min(T::lit(0.5));
            }
            None => step = step * T::half(),
        }
    }
    (d, best, iterations)
}

/// Orthonormal basis of `d^⊥` from the eigenvectors, dropping the one most
/// aligned with `d`.
fn tangent_basis<T: Real>(d: &VecN<T>, eigvecs: &Mat<T>) -> Vec<VecN<T>> {
    let n = d.dim();
    let cols: Vec<VecN<T>> = eigvecs
        .columns()
        .map(|c| VecN::new(c.to_vec()).expect("finite"))
        .collect();
    let drop = (0..n)
        .max_by(|&a, &b| {
            d.dot(&cols[a])
                .abs()
                .partial_cmp(&d.dot(&cols[b]).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let mut basis: Vec<VecN<T>> = Vec::with_capacity(n - 1);
    for (j, c) in cols.iter().enumerate() {
        if j == drop {
            continue;
        }
        let mut v = c.axpy(-c.dot(d), d);
        for _ in 0..2 {
            for b in &basis {
                v = v.axpy(-v.dot(b), b);
            }
            v = v.axpy(-v.dot(d), d);
        }
        let len = v.norm();
        if len > T::lit(1e-8) {
            basis.push(v.scale(T::one() / len));
        }
    }
    basis
}

/// Axis minimizing the half-range of `arcsin⟨d, ξ_i⟩` over the cloud.
///
/// Starts from the extreme eigenvectors of the normals' second-moment
/// matrix and refines each by a pattern search on the unit sphere.
pub fn fit_direction<T: Real>(cloud: &OrientedPointCloud<T>) -> Result<DirectionFit<T>> {
    if cloud.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "direction fit needs at least 10 samples, got {}",
            cloud.len()
        )));
    }
    let n = cloud.dim();
    if n < 2 {
        return Err(Error::InvalidInput("cloud dimension must be at least 2".into()));
    }
    let count = T::from_usize_lossy(cloud.len());
    let moment = Mat::from_fn(n, n, |i, j| {
        cloud.normals.iter().fold(T::zero(), |acc, xi| acc + xi[i] * xi[j]) / count
    });
    let (_, vecs) = linalg::symmetric_eigen(&moment);
    let column = |j: usize| VecN::new(vecs.col(j).to_vec()).expect("finite eigenvector");
    let starts = [column(0), column(n - 1)];
    let results: Vec<(VecN<T>, T, usize)> = starts.iter().map(|s| refine(s, &vecs, &cloud.normals)).collect();
    let (first, second) = (&results[0], &results[1]);
    let tie = (first.1 - second.1).abs() <= T::lit(1e-9);
    let ambiguous = tie && first.0.dot(&second.0).abs() < T::half();
    let best = if tie || first.1 <= second.1 { first } else { second };

    let direction = Direction::new(best.0.clone())?.canonical_sign(T::lit(1e-6));
    let (lo, hi) = angle_range(direction.as_vec(), &cloud.normals);
    Ok(DirectionFit {
        direction,
        theta0: (lo + hi) * T::half(),
        spread: (hi - lo) * T::half(),
        ambiguous,
        iterations: results.iter().map(|r| r.2).sum(),
    })
}
