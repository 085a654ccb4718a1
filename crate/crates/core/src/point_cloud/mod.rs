//! Particle discretization: positions, nodal volumes, boundary tags and supports.

mod kdtree;
mod support;

pub use kdtree::{brute_force_nearest, KdTree};
pub use support::{build_supports, default_neighbor_count, SupportTable, WeightKind};

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NomError, Result};

/// Tag carried by every point lying on some face of the domain box.
pub const BOUNDARY_TAG: &str = "boundary";

/// Face tag prefix for axis `k`: `x`, `y`, `z`, then `x4`, `x5`, ...
pub fn axis_name(k: usize) -> String {
    match k {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("x{}", k + 1),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    positions: Vec<f64>,
    volumes: Vec<f64>,
    tags: Vec<BTreeSet<String>>,
}

/// Axis-aligned box `[lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn measure(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

impl PointCloud {
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        volumes: Vec<f64>,
        tags: Vec<BTreeSet<String>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(NomError::InvalidArgument(
                "point cloud dimension must be >= 1".into(),
            ));
        }
        let n = volumes.len();
        if n == 0 {
            return Err(NomError::InvalidArgument("point cloud is empty".into()));
        }
        if positions.len() != n * dim {
            return Err(NomError::DimensionMismatch {
                expected: n * dim,
                got: positions.len(),
            });
        }
        if tags.len() != n {
            return Err(NomError::DimensionMismatch {
                expected: n,
                got: tags.len(),
            });
        }
        if let Some(i) = volumes.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(NomError::InvalidArgument(format!(
                "volume of point {i} must be positive"
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(NomError::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Self {
            dim,
            positions,
            volumes,
            tags,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn volume(&self, i: usize) -> f64 {
        self.volumes[i]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn tags(&self, i: usize) -> &BTreeSet<String> {
        &self.tags[i]
    }

    pub fn has_tag(&self, i: usize, tag: &str) -> bool {
        self.tags[i].contains(tag)
    }

    pub fn add_tag(&mut self, i: usize, tag: &str) {
        self.tags[i].insert(tag.to_string());
    }

    /// Indices of all points carrying `tag`, ascending.
    pub fn tagged(&self, tag: &str) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.has_tag(i, tag)).collect()
    }

    pub fn all_tags(&self) -> BTreeSet<String> {
        self.tags.iter().flat_map(|t| t.iter().cloned()).collect()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Index of the point closest to `x` (lowest index on ties).
    pub fn nearest_point(&self, x: &[f64]) -> usize {
        brute_force_nearest(self.dim, &self.positions, x, 1, None)[0]
    }

    /// Writes the plain-text format `x1 .. xd volume tag1,tag2` (`-` for no tags).
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# dim {}", self.dim)?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            for x in self.point(i) {
                write!(line, "{x:.17e} ").unwrap();
            }
            write!(line, "{:.17e} ", self.volumes[i]).unwrap();
            if self.tags[i].is_empty() {
                line.push('-');
            } else {
                line.push_str(&self.tags[i].iter().cloned().collect::<Vec<_>>().join(","));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_to`](Self::write_to). The tag
    /// column is optional; the dimension comes from a `# dim d` header if
    /// present, otherwise from the first data line.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut positions = Vec::new();
        let mut volumes = Vec::new();
        let mut tags = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some("dim") {
                    let d = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| {
                        NomError::Parse {
                            line: lineno + 1,
                            message: "malformed dim header".into(),
                        }
                    })?;
                    dim = Some(d);
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            let last_is_number = tokens
                .last()
                .map(|t| t.parse::<f64>().is_ok())
                .unwrap_or(false);
            let numeric = if last_is_number {
                tokens.len()
            } else {
                tokens.len() - 1
            };
            let d = *dim.get_or_insert(numeric.saturating_sub(1));
            if d == 0 || numeric != d + 1 {
                return Err(NomError::Parse {
                    line: lineno + 1,
                    message: format!("expected {} numeric columns, found {numeric}", d + 1),
                });
            }
            for t in &tokens[..numeric] {
                let v: f64 = t.parse().map_err(|_| NomError::Parse {
                    line: lineno + 1,
                    message: format!("not a number: {t}"),
                })?;
                positions.push(v);
            }
            volumes.push(positions.pop().unwrap());
            let mut set = BTreeSet::new();
            if !last_is_number && tokens[numeric] != "-" {
                set.extend(
                    tokens[numeric]
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(str::to_string),
                );
            }
            tags.push(set);
        }
        let dim = dim.ok_or_else(|| NomError::Parse {
            line: 0,
            message: "no points found".into(),
        })?;
        Self::new(dim, positions, volumes, tags)
    }
}

/// How lattice nodes share the box measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolumeRule {
    /// Tensor trapezoidal rule; boundary nodes get half widths and the
    /// volumes sum to the box measure.
    #[default]
    Trapezoid,
    /// Every node owns a full cell `Π Δx_k`, boundary nodes included.
    Cell,
}

impl std::str::FromStr for VolumeRule {
    type Err = NomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(VolumeRule::Trapezoid),
            "cell" => Ok(VolumeRule::Cell),
            _ => Err(NomError::Config(format!(
                "unknown volume rule '{s}' (trapezoid, cell)"
            ))),
        }
    }
}

impl std::fmt::Display for VolumeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VolumeRule::Trapezoid => "trapezoid",
            VolumeRule::Cell => "cell",
        })
    }
}

/// Regular lattice over `domain` with `counts[k]` nodes along axis `k`.
///
/// Nodal volumes follow the tensor trapezoidal rule so they sum to the box
/// measure. With `perturbation > 0`, interior nodes are shifted by independent
/// uniform offsets of at most `perturbation * Δx_k / 2` along each axis;
/// volumes keep their lattice values.
pub fn build_grid(
    domain: &BoxDomain,
    counts: &[usize],
    perturbation: f64,
    seed: u64,
) -> Result<PointCloud> {
    build_grid_with(domain, counts, perturbation, seed, VolumeRule::Trapezoid)
}

/// [`build_grid`] with a choice of nodal volumes.
pub fn build_grid_with(
    domain: &BoxDomain,
    counts: &[usize],
    perturbation: f64,
    seed: u64,
    rule: VolumeRule,
) -> Result<PointCloud> {
    let dim = domain.dim();
    if dim == 0 || counts.len() != dim || domain.hi.len() != dim {
        return Err(NomError::InvalidArgument(
            "grid counts must match the box dimension".into(),
        ));
    }
    if domain.lo.iter().zip(&domain.hi).any(|(a, b)| !(b > a)) {
        return Err(NomError::InvalidArgument("degenerate box".into()));
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(NomError::InvalidArgument(
            "need at least 2 nodes per axis".into(),
        ));
    }
    if !(0.0..1.0).contains(&perturbation) {
        return Err(NomError::InvalidArgument(format!(
            "perturbation must lie in [0, 1), got {perturbation}"
        )));
    }
    let spacing: Vec<f64> = (0..dim)
        .map(|k| (domain.hi[k] - domain.lo[k]) / (counts[k] - 1) as f64)
        .collect();
    let total: usize = counts.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(total * dim);
    let mut volumes = Vec::with_capacity(total);
    let mut tags = Vec::with_capacity(total);
    let names: Vec<String> = (0..dim).map(axis_name).collect();
    // first axis varies slowest
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut set = BTreeSet::new();
        let mut vol = 1.0;
        for k in 0..dim {
            let mut w = spacing[k];
            let edge = if idx[k] == 0 {
                set.insert(format!("{}min", names[k]));
                true
            } else if idx[k] == counts[k] - 1 {
                set.insert(format!("{}max", names[k]));
                true
            } else {
                false
            };
            if edge && rule == VolumeRule::Trapezoid {
                w *= 0.5;
            }
            vol *= w;
        }
        let interior = set.is_empty();
        if !interior {
            set.insert(BOUNDARY_TAG.to_string());
        }
        for k in 0..dim {
            let mut x = if idx[k] == counts[k] - 1 {
                domain.hi[k]
            } else {
                domain.lo[k] + idx[k] as f64 * spacing[k]
            };
            if interior && perturbation > 0.0 {
                x += perturbation * spacing[k] * 0.5 * rng.random_range(-1.0..=1.0);
            }
            positions.push(x);
        }
        volumes.push(vol);
        tags.push(set);
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    PointCloud::new(dim, positions, volumes, tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_41() {
        let cloud = build_grid(&BoxDomain::unit(2), &[41, 41], 0.0, 0).unwrap();
        assert_eq!(cloud.len(), 1681);
        assert!((cloud.point(1)[1] - 0.025).abs() < 1e-15);
        assert!((cloud.total_volume() - 1.0).abs() < 1e-12);
        assert_eq!(cloud.tagged("xmin").len(), 41);
        assert_eq!(cloud.tagged(BOUNDARY_TAG).len(), 160);
    }

    #[test]
    fn cell_volumes_are_uniform() {
        let cloud =
            build_grid_with(&BoxDomain::unit(2), &[11, 11], 0.0, 0, VolumeRule::Cell).unwrap();
        assert!(cloud.volumes().iter().all(|v| (v - 0.01).abs() < 1e-15));
        assert!((cloud.total_volume() - 1.21).abs() < 1e-12);
    }

    #[test]
    fn unit_interval_two_nodes() {
        let cloud = build_grid(&BoxDomain::unit(1), &[2], 0.0, 0).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.volumes(), &[0.5, 0.5]);
    }

    #[test]
    fn unit_cube_1331() {
        let dom = BoxDomain::new(vec![0.0; 3], vec![50.0; 3]);
        let cloud = build_grid(&dom, &[11, 11, 11], 0.0, 0).unwrap();
        assert_eq!(cloud.len(), 1331);
        assert!((cloud.total_volume() / dom.measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_grid(&BoxDomain::new(vec![0.0], vec![0.0]), &[3], 0.0, 0).is_err());
        assert!(build_grid(&BoxDomain::unit(2), &[1, 3], 0.0, 0).is_err());
        assert!(build_grid(&BoxDomain::unit(2), &[3, 3], 1.0, 0).is_err());
    }

    #[test]
    fn perturbation_moves_interior_only() {
        let a = build_grid(&BoxDomain::unit(2), &[6, 6], 0.0, 1).unwrap();
        let b = build_grid(&BoxDomain::unit(2), &[6, 6], 0.5, 1).unwrap();
        let c = build_grid(&BoxDomain::unit(2), &[6, 6], 0.5, 1).unwrap();
        assert_eq!(b, c);
        for i in 0..a.len() {
            let d: f64 = a
                .point(i)
                .iter()
                .zip(b.point(i))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if a.has_tag(i, BOUNDARY_TAG) {
                assert_eq!(d, 0.0);
            } else {
                assert!(d <= 0.5 * 0.2 * 0.5 + 1e-15);
            }
        }
        assert!((b.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let cloud = build_grid(&BoxDomain::unit(2), &[4, 3], 0.3, 9).unwrap();
        let mut buf = Vec::new();
        cloud.write_to(&mut buf).unwrap();
        let back = PointCloud::read_from(&buf[..]).unwrap();
        assert_eq!(cloud, back);
        let plain = "# comment\n0 0 0.25\n1 0 0.25 left,bottom\n";
        let c = PointCloud::read_from(plain.as_bytes()).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(c.tags(0).is_empty());
        assert!(c.has_tag(1, "left"));
        assert!(PointCloud::read_from("0 0 1\n0 1\n".as_bytes()).is_err());
    }
}
