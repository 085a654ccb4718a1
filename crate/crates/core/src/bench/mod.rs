//! Benchmark problems, error norms and convergence studies.

mod custom;
mod neo_hooke;
mod plate;
mod poisson;
mod strong;
mod von_karman;

pub use custom::CustomProblem;
pub use neo_hooke::{neo_hooke_block, BlockSetup};
pub use plate::{
    plate_series, plate_series_tail_bound, simply_supported_plate, PLATE_SERIES_TERMS,
};
pub use poisson::{poisson_exact, poisson_source, poisson_weak};
pub use strong::{ode_1d, ode_exact, poisson_2d_strong, poisson_2d_strong_exact, schrodinger_1d};
pub use von_karman::{kirchhoff_center_deflection, von_karman_plate};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{NomError, Result};
use crate::newton::NewtonState;
use crate::operators::{build_operators, OperatorOptions, OperatorSet};
use crate::point_cloud::{
    build_grid_with, build_supports, default_neighbor_count, BoxDomain, PointCloud, SupportTable,
    VolumeRule, WeightKind,
};

/// Catalog of built-in problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Ode1d,
    Schrodinger1d,
    Poisson2dStrong,
    /// Weak-form Poisson problem on the unit cube in 2 to 5 dimensions.
    PoissonWeak(usize),
    Plate,
    VonKarman,
    NeoHookeBlock,
}

impl Benchmark {
    pub const ALL: [Benchmark; 10] = [
        Benchmark::Ode1d,
        Benchmark::Schrodinger1d,
        Benchmark::Poisson2dStrong,
        Benchmark::PoissonWeak(2),
        Benchmark::PoissonWeak(3),
        Benchmark::PoissonWeak(4),
        Benchmark::PoissonWeak(5),
        Benchmark::Plate,
        Benchmark::VonKarman,
        Benchmark::NeoHookeBlock,
    ];

    pub fn name(&self) -> String {
        match self {
            Benchmark::Ode1d => "ode1d".into(),
            Benchmark::Schrodinger1d => "schrodinger1d".into(),
            Benchmark::Poisson2dStrong => "poisson2d-strong".into(),
            Benchmark::PoissonWeak(d) => format!("poisson{d}d"),
            Benchmark::Plate => "plate".into(),
            Benchmark::VonKarman => "von-karman".into(),
            Benchmark::NeoHookeBlock => "neo-hooke-block".into(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Ode1d | Benchmark::Schrodinger1d => 1,
            Benchmark::PoissonWeak(d) => *d,
            Benchmark::NeoHookeBlock => 3,
            _ => 2,
        }
    }

    /// Smallest operator order able to represent the problem.
    pub fn min_order(&self) -> usize {
        match self {
            Benchmark::PoissonWeak(_) | Benchmark::NeoHookeBlock => 1,
            _ => 2,
        }
    }

    /// Strong-form problems in one dimension default to the minimal support of `n_p` neighbors.
    pub fn is_strong_form(&self) -> bool {
        matches!(
            self,
            Benchmark::Ode1d | Benchmark::Schrodinger1d | Benchmark::Poisson2dStrong
        )
    }

    pub fn default_config(&self) -> BenchConfig {
        let base = BenchConfig::default();
        match self {
            Benchmark::Ode1d => BenchConfig {
                nodes: 41,
                order: 2,
                ..base
            },
            Benchmark::Schrodinger1d => BenchConfig {
                nodes: 401,
                order: 4,
                ..base
            },
            Benchmark::Poisson2dStrong => BenchConfig {
                nodes: 21,
                order: 2,
                weight: WeightKind::Gaussian,
                ..base
            },
            Benchmark::PoissonWeak(d) => BenchConfig {
                nodes: match d {
                    2 => 41,
                    3 => 22,
                    4 => 11,
                    _ => 6,
                },
                order: if *d == 2 { 2 } else { 1 },
                phg: 1.0,
                weight: WeightKind::Gaussian,
                volumes: VolumeRule::Cell,
                ..base
            },
            Benchmark::Plate => BenchConfig {
                nodes: 40,
                order: 2,
                weight: WeightKind::Gaussian,
                ..base
            },
            Benchmark::VonKarman => BenchConfig {
                nodes: 50,
                order: 2,
                weight: WeightKind::Gaussian,
                load_steps: 10,
                ..base
            },
            Benchmark::NeoHookeBlock => BenchConfig {
                nodes: 11,
                order: 1,
                phg: 1.0,
                weight: WeightKind::Gaussian,
                load_steps: 10,
                volumes: VolumeRule::Cell,
                ..base
            },
        }
    }

    pub fn run(&self, config: &BenchConfig) -> Result<BenchOutcome> {
        config.validate(self)?;
        match self {
            Benchmark::Ode1d => ode_1d(config),
            Benchmark::Schrodinger1d => schrodinger_1d(config),
            Benchmark::Poisson2dStrong => poisson_2d_strong(config),
            Benchmark::PoissonWeak(d) => poisson_weak(*d, config),
            Benchmark::Plate => simply_supported_plate(config),
            Benchmark::VonKarman => von_karman_plate(config),
            Benchmark::NeoHookeBlock => neo_hooke_block(config),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Benchmark {
    type Err = NomError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Benchmark::ALL
            .iter()
            .find(|b| b.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<String> = Benchmark::ALL.iter().map(|b| b.name()).collect();
                NomError::Config(format!(
                    "unknown benchmark '{s}' (known: {})",
                    names.join(", ")
                ))
            })
    }
}

/// Discretization and solver settings of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Nodes per axis.
    pub nodes: usize,
    pub order: usize,
    pub phg: f64,
    pub weight: WeightKind,
    /// Support size; `None` picks the benchmark default.
    pub neighbors: Option<usize>,
    /// Absolute penalty factor; `None` uses `1e6 ×` mean stiffness diagonal.
    pub penalty: Option<f64>,
    pub seed: u64,
    /// Interior node jitter as a fraction of the spacing.
    pub perturb: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub load_steps: usize,
    pub volumes: VolumeRule,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            nodes: 21,
            order: 2,
            phg: 0.0,
            weight: WeightKind::Constant,
            neighbors: None,
            penalty: None,
            seed: 0,
            perturb: 0.0,
            tol: 1e-8,
            max_iter: 25,
            load_steps: 1,
            volumes: VolumeRule::Trapezoid,
        }
    }
}

impl BenchConfig {
    /// Rejects settings the benchmark cannot run with.
    pub fn validate(&self, bench: &Benchmark) -> Result<()> {
        if self.order < bench.min_order() {
            return Err(NomError::Config(format!(
                "{bench} needs operator order ≥ {}, got {}",
                bench.min_order(),
                self.order
            )));
        }
        let k = self.neighbor_count(bench)?;
        let np = crate::multi_index::count_indexes(bench.dim(), self.order)?;
        if k < np {
            return Err(NomError::Config(format!(
                "{k} neighbors cannot resolve {np} derivative terms (need n_i ≥ n_p)"
            )));
        }
        if self.nodes < 2 {
            return Err(NomError::Config(format!(
                "{} nodes per axis is too coarse for {bench}",
                self.nodes
            )));
        }
        let total = (self.nodes as f64).powi(bench.dim() as i32);
        if total <= k as f64 {
            return Err(NomError::Config(format!(
                "{} nodes per axis give {total} points, fewer than a support of {k}",
                self.nodes
            )));
        }
        if !(self.phg >= 0.0) {
            return Err(NomError::Config(format!(
                "p_hg must be non-negative, got {}",
                self.phg
            )));
        }
        if !(0.0..1.0).contains(&self.perturb) {
            return Err(NomError::Config(format!(
                "perturbation must lie in [0, 1), got {}",
                self.perturb
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 || self.load_steps == 0 {
            return Err(NomError::Config(
                "tolerance, iteration cap and load steps must be positive".into(),
            ));
        }
        if let Some(p) = self.penalty {
            if !(p > 0.0) {
                return Err(NomError::Config(format!(
                    "penalty must be positive, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Lattice over `domain` with `nodes` points per axis.
    pub fn grid(&self, domain: &BoxDomain) -> Result<PointCloud> {
        build_grid_with(
            domain,
            &vec![self.nodes; domain.dim()],
            self.perturb,
            self.seed,
            self.volumes,
        )
    }

    pub fn neighbor_count(&self, bench: &Benchmark) -> Result<usize> {
        if let Some(k) = self.neighbors {
            return Ok(k);
        }
        if bench.is_strong_form() && bench.dim() == 1 {
            crate::multi_index::count_indexes(bench.dim(), self.order)
        } else {
            default_neighbor_count(bench.dim(), self.order)
        }
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub n_nodes: usize,
    pub dx: f64,
    pub l2: Option<f64>,
    /// `u_max / u_max^exact - 1`.
    pub max_ratio_error: Option<f64>,
    pub p: usize,
    pub p_hg: f64,
    pub runtime_s: f64,
}

pub const CSV_HEADER: &str = "nnode,dx,l2,umax_ratio_err,p,phg,runtime_s";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}"))
        .unwrap_or_else(|| "nan".into())
}

impl ErrorReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6e},{},{},{},{},{:.3}",
            self.n_nodes,
            self.dx,
            opt(self.l2),
            opt(self.max_ratio_error),
            self.p,
            self.p_hg,
            self.runtime_s
        )
    }
}

/// Writes reports as CSV with [`CSV_HEADER`].
pub fn write_csv<W: Write>(mut out: W, reports: &[ErrorReport]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Everything a benchmark run produces.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: ErrorReport,
    pub cloud: PointCloud,
    pub field_names: Vec<String>,
    /// One vector per field, indexed by point.
    pub fields: Vec<Vec<f64>>,
    pub newton_log: Vec<NewtonState>,
    /// Named scalar results (eigenvalue, center deflection, ...).
    pub quantities: Vec<(String, f64)>,
    /// `(load factor, response)` pairs for load-stepped problems.
    pub load_curve: Vec<(f64, f64)>,
}

impl BenchOutcome {
    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Writes `x1..xd value1..valuek` per point.
    pub fn write_fields<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.cloud.dim();
        let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        header.extend(self.field_names.iter().cloned());
        writeln!(out, "# {}", header.join(" "))?;
        for i in 0..self.cloud.len() {
            let mut parts: Vec<String> = self
                .cloud
                .point(i)
                .iter()
                .map(|v| format!("{v:.10e}"))
                .collect();
            parts.extend(self.fields.iter().map(|f| format!("{:.10e}", f[i])));
            writeln!(out, "{}", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Volume-weighted relative L2 error `sqrt(Σ (u-u*)² ΔV / Σ u*² ΔV)`.
pub fn l2_norm(u: &[f64], exact: &[f64], volumes: &[f64]) -> Result<f64> {
    if u.len() != exact.len() || u.len() != volumes.len() {
        return Err(NomError::DimensionMismatch {
            expected: exact.len(),
            got: u.len().min(volumes.len()),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, b), v) in u.iter().zip(exact).zip(volumes) {
        num += (a - b) * (a - b) * v;
        den += b * b * v;
    }
    if den == 0.0 {
        return Err(NomError::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// `u_max / u_max^exact - 1`, with `u_max` the nodal value of largest magnitude.
pub fn max_ratio_error(u: &[f64], exact: &[f64]) -> Result<f64> {
    let pick = |v: &[f64]| {
        v.iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m })
    };
    let e = pick(exact);
    if e == 0.0 {
        return Err(NomError::ZeroReference);
    }
    Ok(pick(u) / e - 1.0)
}

/// Least-squares slope of `log(l2)` against `log(dx)`; `None` with fewer than two usable points.
pub fn fit_slope(reports: &[ErrorReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|r| match r.l2 {
            Some(l) if l > 0.0 && r.dx > 0.0 => Some((r.dx.ln(), l.ln())),
            _ => None,
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Result of a ladder: one entry per configuration, failures kept in place.
#[derive(Debug)]
pub struct Convergence {
    pub entries: Vec<Result<BenchOutcome>>,
    pub slope: Option<f64>,
}

impl Convergence {
    pub fn reports(&self) -> Vec<ErrorReport> {
        self.entries
            .iter()
            .filter_map(|e| e.as_ref().ok())
            .map(|o| o.report.clone())
            .collect()
    }
}

/// Runs every ladder entry in order and fits the convergence rate of the successful ones.
pub fn run_convergence(bench: Benchmark, ladder: &[BenchConfig]) -> Result<Convergence> {
    if ladder.is_empty() {
        return Err(NomError::Config("empty ladder".into()));
    }
    let entries: Vec<Result<BenchOutcome>> = ladder.iter().map(|c| bench.run(c)).collect();
    let mut conv = Convergence {
        entries,
        slope: None,
    };
    conv.slope = fit_slope(&conv.reports());
    Ok(conv)
}

/// Supports and operators of a cloud.
pub(crate) fn discretize(
    cloud: &PointCloud,
    k: usize,
    weight: WeightKind,
    order: usize,
    stabilization: bool,
) -> Result<(SupportTable, OperatorSet)> {
    let supports = build_supports(cloud, k, weight)?;
    let ops = build_operators(
        cloud,
        &supports,
        &OperatorOptions::new(order).with_stabilization(stabilization),
    )?;
    Ok((supports, ops))
}

pub(crate) fn report(
    cloud: &PointCloud,
    dx: f64,
    config: &BenchConfig,
    u: &[f64],
    exact: Option<&[f64]>,
) -> Result<ErrorReport> {
    let (l2, ratio) = match exact {
        Some(e) => (
            Some(l2_norm(u, e, cloud.volumes())?),
            Some(max_ratio_error(u, e)?),
        ),
        None => (None, None),
    };
    Ok(ErrorReport {
        n_nodes: cloud.len(),
        dx,
        l2,
        max_ratio_error: ratio,
        p: config.order,
        p_hg: config.phg,
        runtime_s: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_examples() {
        let v = [1.0, 2.0, 3.0];
        let e = [0.5, -1.0, 2.0];
        assert_eq!(l2_norm(&e, &e, &v).unwrap(), 0.0);
        let twice: Vec<f64> = e.iter().map(|x| 2.0 * x).collect();
        assert!((l2_norm(&twice, &e, &v).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            l2_norm(&e, &[0.0; 3], &v),
            Err(NomError::ZeroReference)
        ));
    }

    #[test]
    fn ratio_uses_signed_extreme() {
        assert!((max_ratio_error(&[-2.2, 1.0], &[-2.0, 1.0]).unwrap() - 0.1).abs() < 1e-15);
    }

    fn row(dx: f64, l2: f64) -> ErrorReport {
        ErrorReport {
            n_nodes: 0,
            dx,
            l2: Some(l2),
            max_ratio_error: None,
            p: 1,
            p_hg: 0.0,
            runtime_s: 0.0,
        }
    }

    #[test]
    fn slope_fit() {
        let rows: Vec<ErrorReport> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| row(h, 3.0 * h * h))
            .collect();
        assert!((fit_slope(&rows).unwrap() - 2.0).abs() < 1e-12);
        // unit change of dx leaves the slope alone
        let scaled: Vec<ErrorReport> = rows
            .iter()
            .map(|r| row(r.dx * 1000.0, r.l2.unwrap()))
            .collect();
        assert!((fit_slope(&scaled).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&rows[..1]), None);
    }

    #[test]
    fn names_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!(matches!(
            "heat".parse::<Benchmark>(),
            Err(NomError::Config(_))
        ));
    }

    #[test]
    fn csv_format() {
        let mut out = Vec::new();
        write_csv(&mut out, &[row(0.025, 0.0262)]).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(
            s,
            "nnode,dx,l2,umax_ratio_err,p,phg,runtime_s\n0,2.500000e-2,2.620000e-2,nan,1,0,0.000\n"
        );
    }
}
