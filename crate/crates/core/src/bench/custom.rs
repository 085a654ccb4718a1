use std::io::BufRead;
use std::path::{Path, PathBuf};

use super::{BenchConfig, BenchOutcome, ErrorReport};
use crate::assembly::{assemble_strong, Constraint, StrongTerm};
use crate::error::{NomError, Result};
use crate::operators::{build_operators_where, OperatorOptions};
use crate::point_cloud::{build_supports, default_neighbor_count, PointCloud, WeightKind};
use crate::sparse::solve_linear;

/// A linear constant-coefficient PDE `Σ c_α ∂^α u = s` on a user point cloud,
/// solved by collocation with constant Dirichlet values on tagged points.
///
/// File format, one `key = value` per line, `#` comments:
///
/// ```text
/// cloud = square.pts        # relative to the problem file
/// order = 2
/// term = 2,0 1.0            # multi-index, coefficient (repeatable)
/// term = 0,2 1.0
/// source = -2.0
/// dirichlet = boundary 0.0  # tag, value (repeatable)
/// neighbors = 15            # optional
/// weight = gauss            # optional
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CustomProblem {
    pub cloud_path: PathBuf,
    pub order: usize,
    pub terms: Vec<StrongTerm>,
    pub source: f64,
    pub dirichlet: Vec<(String, f64)>,
    pub neighbors: Option<usize>,
    pub weight: WeightKind,
}

fn parse_err(line: usize, message: impl Into<String>) -> NomError {
    NomError::Parse {
        line,
        message: message.into(),
    }
}

impl CustomProblem {
    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(std::io::BufReader::new(file), base)
    }

    /// Parses a problem description; relative cloud paths resolve against `base`.
    pub fn parse<R: BufRead>(input: R, base: &Path) -> Result<Self> {
        let mut cloud = None;
        let mut order = None;
        let mut terms = Vec::new();
        let mut source = 0.0;
        let mut dirichlet = Vec::new();
        let mut neighbors = None;
        let mut weight = WeightKind::Constant;
        for (idx, line) in input.lines().enumerate() {
            let n = idx + 1;
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(n, "expected key = value"))?;
            let value = value.trim();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(n, format!("not a number: '{s}'")))
            };
            match key.trim() {
                "cloud" => cloud = Some(base.join(value)),
                "order" => {
                    order = Some(
                        value
                            .parse()
                            .map_err(|_| parse_err(n, "order must be a positive integer"))?,
                    )
                }
                "source" => source = num(value)?,
                "neighbors" => {
                    neighbors = Some(
                        value
                            .parse()
                            .map_err(|_| parse_err(n, "neighbors must be an integer"))?,
                    )
                }
                "weight" => weight = value.parse()?,
                "term" => {
                    let (idx_s, coef) = value.split_once(char::is_whitespace).ok_or_else(|| {
                        parse_err(n, "term needs a multi-index and a coefficient")
                    })?;
                    let index = idx_s
                        .split(',')
                        .map(|t| t.trim().parse::<u32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| parse_err(n, format!("bad multi-index '{idx_s}'")))?;
                    terms.push(StrongTerm {
                        index,
                        coefficient: num(coef.trim())?,
                    });
                }
                "dirichlet" => {
                    let (tag, v) = value
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| parse_err(n, "dirichlet needs a tag and a value"))?;
                    dirichlet.push((tag.to_string(), num(v.trim())?));
                }
                other => return Err(parse_err(n, format!("unknown key '{other}'"))),
            }
        }
        let cloud_path =
            cloud.ok_or_else(|| NomError::Config("problem file has no 'cloud' entry".into()))?;
        let order: usize =
            order.ok_or_else(|| NomError::Config("problem file has no 'order' entry".into()))?;
        if order == 0 {
            return Err(NomError::Config("order must be at least 1".into()));
        }
        if terms.is_empty() {
            return Err(NomError::Config(
                "problem file has no 'term' entries".into(),
            ));
        }
        for t in &terms {
            let total: u32 = t.index.iter().sum();
            if total as usize > order {
                return Err(NomError::Config(format!(
                    "term {:?} needs order {total}, operator order is {order}",
                    t.index
                )));
            }
        }
        Ok(Self {
            cloud_path,
            order,
            terms,
            source,
            dirichlet,
            neighbors,
            weight,
        })
    }

    pub fn load_cloud(&self) -> Result<PointCloud> {
        let file = std::fs::File::open(&self.cloud_path)?;
        PointCloud::read_from(std::io::BufReader::new(file))
    }

    pub fn neighbor_count(&self, dim: usize) -> Result<usize> {
        match self.neighbors {
            Some(k) => Ok(k),
            None => default_neighbor_count(dim, self.order),
        }
    }

    /// Tags named by Dirichlet entries that no point carries.
    pub fn missing_tags(&self, cloud: &PointCloud) -> Vec<String> {
        let all = cloud.all_tags();
        self.dirichlet
            .iter()
            .filter(|(t, _)| !all.contains(t))
            .map(|(t, _)| t.clone())
            .collect()
    }

    pub fn solve(&self, config: &BenchConfig) -> Result<BenchOutcome> {
        let cloud = self.load_cloud()?;
        let dim = cloud.dim();
        if let Some(t) = self.terms.iter().find(|t| t.index.len() != dim) {
            return Err(NomError::Config(format!(
                "term {:?} does not match cloud dimension {dim}",
                t.index
            )));
        }
        let missing = self.missing_tags(&cloud);
        if !missing.is_empty() {
            return Err(NomError::Config(format!(
                "no points carry tag(s): {}",
                missing.join(", ")
            )));
        }
        let mut constraints = Vec::new();
        let mut fixed = vec![false; cloud.len()];
        for (tag, value) in &self.dirichlet {
            for i in cloud.tagged(tag) {
                if !fixed[i] {
                    fixed[i] = true;
                    constraints.push(Constraint {
                        dof: i,
                        value: *value,
                    });
                }
            }
        }
        let k = self.neighbor_count(dim)?;
        let supports = build_supports(&cloud, k, self.weight)?;
        let ops =
            build_operators_where(&cloud, &supports, &OperatorOptions::new(self.order), |i| {
                !fixed[i]
            })?;
        let s = self.source;
        let sys = assemble_strong(&cloud, &ops, &self.terms, None, &|_| s, &constraints)?;
        let u = solve_linear(&sys.matrix, &sys.rhs)?;
        let dx = (0..cloud.len()).map(|i| supports.h(i)).sum::<f64>() / cloud.len() as f64;
        Ok(BenchOutcome {
            report: ErrorReport {
                n_nodes: cloud.len(),
                dx,
                l2: None,
                max_ratio_error: None,
                p: self.order,
                p_hg: config.phg,
                runtime_s: 0.0,
            },
            cloud,
            field_names: vec!["u".into()],
            fields: vec![u],
            newton_log: Vec::new(),
            quantities: vec![("min_rcond".into(), ops.min_rcond())],
            load_curve: Vec::new(),
        })
    }
}
