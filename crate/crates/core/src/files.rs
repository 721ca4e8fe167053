//! JSON file formats for observations, costs, reports and estimates.
//!
//! Every exact number travels as a canonical rational string (`"p/q"` or an
//! integer); decimal strings are accepted on input and converted exactly.
//! Noisy estimation output uses plain JSON numbers, since those quantities
//! are floating point to begin with.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimate::EstimateReport;
use crate::rational::{parse_rational, render_rational, Rational};
use crate::types::{
    AmbiguityClass, CoordRange, CostClass, IdentifiabilityReport, MarginalPair, Matrix,
    ObservationRecord, ObservationSet, PotentialPair, Verdict,
};

pub const OBSERVATION_FILE_VERSION: u32 = 1;

fn parse_vec(values: &[String], what: &str) -> Result<Vec<Rational>, Error> {
    values
        .iter()
        .map(|s| {
            parse_rational(s).map_err(|e| Error::InvalidObservations(format!("{what}: {e}")))
        })
        .collect()
}

fn render_vec(values: &[Rational]) -> Vec<String> {
    values.iter().map(render_rational).collect()
}

fn parse_matrix(rows: &[Vec<String>], what: &str) -> Result<Matrix, Error> {
    let parsed: Result<Vec<Vec<Rational>>, Error> = rows
        .iter()
        .map(|row| parse_vec(row, what))
        .collect();
    Matrix::from_rows(parsed?)
}

fn render_matrix(m: &Matrix) -> Vec<Vec<String>> {
    (0..m.nrows()).map(|i| render_vec(m.row(i))).collect()
}

/// Cost class tag; unit classes serialize as bare strings, the box class as
/// `{"box": "C0"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CostClassFile {
    General,
    Monge,
    Sym0,
    Box(String),
}

impl CostClassFile {
    pub fn to_class(&self) -> Result<CostClass, Error> {
        Ok(match self {
            CostClassFile::General => CostClass::General,
            CostClassFile::Monge => CostClass::Monge,
            CostClassFile::Sym0 => CostClass::Sym0,
            CostClassFile::Box(bound) => CostClass::Box(
                parse_rational(bound)
                    .map_err(|e| Error::InvalidObservations(format!("box bound: {e}")))?,
            ),
        })
    }

    pub fn from_class(class: &CostClass) -> Self {
        match class {
            CostClass::General => CostClassFile::General,
            CostClass::Monge => CostClassFile::Monge,
            CostClass::Sym0 => CostClassFile::Sym0,
            CostClass::Box(bound) => CostClassFile::Box(render_rational(bound)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordFile {
    pub mu: Vec<String>,
    pub nu: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservationFile {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub cost_class: CostClassFile,
    pub records: Vec<RecordFile>,
}

impl ObservationFile {
    pub fn to_set(&self) -> Result<ObservationSet, Error> {
        let mut records = Vec::with_capacity(self.records.len());
        for (k, rec) in self.records.iter().enumerate() {
            let label = format!("record {k}");
            let mu = parse_vec(&rec.mu, &label)?;
            let nu = parse_vec(&rec.nu, &label)?;
            let alpha = rec
                .alpha
                .as_ref()
                .map(|a| {
                    parse_rational(a)
                        .map_err(|e| Error::InvalidObservations(format!("{label}: {e}")))
                })
                .transpose()?;
            let plan = rec
                .plan
                .as_ref()
                .map(|p| parse_matrix(p, &label))
                .transpose()?;
            let potentials = match (&rec.f, &rec.g) {
                (Some(f), Some(g)) => Some(PotentialPair {
                    f: parse_vec(f, &label)?,
                    g: parse_vec(g, &label)?,
                }),
                (None, None) => None,
                _ => {
                    return Err(Error::InvalidObservations(format!(
                        "{label}: potentials need both f and g"
                    )))
                }
            };
            records.push(ObservationRecord {
                marginals: MarginalPair::new(mu, nu),
                alpha,
                plan,
                potentials,
            });
        }
        Ok(ObservationSet {
            records,
            cost_class: self.cost_class.to_class()?,
        })
    }

    pub fn from_set(obs: &ObservationSet) -> Self {
        let (n, m) = obs
            .records
            .first()
            .map(|r| (r.marginals.n(), r.marginals.m()))
            .unwrap_or((0, 0));
        ObservationFile {
            version: OBSERVATION_FILE_VERSION,
            n,
            m,
            cost_class: CostClassFile::from_class(&obs.cost_class),
            records: obs
                .records
                .iter()
                .map(|rec| RecordFile {
                    mu: render_vec(&rec.marginals.mu),
                    nu: render_vec(&rec.marginals.nu),
                    alpha: rec.alpha.as_ref().map(render_rational),
                    plan: rec.plan.as_ref().map(render_matrix),
                    f: rec.potentials.as_ref().map(|p| render_vec(&p.f)),
                    g: rec.potentials.as_ref().map(|p| render_vec(&p.g)),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostFile {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_class")]
    pub cost_class: CostClassFile,
    pub entries: Vec<Vec<String>>,
}

fn default_class() -> CostClassFile {
    CostClassFile::General
}

impl CostFile {
    pub fn to_matrix(&self) -> Result<Matrix, Error> {
        let m = parse_matrix(&self.entries, "cost entries")?;
        if m.nrows() != self.n || m.ncols() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "cost file declares {}x{} but entries are {}x{}",
                self.n,
                self.m,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }

    pub fn from_matrix(m: &Matrix, class: &CostClass) -> Self {
        CostFile {
            n: m.nrows(),
            m: m.ncols(),
            cost_class: CostClassFile::from_class(class),
            entries: render_matrix(m),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginalsFile {
    pub mu: Vec<String>,
    pub nu: Vec<String>,
}

impl MarginalsFile {
    pub fn to_pair(&self) -> Result<MarginalPair, Error> {
        Ok(MarginalPair::new(
            parse_vec(&self.mu, "mu")?,
            parse_vec(&self.nu, "nu")?,
        ))
    }

    pub fn from_pair(p: &MarginalPair) -> Self {
        MarginalsFile {
            mu: render_vec(&p.mu),
            nu: render_vec(&p.nu),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForwardFile {
    pub value: String,
    pub plan: Vec<Vec<String>>,
    pub f: Vec<String>,
    pub g: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerticesFile {
    pub mu: Vec<String>,
    pub nu: Vec<String>,
    pub count: usize,
    pub vertices: Vec<Vec<Vec<String>>>,
}

type RangeFile = (Option<String>, Option<String>);

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct AmbiguityFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shift_basis: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub free_directions: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinate_ranges: Option<Vec<RangeFile>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovered_cost: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<AmbiguityFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_dimension: Option<usize>,
    pub diagnostics: Vec<String>,
    pub tool_version: String,
    pub input_digest: String,
}

fn render_range(r: &CoordRange) -> RangeFile {
    (
        r.0.as_ref().map(render_rational),
        r.1.as_ref().map(render_rational),
    )
}

fn parse_range(r: &RangeFile) -> Result<CoordRange, Error> {
    let parse_opt = |o: &Option<String>| -> Result<Option<Rational>, Error> {
        o.as_ref()
            .map(|s| {
                parse_rational(s).map_err(|e| Error::InvalidObservations(format!("range: {e}")))
            })
            .transpose()
    };
    Ok((parse_opt(&r.0)?, parse_opt(&r.1)?))
}

impl ReportFile {
    pub fn from_report(
        report: &IdentifiabilityReport,
        tool_version: &str,
        input_digest: &str,
    ) -> Self {
        ReportFile {
            verdict: report.verdict.as_str().to_string(),
            recovered_cost: report.recovered_cost.as_ref().map(render_matrix),
            ambiguity: report.ambiguity.as_ref().map(|a| AmbiguityFile {
                base: a.base.as_ref().map(render_matrix),
                shift_basis: a.shift_basis.iter().map(render_matrix).collect(),
                free_directions: a.free_directions.iter().map(render_matrix).collect(),
                coordinate_ranges: a
                    .coordinate_ranges
                    .as_ref()
                    .map(|rs| rs.iter().map(render_range).collect()),
                candidates: a.candidates.iter().map(render_matrix).collect(),
            }),
            residual_dimension: report.residual_dimension,
            diagnostics: report.diagnostics.clone(),
            tool_version: tool_version.to_string(),
            input_digest: input_digest.to_string(),
        }
    }

    pub fn to_report(&self) -> Result<IdentifiabilityReport, Error> {
        let verdict = match self.verdict.as_str() {
            "identifiable" => Verdict::Identifiable,
            "identifiable_in_quotient" => Verdict::IdentifiableInQuotient,
            "ambiguous" => Verdict::Ambiguous,
            "inconsistent" => Verdict::Inconsistent,
            "undecided_cap" => Verdict::UndecidedCap,
            other => {
                return Err(Error::InvalidObservations(format!(
                    "unknown verdict {other:?}"
                )))
            }
        };
        let ambiguity = self
            .ambiguity
            .as_ref()
            .map(|a| -> Result<AmbiguityClass, Error> {
                Ok(AmbiguityClass {
                    base: a
                        .base
                        .as_ref()
                        .map(|b| parse_matrix(b, "ambiguity base"))
                        .transpose()?,
                    shift_basis: a
                        .shift_basis
                        .iter()
                        .map(|m| parse_matrix(m, "shift basis"))
                        .collect::<Result<_, _>>()?,
                    free_directions: a
                        .free_directions
                        .iter()
                        .map(|m| parse_matrix(m, "free direction"))
                        .collect::<Result<_, _>>()?,
                    coordinate_ranges: a
                        .coordinate_ranges
                        .as_ref()
                        .map(|rs| rs.iter().map(parse_range).collect::<Result<_, _>>())
                        .transpose()?,
                    candidates: a
                        .candidates
                        .iter()
                        .map(|m| parse_matrix(m, "candidate"))
                        .collect::<Result<_, _>>()?,
                })
            })
            .transpose()?;
        Ok(IdentifiabilityReport {
            verdict,
            recovered_cost: self
                .recovered_cost
                .as_ref()
                .map(|m| parse_matrix(m, "recovered cost"))
                .transpose()?,
            ambiguity,
            residual_dimension: self.residual_dimension,
            diagnostics: self.diagnostics.clone(),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateFile {
    pub n: usize,
    pub m: usize,
    pub method: String,
    /// Row-major entries (floating point).
    pub c_hat: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Row-major per-entry intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<Vec<Vec<(f64, f64)>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    pub input_digest: String,
}

impl EstimateFile {
    pub fn from_report(
        report: &EstimateReport,
        method: &str,
        level: Option<f64>,
        ci: Option<&[(f64, f64)]>,
        input_digest: &str,
    ) -> Self {
        let (n, m) = (report.n, report.m);
        let ci_rows = ci.map(|flat| {
            (0..n)
                .map(|i| (0..m).map(|j| flat[j * n + i]).collect())
                .collect()
        });
        EstimateFile {
            n,
            m,
            method: method.to_string(),
            c_hat: report.c_hat_rows(),
            sigma_hat: report.sigma_hat,
            lambda: report.lambda,
            b0: report.b0,
            level,
            ci: ci_rows,
            sweeps: report.sweeps,
            input_digest: input_digest.to_string(),
        }
    }
}

/// Hidden ground truth written next to generated observation files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruthFile {
    pub cost: CostFile,
    /// Exact noise-free totals per record.
    pub alphas: Vec<String>,
    pub sigma: f64,
    pub seed: u64,
    pub mode: String,
}
