//! JSON dataset files: `{"mvns": [...]}` or `{"gmms": [...]}`.

use std::path::Path;

use gaussgeo_core::{Gmm, Mvn, SpdMatrix, Vector};
use serde::Deserialize;

use crate::{CliError, CliResult};

const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMvn {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGmm {
    weights: Vec<f64>,
    components: Vec<RawMvn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    mvns: Option<Vec<RawMvn>>,
    gmms: Option<Vec<RawGmm>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Mvns(Vec<Mvn>),
    Gmms(Vec<Gmm>),
}

impl Dataset {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let raw: RawDataset =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed dataset: {e}")))?;
        let data = match (raw.mvns, raw.gmms) {
            (Some(m), None) => Dataset::Mvns(
                m.iter().enumerate().map(|(i, r)| to_mvn(r).map_err(|e| at(e, "mvns", i))).collect::<CliResult<_>>()?,
            ),
            (None, Some(g)) => Dataset::Gmms(
                g.iter().enumerate().map(|(i, r)| to_gmm(r).map_err(|e| at(e, "gmms", i))).collect::<CliResult<_>>()?,
            ),
            _ => return Err(CliError::Input("dataset needs exactly one of \"mvns\" or \"gmms\"".into())),
        };
        data.check_dims()?;
        Ok(data)
    }

    fn check_dims(&self) -> CliResult<()> {
        let dims: Vec<usize> = match self {
            Dataset::Mvns(m) => m.iter().map(Mvn::dim).collect(),
            Dataset::Gmms(g) => g.iter().map(Gmm::dim).collect(),
        };
        if dims.is_empty() {
            return Err(CliError::Input("dataset is empty".into()));
        }
        if dims.iter().any(|&d| d != dims[0]) {
            return Err(CliError::Input("all entries must share one dimension".into()));
        }
        Ok(())
    }

    pub fn into_mvns(self) -> CliResult<Vec<Mvn>> {
        match self {
            Dataset::Mvns(m) => Ok(m),
            Dataset::Gmms(_) => Err(CliError::Input("this command needs an \"mvns\" dataset".into())),
        }
    }

    pub fn into_gmms(self) -> CliResult<Vec<Gmm>> {
        match self {
            Dataset::Gmms(g) => Ok(g),
            Dataset::Mvns(_) => Err(CliError::Input("this command needs a \"gmms\" dataset".into())),
        }
    }
}

fn at(e: CliError, field: &str, i: usize) -> CliError {
    match e {
        CliError::Input(m) => CliError::Input(format!("{field}[{i}]: {m}")),
        other => other,
    }
}

fn to_mvn(r: &RawMvn) -> CliResult<Mvn> {
    let d = r.mean.len();
    if d == 0 {
        return Err(CliError::Input("empty mean".into()));
    }
    if r.cov.len() != d || r.cov.iter().any(|row| row.len() != d) {
        return Err(CliError::Input(format!("covariance must be {d}x{d}")));
    }
    let mut flat = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let (a, b) = (r.cov[i][j], r.cov[j][i]);
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(CliError::Input(format!("covariance is not symmetric at ({i}, {j})")));
            }
            flat.push(0.5 * (a + b));
        }
    }
    Ok(Mvn::new(Vector::from_column_slice(&r.mean), SpdMatrix::from_row_slice(d, &flat)?)?)
}

fn to_gmm(r: &RawGmm) -> CliResult<Gmm> {
    if r.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(CliError::Input("mixture weights must be positive".into()));
    }
    let comps = r.components.iter().map(to_mvn).collect::<CliResult<Vec<_>>>()?;
    Ok(Gmm::normalized(r.weights.clone(), comps)?)
}
