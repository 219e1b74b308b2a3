use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::Serialize;

use super::panel::DyadObservation;
use crate::error::{Error, Result};

/// Constant added before taking logs of covariates.
pub const DEFAULT_OFFSET: f64 = 0.0001;

/// Covariates available to the gravity and selection equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Regressor {
    LnDistance,
    CommonLanguage,
    CommonLegal,
    CommonReligion,
    Colonial,
    Contiguous,
    Rta,
    LnGdpI,
    LnGdpJ,
    LnGdpPcI,
    LnGdpPcJ,
    RdShareI,
    RdShareJ,
    LnAiPatentsI,
    LnAiPatentsJ,
    Proximity,
    EuI,
    EuJ,
    EuIj,
}

impl Regressor {
    pub const ALL: [Regressor; 19] = [
        Regressor::LnDistance,
        Regressor::CommonLanguage,
        Regressor::CommonLegal,
        Regressor::CommonReligion,
        Regressor::Colonial,
        Regressor::Contiguous,
        Regressor::Rta,
        Regressor::LnGdpI,
        Regressor::LnGdpJ,
        Regressor::LnGdpPcI,
        Regressor::LnGdpPcJ,
        Regressor::RdShareI,
        Regressor::RdShareJ,
        Regressor::LnAiPatentsI,
        Regressor::LnAiPatentsJ,
        Regressor::Proximity,
        Regressor::EuI,
        Regressor::EuJ,
        Regressor::EuIj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regressor::LnDistance => "ln_distance",
            Regressor::CommonLanguage => "common_language",
            Regressor::CommonLegal => "common_legal",
            Regressor::CommonReligion => "common_religion",
            Regressor::Colonial => "colonial",
            Regressor::Contiguous => "contiguous",
            Regressor::Rta => "rta",
            Regressor::LnGdpI => "ln_gdp_i",
            Regressor::LnGdpJ => "ln_gdp_j",
            Regressor::LnGdpPcI => "ln_gdp_pc_i",
            Regressor::LnGdpPcJ => "ln_gdp_pc_j",
            Regressor::RdShareI => "rd_share_i",
            Regressor::RdShareJ => "rd_share_j",
            Regressor::LnAiPatentsI => "ln_ai_patents_i",
            Regressor::LnAiPatentsJ => "ln_ai_patents_j",
            Regressor::Proximity => "proximity",
            Regressor::EuI => "eu_i",
            Regressor::EuJ => "eu_j",
            Regressor::EuIj => "eu_ij",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Whether the covariate enters as `ln(x + offset)`.
    pub fn is_log(self) -> bool {
        matches!(
            self,
            Regressor::LnDistance
                | Regressor::LnGdpI
                | Regressor::LnGdpJ
                | Regressor::LnGdpPcI
                | Regressor::LnGdpPcJ
                | Regressor::LnAiPatentsI
                | Regressor::LnAiPatentsJ
        )
    }

    /// Untransformed value and its source column.
    pub fn raw(self, o: &DyadObservation) -> (f64, &'static str) {
        match self {
            Regressor::LnDistance => (o.distance_km, "distance_km"),
            Regressor::CommonLanguage => (o.common_language, "common_language"),
            Regressor::CommonLegal => (o.common_legal, "common_legal"),
            Regressor::CommonReligion => (o.common_religion, "common_religion"),
            Regressor::Colonial => (o.colonial, "colonial"),
            Regressor::Contiguous => (o.contiguous, "contiguous"),
            Regressor::Rta => (o.rta, "rta"),
            Regressor::LnGdpI => (o.gdp_i, "gdp_i"),
            Regressor::LnGdpJ => (o.gdp_j, "gdp_j"),
            Regressor::LnGdpPcI => (o.gdp_pc_i, "gdp_pc_i"),
            Regressor::LnGdpPcJ => (o.gdp_pc_j, "gdp_pc_j"),
            Regressor::RdShareI => (o.rd_share_i, "rd_share_i"),
            Regressor::RdShareJ => (o.rd_share_j, "rd_share_j"),
            Regressor::LnAiPatentsI => (o.ai_patents_i, "ai_patents_i"),
            Regressor::LnAiPatentsJ => (o.ai_patents_j, "ai_patents_j"),
            Regressor::Proximity => (o.proximity, "proximity"),
            Regressor::EuI => (o.eu_i, "eu_i"),
            Regressor::EuJ => (o.eu_j, "eu_j"),
            Regressor::EuIj => (o.eu_ij, "eu_ij"),
        }
    }

    pub fn value(self, o: &DyadObservation, offset: f64) -> f64 {
        let (x, _) = self.raw(o);
        if self.is_log() {
            (x + offset).ln()
        } else {
            x
        }
    }
}

/// Regressor set and fixed-effect blocks of one specification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSpec {
    pub regressors: Vec<Regressor>,
    pub time_fe: bool,
    pub origin_fe: bool,
    pub dest_fe: bool,
}

impl DesignSpec {
    const BILATERAL: [Regressor; 7] = [
        Regressor::LnDistance,
        Regressor::CommonLanguage,
        Regressor::CommonLegal,
        Regressor::CommonReligion,
        Regressor::Colonial,
        Regressor::Contiguous,
        Regressor::Rta,
    ];
    const MACRO: [Regressor; 6] = [
        Regressor::LnGdpI,
        Regressor::LnGdpJ,
        Regressor::LnGdpPcI,
        Regressor::LnGdpPcJ,
        Regressor::RdShareI,
        Regressor::RdShareJ,
    ];
    const AI: [Regressor; 3] = [Regressor::LnAiPatentsI, Regressor::LnAiPatentsJ, Regressor::Proximity];
    const EU_BLOCK: [Regressor; 3] = [Regressor::EuI, Regressor::EuJ, Regressor::EuIj];

    /// The four nested layouts of the gravity results table:
    /// 1 bilateral block with time, origin and destination effects;
    /// 2 adds macro controls; 3 adds AI capacity and proximity; 4 adds EU
    /// membership dummies. Layouts 2-4 carry time effects only.
    pub fn table(spec: u8) -> Result<Self> {
        let mut regressors = Self::BILATERAL.to_vec();
        if !(1..=4).contains(&spec) {
            return Err(Error::InvalidArgument(format!("specification must be 1-4, got {spec}")));
        }
        if spec >= 2 {
            regressors.extend(Self::MACRO);
        }
        if spec >= 3 {
            regressors.extend(Self::AI);
        }
        if spec >= 4 {
            regressors.extend(Self::EU_BLOCK);
        }
        Ok(Self {
            regressors,
            time_fe: true,
            origin_fe: spec == 1,
            dest_fe: spec == 1,
        })
    }

    /// Link-formation equation: distance, language, religion, colonial ties,
    /// contiguity and trade agreements with time, origin and destination
    /// effects.
    pub fn first_stage() -> Self {
        Self {
            regressors: Self::BILATERAL
                .into_iter()
                .filter(|r| *r != Regressor::CommonLegal)
                .collect(),
            time_fe: true,
            origin_fe: true,
            dest_fe: true,
        }
    }

    pub fn custom(regressors: Vec<Regressor>, time_fe: bool) -> Self {
        Self {
            regressors,
            time_fe,
            origin_fe: false,
            dest_fe: false,
        }
    }
}

/// How dyads are grouped into clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ClusterOrientation {
    /// (i, j) and (j, i) are different clusters.
    #[default]
    Ordered,
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DyadKey {
    pub origin: String,
    pub dest: String,
    pub year: i32,
}

impl std::fmt::Display for DyadKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}@{}", self.origin, self.dest, self.year)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    /// Cluster index per row; indices follow ascending label order.
    pub clusters: Vec<usize>,
    pub cluster_labels: Vec<String>,
    pub keys: Vec<DyadKey>,
    pub offset: f64,
}

impl DesignMatrix {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Same design with the response replaced by `1{y > 0}`.
    pub fn binary_response(&self) -> DesignMatrix {
        let mut d = self.clone();
        d.y = self.y.iter().map(|&v| (v > 0.0) as u8 as f64).collect();
        d
    }

    /// Append a named column.
    pub fn with_column(&self, name: &str, values: &[f64]) -> DesignMatrix {
        let mut d = self.clone();
        let k = d.x.ncols();
        d.x = d.x.insert_column(k, 0.0);
        d.x.set_column(k, &nalgebra::DVector::from_column_slice(values));
        d.names.push(name.to_string());
        d
    }

    /// Keep only the rows where `keep` is true; cluster indices are
    /// renumbered over the surviving labels.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> DesignMatrix {
        let rows: Vec<usize> = (0..self.n_obs()).filter(|&r| keep(r)).collect();
        let x = DMatrix::from_fn(rows.len(), self.x.ncols(), |i, j| self.x[(rows[i], j)]);
        let used: BTreeSet<usize> = rows.iter().map(|&r| self.clusters[r]).collect();
        let remap: std::collections::BTreeMap<usize, usize> =
            used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        DesignMatrix {
            y: rows.iter().map(|&r| self.y[r]).collect(),
            x,
            names: self.names.clone(),
            clusters: rows.iter().map(|&r| remap[&self.clusters[r]]).collect(),
            cluster_labels: used.iter().map(|&c| self.cluster_labels[c].clone()).collect(),
            keys: rows.iter().map(|&r| self.keys[r].clone()).collect(),
            offset: self.offset,
        }
    }
}

/// Build the regression design. Columns are `const`, the spec's regressors
/// in order, then `year_*`, `origin_*`, `dest_*` dummies with the
/// alphabetically first level of each block dropped. The response stays in
/// levels.
pub fn transform_covariates(
    panel: &[DyadObservation],
    offset: f64,
    spec: &DesignSpec,
    orientation: ClusterOrientation,
) -> Result<DesignMatrix> {
    if !(offset > 0.0) {
        return Err(Error::InvalidArgument(format!("offset must be positive, got {offset}")));
    }
    if panel.is_empty() {
        return Err(Error::EmptyInput("empty panel"));
    }
    for (r, o) in panel.iter().enumerate() {
        if o.citations < 0.0 {
            return Err(Error::NegativeCovariate { row: r + 1, column: "citations".into(), value: o.citations });
        }
        for reg in &spec.regressors {
            let (v, col) = reg.raw(o);
            if v < 0.0 || !v.is_finite() {
                return Err(Error::NegativeCovariate { row: r + 1, column: col.into(), value: v });
            }
        }
    }

    let levels = |f: &dyn Fn(&DyadObservation) -> String| -> Vec<String> {
        let set: BTreeSet<String> = panel.iter().map(f).collect();
        set.into_iter().skip(1).collect()
    };
    let years = if spec.time_fe { levels(&|o| o.year.to_string()) } else { vec![] };
    let origins = if spec.origin_fe { levels(&|o| o.origin.clone()) } else { vec![] };
    let dests = if spec.dest_fe { levels(&|o| o.dest.clone()) } else { vec![] };

    let mut names = vec!["const".to_string()];
    names.extend(spec.regressors.iter().map(|r| r.name().to_string()));
    names.extend(years.iter().map(|y| format!("year_{y}")));
    names.extend(origins.iter().map(|c| format!("origin_{c}")));
    names.extend(dests.iter().map(|c| format!("dest_{c}")));

    let n = panel.len();
    let k = names.len();
    let nreg = spec.regressors.len();
    let x = DMatrix::from_fn(n, k, |i, j| {
        let o = &panel[i];
        if j == 0 {
            return 1.0;
        }
        let j = j - 1;
        if j < nreg {
            return spec.regressors[j].value(o, offset);
        }
        let j = j - nreg;
        if j < years.len() {
            return (o.year.to_string() == years[j]) as u8 as f64;
        }
        let j = j - years.len();
        if j < origins.len() {
            return (o.origin == origins[j]) as u8 as f64;
        }
        let j = j - origins.len();
        (o.dest == dests[j]) as u8 as f64
    });

    let label = |o: &DyadObservation| match orientation {
        ClusterOrientation::Ordered => format!("{}-{}", o.origin, o.dest),
        ClusterOrientation::Unordered => {
            let (a, b) = if o.origin <= o.dest { (&o.origin, &o.dest) } else { (&o.dest, &o.origin) };
            format!("{a}-{b}")
        }
    };
    let cluster_labels: Vec<String> = panel.iter().map(label).collect::<BTreeSet<_>>().into_iter().collect();
    let clusters = panel
        .iter()
        .map(|o| cluster_labels.binary_search(&label(o)).expect("label present"))
        .collect();

    Ok(DesignMatrix {
        y: panel.iter().map(|o| o.citations).collect(),
        x,
        names,
        clusters,
        cluster_labels,
        keys: panel
            .iter()
            .map(|o| DyadKey { origin: o.origin.clone(), dest: o.dest.clone(), year: o.year })
            .collect(),
        offset,
    })
}
