use serde::Serialize;

use crate::corpus::{Grouping, LinkedCorpus};
use crate::error::{Error, Result};
use crate::{par, registry};

/// Family-level citation counts; rows cite columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitationMatrix {
    pub axis: Vec<String>,
    pub counts: Vec<Vec<f64>>,
    pub grouping: Grouping,
}

impl CitationMatrix {
    pub fn position(&self, country: &str) -> Option<usize> {
        self.axis.iter().position(|c| c == country)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.counts[i].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }
}

/// Count deduplicated (citing family, cited family) pairs by citing and
/// cited holder. Families spanning several countries are split by their
/// attribution weights; `EU` counts every member (intra-EU is diagonal).
pub fn citation_matrix(
    corpus: &LinkedCorpus,
    axis: &[String],
    grouping: Grouping,
) -> Result<CitationMatrix> {
    let unknown: Vec<String> = axis.iter().filter(|c| !registry::is_holder(c)).cloned().collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownCountries(unknown));
    }
    corpus.links()?;
    let edges = corpus.dedup_citations();
    let n = axis.len();
    let partials = par::map_blocks(edges.len(), par::BLOCK_ROWS, |range| {
        let mut m = vec![vec![0.0; n]; n];
        for e in &edges[range] {
            let citing: Vec<f64> = axis
                .iter()
                .map(|h| corpus.holder_weight(e.citing.view(grouping), h))
                .collect();
            let cited: Vec<f64> = axis
                .iter()
                .map(|h| corpus.holder_weight(e.cited.view(grouping), h))
                .collect();
            for (i, wi) in citing.iter().enumerate().filter(|(_, w)| **w > 0.0) {
                for (j, wj) in cited.iter().enumerate().filter(|(_, w)| **w > 0.0) {
                    m[i][j] += wi * wj;
                }
            }
        }
        m
    });
    let mut counts = vec![vec![0.0; n]; n];
    for part in partials {
        for (row, prow) in counts.iter_mut().zip(part) {
            for (c, p) in row.iter_mut().zip(prow) {
                *c += p;
            }
        }
    }
    Ok(CitationMatrix {
        axis: axis.to_vec(),
        counts,
        grouping,
    })
}

/// Share of a country's outgoing citations that go to other countries.
pub fn foreign_citation_share(matrix: &CitationMatrix, country: &str) -> Result<f64> {
    let i = matrix
        .position(country)
        .ok_or_else(|| Error::UnknownCountries(vec![country.to_string()]))?;
    let row = matrix.row_sum(i);
    if row <= 0.0 {
        return Err(Error::ZeroRowSum(country.to_string()));
    }
    Ok(1.0 - matrix.counts[i][i] / row)
}
