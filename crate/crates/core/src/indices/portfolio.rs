use std::collections::BTreeMap;

use chrono::Datelike;
use serde::Serialize;

use crate::corpus::{LinkStatus, LinkedCorpus};
use crate::error::{Error, Result};
use crate::par;

/// Who owns a portfolio: a country code (including `EU`) or an applicant id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Holder {
    Country(String),
    Firm(String),
}

impl Holder {
    pub fn id(&self) -> &str {
        match self {
            Holder::Country(c) | Holder::Firm(c) => c,
        }
    }
}

/// Distribution of a holder's AI patents over truncated technology classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioVector {
    pub holder: String,
    pub shares: BTreeMap<String, f64>,
    pub support_size: usize,
}

impl PortfolioVector {
    /// Build from raw non-negative weights; zero entries are dropped.
    pub fn from_weights(holder: impl Into<String>, weights: BTreeMap<String, f64>) -> Result<Self> {
        let holder = holder.into();
        let total: f64 = weights.values().sum();
        if !(total > 0.0) {
            return Err(Error::EmptyPortfolio(holder));
        }
        let shares: BTreeMap<String, f64> = weights
            .into_iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(k, w)| (k, w / total))
            .collect();
        Ok(Self {
            holder,
            support_size: shares.len(),
            shares,
        })
    }
}

fn truncate(code: &str, level: usize) -> String {
    code.chars().take(level).collect()
}

/// Portfolio of `holder` at a class prefix length of `class_level`. Each
/// patent is split equally over its distinct truncated classes, scaled by
/// the holder's attribution weight on that patent.
pub fn portfolio_vector(
    corpus: &LinkedCorpus,
    holder: &Holder,
    class_level: usize,
) -> Result<PortfolioVector> {
    portfolio_vector_through(corpus, holder, class_level, None)
}

/// As [`portfolio_vector`], restricted to patents first published no later
/// than `through_year` when given.
pub fn portfolio_vector_through(
    corpus: &LinkedCorpus,
    holder: &Holder,
    class_level: usize,
    through_year: Option<i32>,
) -> Result<PortfolioVector> {
    if class_level == 0 {
        return Err(Error::InvalidArgument("class level must be at least 1".into()));
    }
    let links = corpus.links()?;
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for (p, link) in corpus.patents.iter().zip(links) {
        if through_year.is_some_and(|y| p.earliest_pub_date.year() > y) {
            continue;
        }
        let w = match holder {
            Holder::Country(code) => {
                if link.status == LinkStatus::Unlinked {
                    continue;
                }
                corpus.holder_weight(&link.attribution.countries, code)
            }
            Holder::Firm(id) => {
                if p.applicant_ids.iter().any(|a| a == id) {
                    1.0 / p.applicant_ids.len() as f64
                } else {
                    0.0
                }
            }
        };
        if w <= 0.0 {
            continue;
        }
        let mut classes: Vec<String> = p.cpc_classes.iter().map(|c| truncate(c, class_level)).collect();
        classes.sort();
        classes.dedup();
        let part = w / classes.len() as f64;
        for c in classes {
            *weights.entry(c).or_default() += part;
        }
    }
    PortfolioVector::from_weights(holder.id(), weights)
}

/// Sum of coordinate-wise minima over the union of supports.
pub fn min_complement_proximity(a: &PortfolioVector, b: &PortfolioVector) -> f64 {
    let mut left = a.shares.iter().peekable();
    let mut right = b.shares.iter().peekable();
    let mut sum = 0.0;
    while let (Some((ka, va)), Some((kb, vb))) = (left.peek(), right.peek()) {
        match ka.cmp(kb) {
            std::cmp::Ordering::Less => {
                left.next();
            }
            std::cmp::Ordering::Greater => {
                right.next();
            }
            std::cmp::Ordering::Equal => {
                sum += va.min(**vb);
                left.next();
                right.next();
            }
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Pairwise proximity between holders. Holders with an empty portfolio get
/// proximity zero with everyone but themselves (one on the diagonal).
pub fn proximity_matrix(
    corpus: &LinkedCorpus,
    holders: &[Holder],
    class_level: usize,
) -> Result<Vec<Vec<f64>>> {
    let vectors: Vec<Option<PortfolioVector>> = par::map(holders, |h| {
        match portfolio_vector(corpus, h, class_level) {
            Ok(v) => Ok(Some(v)),
            Err(Error::EmptyPortfolio(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let n = holders.len();
    Ok(par::map_range(0..n, |i| {
        (0..n)
            .map(|j| match (&vectors[i], &vectors[j]) {
                _ if i == j => 1.0,
                (Some(a), Some(b)) => min_complement_proximity(a, b),
                _ => 0.0,
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(pairs: &[(&str, f64)]) -> PortfolioVector {
        PortfolioVector::from_weights(
            "h",
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = pv(&[("G06N", 0.5), ("H04L", 0.5)]);
        assert_eq!(min_complement_proximity(&a, &a), 1.0);
        let b = pv(&[("G06F", 1.0)]);
        assert_eq!(min_complement_proximity(&a, &b), 0.0);
    }

    #[test]
    fn hand_summed_minima() {
        let a = pv(&[("A01B", 0.5), ("B01B", 0.3), ("C01B", 0.2)]);
        let b = pv(&[("A01B", 0.2), ("B01B", 0.3), ("C01B", 0.5)]);
        let p = min_complement_proximity(&a, &b);
        assert!((p - 0.7).abs() < 1e-15);
        assert_eq!(p, min_complement_proximity(&b, &a));
    }

    #[test]
    fn empty_weights_error() {
        assert!(matches!(
            PortfolioVector::from_weights("x", BTreeMap::new()),
            Err(Error::EmptyPortfolio(_))
        ));
    }
}
