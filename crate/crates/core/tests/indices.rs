mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{applicant, cite, linked, patent};
use patflow::corpus::{ApplicantRecord, CitationEdge, Grouping, PatentRecord};
use patflow::indices::{
    citation_matrix, concentration_ratio, concentration_table, foreign_citation_share, min_complement_proximity,
    portfolio_vector, proximity_matrix, rca, rca_table, CountryPatentCounts, Holder, PortfolioVector,
};
use patflow::Error;
use proptest::prelude::*;

fn vector(weights: &BTreeMap<String, f64>) -> PortfolioVector {
    PortfolioVector::from_weights("h", weights.clone()).unwrap()
}

/// Union-of-keys loop, independent of the merge walk in the library.
fn brute_proximity(a: &PortfolioVector, b: &PortfolioVector) -> f64 {
    let keys: BTreeSet<&String> = a.shares.keys().chain(b.shares.keys()).collect();
    keys.into_iter()
        .map(|k| {
            let x = a.shares.get(k).copied().unwrap_or(0.0);
            let y = b.shares.get(k).copied().unwrap_or(0.0);
            if x < y { x } else { y }
        })
        .sum()
}

fn sparse_weights() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::collection::btree_map((0u32..50).prop_map(|k| format!("C{k:02}")), 0.001f64..10.0, 1..20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn proximity_is_symmetric_bounded_and_matches_brute_force(a in sparse_weights(), b in sparse_weights()) {
        let (a, b) = (vector(&a), vector(&b));
        let ab = min_complement_proximity(&a, &b);
        prop_assert_eq!(ab, min_complement_proximity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - brute_proximity(&a, &b)).abs() <= 1e-12);
        prop_assert!((min_complement_proximity(&a, &a) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn portfolio_shares_sum_to_one(a in sparse_weights()) {
        let v = vector(&a);
        let total: f64 = v.shares.values().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(v.shares.values().all(|s| *s > 0.0));
        prop_assert_eq!(v.support_size, v.shares.len());
    }

    #[test]
    fn concentration_is_monotone_in_q(counts in prop::collection::vec(1u32..50, 1..30)) {
        let firms: BTreeMap<String, f64> =
            counts.iter().enumerate().map(|(i, c)| (format!("F{i:02}"), *c as f64)).collect();
        let n = firms.len();
        let mut last = 0.0;
        for q in 1..=n + 1 {
            let c = concentration_ratio(&firms, q).unwrap();
            prop_assert!(c.cr >= last);
            prop_assert!((0.0..=1.0).contains(&c.cr));
            prop_assert_eq!(c.per_firm.values().sum::<f64>(), c.total);
            last = c.cr;
        }
        prop_assert_eq!(concentration_ratio(&firms, n).unwrap().cr, 1.0);
    }
}

const NON_EU: &[&str] = &["US", "CN", "JP", "KR", "GB", "CH", "IN", "CA"];

/// One patent per family and one applicant per patent, so every citation
/// pair carries weight one on each side.
fn random_corpus(
    countries: &[usize],
    classes: &[u8],
    edges: &[(usize, usize)],
) -> (Vec<PatentRecord>, Vec<ApplicantRecord>, Vec<CitationEdge>) {
    let applicants = NON_EU.iter().map(|c| applicant(&format!("A-{c}"), c, Some("62"))).collect();
    let patents: Vec<PatentRecord> = countries
        .iter()
        .zip(classes)
        .enumerate()
        .map(|(i, (c, k))| {
            let class = format!("G0{}N", k % 10);
            patent(&format!("P{i}"), &format!("F{i}"), "2018-05-01", &[&class], &[&format!("A-{}", NON_EU[*c])])
        })
        .collect();
    let n = patents.len();
    let citations = edges
        .iter()
        .map(|(from, to)| {
            let from = from % n;
            let owner = countries[from];
            cite(&format!("F{from}"), &format!("F{}", to % n), &format!("A-{}", NON_EU[owner]), Some("2020-01-01"))
        })
        .collect();
    (patents, applicants, citations)
}

fn corpus_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<u8>, Vec<(usize, usize)>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0..NON_EU.len(), n),
            prop::collection::vec(any::<u8>(), n),
            prop::collection::vec((0usize..1000, 0usize..1000), 0..80),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rca_weighted_mean_is_one(
        (countries, classes, _) in corpus_strategy(),
        totals in prop::collection::vec(50u32..5000, NON_EU.len()),
    ) {
        let (p, a, _) = random_corpus(&countries, &classes, &[]);
        let corpus = linked(p, a, vec![]);
        let totals: BTreeMap<String, f64> =
            NON_EU.iter().zip(&totals).map(|(c, t)| (c.to_string(), *t as f64)).collect();
        let (rows, world) = rca_table(&corpus, &totals, None).unwrap();
        let weighted: f64 = rows.iter().map(|r| r.total_count / world.total_count * r.rca).sum();
        prop_assert!((weighted - 1.0).abs() <= 1e-9, "weighted mean {weighted}");
    }

    #[test]
    fn citation_matrix_conserves_in_axis_pairs(
        (countries, classes, edges) in corpus_strategy(),
        mask in prop::collection::vec(any::<bool>(), NON_EU.len()),
    ) {
        let (p, a, c) = random_corpus(&countries, &classes, &edges);
        let corpus = linked(p, a, c);
        let axis: Vec<String> = NON_EU.iter().zip(&mask).filter(|(_, m)| **m).map(|(c, _)| c.to_string()).collect();
        let m = citation_matrix(&corpus, &axis, Grouping::Applicant).unwrap();
        let n = countries.len();
        let in_axis = |family: usize| axis.iter().any(|a| a == NON_EU[countries[family]]);
        let pairs: BTreeSet<(usize, usize)> = edges.iter().map(|(f, t)| (f % n, t % n)).collect();
        let expected = pairs.iter().filter(|(f, t)| in_axis(*f) && in_axis(*t)).count();
        prop_assert_eq!(m.total(), expected as f64);
        prop_assert!(m.counts.iter().flatten().all(|v| *v >= 0.0));
    }
}

#[test]
fn equal_split_portfolio_example() {
    let c = linked(
        vec![
            patent("P1", "F1", "2019-01-01", &["G06N3/08"], &["A"]),
            patent("P2", "F2", "2019-01-01", &["G06N20/00"], &["A"]),
            patent("P3", "F3", "2019-01-01", &["H04L9/00"], &["A"]),
            patent("P4", "F4", "2019-01-01", &["G06F17/00"], &["A"]),
        ],
        vec![applicant("A", "US", None)],
        vec![],
    );
    let v = portfolio_vector(&c, &Holder::Country("US".into()), 4).unwrap();
    let expected: BTreeMap<String, f64> =
        [("G06F", 0.25), ("G06N", 0.5), ("H04L", 0.25)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assert_eq!(v.shares, expected);
    assert_eq!(v.support_size, 3);

    let firm = portfolio_vector(&c, &Holder::Firm("A".into()), 4).unwrap();
    assert_eq!(firm.shares, expected);
    assert!(matches!(
        portfolio_vector(&c, &Holder::Country("CN".into()), 4),
        Err(Error::EmptyPortfolio(_))
    ));
}

#[test]
fn multi_class_patent_splits_over_distinct_truncated_classes() {
    let c = linked(
        vec![patent("P1", "F1", "2019-01-01", &["G06N3/08", "G06N20/00", "H04L9/00"], &["A"])],
        vec![applicant("A", "US", None)],
        vec![],
    );
    let v = portfolio_vector(&c, &Holder::Country("US".into()), 4).unwrap();
    assert_eq!(v.shares["G06N"], 0.5);
    assert_eq!(v.shares["H04L"], 0.5);
    let five = portfolio_vector(&c, &Holder::Country("US".into()), 5).unwrap();
    assert_eq!(five.support_size, 3);
}

#[test]
fn planted_portfolios_overlap_by_seven_tenths() {
    let mut patents = Vec::new();
    for (id, counts) in [("X", [5, 3, 2]), ("Y", [2, 3, 5])] {
        for (class, n) in ["G06N", "G06F", "H04L"].iter().zip(counts) {
            for k in 0..n {
                let pid = format!("{id}{class}{k}");
                patents.push(patent(&pid, &pid, "2019-01-01", &[class], &[id]));
            }
        }
    }
    let c = linked(patents, vec![applicant("X", "IS", None), applicant("Y", "NO", None)], vec![]);
    let holders = [Holder::Country("IS".into()), Holder::Country("NO".into()), Holder::Country("US".into())];
    let m = proximity_matrix(&c, &holders, 4).unwrap();
    assert_eq!(m[0][1], 0.7);
    assert_eq!(m[1][0], 0.7);
    assert_eq!(m[0][0], 1.0);
    assert_eq!(m[0][2], 0.0);
}

#[test]
fn rca_back_solved_row_reproduces_published_value() {
    let us = CountryPatentCounts {
        holder: "US".into(),
        ai_count: 80_371.0,
        total_count: 933_528.0,
    };
    // World ratio implied by the row's own RCA, then run forward again.
    let rho = (us.ai_count / us.total_count) / 5.15;
    assert!((rho - 0.016716).abs() < 5e-5);
    let world = CountryPatentCounts {
        holder: "WORLD".into(),
        ai_count: rho * 1e7,
        total_count: 1e7,
    };
    let value = rca(&us, &world).unwrap();
    assert!((value - 5.15).abs() <= 0.01);
    let world = CountryPatentCounts {
        holder: "WORLD".into(),
        ai_count: 0.016716 * 1e7,
        total_count: 1e7,
    };
    assert!((rca(&us, &world).unwrap() - 5.15).abs() <= 0.01);
}

#[test]
fn concentration_fixtures() {
    let ten: BTreeMap<String, f64> = (0..10).map(|i| (format!("F{i}"), 10.0)).collect();
    assert_eq!(concentration_ratio(&ten, 5).unwrap().cr, 0.5);
    let tied: BTreeMap<String, f64> = (0..4).map(|i| (format!("F{i}"), 5.0)).collect();
    assert_eq!(concentration_ratio(&tied, 3).unwrap().cr, 0.75);
    assert_eq!(concentration_ratio(&ten, 10).unwrap().cr, 1.0);
    assert!(matches!(concentration_ratio(&BTreeMap::new(), 5), Err(Error::EmptySector)));
}

#[test]
fn monopoly_sector_from_corpus() {
    let c = linked(
        vec![
            patent("P1", "F1", "2019-01-01", &["G06N3/08"], &["M"]),
            patent("P2", "F2", "2019-01-01", &["G06N3/08"], &["M"]),
            patent("P3", "F3", "2019-01-01", &["G06N3/08"], &["A"]),
            patent("P4", "F4", "2019-01-01", &["G06N3/08"], &["B"]),
        ],
        vec![applicant("M", "US", Some("99")), applicant("A", "US", Some("62")), applicant("B", "CN", Some("62"))],
        vec![],
    );
    let table = concentration_table(&c, 1).unwrap();
    let by_sector: BTreeMap<&str, f64> = table.iter().map(|s| (s.sector.as_str(), s.cr)).collect();
    assert_eq!(by_sector["99"], 1.0);
    assert_eq!(by_sector["62"], 0.5);
}

#[test]
fn five_edge_citation_fixture() {
    let patents = vec![
        patent("P1", "US1", "2018-01-01", &["G06N3/08"], &["U"]),
        patent("P2", "US2", "2018-01-01", &["G06N3/08"], &["U"]),
        patent("P3", "CN1", "2018-01-01", &["G06N3/08"], &["C"]),
        patent("P4", "CN2", "2018-01-01", &["G06N3/08"], &["C"]),
        patent("P5", "CN3", "2018-01-01", &["G06N3/08"], &["C"]),
        patent("P6", "DE1", "2018-01-01", &["G06N3/08"], &["D"]),
    ];
    let applicants = vec![applicant("U", "US", None), applicant("C", "CN", None), applicant("D", "DE", None)];
    let citations = vec![
        cite("US1", "US2", "U", Some("2020-01-01")),
        cite("US1", "CN1", "U", Some("2020-01-01")),
        cite("CN2", "CN1", "C", Some("2020-01-01")),
        cite("CN3", "CN1", "C", Some("2020-01-01")),
        cite("DE1", "US2", "D", Some("2020-01-01")),
    ];
    let c = linked(patents, applicants, citations);
    let axis: Vec<String> = ["US", "CN", "EU"].iter().map(|s| s.to_string()).collect();
    let m = citation_matrix(&c, &axis, Grouping::Applicant).unwrap();
    assert_eq!(m.counts, vec![vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 0.0], vec![1.0, 0.0, 0.0]]);
    assert_eq!(m.total(), 5.0);
    assert_eq!(foreign_citation_share(&m, "US").unwrap(), 0.5);
    assert_eq!(foreign_citation_share(&m, "CN").unwrap(), 0.0);
    assert!(matches!(
        citation_matrix(&c, &["XX".to_string()], Grouping::Applicant),
        Err(Error::UnknownCountries(_))
    ));
}

#[test]
fn single_edge_and_self_citation() {
    let patents = vec![
        patent("P1", "A1", "2018-01-01", &["G06N3/08"], &["U"]),
        patent("P2", "B1", "2018-01-01", &["G06N3/08"], &["C"]),
    ];
    let applicants = vec![applicant("U", "US", None), applicant("C", "CN", None)];
    let axis: Vec<String> = ["US", "CN"].iter().map(|s| s.to_string()).collect();

    let one = linked(patents.clone(), applicants.clone(), vec![cite("A1", "B1", "U", None)]);
    let m = citation_matrix(&one, &axis, Grouping::Applicant).unwrap();
    assert_eq!(m.counts, vec![vec![0.0, 1.0], vec![0.0, 0.0]]);

    let own = linked(patents, applicants, vec![cite("B1", "B1", "C", None)]);
    let m = citation_matrix(&own, &axis, Grouping::Applicant).unwrap();
    assert_eq!(m.counts, vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn rca_errors_name_the_zero_count() {
    let zero = CountryPatentCounts {
        holder: "US".into(),
        ai_count: 1.0,
        total_count: 0.0,
    };
    let world = CountryPatentCounts {
        holder: "WORLD".into(),
        ai_count: 10.0,
        total_count: 100.0,
    };
    assert!(rca(&zero, &world).unwrap_err().to_string().contains("country total_count"));
}
