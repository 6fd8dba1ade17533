//! Library results checked against direct, unoptimized recomputations.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use semsim::similarity::{soft_cosine, sparse_cosine, TermSimilarityMatrix};
use semsim::tfidf::{SparseVector, TfIdfModel};
use semsim::{cosine, DfPruning, TfIdfConfig, Token};

fn tokens(ids: &[u8]) -> Vec<Token> {
    ids.iter()
        .map(|&i| Token::new(format!("w{}", (b'a' + i) as char)).unwrap())
        .collect()
}

/// tf-idf straight from the definition, keyed by term.
fn tfidf_oracle(
    docs: &[Vec<Token>],
    smoothing: bool,
    normalize: bool,
) -> Vec<BTreeMap<String, f64>> {
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for d in docs {
        let seen: BTreeSet<&str> = d.iter().map(Token::as_str).collect();
        for t in seen {
            *df.entry(t).or_default() += 1.0;
        }
    }
    docs.iter()
        .map(|d| {
            let mut w: BTreeMap<String, f64> = BTreeMap::new();
            for t in d {
                let f = df[t.as_str()];
                let idf = if smoothing {
                    ((1.0 + n) / (1.0 + f)).ln() + 1.0
                } else {
                    (n / f).ln()
                };
                *w.entry(t.as_str().to_string()).or_default() += idf;
            }
            if normalize {
                let norm = w.values().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    w.values_mut().for_each(|x| *x /= norm);
                }
            }
            w
        })
        .collect()
}

fn soft_oracle(a: &[f64], b: &[f64], s: &[Vec<f64>]) -> f64 {
    let form = |x: &[f64], y: &[f64]| {
        let mut acc = 0.0;
        for i in 0..x.len() {
            for j in 0..y.len() {
                acc += x[i] * s[i][j] * y[j];
            }
        }
        acc
    };
    let (aa, bb) = (form(a, a), form(b, b));
    if aa <= 1e-12 || bb <= 1e-12 {
        return 0.0;
    }
    (form(a, b) / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

fn corpus() -> impl Strategy<Value = Vec<Vec<Token>>> {
    prop::collection::vec(prop::collection::vec(0u8..20, 1..12), 1..=10)
        .prop_map(|docs| docs.iter().map(|d| tokens(d)).collect())
}

fn dense(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![2 => Just(0.0), 3 => 0.0f64..4.0], dim)
}

fn term_pairs(v: usize) -> impl Strategy<Value = Vec<(u32, u32, f64)>> {
    prop::collection::vec((0..v as u32, 0..v as u32, 0.0f64..=1.0), 0..(v * 2))
        .prop_map(|es| es.into_iter().filter(|&(i, j, _)| i < j).collect())
}

fn dedup_pairs(entries: Vec<(u32, u32, f64)>) -> Vec<(u32, u32, f64)> {
    let mut seen = BTreeMap::new();
    for (i, j, s) in entries {
        seen.entry((i, j)).or_insert(s);
    }
    seen.into_iter().map(|((i, j), s)| (i, j, s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tfidf_matches_definition(docs in corpus(), smoothing: bool, normalize: bool) {
        let config = TfIdfConfig { smoothing, normalize, pruning: DfPruning::default() };
        let model = TfIdfModel::<f64>::fit(&docs, config).unwrap();
        let expected = tfidf_oracle(&docs, smoothing, normalize);
        for (doc, want) in docs.iter().zip(&expected) {
            let got = model.transform(doc);
            for term in model.vocabulary().terms() {
                let id = model.vocabulary().id(term).unwrap();
                let w = want.get(term).copied().unwrap_or(0.0);
                prop_assert!((got.get(id) - w).abs() <= 1e-9, "{term}: {} vs {w}", got.get(id));
            }
        }
    }

    #[test]
    fn soft_cosine_matches_double_loop(
        (a, b, entries) in (1usize..=30).prop_flat_map(|v| (dense(v), dense(v), term_pairs(v)))
    ) {
        let v = a.len();
        let s = TermSimilarityMatrix::from_entries(v, dedup_pairs(entries)).unwrap();
        let got = soft_cosine(&SparseVector::from_dense(&a), &SparseVector::from_dense(&b), &s).unwrap();
        let want = soft_oracle(&a, &b, &s.to_dense());
        prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }

    #[test]
    fn identity_soft_cosine_is_cosine((a, b) in (1usize..=50).prop_flat_map(|d| (dense(d), dense(d)))) {
        let (sa, sb) = (SparseVector::from_dense(&a), SparseVector::from_dense(&b));
        let s = TermSimilarityMatrix::identity(a.len());
        let soft = soft_cosine(&sa, &sb, &s).unwrap();
        let plain = sparse_cosine(&sa, &sb).unwrap();
        prop_assert!((soft - plain).abs() <= 1e-12);
        prop_assert!((plain - cosine(&a, &b).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn cosine_properties(
        (a, b) in (1usize..=40).prop_flat_map(|d| {
            (prop::collection::vec(-10.0f64..10.0, d), prop::collection::vec(-10.0f64..10.0, d))
        }),
        lambda in 0.01f64..100.0,
    ) {
        let c = cosine(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert!((c - cosine(&b, &a).unwrap()).abs() <= 1e-9);
        let scaled: Vec<f64> = a.iter().map(|x| x * lambda).collect();
        prop_assert!((c - cosine(&scaled, &b).unwrap()).abs() <= 1e-9);
        prop_assert_eq!(cosine(&vec![0.0; a.len()], &b).unwrap(), 0.0);
    }
}

#[test]
fn hand_computed_tfidf() {
    // N = 2; "wa" in both docs, "wb" only in the first.
    // smoothed idf: wa = ln(3/3)+1 = 1, wb = ln(3/2)+1.
    let docs = vec![tokens(&[0, 1, 1]), tokens(&[0])];
    let model = TfIdfModel::<f64>::fit(
        &docs,
        TfIdfConfig {
            normalize: false,
            ..TfIdfConfig::default()
        },
    )
    .unwrap();
    let v = model.transform(&docs[0]);
    assert!((v.get(0) - 1.0).abs() < 1e-15);
    assert!((v.get(1) - 2.0 * (1.5f64.ln() + 1.0)).abs() < 1e-15);
}

#[test]
fn hand_computed_soft_cosine() {
    // a = e0, b = e1, s01 = 0.5: a^T S b = 0.5, both radicands 1.
    let s = TermSimilarityMatrix::from_entries(2, [(0, 1, 0.5)]).unwrap();
    let a = SparseVector::new(2, vec![(0, 1.0)]).unwrap();
    let b = SparseVector::new(2, vec![(1, 1.0)]).unwrap();
    assert_eq!(soft_cosine(&a, &b, &s).unwrap(), 0.5);
}
