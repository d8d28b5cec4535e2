//! Routing of incoming names and model-based prediction for ambiguous ones.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorId, BibRecord};
use crate::encoders::{assemble_features, Encoders, FeatureVectorPair};
use crate::error::{Error, Result};
use crate::names::{atomic_variate, normalize_name, AuthorRegistry};
use crate::neural::{stack, Network};
use crate::pipeline::{first_name_form, name_form, VariateMode};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Route {
    /// No registered author carries the name.
    New,
    /// Exactly one does; no model is needed.
    Unique(AuthorId),
    Ambiguous {
        variate_key: String,
        candidates: usize,
    },
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Route::New => f.write_str("NEW"),
            Route::Unique(id) => write!(f, "UNIQUE\t{id}"),
            Route::Ambiguous {
                variate_key,
                candidates,
            } => write!(f, "AMBIGUOUS\t{variate_key}\t{candidates}"),
        }
    }
}

pub fn route_name(registry: &AuthorRegistry, raw_name: &str) -> Route {
    let ra = registry.resolve(raw_name);
    match ra.count {
        0 => Route::New,
        1 => Route::Unique(ra.candidates.into_iter().next().expect("one candidate")),
        n => Route::Ambiguous {
            variate_key: normalize_name(raw_name)
                .map(|name| atomic_variate(&name).render())
                .unwrap_or_default(),
            candidates: n,
        },
    }
}

/// How per-pair probability vectors are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    /// Element-wise sum.
    #[default]
    Sum,
    /// Element-wise maximum.
    Max,
}

impl FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Aggregation::Sum),
            "max" => Ok(Aggregation::Max),
            _ => Err(Error::Config(format!("unknown aggregation `{s}`"))),
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn by_value<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Combines the rows of `probs` (one per pair) into one score per class.
///
/// Each column is summed in ascending order, so the result does not depend
/// on the order in which pairs were produced.
pub fn aggregate<T: Real>(probs: &Array2<T>, aggregation: Aggregation) -> Vec<T> {
    probs
        .columns()
        .into_iter()
        .map(|col| {
            let mut values = col.to_vec();
            values.sort_by(by_value);
            match aggregation {
                Aggregation::Sum => values.iter().fold(T::zero(), |acc, &v| acc + v),
                Aggregation::Max => values.last().copied().unwrap_or_else(T::zero),
            }
        })
        .collect()
}

/// The prediction pool: the record's author names plus the target once more.
pub fn prediction_pool(record: &BibRecord, target_name: &str, mode: VariateMode) -> Vec<String> {
    let mut pool: Vec<String> = record
        .authors
        .iter()
        .map(|m| name_form(&m.author_id.base_name, mode))
        .collect();
    pool.push(name_form(&AuthorId::parse(target_name).base_name, mode));
    pool
}

/// Every unordered pair `(i, k)`, `i < k`, of pool positions.
pub fn pool_pairs(pool_size: usize) -> Vec<(usize, usize)> {
    (0..pool_size)
        .flat_map(|i| (i + 1..pool_size).map(move |k| (i, k)))
        .collect()
}

/// Feature pairs fed to the model, one per pool pair.
pub fn prediction_samples<T: Real>(
    record: &BibRecord,
    target_name: &str,
    mode: VariateMode,
    encoders: &Encoders<T>,
) -> Vec<FeatureVectorPair<T>> {
    let pool = prediction_pool(record, target_name, mode);
    let first = first_name_form(&AuthorId::parse(target_name).base_name, mode);
    pool_pairs(pool.len())
        .into_iter()
        .map(|(i, k)| {
            assemble_features(
                &first,
                &pool[i],
                &pool[k],
                &record.title,
                &record.source,
                encoders.name.as_ref(),
                encoders.text.as_ref(),
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub target_name: String,
    pub pool: Vec<String>,
    /// Number of samples scored, C(ω* + 1, 2).
    pub pair_count: usize,
    /// Aggregated score per class.
    pub scores: Vec<T>,
    /// Classes by non-increasing score, ties by class index.
    pub ranked: Vec<(usize, T)>,
    pub chosen: usize,
    pub author: AuthorId,
}

impl<T: Real> Prediction<T> {
    /// One tab-separated line: target, chosen author, pair count, pool, then
    /// up to `top_k` `author=score` pairs.
    pub fn write_record<W: Write>(&self, classes: &[AuthorId], top_k: usize, out: &mut W) -> std::io::Result<()> {
        let top: Vec<String> = self
            .ranked
            .iter()
            .take(top_k)
            .map(|(c, s)| format!("{}={:.6}", classes[*c], s))
            .collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            self.target_name,
            self.author,
            self.pair_count,
            self.pool.join("; "),
            top.join("; ")
        )
    }
}

/// Predicts which of `classes` the name `target_name` in `record` refers to.
pub fn predict_author<T: Real>(
    network: &Network<T>,
    classes: &[AuthorId],
    record: &BibRecord,
    target_name: &str,
    mode: VariateMode,
    encoders: &Encoders<T>,
    aggregation: Aggregation,
) -> Result<Prediction<T>> {
    if classes.len() != network.n_classes() {
        return Err(Error::ModelMismatch(format!(
            "class index has {} authors, model has {} outputs",
            classes.len(),
            network.n_classes()
        )));
    }
    if record.authors.is_empty() {
        return Err(Error::InvalidRecord {
            key: record.record_key.clone(),
            message: "no authors".into(),
        });
    }
    let samples = prediction_samples(record, target_name, mode, encoders);
    let refs: Vec<&FeatureVectorPair<T>> = samples.iter().collect();
    let (x1, x2) = stack(&refs);
    let probs = network.predict_batch(x1.view(), x2.view())?;
    let scores = aggregate(&probs, aggregation);
    let chosen = argmax(&scores);
    let mut ranked: Vec<(usize, T)> = scores.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| by_value(&b.1, &a.1).then(a.0.cmp(&b.0)));
    Ok(Prediction {
        target_name: target_name.to_string(),
        pool: prediction_pool(record, target_name, mode),
        pair_count: samples.len(),
        scores,
        ranked,
        chosen,
        author: classes[chosen].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorMention, RecordKind};
    use crate::names::build_author_registry;
    use crate::neural::ModelConfig;
    use ndarray::array;
    use proptest::prelude::*;

    fn record(key: &str, names: &[&str]) -> BibRecord {
        BibRecord {
            record_key: key.into(),
            kind: RecordKind::Inproceedings,
            title: "Graph learning".into(),
            source: "Conf".into(),
            year: None,
            authors: names.iter().map(|n| AuthorMention::parse(n)).collect(),
        }
    }

    fn small_encoders() -> Encoders<f64> {
        Encoders::new(
            Box::new(crate::encoders::HashedNameEncoder::new(8)),
            Box::new(crate::encoders::HashedTextEncoder::new(6)),
        )
    }

    fn small_network(classes: usize, seed: u64) -> Network<f64> {
        let config = ModelConfig {
            x1_dim: 16,
            x2_dim: 6,
            branch1_hidden: vec![5],
            branch2_hidden: vec![4],
            merged_hidden: vec![6],
            n_classes: classes,
            dropout_rate: 0.5,
            dropout_branches: false,
            seed,
        };
        Network::init(config).unwrap()
    }

    #[test]
    fn routing() {
        let corpus = vec![
            record("a", &["Bing Li 0001", "Wei Zhang"]),
            record("b", &["Bing Li 0002"]),
        ];
        let reg = build_author_registry(&corpus);
        assert_eq!(route_name(&reg, "Nobody Here"), Route::New);
        assert_eq!(
            route_name(&reg, "Wei Zhang"),
            Route::Unique(AuthorId::new("Wei Zhang", 0))
        );
        assert_eq!(
            route_name(&reg, "Bing Li"),
            Route::Ambiguous {
                variate_key: "B Li".into(),
                candidates: 2
            }
        );
        assert_eq!(route_name(&reg, "Bing Li").to_string(), "AMBIGUOUS\tB Li\t2");
    }

    #[test]
    fn sum_then_argmax() {
        let probs: Array2<f64> = array![[0.2, 0.8], [0.6, 0.4]];
        let s = aggregate(&probs, Aggregation::Sum);
        assert!((s[0] - 0.8).abs() < 1e-15 && (s[1] - 1.2).abs() < 1e-15);
        assert_eq!(argmax(&s), 1);
        assert_eq!(aggregate(&probs, Aggregation::Max), vec![0.6, 0.8]);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn pool_repeats_target() {
        let rec = record("k", &["Yi Chen 0003", "Ann Bo", "Cy Dee"]);
        let pool = prediction_pool(&rec, "Yi Chen 0003", VariateMode::Full);
        assert_eq!(pool, ["Yi Chen", "Ann Bo", "Cy Dee", "Yi Chen"]);
        let pool = prediction_pool(&rec, "Yi Chen", VariateMode::Anv);
        assert_eq!(pool, ["Y Chen", "A Bo", "C Dee", "Y Chen"]);
        assert_eq!(pool_pairs(4).len(), 6);
    }

    #[test]
    fn three_authors_six_passes() {
        let rec = record("k", &["Yi Chen", "Ann Bo", "Cy Dee"]);
        let net = small_network(3, 1);
        let classes: Vec<AuthorId> = (1..=3).map(|i| AuthorId::new("Yi Chen", i)).collect();
        let p = predict_author(
            &net,
            &classes,
            &rec,
            "Yi Chen",
            VariateMode::Full,
            &small_encoders(),
            Aggregation::Sum,
        )
        .unwrap();
        assert_eq!(p.pair_count, 6);
        assert_eq!(p.author, classes[p.chosen]);
        assert!(p.ranked.windows(2).all(|w| w[0].1 >= w[1].1));
        let total: f64 = p.scores.iter().sum();
        assert!((total - 6.0).abs() < 1e-9);
    }

    #[test]
    fn class_index_mismatch() {
        let rec = record("k", &["Yi Chen"]);
        let net = small_network(3, 1);
        let classes = vec![AuthorId::new("Yi Chen", 1)];
        assert!(matches!(
            predict_author(
                &net,
                &classes,
                &rec,
                "Yi Chen",
                VariateMode::Full,
                &small_encoders(),
                Aggregation::Sum
            ),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn record_line() {
        let rec = record("k", &["Yi Chen", "Ann Bo"]);
        let net = small_network(2, 4);
        let classes = vec![AuthorId::new("Yi Chen", 1), AuthorId::new("Yi Chen", 2)];
        let p = predict_author(
            &net,
            &classes,
            &rec,
            "Yi Chen",
            VariateMode::Anv,
            &small_encoders(),
            Aggregation::Max,
        )
        .unwrap();
        let mut out = Vec::new();
        p.write_record(&classes, 1, &mut out).unwrap();
        let line = String::from_utf8(out).unwrap();
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        assert_eq!(fields[0], "Yi Chen");
        assert_eq!(fields[2], "3");
        assert_eq!(fields[3], "Y Chen; A Bo; Y Chen");
    }

    proptest! {
        #[test]
        fn aggregation_ignores_pair_order(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 1..12), seed in any::<u64>()) {
            let n = rows.len();
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let a = Array2::from_shape_vec((n, 4), flat).unwrap();
            let mut order: Vec<usize> = (0..n).collect();
            use rand::seq::SliceRandom;
            order.shuffle(&mut crate::seed::rng(seed, "perm"));
            let b = a.select(ndarray::Axis(0), &order);
            for agg in [Aggregation::Sum, Aggregation::Max] {
                prop_assert_eq!(aggregate(&a, agg), aggregate(&b, agg));
            }
        }

        #[test]
        fn scaling_keeps_the_choice(rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 1..10), scale in 0.1f64..10.0) {
            let n = rows.len();
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let a = Array2::from_shape_vec((n, 3), flat).unwrap();
            let scaled = a.mapv(|v| v * scale);
            let s1 = aggregate(&a, Aggregation::Sum);
            let s2 = aggregate(&scaled, Aggregation::Sum);
            // Only exact ties may be broken differently after rounding.
            let top = s1.iter().cloned().fold(f64::MIN, f64::max);
            let near_tie = s1.iter().filter(|&&v| (top - v).abs() <= 1e-12 * top).count() > 1;
            if !near_tie {
                prop_assert_eq!(argmax(&s1), argmax(&s2));
            }
        }

        #[test]
        fn pair_count_law(omega in 1usize..9) {
            let names: Vec<String> = (0..omega).map(|i| format!("Au{i} Thor{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let rec = record("k", &refs);
            let samples = prediction_samples(&rec, &names[0], VariateMode::Full, &small_encoders());
            prop_assert_eq!(samples.len(), (omega + 1) * omega / 2);
        }
    }
}
