use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scored candidate fact for triple classification.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredTriple {
    pub relation: usize,
    pub score: f64,
    pub label: bool,
}

/// Decision thresholds: predict true iff `score > threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(with = "extended::map")]
    pub per_relation: BTreeMap<usize, f64>,
    #[serde(with = "extended")]
    pub global: f64,
}

/// JSON has no infinities; they are written as the strings `"inf"` and
/// `"-inf"`.
mod extended {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(x: f64) -> Repr {
        if x == f64::INFINITY {
            Repr::Text("inf".into())
        } else if x == f64::NEG_INFINITY {
            Repr::Text("-inf".into())
        } else {
            Repr::Num(x)
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("invalid threshold `{other}`"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod map {
        use super::*;

        pub fn serialize<S: Serializer>(m: &BTreeMap<usize, f64>, s: S) -> Result<S::Ok, S::Error> {
            let r: BTreeMap<usize, Repr> = m.iter().map(|(&k, &v)| (k, to_repr(v))).collect();
            r.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, f64>, D::Error> {
            BTreeMap::<usize, Repr>::deserialize(d)?
                .into_iter()
                .map(|(k, v)| Ok((k, from_repr::<D::Error>(v)?)))
                .collect()
        }
    }
}

impl Thresholds {
    pub fn threshold(&self, relation: usize) -> f64 {
        self.per_relation.get(&relation).copied().unwrap_or(self.global)
    }

    pub fn predict(&self, t: &ScoredTriple) -> bool {
        t.score > self.threshold(t.relation)
    }
}

fn accuracy_at(items: &[&ScoredTriple], th: f64) -> usize {
    items.iter().filter(|t| (t.score > th) == t.label).count()
}

/// Threshold maximizing accuracy on `items`; candidates are `-inf`, the
/// midpoints between consecutive distinct scores, and `+inf`. Ties go to
/// the smallest candidate.
pub fn best_threshold(items: &[&ScoredTriple]) -> f64 {
    let mut scores: Vec<f64> = items.iter().map(|t| t.score).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut candidates = vec![f64::NEG_INFINITY];
    candidates.extend(scores.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(f64::INFINITY);
    let mut best = (accuracy_at(items, f64::NEG_INFINITY), f64::NEG_INFINITY);
    for c in candidates.into_iter().skip(1) {
        let acc = accuracy_at(items, c);
        if acc > best.0 {
            best = (acc, c);
        }
    }
    best.1
}

/// Per-relation thresholds fitted on validation triples, with a global
/// threshold for relations absent from validation.
pub fn fit_thresholds(valid: &[ScoredTriple]) -> Result<Thresholds> {
    if valid.is_empty() {
        return Err(Error::InvalidArgument("no validation triples".into()));
    }
    let all: Vec<&ScoredTriple> = valid.iter().collect();
    let mut by_rel: BTreeMap<usize, Vec<&ScoredTriple>> = BTreeMap::new();
    for t in valid {
        by_rel.entry(t.relation).or_default().push(t);
    }
    Ok(Thresholds {
        per_relation: by_rel.iter().map(|(&r, ts)| (r, best_threshold(ts))).collect(),
        global: best_threshold(&all),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub thresholds: Thresholds,
}

/// Fits thresholds on `valid` and reports accuracy on `test`.
pub fn classify_triples(valid: &[ScoredTriple], test: &[ScoredTriple]) -> Result<ClassificationResult> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("no test triples".into()));
    }
    let thresholds = fit_thresholds(valid)?;
    let correct = test.iter().filter(|t| thresholds.predict(t) == t.label).count();
    Ok(ClassificationResult {
        accuracy: correct as f64 / test.len() as f64,
        correct,
        total: test.len(),
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(relation: usize, score: f64, label: bool) -> ScoredTriple {
        ScoredTriple { relation, score, label }
    }

    #[test]
    fn separated_scores_classify_perfectly() {
        let v = [t(0, 0.9, true), t(0, 0.8, true), t(0, 0.2, false), t(1, 0.1, true), t(1, 0.05, false)];
        let r = classify_triples(&v, &v).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!((r.thresholds.threshold(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_scores_give_majority_rate() {
        let v = [t(0, 0.5, true), t(0, 0.5, true), t(0, 0.5, false)];
        let r = classify_triples(&v, &v).unwrap();
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-12);
        let v = [t(0, 0.5, false), t(0, 0.5, false), t(0, 0.5, true)];
        assert!((classify_triples(&v, &v).unwrap().accuracy - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_relation_uses_global_threshold() {
        let v = [t(0, 0.9, true), t(0, 0.1, false)];
        let th = fit_thresholds(&v).unwrap();
        assert_eq!(th.threshold(7), th.global);
        assert!(th.predict(&t(7, 0.95, true)));
    }

    #[test]
    fn infinite_thresholds_round_trip() {
        let th = Thresholds {
            per_relation: [(0, f64::NEG_INFINITY), (1, 0.25), (2, f64::INFINITY)].into_iter().collect(),
            global: f64::NEG_INFINITY,
        };
        let json = serde_json::to_string(&th).unwrap();
        assert!(json.contains("\"-inf\""));
        let back: Thresholds = serde_json::from_str(&json).unwrap();
        assert_eq!(back, th);
    }
}
