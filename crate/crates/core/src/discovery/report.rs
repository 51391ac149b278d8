use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::hypothesis::{Feature, FeatureKind, SlotLayout};
use super::{Encoding, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureConfidence {
    pub feature: Feature,
    /// Positive supports presence; `±∞` only arises from hard constraints.
    pub score: f64,
}

/// Extended reals as JSON: finite numbers, or the strings `"inf"` / `"-inf"`.
pub mod extended {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *x == f64::INFINITY {
            s.serialize_str("inf")
        } else if *x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }

    /// Text form used in CSV files.
    pub fn format(x: f64) -> String {
        if x == f64::INFINITY {
            "inf".into()
        } else if x == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{x:?}")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub kind: FeatureKind,
    pub from: String,
    pub to: String,
    #[serde(with = "extended")]
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub directed: Vec<[String; 2]>,
    pub bidirected: Vec<[String; 2]>,
}

/// Output of `discover`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub nodes: Vec<String>,
    pub encoding: Encoding,
    #[serde(with = "extended")]
    pub best_loss: f64,
    pub argmin_count: u64,
    pub features: Vec<FeatureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub argmin: Vec<GraphEntry>,
}

impl Report {
    /// Assemble a report; `show` limits how many minimisers are listed.
    pub fn new(
        nodes: &[String],
        encoding: Encoding,
        result: &SolveResult,
        features: &[FeatureConfidence],
        show: usize,
    ) -> Report {
        let layout = SlotLayout::new(nodes.len());
        let name = |f: &Feature| [nodes[f.from.0].clone(), nodes[f.to.0].clone()];
        let argmin = result
            .argmin
            .iter()
            .take(show)
            .map(|&code| {
                let mut g = GraphEntry { directed: Vec::new(), bidirected: Vec::new() };
                for (s, f) in layout.features().iter().enumerate() {
                    if code >> s & 1 == 1 {
                        match f.kind {
                            FeatureKind::Directed => g.directed.push(name(f)),
                            FeatureKind::Bidirected => g.bidirected.push(name(f)),
                        }
                    }
                }
                g
            })
            .collect();
        Report {
            nodes: nodes.to_vec(),
            encoding,
            best_loss: result.best_loss,
            argmin_count: result.argmin_count,
            features: features
                .iter()
                .map(|fc| {
                    let [from, to] = name(&fc.feature);
                    FeatureEntry { kind: fc.feature.kind, from, to, score: fc.score }
                })
                .collect(),
            argmin,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinities_round_trip() {
        let e = FeatureEntry { kind: FeatureKind::Directed, from: "a".into(), to: "b".into(), score: f64::NEG_INFINITY };
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"-inf\""));
        assert_eq!(serde_json::from_str::<FeatureEntry>(&text).unwrap(), e);
        let f = FeatureEntry { score: 1.5, ..e };
        assert_eq!(serde_json::from_str::<FeatureEntry>(&serde_json::to_string(&f).unwrap()).unwrap(), f);
    }
}
