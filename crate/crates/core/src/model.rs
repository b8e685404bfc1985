//! A trained classifier and its JSON file format.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{param_count, CircuitSpec, DataPoint, ModelParams, ParamCount};
use crate::error::{Error, Result};
use crate::objective::{label_states, predict_with_score, CostKind, LabelSet, ObjectiveConfig, Strategy};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: CircuitSpec,
    pub params: ModelParams,
    pub objective: ObjectiveConfig,
    pub num_classes: usize,
    /// Seed the parameters were initialized from.
    pub seed: u64,
    labels: LabelSet,
}

impl Model {
    pub fn new(
        spec: CircuitSpec,
        params: ModelParams,
        objective: ObjectiveConfig,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        objective.validate(spec.qubits, num_classes)?;
        params.check_shape(&spec, objective.alpha_len(num_classes))?;
        let labels = label_states(num_classes, spec.qubits, objective.strategy)?;
        Ok(Self {
            spec,
            params,
            objective,
            num_classes,
            seed,
            labels,
        })
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn param_count(&self) -> ParamCount {
        let measured = match self.objective.strategy {
            Strategy::BasisState => 1,
            Strategy::MeasuredQubits => self.objective.measured_qubits.len(),
        };
        param_count(&self.spec, self.objective.cost_kind, self.num_classes, measured)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(self.predict_with_score(x)?.0)
    }

    /// Predicted class and its score (the largest class score).
    pub fn predict_with_score(&self, x: &[f64]) -> Result<(usize, f64)> {
        match &self.objective.thresholds {
            Some(t) => {
                let c = crate::objective::predict_threshold(&self.spec, &self.params, x, t)?;
                let p0 = crate::circuit::forward(&self.spec, &self.params, x)?.prob_zero();
                Ok((c, p0))
            }
            None => predict_with_score(&self.spec, &self.params, x, &self.labels, &self.objective),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile::from_model(self);
        serde_json::to_string_pretty(&file).map_err(|e| Error::parse("model", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse("model", e))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::parse("model", "missing format_version"))?;
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::parse("model", e))?;
        file.into_model()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }
}

/// Fraction of `data` whose predicted class equals the stored class.
pub fn success_rate(model: &Model, data: &[DataPoint]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("success rate of an empty dataset"));
    }
    let hits = data
        .par_iter()
        .map(|p| Ok(usize::from(model.predict(&p.x)? == p.class_index)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}

type Tensor = Vec<Vec<Vec<[f64; 3]>>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    spec: CircuitSpec,
    cost_kind: CostKind,
    strategy: Strategy,
    measured_qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<Vec<f64>>,
    num_classes: usize,
    seed: u64,
    /// `[qubit][layer][sublayer][component]`
    theta: Tensor,
    weights: Tensor,
    alpha: Vec<f64>,
}

fn nest(spec: &CircuitSpec, flat: &[f64]) -> Tensor {
    (0..spec.qubits)
        .map(|q| {
            (0..spec.layers)
                .map(|l| {
                    (0..spec.sublayers())
                        .map(|s| {
                            let i = spec.index(q, l, s, 0);
                            [flat[i], flat[i + 1], flat[i + 2]]
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn flatten(spec: &CircuitSpec, t: &Tensor, name: &str) -> Result<Vec<f64>> {
    let shape_ok = t.len() == spec.qubits
        && t.iter()
            .all(|q| q.len() == spec.layers && q.iter().all(|l| l.len() == spec.sublayers()));
    if !shape_ok {
        return Err(Error::parse(
            "model",
            format!(
                "{name} tensor shape does not match [{}][{}][{}][3]",
                spec.qubits,
                spec.layers,
                spec.sublayers()
            ),
        ));
    }
    Ok(t.iter().flatten().flatten().flatten().copied().collect())
}

impl ModelFile {
    fn from_model(m: &Model) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            spec: m.spec,
            cost_kind: m.objective.cost_kind,
            strategy: m.objective.strategy,
            measured_qubits: m.objective.measured_qubits.clone(),
            thresholds: m.objective.thresholds.clone(),
            num_classes: m.num_classes,
            seed: m.seed,
            theta: nest(&m.spec, &m.params.theta),
            weights: nest(&m.spec, &m.params.weights),
            alpha: m.params.alpha.clone(),
        }
    }

    fn into_model(self) -> Result<Model> {
        self.spec.validate()?;
        let params = ModelParams {
            theta: flatten(&self.spec, &self.theta, "theta")?,
            weights: flatten(&self.spec, &self.weights, "weights")?,
            alpha: self.alpha,
        };
        let objective = ObjectiveConfig {
            cost_kind: self.cost_kind,
            strategy: self.strategy,
            measured_qubits: self.measured_qubits,
            thresholds: self.thresholds,
        };
        Model::new(self.spec, params, objective, self.num_classes, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::forward;

    fn sample_model() -> Model {
        let spec = CircuitSpec::new(2, 3, true, 4).unwrap();
        let objective = ObjectiveConfig::new(CostKind::WeightedFidelity, 2);
        let params = ModelParams::random(&spec, objective.alpha_len(4), 21);
        Model::new(spec, params, objective, 4, 21).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = sample_model();
        let back = Model::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let x = [0.1, 0.2, -0.3, 0.4];
        let a = forward(&m.spec, &m.params, &x).unwrap();
        let b = forward(&back.spec, &back.params, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nested_index_order() {
        let m = sample_model();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        let got = v["theta"][1][2][1][0].as_f64().unwrap();
        assert_eq!(got, m.params.theta[m.spec.index(1, 2, 1, 0)]);
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = sample_model()
            .to_json()
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 7");
        match Model::from_json(&text) {
            Err(Error::VersionMismatch { found: 7, expected: 1 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn corrupted_file_is_a_parse_error() {
        let text = sample_model().to_json().unwrap();
        assert!(matches!(
            Model::from_json(&text[..text.len() / 2]),
            Err(Error::Parse { .. })
        ));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let mut broken = v.clone();
        broken["theta"][0].as_array_mut().unwrap().pop();
        assert!(matches!(
            Model::from_json(&broken.to_string()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn success_rate_examples() {
        let spec = CircuitSpec::new(1, 1, false, 2).unwrap();
        let objective = ObjectiveConfig::new(CostKind::Fidelity, 1);
        // constant classifier outputting |0⟩
        let m = Model::new(spec, ModelParams::zeros(&spec, 0), objective, 2, 0).unwrap();
        let pts = |classes: &[usize]| -> Vec<DataPoint> {
            classes
                .iter()
                .map(|&c| DataPoint {
                    x: vec![0.3, -0.1],
                    class_index: c,
                })
                .collect()
        };
        assert_eq!(success_rate(&m, &pts(&[0, 0, 0])).unwrap(), 1.0);
        assert!((success_rate(&m, &pts(&[0, 1, 0])).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(success_rate(&m, &[]).is_err());
    }

    #[test]
    fn param_count_reflects_readout() {
        assert_eq!(
            sample_model().param_count(),
            ParamCount {
                core: 2 * 3 * 10,
                alpha: 8
            }
        );
    }
}
