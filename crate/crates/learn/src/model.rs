//! Versioned JSON model files tied to a feature schema.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::forest::RandomForest;
use crate::LearnError;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// SHA-256 over the feature names, each terminated by a newline.
pub fn schema_hash<S: AsRef<str>>(names: &[S]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_ref().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub schema_hash: String,
    pub feature_names: Vec<String>,
    pub forest: RandomForest,
    /// Free-form provenance (run configuration, input hashes).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub provenance: serde_json::Value,
}

impl Model {
    pub fn new(feature_names: Vec<String>, forest: RandomForest) -> Result<Self, LearnError> {
        if feature_names.len() != forest.n_features {
            return Err(LearnError::SchemaMismatch {
                expected: format!("{} features", forest.n_features),
                found: format!("{} names", feature_names.len()),
            });
        }
        Ok(Model {
            format_version: MODEL_FORMAT_VERSION,
            schema_hash: schema_hash(&feature_names),
            feature_names,
            forest,
            provenance: serde_json::Value::Null,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let h: Header = serde_json::from_str(text).map_err(|e| LearnError::Json(e.to_string()))?;
        if h.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnError::UnsupportedVersion(h.format_version));
        }
        let m: Model = serde_json::from_str(text).map_err(|e| LearnError::Json(e.to_string()))?;
        if m.schema_hash != schema_hash(&m.feature_names) {
            return Err(LearnError::Json("schema hash does not match feature names".into()));
        }
        if m.feature_names.len() != m.forest.n_features {
            return Err(LearnError::Json("feature name count does not match the forest".into()));
        }
        m.forest.validate()?;
        Ok(m)
    }

    /// Predicts rows laid out by `names`; refuses when the schema differs
    /// from the one the model was trained on.
    pub fn predict<S: AsRef<str>>(&self, names: &[S], x: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        let found = schema_hash(names);
        if found != self.schema_hash {
            return Err(LearnError::SchemaMismatch { expected: self.schema_hash.clone(), found });
        }
        self.forest.predict_all(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{fit_forest, Hyperparams};

    fn model() -> Model {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let hp = Hyperparams { n_trees: 3, ..Hyperparams::default() };
        Model::new(vec!["a".into(), "b".into()], fit_forest(&x, &y, &hp, 1).unwrap()).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let back = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), m.to_json());
    }

    #[test]
    fn schema_mismatch_is_refused() {
        let m = model();
        let x = vec![vec![3.0, 1.0]];
        assert!(m.predict(&["a", "b"], &x).is_ok());
        assert!(matches!(m.predict(&["b", "a"], &x), Err(LearnError::SchemaMismatch { .. })));
        assert!(matches!(m.predict(&["a"], &x), Err(LearnError::SchemaMismatch { .. })));
    }

    #[test]
    fn hash_separates_names() {
        assert_ne!(schema_hash(&["ab", "c"]), schema_hash(&["a", "bc"]));
        assert_eq!(schema_hash::<&str>(&[]), hex::encode(Sha256::digest(b"")));
    }

    #[test]
    fn rejects_other_versions_and_tampering() {
        let m = model();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v["format_version"] = 2.into();
        assert_eq!(Model::from_json(&v.to_string()), Err(LearnError::UnsupportedVersion(2)));
        v["format_version"] = 1.into();
        v["feature_names"][0] = "z".into();
        assert!(matches!(Model::from_json(&v.to_string()), Err(LearnError::Json(_))));
        assert!(matches!(Model::from_json("{"), Err(LearnError::Json(_))));
    }
}
