//! Tree-based classifiers sharing one prediction contract.
//!
//! Categorical inputs are one-hot encoded ([`EncodingMap`]) so that every
//! family splits on numeric thresholds. A fitted [`Model`] carries its
//! encoding map and evaluates raw (unencoded) rows.

mod encode;
mod gbdt;
mod split;
mod tree;

pub use encode::{encode_onehot, ColumnEncoding, EncodingMap, Matrix};
pub use gbdt::{candidate_gain, fit_gbdt, fit_gradient_tree, leaf_value, sigmoid, split_gain, GbdtConfig, GbdtModel, Growth};
pub use tree::{fit_cart, fit_forest, gini_gain, ForestConfig, ForestMode, Node, Tree, TreeConfig};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::sampling::{majority_label, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum FitConfig {
    /// Constant predictor of the training majority class (baseline).
    Majority,
    Cart(TreeConfig),
    RandomForest(ForestConfig),
    ExtraTrees(ForestConfig),
    Gbdt(GbdtConfig),
}

impl FitConfig {
    pub fn family(&self) -> &'static str {
        match self {
            FitConfig::Majority => "majority",
            FitConfig::Cart(_) => "cart",
            FitConfig::RandomForest(_) => "random_forest",
            FitConfig::ExtraTrees(_) => "extra_trees",
            FitConfig::Gbdt(_) => "gbdt",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FitConfig::Majority => Ok(()),
            FitConfig::Cart(c) => c.validate(),
            FitConfig::RandomForest(c) | FitConfig::ExtraTrees(c) => c.validate(),
            FitConfig::Gbdt(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Predictor {
    Majority { probability: f64 },
    Cart { tree: Tree },
    Forest { mode: ForestMode, trees: Vec<Tree> },
    Gbdt(GbdtModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub encoding: EncodingMap,
    pub predictor: Predictor,
}

impl Model {
    /// Structural checks for models read from disk: every split refers to
    /// an encoded column and every child index is in range.
    pub fn validate(&self) -> Result<()> {
        let width = self.encoding.output_width();
        let trees: Vec<&Tree> = match &self.predictor {
            Predictor::Majority { .. } => Vec::new(),
            Predictor::Cart { tree } => alloc::vec![tree],
            Predictor::Forest { trees, .. } => trees.iter().collect(),
            Predictor::Gbdt(m) => m.trees.iter().collect(),
        };
        for t in trees {
            if t.nodes.is_empty() {
                return Err(Error::input("empty tree"));
            }
            if t.max_feature().is_some_and(|f| f >= width) {
                return Err(Error::input("split feature outside the encoded width"));
            }
            let n = t.nodes.len();
            if t.nodes.iter().any(|nd| matches!(*nd, Node::Split { left, right, .. } if left >= n || right >= n)) {
                return Err(Error::input("child index out of range"));
            }
        }
        Ok(())
    }

    fn proba_encoded(&self, row: &[f64]) -> f64 {
        match &self.predictor {
            Predictor::Majority { probability } => *probability,
            Predictor::Cart { tree } => tree.evaluate(row),
            Predictor::Forest { trees, .. } => trees.iter().map(|t| t.evaluate(row)).sum::<f64>() / trees.len() as f64,
            Predictor::Gbdt(m) => m.predict_proba_row(row),
        }
    }
}

/// Fit `config` on a sample set after encoding it with `encoding`.
pub fn fit<E: Executor>(config: &FitConfig, data: &SampleSet, encoding: &EncodingMap, seed: u64, exec: &E) -> Result<Model> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::NoRows);
    }
    if encoding.input_width() != data.width() {
        return Err(Error::DimensionMismatch { expected: encoding.input_width(), found: data.width() });
    }
    let x = encoding.encode(&data.values)?;
    let y = &data.labels;
    let predictor = match config {
        FitConfig::Majority => Predictor::Majority { probability: majority_label(y).unwrap_or(y[0]) as f64 },
        FitConfig::Cart(c) => Predictor::Cart { tree: fit_cart(&x, y, c)? },
        FitConfig::RandomForest(c) => {
            Predictor::Forest { mode: ForestMode::RandomForest, trees: fit_forest(&x, y, ForestMode::RandomForest, c, seed, exec)? }
        }
        FitConfig::ExtraTrees(c) => {
            Predictor::Forest { mode: ForestMode::ExtraTrees, trees: fit_forest(&x, y, ForestMode::ExtraTrees, c, seed, exec)? }
        }
        FitConfig::Gbdt(c) => Predictor::Gbdt(fit_gbdt(&x, y, c)?),
    };
    Ok(Model { encoding: encoding.clone(), predictor })
}

/// Positive-class probabilities for row-major raw rows.
pub fn predict_proba(model: &Model, values: &[f64]) -> Result<Vec<f64>> {
    let x = model.encoding.encode(values)?;
    Ok((0..x.rows).map(|i| model.proba_encoded(x.row(i))).collect())
}

/// Label 1 iff the probability is at least `threshold`.
pub fn predict(model: &Model, values: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config("threshold", String::from("must lie in [0, 1]")));
    }
    Ok(predict_proba(model, values)?.into_iter().map(|p| (p >= threshold) as u8).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::neighbors::ColumnKind;
    use alloc::vec;

    fn leaf_model(values: &[f64]) -> Model {
        let trees = values.iter().map(|&v| Tree::leaf(v, 1)).collect();
        Model { encoding: EncodingMap::identity(1), predictor: Predictor::Forest { mode: ForestMode::RandomForest, trees } }
    }

    #[test]
    fn prediction_contract() {
        let cart = Model { encoding: EncodingMap::identity(1), predictor: Predictor::Cart { tree: Tree::leaf(0.25, 4) } };
        assert_eq!(predict_proba(&cart, &[3.0]).unwrap(), vec![0.25]);
        let gb = Model {
            encoding: EncodingMap::identity(1),
            predictor: Predictor::Gbdt(GbdtModel { base_score: 0.0, learning_rate: 0.1, trees: vec![Tree::leaf(0.0, 1)] }),
        };
        assert_eq!(predict_proba(&gb, &[1.0]).unwrap(), vec![0.5]);
        assert_eq!(predict_proba(&leaf_model(&[1.0, 1.0, 0.0, 1.0]), &[0.0]).unwrap(), vec![0.75]);
    }

    #[test]
    fn threshold_rule() {
        let half = leaf_model(&[0.5]);
        assert_eq!(predict(&half, &[0.0], 0.5).unwrap(), vec![1]);
        let low = leaf_model(&[0.49]);
        assert_eq!(predict(&low, &[0.0], 0.5).unwrap(), vec![0]);
        assert!(predict(&low, &[0.0], 1.1).is_err());
        // layout mismatch: the model expects one column
        let two = EncodingMap::identity(2);
        assert!(predict_proba(&Model { encoding: two, ..low.clone() }, &[0.0]).is_err());
    }

    #[test]
    fn pure_forest_probabilities() {
        let set = SampleSet::new(vec![ColumnKind::Categorical], vec![0.0, 1.0, 0.0, 1.0], vec![1; 4]).unwrap();
        let enc = EncodingMap::for_columns(&[ColumnKind::Categorical], &[2]).unwrap();
        let cfg = FitConfig::ExtraTrees(ForestConfig { n_trees: 7, ..Default::default() });
        let m = fit(&cfg, &set, &enc, 3, &Sequential).unwrap();
        assert!(predict_proba(&m, &set.values).unwrap().iter().all(|&p| p == 1.0));
        let m = fit(&FitConfig::Majority, &set, &enc, 3, &Sequential).unwrap();
        assert_eq!(predict(&m, &[0.0], 0.5).unwrap(), vec![1]);
    }
}
