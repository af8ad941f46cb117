use std::collections::HashSet;

use crate::error::{Error, Result};

use super::Dataset;

/// Restricts both datasets to their common features, in the training
/// dataset's column order, and gives the test side the training label column.
pub fn align_schemas(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
    if train.is_empty() {
        return Err(Error::Empty("training dataset".into()));
    }
    if test.is_empty() {
        return Err(Error::Empty("test dataset".into()));
    }
    let test_names: HashSet<&str> = test.schema().feature_names().iter().map(|s| s.trim()).collect();
    let common: Vec<&str> = train
        .schema()
        .feature_names()
        .iter()
        .map(|s| s.trim())
        .filter(|n| test_names.contains(n))
        .collect();
    if common.is_empty() {
        return Err(Error::NoCommonFeatures);
    }
    let train_out = if common.len() == train.schema().dim() {
        train.clone()
    } else {
        train.select_features(&common)?
    };
    let test_sel = test.select_features(&common)?;
    let schema = test_sel.schema().with_label_column(train.schema().label_column());
    let test_out = test_sel.with_schema(schema, test_sel.records().to_vec(), "align");
    Ok((train_out, test_out))
}
