//! Model file format.
//!
//! Text, line 1 `policy-v1 <init_seed>`, line 2 the layer sizes, then one
//! parameter per line (full-precision decimal) in fixed order: per layer,
//! weights row-major then biases.

use super::{PolicyError, PolicyModel};
use crate::fsutil::write_atomic;
use std::path::Path;

pub fn model_to_string(model: &PolicyModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("policy-v1 {}\n", model.init_seed()));
    let sizes: Vec<String> = model.layer_sizes().iter().map(|s| s.to_string()).collect();
    out.push_str(&sizes.join(" "));
    out.push('\n');
    for i in 0..model.param_count() {
        // Display prints the shortest decimal that reparses to the same f64.
        out.push_str(&format!("{}\n", model.param(i)));
    }
    out
}

pub fn save_model(model: &PolicyModel, path: &Path) -> Result<(), PolicyError> {
    write_atomic(path, &model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<PolicyModel, PolicyError> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

pub(crate) fn parse_model(text: &str) -> Result<PolicyModel, PolicyError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| PolicyError::Malformed("empty file".to_string()))?;
    let mut fields = header.split_whitespace();
    let version = fields.next().unwrap_or_default();
    if version != "policy-v1" {
        return Err(PolicyError::VersionMismatch(version.to_string()));
    }
    let init_seed: u64 = fields
        .next()
        .ok_or_else(|| PolicyError::Malformed("missing init seed in header".to_string()))?
        .parse()
        .map_err(|_| PolicyError::Malformed("bad init seed".to_string()))?;
    if fields.next().is_some() {
        return Err(PolicyError::Malformed("trailing header fields".to_string()));
    }

    let sizes_line = lines
        .next()
        .ok_or_else(|| PolicyError::Malformed("missing layer sizes".to_string()))?;
    let layer_sizes: Vec<usize> = sizes_line
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| PolicyError::Malformed(format!("bad layer size {s:?}")))
        })
        .collect::<Result<_, _>>()?;

    let mut params = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: f64 = line.trim().parse().map_err(|_| {
            PolicyError::Malformed(format!("line {}: bad parameter {line:?}", lineno + 3))
        })?;
        params.push(v);
    }

    let n_layers = layer_sizes.len().saturating_sub(1);
    let expected: usize = (0..n_layers)
        .map(|k| layer_sizes[k] * layer_sizes[k + 1] + layer_sizes[k + 1])
        .sum();
    if params.len() != expected {
        return Err(PolicyError::Malformed(format!(
            "expected {expected} parameters for sizes {layer_sizes:?}, found {}",
            params.len()
        )));
    }

    let mut weights = Vec::with_capacity(n_layers);
    let mut biases = Vec::with_capacity(n_layers);
    let mut cursor = 0;
    for k in 0..n_layers {
        let w_len = layer_sizes[k] * layer_sizes[k + 1];
        weights.push(params[cursor..cursor + w_len].to_vec());
        cursor += w_len;
        let b_len = layer_sizes[k + 1];
        biases.push(params[cursor..cursor + b_len].to_vec());
        cursor += b_len;
    }
    PolicyModel::from_parts(layer_sizes, weights, biases, init_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::init_model;

    #[test]
    fn round_trip_bitwise() {
        let model = init_model(&[19, 64, 32, 1], 314).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.policy");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert!(model.params_bits_eq(&loaded));
        assert_eq!(model.layer_sizes(), loaded.layer_sizes());
        assert_eq!(model.init_seed(), loaded.init_seed());
    }

    #[test]
    fn truncated_file_rejected() {
        let model = init_model(&[4, 3, 1], 1).unwrap();
        let text = model_to_string(&model);
        let cut = text.lines().count() - 2;
        let truncated: String = text
            .lines()
            .take(cut)
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            parse_model(&truncated),
            Err(PolicyError::Malformed(_))
        ));
    }

    #[test]
    fn version_mismatch_named() {
        assert!(matches!(
            parse_model("policy-v9 0\n2 1\n0\n0\n0\n"),
            Err(PolicyError::VersionMismatch(v)) if v == "policy-v9"
        ));
    }

    #[test]
    fn negative_zero_and_subnormals_survive() {
        let mut model = init_model(&[2, 1], 0).unwrap();
        model.set_param(0, -0.0);
        model.set_param(1, 5e-324);
        model.set_param(2, 1.0 / 3.0);
        let reparsed = parse_model(&model_to_string(&model)).unwrap();
        assert!(model.params_bits_eq(&reparsed));
    }
}
