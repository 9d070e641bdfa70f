//! Every JSON document the tool emits validates against the versioned
//! schemas shipped in `schemas/`. The checker below covers the subset of
//! JSON Schema those files use: type, const, enum, required, properties,
//! items, oneOf, minItems/maxItems.

use std::path::{Path, PathBuf};

use serde_json::Value;

use longmem::cli::{cmd_check, cmd_compare, cmd_diagnose, cmd_generate, cmd_impulse};
use longmem::cli::config::GenerateConfig;

fn type_matches(expected: &str, value: &Value) -> bool {
    match expected {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "number" => value.is_number(),
        "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
        _ => false,
    }
}

fn validate(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    if let Some(expected) = schema.get("const") {
        if expected != value {
            return Err(format!("{path}: expected const {expected}, got {value}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{path}: {value} not in enum {options:?}"));
        }
    }
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(t) => type_matches(t, value),
            Value::Array(ts) => ts
                .iter()
                .filter_map(Value::as_str)
                .any(|t| type_matches(t, value)),
            _ => false,
        };
        if !ok {
            return Err(format!("{path}: type mismatch, schema {ty}, value {value}"));
        }
    }
    if let Some(branches) = schema.get("oneOf").and_then(Value::as_array) {
        let hits: Vec<_> =
            branches.iter().filter(|b| validate(b, value, path).is_ok()).collect();
        if hits.len() != 1 {
            return Err(format!("{path}: {} of {} oneOf branches matched", hits.len(), branches.len()));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        let obj = value.as_object().ok_or_else(|| format!("{path}: expected object"))?;
        for key in required.iter().filter_map(Value::as_str) {
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing required field '{key}'"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        if let Some(obj) = value.as_object() {
            for (key, sub) in props {
                if let Some(v) = obj.get(key) {
                    validate(sub, v, &format!("{path}.{key}"))?;
                }
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
                if (arr.len() as u64) < min {
                    return Err(format!("{path}: fewer than {min} items"));
                }
            }
            if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
                if (arr.len() as u64) > max {
                    return Err(format!("{path}: more than {max} items"));
                }
            }
            for (i, v) in arr.iter().enumerate() {
                validate(items, v, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn check_file(schema_name: &str, path: &Path) {
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    if let Err(e) = validate(&schema(schema_name), &value, "$") {
        panic!("{} does not validate against {schema_name}: {e}", path.display());
    }
}

fn temp_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("longmem-schemas-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn emitted_documents_validate_against_shipped_schemas() {
    let dir = temp_dir();

    // A small but complete pipeline produces one document of every format.
    let data = dir.join("series.csv");
    let gen = GenerateConfig {
        preset: None,
        source: Some(serde_json::from_str(
            r#"{"arfima": {"spec": {"ar": [0.7, -0.4], "d": 0.4, "ma": [-0.2], "noise_std": 1.0, "burn_in": 300}, "n": 420, "seed": 5}}"#,
        ).unwrap()),
        seed: None,
        out: Some(data.to_str().unwrap().to_string()),
    };
    cmd_generate(&gen).unwrap();

    cmd_diagnose(&data, 0, &dir.join("diag")).unwrap();
    check_file("diagnosis", &dir.join("diag/diagnosis.json"));

    let fixture_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ergodicity");
    for entry in std::fs::read_dir(&fixture_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() != "manifest.json" {
            check_file("cell-params", &path);
        }
    }
    let verdict_out = dir.join("verdict.json");
    cmd_check(&fixture_dir.join("lstm_zero_forget_weights.json"), 0.6, Some(&verdict_out)).unwrap();
    check_file("verdict", &verdict_out);

    let spec = dir.join("linspec.json");
    std::fs::write(
        &spec,
        r#"{"kind": "linear-rnn", "W_zh": [[1.0]], "W_hh": [[0.5]], "W_hx": [[1.0]]}"#,
    )
    .unwrap();
    cmd_impulse(&spec, 200, 20, &dir.join("imp")).unwrap();
    check_file("impulse-decay", &dir.join("imp/decay.json"));

    let cfg_text = format!(
        r#"{{
  "name": "schema-smoke",
  "dataset": {{"csv": {{"path": "{}"}}}},
  "split": {{"n_train": 240, "n_val": 100, "n_test": 80}},
  "models": [{{"name": "rnn", "kind": "rnn", "hidden": 2, "filter_len": 0}}],
  "seeds": [1, 2],
  "stopping": {{"min_loss_drop": 1e-5, "patience": 100, "max_steps": 5}},
  "out": "{}"
}}"#,
        data.display(),
        dir.join("runs").display()
    );
    let config: longmem::cli::ExperimentConfig =
        longmem::cli::ExperimentConfig::from_json(&cfg_text).unwrap();
    let run_dir = longmem::cli::cmd_experiment(&config, None).unwrap();
    check_file("experiment-summary", &run_dir.join("summary.json"));
    check_file("run-records", &run_dir.join("rnn/records.json"));
    check_file("checkpoint", &run_dir.join("rnn/best_checkpoint.json"));

    let ttest_out = dir.join("ttest.json");
    cmd_compare(&run_dir.join("rnn/metrics.csv"), &run_dir.join("rnn/metrics.csv"), "rmse", Some(&ttest_out))
        .unwrap();
    check_file("ttest", &ttest_out);

    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validator_rejects_broken_documents() {
    let good: Value = serde_json::from_str(
        r#"{"format": "longmem-ttest", "version": 1, "metric": "rmse", "n_a": 2, "n_b": 2,
            "t": 0.0, "df": 2.0, "p_one_sided": 0.5, "mean_a": 1.0, "mean_b": 1.0}"#,
    )
    .unwrap();
    assert!(validate(&schema("ttest"), &good, "$").is_ok());
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("df");
    assert!(validate(&schema("ttest"), &missing, "$").is_err());
    let mut wrong_version = good.clone();
    wrong_version["version"] = Value::from(2);
    assert!(validate(&schema("ttest"), &wrong_version, "$").is_err());
    let mut wrong_type = good;
    wrong_type["t"] = Value::from("zero");
    assert!(validate(&schema("ttest"), &wrong_type, "$").is_err());
}
