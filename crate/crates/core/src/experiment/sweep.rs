//! Expands one base config into a grid of experiment files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

/// A swept parameter: dotted key path and the literal values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl SweepAxis {
    /// Parses `key=v1,v2,...`. Each value is read as a TOML literal, falling
    /// back to a bare string (`method=fedadas,fedavg`).
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(format!("sweep axis `{spec}` must look like key=v1,v2")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(format!("sweep axis `{spec}` has an empty key")));
        }
        let values: Vec<toml::Value> = values.split(',').map(|v| literal(v.trim())).collect();
        if values.iter().any(|v| v.as_str() == Some("")) {
            return Err(Error::config(format!("sweep axis `{key}` has an empty value")));
        }
        Ok(SweepAxis {
            key: key.to_string(),
            values,
        })
    }
}

fn literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap_or(key);
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("sweep key `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn slug(value: &toml::Value) -> String {
    let raw = match value {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Every combination of the axes applied to `base`, validated. Returns file
/// names paired with configs; names encode the swept values.
pub fn expand(base: &ExperimentConfig, axes: &[SweepAxis]) -> Result<Vec<(String, ExperimentConfig)>> {
    let base_table: toml::Table = toml::from_str(&base.to_toml()?).map_err(|e| Error::Serialization(e.to_string()))?;
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (0..axis.values.len()).map(move |i| {
                    let mut c = c.clone();
                    c.push(i);
                    c
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(combos.len());
    for (n, combo) in combos.iter().enumerate() {
        let mut table = base_table.clone();
        let mut name = format!("sweep-{n:03}");
        for (axis, &i) in axes.iter().zip(combo) {
            let value = axis.values[i].clone();
            name.push_str(&format!("_{}-{}", axis.key.replace('.', "-"), slug(&value)));
            set_path(&mut table, &axis.key, value)?;
        }
        let text = toml::to_string(&table).map_err(|e| Error::Serialization(e.to_string()))?;
        let config = ExperimentConfig::from_toml(&text).map_err(|e| Error::config(format!("{name}: {e}")))?;
        out.push((format!("{name}.toml"), config));
    }
    Ok(out)
}

/// Writes the expanded grid into `out_dir`, one file per experiment.
pub fn write_sweep(base: &ExperimentConfig, axes: &[SweepAxis], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let configs = expand(base, axes)?;
    std::fs::create_dir_all(out_dir)?;
    configs
        .into_iter()
        .map(|(name, config)| {
            let path = out_dir.join(name);
            std::fs::write(&path, config.to_toml()?)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::{DatasetConfig, TierConfig};
    use crate::federation::Method;

    fn base() -> ExperimentConfig {
        ExperimentConfig::new(
            DatasetConfig::Synthetic {
                num_classes: 2,
                feature_dim: 2,
                samples_per_class: 20,
                class_separation: 3.0,
                seed: None,
            },
            vec![TierConfig {
                label: "m".into(),
                hidden_layers: vec![],
                activation: Default::default(),
            }],
        )
    }

    #[test]
    fn grid_is_cartesian() {
        let axes = [
            SweepAxis::parse("num_clients=5,10").unwrap(),
            SweepAxis::parse("method=fedadas,local_only,fedavg").unwrap(),
            SweepAxis::parse("scheduler.gamma=0.5").unwrap(),
        ];
        let grid = expand(&base(), &axes).unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0].1.num_clients, 5);
        assert_eq!(grid[5].1.method, Method::Fedavg);
        assert!(grid.iter().all(|(_, c)| c.scheduler.gamma == 0.5));
        assert!(grid[1].0.contains("method-local_only"), "{}", grid[1].0);
    }

    #[test]
    fn invalid_point_rejected() {
        let axes = [SweepAxis::parse("temperature=1.0,0.0").unwrap()];
        let err = expand(&base(), &axes).unwrap_err();
        assert!(err.to_string().contains("temperature must be > 0"), "{err}");
    }

    #[test]
    fn malformed_axis() {
        assert!(SweepAxis::parse("rounds").is_err());
        assert!(SweepAxis::parse("=1").is_err());
    }
}
