//! Suite parameters: TOML sections, typed flags and `--set` overrides.
//!
//! Parameters are merged as a TOML table (file section, then flags, then
//! `--set`), deserialized into the suite's parameter type and checked for
//! keys the type does not know.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::CliError;

/// Reads `[<section>]` from a TOML file; a missing section is an empty table.
pub fn load_section(path: &Path, section: &str) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))?;
    match doc.remove(section) {
        None => Ok(Table::new()),
        Some(Value::Table(t)) => Ok(t),
        Some(_) => Err(CliError::Usage(format!("[{section}] must be a table"))),
    }
}

/// Sets a dotted path, creating intermediate tables.
pub fn set_path(table: &mut Table, path: &[&str], value: Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::Usage(format!("`{p}` is not a table"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses `a.b=value`; the value is read as TOML and falls back to a string.
pub fn parse_assignment(text: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{text}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!("empty key in `{text}`")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    Ok((key.split('.').map(str::to_string).collect(), value))
}

/// Deserializes `table` into `P` and rejects keys `P` does not define.
///
/// `optional` lists dotted paths of `Option` fields, which serialize to
/// nothing when unset and so cannot be discovered from a round trip.
pub fn resolve<P: DeserializeOwned + Serialize>(
    table: Table,
    optional: &[&str],
) -> Result<P, CliError> {
    let params: P = Value::Table(table.clone())
        .try_into()
        .map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))?;
    let known = Value::try_from(&params)
        .map_err(|e| CliError::Usage(format!("parameters do not serialize: {e}")))?;
    if let Some(bad) = unknown_key(&table, &known, "", optional) {
        return Err(CliError::Usage(format!("unknown parameter `{bad}`")));
    }
    Ok(params)
}

fn unknown_key(given: &Table, known: &Value, prefix: &str, optional: &[&str]) -> Option<String> {
    for (k, v) in given {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match known.get(k) {
            None if !optional.contains(&path.as_str()) => return Some(path),
            None => {}
            Some(inner) => {
                if let (Value::Table(sub), Value::Table(_)) = (v, inner) {
                    if let Some(bad) = unknown_key(sub, inner, &path, optional) {
                        return Some(bad);
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Default)]
    #[serde(default)]
    struct Inner {
        b: f64,
    }

    #[derive(Serialize, Deserialize, Default)]
    #[serde(default)]
    struct Outer {
        a: usize,
        inner: Inner,
    }

    #[test]
    fn assignments_and_unknown_keys() {
        let mut t = Table::new();
        let (k, v) = parse_assignment("inner.b=0.5").unwrap();
        let k: Vec<&str> = k.iter().map(String::as_str).collect();
        set_path(&mut t, &k, v).unwrap();
        let o: Outer = resolve(t.clone(), &[]).unwrap();
        assert_eq!(o.inner.b, 0.5);
        set_path(&mut t, &["inner", "c"], Value::Integer(1)).unwrap();
        assert!(
            matches!(resolve::<Outer>(t, &[]), Err(CliError::Usage(m)) if m.contains("inner.c"))
        );
        assert_eq!(
            parse_assignment("x=abc").unwrap().1,
            Value::String("abc".into())
        );
        assert!(parse_assignment("novalue").is_err());
    }
}
