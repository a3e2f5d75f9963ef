//! Strict query-string handling: every parameter is parsed or rejected by name.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use axum::extract::rejection::QueryRejection;
use axum::extract::Query;

use crate::error::ApiError;

pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn from_query(
        query: Result<Query<Vec<(String, String)>>, QueryRejection>,
    ) -> Result<Self, ApiError> {
        let Query(pairs) = query.map_err(|e| ApiError::invalid("query", e.body_text()))?;
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            if values.contains_key(&k) {
                return Err(ApiError::invalid(&k, "given more than once"));
            }
            values.insert(k, v);
        }
        Ok(Params { values })
    }

    /// Removes and parses `name`; an empty value counts as absent.
    pub fn take<T>(&mut self, name: &str) -> Result<Option<T>, ApiError>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.remove(name) {
            None => Ok(None),
            Some(v) if v.trim().is_empty() => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|e| ApiError::invalid(name, e)),
        }
    }

    pub fn take_or<T>(&mut self, name: &str, default: T) -> Result<T, ApiError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.take(name)?.unwrap_or(default))
    }

    pub fn take_string(&mut self, name: &str) -> Option<String> {
        self.values.remove(name).filter(|v| !v.trim().is_empty())
    }

    /// Comma-separated list; empty entries are dropped.
    pub fn take_list(&mut self, name: &str) -> Vec<String> {
        self.take_string(name)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Positive count parameter such as `k` or `topN`.
    pub fn take_count(&mut self, name: &str, default: usize) -> Result<usize, ApiError> {
        let n = self.take_or(name, default)?;
        if n == 0 {
            return Err(ApiError::invalid(name, "must be positive"));
        }
        Ok(n)
    }

    pub fn has(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    /// Fails on the first parameter the endpoint does not understand.
    pub fn finish(self) -> Result<(), ApiError> {
        match self.values.into_keys().next() {
            None => Ok(()),
            Some(k) => Err(ApiError::invalid(&k, "unknown parameter")),
        }
    }
}
