//! JSON-serializable model description and its compilation into a
//! `PiecewiseSystem` + `SeedManifold`.

use super::{seed_var_names, state_var_names, PiecewiseSystem, SeedManifold};
use crate::error::{Error, Result};
use crate::expr::Expr;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedSpec {
    pub v_box: Vec<[f64; 2]>,
    pub v_map: Vec<String>,
    #[serde(default)]
    pub label: String,
}

/// Textual model document; `params` are substituted as constants at parse time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub m: usize,
    pub x0_plus: Vec<String>,
    pub x0_minus: Vec<String>,
    pub x1_plus: Vec<String>,
    pub x1_minus: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_plus: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_minus: Option<Vec<String>>,
    pub g: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub seed: SeedSpec,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<ModelSpec> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidModel(format!(
                "model JSON rejected at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    /// Merge parameter overrides, returning the amended spec.
    pub fn with_params(mut self, overrides: &BTreeMap<String, f64>) -> ModelSpec {
        for (k, v) in overrides {
            self.params.insert(k.clone(), *v);
        }
        self
    }

    /// Parse all expression strings and assemble the system and seed.
    pub fn build(&self) -> Result<(PiecewiseSystem, SeedManifold)> {
        if self.n == 0 || self.m < self.n {
            return Err(Error::InvalidModel(format!(
                "need 1 <= n <= m, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        let dim = self.m + 1;
        let names = state_var_names(self.n, self.m);
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut names_eps = names.clone();
        names_eps.push("eps".to_string());
        let eps_refs: Vec<&str> = names_eps.iter().map(|s| s.as_str()).collect();

        let parse_list = |list: &[String], what: &str, refs: &[&str]| -> Result<Vec<Expr>> {
            if list.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "{what} must have {dim} components, got {}",
                    list.len()
                )));
            }
            list.iter()
                .map(|src| Expr::parse(src, refs, &self.params))
                .collect()
        };

        let x0 = [
            parse_list(&self.x0_plus, "x0_plus", &name_refs)?,
            parse_list(&self.x0_minus, "x0_minus", &name_refs)?,
        ];
        let x1 = [
            parse_list(&self.x1_plus, "x1_plus", &name_refs)?,
            parse_list(&self.x1_minus, "x1_minus", &name_refs)?,
        ];
        let r = match (&self.r_plus, &self.r_minus) {
            (None, None) => None,
            (Some(p), Some(q)) => Some([
                parse_list(p, "r_plus", &eps_refs)?,
                parse_list(q, "r_minus", &eps_refs)?,
            ]),
            _ => {
                return Err(Error::InvalidModel(
                    "r_plus and r_minus must be given together".into(),
                ))
            }
        };
        let g = Expr::parse(&self.g, &name_refs[..self.m], &self.params)?;

        if self.seed.v_box.len() != self.n {
            return Err(Error::InvalidModel(format!(
                "v_box must have {} axes, got {}",
                self.n,
                self.seed.v_box.len()
            )));
        }
        if self.seed.v_map.len() != self.m - self.n {
            return Err(Error::InvalidModel(format!(
                "v_map must have {} components, got {}",
                self.m - self.n,
                self.seed.v_map.len()
            )));
        }
        let u_names = seed_var_names(self.n);
        let u_refs: Vec<&str> = u_names.iter().map(|s| s.as_str()).collect();
        let v_map = self
            .seed
            .v_map
            .iter()
            .map(|src| Expr::parse(src, &u_refs, &self.params))
            .collect::<Result<Vec<_>>>()?;
        let seed = SeedManifold::new(
            self.seed.v_box.iter().map(|b| (b[0], b[1])).collect(),
            v_map,
            self.seed.label.clone(),
        )?;

        let system = PiecewiseSystem::from_parts(
            self.n,
            self.m,
            x0,
            x1,
            r,
            g,
            self.params.clone(),
            self.clone(),
        );
        Ok((system, seed))
    }
}
