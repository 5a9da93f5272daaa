//! Machine-readable certification records shared by the stopping-rule and
//! verify modules.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One certified inequality instance: `lhs <= rhs + slack tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRecord {
    /// Claim identifier, e.g. "eq1-tail" or "thm-main-LU".
    pub id: String,
    /// Which chain the record was evaluated on.
    pub chain: String,
    /// The exact constants used, keyed by name (alpha, eps, t, L, U, ...).
    pub params: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; the record passes iff this is >= -tolerance.
    pub slack: f64,
    pub pass: bool,
    /// Human-readable statement of the inequality being certified.
    pub provenance: String,
}

impl VerifyRecord {
    pub fn new(
        id: &str,
        chain: &str,
        params: &[(&str, f64)],
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        provenance: &str,
    ) -> Self {
        let slack = rhs - lhs;
        VerifyRecord {
            id: id.to_string(),
            chain: chain.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            lhs,
            rhs,
            slack,
            pass: slack >= -tolerance,
            provenance: provenance.to_string(),
        }
    }

    fn params_key(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v:.17e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Canonical ordering: by record id, then chain, then parameters. Applied to
/// every emitted batch so output is independent of evaluation order.
pub fn sort_records(records: &mut [VerifyRecord]) {
    records.sort_by(|a, b| {
        (a.id.as_str(), a.chain.as_str(), a.params_key()).cmp(&(
            b.id.as_str(),
            b.chain.as_str(),
            b.params_key(),
        ))
    });
}

/// CSV rendering with a fixed header; params are flattened as `k=v` pairs
/// separated by `;` to keep the column count stable.
pub fn records_to_csv(records: &[VerifyRecord]) -> String {
    let mut out = String::from("id,chain,params,lhs,rhs,slack,pass,provenance\n");
    for r in records {
        let params = r
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},\"{}\"\n",
            r.id, r.chain, params, r.lhs, r.rhs, r.slack, r.pass, r.provenance
        ));
    }
    out
}
