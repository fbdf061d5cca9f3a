use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{closure, render_table, targets, AnalysisError, EntityRef};
use crate::store::{EntityRecord, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Band {
    High,
    Medium,
    Low,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::High => "High",
            Band::Medium => "Medium",
            Band::Low => "Low",
        })
    }
}

/// Scoring weights and band thresholds. Defaults: likelihood weights
/// High 3 / Medium 2 / Low 1; effectiveness High at >= 6, Medium at >= 3;
/// complexity High at >= 5 contained elements, Medium at >= 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct TradespaceConfig {
    pub likelihood_high: f64,
    pub likelihood_medium: f64,
    pub likelihood_low: f64,
    pub effectiveness_high: f64,
    pub effectiveness_medium: f64,
    pub complexity_high: usize,
    pub complexity_medium: usize,
}

impl Default for TradespaceConfig {
    fn default() -> Self {
        TradespaceConfig {
            likelihood_high: 3.0,
            likelihood_medium: 2.0,
            likelihood_low: 1.0,
            effectiveness_high: 6.0,
            effectiveness_medium: 3.0,
            complexity_high: 5,
            complexity_medium: 3,
        }
    }
}

impl TradespaceConfig {
    /// Weights must be positive and thresholds ordered.
    pub fn check(&self) -> Result<(), String> {
        let w = [
            self.likelihood_high,
            self.likelihood_medium,
            self.likelihood_low,
        ];
        if w.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err("likelihood weights must be positive".into());
        }
        if !(self.effectiveness_high >= self.effectiveness_medium
            && self.effectiveness_medium >= 0.0)
        {
            return Err("effectiveness thresholds must satisfy high >= medium >= 0".into());
        }
        if self.complexity_high < self.complexity_medium {
            return Err("complexity thresholds must satisfy high >= medium".into());
        }
        Ok(())
    }

    fn likelihood_weight(&self, likelihood: &str) -> f64 {
        match likelihood {
            "High" => self.likelihood_high,
            "Medium" => self.likelihood_medium,
            "Low" => self.likelihood_low,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TradespaceRow {
    pub resilient_mode: EntityRef,
    /// Number of elements the mode `contains`.
    pub complexity: usize,
    pub complexity_band: Band,
    pub effectiveness_score: f64,
    pub effectiveness_band: Band,
    pub operational_impact: Option<String>,
    pub detection_time: Option<f64>,
    pub operator_decision_time: Option<f64>,
    pub restore_time: Option<f64>,
    /// Sum of the three time components; null when any is missing.
    pub recovery_budget: Option<f64>,
    pub remediated_scenario_count: usize,
    /// Most important (numerically lowest) loss priority the mode remediates.
    pub max_remediated_loss_priority: Option<i64>,
}

fn num(e: &EntityRecord, attr: &str) -> Option<f64> {
    e.attribute(attr).and_then(|v| v.as_f64())
}

fn max_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    xs.flatten()
        .fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
}

pub fn tradespace(store: &Store) -> Vec<TradespaceRow> {
    tradespace_with(store, &TradespaceConfig::default())
}

/// One row per resilient mode, best first: by most important remediated
/// loss priority, then effectiveness (descending), then name.
pub fn tradespace_with(store: &Store, cfg: &TradespaceConfig) -> Vec<TradespaceRow> {
    let mut rows: Vec<TradespaceRow> = store
        .entities_of_type("ResilientMode")
        .into_iter()
        .map(|mode| {
            let complexity = targets(store, mode.id(), "contains").len();
            let scenarios = targets(store, mode.id(), "remediates");
            let mut score = 0.0;
            let mut best: Option<i64> = None;
            for sc in &scenarios {
                let likelihood = targets(store, sc.id(), "precipitatedBy")
                    .iter()
                    .filter_map(|av| av.attribute("likelihood").and_then(|v| v.as_str()))
                    .map(|l| cfg.likelihood_weight(l))
                    .fold(0.0, f64::max);
                let priority = closure(store, sc.id(), "leadsTo")
                    .iter()
                    .filter(|e| e.type_name() == "Loss")
                    .filter_map(|l| l.attribute("priority").and_then(|v| v.as_i64()))
                    .min();
                if let Some(p) = priority {
                    score += likelihood * (5 - p).max(0) as f64;
                    best = Some(best.map_or(p, |b| b.min(p)));
                }
            }
            let detection = max_of(scenarios.iter().map(|s| num(s, "detectionTime")));
            let decision = max_of(scenarios.iter().map(|s| num(s, "operatorDecisionTime")))
                .or_else(|| num(mode, "operatorDecisionTime"));
            let restore = num(mode, "restoreTime");
            let recovery_budget = match (detection, decision, restore) {
                (Some(a), Some(b), Some(c)) => Some(a + b + c),
                _ => None,
            };
            TradespaceRow {
                resilient_mode: EntityRef::of(mode),
                complexity,
                complexity_band: if complexity >= cfg.complexity_high {
                    Band::High
                } else if complexity >= cfg.complexity_medium {
                    Band::Medium
                } else {
                    Band::Low
                },
                effectiveness_score: score,
                effectiveness_band: if score >= cfg.effectiveness_high {
                    Band::High
                } else if score >= cfg.effectiveness_medium {
                    Band::Medium
                } else {
                    Band::Low
                },
                operational_impact: mode
                    .attribute("operationalImpact")
                    .and_then(|v| v.as_str())
                    .map(str::to_string),
                detection_time: detection,
                operator_decision_time: decision,
                restore_time: restore,
                recovery_budget,
                remediated_scenario_count: scenarios.len(),
                max_remediated_loss_priority: best,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let pa = a.max_remediated_loss_priority.unwrap_or(i64::MAX);
        let pb = b.max_remediated_loss_priority.unwrap_or(i64::MAX);
        pa.cmp(&pb)
            .then(
                b.effectiveness_score
                    .partial_cmp(&a.effectiveness_score)
                    .unwrap_or(Ordering::Equal),
            )
            .then_with(|| a.resilient_mode.name.cmp(&b.resilient_mode.name))
    });
    rows
}

pub fn tradespace_table(rows: &[TradespaceRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_else(|| "-".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.resilient_mode.name.clone(),
                format!("{} ({})", r.complexity, r.complexity_band),
                format!("{} ({})", r.effectiveness_score, r.effectiveness_band),
                r.operational_impact.clone().unwrap_or_else(|| "-".into()),
                opt(r.recovery_budget),
                r.remediated_scenario_count.to_string(),
                r.max_remediated_loss_priority
                    .map(|p| p.to_string())
                    .unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    render_table(
        &[
            "Resilient Mode",
            "Complexity",
            "Effectiveness",
            "Impact",
            "Recovery Budget (s)",
            "Scenarios",
            "Top Priority",
        ],
        &body,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecoveryRatio {
    pub ratio: f64,
    pub acceptable: bool,
    /// True exactly at ratio 1, which is treated as not acceptable.
    pub boundary: bool,
}

/// measured / expected; acceptable only when strictly below 1.
pub fn recovery_ratio(expected: f64, measured: f64) -> Result<RecoveryRatio, AnalysisError> {
    if !expected.is_finite() || expected <= 0.0 {
        return Err(AnalysisError::NonPositiveBudget(expected));
    }
    if !measured.is_finite() || measured < 0.0 {
        return Err(AnalysisError::NegativeMeasurement(measured));
    }
    let ratio = measured / expected;
    Ok(RecoveryRatio {
        ratio,
        acceptable: ratio < 1.0,
        boundary: ratio == 1.0,
    })
}
