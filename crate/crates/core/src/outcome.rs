//! Exhaustive test-case generation and outcome equivalence.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{Assignment, ExecMode, Executor};
use crate::model::{DecisionGraph, ModelType, NodeKind};
use crate::simplify::is_identity_node;
use crate::unary::UnaryTest;
use crate::value::{Value, ValueType};

/// Stand-in text for inputs that are only ever null-checked.
pub const PRESENCE_SENTINEL: &str = "<aanwezig>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDomain {
    Boolean,
    Categorical { values: Vec<String>, with_null: bool },
    Presence,
}

impl InputDomain {
    /// Values in canonical order: `false < true`, extraction order, `Null` last.
    pub fn values(&self) -> Vec<Value> {
        match self {
            InputDomain::Boolean => vec![Value::Boolean(false), Value::Boolean(true)],
            InputDomain::Categorical { values, with_null } => {
                let mut out: Vec<Value> = values.iter().cloned().map(Value::Text).collect();
                if *with_null {
                    out.push(Value::Null);
                }
                out
            }
            InputDomain::Presence => vec![Value::text(PRESENCE_SENTINEL), Value::Null],
        }
    }

    pub fn size(&self) -> usize {
        match self {
            InputDomain::Boolean | InputDomain::Presence => 2,
            InputDomain::Categorical { values, with_null } => values.len() + usize::from(*with_null),
        }
    }
}

#[derive(Default)]
struct Observed {
    literals: Vec<String>,
    null_checked: bool,
}

impl Observed {
    fn add(&mut self, s: &str) {
        if !s.is_empty() && !self.literals.iter().any(|l| l == s) {
            self.literals.push(s.to_owned());
        }
    }

    fn visit(&mut self, test: &UnaryTest) {
        match test {
            UnaryTest::Contains(s) => self.add(s),
            UnaryTest::EqualsLiteral(Value::Text(s)) => self.add(s),
            UnaryTest::EqualsLiteral(Value::List(items)) => {
                for item in items {
                    if let Value::Text(s) = item {
                        self.add(s);
                    }
                }
            }
            UnaryTest::IsNull | UnaryTest::NotNull => self.null_checked = true,
            UnaryTest::Not(inner) => self.visit(inner),
            _ => {}
        }
    }
}

/// Domain per string input, from the tests applied to it directly or through
/// chains of identity nodes. Boolean inputs get [`InputDomain::Boolean`];
/// inputs with no usable tests are absent from the map.
pub fn extract_string_domains(g: &DecisionGraph) -> BTreeMap<String, InputDomain> {
    let identity: HashSet<&str> = g
        .nodes
        .iter()
        .filter(|n| is_identity_node(n))
        .map(|n| n.id.as_str())
        .collect();
    let mut readers: HashMap<&str, Vec<(&str, usize)>> = HashMap::new();
    for (node, table) in g.tables() {
        for (pos, r) in table.input_refs.iter().enumerate() {
            readers.entry(r.as_str()).or_default().push((node.id.as_str(), pos));
        }
    }

    let mut out = BTreeMap::new();
    for input in g.sorted_inputs() {
        match input.value_type {
            Some(ValueType::Boolean) => {
                out.insert(input.id.clone(), InputDomain::Boolean);
                continue;
            }
            Some(ValueType::String) => {}
            _ => continue,
        }
        let mut observed = Observed::default();
        let mut frontier = vec![input.id.as_str()];
        let mut seen = HashSet::new();
        while let Some(source) = frontier.pop() {
            if !seen.insert(source) {
                continue;
            }
            for &(reader, pos) in readers.get(source).into_iter().flatten() {
                let table = g
                    .node(reader)
                    .and_then(|n| n.table.as_ref())
                    .expect("reader has a table");
                for rule in &table.rules {
                    if let Some(test) = rule.conditions.get(pos) {
                        observed.visit(test);
                    }
                }
                if identity.contains(reader) {
                    frontier.push(reader);
                }
            }
        }
        let domain = if !observed.literals.is_empty() {
            InputDomain::Categorical {
                values: observed.literals,
                with_null: observed.null_checked,
            }
        } else if observed.null_checked {
            InputDomain::Presence
        } else {
            continue;
        };
        out.insert(input.id.clone(), domain);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestabilityReason {
    AllBooleanWithinCap,
    StringDomainsExtracted,
    TooManyCombinations,
    UnsupportedInputType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestabilityVerdict {
    pub eligible: bool,
    pub reason: TestabilityReason,
    /// Product of domain sizes, saturating; 0 when some input has no domain.
    pub case_count: u64,
    pub domains: BTreeMap<String, InputDomain>,
    pub unsupported_inputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestabilityCaps {
    pub outcome_max_boolean_inputs: usize,
    pub requirements_max_cases: u64,
}

impl Default for TestabilityCaps {
    fn default() -> Self {
        TestabilityCaps {
            outcome_max_boolean_inputs: 10,
            requirements_max_cases: 1024,
        }
    }
}

pub fn assess_testability(g: &DecisionGraph, caps: &TestabilityCaps) -> TestabilityVerdict {
    let mut domains = extract_string_domains(g);
    let inputs = g.sorted_inputs();
    let mut unsupported: Vec<String> = inputs
        .iter()
        .filter(|n| !domains.contains_key(&n.id))
        .map(|n| n.id.clone())
        .collect();
    if g.model_type == ModelType::Outcome {
        // Outcome models are only enumerated over purely boolean inputs.
        for n in &inputs {
            if n.value_type != Some(ValueType::Boolean) && !unsupported.contains(&n.id) {
                unsupported.push(n.id.clone());
            }
        }
        unsupported.sort();
        domains.retain(|_, d| *d == InputDomain::Boolean);
    }
    let case_count = if unsupported.is_empty() {
        domains
            .values()
            .fold(1u64, |acc, d| acc.saturating_mul(d.size() as u64))
    } else {
        0
    };
    let (eligible, reason) = if !unsupported.is_empty() {
        (false, TestabilityReason::UnsupportedInputType)
    } else {
        match g.model_type {
            ModelType::Outcome if inputs.len() > caps.outcome_max_boolean_inputs => {
                (false, TestabilityReason::TooManyCombinations)
            }
            ModelType::Outcome => (true, TestabilityReason::AllBooleanWithinCap),
            ModelType::Requirements if case_count > caps.requirements_max_cases => {
                (false, TestabilityReason::TooManyCombinations)
            }
            ModelType::Requirements if domains.values().all(|d| *d == InputDomain::Boolean) => {
                (true, TestabilityReason::AllBooleanWithinCap)
            }
            ModelType::Requirements => (true, TestabilityReason::StringDomainsExtracted),
        }
    };
    TestabilityVerdict {
        eligible,
        reason,
        case_count,
        domains,
        unsupported_inputs: unsupported,
    }
}

/// Cartesian product over inputs in ascending id order; the last input varies
/// fastest.
pub fn generate_cases(domains: &BTreeMap<String, InputDomain>) -> Vec<Assignment> {
    let axes: Vec<(&String, Vec<Value>)> = domains.iter().map(|(id, d)| (id, d.values())).collect();
    if axes.iter().any(|(_, v)| v.is_empty()) {
        return Vec::new();
    }
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut cases = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        cases.push(
            axes.iter()
                .zip(&idx)
                .map(|((id, values), &i)| ((*id).clone(), values[i].clone()))
                .collect(),
        );
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    cases
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    NotApplicable,
    PermitRequired,
    GeneralRulesApply,
    NotificationRequired,
    Unclassified,
}

impl OutcomeClass {
    pub fn tag(self) -> &'static str {
        match self {
            OutcomeClass::NotApplicable => "not_applicable",
            OutcomeClass::PermitRequired => "permit_required",
            OutcomeClass::GeneralRulesApply => "general_rules_apply",
            OutcomeClass::NotificationRequired => "notification_required",
            OutcomeClass::Unclassified => "unclassified",
        }
    }
}

/// Ordered keyword lists; the first class with a matching keyword wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeKeywords {
    pub classes: Vec<(OutcomeClass, Vec<String>)>,
}

impl Default for OutcomeKeywords {
    fn default() -> Self {
        let list = |words: &[&str]| words.iter().map(|w| (*w).to_owned()).collect::<Vec<_>>();
        OutcomeKeywords {
            classes: vec![
                (
                    OutcomeClass::NotApplicable,
                    list(&["niet van toepassing", "not applicable"]),
                ),
                (
                    OutcomeClass::PermitRequired,
                    list(&["vergunningplicht", "vergunning", "permit"]),
                ),
                (
                    OutcomeClass::NotificationRequired,
                    list(&[
                        "informatieplicht",
                        "meldingsplicht",
                        "melding",
                        "notification",
                        "information obligation",
                    ]),
                ),
                (
                    OutcomeClass::GeneralRulesApply,
                    list(&["algemene regels", "general rules"]),
                ),
            ],
        }
    }
}

pub fn classify_outcome(v: &Value) -> OutcomeClass {
    classify_outcome_with(v, &OutcomeKeywords::default())
}

pub fn classify_outcome_with(v: &Value, keywords: &OutcomeKeywords) -> OutcomeClass {
    let Value::Text(text) = v else {
        return OutcomeClass::Unclassified;
    };
    let lower = text.to_lowercase();
    keywords
        .classes
        .iter()
        .find(|(_, words)| words.iter().any(|w| lower.contains(&w.to_lowercase())))
        .map(|(c, _)| *c)
        .unwrap_or(OutcomeClass::Unclassified)
}

pub fn normalize_output(v: &Value, model_type: ModelType) -> Value {
    normalize_output_with(v, model_type, &OutcomeKeywords::default())
}

pub fn normalize_output_with(v: &Value, model_type: ModelType, keywords: &OutcomeKeywords) -> Value {
    match v {
        Value::List(items) => Value::List(
            items
                .iter()
                .map(|i| normalize_output_with(i, model_type, keywords))
                .collect(),
        ),
        Value::Text(t) => match model_type {
            ModelType::Requirements => match t.trim().to_lowercase().as_str() {
                "ja" => Value::Boolean(true),
                "nee" => Value::Boolean(false),
                _ => v.clone(),
            },
            ModelType::Outcome => Value::text(classify_outcome_with(v, keywords).tag()),
        },
        _ => v.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CaseVerdict {
    pub index: usize,
    pub gold: Value,
    pub candidate: Value,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceResult {
    pub model_id: String,
    pub case_count: usize,
    pub agree_count: usize,
    pub rate: f64,
    /// False when the candidate failed validation; the rate is then 0.
    pub candidate_valid: bool,
    pub candidate_error: Option<String>,
    /// Candidate inputs with no gold counterpart; they read `Null`.
    pub unmatched_inputs: Vec<String>,
    pub verdicts: Vec<CaseVerdict>,
}

fn normalized_name(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Candidate input id → gold input id: same id, then exact name, then
/// normalized name.
pub fn match_inputs(gold: &DecisionGraph, candidate: &DecisionGraph) -> (BTreeMap<String, String>, Vec<String>) {
    let gold_inputs: Vec<_> = gold.sorted_inputs();
    let mut map = BTreeMap::new();
    let mut unmatched = Vec::new();
    for c in candidate.sorted_inputs() {
        let found = gold_inputs
            .iter()
            .find(|g| g.id == c.id)
            .or_else(|| gold_inputs.iter().find(|g| !c.name.is_empty() && g.name == c.name))
            .or_else(|| {
                let norm = normalized_name(&c.name);
                gold_inputs
                    .iter()
                    .find(|g| !norm.is_empty() && normalized_name(&g.name) == norm)
            });
        match found {
            Some(g) => {
                map.insert(c.id.clone(), g.id.clone());
            }
            None => unmatched.push(c.id.clone()),
        }
    }
    (map, unmatched)
}

pub fn equivalence(gold: &DecisionGraph, candidate: &DecisionGraph, cases: &[Assignment]) -> EquivalenceResult {
    equivalence_with(gold, candidate, cases, &OutcomeKeywords::default())
}

pub fn equivalence_with(
    gold: &DecisionGraph,
    candidate: &DecisionGraph,
    cases: &[Assignment],
    keywords: &OutcomeKeywords,
) -> EquivalenceResult {
    let (map, unmatched) = match_inputs(gold, candidate);
    let invalid = |message: String| EquivalenceResult {
        model_id: gold.id.clone(),
        case_count: cases.len(),
        agree_count: 0,
        rate: 0.0,
        candidate_valid: false,
        candidate_error: Some(message),
        unmatched_inputs: unmatched.clone(),
        verdicts: Vec::new(),
    };
    let gold_exec = match Executor::new(gold) {
        Ok(e) => e,
        Err(e) => return invalid(format!("gold model: {e}")),
    };
    let cand_exec = match Executor::new(candidate) {
        Ok(e) => e,
        Err(e) => return invalid(e.to_string()),
    };
    let model_type = gold.model_type;
    let verdicts: Vec<CaseVerdict> = cases
        .par_iter()
        .enumerate()
        .map(|(index, case)| {
            let gold_out = gold_exec
                .execute(case, ExecMode::Permissive)
                .map(|r| r.output_value)
                .unwrap_or(Value::Null);
            let cand_case: Assignment = candidate
                .nodes
                .iter()
                .filter(|n| n.kind == NodeKind::InputVariable)
                .map(|n| {
                    let v = map.get(&n.id).and_then(|g| case.get(g)).cloned().unwrap_or(Value::Null);
                    (n.id.clone(), v)
                })
                .collect();
            let cand_out = cand_exec
                .execute(&cand_case, ExecMode::Permissive)
                .map(|r| r.output_value)
                .unwrap_or(Value::Null);
            let gold_n = normalize_output_with(&gold_out, model_type, keywords);
            let cand_n = normalize_output_with(&cand_out, model_type, keywords);
            CaseVerdict {
                index,
                agree: gold_n == cand_n,
                gold: gold_n,
                candidate: cand_n,
            }
        })
        .collect();
    let agree_count = verdicts.iter().filter(|v| v.agree).count();
    EquivalenceResult {
        model_id: gold.id.clone(),
        case_count: cases.len(),
        agree_count,
        rate: if cases.is_empty() {
            0.0
        } else {
            agree_count as f64 / cases.len() as f64
        },
        candidate_valid: true,
        candidate_error: None,
        unmatched_inputs: unmatched,
        verdicts,
    }
}

/// Unweighted mean of per-model rates; `None` for an empty list.
pub fn macro_average(results: &[EquivalenceResult]) -> Option<f64> {
    macro_average_rates(results.iter().map(|r| r.rate))
}

pub fn macro_average_rates(rates: impl IntoIterator<Item = f64>) -> Option<f64> {
    let rates: Vec<f64> = rates.into_iter().collect();
    (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn cooling_water_domains() {
        let d = extract_string_domains(&synth::cooling_water_model());
        assert_eq!(
            d["in_activity"],
            InputDomain::Categorical {
                values: vec!["Start a new activity".into(), "Change or expand".into()],
                with_null: false
            }
        );
        assert_eq!(d["in_contact"], InputDomain::Presence);
        assert_eq!(d["in_measured"], InputDomain::Boolean);
    }

    #[test]
    fn domains_through_identity_nodes() {
        let d = extract_string_domains(&synth::alarm_installation_model());
        assert_eq!(
            d["in_alarm_type"],
            InputDomain::Categorical {
                values: vec!["Inbraakalarm".into(), "Brandalarm".into()],
                with_null: true
            }
        );
        let v = assess_testability(&synth::alarm_installation_model(), &TestabilityCaps::default());
        assert!(v.eligible);
        assert_eq!(v.reason, TestabilityReason::StringDomainsExtracted);
        assert_eq!(v.case_count, 3 * 3 * 2 * 2);
    }

    #[test]
    fn outcome_testability() {
        let v = assess_testability(&synth::wind_turbine_model(), &TestabilityCaps::default());
        assert!(v.eligible);
        assert_eq!(v.case_count, 16);
        let caps = TestabilityCaps {
            outcome_max_boolean_inputs: 3,
            ..TestabilityCaps::default()
        };
        let v = assess_testability(&synth::wind_turbine_model(), &caps);
        assert_eq!(v.reason, TestabilityReason::TooManyCombinations);
    }

    #[test]
    fn case_order() {
        let mut domains = BTreeMap::new();
        domains.insert("a".to_owned(), InputDomain::Boolean);
        domains.insert("b".to_owned(), InputDomain::Boolean);
        domains.insert(
            "c".to_owned(),
            InputDomain::Categorical {
                values: vec!["A".into(), "B".into()],
                with_null: false,
            },
        );
        let cases = generate_cases(&domains);
        assert_eq!(cases.len(), 8);
        assert_eq!(cases[0]["a"], Value::Boolean(false));
        assert_eq!(cases[0]["c"], Value::text("A"));
        assert_eq!(cases[1]["c"], Value::text("B"));
        assert_eq!(cases[7]["a"], Value::Boolean(true));
        assert_eq!(generate_cases(&BTreeMap::new()).len(), 1);
    }

    #[test]
    fn classification() {
        assert_eq!(
            classify_outcome(&Value::text("Er geldt een vergunningplicht")),
            OutcomeClass::PermitRequired
        );
        assert_eq!(
            classify_outcome(&Value::text("algemene regels van toepassing")),
            OutcomeClass::GeneralRulesApply
        );
        assert_eq!(
            classify_outcome(&Value::text("Niet van toepassing")),
            OutcomeClass::NotApplicable
        );
        assert_eq!(classify_outcome(&Value::Null), OutcomeClass::Unclassified);
        assert_eq!(
            normalize_output(&Value::text("informatieplicht geldt"), ModelType::Outcome),
            Value::text("notification_required")
        );
        assert_eq!(
            normalize_output(&Value::text(" Ja "), ModelType::Requirements),
            Value::Boolean(true)
        );
        assert_eq!(
            normalize_output(&Value::Boolean(false), ModelType::Outcome),
            Value::Boolean(false)
        );
    }

    #[test]
    fn constant_false_against_wind_turbine() {
        let gold = synth::wind_turbine_model();
        let cand = synth::constant_model(&gold, Value::Boolean(false));
        let cases = generate_cases(&assess_testability(&gold, &TestabilityCaps::default()).domains);
        let r = equivalence(&gold, &cand, &cases);
        assert_eq!((r.agree_count, r.case_count), (15, 16));
        assert_eq!(equivalence(&gold, &gold, &cases).rate, 1.0);
    }

    #[test]
    fn invalid_candidate_is_flagged() {
        let gold = synth::wind_turbine_model();
        let mut cand = gold.clone();
        cand.output_node_id = "nope".into();
        let r = equivalence(&gold, &cand, &[Assignment::new()]);
        assert!(!r.candidate_valid);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn name_based_input_matching() {
        let gold = synth::wind_turbine_model();
        let mut cand = gold.clone();
        for n in &mut cand.nodes {
            if n.kind == NodeKind::InputVariable {
                n.id = format!("x_{}", n.id);
                n.name = format!("  {}  ", n.name.to_uppercase());
            }
        }
        for (_, t) in cand.nodes.iter_mut().filter_map(|n| n.table.as_mut().map(|t| ((), t))) {
            for r in &mut t.input_refs {
                if r.starts_with("in_") {
                    *r = format!("x_{r}");
                }
            }
        }
        for e in &mut cand.edges {
            if e.from.starts_with("in_") {
                e.from = format!("x_{}", e.from);
            }
        }
        let cases = generate_cases(&assess_testability(&gold, &TestabilityCaps::default()).domains);
        let r = equivalence(&gold, &cand, &cases);
        assert!(r.unmatched_inputs.is_empty());
        assert_eq!(r.rate, 1.0);
    }

    #[test]
    fn macro_averages() {
        assert_eq!(macro_average_rates([1.0, 0.0]), Some(0.5));
        assert_eq!(macro_average_rates([0.5, 0.75, 1.0]), Some(0.75));
        assert_eq!(macro_average_rates([]), None);
    }
}
