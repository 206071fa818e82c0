//! Decision graph execution with DMN hit-policy semantics.
//!
//! A table whose rules violate its hit policy yields `Null` for that node and
//! records the violation; evaluation continues downstream. Tables with no
//! matching rule yield `Null` (or an empty list under `COLLECT`).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{DecisionGraph, DecisionTable, HitPolicy};
use crate::validate::{topological_order, validate_graph};
use crate::value::Value;

/// Input variable id → value.
pub type Assignment = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    /// Every input variable must be assigned.
    Strict,
    /// Missing inputs read as `Null`.
    #[default]
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "kind")]
pub enum NodeError {
    #[error("{policy} table matched {matched} rules")]
    HitPolicyViolation { policy: HitPolicy, matched: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("input `{0}` is not assigned")]
    MissingInput(String),
    #[error("graph is not executable: {0}")]
    InvalidGraph(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionResult {
    pub output_value: Value,
    pub node_values: BTreeMap<String, Value>,
    pub errors: Vec<(String, NodeError)>,
}

/// Evaluates one table on positionally aligned input values.
pub fn evaluate_table(table: &DecisionTable, inputs: &[Value]) -> Result<Value, NodeError> {
    debug_assert_eq!(inputs.len(), table.input_refs.len());
    let mut matches = table
        .rules
        .iter()
        .filter(|rule| rule.conditions.iter().zip(inputs).all(|(test, value)| test.eval(value)));

    match table.hit_policy {
        HitPolicy::First => Ok(matches.next().map(|r| r.output_value.clone()).unwrap_or(Value::Null)),
        HitPolicy::Unique => {
            let hits: Vec<_> = matches.collect();
            match hits.as_slice() {
                [] => Ok(Value::Null),
                [one] => Ok(one.output_value.clone()),
                many => Err(NodeError::HitPolicyViolation {
                    policy: HitPolicy::Unique,
                    matched: many.len(),
                }),
            }
        }
        HitPolicy::Any => {
            let hits: Vec<_> = matches.collect();
            match hits.split_first() {
                None => Ok(Value::Null),
                Some((first, rest)) => {
                    if rest.iter().all(|r| r.output_value == first.output_value) {
                        Ok(first.output_value.clone())
                    } else {
                        Err(NodeError::HitPolicyViolation {
                            policy: HitPolicy::Any,
                            matched: hits.len(),
                        })
                    }
                }
            }
        }
        HitPolicy::Collect => Ok(Value::List(matches.map(|r| r.output_value.clone()).collect())),
    }
}

/// A graph prepared for repeated execution.
#[derive(Debug, Clone)]
pub struct Executor<'g> {
    graph: &'g DecisionGraph,
    steps: Vec<Step<'g>>,
    input_ids: Vec<&'g str>,
}

#[derive(Debug, Clone)]
enum Step<'g> {
    Input {
        id: &'g str,
    },
    Table {
        id: &'g str,
        table: &'g DecisionTable,
        refs: Vec<usize>,
    },
}

impl<'g> Executor<'g> {
    pub fn new(graph: &'g DecisionGraph) -> Result<Executor<'g>, ExecError> {
        let report = validate_graph(graph);
        if !report.is_ok() {
            return Err(ExecError::InvalidGraph(report.to_string()));
        }
        Self::new_unchecked(graph)
    }

    /// Builds an executor without full validation; only requires an acyclic
    /// graph whose table references resolve.
    pub fn new_unchecked(graph: &'g DecisionGraph) -> Result<Executor<'g>, ExecError> {
        let order = topological_order(graph).map_err(|e| ExecError::InvalidGraph(e.to_string()))?;
        let index = graph.index();
        let position: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut steps = Vec::with_capacity(order.len());
        let mut input_ids = Vec::new();
        for id in &order {
            let node = &graph.nodes[index[id.as_str()]];
            match &node.table {
                None => {
                    input_ids.push(node.id.as_str());
                    steps.push(Step::Input { id: node.id.as_str() });
                }
                Some(table) => {
                    let refs = table
                        .input_refs
                        .iter()
                        .map(|r| {
                            position
                                .get(r.as_str())
                                .copied()
                                .ok_or_else(|| ExecError::InvalidGraph(format!("`{}` reads missing `{r}`", node.id)))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    steps.push(Step::Table {
                        id: node.id.as_str(),
                        table,
                        refs,
                    });
                }
            }
        }
        input_ids.sort_unstable();
        Ok(Executor {
            graph,
            steps,
            input_ids,
        })
    }

    pub fn graph(&self) -> &'g DecisionGraph {
        self.graph
    }

    pub fn execute(&self, assignment: &Assignment, mode: ExecMode) -> Result<ExecutionResult, ExecError> {
        if mode == ExecMode::Strict {
            if let Some(missing) = self.input_ids.iter().find(|id| !assignment.contains_key(**id)) {
                return Err(ExecError::MissingInput((*missing).to_owned()));
            }
        }
        let mut values: Vec<Value> = Vec::with_capacity(self.steps.len());
        let mut errors = Vec::new();
        for step in &self.steps {
            let value = match step {
                Step::Input { id } => assignment.get(*id).cloned().unwrap_or(Value::Null),
                Step::Table { id, table, refs } => {
                    let inputs: Vec<Value> = refs.iter().map(|&i| values[i].clone()).collect();
                    match evaluate_table(table, &inputs) {
                        Ok(v) => v,
                        Err(e) => {
                            errors.push(((*id).to_owned(), e));
                            Value::Null
                        }
                    }
                }
            };
            values.push(value);
        }
        let node_values: BTreeMap<String, Value> = self
            .steps
            .iter()
            .map(|s| match s {
                Step::Input { id } | Step::Table { id, .. } => (*id).to_owned(),
            })
            .zip(values)
            .collect();
        let output_value = node_values
            .get(&self.graph.output_node_id)
            .cloned()
            .unwrap_or(Value::Null);
        Ok(ExecutionResult {
            output_value,
            node_values,
            errors,
        })
    }
}

pub fn execute(g: &DecisionGraph, a: &Assignment, mode: ExecMode) -> Result<ExecutionResult, ExecError> {
    Executor::new(g)?.execute(a, mode)
}

/// Executes every case; `result[i]` belongs to `cases[i]`.
pub fn batch_execute(
    g: &DecisionGraph,
    cases: &[Assignment],
    mode: ExecMode,
) -> Result<Vec<Result<ExecutionResult, ExecError>>, ExecError> {
    let executor = Executor::new(g)?;
    Ok(cases.par_iter().map(|a| executor.execute(a, mode)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rule;
    use crate::unary::{CompareOp, UnaryTest};

    fn table(policy: HitPolicy, rules: Vec<Rule>, arity: usize) -> DecisionTable {
        DecisionTable {
            hit_policy: policy,
            input_refs: (0..arity).map(|i| format!("in{i}")).collect(),
            output_name: "o".into(),
            rules,
        }
    }

    #[test]
    fn first_takes_rule_order() {
        let t = table(
            HitPolicy::First,
            vec![
                Rule::new(vec![UnaryTest::EqualsLiteral(Value::Boolean(true))], "A"),
                Rule::new(vec![UnaryTest::Irrelevant], "B"),
            ],
            1,
        );
        assert_eq!(evaluate_table(&t, &[Value::Boolean(true)]).unwrap(), Value::text("A"));
        assert_eq!(evaluate_table(&t, &[Value::Boolean(false)]).unwrap(), Value::text("B"));
    }

    #[test]
    fn unique_double_match_violates() {
        let t = table(
            HitPolicy::Unique,
            vec![
                Rule::new(vec![UnaryTest::Compare(CompareOp::Gt, 2.into())], true),
                Rule::new(vec![UnaryTest::NotNull], true),
            ],
            1,
        );
        assert_eq!(
            evaluate_table(&t, &[Value::number(3)]),
            Err(NodeError::HitPolicyViolation {
                policy: HitPolicy::Unique,
                matched: 2
            })
        );
        assert_eq!(evaluate_table(&t, &[Value::number(1)]).unwrap(), Value::Boolean(true));
        assert_eq!(evaluate_table(&t, &[Value::Null]).unwrap(), Value::Null);
    }

    #[test]
    fn any_requires_agreement() {
        let rules = |second: bool| {
            vec![
                Rule::new(vec![UnaryTest::NotNull], true),
                Rule::new(vec![UnaryTest::Irrelevant], second),
            ]
        };
        let agree = table(HitPolicy::Any, rules(true), 1);
        assert_eq!(
            evaluate_table(&agree, &[Value::number(1)]).unwrap(),
            Value::Boolean(true)
        );
        let conflict = table(HitPolicy::Any, rules(false), 1);
        assert!(evaluate_table(&conflict, &[Value::number(1)]).is_err());
        assert_eq!(
            evaluate_table(&conflict, &[Value::Null]).unwrap(),
            Value::Boolean(false)
        );
    }

    #[test]
    fn collect_gathers_in_order() {
        let t = table(
            HitPolicy::Collect,
            vec![
                Rule::new(vec![UnaryTest::NotNull], "x"),
                Rule::new(vec![UnaryTest::IsNull], "y"),
                Rule::new(vec![UnaryTest::Irrelevant], "z"),
            ],
            1,
        );
        assert_eq!(
            evaluate_table(&t, &[Value::Boolean(true)]).unwrap(),
            Value::List(vec![Value::text("x"), Value::text("z")])
        );
        let empty = table(HitPolicy::Collect, vec![], 1);
        assert_eq!(evaluate_table(&empty, &[Value::Null]).unwrap(), Value::List(vec![]));
    }

    #[test]
    fn zero_input_tables() {
        let t = table(HitPolicy::Unique, vec![Rule::new(vec![], "always")], 0);
        assert_eq!(evaluate_table(&t, &[]).unwrap(), Value::text("always"));
        let none = table(HitPolicy::Unique, vec![], 0);
        assert_eq!(evaluate_table(&none, &[]).unwrap(), Value::Null);
    }
}
