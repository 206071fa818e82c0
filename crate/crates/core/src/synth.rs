//! Hand-built and randomly generated decision graphs used by fixtures, tests
//! and the bundled mini-corpus.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{DecisionGraph, DecisionTable, Edge, HitPolicy, ModelType, Node, NodeKind, Rule};
use crate::simplify::is_identity_node;
use crate::unary::UnaryTest;
use crate::value::{Value, ValueType};

fn eq(v: impl Into<Value>) -> UnaryTest {
    UnaryTest::EqualsLiteral(v.into())
}

fn table(policy: HitPolicy, refs: &[&str], output_name: &str, rules: Vec<Rule>) -> DecisionTable {
    DecisionTable {
        hit_policy: policy,
        input_refs: refs.iter().map(|r| (*r).to_owned()).collect(),
        output_name: output_name.to_owned(),
        rules,
    }
}

/// `true → true`, `false → false` on a single column.
pub fn boolean_pass_through(input_ref: &str, output_name: &str) -> DecisionTable {
    table(
        HitPolicy::Unique,
        &[input_ref],
        output_name,
        vec![Rule::new(vec![eq(true)], true), Rule::new(vec![eq(false)], false)],
    )
}

fn edges_from_tables(nodes: &[Node]) -> Vec<Edge> {
    let mut edges: Vec<Edge> = nodes
        .iter()
        .filter_map(|n| n.table.as_ref().map(|t| (n, t)))
        .flat_map(|(n, t)| t.input_refs.iter().map(move |r| Edge::new(r.clone(), n.id.clone())))
        .collect();
    edges.sort();
    edges.dedup();
    edges
}

/// Wind turbine information-duty model: four boolean inputs, each behind a
/// pass-through node, one aggregating decision and a boolean output. The duty
/// holds only for (electricity, rotor > 2 m, not in a farm of 3+, not in the
/// North Sea).
pub fn wind_turbine_model() -> DecisionGraph {
    let inputs = [
        ("in_electricity", "Wekt de windturbine elektriciteit op?"),
        (
            "in_farm",
            "Maakt de windturbine deel uit van een windpark met 3 of meer windturbines?",
        ),
        ("in_north_sea", "Ligt de windturbine in de Noordzee?"),
        ("in_rotor", "Is de rotordiameter van de windturbine groter dan 2 meter?"),
    ];
    let mut nodes: Vec<Node> = inputs
        .iter()
        .map(|(id, name)| Node::input(*id, *name, ValueType::Boolean))
        .collect();
    for (id, name) in &inputs {
        let pt = id.replacen("in_", "pt_", 1);
        nodes.push(Node::decision(pt.clone(), *name, boolean_pass_through(id, name)));
    }
    nodes.push(Node::decision(
        "agg_duty",
        "Informatieplicht geluid windturbine van toepassing",
        table(
            HitPolicy::First,
            &["pt_electricity", "pt_rotor", "pt_farm", "pt_north_sea"],
            "informatieplicht",
            vec![
                Rule::new(vec![eq(true), eq(true), eq(false), eq(false)], true),
                Rule::new(vec![UnaryTest::Irrelevant; 4], false),
            ],
        ),
    ));
    nodes.push(Node::output(
        "out_duty",
        "Informatieplicht geluid windturbine",
        table(
            HitPolicy::Unique,
            &["agg_duty"],
            "informatieplicht",
            vec![Rule::new(vec![eq(true)], true), Rule::new(vec![eq(false)], false)],
        ),
    ));
    let edges = edges_from_tables(&nodes);
    DecisionGraph {
        id: "Outcome - GeluidProdWindturbine".into(),
        model_type: ModelType::Outcome,
        nodes,
        edges,
        output_node_id: "out_duty".into(),
    }
}

/// A model with the given inputs whose output is the constant `value`.
pub fn constant_model(template: &DecisionGraph, value: Value) -> DecisionGraph {
    let mut nodes: Vec<Node> = template.inputs().cloned().collect();
    nodes.push(Node::output(
        "out_constant",
        "constant",
        table(HitPolicy::First, &[], "constant", vec![Rule::new(vec![], value)]),
    ));
    DecisionGraph {
        id: format!("{} (constant)", template.id),
        model_type: template.model_type,
        nodes,
        edges: Vec::new(),
        output_node_id: "out_constant".into(),
    }
}

/// Requirements model with the UR → CR → logic convention on four inputs.
pub fn alarm_installation_model() -> DecisionGraph {
    let inputs: [(&str, &str, ValueType); 4] = [
        ("in_alarm_location", "Locatie alarminstallatie", ValueType::String),
        ("in_alarm_type", "Soort alarminstallatie", ValueType::String),
        ("in_env_plan", "Andere beoordeling omgevingsplan", ValueType::Boolean),
        ("in_sound_level", "Geluidsniveau bekend", ValueType::Boolean),
    ];
    let mut nodes: Vec<Node> = inputs.iter().map(|(id, name, t)| Node::input(*id, *name, *t)).collect();
    let mut cr_ids = Vec::new();
    for (id, name, t) in &inputs {
        let stem = id.trim_start_matches("in_");
        let ur = format!("ur_{stem}");
        let cr = format!("cr_{stem}");
        let ur_table = match t {
            ValueType::Boolean => boolean_pass_through(id, name),
            _ => {
                let values = if *id == "in_alarm_location" {
                    ["Binnen een gebouw", "Buiten een gebouw"]
                } else {
                    ["Inbraakalarm", "Brandalarm"]
                };
                table(
                    HitPolicy::Unique,
                    &[id],
                    name,
                    values.iter().map(|v| Rule::new(vec![eq(*v)], *v)).collect(),
                )
            }
        };
        nodes.push(Node::decision(ur.clone(), format!("{name} UR"), ur_table));
        nodes.push(Node::decision(
            cr.clone(),
            format!("{name} beantwoord CR"),
            table(
                HitPolicy::Unique,
                &[&ur],
                "beantwoord",
                vec![
                    Rule::new(vec![UnaryTest::NotNull], true),
                    Rule::new(vec![UnaryTest::IsNull], false),
                ],
            ),
        ));
        cr_ids.push(cr);
    }
    let refs: Vec<&str> = cr_ids.iter().map(String::as_str).collect();
    nodes.push(Node::decision(
        "all_answered",
        "Alle vragen beantwoord",
        table(
            HitPolicy::First,
            &refs,
            "beantwoord",
            vec![
                Rule::new(vec![eq(true); 4], true),
                Rule::new(vec![UnaryTest::Irrelevant; 4], false),
            ],
        ),
    ));
    nodes.push(Node::output(
        "out_requirements",
        "Indieningsvereisten alarminstallatie voldaan",
        table(
            HitPolicy::Unique,
            &["all_answered"],
            "voldaan",
            vec![Rule::new(vec![eq(true)], "Ja"), Rule::new(vec![eq(false)], "Nee")],
        ),
    ));
    let edges = edges_from_tables(&nodes);
    DecisionGraph {
        id: "Requirements - AlarminstallatieHebben".into(),
        model_type: ModelType::Requirements,
        nodes,
        edges,
        output_node_id: "out_requirements".into(),
    }
}

/// Cooling-water discharge requirements: categorical and binned string
/// inputs checked with `contains`, plus a presence-only input.
pub fn cooling_water_model() -> DecisionGraph {
    let mut nodes = vec![
        Node::input("in_activity", "Wat wilt u doen?", ValueType::String),
        Node::input("in_heat_load", "Maximale warmtevracht", ValueType::String),
        Node::input("in_contact", "Contactpersoon", ValueType::String),
        Node::input("in_measured", "Wordt het koelwater bemeten?", ValueType::Boolean),
    ];
    nodes.push(Node::decision(
        "activity_kind",
        "Soort activiteit",
        table(
            HitPolicy::First,
            &["in_activity"],
            "soort",
            vec![
                Rule::new(vec![UnaryTest::Contains("Start a new activity".into())], "nieuw"),
                Rule::new(vec![UnaryTest::Contains("Change or expand".into())], "wijziging"),
            ],
        ),
    ));
    nodes.push(Node::decision(
        "heat_over_limit",
        "Warmtevracht boven grens",
        table(
            HitPolicy::Unique,
            &["in_heat_load"],
            "boven",
            vec![
                Rule::new(vec![UnaryTest::Contains("Not over 600 m3".into())], false),
                Rule::new(
                    vec![UnaryTest::Not(Box::new(UnaryTest::Contains("Not over 600 m3".into())))],
                    true,
                ),
            ],
        ),
    ));
    nodes.push(Node::decision(
        "contact_cr",
        "Contactpersoon beantwoord CR",
        table(
            HitPolicy::Unique,
            &["in_contact"],
            "beantwoord",
            vec![
                Rule::new(vec![UnaryTest::NotNull], true),
                Rule::new(vec![UnaryTest::IsNull], false),
            ],
        ),
    ));
    nodes.push(Node::output(
        "out_requirements",
        "Indieningsvereisten koelwater lozen voldaan",
        table(
            HitPolicy::First,
            &["activity_kind", "heat_over_limit", "contact_cr", "in_measured"],
            "voldaan",
            vec![
                Rule::new(
                    vec![
                        UnaryTest::IsNull,
                        UnaryTest::Irrelevant,
                        UnaryTest::Irrelevant,
                        UnaryTest::Irrelevant,
                    ],
                    false,
                ),
                Rule::new(
                    vec![
                        UnaryTest::Irrelevant,
                        UnaryTest::Irrelevant,
                        eq(false),
                        UnaryTest::Irrelevant,
                    ],
                    false,
                ),
                Rule::new(vec![eq("nieuw"), eq(true), eq(true), eq(false)], false),
                Rule::new(vec![UnaryTest::Irrelevant; 4], true),
            ],
        ),
    ));
    let edges = edges_from_tables(&nodes);
    DecisionGraph {
        id: "Requirements - KoelwaterLozen".into(),
        model_type: ModelType::Requirements,
        nodes,
        edges,
        output_node_id: "out_requirements".into(),
    }
}

/// Outcome model with a "vaste waarde FALSE" placeholder input and textual
/// regulatory outcomes.
pub fn placeholder_outcome_model() -> DecisionGraph {
    let mut nodes = vec![
        Node::input("in_fixed", "vaste waarde FALSE", ValueType::Boolean),
        Node::input(
            "in_industrial",
            "Gaat het om een industriele lozing?",
            ValueType::Boolean,
        ),
        Node::input(
            "in_protected",
            "Ligt de locatie in een beschermd gebied?",
            ValueType::Boolean,
        ),
    ];
    nodes.push(Node::decision(
        "pt_fixed",
        "vaste waarde FALSE",
        boolean_pass_through("in_fixed", "vaste waarde"),
    ));
    nodes.push(Node::decision(
        "pt_industrial",
        "Industriele lozing herbruikbare set",
        boolean_pass_through("in_industrial", "industrieel"),
    ));
    nodes.push(Node::output(
        "out_outcome",
        "Conclusie lozen",
        table(
            HitPolicy::First,
            &["pt_fixed", "pt_industrial", "in_protected"],
            "conclusie",
            vec![
                Rule::new(
                    vec![eq(true), UnaryTest::Irrelevant, UnaryTest::Irrelevant],
                    "Niet van toepassing",
                ),
                Rule::new(vec![UnaryTest::Irrelevant, eq(true), eq(true)], "Vergunningplicht"),
                Rule::new(vec![UnaryTest::Irrelevant, eq(true), eq(false)], "Informatieplicht"),
                Rule::new(vec![UnaryTest::Irrelevant; 3], "Algemene regels van toepassing"),
            ],
        ),
    ));
    let edges = edges_from_tables(&nodes);
    DecisionGraph {
        id: "Outcome - LozenIndustrieel".into(),
        model_type: ModelType::Outcome,
        nodes,
        edges,
        output_node_id: "out_outcome".into(),
    }
}

/// Outcome model with a small three-stage chain.
pub fn storage_outcome_model() -> DecisionGraph {
    let mut nodes = vec![
        Node::input(
            "in_capacity",
            "Is de opslagcapaciteit groter dan 10 m3?",
            ValueType::Boolean,
        ),
        Node::input("in_hazardous", "Gaat het om gevaarlijke stoffen?", ValueType::Boolean),
        Node::input("in_underground", "Is de tank ondergronds?", ValueType::Boolean),
    ];
    nodes.push(Node::decision(
        "large_hazardous",
        "Grote opslag gevaarlijke stoffen",
        table(
            HitPolicy::Unique,
            &["in_capacity", "in_hazardous"],
            "groot",
            vec![
                Rule::new(vec![eq(true), eq(true)], true),
                Rule::new(vec![eq(false), UnaryTest::Irrelevant], false),
                Rule::new(vec![eq(true), eq(false)], false),
            ],
        ),
    ));
    nodes.push(Node::decision(
        "pt_underground",
        "Ondergronds",
        boolean_pass_through("in_underground", "ondergronds"),
    ));
    nodes.push(Node::output(
        "out_outcome",
        "Conclusie opslaan in opslagtank",
        table(
            HitPolicy::Unique,
            &["large_hazardous", "pt_underground"],
            "conclusie",
            vec![
                Rule::new(vec![eq(true), eq(true)], "Vergunningplicht"),
                Rule::new(vec![eq(true), eq(false)], "Meldingsplicht"),
                Rule::new(vec![eq(false), UnaryTest::Irrelevant], "Algemene regels"),
            ],
        ),
    ));
    let edges = edges_from_tables(&nodes);
    DecisionGraph {
        id: "Outcome - OpslaanOpslagtank".into(),
        model_type: ModelType::Outcome,
        nodes,
        edges,
        output_node_id: "out_outcome".into(),
    }
}

/// Requirements model with numeric-threshold-free boolean checks.
pub fn noise_requirements_model() -> DecisionGraph {
    let mut nodes = vec![
        Node::input("in_report", "Is een akoestisch rapport bijgevoegd?", ValueType::Boolean),
        Node::input("in_location", "Zijn de coordinaten opgegeven?", ValueType::Boolean),
        Node::input("in_type", "Type windturbine", ValueType::String),
    ];
    nodes.push(Node::decision(
        "ur_report",
        "Akoestisch rapport UR",
        boolean_pass_through("in_report", "rapport"),
    ));
    nodes.push(Node::decision(
        "cr_type",
        "Type windturbine beantwoord CR",
        table(
            HitPolicy::Unique,
            &["in_type"],
            "beantwoord",
            vec![
                Rule::new(vec![UnaryTest::NotNull], true),
                Rule::new(vec![UnaryTest::IsNull], false),
            ],
        ),
    ));
    nodes.push(Node::output(
        "out_requirements",
        "Indieningsvereisten geluid windturbine voldaan",
        table(
            HitPolicy::Any,
            &["ur_report", "in_location", "cr_type"],
            "voldaan",
            vec![
                Rule::new(vec![eq(true), eq(true), eq(true)], true),
                Rule::new(vec![eq(false), UnaryTest::Irrelevant, UnaryTest::Irrelevant], false),
                Rule::new(vec![UnaryTest::Irrelevant, eq(false), UnaryTest::Irrelevant], false),
                Rule::new(vec![UnaryTest::Irrelevant, UnaryTest::Irrelevant, eq(false)], false),
            ],
        ),
    ));
    let edges = edges_from_tables(&nodes);
    DecisionGraph {
        id: "Requirements - GeluidProdWindturbine".into(),
        model_type: ModelType::Requirements,
        nodes,
        edges,
        output_node_id: "out_requirements".into(),
    }
}

/// Parameters for [`random_boolean_model`].
#[derive(Debug, Clone)]
pub struct RandomModelParams {
    pub max_inputs: usize,
    pub max_logic_nodes: usize,
    pub max_identity_nodes: usize,
}

impl Default for RandomModelParams {
    fn default() -> Self {
        RandomModelParams {
            max_inputs: 10,
            max_logic_nodes: 6,
            max_identity_nodes: 6,
        }
    }
}

/// A random boolean-input model and the number of identity nodes injected.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub graph: DecisionGraph,
    pub injected_identity: usize,
}

fn random_condition<R: Rng>(rng: &mut R) -> UnaryTest {
    match rng.gen_range(0..10) {
        0..=2 => eq(true),
        3..=5 => eq(false),
        6 | 7 => UnaryTest::Irrelevant,
        8 => UnaryTest::NotNull,
        _ => UnaryTest::IsNull,
    }
}

fn random_logic_table<R: Rng>(rng: &mut R, refs: Vec<String>, output_name: &str) -> DecisionTable {
    let policy = *[HitPolicy::First, HitPolicy::First, HitPolicy::Unique, HitPolicy::Any]
        .choose(rng)
        .expect("non-empty");
    let n_rules = rng.gen_range(1..=4);
    let mut rules: Vec<Rule> = (0..n_rules)
        .map(|_| Rule::new(refs.iter().map(|_| random_condition(rng)).collect(), rng.gen_bool(0.5)))
        .collect();
    if rng.gen_bool(0.5) {
        rules.push(Rule::new(vec![UnaryTest::Irrelevant; refs.len()], rng.gen_bool(0.5)));
    }
    DecisionTable {
        hit_policy: policy,
        input_refs: refs,
        output_name: output_name.to_owned(),
        rules,
    }
}

/// Generates a random model over boolean inputs and splices identity
/// pass-through nodes into randomly chosen table references.
pub fn random_boolean_model<R: Rng>(rng: &mut R, params: &RandomModelParams, id: &str) -> SyntheticModel {
    let n_inputs = rng.gen_range(1..=params.max_inputs.max(1));
    let mut nodes: Vec<Node> = (0..n_inputs)
        .map(|i| Node::input(format!("i{i:02}"), format!("input {i}"), ValueType::Boolean))
        .collect();
    let mut available: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();

    let n_logic = rng.gen_range(0..=params.max_logic_nodes);
    for j in 0..=n_logic {
        let is_output = j == n_logic;
        let arity = rng.gen_range(1..=available.len().min(3));
        let refs: Vec<String> = available.choose_multiple(rng, arity).cloned().collect();
        let id = if is_output {
            "out".to_owned()
        } else {
            format!("l{j:02}")
        };
        let mut node = Node::decision(
            id.clone(),
            format!("logic {j}"),
            random_logic_table(rng, refs.clone(), "v"),
        );
        // A randomly generated single-column echo would be detected as identity.
        while !is_output && is_identity_node(&node) {
            node.table = Some(random_logic_table(rng, refs.clone(), "v"));
        }
        if is_output {
            node.kind = NodeKind::Output;
        }
        nodes.push(node);
        available.push(id);
    }

    let mut injected = 0;
    let n_identity = rng.gen_range(0..=params.max_identity_nodes);
    for k in 0..n_identity {
        let consumers: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.table.as_ref().is_some_and(|t| !t.input_refs.is_empty()))
            .map(|(i, _)| i)
            .collect();
        let Some(&ci) = consumers.choose(rng) else { break };
        let table = nodes[ci].table.as_ref().expect("table");
        let col = rng.gen_range(0..table.input_refs.len());
        let upstream = table.input_refs[col].clone();
        let pass_id = format!("p{k:02}");
        let mut pass = Node::decision(
            pass_id.clone(),
            format!("{upstream} herbruikbare set"),
            boolean_pass_through(&upstream, "v"),
        );
        if let Some(t) = pass.table.as_mut() {
            t.hit_policy = *[HitPolicy::Unique, HitPolicy::First, HitPolicy::Any]
                .choose(rng)
                .expect("non-empty");
            if rng.gen_bool(0.5) {
                t.rules.reverse();
            }
        }
        nodes[ci].table.as_mut().expect("table").input_refs[col] = pass_id;
        nodes.push(pass);
        injected += 1;
    }

    let edges = edges_from_tables(&nodes);
    SyntheticModel {
        graph: DecisionGraph {
            id: id.to_owned(),
            model_type: ModelType::Outcome,
            nodes,
            edges,
            output_node_id: "out".into(),
        },
        injected_identity: injected,
    }
}

/// A random DAG with node kinds assigned by position: sources become inputs,
/// the last node the output, everything else decisions. Tables are omitted,
/// so the result is only meant for structural measures.
pub fn random_structure<R: Rng>(rng: &mut R, n: usize, edge_probability: f64) -> DecisionGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(edge_probability) {
                edges.push(Edge::new(format!("n{i:02}"), format!("n{j:02}")));
            }
        }
    }
    structure_from_edges(n, &edges)
}

/// Builds a table-free graph over nodes `n00..` with the given edges.
pub fn structure_from_edges(n: usize, edges: &[Edge]) -> DecisionGraph {
    let has_in: std::collections::HashSet<&str> = edges.iter().map(|e| e.to.as_str()).collect();
    let nodes = (0..n)
        .map(|i| {
            let id = format!("n{i:02}");
            let kind = if i + 1 == n && n > 1 {
                NodeKind::Output
            } else if !has_in.contains(id.as_str()) {
                NodeKind::InputVariable
            } else {
                NodeKind::Decision
            };
            Node {
                id: id.clone(),
                name: id,
                kind,
                value_type: (kind == NodeKind::InputVariable).then_some(ValueType::Boolean),
                table: None,
            }
        })
        .collect();
    DecisionGraph {
        id: format!("structure-{n}"),
        model_type: ModelType::Outcome,
        nodes,
        edges: edges.to_vec(),
        output_node_id: format!("n{:02}", n.saturating_sub(1)),
    }
}

/// The bundled mini-corpus graphs, sorted by id.
pub fn mini_corpus_graphs() -> Vec<DecisionGraph> {
    let mut graphs = vec![
        wind_turbine_model(),
        placeholder_outcome_model(),
        storage_outcome_model(),
        alarm_installation_model(),
        cooling_water_model(),
        noise_requirements_model(),
    ];
    graphs.sort_by(|a, b| a.id.cmp(&b.id));
    graphs
}

/// Article links of each mini-corpus model.
pub const MINI_CORPUS_LINKS: [(&str, &[&str]); 6] = [
    (
        "Outcome - GeluidProdWindturbine",
        &["https://wetten.example/bal#bal-3.10", "bal-3.11"],
    ),
    ("Outcome - LozenIndustrieel", &["bal-3.20", "bal-3.21"]),
    (
        "Outcome - OpslaanOpslagtank",
        &["https://wetten.example/bal/bal-4.30", "bal-4.31"],
    ),
    ("Requirements - AlarminstallatieHebben", &["bal-4.40", "bal-4.41"]),
    ("Requirements - GeluidProdWindturbine", &["bal-3.13"]),
    ("Requirements - KoelwaterLozen", &["bal-3.50", "bal-3.51"]),
];

/// `(file name, DMN text)` of every model under `fixtures/mini_corpus/models`.
pub fn mini_corpus_model_files() -> Vec<(String, String)> {
    mini_corpus_graphs()
        .into_iter()
        .map(|g| {
            let links: Vec<String> = MINI_CORPUS_LINKS
                .iter()
                .find(|(id, _)| *id == g.id)
                .map(|(_, l)| l.iter().map(|s| (*s).to_owned()).collect())
                .unwrap_or_default();
            (format!("{}.dmn", g.id), crate::ingest::to_dmn_xml(&g, &links))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_graph;
    use rand::SeedableRng;

    #[test]
    fn fixtures_are_valid() {
        for g in mini_corpus_graphs() {
            let report = validate_graph(&g);
            assert!(report.is_ok(), "{}: {report}", g.id);
        }
    }

    #[test]
    fn random_models_are_valid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for i in 0..200 {
            let m = random_boolean_model(&mut rng, &RandomModelParams::default(), &format!("m{i}"));
            let report = validate_graph(&m.graph);
            assert!(report.is_ok(), "{report}");
        }
    }
}
