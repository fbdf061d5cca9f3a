//! The oil and gas pipeline demonstration model.
//!
//! Built programmatically so tests, goldens and docs share one corpus.
//! Numeric choices the source material leaves open (loss priorities, time
//! budgets, likelihoods) are listed in [`FixtureManifest::fixture_choices`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::store::{EntityId, Parameter, Project, Store};
use crate::value::Value;

pub const PROJECT_ID: &str = "oil-gas-pipeline";
pub const PROJECT_NAME: &str = "Oil and Gas Pipeline";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Anchor {
    pub name: String,
    pub entity_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureManifest {
    /// Entity count per type; types with no entities are omitted.
    pub counts: BTreeMap<String, usize>,
    pub edge_count: usize,
    /// Entities tests refer to by name.
    pub anchors: Vec<Anchor>,
    /// Declared primary relations the fixture never instantiates.
    pub unexercised: BTreeSet<String>,
    /// Values chosen for the fixture rather than taken from the design.
    pub fixture_choices: Vec<String>,
}

impl FixtureManifest {
    pub fn anchor(&self, name: &str) -> Option<&Anchor> {
        self.anchors.iter().find(|a| a.name == name)
    }
}

struct Builder {
    store: Store,
    ids: HashMap<&'static str, EntityId>,
}

impl Builder {
    fn add(&mut self, ty: &str, name: &'static str, number: &str, attrs: Vec<(&str, Value)>) {
        let id = self
            .store
            .create_entity(ty, name, number, attrs)
            .unwrap_or_else(|e| panic!("fixture entity {ty} `{name}`: {e}"));
        assert!(
            self.ids.insert(name, id).is_none(),
            "fixture name `{name}` reused"
        );
    }

    fn id(&self, name: &str) -> &EntityId {
        self.ids
            .get(name)
            .unwrap_or_else(|| panic!("fixture has no `{name}`"))
    }

    fn rel_with(&mut self, source: &str, relation: &str, target: &str, attrs: Vec<(&str, Value)>) {
        let (s, t) = (self.id(source).clone(), self.id(target).clone());
        self.store
            .relate(&s, relation, &t, attrs)
            .unwrap_or_else(|e| panic!("fixture edge `{source}` {relation} `{target}`: {e}"));
    }

    fn rel(&mut self, source: &str, relation: &str, targets: &[&str]) {
        for t in targets {
            self.rel_with(source, relation, t, vec![]);
        }
    }
}

fn s(v: &str) -> Value {
    Value::from(v)
}

fn list(vs: &[&str]) -> Value {
    Value::List(vs.iter().map(|v| Value::from(*v)).collect())
}

fn condition(variable: &str, comparator: &str, value: f64, percent_of: Option<&str>) -> Value {
    let mut m = BTreeMap::from([
        ("variable".to_string(), s(variable)),
        ("comparator".to_string(), s(comparator)),
        ("value".to_string(), Value::Float(value)),
    ]);
    if let Some(p) = percent_of {
        m.insert("percentOf".to_string(), s(p));
    }
    Value::Object(m)
}

pub fn build_pipeline_model() -> Store {
    let mut b = Builder {
        store: Store::with_builtin(Project::new(PROJECT_ID, PROJECT_NAME)),
        ids: HashMap::new(),
    };

    // Physical hierarchy.
    b.add(
        "Component",
        "Oil and Gas Pipeline",
        "1",
        vec![
            ("type", s("System")),
            (
                "mission",
                s("Move product between end-points safely and at capacity"),
            ),
        ],
    );
    b.add(
        "Component",
        "Human Operator",
        "1.1",
        vec![("type", s("Human"))],
    );
    b.add(
        "Component",
        "System Manager",
        "1.2",
        vec![("type", s("Software"))],
    );
    b.add(
        "Component",
        "Pipeline Route",
        "1.3",
        vec![("type", s("Subsystem"))],
    );
    b.add(
        "Component",
        "Route Manager",
        "1.3.1",
        vec![("type", s("Software"))],
    );
    b.add(
        "Component",
        "Route LAN",
        "1.3.2",
        vec![("type", s("Network"))],
    );
    b.add(
        "Component",
        "Pipeline Segment",
        "1.3.3",
        vec![("type", s("Subsystem"))],
    );
    let segment_parts = [
        ("Pipe", "Hardware"),
        ("Pump", "Hardware"),
        ("Valve", "Hardware"),
        ("Pressure Sensor", "Hardware"),
        ("Temperature Sensor", "Hardware"),
        ("Flow Rate Sensor", "Hardware"),
        ("Segment Controller", "Software"),
        ("Segment LAN", "Network"),
        ("Smart PIG", "Hardware"),
    ];
    for (i, (name, ty)) in segment_parts.iter().enumerate() {
        b.add(
            "Component",
            name,
            &format!("1.3.3.{}", i + 1),
            vec![("type", s(ty))],
        );
    }
    b.rel_with(
        "Oil and Gas Pipeline",
        "builtFrom",
        "Human Operator",
        vec![("cardinality", s("1"))],
    );
    b.rel_with(
        "Oil and Gas Pipeline",
        "builtFrom",
        "System Manager",
        vec![("cardinality", s("1..2"))],
    );
    b.rel_with(
        "Oil and Gas Pipeline",
        "builtFrom",
        "Pipeline Route",
        vec![("cardinality", s("n"))],
    );
    b.rel_with(
        "Pipeline Route",
        "builtFrom",
        "Route Manager",
        vec![("cardinality", s("1..2"))],
    );
    b.rel_with(
        "Pipeline Route",
        "builtFrom",
        "Route LAN",
        vec![("cardinality", s("1"))],
    );
    b.rel_with(
        "Pipeline Route",
        "builtFrom",
        "Pipeline Segment",
        vec![("cardinality", s("n"))],
    );
    for (name, _) in segment_parts {
        b.rel_with(
            "Pipeline Segment",
            "builtFrom",
            name,
            vec![("cardinality", s("1"))],
        );
    }
    let pump = b.id("Pump").clone();
    b.store
        .set_parameters(
            &pump,
            vec![Parameter {
                name: "Discharge Pressure".into(),
                objective: Some(1200.0),
                threshold: Some(1400.0),
                design: Some(1250.0),
                units: Some("psi".into()),
            }],
        )
        .expect("pump parameters");

    // Generalization of the segment sensors.
    b.add(
        "Component",
        "Pipeline Sensor",
        "8",
        vec![
            ("type", s("Hardware")),
            ("description", s("Generic segment instrumentation")),
        ],
    );
    b.rel(
        "Pipeline Sensor",
        "generalizationOf",
        &["Pressure Sensor", "Temperature Sensor", "Flow Rate Sensor"],
    );

    // Context: everything outside the pipeline proper.
    b.add(
        "Component",
        "Pipeline End-Points",
        "2",
        vec![("type", s("External"))],
    );
    b.add("Component", "WAN", "3", vec![("type", s("Network"))]);
    b.add(
        "Component",
        "Environment",
        "4",
        vec![
            ("type", s("External")),
            ("outOfScopeAttackAnalysis", Value::Bool(true)),
            (
                "outofScopeJustification",
                s("Natural hazards are handled by safety analysis"),
            ),
        ],
    );
    b.add(
        "Component",
        "Security Operations Center",
        "5",
        vec![("type", s("External"))],
    );
    b.add(
        "Component",
        "Advanced Persistent Threat",
        "6",
        vec![("type", s("External"))],
    );
    b.add(
        "Component",
        "Mission Aware",
        "7",
        vec![
            ("type", s("Sentinel")),
            ("purpose", s("Detect inconsistent sensor reports")),
        ],
    );

    // Links: three SCADA messaging levels plus product transfer.
    b.add(
        "Link",
        "WAN SCADA Messaging",
        "1",
        vec![("protocol", s("DNP3"))],
    );
    b.add(
        "Link",
        "Route SCADA Messaging",
        "2",
        vec![("protocol", s("Modbus/TCP"))],
    );
    b.add(
        "Link",
        "Segment SCADA Messaging",
        "3",
        vec![("protocol", s("Modbus/TCP"))],
    );
    b.add(
        "Link",
        "Product Transfer",
        "4",
        vec![("description", s("Custody transfer of oil and gas"))],
    );
    b.rel(
        "WAN SCADA Messaging",
        "connectsTo",
        &["System Manager", "WAN", "Route Manager"],
    );
    b.rel(
        "Route SCADA Messaging",
        "connectsTo",
        &["Route Manager", "Route LAN", "Segment Controller"],
    );
    b.rel(
        "Segment SCADA Messaging",
        "connectsTo",
        &[
            "Segment Controller",
            "Segment LAN",
            "Pump",
            "Valve",
            "Pressure Sensor",
            "Temperature Sensor",
            "Flow Rate Sensor",
        ],
    );
    b.rel(
        "Product Transfer",
        "connectsTo",
        &["Pipeline End-Points", "Pipe"],
    );
    b.add("Interface", "Segment Control Interface", "1", vec![]);
    b.rel(
        "Segment Control Interface",
        "joins",
        &["Segment Controller", "Pump", "Valve"],
    );
    b.rel(
        "Segment SCADA Messaging",
        "implements",
        &["Segment Control Interface"],
    );

    // Items flowing through the loop.
    let control_actions = [
        "Pipeline Request",
        "Route Request",
        "Segment Request",
        "Pump & Valve Request",
        "Set Route Flow Rate",
    ];
    for (i, n) in control_actions.iter().enumerate() {
        b.add("ControlAction", n, &(i + 1).to_string(), vec![]);
    }
    let feedback = [
        "Pipeline Status",
        "Route Status",
        "Segment Status",
        "Pressure Reading",
        "Temperature Reading",
        "Flow Rate Reading",
    ];
    for (i, n) in feedback.iter().enumerate() {
        b.add("Feedback", n, &(i + 1).to_string(), vec![]);
    }
    b.add(
        "Context",
        "Route State",
        "1",
        vec![
            ("variables", list(&["currentFlowRate", "targetFlowRate"])),
            (
                "conditions",
                Value::List(vec![condition(
                    "currentFlowRate",
                    "LessThan",
                    80.0,
                    Some("targetFlowRate"),
                )]),
            ),
        ],
    );
    b.add(
        "Context",
        "Segment State",
        "2",
        vec![
            ("variables", list(&["dischargePressure"])),
            (
                "conditions",
                Value::List(vec![condition(
                    "dischargePressure",
                    "GreaterThan",
                    1400.0,
                    None,
                )]),
            ),
        ],
    );
    b.add("Item", "Oil and Gas", "1", vec![("units", s("bbl/day"))]);
    b.add("Item", "Inspection Report", "2", vec![]);
    b.add("Item", "Security Alert", "3", vec![]);

    // Functions.
    let functions: [(&'static str, &str, &str); 14] = [
        ("Transport Oil and Gas", "1", "Oil and Gas Pipeline"),
        ("Operate Pipeline", "1.1", "Human Operator"),
        ("Manage Pipeline", "1.2", "System Manager"),
        ("Manage Route", "1.3", "Route Manager"),
        ("Control Segment", "1.4", "Segment Controller"),
        ("Actuate Pump", "1.4.1", "Pump"),
        ("Actuate Valve", "1.4.2", "Valve"),
        ("Sense Pressure", "1.4.3", "Pressure Sensor"),
        ("Sense Temperature", "1.4.4", "Temperature Sensor"),
        ("Sense Flow Rate", "1.4.5", "Flow Rate Sensor"),
        ("Move Product", "1.5", "Pipe"),
        ("Inspect Pipe", "1.6", "Smart PIG"),
        ("Detect Sensor Anomalies", "1.7", "Mission Aware"),
        ("Respond to Incidents", "1.8", "Security Operations Center"),
    ];
    for (name, number, performer) in functions {
        b.add("Function", name, number, vec![]);
        b.rel(name, "performedBy", &[performer]);
    }
    b.rel(
        "Transport Oil and Gas",
        "decomposedBy",
        &[
            "Operate Pipeline",
            "Manage Pipeline",
            "Manage Route",
            "Control Segment",
            "Move Product",
            "Inspect Pipe",
            "Detect Sensor Anomalies",
            "Respond to Incidents",
        ],
    );
    b.add(
        "CallStructure",
        "Segment Sampling",
        "1",
        vec![("kind", s("Parallel"))],
    );
    b.add(
        "DomainSet",
        "Segment Instruments",
        "1",
        vec![(
            "values",
            list(&["pump", "valve", "pressure", "temperature", "flowRate"]),
        )],
    );
    b.rel("Control Segment", "decomposedBy", &["Segment Sampling"]);
    b.rel(
        "Segment Sampling",
        "decomposes",
        &[
            "Actuate Pump",
            "Actuate Valve",
            "Sense Pressure",
            "Sense Temperature",
            "Sense Flow Rate",
        ],
    );
    b.rel("Segment Sampling", "hasDomainSet", &["Segment Instruments"]);
    b.add("Exit", "Flow Restored", "1", vec![]);
    b.rel("Control Segment", "exitsBy", &["Flow Restored"]);

    // Control structure: who issues and consumes what.
    b.rel("Operate Pipeline", "outputs", &["Pipeline Request"]);
    b.rel("Operate Pipeline", "isTriggeredBy", &["Pipeline Status"]);
    b.rel(
        "Manage Pipeline",
        "isTriggeredBy",
        &["Pipeline Request", "Route Status"],
    );
    b.rel(
        "Manage Pipeline",
        "outputs",
        &["Route Request", "Set Route Flow Rate", "Pipeline Status"],
    );
    b.rel(
        "Manage Route",
        "isTriggeredBy",
        &["Route Request", "Set Route Flow Rate", "Segment Status"],
    );
    b.rel(
        "Manage Route",
        "outputs",
        &["Segment Request", "Route Status", "Route State"],
    );
    b.rel(
        "Control Segment",
        "isTriggeredBy",
        &[
            "Segment Request",
            "Pressure Reading",
            "Temperature Reading",
            "Flow Rate Reading",
        ],
    );
    b.rel(
        "Control Segment",
        "outputs",
        &["Pump & Valve Request", "Segment Status", "Segment State"],
    );
    b.rel("Actuate Pump", "isTriggeredBy", &["Pump & Valve Request"]);
    b.rel("Actuate Valve", "isTriggeredBy", &["Pump & Valve Request"]);
    b.rel("Sense Pressure", "outputs", &["Pressure Reading"]);
    b.rel("Sense Temperature", "outputs", &["Temperature Reading"]);
    b.rel("Sense Flow Rate", "outputs", &["Flow Rate Reading"]);
    b.rel("Move Product", "outputs", &["Oil and Gas"]);
    b.rel("Inspect Pipe", "outputs", &["Inspection Report"]);
    b.rel("Detect Sensor Anomalies", "outputs", &["Security Alert"]);
    b.rel(
        "Respond to Incidents",
        "isTriggeredBy",
        &["Security Alert", "Inspection Report"],
    );
    b.rel(
        "WAN SCADA Messaging",
        "transfers",
        &["Route Request", "Set Route Flow Rate", "Route Status"],
    );
    b.rel(
        "Route SCADA Messaging",
        "transfers",
        &["Segment Request", "Segment Status"],
    );
    b.rel(
        "Segment SCADA Messaging",
        "transfers",
        &[
            "Pump & Valve Request",
            "Pressure Reading",
            "Temperature Reading",
            "Flow Rate Reading",
        ],
    );
    b.rel("Product Transfer", "transfers", &["Oil and Gas"]);
    b.add(
        "Resource",
        "Sensor History",
        "1",
        vec![("amount", Value::Float(30.0)), ("units", s("days"))],
    );
    b.rel("Detect Sensor Anomalies", "consumes", &["Sensor History"]);

    // Safety: losses, hazards, unsafe control actions.
    b.add(
        "Loss",
        "Equipment Damage",
        "1",
        vec![("priority", Value::Int(1))],
    );
    b.add(
        "Loss",
        "Environmental Contamination",
        "2",
        vec![("priority", Value::Int(2))],
    );
    b.add(
        "Loss",
        "Sub-Optimal Capacity",
        "3",
        vec![("priority", Value::Int(3))],
    );
    b.add(
        "Hazard",
        "Equipment Operated Outside Normal Specification",
        "1",
        vec![],
    );
    b.add("Hazard", "Segment Overpressure", "2", vec![]);
    b.rel(
        "Equipment Operated Outside Normal Specification",
        "leadsTo",
        &["Equipment Damage", "Sub-Optimal Capacity"],
    );
    b.rel(
        "Segment Overpressure",
        "leadsTo",
        &["Equipment Damage", "Environmental Contamination"],
    );
    b.add(
        "UnsafeAction",
        "Decrease Route Flow",
        "1",
        vec![
            ("unsafeKind", s("TooEarlyTooLateWrongOrder")),
            (
                "description",
                s("Route flow decreased while flow is already below target"),
            ),
        ],
    );
    b.add(
        "UnsafeAction",
        "Pump & Valve Request Withheld",
        "2",
        vec![("unsafeKind", s("NotProviding"))],
    );
    b.rel(
        "Set Route Flow Rate",
        "hasVariation",
        &["Decrease Route Flow"],
    );
    b.rel(
        "Pump & Valve Request",
        "hasVariation",
        &["Pump & Valve Request Withheld"],
    );
    b.rel("Decrease Route Flow", "hasProcessModel", &["Route State"]);
    b.rel(
        "Pump & Valve Request Withheld",
        "hasProcessModel",
        &["Segment State"],
    );
    b.rel(
        "Decrease Route Flow",
        "leadsTo",
        &["Equipment Operated Outside Normal Specification"],
    );
    b.rel(
        "Pump & Valve Request Withheld",
        "leadsTo",
        &["Segment Overpressure"],
    );

    // Security: attack vectors and the scenarios they precipitate.
    b.add(
        "AttackVector",
        "Modification During Manufacture",
        "1",
        vec![
            ("likelihood", s("High")),
            ("severity", s("High")),
            ("domainOfAttack", s("SupplyChain")),
        ],
    );
    b.add(
        "AttackVector",
        "SCADA Command Injection",
        "2",
        vec![
            ("likelihood", s("Medium")),
            ("severity", s("High")),
            ("domainOfAttack", s("Communication")),
        ],
    );
    b.add(
        "AttackVector",
        "Insider Sabotage",
        "3",
        vec![
            ("likelihood", s("Low")),
            ("domainOfAttack", s("SocialEngineering")),
            ("outOfScope", Value::Bool(true)),
            (
                "outOfScopeJustification",
                s("Personnel vetting is outside the design scope"),
            ),
        ],
    );
    b.add(
        "AttackVector",
        "Flood Damage",
        "4",
        vec![
            ("likelihood", s("Low")),
            ("domainOfAttack", s("PhysicalSecurity")),
        ],
    );
    b.rel(
        "Modification During Manufacture",
        "violates",
        &["Pressure Sensor", "Temperature Sensor", "Flow Rate Sensor"],
    );
    b.rel(
        "SCADA Command Injection",
        "violates",
        &["WAN SCADA Messaging", "Route Manager"],
    );
    b.rel("Insider Sabotage", "violates", &["Human Operator"]);
    b.rel("Flood Damage", "violates", &["Environment"]);
    b.rel_with(
        "Pressure Sensor",
        "isViolatedBy",
        "Modification During Manufacture",
        vec![
            ("mitigationType", s("Detect")),
            ("justification", s("Cross-checked by Mission Aware")),
        ],
    );

    b.add(
        "LossScenario",
        "False Sensor Reports",
        "1",
        vec![
            ("threatCategory", s("Tampering")),
            ("detectPattern", s("DataConsistency")),
            ("detectionTime", Value::Float(5.0)),
            ("operatorDecisionTime", Value::Float(10.0)),
        ],
    );
    b.add(
        "LossScenario",
        "Spoofed Route Command",
        "2",
        vec![
            ("threatCategory", s("Spoofing")),
            ("detectPattern", s("ChangingControlInput")),
            ("detectionTime", Value::Float(15.0)),
            ("operatorDecisionTime", Value::Float(20.0)),
        ],
    );
    b.rel_with(
        "False Sensor Reports",
        "detectedByMonitoring",
        "Segment SCADA Messaging",
        vec![(
            "constraint",
            s("Reported flow, pressure and temperature must be mutually consistent"),
        )],
    );
    b.rel_with(
        "Spoofed Route Command",
        "detectedByMonitoring",
        "WAN SCADA Messaging",
        vec![(
            "constraint",
            s("Route commands originate only from the System Manager"),
        )],
    );
    b.rel(
        "False Sensor Reports",
        "precipitatedBy",
        &["Modification During Manufacture"],
    );
    b.rel(
        "Spoofed Route Command",
        "precipitatedBy",
        &["SCADA Command Injection"],
    );
    b.rel("False Sensor Reports", "leadsTo", &["Decrease Route Flow"]);
    b.rel("Spoofed Route Command", "leadsTo", &["Decrease Route Flow"]);
    b.rel(
        "Mission Aware",
        "protectsAgainst",
        &["False Sensor Reports"],
    );

    // Resilience: modes that remediate the scenarios.
    b.add(
        "ResilientMode",
        "Diverse Redundant Sensors",
        "1",
        vec![
            ("restoreTime", Value::Float(30.0)),
            ("operationalImpact", s("Low")),
            ("redundancyPattern", s("Diverse redundancy")),
        ],
    );
    b.add(
        "ResilientMode",
        "Manual Route Override",
        "2",
        vec![
            ("restoreTime", Value::Float(60.0)),
            ("operationalImpact", s("Medium")),
        ],
    );
    b.rel(
        "False Sensor Reports",
        "remediatedBy",
        &["Diverse Redundant Sensors"],
    );
    b.rel(
        "Spoofed Route Command",
        "remediatedBy",
        &["Manual Route Override"],
    );
    for part in [
        "Segment Controller",
        "Pressure Sensor",
        "Temperature Sensor",
        "Flow Rate Sensor",
    ] {
        b.rel(part, "containedBy", &["Diverse Redundant Sensors"]);
    }
    b.rel("Human Operator", "containedBy", &["Manual Route Override"]);
    b.rel("Manage Route", "containedBy", &["Manual Route Override"]);
    b.rel(
        "WAN SCADA Messaging",
        "containedBy",
        &["Manual Route Override"],
    );
    b.rel(
        "Diverse Redundant Sensors",
        "managedBy",
        &["Control Segment"],
    );
    b.rel(
        "Diverse Redundant Sensors",
        "recovers",
        &["Sense Flow Rate"],
    );
    b.rel("Manual Route Override", "managedBy", &["Operate Pipeline"]);
    b.rel("Manual Route Override", "recovers", &["Manage Route"]);

    // Requirements and documentation.
    b.add(
        "Requirement",
        "Maintain Safe Flow Rate",
        "1",
        vec![("rationale", s("Low flow damages pumps"))],
    );
    b.add(
        "Requirement",
        "Detect Inconsistent Sensor Data",
        "1.1",
        vec![],
    );
    b.rel(
        "Maintain Safe Flow Rate",
        "specifies",
        &["Manage Route", "Route SCADA Messaging"],
    );
    b.rel(
        "Detect Inconsistent Sensor Data",
        "refines",
        &["Maintain Safe Flow Rate"],
    );
    b.rel(
        "Detect Inconsistent Sensor Data",
        "specifies",
        &["Mission Aware", "Segment Control Interface"],
    );
    b.add(
        "Document",
        "Pipeline Concept of Operations",
        "1",
        vec![("reference", s("CONOPS-001"))],
    );
    b.add("Document", "Sensor Supply Chain Audit", "2", vec![]);
    b.rel(
        "Pipeline Concept of Operations",
        "documents",
        &[
            "Oil and Gas Pipeline",
            "Transport Oil and Gas",
            "Maintain Safe Flow Rate",
            "Product Transfer",
        ],
    );
    b.rel(
        "Sensor Supply Chain Audit",
        "documents",
        &["Modification During Manufacture", "False Sensor Reports"],
    );
    b.rel("Sensor Supply Chain Audit", "reports", &["Pipeline Sensor"]);

    b.store
}

/// Frozen expectations for [`build_pipeline_model`].
pub fn manifest() -> FixtureManifest {
    let counts = [
        ("AttackVector", 4),
        ("CallStructure", 1),
        ("Component", 23),
        ("Context", 2),
        ("ControlAction", 5),
        ("Document", 2),
        ("DomainSet", 1),
        ("Exit", 1),
        ("Feedback", 6),
        ("Function", 14),
        ("Hazard", 2),
        ("Interface", 1),
        ("Item", 3),
        ("Link", 4),
        ("Loss", 3),
        ("LossScenario", 2),
        ("Requirement", 2),
        ("ResilientMode", 2),
        ("Resource", 1),
        ("UnsafeAction", 2),
    ];
    let anchors = [
        ("Oil and Gas Pipeline", "Component"),
        ("Pipeline Route", "Component"),
        ("Pipeline Segment", "Component"),
        ("Route Manager", "Component"),
        ("Segment Controller", "Component"),
        ("Mission Aware", "Component"),
        ("Segment SCADA Messaging", "Link"),
        ("Set Route Flow Rate", "ControlAction"),
        ("Route State", "Context"),
        ("Decrease Route Flow", "UnsafeAction"),
        ("Equipment Operated Outside Normal Specification", "Hazard"),
        ("Equipment Damage", "Loss"),
        ("Sub-Optimal Capacity", "Loss"),
        ("False Sensor Reports", "LossScenario"),
        ("Modification During Manufacture", "AttackVector"),
        ("Diverse Redundant Sensors", "ResilientMode"),
    ];
    FixtureManifest {
        counts: counts.iter().map(|(t, n)| (t.to_string(), *n)).collect(),
        edge_count: EDGE_COUNT,
        anchors: anchors
            .iter()
            .map(|(n, t)| Anchor {
                name: n.to_string(),
                entity_type: t.to_string(),
            })
            .collect(),
        unexercised: UNEXERCISED.iter().map(|r| r.to_string()).collect(),
        fixture_choices: vec![
            "Loss priorities: Equipment Damage 1, Environmental Contamination 2, Sub-Optimal Capacity 3".into(),
            "False Sensor Reports: detection 5 s, operator decision 10 s".into(),
            "Spoofed Route Command: detection 15 s, operator decision 20 s".into(),
            "Restore times: Diverse Redundant Sensors 30 s, Manual Route Override 60 s".into(),
            "Likelihoods: Modification During Manufacture High, SCADA Command Injection Medium".into(),
            "Multiplicities n and 1..2 are recorded as builtFrom cardinality, not replicated".into(),
        ],
    }
}

const EDGE_COUNT: usize = 157;

const UNEXERCISED: &[&str] = &["Component.simulates"];

/// Primary relation names (as `Type.relation`) the store never instantiates.
pub fn unexercised_relations(store: &Store) -> BTreeSet<String> {
    let used: BTreeSet<(String, String)> = store
        .associations()
        .filter_map(|e| {
            let t = store.entity(&e.source_id)?.type_name().to_string();
            Some((t, e.relation_name))
        })
        .collect();
    store
        .schema()
        .relations()
        .filter(|r| r.primary && !used.contains(&(r.source_type.clone(), r.name.clone())))
        .map(|r| format!("{}.{}", r.source_type, r.name))
        .collect()
}
