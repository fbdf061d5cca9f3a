//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`).

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use cpsmeta::analysis::{
    control_loop, propagate_exposure, recovery_ratio, stpa_coverage, trace_chain, tradespace,
    unsafe_context_check,
};
use cpsmeta::fixture::build_pipeline_model;
use cpsmeta::interchange::{
    apply_delta, diff, export_model, import_model, invert_delta, isomorphic, ModelDocument,
};
use cpsmeta::query::{execute, full_selection_query, parse_query};
use cpsmeta::schema::{builtin_schema_source, parse_sdl, validate_schema};
use cpsmeta::store::Project;
use cpsmeta::{canonical_json, Store};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn schema_fidelity() -> Check {
    let schema = parse_sdl(builtin_schema_source()).map_err(|e| e.to_string())?;
    let diags = validate_schema(&schema);
    ensure(
        diags.is_empty(),
        format!("{} schema diagnostics", diags.len()),
    )?;
    ensure(
        schema.collections.len() == 20,
        format!("{} collections", schema.collections.len()),
    )?;
    let component = schema.entity_type("Component").ok_or("no Component")?;
    let declared: BTreeSet<&str> = component
        .relations
        .iter()
        .map(|r| r.name.as_str())
        .collect();
    let expected = [
        "builtFrom",
        "builtIn",
        "connectedTo",
        "documentedBy",
        "enablesDetectionOf",
        "generalizationOf",
        "isViolatedBy",
        "joinedTo",
        "kindOf",
        "performs",
        "protectsAgainst",
        "reportedBy",
        "simulates",
        "specifiedBy",
    ];
    let missing: Vec<_> = expected.iter().filter(|r| !declared.contains(*r)).collect();
    ensure(
        missing.is_empty(),
        format!("missing Component relations {missing:?}"),
    )?;
    Ok(format!(
        "20 collections, {} component relations",
        expected.len()
    ))
}

fn round_trips() -> Check {
    let base = build_pipeline_model();
    let text = export_model(&base)
        .map_err(|e| e.to_string())?
        .to_json_string();
    let doc = ModelDocument::from_json_str(&text).map_err(|e| e.to_string())?;
    let (back, _) = import_model(&doc, base.schema().clone()).map_err(|e| e.to_string())?;
    ensure(
        export_model(&back).unwrap().to_json_string() == text,
        "re-export differs",
    )?;
    ensure(
        text == golden("pipeline.json"),
        "export differs from golden",
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xD1FF);
    for i in 0..200 {
        let a = mutate(&base, &mut rng, 3);
        let steps = rng.gen_range(1..12);
        let b = mutate(&a, &mut rng, steps);
        let d = diff(&a, &b).map_err(|e| e.to_string())?;
        let got = apply_delta(&a, &d).map_err(|e| format!("pair {i}: {e}"))?;
        ensure(
            isomorphic(&got, &b),
            format!("pair {i}: apply(diff) not isomorphic"),
        )?;
    }
    for i in 0..200 {
        let steps = rng.gen_range(1..12);
        let d = diff(&base, &mutate(&base, &mut rng, steps)).unwrap();
        let after = apply_delta(&base, &d).map_err(|e| format!("delta {i}: {e}"))?;
        let inv = invert_delta(&d, &base).map_err(|e| e.to_string())?;
        let back = apply_delta(&after, &inv).map_err(|e| format!("inverse {i}: {e}"))?;
        ensure(
            isomorphic(&back, &base),
            format!("delta {i}: inverse does not restore base"),
        )?;
        let again = apply_delta(&back, &invert_delta(&inv, &after).unwrap()).unwrap();
        ensure(
            isomorphic(&again, &after),
            format!("delta {i}: inverse is not two-sided"),
        )?;
    }
    Ok("byte-identical export, 200 diff pairs, 200 inversions".into())
}

fn integrity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D);
    let mut ops = 0;
    for seq in 0..1000 {
        let mut s = Store::with_builtin(Project::new("p", "P"));
        let mut serial = 0;
        for _ in 0..rng.gen_range(5..40) {
            mutate_once(&mut s, &mut rng, &mut serial);
            ops += 1;
            check_integrity(&s).map_err(|e| format!("sequence {seq}: {e}"))?;
            ensure(
                built_from_acyclic(&s),
                format!("sequence {seq}: builtFrom cycle"),
            )?;
        }
    }
    Ok(format!("1000 sequences, {ops} operations"))
}

fn decrease_route_flow_chain() -> Check {
    let s = build_pipeline_model();
    let c = trace_chain(&s, "Decrease Route Flow").map_err(|e| e.to_string())?;
    let hazards: Vec<_> = c.hazards.iter().map(|h| h.name.as_str()).collect();
    ensure(
        hazards == ["Equipment Operated Outside Normal Specification"],
        format!("hazards {hazards:?}"),
    )?;
    let losses: BTreeSet<_> = c.losses.iter().map(|l| l.loss.name.as_str()).collect();
    ensure(
        losses == BTreeSet::from(["Equipment Damage", "Sub-Optimal Capacity"]),
        format!("losses {losses:?}"),
    )?;
    ensure(
        canonical_json(&c) == golden("trace_decrease_route_flow.json"),
        "chain differs from golden",
    )?;
    let cov = stpa_coverage(&s);
    let cell = cov
        .row("Set Route Flow Rate")
        .and_then(|r| r.cell("TooEarlyTooLateWrongOrder"))
        .ok_or("no coverage cell")?;
    ensure(
        cell.covered,
        "Set Route Flow Rate wrong-timing cell uncovered",
    )?;
    Ok("hazard, 2 losses, coverage cell".into())
}

fn false_sensor_reports_chain() -> Check {
    let s = build_pipeline_model();
    let c = trace_chain(&s, "False Sensor Reports").map_err(|e| e.to_string())?;
    let names =
        |v: &[cpsmeta::analysis::EntityRef]| v.iter().map(|r| r.name.clone()).collect::<Vec<_>>();
    let monitored: Vec<_> = c
        .monitored_targets
        .iter()
        .map(|m| (m.target.entity_type.as_str(), m.target.name.as_str()))
        .collect();
    ensure(
        monitored == [("Link", "Segment SCADA Messaging")],
        format!("monitors {monitored:?}"),
    )?;
    ensure(
        names(&c.precipitating_attack_vectors) == ["Modification During Manufacture"],
        "attack vectors",
    )?;
    ensure(
        names(&c.remediating_resilient_modes) == ["Diverse Redundant Sensors"],
        "resilient modes",
    )?;
    ensure(
        names(&c.unsafe_actions) == ["Decrease Route Flow"],
        "unsafe actions",
    )?;
    ensure(
        canonical_json(&c) == golden("trace_false_sensor_reports.json"),
        "chain differs from golden",
    )?;
    Ok("monitor, attack vector, mode, unsafe action".into())
}

fn loop_slice() -> Check {
    let s = build_pipeline_model();
    let slice = control_loop(&s, "Set Route Flow Rate").map_err(|e| e.to_string())?;
    let comps: BTreeSet<&str> = [
        "Human Operator",
        "System Manager",
        "Route Manager",
        "Segment Controller",
        "Pump",
        "Valve",
        "Pressure Sensor",
        "Temperature Sensor",
        "Flow Rate Sensor",
    ]
    .into();
    let links: BTreeSet<&str> = [
        "WAN SCADA Messaging",
        "Route SCADA Messaging",
        "Segment SCADA Messaging",
    ]
    .into();
    ensure(
        slice.component_names() == comps,
        format!("components {:?}", slice.component_names()),
    )?;
    ensure(
        slice.link_names() == links,
        format!("links {:?}", slice.link_names()),
    )?;
    let ca = s.find("ControlAction", "Set Route Flow Rate").unwrap();
    let (oc, ol) = loop_oracle(&s, ca);
    let ids = |v: &[cpsmeta::analysis::EntityRef]| {
        v.iter().map(|r| r.id.clone()).collect::<BTreeSet<_>>()
    };
    ensure(
        ids(&slice.components) == oc && ids(&slice.links) == ol,
        "slice differs from BFS oracle",
    )?;
    Ok(format!("{} components, {} links", comps.len(), links.len()))
}

fn exposure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE4);
    let mut largest = 0;
    for i in 0..100 {
        let mut s = random_hierarchy(&mut rng);
        largest = largest.max(s.len());
        let before = propagate_exposure(&s)
            .map_err(|e| e.to_string())?
            .transitive_ids();
        ensure(
            before == exposure_oracle(&s),
            format!("hierarchy {i}: differs from BFS oracle"),
        )?;
        let nodes: Vec<_> = s
            .entities()
            .filter(|e| e.type_name() != "AttackVector")
            .map(|e| e.id().clone())
            .collect();
        let av = s
            .create_entity::<_, String>("AttackVector", "Added", "999", [])
            .unwrap();
        for _ in 0..5 {
            let n = &nodes[rng.gen_range(0..nodes.len())];
            s.relate::<_, String>(n, "isViolatedBy", &av, []).unwrap();
        }
        let after = propagate_exposure(&s).unwrap().transitive_ids();
        ensure(
            before.iter().all(|(k, v)| v.is_subset(&after[k])),
            format!("hierarchy {i}: exposure shrank"),
        )?;
    }
    Ok(format!("100 hierarchies, up to {largest} entities"))
}

fn table_arithmetic() -> Check {
    let r = |e, m| recovery_ratio(e, m).map_err(|x| x.to_string());
    let a = r(45.0, 30.0)?;
    ensure((a.ratio - 2.0 / 3.0).abs() < 1e-12 && a.acceptable, "45/30")?;
    let b = r(45.0, 45.0)?;
    ensure(b.ratio == 1.0 && !b.acceptable, "45/45")?;
    let c = r(45.0, 90.0)?;
    ensure(c.ratio == 2.0 && !c.acceptable, "45/90")?;

    let s = build_pipeline_model();
    let rows = tradespace(&s);
    ensure(!rows.is_empty(), "no tradespace rows")?;
    for row in &rows {
        let parts = [
            row.detection_time,
            row.operator_decision_time,
            row.restore_time,
        ];
        let sum = parts.iter().copied().sum::<Option<f64>>();
        ensure(
            sum.is_some() && row.recovery_budget == sum,
            format!("{} budget", row.resilient_mode.name),
        )?;
    }
    let check = |flow: f64| {
        let obs = BTreeMap::from([
            ("currentFlowRate".to_string(), flow),
            ("targetFlowRate".to_string(), 100.0),
        ]);
        unsafe_context_check(&s, "Decrease Route Flow", &obs).map(|e| e.triggered)
    };
    let got = (check(70.0), check(90.0), check(80.0));
    ensure(
        got == (Ok(true), Ok(false), Ok(false)),
        format!("context checks {got:?}"),
    )?;
    Ok(format!(
        "3 ratios, {} budgets, 3 context checks",
        rows.len()
    ))
}

fn query_subset() -> Check {
    let s = build_pipeline_model();
    let export = serde_json::to_value(export_model(&s).unwrap()).unwrap();
    let q = parse_query(&full_selection_query(s.schema(), "oil-gas-pipeline", None))
        .map_err(|e| e.to_string())?;
    let out = execute(&s, &q).map_err(|e| e.to_string())?;
    let model = out["data"]["cpsSystemModel"]
        .as_object()
        .ok_or("no model")?;
    for c in &s.schema().collections {
        ensure(
            model[&c.field] == export[&c.field],
            format!("collection {} differs from export", c.field),
        )?;
    }
    let shape = model_shape(s.schema());
    let mut rng = ChaCha8Rng::seed_from_u64(0x9E);
    for i in 0..500 {
        let sel = random_sel(&shape, &mut rng);
        let q = parse_query(&model_query("oil-gas-pipeline", &sel))
            .map_err(|e| format!("selection {i}: {e}"))?;
        let out = execute(&s, &q).map_err(|e| format!("selection {i}: {e}"))?;
        let got = &out["data"]["cpsSystemModel"];
        ensure(
            sel.keys_match(got),
            format!("selection {i}: key set differs"),
        )?;
        let want: serde_json::Map<_, _> = sel
            .0
            .as_ref()
            .unwrap()
            .keys()
            .map(|k| (k.clone(), export[k].clone()))
            .collect();
        ensure(
            got == &sel.project(&serde_json::Value::Object(want)),
            format!("selection {i}: values differ"),
        )?;
    }
    Ok("full selection = export, 500 projections".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("schema fidelity", Duration::from_secs(1), schema_fidelity),
        ("round-trips", Duration::from_secs(30), round_trips),
        ("bidirectionality and integrity", Duration::MAX, integrity),
        (
            "unsafe action chain and coverage",
            Duration::MAX,
            decrease_route_flow_chain,
        ),
        (
            "loss scenario chain",
            Duration::MAX,
            false_sensor_reports_chain,
        ),
        ("control loop slice", Duration::MAX, loop_slice),
        ("exposure oracle", Duration::MAX, exposure),
        ("resilience arithmetic", Duration::MAX, table_arithmetic),
        ("query subset", Duration::MAX, query_subset),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = start.elapsed();
        let result = match result {
            Ok(note) if took > *limit => Err(format!("{note}; over the {limit:?} budget")),
            other => other,
        };
        let ms = took.as_millis();
        match result {
            Ok(note) => println!("PASS  {}  {name} ({ms} ms): {note}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {}  {name} ({ms} ms): {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
