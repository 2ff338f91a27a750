//! Interpreter results against a direct computation over the vertex and
//! edge lists.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use kgagent_core::graph::{Edge, GraphSchema, Vertex};
use kgagent_core::gremlin::{execute, parse, ExecutionLimits};
use kgagent_core::{PropertyGraph, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CITIES: [&str; 4] = ["Beijing", "Shanghai", "Binzhou", "Ningbo"];
const NAMES: [&str; 8] = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta", "Theta"];

fn schema() -> GraphSchema {
    GraphSchema::from_json(&std::fs::read_to_string(common::fixtures().join("schema.json")).unwrap()).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng) -> (Vec<Vertex>, Vec<Edge>) {
    let n = rng.gen_range(1..=50);
    let mut vs = Vec::new();
    for i in 0..n {
        let company = rng.gen_bool(0.5);
        let mut props = BTreeMap::new();
        props.insert("name".to_string(), Value::str(*NAMES.choose(rng).unwrap()));
        if company {
            props.insert("city".to_string(), Value::str(*CITIES.choose(rng).unwrap()));
        }
        vs.push(Vertex {
            id: format!("v{i:02}"),
            label: if company { "company" } else { "person" }.to_string(),
            props,
        });
    }
    let companies: Vec<&Vertex> = vs.iter().filter(|v| v.label == "company").collect();
    let persons: Vec<&Vertex> = vs.iter().filter(|v| v.label == "person").collect();
    let mut es = Vec::new();
    for i in 0..rng.gen_range(0..120) {
        let label = *["serve", "personInvest", "companyInvest", "legalPerson"].choose(rng).unwrap();
        let src = if label == "companyInvest" { companies.choose(rng) } else { persons.choose(rng) };
        let (Some(src), Some(dst)) = (src, companies.choose(rng)) else { continue };
        es.push(Edge {
            id: format!("e{i:03}"),
            label: label.to_string(),
            src: src.id.clone(),
            dst: dst.id.clone(),
            props: BTreeMap::new(),
        });
    }
    (vs, es)
}

fn name(v: &Vertex) -> Value {
    v.props["name"].clone()
}

fn sorted(mut rows: Vec<Value>) -> Vec<Value> {
    rows.sort();
    rows
}

#[test]
fn fifty_random_graphs() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let limits = ExecutionLimits::default();
    for _ in 0..50 {
        let (vs, es) = random_graph(&mut rng);
        let g = PropertyGraph::build(schema(), vs.clone(), es.clone()).unwrap();
        let by_id: BTreeMap<&str, &Vertex> = vs.iter().map(|v| (v.id.as_str(), v)).collect();
        let run = |s: &str| execute(&parse(s).unwrap(), &g, limits).unwrap().rows;
        let city = *CITIES.choose(&mut rng).unwrap();
        let nm = *NAMES.choose(&mut rng).unwrap();

        // has + count
        let want = vs.iter().filter(|v| v.label == "company" && v.props.get("city") == Some(&Value::str(city))).count();
        assert_eq!(run(&format!("g.V().has('company','city','{city}').count()")), vec![Value::Int(want as i64)]);

        // has + in + values
        let hits: Vec<&Vertex> = vs.iter().filter(|v| v.label == "company" && name(v) == Value::str(nm)).collect();
        let want: Vec<Value> = hits
            .iter()
            .flat_map(|c| es.iter().filter(move |e| e.label == "serve" && e.dst == c.id))
            .map(|e| name(by_id[e.src.as_str()]))
            .collect();
        assert_eq!(sorted(run(&format!("g.V().has('company','name','{nm}').in('serve').values('name')"))), sorted(want));

        // has + out + values
        let want: Vec<Value> = vs
            .iter()
            .filter(|v| v.label == "person" && name(v) == Value::str(nm))
            .flat_map(|p| es.iter().filter(move |e| e.label == "personInvest" && e.src == p.id))
            .map(|e| name(by_id[e.dst.as_str()]))
            .collect();
        assert_eq!(sorted(run(&format!("g.V().has('person','name','{nm}').out('personInvest').values('name')"))), sorted(want));

        // out then in
        let want: Vec<Value> = vs
            .iter()
            .filter(|v| v.label == "company")
            .flat_map(|c| es.iter().filter(move |e| e.label == "companyInvest" && e.src == c.id))
            .flat_map(|e| es.iter().filter(move |f| f.label == "legalPerson" && f.dst == e.dst))
            .map(|f| name(by_id[f.src.as_str()]))
            .collect();
        assert_eq!(sorted(run("g.V().hasLabel('company').out('companyInvest').in('legalPerson').values('name')")), sorted(want));

        // groupCount
        let mut counts: BTreeMap<String, i64> = BTreeMap::new();
        for v in vs.iter().filter(|v| v.label == "company") {
            *counts.entry(v.props["city"].as_str().unwrap().to_string()).or_default() += 1;
        }
        let got = run("g.V().hasLabel('company').groupCount().by('city')");
        assert_eq!(got.len(), 1);
        let Value::Map(m) = &got[0] else { panic!("groupCount row is not a map") };
        let got: BTreeMap<String, i64> = m
            .iter()
            .map(|(k, v)| match v {
                Value::Int(n) => (k.clone(), *n),
                other => panic!("count {other:?}"),
            })
            .collect();
        assert_eq!(got, counts);

        // edge source
        let want = es.iter().filter(|e| e.label == "serve").count() as i64;
        assert_eq!(run("g.E().hasLabel('serve').count()"), vec![Value::Int(want)]);
    }
    assert!(started.elapsed().as_secs() < 30);
}
