//! Template-based question synthesis from the graph.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::OfflineError;
use crate::agent::humanize_property;
use crate::graph::PropertyGraph;
use crate::gremlin::{self, ExecutionLimits};
use crate::store::{ExamplePair, Provenance};

pub const ENTITY_HOLE: &str = "{entity}";
pub const PROPERTY_HOLE: &str = "{property}";

/// A question pattern and the script pattern answering it. `{entity}` takes
/// the name of a vertex with `label`; `{property}` takes one of
/// `properties`, written as a phrase in the question and as the key in the
/// script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph2NlTemplate {
    pub intent: String,
    pub label: String,
    pub question: String,
    pub script: String,
    #[serde(default)]
    pub properties: Vec<String>,
}

fn holes(text: &str) -> BTreeSet<&'static str> {
    [ENTITY_HOLE, PROPERTY_HOLE].into_iter().filter(|h| text.contains(h)).collect()
}

fn quote(name: &str) -> String {
    name.replace('\\', "\\\\").replace('\'', "\\'")
}

impl Graph2NlTemplate {
    fn new(intent: &str, label: &str, question: &str, script: &str, properties: &[&str]) -> Self {
        Graph2NlTemplate {
            intent: intent.into(),
            label: label.into(),
            question: question.into(),
            script: script.into(),
            properties: properties.iter().map(|p| p.to_string()).collect(),
        }
    }

    pub fn fill(&self, entity: &str, property: Option<&str>) -> (String, String) {
        let mut q = self.question.replace(ENTITY_HOLE, entity);
        let mut s = self.script.replace(ENTITY_HOLE, &quote(entity));
        if let Some(p) = property {
            q = q.replace(PROPERTY_HOLE, &humanize_property(p));
            s = s.replace(PROPERTY_HOLE, p);
        }
        (q, s)
    }

    /// Hole sets agree, properties exist on the label, and the script
    /// validates with sample fills.
    pub fn check(&self, graph: &PropertyGraph) -> Result<(), OfflineError> {
        let bad = |m: String| OfflineError::InvalidTemplate {
            intent: self.intent.clone(),
            message: m,
        };
        let (qh, sh) = (holes(&self.question), holes(&self.script));
        if qh != sh {
            return Err(bad(format!("question holes {qh:?} differ from script holes {sh:?}")));
        }
        if !qh.contains(ENTITY_HOLE) {
            return Err(bad("no {entity} hole".into()));
        }
        if qh.contains(PROPERTY_HOLE) == self.properties.is_empty() {
            return Err(bad("properties must be listed exactly when {property} is used".into()));
        }
        let label = graph
            .schema()
            .vertex_label(&self.label)
            .ok_or_else(|| bad(format!("unknown vertex label {}", self.label)))?;
        for p in &self.properties {
            if label.property(p).is_none() {
                return Err(bad(format!("{} has no property {p}", self.label)));
            }
        }
        let props: Vec<Option<&str>> = if self.properties.is_empty() {
            vec![None]
        } else {
            self.properties.iter().map(|p| Some(p.as_str())).collect()
        };
        for p in props {
            let (_, script) = self.fill("Sample", p);
            gremlin::check_script(&script, graph.schema()).map_err(|issues| {
                bad(issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))
            })?;
        }
        Ok(())
    }

    /// Every fill whose script returns rows on `graph`, in vertex-id order.
    fn instances(&self, graph: &PropertyGraph) -> Vec<ExamplePair> {
        let props: Vec<Option<&str>> = if self.properties.is_empty() {
            vec![None]
        } else {
            self.properties.iter().map(|p| Some(p.as_str())).collect()
        };
        let mut out = Vec::new();
        for v in graph.vertices().iter().filter(|v| v.label == self.label) {
            let Some(name) = v.props.get("name").and_then(|n| n.as_str()) else {
                continue;
            };
            for p in &props {
                let (question, script) = self.fill(name, *p);
                let Ok(t) = gremlin::parse(&script) else { continue };
                match gremlin::execute(&t, graph, ExecutionLimits::default()) {
                    Ok(rs) if !rs.is_empty() => {}
                    _ => continue,
                }
                let id = match p {
                    Some(p) => format!("g2nl-{}-{}-{}", self.intent, v.id, p),
                    None => format!("g2nl-{}-{}", self.intent, v.id),
                };
                out.push(ExamplePair {
                    id,
                    question,
                    script: t.pretty(),
                    provenance: Provenance::Graph2nl,
                    created_at: 0,
                });
            }
        }
        out
    }
}

const EXECUTIVES: &str = "g.V().has('company','name','{entity}').inE('serve').as('a').outV().as('b').project('name','position').by(select('b').values('name')).by(select('a').values('position'))";
const STAKES: &str = "g.V().has('company','name','{entity}').inE('personInvest').as('e').outV().as('p').project('shareholder','ratio').by(select('p').values('name')).by(select('e').values('ratio'))";

/// Twenty templates over the fixture schema: registration facts, contact
/// details, legal persons, executives, investments and beneficiaries.
pub fn default_templates() -> Vec<Graph2NlTemplate> {
    type T = Graph2NlTemplate;
    vec![
        T::new(
            "registration",
            "company",
            "What is the {property} of {entity}?",
            "g.V().has('company','name','{entity}').values('{property}')",
            &["postalCode", "registeredCapital", "establishmentDate", "province", "city", "industry", "operatingStatus", "registrationAddress"],
        ),
        T::new("contact", "company", "How can I reach {entity} by {property}?", "g.V().has('company','name','{entity}').values('{property}')", &["phone", "email"]),
        T::new("website", "company", "What is the official website of {entity}?", "g.V().has('company','name','{entity}').values('website')", &[]),
        T::new("legal", "company", "Who is the legal representative of {entity}?", "g.V().has('company','name','{entity}').in('legalPerson').values('name')", &[]),
        T::new(
            "legal_identity",
            "company",
            "Show the identity information of the legal representative of {entity}.",
            "g.V().has('company','name','{entity}').in('legalPerson').valueMap()",
            &[],
        ),
        T::new("execs", "company", "Who are the executives of {entity}?", EXECUTIVES, &[]),
        T::new("exec_count", "company", "How many executives does {entity} have?", "g.V().has('company','name','{entity}').in('serve').count()", &[]),
        T::new("holders", "company", "Who are the individual shareholders of {entity}?", "g.V().has('company','name','{entity}').in('personInvest').values('name')", &[]),
        T::new("stakes", "company", "What stakes do individual shareholders hold in {entity}?", STAKES, &[]),
        T::new("invests", "company", "Which companies has {entity} invested in?", "g.V().has('company','name','{entity}').out('companyInvest').values('name')", &[]),
        T::new("invest_count", "company", "How many companies has {entity} invested in?", "g.V().has('company','name','{entity}').out('companyInvest').count()", &[]),
        T::new("investors", "company", "Which companies have invested in {entity}?", "g.V().has('company','name','{entity}').in('companyInvest').values('name')", &[]),
        T::new(
            "control",
            "company",
            "Which companies does {entity} control within two levels of investment?",
            "g.V().has('company','name','{entity}').repeat(out('companyInvest')).emit().times(2).dedup().values('name')",
            &[],
        ),
        T::new(
            "beneficiary",
            "company",
            "Who is the ultimate beneficiary of {entity}?",
            "g.V().has('company','name','{entity}').in('finalBeneficiaryPerson').values('name')",
            &[],
        ),
        T::new(
            "beneficiary_company",
            "company",
            "Which company is the ultimate corporate beneficiary of {entity}?",
            "g.V().has('company','name','{entity}').in('finalBeneficiaryCompany').values('name')",
            &[],
        ),
        T::new(
            "profile",
            "company",
            "What is {entity}?",
            "g.V().has('company','name','{entity}').valueMap('name','description','industry','city','province')",
            &[],
        ),
        T::new(
            "portfolio_execs",
            "company",
            "Who are the executives of the companies {entity} has invested in?",
            "g.V().has('company','name','{entity}').out('companyInvest').in('serve').dedup().values('name')",
            &[],
        ),
        T::new("person_serves", "person", "Which companies does {entity} work for?", "g.V().has('person','name','{entity}').out('serve').values('name')", &[]),
        T::new(
            "person_legal",
            "person",
            "Which companies is {entity} the legal representative of?",
            "g.V().has('person','name','{entity}').out('legalPerson').values('name')",
            &[],
        ),
        T::new(
            "person_invests",
            "person",
            "Which companies has {entity} invested in personally?",
            "g.V().has('person','name','{entity}').out('personInvest').values('name')",
            &[],
        ),
    ]
}

/// Samples `n` distinct pairs, spreading them across templates. Every
/// emitted script validates and returns rows on `graph`.
pub fn synthesize_pairs(
    graph: &PropertyGraph,
    templates: &[Graph2NlTemplate],
    n: usize,
    seed: u64,
) -> Result<Vec<ExamplePair>, OfflineError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut pools = Vec::with_capacity(templates.len());
    for t in templates {
        t.check(graph)?;
        let pool = t.instances(graph);
        if pool.is_empty() {
            return Err(OfflineError::TemplateExhausted(t.intent.clone()));
        }
        pools.push(pool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in &mut pools {
        p.shuffle(&mut rng);
    }
    let mut order: Vec<usize> = (0..pools.len()).collect();
    order.shuffle(&mut rng);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let before = out.len();
        for &i in &order {
            if out.len() == n {
                break;
            }
            if let Some(p) = pools[i].pop() {
                out.push(p);
            }
        }
        if out.len() == before {
            return Err(OfflineError::TemplateExhausted(format!(
                "only {} distinct instances for {n} requested pairs",
                out.len()
            )));
        }
    }
    Ok(out)
}
