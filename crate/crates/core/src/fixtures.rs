//! Ready-made clauses, societies and contracts used by tests, examples and
//! the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};

use crate::contract::Contract;
use crate::contract::ContractConstraint;
use crate::formula::{Atom, Formula};
use crate::ids::{AgentId, ContractId};
use crate::protocol::role::{ProtocolClause, ProtocolOperation, Role, RoleLabel};
use crate::scenario::{parse_scenario_str, Scenario};
use crate::service::ServiceTerm;
use crate::society::{build_society, AgentSpec, FulfilmentPairing, Society};
use crate::workflow::Workflow;

pub const EARTH_OBSERVATION: &str = include_str!("../scenarios/earth_observation.json");

fn ops(lines: &[&str]) -> Vec<ProtocolOperation> {
    lines.iter().map(|l| l.parse().expect("fixture operation")).collect()
}

fn atom(src: &str) -> Atom {
    src.parse().expect("fixture atom")
}

fn label(src: &str) -> RoleLabel {
    src.parse().expect("fixture label")
}

/// Asks a provider for `S` and records `bought(S)` on acceptance.
pub fn requester_clause() -> ProtocolClause {
    ProtocolClause::new(
        "requester",
        label("requester(S)"),
        ops(&[
            "toBuy(S) & provides(Ag,S) [send(request(S),Ag,provider(S))] requested(S,Ag)",
            "requested(S,Ag) [receive(accept,Ag,provider(S))] bought(S)",
            "requested(S,Ag) [receive(refuse,Ag,provider(S))] true",
        ]),
    )
    .expect("requester clause")
}

/// Accepts a request for `S` exactly when it wants to sell `S`.
pub fn provider_clause() -> ProtocolClause {
    ProtocolClause::new(
        "provider",
        label("provider(S)"),
        ops(&[
            "true [receive(request(S),Ag,requester(S))] requestedBy(Ag,S)",
            "requestedBy(Ag,S) & toSell(S) [send(accept,Ag,requester(S))] sold(S)",
            "requestedBy(Ag,S) & ~toSell(S) [send(refuse,Ag,requester(S))] true",
        ]),
    )
    .expect("provider clause")
}

pub fn buyer_pairing() -> FulfilmentPairing {
    FulfilmentPairing::new(atom("toBuy(S)"), atom("bought(S)"))
}

pub fn seller_pairing() -> FulfilmentPairing {
    FulfilmentPairing::new(atom("toSell(S)"), atom("sold(S)"))
}

/// The bundled earth-observation scenario.
pub fn earth_observation() -> Scenario {
    parse_scenario_str(EARTH_OBSERVATION).expect("bundled scenario is valid")
}

/// A client, a format-conversion provider that also buys reprojection, and a
/// reprojection provider.
fn contract_x_society() -> Society {
    let req = requester_clause();
    let prov = provider_clause();
    let role = |l: &str, c: &ProtocolClause| Role::new(label(l), c.clone()).expect("fixture role");
    let client = AgentSpec::new(
        "clientAg",
        vec![role("requester(S)", &req)],
        vec![atom("toBuy(formatConversion([image.jpeg,jpegTOgif],imageGIF.gif))")],
    )
    .with_fulfilment(vec![buyer_pairing()]);
    let proc_f = AgentSpec::new(
        "procF",
        vec![
            role("provider(formatConversion(In,Out))", &prov),
            role("requester(S)", &req),
        ],
        vec![
            atom("toSell(formatConversion(In,Out))"),
            atom("toBuy(reprojection(In,Out))"),
        ],
    )
    .with_fulfilment(vec![seller_pairing(), buyer_pairing()]);
    let rep = AgentSpec::new(
        "repAg",
        vec![role("provider(reprojection(In,Out))", &prov)],
        vec![atom("toSell(reprojection(In,Out))")],
    )
    .with_fulfilment(vec![seller_pairing()]);
    let services = vec![
        ServiceTerm::abstract_named("formatConversion"),
        ServiceTerm::abstract_named("reprojection"),
    ];
    build_society(vec![client, proc_f, rep], services, vec![]).expect("contract fixture society")
}

fn conversion() -> ServiceTerm {
    "formatConversion([image.jpeg,jpegTOgif],imageGIF.gif)"
        .parse()
        .expect("fixture service")
}

fn context(entries: &[(&str, &[&str])]) -> BTreeMap<AgentId, BTreeSet<RoleLabel>> {
    entries
        .iter()
        .map(|(id, labels)| (AgentId::new(*id), labels.iter().map(|l| label(l)).collect()))
        .collect()
}

const REQ_FC: &str = "requester(formatConversion([image.jpeg,jpegTOgif],imageGIF.gif))";
const PROV_FC: &str = "provider(formatConversion([image.jpeg,jpegTOgif],imageGIF.gif))";

/// clientAg buys an image conversion from procF, due by a given date.
pub fn contract_x() -> (Society, Contract) {
    let gt: Formula = "dueBy(imageGIF.gif,1400hrs,12.4.09)"
        .parse()
        .expect("fixture guarantee");
    let contract = Contract {
        cid: ContractId::new("c_clientAg_formatConversion_0"),
        context: context(&[("clientAg", &[REQ_FC]), ("procF", &[PROV_FC])]),
        sdt: Workflow::new(vec![conversion()], Default::default()).expect("fixture workflow"),
        gt: vec![gt],
    };
    (contract_x_society(), contract)
}

/// Copies of the valid contract, each breaking exactly one constraint.
pub fn contract_x_mutants() -> Vec<(ContractConstraint, Contract)> {
    let (_, base) = contract_x();
    let mut out = Vec::new();

    let mut c = base.clone();
    c.cid = ContractId::new("Contract X");
    out.push((ContractConstraint::CidFormat, c));

    let mut c = base.clone();
    c.context = context(&[("procF", &[PROV_FC])]);
    out.push((ContractConstraint::DistinctParties, c));

    let mut c = base.clone();
    c.context = context(&[("clientAg", &[REQ_FC]), ("procF", &[PROV_FC, REQ_FC])]);
    out.push((ContractConstraint::Exclusion, c));

    let mut c = base.clone();
    let extra: ServiceTerm = "reprojection([scene1,utm29n],scene1utm)"
        .parse()
        .expect("fixture service");
    c.sdt = Workflow::new(vec![conversion(), extra], Default::default()).expect("fixture workflow");
    out.push((ContractConstraint::Coverage, c));

    let mut c = base;
    c.context = context(&[
        (
            "clientAg",
            &[REQ_FC, "provider(reprojection([scene1,utm29n],scene1utm))"],
        ),
        ("procF", &[PROV_FC]),
    ]);
    out.push((ContractConstraint::Capability, c));

    out
}
