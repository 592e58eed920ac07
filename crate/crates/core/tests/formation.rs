use std::path::Path;

use voform::contract::validate_contract;
use voform::fixtures;
use voform::formation::{FormationError, ProviderChoice, Transition};
use voform::scenario::{parse_scenario, ScenarioFile};

fn bundled_file() -> ScenarioFile {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/earth_observation.json");
    parse_scenario(path).unwrap().file
}

#[test]
fn both_satellites_succeed_but_one_is_chosen() {
    let mut file = bundled_file();
    file.formation.trusted = None;
    for choice in [ProviderChoice::First, ProviderChoice::Seeded] {
        file.formation.provider_choice = choice;
        for seed in 0..8 {
            file.formation.seed = seed;
            let s = file.validate().unwrap();
            let trace = s.run();
            assert!(trace.completed(), "{:?}", trace.failure);
            let step = trace.step(Transition::AgreeWorkflow).unwrap();
            let image_successes = step
                .transcripts
                .iter()
                .filter(|t| t.outcome.is_success() && t.responder_role.to_string().contains("satImage"))
                .count();
            assert_eq!(image_successes, 2);
            let vo = trace.final_vo().unwrap();
            let image_providers: Vec<_> = vo
                .contracts
                .iter()
                .filter(|c| c.sdt.services()[0].name == "satImage")
                .flat_map(|c| c.context.iter().filter(|(_, l)| l.iter().any(|r| r.is_provider())))
                .collect();
            assert_eq!(image_providers.len(), 1);
            let satellites = ["satERS1Ag", "radSatAg"]
                .iter()
                .filter(|a| vo.agents.contains_key(&(**a).into()))
                .count();
            assert_eq!(satellites, 1);
        }
    }
}

#[test]
fn contracts_bind_the_client_to_each_provider() {
    let s = fixtures::earth_observation();
    let vo = s.run().final_vo().unwrap().clone();
    assert_eq!(vo.contracts.len(), 2);
    let wf = vo.workflow.as_ref().unwrap();
    for (c, svc) in vo.contracts.iter().zip(wf.services()) {
        assert!(validate_contract(c, &s.society).is_valid());
        assert_eq!(c.sdt.services(), std::slice::from_ref(svc));
        let requester = c.context[&"clientAg".into()].iter().next().unwrap();
        assert!(requester.is_requester());
        assert_eq!(c.context.len(), 2);
    }
    let satellite = &vo.contracts[0].context;
    assert!(satellite.contains_key(&"satERS1Ag".into()));
    assert_eq!(vo.contracts[0].gt.len(), 1);
    assert!(vo.contracts[1].context.contains_key(&"procOSAg".into()));
}

#[test]
fn without_the_oil_spill_processor_selection_loses_coverage() {
    let mut file = bundled_file();
    file.agents.retain(|a| a.id.as_str() != "procOSAg");
    file.registry.retain(|f| f.agent.as_str() != "procOSAg");
    file.formation
        .trusted
        .as_mut()
        .unwrap()
        .retain(|a| a.as_str() != "procOSAg");
    // procOSAg was the only provider of these two.
    file.services
        .retain(|s| s.name != "formatConversion" && s.name != "reprojection");
    let s = file.validate().unwrap();
    let trace = s.run();
    let failure = trace.failure.as_ref().unwrap();
    assert_eq!(failure.transition, Transition::SelectPartners);
    assert!(matches!(
        trace.error(),
        Some(FormationError::PruningBrokeCoverage(svc)) if svc.name == "oilSpillDetect"
    ));
    let found: Vec<String> = trace
        .step(Transition::DiscoverPartners)
        .unwrap()
        .after
        .agents
        .keys()
        .map(|a| a.to_string())
        .collect();
    assert_eq!(found, ["clientAg", "radSatAg", "satERS1Ag"]);
}

#[test]
fn removing_the_processor_alone_is_a_society_error() {
    let mut file = bundled_file();
    file.agents.retain(|a| a.id.as_str() != "procOSAg");
    file.registry.retain(|f| f.agent.as_str() != "procOSAg");
    let err = file.validate().unwrap_err();
    let fields: Vec<&str> = err.issues().iter().map(|i| i.field.as_str()).collect();
    assert_eq!(fields, ["services[2]", "services[3]", "formation.trusted[1]"]);
}
