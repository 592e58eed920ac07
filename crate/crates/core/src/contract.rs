//! Contracts `<cid, context, sdt, gt>` binding VO members to the services
//! they provide, and their well-formedness rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::formula::Formula;
use crate::ids::{AgentId, ContractId};
use crate::protocol::role::RoleLabel;
use crate::service::ServiceTerm;
use crate::society::Society;
use crate::term::{is_instance_of, unify, Term, VarGen};
use crate::workflow::{Workflow, WorkflowError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    pub cid: ContractId,
    /// Each party with the roles it plays under the contract.
    pub context: BTreeMap<AgentId, BTreeSet<RoleLabel>>,
    /// Service description terms.
    pub sdt: Workflow,
    /// Guarantee terms, kept verbatim.
    #[serde(default)]
    pub gt: Vec<Formula>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractConstraint {
    CidFormat,
    /// Two distinct parties, one requesting and one providing a common service.
    DistinctParties,
    /// Nobody both requests and provides the same service.
    Exclusion,
    /// Every described service has a provider among the parties.
    Coverage,
    /// Parties only play roles they are equipped with in the society.
    Capability,
}

impl ContractConstraint {
    pub const ALL: [ContractConstraint; 5] = [
        ContractConstraint::CidFormat,
        ContractConstraint::DistinctParties,
        ContractConstraint::Exclusion,
        ContractConstraint::Coverage,
        ContractConstraint::Capability,
    ];
}

impl fmt::Display for ContractConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContractConstraint::CidFormat => "cid format",
            ContractConstraint::DistinctParties => "distinct requester and provider",
            ContractConstraint::Exclusion => "no party both requests and provides a service",
            ContractConstraint::Coverage => "every service has a provider",
            ContractConstraint::Capability => "parties hold their roles in the society",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractCheck {
    pub constraint: ContractConstraint,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractReport {
    pub cid: ContractId,
    pub checks: Vec<ContractCheck>,
}

impl ContractReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<ContractConstraint> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.constraint).collect()
    }
}

impl fmt::Display for ContractReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "contract {}:", self.cid)?;
        for c in &self.checks {
            write!(f, " [{}] {}", if c.passed { "ok" } else { "FAIL" }, c.constraint)?;
            if let Some(d) = &c.detail {
                write!(f, " ({d})")?;
            }
            write!(f, ";")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ContractError {
    #[error("requester and provider are both {0}")]
    SameParty(AgentId),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

/// Whether two terms unify once their variables are kept apart.
fn unifiable(a: &Term, b: &Term) -> bool {
    let mut gen = VarGen::above_terms([a, b]);
    let renamed = gen.renaming(&b.vars()).apply(b);
    unify(a, &renamed).is_some()
}

fn params<'a>(roles: &'a BTreeSet<RoleLabel>, name: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
    roles
        .iter()
        .filter(move |r| r.name == name)
        .filter_map(|r| r.param.as_ref())
}

fn check(constraint: ContractConstraint, failure: Option<String>) -> ContractCheck {
    ContractCheck {
        constraint,
        passed: failure.is_none(),
        detail: failure,
    }
}

pub fn validate_contract(c: &Contract, society: &Society) -> ContractReport {
    use crate::protocol::role::{PROVIDER, REQUESTER};
    let mut checks = Vec::new();

    checks.push(check(
        ContractConstraint::CidFormat,
        (!c.cid.is_well_formed()).then(|| format!("`{}` is not a lowercase identifier", c.cid)),
    ));

    let parties = c.context.iter().any(|(id1, roles1)| {
        c.context.iter().any(|(id2, roles2)| {
            id1 != id2 && params(roles1, REQUESTER).any(|p1| params(roles2, PROVIDER).any(|p2| unifiable(p1, p2)))
        })
    });
    checks.push(check(
        ContractConstraint::DistinctParties,
        (!parties).then(|| "no pair of distinct parties requests and provides a common service".to_string()),
    ));

    let both = c.context.iter().find_map(|(id, roles)| {
        params(roles, REQUESTER)
            .find_map(|p1| params(roles, PROVIDER).find(|p2| unifiable(p1, p2)).map(|p2| (p1, p2)))
            .map(|(p1, p2)| format!("{id} holds requester({p1}) and provider({p2})"))
    });
    checks.push(check(ContractConstraint::Exclusion, both));

    let uncovered: Vec<String> = c
        .sdt
        .services()
        .iter()
        .filter(|s| {
            let t = s.to_term();
            !c.context
                .values()
                .any(|roles| params(roles, PROVIDER).any(|p| is_instance_of(&t, p)))
        })
        .map(|s| s.to_string())
        .collect();
    checks.push(check(
        ContractConstraint::Coverage,
        (!uncovered.is_empty()).then(|| format!("no provider for {}", uncovered.join(", "))),
    ));

    let mut incapable = Vec::new();
    for (id, roles) in &c.context {
        match society.agent(id) {
            None => incapable.push(format!("{id} is not in the society")),
            Some(agent) => {
                for label in roles {
                    if !agent.roles.iter().any(|r| label.is_instance_of(&r.label)) {
                        incapable.push(format!("{id} cannot play {label}"));
                    }
                }
            }
        }
    }
    checks.push(check(
        ContractConstraint::Capability,
        (!incapable.is_empty()).then(|| incapable.join("; ")),
    ));

    ContractReport {
        cid: c.cid.clone(),
        checks,
    }
}

/// `c_<requester>_<service>_<index>`: reproducible and distinct for distinct
/// positions in a workflow.
pub fn contract_id(requester: &AgentId, service: &ServiceTerm, index: usize) -> ContractId {
    ContractId::new(format!("c_{}_{}_{}", requester, service.name, index))
}

/// A two-party contract for one service.
pub fn draft_contract(
    requester: &AgentId,
    provider: &AgentId,
    service: ServiceTerm,
    guarantees: Vec<Formula>,
    index: usize,
) -> Result<Contract, ContractError> {
    if requester == provider {
        return Err(ContractError::SameParty(requester.clone()));
    }
    let cid = contract_id(requester, &service, index);
    let param = service.to_term();
    let context = BTreeMap::from([
        (requester.clone(), BTreeSet::from([RoleLabel::requester(param.clone())])),
        (provider.clone(), BTreeSet::from([RoleLabel::provider(param)])),
    ]);
    Ok(Contract {
        cid,
        context,
        sdt: Workflow::new(vec![service], Default::default())?,
        gt: guarantees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn contract_x_is_valid() {
        let (society, contract) = fixtures::contract_x();
        let report = validate_contract(&contract, &society);
        assert!(report.is_valid(), "{report}");
        assert_eq!(report.checks.len(), ContractConstraint::ALL.len());
    }

    #[test]
    fn each_mutant_fails_only_its_constraint() {
        let (society, _) = fixtures::contract_x();
        for (constraint, mutant) in fixtures::contract_x_mutants() {
            let report = validate_contract(&mutant, &society);
            assert_eq!(report.failed(), vec![constraint], "{report}");
        }
    }

    #[test]
    fn drafted_contract_validates() {
        let scenario = fixtures::earth_observation();
        let service: ServiceTerm = "satImage([38.0,-9.4,1000,500,5,radar,3],results.data)".parse().unwrap();
        let c = draft_contract(&"clientAg".into(), &"satERS1Ag".into(), service.clone(), vec![], 0).unwrap();
        assert_eq!(c.cid.as_str(), "c_clientAg_satImage_0");
        assert!(validate_contract(&c, &scenario.society).is_valid());
        assert_eq!(
            draft_contract(&"clientAg".into(), &"clientAg".into(), service, vec![], 0),
            Err(ContractError::SameParty("clientAg".into()))
        );
    }

    #[test]
    fn guarantees_are_carried_verbatim() {
        let gt: Formula = "dueBy(imageGIF.gif,1400hrs,12.4.09)".parse().unwrap();
        let c = draft_contract(
            &"clientAg".into(),
            &"procF".into(),
            "formatConversion([image.jpeg,jpegTOgif],imageGIF.gif)".parse().unwrap(),
            vec![gt.clone()],
            3,
        )
        .unwrap();
        assert_eq!(c.gt, vec![gt]);
        assert_eq!(c.gt[0].to_string(), "dueBy(imageGIF.gif,1400hrs,12.4.09)");
    }

    #[test]
    fn self_dealing_contract_is_rejected() {
        let (society, mut c) = fixtures::contract_x();
        let roles = c.context.remove(&AgentId::new("clientAg")).unwrap();
        c.context.get_mut(&AgentId::new("procF")).unwrap().extend(roles);
        let failed = validate_contract(&c, &society).failed();
        assert!(failed.contains(&ContractConstraint::Exclusion));
        assert!(failed.contains(&ContractConstraint::DistinctParties));
    }
}
