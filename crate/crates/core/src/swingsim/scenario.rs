use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{
    find_equilibrium, kron_reduce, simulate, Event, EventAction, FullNetwork, NamedNetwork,
    SimConfig, SimOutput,
};
use crate::error::{check_dim, Error, Result};
use crate::model::{MachineSet, MatricesJson, ReducedNetwork, RotorSnapshot};

#[derive(Deserialize)]
#[serde(untagged)]
enum NetworkSpec {
    /// Bus admittance matrix plus the buses where generators connect.
    Full {
        g: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        gen_buses: Vec<usize>,
        #[serde(default)]
        x_d_prime: Option<Vec<f64>>,
    },
    Reduced(MatricesJson),
}

impl NetworkSpec {
    fn build(self) -> Result<ReducedNetwork> {
        match self {
            NetworkSpec::Reduced(m) => m.build(),
            NetworkSpec::Full {
                g,
                b,
                gen_buses,
                x_d_prime,
            } => {
                let full = FullNetwork::from_parts(&g, &b, gen_buses)?;
                Ok(kron_reduce(&full, x_d_prime.as_deref())?.network)
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ActionSpec {
    SetNetwork(String),
    ScaleMechPower(f64),
    SetMechPower(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventSpec {
    t: f64,
    action: ActionSpec,
}

/// How the initial rotor state is chosen.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Explicit {
        delta: Vec<f64>,
        #[serde(default)]
        speed: Option<Vec<f64>>,
    },
    /// Solve for the operating point of the initial network; `guess` defaults to all zeros.
    Equilibrium { equilibrium: EquilibriumSpec },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumSpec {
    #[serde(default)]
    pub guess: Option<Vec<f64>>,
    #[serde(default)]
    pub reference: usize,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Equilibrium {
            equilibrium: EquilibriumSpec {
                guess: None,
                reference: 0,
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioJson {
    machines: MachineSet,
    networks: BTreeMap<String, NetworkSpec>,
    #[serde(default = "default_initial")]
    initial_network: String,
    #[serde(default)]
    events: Vec<EventSpec>,
    #[serde(default)]
    config: SimConfig,
    #[serde(default)]
    init: InitSpec,
}

fn default_initial() -> String {
    "base".to_string()
}

/// A complete, validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub machines: MachineSet,
    pub networks: BTreeMap<String, Arc<ReducedNetwork>>,
    pub initial_network: String,
    pub events: Vec<Event>,
    pub config: SimConfig,
    pub init: InitSpec,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Invalid(msg) => Error::invalid(format!("{}: {msg}", path.display())),
            Error::Dimension { .. } => Error::invalid(format!("{}: {e}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ScenarioJson =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("scenario: {e}")))?;
        let n = raw.machines.len();
        let mut networks = BTreeMap::new();
        for (name, spec) in raw.networks {
            let net = spec
                .build()
                .map_err(|e| Error::invalid(format!("network {name:?}: {e}")))?;
            check_dim("scenario network", n, net.dim())?;
            networks.insert(name, Arc::new(net));
        }
        let lookup = |name: &str| {
            networks.get(name).cloned().ok_or_else(|| {
                Error::invalid(format!("scenario refers to unknown network {name:?}"))
            })
        };
        lookup(&raw.initial_network)?;
        let mut events = raw
            .events
            .into_iter()
            .map(|e| {
                let action = match e.action {
                    ActionSpec::SetNetwork(name) => EventAction::SetNetwork(NamedNetwork {
                        net: lookup(&name)?,
                        name,
                    }),
                    ActionSpec::ScaleMechPower(f) => EventAction::ScaleMechPower(f),
                    ActionSpec::SetMechPower(p) => EventAction::SetMechPower(p),
                };
                Ok(Event { t: e.t, action })
            })
            .collect::<Result<Vec<_>>>()?;
        // Stable: events listed for the same instant keep their file order.
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        raw.config.validate()?;
        Ok(Self {
            machines: raw.machines,
            networks,
            initial_network: raw.initial_network,
            events,
            config: raw.config,
            init: raw.init,
        })
    }

    pub fn initial(&self) -> NamedNetwork {
        NamedNetwork {
            name: self.initial_network.clone(),
            net: Arc::clone(&self.networks[&self.initial_network]),
        }
    }

    pub fn initial_state(&self) -> Result<RotorSnapshot> {
        let n = self.machines.len();
        match &self.init {
            InitSpec::Explicit { delta, speed } => {
                check_dim("initial angles", n, delta.len())?;
                let s = RotorSnapshot::new(0.0, delta.clone());
                Ok(match speed {
                    Some(w) => s.with_speed(w.clone()),
                    None => s,
                })
            }
            InitSpec::Equilibrium { equilibrium } => {
                let guess = equilibrium.guess.clone().unwrap_or_else(|| vec![0.0; n]);
                find_equilibrium(
                    &self.machines,
                    &self.initial().net,
                    &guess,
                    equilibrium.reference,
                )
            }
        }
    }

    pub fn run(&self) -> Result<SimOutput> {
        let init = self.initial_state()?;
        simulate(
            &self.machines,
            &self.initial(),
            &self.events,
            &self.config,
            &init,
        )
    }
}
