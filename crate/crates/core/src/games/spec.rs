//! JSON game specifications.
//!
//! ```json
//! {"kind": "congestion", "n": 3,
//!  "facilities": [{"name": "e1", "loss": [0, 0.1, 0.2, 0.3]}],
//!  "types": {"t1": {"actions": [["e1"]]}},
//!  "players": ["t1", "t1", "t1"]}
//! ```
//!
//! `players` lists one type name per participating player. It may be omitted
//! when the game has a single type, in which case `num_players` (default: the
//! game's capacity) players all share it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    make_beach_mountain, make_query_game, make_routing_game, parallel_links, random_congestion_game,
    random_large_game, AnyGame, CongestionGame, Edge, Facility, Game, GeneralGame, Instance,
    Terminals, TypeActions, UtilityModel, DEFAULT_PATH_CAP,
};
use crate::error::{Error, Result};
use crate::rng::derived_rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionsSpec {
    pub actions: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminalSpec {
    #[serde(rename = "type")]
    pub type_name: String,
    pub source: String,
    pub dest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameKind {
    Congestion {
        n: usize,
        facilities: Vec<Facility>,
        types: BTreeMap<String, ActionsSpec>,
    },
    Routing {
        n: usize,
        edges: Vec<Edge>,
        terminals: Vec<TerminalSpec>,
        #[serde(default)]
        path_cap: Option<usize>,
    },
    /// `links` parallel links with `ℓ(y) = y/n`.
    ParallelLinks { n: usize, links: usize },
    RandomCongestion {
        n: usize,
        m: usize,
        #[serde(default = "one")]
        types: usize,
        actions: usize,
        max_step: f64,
        seed: u64,
    },
    /// Explicit utility tables: `utilities[type][player]` is a table over
    /// profiles in mixed radix, player 0 most significant.
    General {
        actions: Vec<usize>,
        utilities: BTreeMap<String, Vec<Vec<f64>>>,
        utility_bound: f64,
        lambda: f64,
    },
    BeachMountain {
        #[serde(default = "one")]
        n_ones: usize,
        #[serde(default)]
        antisocial: bool,
    },
    Query { database: Vec<u8>, queries: Vec<Vec<usize>> },
    RandomLarge {
        n: usize,
        k: usize,
        lambda: f64,
        #[serde(default = "one")]
        types: usize,
        seed: u64,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSpec {
    #[serde(flatten)]
    pub kind: GameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_players: Option<usize>,
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Builds the game and the type profile of its participants.
    pub fn build(&self) -> Result<Instance<AnyGame>> {
        let (game, default_types): (AnyGame, Option<Vec<usize>>) = match &self.kind {
            GameKind::Congestion { n, facilities, types } => {
                let fac_index = |name: &str| {
                    facilities
                        .iter()
                        .position(|f| f.name == name)
                        .ok_or_else(|| Error::validation(format!("unknown facility {name:?}")))
                };
                let types = types
                    .iter()
                    .map(|(name, spec)| {
                        let actions = spec
                            .actions
                            .iter()
                            .map(|a| a.iter().map(|f| fac_index(f)).collect::<Result<Vec<_>>>())
                            .collect::<Result<Vec<_>>>()?;
                        Ok(TypeActions { name: name.clone(), actions })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (AnyGame::Congestion(CongestionGame::new(*n, facilities.clone(), types)?), None)
            }
            GameKind::Routing { n, edges, terminals, path_cap } => {
                let terms: Vec<Terminals> = terminals
                    .iter()
                    .map(|t| Terminals {
                        type_name: t.type_name.clone(),
                        source: t.source.clone(),
                        dest: t.dest.clone(),
                    })
                    .collect();
                let g = make_routing_game(*n, edges.clone(), &terms, path_cap.unwrap_or(DEFAULT_PATH_CAP))?;
                (AnyGame::Congestion(g), None)
            }
            GameKind::ParallelLinks { n, links } => (AnyGame::Congestion(parallel_links(*n, *links)?), None),
            GameKind::RandomCongestion { n, m, types, actions, max_step, seed } => {
                let mut rng = derived_rng(*seed, 0);
                let g = random_congestion_game(*n, *m, *types, *actions, *max_step, &mut rng)?;
                (AnyGame::Congestion(g), None)
            }
            GameKind::General { actions, utilities, utility_bound, lambda } => {
                let type_names: Vec<String> = utilities.keys().cloned().collect();
                let n = actions.len();
                let mut tables = vec![Vec::with_capacity(type_names.len()); n];
                for per_player in utilities.values() {
                    if per_player.len() != n {
                        return Err(Error::validation("each type needs one utility table per player"));
                    }
                    for (i, t) in per_player.iter().enumerate() {
                        tables[i].push(t.clone());
                    }
                }
                let g = GeneralGame::new(
                    actions.clone(),
                    type_names,
                    UtilityModel::Table { tables },
                    *utility_bound,
                    *lambda,
                )?;
                (AnyGame::General(g), None)
            }
            GameKind::BeachMountain { n_ones, antisocial } => {
                let inst = make_beach_mountain(*n_ones, *antisocial)?;
                (AnyGame::General(inst.game), Some(inst.types))
            }
            GameKind::Query { database, queries } => {
                let db: Vec<bool> = database.iter().map(|&b| b != 0).collect();
                let inst = make_query_game(&db, queries)?;
                (AnyGame::General(inst.game), Some(inst.types))
            }
            GameKind::RandomLarge { n, k, lambda, types, seed } => {
                let mut rng = derived_rng(*seed, 0);
                let inst = random_large_game(*n, *k, *lambda, *types, &mut rng)?;
                (AnyGame::General(inst.game), Some(inst.types))
            }
        };
        let types = match (&self.players, default_types) {
            (Some(names), _) => super::resolve_types(&game, names)?,
            (None, Some(t)) => t,
            (None, None) => {
                if game.type_names().len() != 1 {
                    return Err(Error::validation(
                        "\"players\" is required when the game has several types",
                    ));
                }
                vec![0; self.num_players.unwrap_or(game.num_players())]
            }
        };
        super::validate_types(&game, &types)?;
        Ok(Instance { game, types })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn congestion_json_round_trip() {
        let text = r#"{"kind":"congestion","n":2,
            "facilities":[{"name":"e1","loss":[0,0.5,1]},{"name":"e2","loss":[0,0.25,0.5]}],
            "types":{"t1":{"actions":[["e1"],["e2"],["e1","e2"]]}}}"#;
        let spec = GameSpec::from_json(text).unwrap();
        let inst = spec.build().unwrap();
        assert_eq!(inst.types, vec![0, 0]);
        let g = inst.game.as_congestion().unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.actions(0)[2], vec![0, 1]);
        let again = GameSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again.build().unwrap().types, inst.types);
    }

    #[test]
    fn unknown_facility_is_rejected() {
        let text = r#"{"kind":"congestion","n":1,
            "facilities":[{"name":"e1","loss":[0,1]}],
            "types":{"t1":{"actions":[["e9"]]}}}"#;
        assert!(matches!(GameSpec::from_json(text).unwrap().build(), Err(Error::Validation(_))));
    }

    #[test]
    fn multi_type_games_need_players() {
        let text = r#"{"kind":"congestion","n":1,
            "facilities":[{"name":"e1","loss":[0,1]}],
            "types":{"a":{"actions":[["e1"]]},"b":{"actions":[["e1"]]}}}"#;
        assert!(GameSpec::from_json(text).unwrap().build().is_err());
    }

    #[test]
    fn general_table_from_json() {
        let text = r#"{"kind":"general","actions":[2,2],"utility_bound":1,"lambda":1,
            "utilities":{"t":[[1,0,0,1],[1,0,0,1]]}}"#;
        let inst = GameSpec::from_json(text).unwrap().build().unwrap();
        assert_eq!(inst.game.utility(&inst.types, &[1, 1], 0), 1.0);
        assert_eq!(inst.game.utility(&inst.types, &[1, 0], 1), 0.0);
    }

    #[test]
    fn routing_from_json() {
        let text = r#"{"kind":"routing","n":2,
            "edges":[{"name":"a","from":"s","to":"t","loss":[0,0.5,1]},
                     {"name":"b","from":"s","to":"t","loss":[0,0.5,1]}],
            "terminals":[{"type":"x","source":"s","dest":"t"}]}"#;
        let inst = GameSpec::from_json(text).unwrap().build().unwrap();
        assert_eq!(inst.game.num_actions(0, 0), 2);
    }
}
