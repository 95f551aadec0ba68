//! Shipped reference scenarios: a 20×20 maritime search with a stationary
//! HVU on the west edge, five UAVs, a near area (TAI2) and a far area (TAI1)
//! hiding the red target. Coordinates are a reconstruction; run outcomes on
//! them are regression fixtures.

use crate::scenario::Scenario;

pub const NET_1_JSON: &str = include_str!("../scenarios/net-1.json");
pub const NET_2_JSON: &str = include_str!("../scenarios/net-2.json");
pub const NET_3_JSON: &str = include_str!("../scenarios/net-3.json");
pub const NET_TEAM_JSON: &str = include_str!("../scenarios/net-team.json");

fn parse(text: &str) -> Scenario {
    Scenario::from_json(text).expect("reference scenario parses")
}

/// Strict relay formation.
pub fn net_1() -> Scenario {
    parse(NET_1_JSON)
}

/// UAV4 and UAV5 may drop out of the relay for longer.
pub fn net_2() -> Scenario {
    parse(NET_2_JSON)
}

/// UAV3, UAV4 and UAV5 relaxed further.
pub fn net_3() -> Scenario {
    parse(NET_3_JSON)
}

/// Two teams: UAV1-3 tasked to TAI1, UAV4-5 to TAI2.
pub fn net_team() -> Scenario {
    parse(NET_TEAM_JSON)
}

/// `(id, scenario)` for every reference scenario.
pub fn all() -> Vec<(&'static str, Scenario)> {
    vec![
        ("net-1", net_1()),
        ("net-2", net_2()),
        ("net-3", net_3()),
        ("net-team", net_team()),
    ]
}
