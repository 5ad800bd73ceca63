use crate::error::{Error, Result};
use crate::ising::{BoltzmannMachine, ModelFile};

/// Bundled parameter sets. Table fixtures are stored already scaled from
/// their printed 1e-4 units; all fixtures load with bound checks disabled
/// because some printed values sit slightly outside the nominal caps.
pub const FIXTURE_NAMES: &[&str] = &[
    "fig4a_xor_ground",
    "fig4b_xor_trained",
    "fig7a_and",
    "table3_two_phase",
    "table4_adder_function",
    "table5_adder_distribution",
];

pub fn fixture_json(name: &str) -> Result<&'static str> {
    Ok(match name {
        "fig4a_xor_ground" => include_str!("../../fixtures/fig4a_xor_ground.json"),
        "fig4b_xor_trained" => include_str!("../../fixtures/fig4b_xor_trained.json"),
        "fig7a_and" => include_str!("../../fixtures/fig7a_and.json"),
        "table3_two_phase" => include_str!("../../fixtures/table3_two_phase.json"),
        "table4_adder_function" => include_str!("../../fixtures/table4_adder_function.json"),
        "table5_adder_distribution" => include_str!("../../fixtures/table5_adder_distribution.json"),
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

pub fn load_fixture(name: &str) -> Result<BoltzmannMachine> {
    ModelFile::from_json(fixture_json(name)?)?.to_machine()
}
