//! Regenerates the bundled scenario files from the synth generators.
//!
//! Usage: cargo run -p cpsg-core --example gen_scenarios

use std::path::Path;

use cpsg_core::scenario::{save_params, save_scenario, CpsParams};
use cpsg_core::synth;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for scenario in [synth::harvey_synth(), synth::irma_synth()] {
        let path = dir.join(format!("{}.json", scenario.name));
        save_scenario(&path, &scenario).expect("write scenario");
        println!("wrote {}", path.display());
    }
    let path = dir.join("params_reference.json");
    save_params(&path, &CpsParams::reference()).expect("write params");
    println!("wrote {}", path.display());
}
