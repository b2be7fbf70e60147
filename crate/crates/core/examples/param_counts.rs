//! Prints the parameter count of every named architecture.

use geomnet::net::{presets, Model};
fn main() {
    for name in presets::PRESET_NAMES {
        let t = std::time::Instant::now();
        let m = Model::new(presets::preset(name).unwrap()).unwrap();
        println!("{name}: {} params ({:?})", m.param_count(), t.elapsed());
    }
}
