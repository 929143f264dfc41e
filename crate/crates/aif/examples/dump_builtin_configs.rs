//! Regenerates the bundled scenario files in `configs/` from the built-in
//! definitions. Run from the repository root after changing the built-ins:
//!
//! ```text
//! cargo run --example dump_builtin_configs
//! ```

use std::path::Path;

use aif::builtin_scenarios;

fn main() {
    let dir = Path::new("configs");
    std::fs::create_dir_all(dir).expect("create configs directory");
    for config in builtin_scenarios() {
        let path = dir.join(format!("{}.toml", config.name));
        let text = config.to_toml_string().expect("serialize scenario");
        std::fs::write(&path, text).expect("write scenario file");
        println!("wrote {}", path.display());
    }
}
