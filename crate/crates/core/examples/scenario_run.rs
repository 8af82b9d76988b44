//! Running a bundled scenario file end to end into a scratch directory.

use std::path::Path;

use qdiv::scenario::{self, Outcome, Overrides, ScenarioError};

pub fn run_example(out: &Path) -> Result<Outcome, ScenarioError> {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/amplitude_damping.json");
    let overrides = Overrides {
        out: Some(out.to_path_buf()),
        ..Overrides::default()
    };
    let prepared = scenario::load(&file, &overrides)?;
    let outcome = scenario::execute(&prepared)?;
    print!("{}", scenario::render(&prepared, &outcome));
    Ok(outcome)
}

#[allow(dead_code)]
fn main() {
    let out = std::env::temp_dir().join(format!("qdiv-example-{}", std::process::id()));
    if let Err(e) = run_example(&out) {
        eprintln!("{e}");
        std::process::exit(e.code);
    }
}
