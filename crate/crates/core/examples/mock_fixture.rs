//! Writes a demo target list and a mock-backend directory of canned
//! responses built from generated routes.
//!
//! usage: mock_fixture <library> <templates> <n_targets> <seed> <plan> <out_dir>

use std::path::PathBuf;

use synroute_core::llm::{populate_mock, sampling_plan, MockBackend};
use synroute_core::{
    BuildingBlockLibrary, CompatibilityTable, GeneratorConfig, RouteGenerator, RouteShape, TemplateSet,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() != 6 {
        return Err("usage: mock_fixture <library> <templates> <n_targets> <seed> <plan> <out_dir>".into());
    }
    let library = BuildingBlockLibrary::load(&PathBuf::from(&args[0]))?;
    let templates = TemplateSet::load(&PathBuf::from(&args[1]))?;
    let n: usize = args[2].parse()?;
    let seed: u64 = args[3].parse()?;
    let plan = sampling_plan(&args[4])?;
    let out = PathBuf::from(&args[5]);

    let table = CompatibilityTable::new(&library, &templates);
    let routes =
        RouteGenerator::new(&table, GeneratorConfig::default()).generate_routes(n, seed, RouteShape::Linear)?;
    let backend = MockBackend::new(out.join("mock"));
    let targets = populate_mock(&backend, &routes, &plan, &templates)?;
    let mut list = String::from("# demo targets, one SMILES per line\n");
    for t in &targets {
        list.push_str(t);
        list.push('\n');
    }
    std::fs::write(out.join("targets.txt"), list)?;
    println!(
        "{} targets, {} canned responses in {}",
        targets.len(),
        targets.len() * plan.total_inferences(),
        out.display()
    );
    Ok(())
}
