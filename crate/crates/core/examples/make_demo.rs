//! Writes the demo inputs: `hull.obj`, `lattice.json` and a campaign config
//! `demo.json` into the directory given as the first argument (default `demo`).

use std::path::PathBuf;

use morphreduce::campaign::{CampaignConfig, DmdSettings, SampleSettings};
use morphreduce::activesubspace::AnalysisSettings;
use morphreduce::ffd::{demo_lattice, LatticeDocument, SamplingScheme};
use morphreduce::geometry::{save_mesh, shapes::demo_hull, MeshFormat};
use morphreduce::surrogate::ObjectiveSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    std::fs::create_dir_all(&dir)?;

    save_mesh(&demo_hull::<f64>(), &dir.join("hull.obj"), MeshFormat::Obj)?;
    let (lattice, binding) = demo_lattice::<f64>();
    LatticeDocument::from_parts(&lattice, Some(&binding)).save(&dir.join("lattice.json"))?;

    let config = CampaignConfig {
        lattice: Some("lattice.json".into()),
        base_mesh: Some("hull.obj".into()),
        bounds: None,
        samples: SampleSettings {
            count: 130,
            scheme: SamplingScheme::LatinHypercube,
            seed: 5415,
        },
        objective: ObjectiveSpec::VolumeDragProxy {
            density: 1025.0,
            speed: 2.0,
            viscosity: 1.19e-6,
            length: None,
            wave_coefficient: 2e-3,
            noise: 0.0,
            seed: 0,
        },
        dmd: Some(DmdSettings::default()),
        analysis: AnalysisSettings {
            seed: 7,
            ..Default::default()
        },
        output_dir: "run".into(),
        workers: None,
    };
    let mut text = serde_json::to_string_pretty(&config)?;
    text.push('\n');
    std::fs::write(dir.join("demo.json"), text)?;
    println!("wrote demo inputs to {}", dir.display());
    Ok(())
}
