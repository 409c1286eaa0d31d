//! Fuzzing harness around the template engine: file generation, parsing,
//! seed mutation and a black-box fuzz loop.

pub mod cli;
pub mod commands;
pub mod fuzz;
pub mod outcome;
pub mod stats;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use tmplfuzz_core::formats;
use tmplfuzz_core::templatelang::{parse_template, TemplateUnit};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_ROUNDTRIP: i32 = 3;
/// The file parsed but has bytes the template never reached.
pub const EXIT_TRAILING: i32 = 4;

/// A loaded template. `name` is the bundled name or the file stem.
pub struct LoadedTemplate {
    pub name: String,
    pub bundled: bool,
    pub unit: TemplateUnit,
}

/// Loads a bundled template by name (`mini`, `pnglite`) or a template file.
pub fn load_template(spec: &str) -> anyhow::Result<LoadedTemplate> {
    let (name, source, bundled) = match formats::bundled(spec) {
        Some(src) => (spec.to_string(), src.to_string(), true),
        None => {
            let path = Path::new(spec);
            if !path.exists() {
                let names: Vec<&str> = formats::BUNDLED.iter().map(|(n, _)| *n).collect();
                bail!("no template `{spec}` (bundled: {})", names.join(", "));
            }
            let src = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (stem, src, false)
        }
    };
    let unit = parse_template(&source).map_err(|e| anyhow::anyhow!("{}", e.render(spec)))?;
    for w in &unit.warnings {
        eprintln!("{}", w.render(spec));
    }
    Ok(LoadedTemplate {
        name,
        bundled,
        unit,
    })
}

/// Regular files in `dir`, sorted by name, skipping `.seed` and `.json` side files.
pub fn read_corpus(dir: &Path) -> anyhow::Result<Vec<(String, Vec<u8>)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading corpus {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| !matches!(p.extension().and_then(|e| e.to_str()), Some("seed" | "json" | "jsonl")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
            Ok((name, bytes))
        })
        .collect()
}
