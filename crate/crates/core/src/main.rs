use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use surfdist::io::{load_mesh_file, MeshFormat};
use surfdist::pipeline::{self, CorrespondenceMap, RunConfig, Stage};
use surfdist::tps::ChiProfile;
use surfdist::uniformize::flatten_to_disk;
use surfdist::{Error, Result};

#[derive(Parser)]
#[command(name = "surfdist", version, about = "Procrustes distances between disk-type surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conformally flatten a mesh to the unit disk.
    Flatten {
        mesh: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write an OBJ with the disk coordinates as texture coordinates.
        #[arg(long)]
        obj: Option<PathBuf>,
    },
    /// Distance and correspondence between two meshes.
    Distance {
        mesh_a: PathBuf,
        mesh_b: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Per-sample residual CSV.
        #[arg(long)]
        residuals: Option<PathBuf>,
    },
    /// Pairwise distance matrix of a directory of meshes or a text file listing them.
    Matrix {
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: PathBuf,
        /// Per-pair summaries as JSON.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Per-sample CSV from a saved distance result.
    ExportCorr {
        result: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    #[arg(long)]
    max_extrema: Option<usize>,
    #[arg(long)]
    fe_h: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    eps_floor: Option<f64>,
    #[arg(long, value_parser = parse_profile)]
    chi_profile: Option<ChiProfile>,
    /// Comma separated subset of mobius,tps,moser.
    #[arg(long, value_delimiter = ',', value_parser = parse_stage)]
    stages: Option<Vec<Stage>>,
    #[arg(long)]
    symmetrize: bool,
    #[arg(long)]
    screen_keep: Option<usize>,
    #[arg(long)]
    refine_theta: bool,
    #[arg(long)]
    seed_vertex: Option<usize>,
}

fn parse_profile(s: &str) -> std::result::Result<ChiProfile, String> {
    match s {
        "atanh" => Ok(ChiProfile::Atanh),
        "atan" => Ok(ChiProfile::Atan),
        _ => Err(format!("unknown profile '{s}' (atanh or atan)")),
    }
}

fn parse_stage(s: &str) -> std::result::Result<Stage, String> {
    match s {
        "mobius" => Ok(Stage::Mobius),
        "tps" => Ok(Stage::Tps),
        "moser" => Ok(Stage::Moser),
        _ => Err(format!("unknown stage '{s}' (mobius, tps or moser)")),
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f.clone() { cfg.$f = v; })*};
        }
        set!(samples, angles, max_extrema, fe_h, n_steps, eps_floor, chi_profile, stages, screen_keep, seed_vertex);
        cfg.symmetrize |= self.symmetrize;
        cfg.refine_theta |= self.refine_theta;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn mesh_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn list_meshes(input: &Path) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = if input.is_dir() {
        fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| MeshFormat::from_path(p).is_some())
            .collect()
    } else {
        let base = input.parent().unwrap_or(Path::new("."));
        fs::read_to_string(input)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };
    if input.is_dir() {
        paths.sort();
    }
    Ok(paths)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Flatten { mesh, output, obj } => {
            let m = load_mesh_file(&mesh)?.normalize_area()?;
            let param = flatten_to_disk(&m)?;
            fs::write(&output, param.to_json()?)?;
            if let Some(obj) = obj {
                param.write_obj_with_uv(&m, BufWriter::new(File::create(obj)?))?;
            }
            info!("flattened {} vertices", m.num_vertices());
        }
        Command::Distance { mesh_a, mesh_b, config, output, residuals } => {
            let cfg = config.resolve()?;
            let a = load_mesh_file(&mesh_a)?;
            let b = load_mesh_file(&mesh_b)?;
            let mut result = pipeline::continuous_procrustes(&a, &b, &cfg)?;
            result.source = mesh_name(&mesh_a);
            result.target = mesh_name(&mesh_b);
            if matches!(result.direction, pipeline::Direction::Reverse) {
                std::mem::swap(&mut result.source, &mut result.target);
            }
            println!("{:.10}", result.dpc_value);
            if let Some(path) = output {
                fs::write(path, result.to_json()?)?;
            }
            if let Some(path) = residuals {
                result.write_csv(BufWriter::new(File::create(path)?))?;
            }
        }
        Command::Matrix { input, config, output, pairs, jobs } => {
            let cfg = config.resolve()?;
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            }
            let meshes = list_meshes(&input)?
                .iter()
                .map(|p| Ok((mesh_name(p), load_mesh_file(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let matrix = pipeline::distance_matrix(&meshes, &cfg)?;
            matrix.write_csv(BufWriter::new(File::create(output)?))?;
            if let Some(path) = pairs {
                matrix.write_pairs_json(BufWriter::new(File::create(path)?))?;
            }
            let failed = matrix.pairs.iter().filter(|p| p.error.is_some()).count();
            info!("{} pairs, {} failed", matrix.pairs.len(), failed);
        }
        Command::ExportCorr { result, output } => {
            let c = CorrespondenceMap::from_json(&fs::read_to_string(result)?)?;
            c.write_csv(BufWriter::new(File::create(output)?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SURFDIST_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
