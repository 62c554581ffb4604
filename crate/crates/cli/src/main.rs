use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use revtree::crypto::{sha3_256, Backend};
use revtree::sim::{bench_csv, run_bench, run_simulation, SimConfig};
use revtree::{
    build_tree, decode_proof, decode_tree, encode_proof, Pseudonym, RevokedLeaf, Snapshot,
};

/// Exit codes: 0 success, 1 verification or logic failure, 2 usage or input error.
enum Failure {
    Logic(String),
    Input(String),
}

type CmdResult = Result<(), Failure>;

fn input<E: std::fmt::Display>(ctx: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(format!("{ctx}: {e}"))
}

#[derive(Parser)]
#[command(
    name = "revtree",
    version,
    about = "Huffman k-ary revocation trees and protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and sign a revocation tree from a CSV of `pseudonym-hex,revocation_epoch,frequency`.
    Build {
        leaves: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epoch: u64,
        /// Seed for the TTP master keys.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the TTP master public key as hex (default: `<out>.mpu`).
        #[arg(long)]
        mpu_out: Option<PathBuf>,
    },
    /// Extract the revocation proof for one pseudonym from a tree snapshot.
    Prove {
        tree: PathBuf,
        #[arg(long)]
        pseudonym: Pseudonym,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a proof against the TTP master public key.
    Verify {
        proof: PathBuf,
        #[arg(long)]
        pseudonym: Pseudonym,
        #[arg(long)]
        mpu_file: PathBuf,
        #[arg(long)]
        current_epoch: u64,
        #[arg(long, default_value_t = 1)]
        max_age: u64,
    },
    /// Run the protocol simulator and write a metrics report.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Report destination; stdout if omitted.
        #[arg(long)]
        report_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Per-epoch series as CSV.
        #[arg(long)]
        series_out: Option<PathBuf>,
    },
    /// Sweep a (k, zipf exponent) grid and write depth ratios as CSV.
    Bench {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        k_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        zipf_list: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Simulation parameters; flags override the config file, which overrides defaults.
#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    config_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    num_rsus: Option<usize>,
    #[arg(long)]
    num_obus: Option<usize>,
    #[arg(long)]
    num_revoked: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    queries_per_epoch: Option<usize>,
    #[arg(long)]
    zipf_exponent: Option<f64>,
    #[arg(long)]
    public_vehicle_fraction: Option<f64>,
    #[arg(long)]
    public_query_multiplier: Option<f64>,
    #[arg(long)]
    trust_threshold: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    cheater_rsu_ids: Option<Vec<u32>>,
    #[arg(long)]
    max_root_age: Option<u64>,
    #[arg(long)]
    backend: Option<Backend>,
}

impl SimArgs {
    fn config(&self) -> Result<SimConfig, Failure> {
        let mut cfg = match &self.config_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(input(path.display()))?;
                SimConfig::from_toml(&text).map_err(input(path.display()))?
            }
            None => SimConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        apply!(
            seed,
            k,
            num_rsus,
            num_obus,
            num_revoked,
            epochs,
            queries_per_epoch,
            zipf_exponent,
            public_vehicle_fraction,
            public_query_multiplier,
            trust_threshold,
            cheater_rsu_ids,
            max_root_age,
            backend
        );
        cfg.validate().map_err(input("configuration"))?;
        Ok(cfg)
    }
}

/// Write to a sibling temp file and rename, so a failed command leaves nothing behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(input(path.display()))?;
    tmp.write_all(bytes).map_err(input(path.display()))?;
    tmp.persist(path)
        .map_err(|e| Failure::Input(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn read_leaves(path: &Path) -> Result<Vec<RevokedLeaf>, Failure> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    let mut leaves = Vec::new();
    // One reader per line keeps reported line numbers physical across comments and blanks.
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let record = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(content.as_bytes())
            .records()
            .next()
            .transpose()
            .map_err(input(format!("{}: line {line}", path.display())))?
            .unwrap_or_default();
        let bad = |msg: String| Failure::Input(format!("{}: line {line}: {msg}", path.display()));
        if leaves.is_empty() && record.get(0) == Some("pseudonym") {
            continue;
        }
        if record.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", record.len())));
        }
        let pseudonym: Pseudonym = record[0]
            .parse()
            .map_err(|e| bad(format!("pseudonym: {e}")))?;
        let epoch: u64 = record[1]
            .parse()
            .map_err(|e| bad(format!("revocation epoch: {e}")))?;
        let frequency: u64 = record[2]
            .parse()
            .map_err(|e| bad(format!("frequency: {e}")))?;
        leaves.push(RevokedLeaf::new(pseudonym, epoch, frequency));
    }
    Ok(leaves)
}

fn cmd_build(
    leaves: &Path,
    k: usize,
    epoch: u64,
    seed: u64,
    out: &Path,
    mpu_out: Option<PathBuf>,
) -> CmdResult {
    let leaves = read_leaves(leaves)?;
    let scheme = Backend::Ristretto.scheme();
    let master = scheme.setup(&sha3_256(&[b"revtree/cli/ttp", &seed.to_be_bytes()]));
    let (tree, signed) = build_tree(leaves, k, epoch, scheme.as_ref(), &master)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let wpl = tree.weighted_path_length();
    let (count, depth) = (tree.leaf_count(), tree.depth());
    let snapshot = Snapshot::new(tree, signed);
    let mpu_path = mpu_out.unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".mpu");
        PathBuf::from(p)
    });
    write_atomic(out, &snapshot.encode())?;
    write_atomic(
        &mpu_path,
        format!("{}\n", hex::encode(&master.master_public)).as_bytes(),
    )?;
    println!(
        "root_digest\t{}",
        hex::encode(snapshot.signed_root.root_digest)
    );
    println!("epoch\t{epoch}");
    println!("leaf_count\t{count}");
    println!("depth\t{depth}");
    println!("weighted_path_length\t{wpl}");
    Ok(())
}

fn cmd_prove(tree: &Path, pseudonym: &Pseudonym, out: &Path) -> CmdResult {
    let bytes = fs::read(tree).map_err(input(tree.display()))?;
    let snapshot = decode_tree(&bytes).map_err(input(tree.display()))?;
    let proof = snapshot
        .prove(pseudonym)
        .ok_or_else(|| Failure::Logic(format!("{pseudonym}: not revoked")))?;
    let encoded = encode_proof(&proof);
    write_atomic(out, &encoded)?;
    println!("path\t{}", proof.path);
    println!("depth\t{}", proof.depth());
    println!("bytes\t{}", encoded.len());
    Ok(())
}

fn cmd_verify(
    proof: &Path,
    pseudonym: &Pseudonym,
    mpu_file: &Path,
    current_epoch: u64,
    max_age: u64,
) -> CmdResult {
    let mpu_text = fs::read_to_string(mpu_file).map_err(input(mpu_file.display()))?;
    let mpu = hex::decode(mpu_text.trim()).map_err(input(mpu_file.display()))?;
    let bytes = fs::read(proof).map_err(input(proof.display()))?;
    let reject = |reason: &str, detail: String| {
        println!("reject\t{reason}\t{detail}");
        Failure::Logic("proof rejected".into())
    };
    let proof = decode_proof(&bytes).map_err(|e| reject("malformed", e.to_string()))?;
    let scheme = Backend::Ristretto.scheme();
    match revtree::verify_proof(
        scheme.as_ref(),
        &proof,
        pseudonym,
        &mpu,
        current_epoch,
        max_age,
    ) {
        Ok(()) => {
            println!(
                "accept\tdepth={}\troot_epoch={}",
                proof.depth(),
                proof.signed_root.epoch
            );
            Ok(())
        }
        Err(e) => {
            use revtree::ProofRejection as R;
            let reason = match e {
                R::Malformed(_) => "malformed",
                R::PseudonymMismatch => "pseudonym-mismatch",
                R::RootMismatch => "root-mismatch",
                R::BadSignature => "bad-signature",
                R::Stale { .. } => "stale",
            };
            Err(reject(reason, e.to_string()))
        }
    }
}

fn cmd_simulate(
    sim: &SimArgs,
    report_out: Option<PathBuf>,
    format: Format,
    series_out: Option<PathBuf>,
) -> CmdResult {
    let cfg = sim.config()?;
    let report = run_simulation(&cfg).map_err(|e| Failure::Logic(e.to_string()))?;
    let body = match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    if let Some(path) = series_out {
        write_atomic(&path, report.series_csv().as_bytes())?;
    }
    match report_out {
        Some(path) => write_atomic(&path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_bench(sim: &SimArgs, ks: &[usize], zipf: &[f64], out: &Path) -> CmdResult {
    let cfg = sim.config()?;
    for &k in ks {
        SimConfig { k, ..cfg.clone() }
            .validate()
            .map_err(input("--k-list"))?;
    }
    for &s in zipf {
        SimConfig {
            zipf_exponent: s,
            ..cfg.clone()
        }
        .validate()
        .map_err(input("--zipf-list"))?;
    }
    let rows = run_bench(&cfg, ks, zipf).map_err(|e| Failure::Logic(e.to_string()))?;
    write_atomic(out, bench_csv(&rows).as_bytes())?;
    println!("rows\t{}", rows.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build {
            leaves,
            k,
            epoch,
            seed,
            out,
            mpu_out,
        } => cmd_build(&leaves, k, epoch, seed, &out, mpu_out),
        Command::Prove {
            tree,
            pseudonym,
            out,
        } => cmd_prove(&tree, &pseudonym, &out),
        Command::Verify {
            proof,
            pseudonym,
            mpu_file,
            current_epoch,
            max_age,
        } => cmd_verify(&proof, &pseudonym, &mpu_file, current_epoch, max_age),
        Command::Simulate {
            sim,
            report_out,
            format,
            series_out,
        } => cmd_simulate(&sim, report_out, format, series_out),
        Command::Bench {
            sim,
            k_list,
            zipf_list,
            out,
        } => cmd_bench(&sim, &k_list, &zipf_list, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Logic(msg)) => {
            eprintln!("revtree: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("revtree: {msg}");
            ExitCode::from(2)
        }
    }
}
