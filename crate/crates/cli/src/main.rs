use clap::{Parser, Subcommand};
use idsnet_cli::commands::{self, AblateArgs, EvalArgs, GenDataArgs, TrainArgs};

#[derive(Parser)]
#[command(name = "idsnet", version, about = "ResNet-1D / BiGRU / attention intrusion detection harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset as CSV.
    GenData(GenDataArgs),
    /// Train a model and write a checkpoint, epoch log and manifest.
    Train(TrainArgs),
    /// Score a checkpoint and write reports, confusion matrix, ROC points and latency.
    Eval(EvalArgs),
    /// Train and score every ablation case on one shared split.
    Ablate(AblateArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenData(a) => commands::gen_data(a).map(|_| ()),
        Command::Train(a) => commands::train(a).map(|o| {
            println!("checkpoint sha256 {}", o.checkpoint_sha256);
        }),
        Command::Eval(a) => commands::eval(a).map(|r| print!("{}", r.to_text())),
        Command::Ablate(a) => commands::ablate(a).map(|o| {
            let failed = o.rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} cases, {failed} failed", o.rows.len());
        }),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
