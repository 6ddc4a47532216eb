use clap::Parser;
use qdomain_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.command.args().threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    match run(&cli.command) {
        Ok(summary) => println!("{summary}"),
        Err(f) => {
            eprintln!("{}: {f}", cli.command.name());
            std::process::exit(f.exit_code());
        }
    }
}
