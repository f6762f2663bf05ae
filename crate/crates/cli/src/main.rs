use clap::Parser;

fn main() {
    let cli = bqo_cli::app::Cli::parse();
    std::process::exit(bqo_cli::app::execute(cli));
}
