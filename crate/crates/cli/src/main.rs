use clap::Parser;

fn main() {
    let cli = dhlab_cli::Cli::parse();
    std::process::exit(dhlab_cli::run(&cli));
}
