use clap::Parser;

fn main() {
    let cli = bianchi::cli::Cli::parse();
    match bianchi::cli::execute(&cli) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
