use bcbounds::cli;

fn main() {
    let outcome = cli::run(std::env::args());
    print!("{}", outcome.report);
    if !outcome.report.ends_with('\n') && !outcome.report.is_empty() {
        println!();
    }
    std::process::exit(outcome.exit_code);
}
