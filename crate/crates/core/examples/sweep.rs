//! Runs the CLI's sweep in-process and prints the table as CSV.

fn main() {
    let args = ["wenzl-lab", "sweep", "--n-max", "4", "--l-max", "2", "--m-max", "2", "--samples", "50", "--format", "csv"];
    let code = wenzl_lab::cli::run(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
