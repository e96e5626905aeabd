fn main() {
    std::process::exit(tfe_workbench::dispatch(std::env::args_os()));
}
