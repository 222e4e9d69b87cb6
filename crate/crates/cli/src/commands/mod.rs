mod allocate;
mod model;
mod panel;
mod sim;

use crate::args::Command;
use crate::config::ConfigFile;
use crate::error::CliError;

/// Merge the config file into the subcommand's flags, run it and emit its
/// outputs.
pub fn run(command: &Command, file: &ConfigFile) -> Result<(), CliError> {
    macro_rules! go {
        ($section:literal, $args:expr, $f:path) => {{
            let mut merged = file.merge($section, $args)?;
            merged.output = $args.output.clone();
            $f(&merged)?.emit(&merged.output)
        }};
    }
    match command {
        Command::Sim(a) => go!("sim", a, sim::sim),
        Command::Sweep(a) => go!("sweep", a, sim::sweep),
        Command::InvertSigma(a) => go!("invert-sigma", a, sim::invert),
        Command::Calibrate(a) => go!("calibrate", a, sim::calibrate),
        Command::Decompose(a) => go!("decompose", a, panel::decompose),
        Command::Infer(a) => go!("infer", a, panel::infer),
        Command::Dispersion(a) => go!("dispersion", a, panel::dispersion),
        Command::Audit(a) => go!("audit", a, panel::audit),
        Command::Allocate(a) => go!("allocate", a, allocate::allocate),
    }
}
