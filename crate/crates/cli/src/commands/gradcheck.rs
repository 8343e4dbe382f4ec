use impnet::gradcheck::{gradcheck, GradcheckOptions};
use impnet::model::preset_reduced;

use super::load_config;
use crate::error::{CliError, CliResult};
use crate::ModelSource;

pub fn run(source: &ModelSource, reduced: bool, opts: GradcheckOptions) -> CliResult {
    let config = match (&source.preset, reduced) {
        (Some(name), true) => preset_reduced(name)?,
        (None, true) => return Err(CliError::usage("--reduced applies only to --preset")),
        _ => load_config(source)?.config,
    };
    let report = gradcheck(&config, &opts)?;
    if report.vacuous() {
        eprintln!("warning: no gradients were compared (trials = {}); passing vacuously", opts.trials);
        println!("gradcheck: vacuous pass");
        return Ok(());
    }
    println!(
        "checked {} coordinates ({} skipped near kinks); worst relative error {:.3e} at {}",
        report.checked, report.skipped_kinks, report.worst_rel_err, report.worst_site
    );
    if report.passed {
        println!("gradcheck: pass (tol {:e})", opts.tol);
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "gradcheck failed: worst relative error {:.3e} exceeds {:e} at {}",
            report.worst_rel_err, opts.tol, report.worst_site
        )))
    }
}
