use padbench_core::pad::{format_actions, parse_event_log, replay, PadConfig};

use crate::error::CliError;
use crate::inputs::{emit, read_text};
use crate::ReplayArgs;

pub fn run(args: &ReplayArgs) -> Result<(), CliError> {
    let mut config =
        PadConfig::new(args.window, args.candidates).map_err(|e| CliError::Usage(e.to_string()))?;
    config.emit_discard_on_timeout = !args.no_timeout_discard;

    let text = read_text(&args.file)?;
    let events = parse_event_log(&text).map_err(|e| CliError::data(&args.file, e))?;
    let actions = replay(&events, &config).map_err(|e| match e.index() {
        // Event i sits on line i + 2, after the header.
        Some(i) => CliError::Data(format!("{}: line {}: {e}", args.file.display(), i + 2)),
        None => CliError::data(&args.file, e),
    })?;
    if actions.is_empty() {
        return Ok(());
    }
    emit(&(format_actions(&actions) + "\n"))
}
