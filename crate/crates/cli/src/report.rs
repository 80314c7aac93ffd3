use std::io::IsTerminal;
use std::sync::OnceLock;

use teaforge_core::semantics::{Diagnostic, Severity};

/// `TEAFORGE_COLOR=1` forces colour, `0` disables it; otherwise colour is on
/// only when stderr is a terminal.
fn color() -> bool {
    static ON: OnceLock<bool> = OnceLock::new();
    *ON.get_or_init(|| match std::env::var("TEAFORGE_COLOR").as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => std::io::stderr().is_terminal(),
    })
}

fn paint(code: &str, text: &str) -> String {
    if color() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

pub fn error(message: &str) {
    eprintln!("{}: {message}", paint("1;31", "error"));
}

pub fn warning(message: &str) {
    eprintln!("{}: {message}", paint("1;33", "warning"));
}

pub fn diagnostic(file: &str, d: &Diagnostic) {
    let line = d.render(file);
    let code = match d.severity {
        Severity::Error => "31",
        Severity::Warning => "33",
    };
    eprintln!("{}", paint(code, &line));
}
