use super::AnimationProgram;

const TEMPLATE: &str = include_str!("runtime.js");
const PLACEHOLDER: &str = "__SWAY_PROGRAM__";

/// Text right before the embedded program JSON.
pub const PROGRAM_BEGIN: &str = "// <sway-program>\nconst PROGRAM = ";
/// Text right after the embedded program JSON.
pub const PROGRAM_END: &str = ";\n// </sway-program>";

/// ES module that recomputes weights from the live SVG and exposes
/// `createAnimation(svgRoot, options)` returning `{play, pause, replay}`.
/// The program's canonical JSON is embedded verbatim between
/// [`PROGRAM_BEGIN`] and [`PROGRAM_END`].
pub fn emit_runtime_script(program: &AnimationProgram) -> String {
    TEMPLATE.replacen(PLACEHOLDER, &program.to_json(), 1)
}

/// The JSON text embedded in a script produced by [`emit_runtime_script`].
pub fn embedded_program(script: &str) -> Option<&str> {
    let start = script.find(PROGRAM_BEGIN)? + PROGRAM_BEGIN.len();
    let len = script[start..].find(PROGRAM_END)?;
    Some(&script[start..start + len])
}
