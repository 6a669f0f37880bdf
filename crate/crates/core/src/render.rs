//! Screenshot renderer subprocess and the pixel comparison oracle.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use image::RgbaImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

pub const INPUT_PLACEHOLDER: &str = "{input}";
pub const OUTPUT_PLACEHOLDER: &str = "{output}";

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("renderer template must contain {{input}} and {{output}} exactly once each: {0:?}")]
    InvalidTemplate(String),
    #[error("could not start renderer {program:?}: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("renderer exited with {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("renderer timed out after {0} s")]
    Timeout(u64),
    #[error("renderer produced no image at {0}")]
    MissingOutput(PathBuf),
    #[error("renderer i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Error)]
#[error("cannot decode image {path}: {message}")]
pub struct DecodeError {
    pub path: PathBuf,
    pub message: String,
}

/// Anything that turns an HTML file into a PNG screenshot.
pub trait Renderer {
    fn render(&mut self, input: &Path, output: &Path) -> Result<(), RenderError>;
}

impl<R: Renderer + ?Sized> Renderer for &mut R {
    fn render(&mut self, input: &Path, output: &Path) -> Result<(), RenderError> {
        (**self).render(input, output)
    }
}

/// External screenshot command, e.g. `shot --html {input} --png {output}`.
///
/// The template is split into argv with shell quoting rules but never run
/// through a shell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RendererCommand {
    pub command_template: String,
    pub timeout_seconds: u64,
}

impl RendererCommand {
    pub fn new(template: impl Into<String>) -> Result<Self, RenderError> {
        Self::with_timeout(template, 60)
    }

    pub fn with_timeout(template: impl Into<String>, timeout_seconds: u64) -> Result<Self, RenderError> {
        let command_template = template.into();
        let once = |p: &str| command_template.matches(p).count() == 1;
        if !once(INPUT_PLACEHOLDER) || !once(OUTPUT_PLACEHOLDER) {
            return Err(RenderError::InvalidTemplate(command_template));
        }
        if shlex::split(&command_template).is_none_or(|v| v.is_empty()) {
            return Err(RenderError::InvalidTemplate(command_template));
        }
        Ok(RendererCommand { command_template, timeout_seconds })
    }

    pub fn argv(&self, input: &Path, output: &Path) -> Vec<String> {
        shlex::split(&self.command_template)
            .unwrap_or_default()
            .into_iter()
            .map(|arg| {
                arg.replace(INPUT_PLACEHOLDER, &input.to_string_lossy())
                    .replace(OUTPUT_PLACEHOLDER, &output.to_string_lossy())
            })
            .collect()
    }
}

impl Renderer for RendererCommand {
    fn render(&mut self, input: &Path, output: &Path) -> Result<(), RenderError> {
        let argv = self.argv(input, output);
        let _ = std::fs::remove_file(output);
        run_with_timeout(&argv, None, self.timeout_seconds)?;
        if !output.is_file() {
            return Err(RenderError::MissingOutput(output.to_path_buf()));
        }
        load_rgba(output)?;
        Ok(())
    }
}

/// Runs `argv`, optionally feeding `stdin`, and returns stdout. Fails on a
/// nonzero exit or when `timeout_seconds` elapses.
pub(crate) fn run_with_timeout(
    argv: &[String],
    stdin: Option<&[u8]>,
    timeout_seconds: u64,
) -> Result<Vec<u8>, RenderError> {
    let (program, args) = argv.split_first().ok_or_else(|| RenderError::InvalidTemplate(String::new()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| RenderError::Spawn { program: program.clone(), source })?;

    let writer = stdin.map(|data| {
        let mut pipe = child.stdin.take().expect("piped stdin");
        let data = data.to_vec();
        std::thread::spawn(move || {
            use std::io::Write;
            let _ = pipe.write_all(&data);
        })
    });
    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out_pipe.read_to_end(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err_pipe.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(Duration::from_secs(timeout_seconds))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(RenderError::Timeout(timeout_seconds));
        }
    };
    if let Some(w) = writer {
        let _ = w.join();
    }
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(RenderError::Failed {
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&stderr).trim().to_string(),
        });
    }
    Ok(stdout)
}

/// Tolerances of the screenshot comparison. The default is pixel-exact.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VisualOracleConfig {
    /// Largest per-channel difference still counted as equal.
    pub max_channel_delta: u8,
    /// Largest fraction of differing pixels still counted as a match.
    pub max_differing_pixel_fraction: f64,
}

impl VisualOracleConfig {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.max_differing_pixel_fraction)
    }
}

pub fn load_rgba(path: &Path) -> Result<RgbaImage, DecodeError> {
    image::open(path)
        .map(|img| img.to_rgba8())
        .map_err(|e| DecodeError { path: path.to_path_buf(), message: e.to_string() })
}

/// Whether two decoded screenshots match under `cfg`.
pub fn images_equal(a: &RgbaImage, b: &RgbaImage, cfg: &VisualOracleConfig) -> bool {
    if a.dimensions() != b.dimensions() {
        return false;
    }
    let total = u64::from(a.width()) * u64::from(a.height());
    if total == 0 {
        return true;
    }
    let differing = a
        .pixels()
        .zip(b.pixels())
        .filter(|(p, q)| p.0.iter().zip(q.0.iter()).any(|(x, y)| x.abs_diff(*y) > cfg.max_channel_delta))
        .count() as u64;
    (differing as f64) / (total as f64) <= cfg.max_differing_pixel_fraction
}

/// Decodes both files and compares them with [`images_equal`].
pub fn visually_equal(a: &Path, b: &Path, cfg: &VisualOracleConfig) -> Result<bool, DecodeError> {
    let a = load_rgba(a)?;
    let b = load_rgba(b)?;
    Ok(images_equal(&a, &b, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgba;

    fn solid(w: u32, h: u32) -> RgbaImage {
        RgbaImage::from_pixel(w, h, Rgba([10, 20, 30, 255]))
    }

    #[test]
    fn template_validation() {
        assert!(RendererCommand::new("shot {input} {output}").is_ok());
        assert!(RendererCommand::new("shot {input}").is_err());
        assert!(RendererCommand::new("shot {input} {input} {output}").is_err());
        assert!(RendererCommand::new("{input}{output}").is_ok());
        assert!(RendererCommand::new("shot '{input} {output}").is_err());
    }

    #[test]
    fn argv_substitution_without_shell() {
        let cmd = RendererCommand::new("shot --in={input} 'a b' {output}").unwrap();
        let argv = cmd.argv(Path::new("/tmp/x y.html"), Path::new("/tmp/o.png"));
        assert_eq!(argv, ["shot", "--in=/tmp/x y.html", "a b", "/tmp/o.png"]);
    }

    #[test]
    fn identical_images_are_equal() {
        assert!(images_equal(&solid(4, 4), &solid(4, 4), &VisualOracleConfig::default()));
    }

    #[test]
    fn one_channel_off_by_one_fails_by_default() {
        let a = solid(4, 4);
        let mut b = a.clone();
        b.put_pixel(1, 1, Rgba([11, 20, 30, 255]));
        assert!(!images_equal(&a, &b, &VisualOracleConfig::default()));
        let lenient = VisualOracleConfig { max_channel_delta: 1, ..Default::default() };
        assert!(images_equal(&a, &b, &lenient));
    }

    #[test]
    fn differing_fraction_threshold() {
        // 100 of 10_000 pixels (1%) differ.
        let a = solid(100, 100);
        let mut b = a.clone();
        for x in 0..100 {
            b.put_pixel(x, 7, Rgba([200, 0, 0, 255]));
        }
        let cfg = VisualOracleConfig { max_channel_delta: 0, max_differing_pixel_fraction: 0.02 };
        assert!(images_equal(&a, &b, &cfg));
        let tight = VisualOracleConfig { max_differing_pixel_fraction: 0.005, ..cfg };
        assert!(!images_equal(&a, &b, &tight));
        let exact = VisualOracleConfig { max_differing_pixel_fraction: 0.01, ..cfg };
        assert!(images_equal(&a, &b, &exact));
    }

    #[test]
    fn size_mismatch_is_unequal() {
        let cfg = VisualOracleConfig { max_channel_delta: 255, max_differing_pixel_fraction: 1.0 };
        assert!(!images_equal(&solid(4, 4), &solid(4, 5), &cfg));
    }

    #[test]
    fn file_comparison_and_decode_errors() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.png");
        let b = dir.path().join("b.png");
        solid(3, 3).save(&a).unwrap();
        solid(3, 3).save(&b).unwrap();
        assert!(visually_equal(&a, &b, &VisualOracleConfig::default()).unwrap());
        let bad = dir.path().join("bad.png");
        std::fs::write(&bad, b"not a png").unwrap();
        let err = visually_equal(&a, &bad, &VisualOracleConfig::default()).unwrap_err();
        assert_eq!(err.path, bad);
    }

    #[cfg(unix)]
    #[test]
    fn command_renderer_failures() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.html");
        let output = dir.path().join("out.png");
        std::fs::write(&input, "<p>x</p>").unwrap();

        let mut missing = RendererCommand::new("true {input} {output}").unwrap();
        assert!(matches!(missing.render(&input, &output), Err(RenderError::MissingOutput(_))));

        let mut failing = RendererCommand::new("false {input} {output}").unwrap();
        assert!(matches!(failing.render(&input, &output), Err(RenderError::Failed { .. })));

        let sleeper = dir.path().join("sleep.sh");
        std::fs::write(&sleeper, "sleep 5\n").unwrap();
        let mut slow =
            RendererCommand::with_timeout(format!("sh '{}' {{input}} {{output}}", sleeper.display()), 1).unwrap();
        let started = std::time::Instant::now();
        assert!(matches!(slow.render(&input, &output), Err(RenderError::Timeout(1))));
        assert!(started.elapsed() < Duration::from_secs(4));

        let src = dir.path().join("src.png");
        solid(2, 2).save(&src).unwrap();
        let script = dir.path().join("shot.sh");
        std::fs::write(&script, format!("cp '{}' \"$2\"\n", src.display())).unwrap();
        let mut ok = RendererCommand::new(format!("sh '{}' {{input}} {{output}}", script.display())).unwrap();
        ok.render(&input, &output).unwrap();
        assert!(visually_equal(&src, &output, &VisualOracleConfig::default()).unwrap());
    }
}
