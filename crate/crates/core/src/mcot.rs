//! Five-hop multimodal chain-of-thought generation.
//!
//! Hops run strictly in order: Set-of-Mark injection, element inference,
//! layout inference, code generation, then up to `N` reflections. Each
//! reflection renders the latest page and shows the model both screenshots.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::parse_html;
use crate::metrics::{evaluate, EvalConfig};
use crate::render::{run_with_timeout, RenderError, Renderer};
use crate::som::{som_inject, SomError};

pub const INFER_ELEMENTS_PROMPT: &str = "First, analyze this screenshot of the webpage, please try your best to identify and describe this webpage\u{2019}s functions and its web elements. Some of these elements have been numerically labeled in sequence with bounding boxes.";

pub const INFER_LAYOUT_PROMPT: &str = "The second step is to demonstrate the positional relationships of the marked web page elements based on the provided bounding boxes, including the overall layout and the relative positions between elements.";

pub const INFER_CODE_PROMPT: &str = "Please as per the above descriptions of the webpage\u{2019}s overall layout and web elements together with their relative positioning, generate web code for the corresponding original web image by skipping the step of assigning bounding boxes to elements.";

pub const REFLECTION_PROMPT: &str = "Please compare the two screenshots of webpages. The latter is the screenshot of the webpage by the web code you just provided. Based on the above web element descriptions and layout information, please identify whether there are missing elements and access whether the layout and elements\u{2019} relative positioning are correct. Afterwards, please improve the web code accordingly.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopName {
    Som,
    InferElements,
    InferLayout,
    InferCode,
    Reflection,
}

impl HopName {
    pub fn as_str(self) -> &'static str {
        match self {
            HopName::Som => "som",
            HopName::InferElements => "infer_elements",
            HopName::InferLayout => "infer_layout",
            HopName::InferCode => "infer_code",
            HopName::Reflection => "reflection",
        }
    }

    /// Prompt template of a model hop; the som hop sends no prompt.
    pub fn prompt(self) -> &'static str {
        match self {
            HopName::Som => "",
            HopName::InferElements => INFER_ELEMENTS_PROMPT,
            HopName::InferLayout => INFER_LAYOUT_PROMPT,
            HopName::InferCode => INFER_CODE_PROMPT,
            HopName::Reflection => REFLECTION_PROMPT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("model transport: {0}")]
    Transport(String),
}

/// A multimodal model. `conversation` holds every earlier exchange followed
/// by the new user message; the adapter returns one text response.
pub trait ModelAdapter {
    fn complete(&mut self, hop: HopName, conversation: &[Message]) -> Result<String, AdapterError>;
}

impl<M: ModelAdapter + ?Sized> ModelAdapter for &mut M {
    fn complete(&mut self, hop: HopName, conversation: &[Message]) -> Result<String, AdapterError> {
        (**self).complete(hop, conversation)
    }
}

/// Model behind an external command. The request `{"messages":[...]}` goes
/// to stdin and the command prints `{"text":"..."}`.
#[derive(Debug, Clone)]
pub struct SubprocessModel {
    pub argv: Vec<String>,
    pub timeout_seconds: u64,
}

impl SubprocessModel {
    pub fn new(command: &str) -> Result<Self, AdapterError> {
        match shlex::split(command) {
            Some(argv) if !argv.is_empty() => Ok(SubprocessModel { argv, timeout_seconds: 600 }),
            _ => Err(AdapterError::Transport(format!("cannot split model command {command:?}"))),
        }
    }
}

#[derive(Serialize)]
struct ModelRequest<'a> {
    messages: &'a [Message],
}

#[derive(Deserialize)]
struct ModelResponse {
    text: String,
}

impl ModelAdapter for SubprocessModel {
    fn complete(&mut self, _hop: HopName, conversation: &[Message]) -> Result<String, AdapterError> {
        let request = serde_json::to_vec(&ModelRequest { messages: conversation })
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        let stdout = run_with_timeout(&self.argv, Some(&request), self.timeout_seconds)
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        let response: ModelResponse =
            serde_json::from_slice(&stdout).map_err(|e| AdapterError::Transport(format!("bad model response: {e}")))?;
        Ok(response.text)
    }
}

/// Canned responses keyed by hop name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedFixture {
    pub infer_elements: String,
    pub infer_layout: String,
    pub infer_code: String,
    #[serde(default)]
    pub reflection: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ScriptedModel {
    fixture: ScriptedFixture,
    reflections_used: usize,
}

impl ScriptedModel {
    pub fn new(fixture: ScriptedFixture) -> Self {
        ScriptedModel { fixture, reflections_used: 0 }
    }

    pub fn from_path(path: &Path) -> Result<Self, AdapterError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| AdapterError::Transport(format!("{}: {e}", path.display())))?;
        let fixture =
            serde_json::from_str(&text).map_err(|e| AdapterError::Transport(format!("{}: {e}", path.display())))?;
        Ok(ScriptedModel::new(fixture))
    }
}

impl ModelAdapter for ScriptedModel {
    fn complete(&mut self, hop: HopName, _conversation: &[Message]) -> Result<String, AdapterError> {
        match hop {
            HopName::Som => Err(AdapterError::Transport("the som hop is not a model call".into())),
            HopName::InferElements => Ok(self.fixture.infer_elements.clone()),
            HopName::InferLayout => Ok(self.fixture.infer_layout.clone()),
            HopName::InferCode => Ok(self.fixture.infer_code.clone()),
            HopName::Reflection => {
                let text = self.fixture.reflection.get(self.reflections_used).cloned().ok_or_else(|| {
                    AdapterError::Transport(format!("script has only {} reflection responses", self.reflections_used))
                })?;
                self.reflections_used += 1;
                Ok(text)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    BestByMetric,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McotConfig {
    pub reflection_iters: usize,
    pub selection: Selection,
    /// Threshold used when scoring iterations against the reference.
    pub threshold: f64,
}

impl Default for McotConfig {
    fn default() -> Self {
        McotConfig { reflection_iters: 3, selection: Selection::BestByMetric, threshold: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub hop: HopName,
    pub prompt_text: String,
    pub attached_images: Vec<PathBuf>,
    pub response_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub generated_html: String,
    pub html_path: PathBuf,
    pub screenshot_path: Option<PathBuf>,
    pub ea: Option<f64>,
    pub la: Option<f64>,
}

impl Iteration {
    pub fn combined(&self) -> Option<f64> {
        Some((self.ea? + self.la?) / 2.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HopTranscript {
    pub hops: Vec<HopRecord>,
    pub iterations: Vec<Iteration>,
    pub selected_iteration: Option<usize>,
    /// Why the reflection loop stopped early, if it did.
    pub reflection_error: Option<String>,
    #[serde(skip)]
    conversation: Vec<Message>,
}

impl HopTranscript {
    pub fn reflections(&self) -> usize {
        self.hops.iter().filter(|h| h.hop == HopName::Reflection).count()
    }
}

#[derive(Debug, Error)]
pub enum McotError {
    #[error(transparent)]
    Transport(#[from] AdapterError),
    #[error("model returned an empty response at hop {0}")]
    EmptyResponse(&'static str),
    #[error("image does not exist: {0}")]
    MissingImage(PathBuf),
    #[error("no HTML found in the {0} response")]
    NoCodeExtracted(&'static str),
    #[error("renderer failed: {0}")]
    RendererFailure(#[from] RenderError),
    #[error(transparent)]
    Som(#[from] SomError),
    #[error("reference html does not parse: {0}")]
    Reference(String),
    #[error("best_by_metric selection needs a reference document")]
    SelectionNeedsReference,
    #[error("run directory i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Sends one prompt with its images, appending the exchange to `transcript`.
pub fn run_hop<M: ModelAdapter + ?Sized>(
    adapter: &mut M,
    transcript: &mut HopTranscript,
    hop: HopName,
    images: &[PathBuf],
) -> Result<String, McotError> {
    if let Some(missing) = images.iter().find(|p| !p.is_file()) {
        return Err(McotError::MissingImage(missing.clone()));
    }
    let prompt = hop.prompt();
    transcript.conversation.push(Message { role: Role::User, text: prompt.to_string(), images: images.to_vec() });
    let response = match adapter.complete(hop, &transcript.conversation) {
        Ok(r) => r,
        Err(e) => {
            transcript.conversation.pop();
            return Err(e.into());
        }
    };
    if response.trim().is_empty() {
        transcript.conversation.pop();
        return Err(McotError::EmptyResponse(hop.as_str()));
    }
    transcript.conversation.push(Message { role: Role::Assistant, text: response.clone(), images: Vec::new() });
    transcript.hops.push(HopRecord {
        hop,
        prompt_text: prompt.to_string(),
        attached_images: images.to_vec(),
        response_text: response.clone(),
    });
    Ok(response)
}

/// First fenced code block, else everything from the first `<html` or
/// `<!doctype` (any case).
pub fn extract_html(response: &str) -> Option<String> {
    if let Some(open) = response.find("```") {
        let after = &response[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let block = body.find("```").map_or(body, |end| &body[..end]);
        if !block.trim().is_empty() {
            return Some(block.trim().to_string());
        }
    }
    let lower = response.to_ascii_lowercase();
    let start = [lower.find("<html"), lower.find("<!doctype")].into_iter().flatten().min()?;
    Some(response[start..].trim_end().to_string())
}

fn score(reference: Option<&crate::dom::DomTree>, html: &str, config: &EvalConfig<f64>) -> (Option<f64>, Option<f64>) {
    let Some(reference) = reference else { return (None, None) };
    match parse_html(html) {
        Ok(candidate) => {
            let report = evaluate(reference, &candidate, config);
            (Some(report.element_accuracy), Some(report.layout_accuracy))
        }
        Err(_) => (None, None),
    }
}

/// Runs the whole pipeline, writing artifacts under `run_dir`.
///
/// With `source_html` the som hop annotates it and renders the annotated
/// screenshot, which then accompanies the element and layout hops; the code
/// and reflection hops see the original `image`. Without it every hop uses
/// `image` and the som hop is a no-op. A renderer failure inside the
/// reflection loop ends the loop; selection then runs over the completed
/// iterations.
pub fn run_pipeline<M: ModelAdapter + ?Sized, R: Renderer>(
    image: &Path,
    source_html: Option<&str>,
    config: &McotConfig,
    adapter: &mut M,
    renderer: &mut R,
    run_dir: &Path,
) -> Result<(String, HopTranscript), McotError> {
    if !image.is_file() {
        return Err(McotError::MissingImage(image.to_path_buf()));
    }
    let reference =
        source_html.map(|src| parse_html(src).map_err(|e| McotError::Reference(e.to_string()))).transpose()?;
    if config.selection == Selection::BestByMetric && reference.is_none() {
        return Err(McotError::SelectionNeedsReference);
    }
    std::fs::create_dir_all(run_dir)?;
    let eval_config = EvalConfig::with_threshold(config.threshold);
    let mut transcript = HopTranscript::default();
    let original = image.to_path_buf();

    let marked = match &reference {
        Some(tree) => {
            let annotation = som_inject(tree)?;
            let html_path = run_dir.join("som.html");
            let png_path = run_dir.join("som.png");
            std::fs::write(&html_path, annotation.rewritten.serialize())?;
            renderer.render(&html_path, &png_path)?;
            transcript.hops.push(HopRecord {
                hop: HopName::Som,
                prompt_text: String::new(),
                attached_images: vec![png_path.clone()],
                response_text: format!("{} elements labeled", annotation.labels.len()),
            });
            png_path
        }
        None => {
            transcript.hops.push(HopRecord {
                hop: HopName::Som,
                prompt_text: String::new(),
                attached_images: Vec::new(),
                response_text: String::new(),
            });
            original.clone()
        }
    };

    run_hop(adapter, &mut transcript, HopName::InferElements, std::slice::from_ref(&marked))?;
    run_hop(adapter, &mut transcript, HopName::InferLayout, std::slice::from_ref(&marked))?;
    let response = run_hop(adapter, &mut transcript, HopName::InferCode, std::slice::from_ref(&original))?;
    let html = extract_html(&response).ok_or(McotError::NoCodeExtracted(HopName::InferCode.as_str()))?;
    push_iteration(&mut transcript, html, run_dir, reference.as_ref(), &eval_config)?;

    for _ in 0..config.reflection_iters {
        let last = transcript.iterations.len() - 1;
        let html_path = transcript.iterations[last].html_path.clone();
        let shot = run_dir.join(format!("iter-{last}.png"));
        if let Err(e) = renderer.render(&html_path, &shot) {
            transcript.reflection_error = Some(e.to_string());
            break;
        }
        transcript.iterations[last].screenshot_path = Some(shot.clone());
        let response = run_hop(adapter, &mut transcript, HopName::Reflection, &[original.clone(), shot])?;
        let html = extract_html(&response).ok_or(McotError::NoCodeExtracted(HopName::Reflection.as_str()))?;
        push_iteration(&mut transcript, html, run_dir, reference.as_ref(), &eval_config)?;
    }

    let chosen = match config.selection {
        Selection::Last => transcript.iterations.len() - 1,
        Selection::BestByMetric => best_iteration(&transcript.iterations),
    };
    transcript.selected_iteration = Some(chosen);
    Ok((transcript.iterations[chosen].generated_html.clone(), transcript))
}

/// Index maximizing `(EA + LA) / 2`; earliest on ties, unscored iterations
/// last.
pub fn best_iteration(iterations: &[Iteration]) -> usize {
    let mut best = 0;
    for (i, it) in iterations.iter().enumerate().skip(1) {
        let better = match (it.combined(), iterations[best].combined()) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            _ => false,
        };
        if better {
            best = i;
        }
    }
    best
}

fn push_iteration(
    transcript: &mut HopTranscript,
    html: String,
    run_dir: &Path,
    reference: Option<&crate::dom::DomTree>,
    config: &EvalConfig<f64>,
) -> Result<(), McotError> {
    let html_path = run_dir.join(format!("iter-{}.html", transcript.iterations.len()));
    std::fs::write(&html_path, &html)?;
    let (ea, la) = score(reference, &html, config);
    transcript.iterations.push(Iteration { generated_html: html, html_path, screenshot_path: None, ea, la });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompts_use_typographic_apostrophes() {
        assert!(INFER_ELEMENTS_PROMPT.contains("webpage’s functions"));
        assert!(REFLECTION_PROMPT.contains("elements’ relative"));
        assert!(!INFER_CODE_PROMPT.contains('\''));
    }

    #[test]
    fn extraction_rules() {
        assert_eq!(extract_html("Here:\n```html\n<p>a</p>\n```\nbye").unwrap(), "<p>a</p>");
        assert_eq!(extract_html("```\n<b>x</b>").unwrap(), "<b>x</b>");
        assert_eq!(extract_html("Sure. <!DOCTYPE html><html></html>").unwrap(), "<!DOCTYPE html><html></html>");
        assert_eq!(extract_html("x <HTML><body>y</body></HTML>\n").unwrap(), "<HTML><body>y</body></HTML>");
        assert_eq!(extract_html("no code here"), None);
    }

    #[test]
    fn scripted_model_runs_out() {
        let mut m = ScriptedModel::new(ScriptedFixture { reflection: vec!["r".into()], ..Default::default() });
        assert_eq!(m.complete(HopName::Reflection, &[]).unwrap(), "r");
        assert!(m.complete(HopName::Reflection, &[]).is_err());
    }

    fn it(ea: Option<f64>, la: Option<f64>) -> Iteration {
        Iteration { generated_html: String::new(), html_path: PathBuf::new(), screenshot_path: None, ea, la }
    }

    #[test]
    fn best_iteration_prefers_earliest_tie() {
        let its =
            [it(Some(0.5), Some(0.5)), it(Some(1.0), Some(0.0)), it(Some(0.9), Some(0.9)), it(Some(0.8), Some(1.0))];
        assert_eq!(best_iteration(&its), 2);
        assert_eq!(best_iteration(&[it(None, None), it(Some(0.0), Some(0.0))]), 1);
    }

    #[test]
    fn missing_image_fails_before_the_call() {
        struct Panics;
        impl ModelAdapter for Panics {
            fn complete(&mut self, _: HopName, _: &[Message]) -> Result<String, AdapterError> {
                panic!("adapter called")
            }
        }
        let mut t = HopTranscript::default();
        let err = run_hop(&mut Panics, &mut t, HopName::InferElements, &[PathBuf::from("/nonexistent/x.png")]);
        assert!(matches!(err, Err(McotError::MissingImage(_))));
        assert!(t.hops.is_empty());
    }
}
