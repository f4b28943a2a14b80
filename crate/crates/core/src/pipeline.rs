//! The three generation pipelines.
//!
//! Each call turns one plan slot into exactly one [`SlotRecord`]: a valid
//! triplet, an invalid record carrying the reason and raw completions, or a
//! skipped record. Nothing is retried here; transport retries belong to the
//! gateway.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::gateway::{request_tag, DecodingParams, Embedder, GatewayError, GenerationRequest, Generator, StageBudgets};
use crate::gsc::{gsc_select, CandidateSet, GscError};
use crate::metrics::validity::{validate_triplet, ValidityRules, Verdict};
use crate::parse::{parse_triplet, section, sections, single_field, Label, ParseError};
use crate::prompt::{PromptTemplate, Stage, OBJECT_NAME, PREFIX, QUESTION, SHORT_ANSWER};
use crate::scene::{drawable_objects, AreaThreshold, ImageRecord, SceneGraphObject};
use crate::seed::{self, StableHash};
use crate::similarity::SimilarityMode;
use crate::triplet::{InvalidReason, PipelineKind, RawOutput, RerankSummary, SlotOutcome, SlotRecord, Triplet, TripletMeta};

/// Supplies the image bytes sent with each prompt, base64 encoded.
pub trait ImageSource {
    fn encode(&self, image: &ImageRecord) -> Result<String, String>;
    /// The image with `object` outlined.
    fn encode_annotated(&self, image: &ImageRecord, object: &SceneGraphObject) -> Result<String, String>;
}

/// Sends no image; for text-only backends and tests.
pub struct NoImages;

impl ImageSource for NoImages {
    fn encode(&self, _: &ImageRecord) -> Result<String, String> {
        Ok(String::new())
    }
    fn encode_annotated(&self, _: &ImageRecord, _: &SceneGraphObject) -> Result<String, String> {
        Ok(String::new())
    }
}

#[derive(Debug, Clone)]
pub enum PipelineSpec {
    SingleStep { template: PromptTemplate },
    SingleStepVip { template: PromptTemplate },
    MultiStep { question: PromptTemplate, answer: PromptTemplate, explanations: Vec<PromptTemplate> },
}

impl PipelineSpec {
    pub fn kind(&self) -> PipelineKind {
        match self {
            PipelineSpec::SingleStep { .. } => PipelineKind::SingleStep,
            PipelineSpec::SingleStepVip { .. } => PipelineKind::SingleStepVip,
            PipelineSpec::MultiStep { .. } => PipelineKind::MultiStep,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineSettings {
    pub params: DecodingParams,
    pub budgets: StageBudgets,
    pub rules: ValidityRules,
    pub similarity: SimilarityMode,
    pub threshold: AreaThreshold,
}

/// One plan entry as seen by a pipeline.
#[derive(Debug, Clone, Copy)]
pub struct SlotInput<'a> {
    pub index: usize,
    pub image: &'a ImageRecord,
    pub slot: usize,
    pub prefix: &'a str,
    pub run_seed: u64,
}

impl SlotInput<'_> {
    pub fn seed(&self) -> u64 {
        seed::slot_seed(self.run_seed, &self.image.id, self.slot)
    }
}

pub struct Backends<'a> {
    pub generator: &'a dyn Generator,
    pub embedder: Option<&'a dyn Embedder>,
    pub images: &'a dyn ImageSource,
}

/// Object for visual-prompt slot `slot`: a seeded per-image permutation of the
/// drawable survivors, walked without replacement and cycled once exhausted.
pub fn pick_object(image: &ImageRecord, threshold: AreaThreshold, run_seed: u64, slot: usize) -> Option<SceneGraphObject> {
    let mut pool = drawable_objects(image, threshold);
    if pool.is_empty() {
        return None;
    }
    let mut rng = seed::rng(StableHash::new().u64(run_seed).str(&image.id).str("objects").finish());
    pool.shuffle(&mut rng);
    let n = pool.len();
    Some(pool.swap_remove(slot % n))
}

pub fn run_slot(spec: &PipelineSpec, settings: &PipelineSettings, input: SlotInput<'_>, backends: &Backends<'_>) -> SlotRecord {
    let outcome = match spec {
        PipelineSpec::SingleStep { template } => run_single_step(template, settings, input, backends),
        PipelineSpec::SingleStepVip { template } => run_single_step_vip(template, settings, input, backends),
        PipelineSpec::MultiStep { question, answer, explanations } => {
            run_multi_step(question, answer, explanations, settings, input, backends)
        }
    };
    SlotRecord::new(input.index, &input.image.id, input.slot, spec.kind(), outcome)
}

struct Failure {
    reason: InvalidReason,
    stage: Option<Stage>,
    detail: String,
}

impl Failure {
    fn new(reason: InvalidReason, stage: Option<Stage>, detail: impl Into<String>) -> Self {
        Failure { reason, stage, detail: detail.into() }
    }

    fn gateway(err: GatewayError, stage: Stage) -> Self {
        let reason = match err {
            GatewayError::Transport { .. } => InvalidReason::Transport,
            _ => InvalidReason::Backend,
        };
        Failure::new(reason, Some(stage), err.to_string())
    }

    fn parse(err: ParseError, stage: Stage) -> Self {
        let reason = match err {
            ParseError::TokenFormat(_) => InvalidReason::TokenFormatError,
            ParseError::Unfinished(_) => InvalidReason::UnfinishedGeneration,
        };
        Failure::new(reason, Some(stage), err.to_string())
    }

    fn into_outcome(self, raw: Vec<RawOutput>) -> SlotOutcome {
        SlotOutcome::Invalid { reason: self.reason, stage: self.stage, detail: self.detail, raw }
    }
}

fn call(
    gen: &dyn Generator,
    template: &PromptTemplate,
    prompt: String,
    image: &str,
    params: DecodingParams,
    index: usize,
    raw: &mut Vec<RawOutput>,
) -> Result<String, Failure> {
    let req = GenerationRequest {
        prompt,
        image: (!image.is_empty()).then(|| image.to_string()),
        params,
        tag: request_tag(&template.id, index),
    };
    let text = gen.generate(&req).map_err(|e| Failure::gateway(e, template.stage))?;
    raw.push(RawOutput { template: template.id.clone(), text: text.clone() });
    Ok(text)
}

fn render(template: &PromptTemplate, pairs: &[(&str, &str)]) -> Result<String, Failure> {
    template
        .render_pairs(pairs)
        .map_err(|e| Failure::new(InvalidReason::TokenFormatError, Some(template.stage), e.to_string()))
}

fn meta(input: &SlotInput<'_>, pipeline: PipelineKind, model: &str, object: Option<SceneGraphObject>, raw: Vec<RawOutput>) -> TripletMeta {
    TripletMeta {
        image_id: input.image.id.clone(),
        pipeline,
        prefix: input.prefix.to_string(),
        object,
        model: model.to_string(),
        seed: input.seed(),
        raw,
        rerank: None,
    }
}

fn finish(triplet: Triplet, rules: &ValidityRules) -> SlotOutcome {
    match validate_triplet(&triplet, rules) {
        Verdict::Valid => SlotOutcome::Valid(triplet),
        Verdict::Invalid { reason, detail } => SlotOutcome::Invalid { reason, stage: None, detail, raw: triplet.meta.raw },
    }
}

#[allow(clippy::too_many_arguments)]
fn single_call_triplet(
    template: &PromptTemplate,
    prompt: Result<String, Failure>,
    image: Result<String, String>,
    settings: &PipelineSettings,
    input: &SlotInput<'_>,
    backends: &Backends<'_>,
    kind: PipelineKind,
    object: Option<SceneGraphObject>,
) -> SlotOutcome {
    let mut raw = Vec::new();
    let image = match image {
        Ok(b) => b,
        Err(e) => return Failure::new(InvalidReason::Image, None, e).into_outcome(raw),
    };
    let text = match prompt.and_then(|p| call(backends.generator, template, p, &image, settings.params.clone(), input.index, &mut raw)) {
        Ok(t) => t,
        Err(f) => return f.into_outcome(raw),
    };
    match parse_triplet(&text, settings.rules.dialect) {
        Ok(p) => finish(
            Triplet {
                question: p.question,
                answer: p.answer,
                explanation: p.explanation,
                meta: meta(input, kind, backends.generator.model(), object, raw),
            },
            &settings.rules,
        ),
        Err(e) => Failure::parse(e, template.stage).into_outcome(raw),
    }
}

pub fn run_single_step(template: &PromptTemplate, settings: &PipelineSettings, input: SlotInput<'_>, backends: &Backends<'_>) -> SlotOutcome {
    let prompt = render(template, &[(PREFIX, input.prefix)]);
    let image = backends.images.encode(input.image);
    single_call_triplet(template, prompt, image, settings, &input, backends, PipelineKind::SingleStep, None)
}

pub fn run_single_step_vip(template: &PromptTemplate, settings: &PipelineSettings, input: SlotInput<'_>, backends: &Backends<'_>) -> SlotOutcome {
    let Some(object) = pick_object(input.image, settings.threshold, input.run_seed, input.slot) else {
        return SlotOutcome::Skipped {
            reason: InvalidReason::NoEligibleObject,
            detail: alloc::format!("image {} has no object above the area threshold", input.image.id),
        };
    };
    let prompt = render(template, &[(PREFIX, input.prefix), (OBJECT_NAME, &object.name)]);
    let image = backends.images.encode_annotated(input.image, &object);
    single_call_triplet(template, prompt, image, settings, &input, backends, PipelineKind::SingleStepVip, Some(object))
}

fn budget(budgets: &StageBudgets, stage: Stage) -> u32 {
    match stage {
        Stage::Question => budgets.question,
        Stage::Answer => budgets.answer,
        Stage::ExplanationBase => budgets.base,
        Stage::ExplanationCot => budgets.cot,
        Stage::ExplanationReact => budgets.react,
        Stage::Triplet => 0,
    }
}

fn nonempty(text: String, stage: Stage, what: &str) -> Result<String, Failure> {
    if text.trim().is_empty() {
        Err(Failure::new(InvalidReason::TokenFormatError, Some(stage), alloc::format!("empty {what}")))
    } else {
        Ok(text)
    }
}

/// Candidate explanation from one explanation-stage completion. ReAct output
/// contributes its `Reason:` section only.
pub fn extract_explanation(raw: &str, stage: Stage) -> Result<String, ParseError> {
    let text = match stage {
        Stage::ExplanationReact => match section(raw, Label::Reason) {
            Some(r) => r,
            None if sections(raw).is_empty() => single_field(raw, Label::Reason),
            None => return Err(ParseError::TokenFormat("ReAct output has no Reason section".into())),
        },
        _ => single_field(raw, Label::Reasoning),
    };
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() {
        return Err(ParseError::TokenFormat("empty explanation".into()));
    }
    Ok(text)
}

pub fn run_multi_step(
    question_t: &PromptTemplate,
    answer_t: &PromptTemplate,
    explanation_ts: &[PromptTemplate],
    settings: &PipelineSettings,
    input: SlotInput<'_>,
    backends: &Backends<'_>,
) -> SlotOutcome {
    let mut raw = Vec::new();
    match multi_step_inner(question_t, answer_t, explanation_ts, settings, &input, backends, &mut raw) {
        Ok(t) => finish(t, &settings.rules),
        Err(f) => f.into_outcome(raw),
    }
}

fn multi_step_inner(
    question_t: &PromptTemplate,
    answer_t: &PromptTemplate,
    explanation_ts: &[PromptTemplate],
    settings: &PipelineSettings,
    input: &SlotInput<'_>,
    backends: &Backends<'_>,
    raw: &mut Vec<RawOutput>,
) -> Result<Triplet, Failure> {
    let gen = backends.generator;
    let image = backends.images.encode(input.image).map_err(|e| Failure::new(InvalidReason::Image, None, e))?;
    let params = |t: &PromptTemplate| settings.params.with_budget(budget(&settings.budgets, t.stage));

    let prompt = render(question_t, &[(PREFIX, input.prefix)])?;
    let q_raw = call(gen, question_t, prompt, &image, params(question_t), input.index, raw)?;
    let question = nonempty(single_field(&q_raw, Label::Question), Stage::Question, "question")?;

    let prompt = render(answer_t, &[(QUESTION, &question)])?;
    let a_raw = call(gen, answer_t, prompt, &image, params(answer_t), input.index, raw)?;
    let answer = nonempty(single_field(&a_raw, Label::ShortAnswer), Stage::Answer, "answer")?;

    let mut set = CandidateSet { candidates: Vec::new(), sources: Vec::new() };
    for t in explanation_ts {
        let prompt = render(t, &[(QUESTION, &question), (SHORT_ANSWER, &answer)])?;
        let e_raw = call(gen, t, prompt, &image, params(t), input.index, raw)?;
        let e = extract_explanation(&e_raw, t.stage).map_err(|e| Failure::parse(e, t.stage))?;
        set.candidates.push(e);
        set.sources.push(t.id.clone());
    }
    let outcome = gsc_select(&set, settings.similarity, backends.embedder).map_err(|e| {
        let reason = match &e {
            GscError::Embedding(GatewayError::Transport { .. }) => InvalidReason::Transport,
            GscError::Embedding(_) => InvalidReason::Backend,
            _ => InvalidReason::TokenFormatError,
        };
        Failure::new(reason, None, alloc::format!("re-ranking failed: {e}"))
    })?;

    let explanation = set.candidates[outcome.winner].clone();
    let mut m = meta(input, PipelineKind::MultiStep, gen.model(), None, core::mem::take(raw));
    m.rerank = Some(RerankSummary { sources: set.sources, candidates: set.candidates, scores: outcome.scores, winner: outcome.winner });
    Ok(Triplet { question, answer, explanation, meta: m })
}
