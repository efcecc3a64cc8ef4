use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use collage_core::{
    next_step, select_final, to_canonical_json, Context, CritiqueReport, Document, GateKind, NextStep,
    PhotographicPlan, ProductNarrativeFramework, PromptSet, StopReason, TransferDirections,
};

use super::state::{IterationRecord, PipelineState};
use super::store::{self, persist_state, RunLock, RunStore};
use super::trace::{EventKind, RunTrace, TraceEvent};
use super::{Clock, Mode, PipelineConfig, PipelineError, RunOutcome};
use crate::agents::generation::collage_file_name;
use crate::agents::{AgentError, Agents, Refinement, Revision};
use crate::picture::{sha256_hex, Picture, ProductInput};
use crate::providers::{CallLog, CallRecord, Recorded};

enum Halt {
    Agent(AgentError),
    Pipeline(PipelineError),
}

impl From<AgentError> for Halt {
    fn from(e: AgentError) -> Self {
        Halt::Agent(e)
    }
}

impl From<PipelineError> for Halt {
    fn from(e: PipelineError) -> Self {
        Halt::Pipeline(e)
    }
}

type Step<T> = Result<T, Halt>;

pub(super) fn execute(agents: &Agents, cfg: &PipelineConfig, input: &ProductInput) -> Result<RunOutcome, PipelineError> {
    cfg.check()?;
    input.validate().map_err(|e| PipelineError::Input(e.to_string()))?;
    if cfg.mode == Mode::Reference && input.reference.is_none() {
        return Err(PipelineError::Config("reference mode needs a reference grid".into()));
    }
    std::fs::create_dir_all(&cfg.run_dir).map_err(|e| PipelineError::io(&cfg.run_dir, e))?;
    let _lock = RunLock::acquire(&cfg.run_dir)?;
    let store = RunStore::new(&cfg.run_dir);

    let prior = store.load_trace()?;
    let (replay, prior_calls) = match prior {
        Some(t) => {
            let (want, have) = (cfg.trace_config(), &t.config);
            if want.layout != have.layout || want.mode != have.mode || want.canvas != have.canvas {
                return Err(PipelineError::CorruptRun(format!(
                    "run directory was created for a {} {:?} run at {}x{}",
                    have.layout, have.mode, have.canvas.width, have.canvas.height
                )));
            }
            (t.events.into(), t.calls)
        }
        None => (VecDeque::new(), Vec::new()),
    };
    store.bind_input(input)?;

    let log = CallLog::new();
    let mut recorded = agents.clone();
    recorded.chat = Arc::new(Recorded::new(agents.chat.clone(), log.clone()));
    recorded.image = Arc::new(Recorded::new(agents.image.clone(), log.clone()));

    let mut exec = Exec {
        agents: recorded,
        cfg,
        input,
        store,
        log,
        prior_calls,
        replay,
        trace: RunTrace::new(cfg.trace_config()),
        state: PipelineState::default(),
    };
    match exec.drive() {
        Ok(outcome) => Ok(outcome),
        Err(Halt::Pipeline(e)) => Err(e),
        Err(Halt::Agent(e)) => {
            let digest = sha256_hex(e.to_string().as_bytes());
            let iteration = exec.state.iteration();
            if let Err(save) = exec.emit(EventKind::Stop, iteration, digest, Some(StopReason::FatalError), None) {
                log::error!("cannot record fatal stop: {save}");
            }
            Err(PipelineError::Fatal(e))
        }
    }
}

struct Exec<'a> {
    agents: Agents,
    cfg: &'a PipelineConfig,
    input: &'a ProductInput,
    store: RunStore,
    log: CallLog,
    prior_calls: Vec<CallRecord>,
    /// Events recorded by an earlier attempt and not yet replayed.
    replay: VecDeque<TraceEvent>,
    trace: RunTrace,
    state: PipelineState,
}

impl Exec<'_> {
    fn drive(&mut self) -> Step<RunOutcome> {
        let transfer = match self.cfg.mode {
            Mode::Reference => Some(self.reference()?),
            Mode::Creation => None,
        };
        let transfer = transfer.as_ref();

        let mut it = 0;
        let mut framework = self.stage1(transfer, None, it)?;
        let mut plan = self.stage2(&framework, transfer, None, it)?;
        let mut collage = self.compile_and_generate(&framework, &plan, it)?;

        for _ in 0..self.cfg.max_iterations {
            let report = self.critique(&collage, &framework, &plan, it)?;
            let step = next_step(&report);
            if step == NextStep::Stop {
                return self.finish(StopReason::GatesPassed);
            }
            let suggestion = report
                .suggestion
                .clone()
                .ok_or_else(|| PipelineError::CorruptRun(format!("critique {it} failed without a suggestion")))?;
            it += 1;
            if step == NextStep::Revise {
                framework = self.stage1(transfer, Some(Revision { prior: &framework, suggestion: &suggestion }), it)?;
                plan = self.stage2(&framework, transfer, None, it)?;
            } else {
                self.store.write_doc(&store::framework_file(it), &framework)?;
                plan = self.stage2(&framework, transfer, Some(Refinement { prior: &plan, suggestion: &suggestion }), it)?;
            }
            collage = self.compile_and_generate(&framework, &plan, it)?;
        }
        self.finish(StopReason::BudgetExhausted)
    }

    fn reference(&mut self) -> Step<TransferDirections> {
        let layout = &self.cfg.layout;
        let (transfer, analysis) = if let Some(e) = self.replayed(EventKind::Reference, 0)? {
            let (t, d) = self.store.read_doc::<TransferDirections>(store::TRANSFER_FILE, &Context::with_layout(layout))?;
            verify(&e, &d)?;
            let analysis = self.store.read_text(store::ANALYSIS_FILE)?;
            self.keep(e);
            (t, analysis)
        } else {
            let reference = self.input.reference.as_ref().expect("checked before the run");
            let ex = self.agents.extract_transfer_plan(reference, layout, self.input)?;
            self.store.write(store::ANALYSIS_FILE, ex.analysis.as_bytes())?;
            let d = self.store.write_doc(store::TRANSFER_FILE, &ex.transfer)?;
            self.emit(EventKind::Reference, 0, d, None, None)?;
            (ex.transfer, ex.analysis)
        };
        self.state.transfer = Some(transfer.clone());
        self.state.reference_analysis = Some(analysis);
        Ok(transfer)
    }

    fn stage1(
        &mut self,
        transfer: Option<&TransferDirections>,
        revision: Option<Revision<'_>>,
        it: u32,
    ) -> Step<ProductNarrativeFramework> {
        let (agents, input, layout) = (self.agents.clone(), self.input, self.cfg.layout.clone());
        self.doc_step(EventKind::Stage1, it, &store::framework_file(it), Context::none(), || {
            agents.plan_what(input, &layout, transfer, revision)
        })
    }

    fn stage2(
        &mut self,
        framework: &ProductNarrativeFramework,
        transfer: Option<&TransferDirections>,
        refinement: Option<Refinement<'_>>,
        it: u32,
    ) -> Step<PhotographicPlan> {
        let (agents, input, layout) = (self.agents.clone(), self.input, self.cfg.layout.clone());
        self.doc_step(EventKind::Stage2, it, &store::plan_file(it), Context::with_layout(&layout), || {
            agents.plan_how(input, framework, &layout, transfer, refinement)
        })
    }

    /// Stage 3 and generation; records the new iteration in the state.
    fn compile_and_generate(
        &mut self,
        framework: &ProductNarrativeFramework,
        plan: &PhotographicPlan,
        it: u32,
    ) -> Step<Picture> {
        let (agents, input, layout) = (self.agents.clone(), self.input, self.cfg.layout.clone());
        let prompt_set: PromptSet =
            self.doc_step(EventKind::Stage3, it, &store::prompts_file(it), Context::with_layout(&layout), || {
                agents.compile_prompts(input, plan, framework)
            })?;

        let name = collage_file_name(it);
        let collage = if let Some(e) = self.replayed(EventKind::Generate, it)? {
            let pic = self.store.read_picture(&name)?;
            verify(&e, pic.digest())?;
            self.keep(e);
            pic
        } else {
            let c = self.agents.synthesize_collage(&prompt_set, input, &layout, self.cfg.canvas(), it, self.store.dir())?;
            self.emit(EventKind::Generate, it, c.image.digest().to_string(), None, None)?;
            c.image
        };
        self.state.history.push(IterationRecord {
            iteration: it,
            framework: framework.clone(),
            plan: plan.clone(),
            prompt_set,
            collage_path: self.store.path(&name),
            collage_digest: collage.digest().to_string(),
            critique: None,
        });
        Ok(collage)
    }

    fn critique(
        &mut self,
        collage: &Picture,
        framework: &ProductNarrativeFramework,
        plan: &PhotographicPlan,
        it: u32,
    ) -> Step<CritiqueReport> {
        let name = store::critique_file(it);
        let report = if let Some(e) = self.replayed(EventKind::Gate1, it)? {
            let (report, _) = self.store.read_doc::<CritiqueReport>(&name, &Context::with_layout(&self.cfg.layout))?;
            verify(&e, &doc_digest(&report.narrative))?;
            self.keep(e);
            if let Some(photo) = &report.photo {
                self.replay_or_emit(EventKind::Gate2, it, doc_digest(photo))?;
            }
            if let Some((kind, d)) = decision(&report) {
                self.replay_or_emit(kind, it + 1, d)?;
            }
            report
        } else {
            let report = self.agents.critique(collage, self.input, framework, plan, &self.cfg.gates, it)?;
            self.store.write_doc(&name, &report)?;
            self.emit(EventKind::Gate1, it, doc_digest(&report.narrative), None, None)?;
            if let Some(photo) = &report.photo {
                self.emit(EventKind::Gate2, it, doc_digest(photo), None, None)?;
            }
            if let Some((kind, d)) = decision(&report) {
                self.emit(kind, it + 1, d, None, None)?;
            }
            report
        };
        if let Some(rec) = self.state.history.last_mut() {
            rec.critique = Some(report.clone());
        }
        Ok(report)
    }

    fn finish(&mut self, reason: StopReason) -> Step<RunOutcome> {
        let last = self.state.iteration();
        let selected = match reason {
            StopReason::GatesPassed => last,
            _ => select_final(&self.state.summaries(), self.cfg.return_policy).unwrap_or(last),
        };
        let record = self.state.record(selected).expect("selected iteration exists");
        let (path, digest) = (record.collage_path.clone(), record.collage_digest.clone());

        match self.replay.pop_front() {
            Some(e)
                if e.kind == EventKind::Stop
                    && e.reason == Some(reason)
                    && e.selected_iteration == Some(selected)
                    && e.digest == digest =>
            {
                self.keep(e)
            }
            Some(e) if e.kind == EventKind::Stop => self.emit(EventKind::Stop, last, digest, Some(reason), Some(selected))?,
            Some(e) => {
                return Err(PipelineError::CorruptRun(format!(
                    "trace continues with {:?} for iteration {} past the {} stop",
                    e.kind,
                    e.iteration,
                    reason.as_str()
                ))
                .into())
            }
            None => self.emit(EventKind::Stop, last, digest, Some(reason), Some(selected))?,
        }
        if let Some(e) = self.replay.front() {
            return Err(PipelineError::CorruptRun(format!("trace has events after the stop ({:?})", e.kind)).into());
        }
        self.sync_calls();
        persist_state(&self.state, &self.trace, self.store.dir())?;
        Ok(RunOutcome {
            final_collage: path,
            selected_iteration: selected,
            stop_reason: reason,
            state: self.state.clone(),
            trace: self.trace.clone(),
        })
    }

    /// Replays a recorded document step or runs it live, writing the artifact
    /// before the event.
    fn doc_step<T: Document>(
        &mut self,
        kind: EventKind,
        it: u32,
        file: &str,
        ctx: Context<'_>,
        live: impl FnOnce() -> Result<T, AgentError>,
    ) -> Step<T> {
        if let Some(e) = self.replayed(kind, it)? {
            let (doc, d) = self.store.read_doc::<T>(file, &ctx)?;
            verify(&e, &d)?;
            self.keep(e);
            return Ok(doc);
        }
        let doc = live()?;
        let d = self.store.write_doc(file, &doc)?;
        self.emit(kind, it, d, None, None)?;
        Ok(doc)
    }

    /// Takes the next recorded event if it is the expected one. Budget and
    /// fatal stops are dropped so the run continues; any other mismatch
    /// means the directory does not belong to this configuration.
    fn replayed(&mut self, kind: EventKind, it: u32) -> Result<Option<TraceEvent>, PipelineError> {
        while let Some(next) = self.replay.front() {
            if next.kind == kind && next.iteration == it {
                return Ok(self.replay.pop_front());
            }
            if next.kind == EventKind::Stop && next.reason != Some(StopReason::GatesPassed) {
                self.replay.pop_front();
                continue;
            }
            return Err(PipelineError::CorruptRun(format!(
                "trace has {:?} for iteration {} where {:?} for iteration {} was expected",
                next.kind, next.iteration, kind, it
            )));
        }
        Ok(None)
    }

    fn replay_or_emit(&mut self, kind: EventKind, it: u32, digest: String) -> Result<(), PipelineError> {
        match self.replayed(kind, it)? {
            Some(e) => {
                verify(&e, &digest)?;
                self.keep(e);
                Ok(())
            }
            None => self.emit(kind, it, digest, None, None),
        }
    }

    fn keep(&mut self, event: TraceEvent) {
        self.trace.events.push(event);
    }

    fn emit(
        &mut self,
        kind: EventKind,
        iteration: u32,
        digest: String,
        reason: Option<StopReason>,
        selected_iteration: Option<u32>,
    ) -> Result<(), PipelineError> {
        let seq = self.trace.events.last().map_or(0, |e| e.seq + 1);
        let timestamp = match self.cfg.clock {
            Clock::Logical => seq,
            Clock::Wall => SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
        };
        self.trace.events.push(TraceEvent { seq, timestamp, kind, iteration, digest, reason, selected_iteration });
        self.sync_calls();
        self.store.save_trace(&self.trace)
    }

    fn sync_calls(&mut self) {
        let mut calls = self.prior_calls.clone();
        calls.extend(self.log.snapshot());
        self.trace.calls = calls;
    }
}

fn doc_digest<T: serde::Serialize>(doc: &T) -> String {
    sha256_hex(to_canonical_json(doc).as_bytes())
}

fn decision(report: &CritiqueReport) -> Option<(EventKind, String)> {
    let kind = match report.failed_gate()? {
        GateKind::Narrative => EventKind::Revision,
        GateKind::Photography => EventKind::Refinement,
    };
    Some((kind, report.suggestion.as_ref().map(doc_digest).unwrap_or_default()))
}

fn verify(event: &TraceEvent, digest: &str) -> Result<(), PipelineError> {
    if event.digest == digest {
        Ok(())
    } else {
        Err(PipelineError::CorruptRun(format!(
            "{:?} artifact for iteration {} does not match its trace digest",
            event.kind, event.iteration
        )))
    }
}
