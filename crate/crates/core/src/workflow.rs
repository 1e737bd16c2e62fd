//! Event-sourced state machine for the four audit stages.
//!
//! State is never stored; it is the left fold of [`WorkflowState::apply`]
//! over the event log. Steps complete strictly in numeric order within a
//! stage, and the stage advances when its last step completes. Stage 3 is a
//! loop: a report is sent for validation, and every invalid verdict is
//! followed by an interview and an amended report version until a valid
//! verdict arrives.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use strum::{AsRefStr, Display, EnumIter, EnumString, IntoEnumIterator};
use thiserror::Error;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum Stage {
    Planning,
    Execution,
    Verification,
    Reporting,
    Closed,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
pub enum StepId {
    #[strum(serialize = "s1_1")]
    S1_1,
    #[strum(serialize = "s1_2")]
    S1_2,
    #[strum(serialize = "s1_3")]
    S1_3,
    #[strum(serialize = "s1_4")]
    S1_4,
    #[strum(serialize = "s2_1")]
    S2_1,
    #[strum(serialize = "s2_2")]
    S2_2,
    #[strum(serialize = "s3_1")]
    S3_1,
    #[strum(serialize = "s3_2")]
    S3_2,
    #[strum(serialize = "s3_3")]
    S3_3,
    #[strum(serialize = "s4_1")]
    S4_1,
    #[strum(serialize = "s4_2")]
    S4_2,
    #[strum(serialize = "s4_3")]
    S4_3,
}

impl StepId {
    pub fn all() -> impl Iterator<Item = StepId> {
        StepId::iter()
    }

    pub fn stage(self) -> Stage {
        use StepId::*;
        match self {
            S1_1 | S1_2 | S1_3 | S1_4 => Stage::Planning,
            S2_1 | S2_2 => Stage::Execution,
            S3_1 | S3_2 | S3_3 => Stage::Verification,
            S4_1 | S4_2 | S4_3 => Stage::Reporting,
        }
    }

    pub fn title(self) -> &'static str {
        use StepId::*;
        match self {
            S1_1 => "identify the project",
            S1_2 => "inform the project leader",
            S1_3 => "initial analysis of the repository",
            S1_4 => "initiate audit",
            S2_1 => "analyse knowledge resources",
            S2_2 => "fill out the audit form",
            S3_1 => "consolidate results in a report",
            S3_2 => "send report for validation",
            S3_3 => "interview and amend report",
            S4_1 => "finalise the report",
            S4_2 => "compare with good practice, issue recommendations",
            S4_3 => "get feedback from the team",
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Display, EnumString, EnumIter, AsRefStr,
)]
#[strum(serialize_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    StepCompleted(StepId),
    ReportSent(u32),
    ValidationReceived(u32, Verdict),
    InterviewHeld(u32),
    ReportAmended(u32),
    AuditClosed,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::StepCompleted(_) => "step_completed",
            EventKind::ReportSent(_) => "report_sent",
            EventKind::ValidationReceived(..) => "validation_received",
            EventKind::InterviewHeld(_) => "interview_held",
            EventKind::ReportAmended(_) => "report_amended",
            EventKind::AuditClosed => "audit_closed",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::StepCompleted(s) => write!(f, "step_completed({s})"),
            EventKind::ReportSent(v) => write!(f, "report_sent({v})"),
            EventKind::ValidationReceived(v, verdict) => {
                write!(f, "validation_received({v}, {verdict})")
            }
            EventKind::InterviewHeld(v) => write!(f, "interview_held({v})"),
            EventKind::ReportAmended(v) => write!(f, "report_amended({v})"),
            EventKind::AuditClosed => f.write_str("audit_closed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowEvent {
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
    pub note: Option<String>,
}

impl WorkflowEvent {
    pub fn new(timestamp: DateTime<Utc>, kind: EventKind) -> Self {
        Self {
            timestamp,
            kind,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Where the stage-3 loop currently stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Display, AsRefStr)]
#[strum(serialize_all = "snake_case")]
pub enum VerificationPhase {
    Consolidating,
    AwaitingSend,
    AwaitingVerdict,
    AwaitingInterview,
    AwaitingAmendment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkflowError {
    #[error("illegal-transition: {event} in state {state}: {rule}")]
    IllegalTransition {
        state: String,
        event: String,
        rule: String,
    },
    #[error("stale-version: {event} refers to version {got}, expected {expected}")]
    StaleVersion {
        event: String,
        expected: u32,
        got: u32,
    },
}

impl WorkflowError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkflowError::IllegalTransition { .. } => "illegal-transition",
            WorkflowError::StaleVersion { .. } => "stale-version",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {index}: {source}")]
pub struct ReplayError {
    /// 0-based position of the first illegal event.
    pub index: usize,
    pub source: WorkflowError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowState {
    stage: Stage,
    completed_steps: BTreeSet<StepId>,
    current_report_version: Option<u32>,
    loop_count: u32,
    validated_version: Option<u32>,
    phase: Option<VerificationPhase>,
    last_timestamp: Option<DateTime<Utc>>,
}

impl Default for WorkflowState {
    fn default() -> Self {
        Self::initial()
    }
}

impl fmt::Display for WorkflowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.stage)?;
        if let Some(phase) = self.phase {
            write!(f, "/{phase}")?;
        }
        if let Some(v) = self.current_report_version {
            write!(f, " (report v{v})")?;
        }
        Ok(())
    }
}

impl WorkflowState {
    pub fn initial() -> Self {
        Self {
            stage: Stage::Planning,
            completed_steps: BTreeSet::new(),
            current_report_version: None,
            loop_count: 0,
            validated_version: None,
            phase: None,
            last_timestamp: None,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn completed_steps(&self) -> &BTreeSet<StepId> {
        &self.completed_steps
    }

    pub fn current_report_version(&self) -> Option<u32> {
        self.current_report_version
    }

    /// Number of invalid verdicts received so far.
    pub fn loop_count(&self) -> u32 {
        self.loop_count
    }

    pub fn validated_version(&self) -> Option<u32> {
        self.validated_version
    }

    /// Sub-state of the verification loop; `None` outside verification.
    pub fn phase(&self) -> Option<VerificationPhase> {
        self.phase
    }

    pub fn last_timestamp(&self) -> Option<DateTime<Utc>> {
        self.last_timestamp
    }

    /// The step expected next in the current stage, if the stage is driven
    /// by plain step completions at this point.
    fn next_step(&self) -> Option<StepId> {
        match self.stage {
            Stage::Verification => {
                (self.phase == Some(VerificationPhase::Consolidating)).then_some(StepId::S3_1)
            }
            Stage::Closed => None,
            stage => StepId::all()
                .filter(|s| s.stage() == stage)
                .find(|s| !self.completed_steps.contains(s)),
        }
    }

    pub fn apply(&self, event: &WorkflowEvent) -> Result<WorkflowState, WorkflowError> {
        let illegal = |rule: String| WorkflowError::IllegalTransition {
            state: self.to_string(),
            event: event.kind.to_string(),
            rule,
        };
        let stale = |expected: u32, got: u32| WorkflowError::StaleVersion {
            event: event.kind.to_string(),
            expected,
            got,
        };

        if self.stage == Stage::Closed {
            return Err(illegal("the audit is closed".into()));
        }
        if let Some(last) = self.last_timestamp {
            if event.timestamp < last {
                return Err(illegal(format!(
                    "timestamp {} precedes previous event at {}",
                    event.timestamp.format("%Y-%m-%dT%H:%M:%SZ"),
                    last.format("%Y-%m-%dT%H:%M:%SZ")
                )));
            }
        }

        let mut next = self.clone();
        next.last_timestamp = Some(event.timestamp);
        let current = self.current_report_version.unwrap_or(0);

        match event.kind {
            EventKind::StepCompleted(step) => {
                let expected = self.next_step().ok_or_else(|| {
                    illegal(match (self.stage, step) {
                        (Stage::Verification, StepId::S3_2) => {
                            "step s3_2 is recorded by report_sent".into()
                        }
                        (Stage::Verification, StepId::S3_3) => {
                            "step s3_3 is recorded by validation_received or report_amended".into()
                        }
                        (Stage::Reporting, _) => "all stage-4 steps are complete".into(),
                        _ => format!("no step completion is expected in {}", self.stage),
                    })
                })?;
                if step != expected {
                    return Err(illegal(format!("expected step_completed({expected}) next")));
                }
                next.completed_steps.insert(step);
                match step {
                    StepId::S1_4 => next.stage = Stage::Execution,
                    StepId::S2_2 => {
                        next.stage = Stage::Verification;
                        next.current_report_version = Some(1);
                        next.phase = Some(VerificationPhase::Consolidating);
                    }
                    StepId::S3_1 => next.phase = Some(VerificationPhase::AwaitingSend),
                    _ => {}
                }
            }
            EventKind::ReportSent(v) => {
                if self.phase != Some(VerificationPhase::AwaitingSend) {
                    return Err(illegal("report_sent requires a consolidated, unsent report".into()));
                }
                if v != current {
                    return Err(stale(current, v));
                }
                next.completed_steps.insert(StepId::S3_2);
                next.phase = Some(VerificationPhase::AwaitingVerdict);
            }
            EventKind::ValidationReceived(v, verdict) => {
                if self.phase != Some(VerificationPhase::AwaitingVerdict) {
                    return Err(illegal("validation_received requires a report sent for validation".into()));
                }
                if v != current {
                    return Err(stale(current, v));
                }
                match verdict {
                    Verdict::Invalid => {
                        next.loop_count += 1;
                        next.phase = Some(VerificationPhase::AwaitingInterview);
                    }
                    Verdict::Valid => {
                        next.completed_steps.insert(StepId::S3_3);
                        next.validated_version = Some(v);
                        next.stage = Stage::Reporting;
                        next.phase = None;
                    }
                }
            }
            EventKind::InterviewHeld(v) => {
                if self.phase != Some(VerificationPhase::AwaitingInterview) {
                    return Err(illegal("interview_held requires an invalid verdict".into()));
                }
                if v != current {
                    return Err(stale(current, v));
                }
                next.phase = Some(VerificationPhase::AwaitingAmendment);
            }
            EventKind::ReportAmended(v) => {
                if self.phase != Some(VerificationPhase::AwaitingAmendment) {
                    return Err(illegal("report_amended requires a held interview".into()));
                }
                if v != current + 1 {
                    return Err(stale(current + 1, v));
                }
                next.completed_steps.insert(StepId::S3_3);
                next.current_report_version = Some(v);
                next.phase = Some(VerificationPhase::AwaitingSend);
            }
            EventKind::AuditClosed => {
                if self.stage != Stage::Reporting || !self.completed_steps.contains(&StepId::S4_3) {
                    return Err(illegal("audit_closed requires step s4_3".into()));
                }
                next.stage = Stage::Closed;
            }
        }
        Ok(next)
    }

    /// Exactly the event kinds `apply` accepts from this state (given a
    /// non-decreasing timestamp).
    pub fn legal_events(&self) -> BTreeSet<EventKind> {
        let mut out = BTreeSet::new();
        if let Some(step) = self.next_step() {
            out.insert(EventKind::StepCompleted(step));
        }
        let v = self.current_report_version.unwrap_or(0);
        match self.phase {
            Some(VerificationPhase::AwaitingSend) => {
                out.insert(EventKind::ReportSent(v));
            }
            Some(VerificationPhase::AwaitingVerdict) => {
                out.insert(EventKind::ValidationReceived(v, Verdict::Valid));
                out.insert(EventKind::ValidationReceived(v, Verdict::Invalid));
            }
            Some(VerificationPhase::AwaitingInterview) => {
                out.insert(EventKind::InterviewHeld(v));
            }
            Some(VerificationPhase::AwaitingAmendment) => {
                out.insert(EventKind::ReportAmended(v + 1));
            }
            Some(VerificationPhase::Consolidating) | None => {}
        }
        if self.stage == Stage::Reporting && self.completed_steps.contains(&StepId::S4_3) {
            out.insert(EventKind::AuditClosed);
        }
        out
    }
}

pub fn apply(state: &WorkflowState, event: &WorkflowEvent) -> Result<WorkflowState, WorkflowError> {
    state.apply(event)
}

/// Folds `apply` over the log from the initial state.
pub fn replay<'a>(
    events: impl IntoIterator<Item = &'a WorkflowEvent>,
) -> Result<WorkflowState, ReplayError> {
    events
        .into_iter()
        .enumerate()
        .try_fold(WorkflowState::initial(), |state, (index, event)| {
            state.apply(event).map_err(|source| ReplayError { index, source })
        })
}
