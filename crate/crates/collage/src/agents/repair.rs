//! Parsing model output into plan documents, with bounded repair turns.

use collage_core::{parse_document, Context, DocKind, Document};

use super::{prompts, AgentError, Agents};
use crate::protocol::{label, task};
use crate::providers::ChatRequest;

impl Agents {
    /// Sends `request` and parses the answer as `T`. `check` adds
    /// caller-specific problems on top of the document's own validation.
    pub fn ask<T: Document>(
        &self,
        request: &ChatRequest,
        ctx: &Context<'_>,
        check: impl Fn(&T) -> Vec<String>,
    ) -> Result<T, AgentError> {
        let raw = self.chat.complete(request)?;
        self.repair_parse(request, raw, ctx, self.settings.repair_budget, check)
    }

    /// Parses `raw`; on failure sends a follow-up turn quoting the problems
    /// and tries again, at most `attempts_left` times.
    pub fn repair_parse<T: Document>(
        &self,
        original: &ChatRequest,
        mut raw: String,
        ctx: &Context<'_>,
        mut attempts_left: u32,
        check: impl Fn(&T) -> Vec<String>,
    ) -> Result<T, AgentError> {
        loop {
            let problems = match parse_document::<T>(&raw, ctx) {
                Ok(doc) => {
                    let extra = check(&doc);
                    if extra.is_empty() {
                        return Ok(doc);
                    }
                    extra
                }
                Err(e) => e.problems(),
            };
            if attempts_left == 0 {
                return Err(AgentError::MalformedPlan { kind: T::KIND, problems });
            }
            attempts_left -= 1;
            log::debug!("repairing {} response: {}", T::KIND, problems.join("; "));
            let follow_up = self.repair_request(original, T::KIND, &raw, &problems)?;
            raw = self.chat.complete(&follow_up)?;
        }
    }

    fn repair_request(
        &self,
        original: &ChatRequest,
        kind: DocKind,
        raw: &str,
        problems: &[String],
    ) -> Result<ChatRequest, AgentError> {
        let bullet_list = problems.iter().map(|p| format!("- {p}")).collect::<Vec<_>>().join("\n");
        let instructions = self
            .prompts
            .render(prompts::REPAIR, &[("kind", kind.name()), ("problems", &bullet_list)])?;
        let mut req = ChatRequest::new(task::REPAIR, format!("{}\n\n{instructions}", original.system_prompt))
            .format(original.response_format)
            .temperature(self.settings.repair_temperature);
        req.user_parts = original.user_parts.clone();
        Ok(req
            .text(label::ORIGINAL_TASK, &original.task)
            .text(label::KIND, kind.name())
            .text(label::PREVIOUS_RESPONSE, raw)
            .text(label::PROBLEMS, &bullet_list))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use collage_core::ProductNarrativeFramework;

    use super::*;
    use crate::providers::mock::{FnChat, MockChat, MockImage};
    use crate::providers::{ChatProvider, ProviderError};

    fn agents(chat: impl ChatProvider + 'static) -> Agents {
        Agents::new(Arc::new(chat), Arc::new(MockImage))
    }

    fn stage1() -> ChatRequest {
        ChatRequest::new(task::STAGE1, "sys").text(label::PRODUCT_NAME, "Cream")
    }

    const MISSING_ONE: &str = r#"{"product_essence":"a","product_usage":"b","usage_context":"c","target_consumer_profile":"d"}"#;

    #[test]
    fn valid_response_needs_no_repair() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = calls.clone();
        let golden = MockChat::golden();
        let a = agents(FnChat(move |r: &ChatRequest| {
            c.fetch_add(1, Ordering::SeqCst);
            golden.complete(r)
        }));
        let f: ProductNarrativeFramework = a.ask(&stage1(), &Context::none(), |_| vec![]).unwrap();
        assert!(f.product_essence.contains("shea butter"));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn one_repair_turn_fixes_missing_field() {
        let golden = MockChat::golden();
        let repairs = Arc::new(AtomicUsize::new(0));
        let r2 = repairs.clone();
        let a = agents(FnChat(move |r: &ChatRequest| {
            if r.task == task::REPAIR {
                r2.fetch_add(1, Ordering::SeqCst);
                assert!(r.labeled(label::PROBLEMS).unwrap().contains("missing key narrative_framework"));
                golden.complete(r)
            } else {
                Ok(MISSING_ONE.to_string())
            }
        }));
        let f: ProductNarrativeFramework = a.ask(&stage1(), &Context::none(), |_| vec![]).unwrap();
        assert!(!f.narrative_framework.is_empty());
        assert_eq!(repairs.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn exhausted_budget_is_malformed() {
        let a = agents(FnChat(|_: &ChatRequest| Ok(MISSING_ONE.to_string())));
        let err = a
            .repair_parse::<ProductNarrativeFramework>(&stage1(), MISSING_ONE.into(), &Context::none(), 0, |_| vec![])
            .unwrap_err();
        assert!(matches!(err, AgentError::MalformedPlan { kind: DocKind::Framework, .. }));
        let err = a.ask::<ProductNarrativeFramework>(&stage1(), &Context::none(), |_| vec![]).unwrap_err();
        match err {
            AgentError::MalformedPlan { problems, .. } => assert_eq!(problems, ["missing key narrative_framework"]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn provider_errors_propagate() {
        let a = agents(FnChat(|_: &ChatRequest| Err(ProviderError::Auth { status: 401 })));
        let err = a.ask::<ProductNarrativeFramework>(&stage1(), &Context::none(), |_| vec![]).unwrap_err();
        assert!(matches!(err, AgentError::Provider(ProviderError::Auth { status: 401 })));
    }
}
