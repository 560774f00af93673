//! Step-wise verification prompt rendering.

use crate::types::StepCase;
use serde::{Deserialize, Serialize};

/// Version tag of the verification template.
pub const TEMPLATE_VERSION: &str = "v1";

/// A rendered prompt ready to send to the judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    pub template_version: String,
}

/// Render the preceding steps as a numbered list, or an explicit marker when
/// there are none.
pub fn render_preceding(steps: &[String]) -> String {
    if steps.is_empty() {
        return "(none)".to_string();
    }
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {s}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Render the step-wise verification prompt for one case.
///
/// Pure function of the case and template version: identical cases render to
/// identical bytes. The prompt asks for a JSON record with the keys
/// "reasoning" then "has_error" in {"yes","no"}.
pub fn render_prompt(case: &StepCase) -> PromptBundle {
    let preceding = render_preceding(&case.preceding_steps);
    let text = format!(
        r#"You are a professional mathematician. Given a problem and the previously proposed steps, your task is to evaluate whether the next proposed step contains any errors in relation to the preceding steps, giving your reasoning. If there is an error, state "yes". If there is no error, state "no". Focus solely on the transition from the previous step to the next.

The evaluation should adhere to the following criteria:

1. Accuracy: Verify all calculations, including algebraic manipulations and numerical computations, are correct.

2. Logical Progression: Ensure the next proposed step follows logically from the previous step, applying mathematical rules, theorems, or formulas correctly, and making reasonable observations. Note: Omit this criterion if the step being evaluated is the first step, as there are no preceding steps to compare.

3. Step-by-Step Focus: Evaluate only the immediate transition from the previous step to the next proposed step. Do not mark the next step as incorrect for not performing an action that should logically occur in a future step.

Problem: {question}
Preceding Steps: {preceding}

Next Proposed Step to be Evaluated: {step}

Now, generate your response in the following JSON format. Give your reasoning in short and concise sentences after "reasoning", then output your final evaluation after "has_error".

{{"reasoning": "Your reasoning here.", "has_error": "yes/no"}}"#,
        question = case.question,
        preceding = preceding,
        step = case.candidate_step,
    );
    PromptBundle {
        text,
        template_version: TEMPLATE_VERSION.to_string(),
    }
}
