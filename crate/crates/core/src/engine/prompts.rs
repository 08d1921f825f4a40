//! Fixed prompt scaffolds, versioned so token accounting stays
//! reproducible across runs.

pub const PROMPT_VERSION: &str = "v1";

/// Session opener for smooth reading: the task is stated once, before
/// the first chunk, so the reader knows the target from the outset.
pub fn smooth_preamble(query: &str) -> String {
    format!(
        "Read the text in parts and gather what answers the question.\n\
         Question: {query}\n\
         After each part, write the summary block and decide whether to continue."
    )
}

/// Per-step reminder for unsmooth reading, fed after the chunk. The
/// running summary is re-fed separately at the front of each step.
pub fn unsmooth_preamble(query: &str) -> String {
    format!(
        "Question: {query}\n\
         Update the summary block above with this part and decide whether to continue."
    )
}

/// Final elicitation when every chunk ended with a continue decision.
pub const ELICIT_PROMPT: &str = "No text remains. Give the final answer.";

/// System prompt used by remote backends.
pub const REMOTE_SYSTEM_PROMPT: &str = "You read long documents in parts and keep a running summary.\n\
     Reply with exactly this block format:\n\
     TARGET: <the task objective>\n\
     CLUES: <task-relevant information gathered so far>\n\
     REASON: <why the clues changed this step>\n\
     then either the single line <CONTINUE>, or ANSWER: <final answer> on its own line followed by <STOP>.";

/// Worked example for one-shot prompting of remote teachers.
pub const ONE_SHOT_EXAMPLE: &str = "TARGET: find who signed the harbor lease\n\
     CLUES: the lease was countersigned by R. Alvarez in March\n\
     REASON: this part names the countersigner directly\n\
     ANSWER: R. Alvarez\n\
     <STOP>";
