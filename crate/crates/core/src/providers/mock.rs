//! Rule-based stand-in for a chat model. Output is a pure function of the prompt:
//! the template is recognized by its opening sentence and the answer is assembled
//! from the fields and context blocks embedded in the prompt.

use std::collections::BTreeSet;

use crate::prompts::leads;
use crate::text::{content_tokens, jaccard, lowercase_first, sentences, stem, stem_set, uppercase_first};

use super::{CompletionRequest, LanguageModel, ProviderError};

#[derive(Debug, Clone, Copy, Default)]
pub struct MockLanguageModel;

impl MockLanguageModel {
    pub fn new() -> Self {
        MockLanguageModel
    }
}

impl LanguageModel for MockLanguageModel {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let prompt = request.prompt.trim();
        if prompt.is_empty() {
            return Err(ProviderError::EmptyPrompt);
        }
        let out = if prompt.starts_with(leads::MEMORY) {
            memory_kind(&field(prompt, "Question:"))
        } else if prompt.starts_with(leads::CATEGORY) {
            category(prompt)
        } else if prompt.starts_with(leads::K_SCORE) {
            k_score(&field(prompt, "Question:")).to_string()
        } else if prompt.starts_with(leads::INITIAL) {
            initial(prompt)
        } else if prompt.starts_with(leads::REFINE) {
            refine(prompt)
        } else if prompt.starts_with(leads::COT) {
            chain_of_thought(prompt)
        } else {
            "I cannot answer that.".to_string()
        };
        Ok(out)
    }
}

/// Text after `name` on the first line that starts with it.
fn field(prompt: &str, name: &str) -> String {
    prompt.lines().find_map(|l| l.trim_start().strip_prefix(name)).map(|v| v.trim().to_string()).unwrap_or_default()
}

fn verbosity(prompt: &str) -> u8 {
    field(prompt, "Verbosity:")
        .split(|c: char| !c.is_ascii_digit())
        .find(|s| !s.is_empty())
        .and_then(|s| s.parse::<u8>().ok())
        .map_or(2, |k| k.clamp(1, 4))
}

/// Everything after the first occurrence of `marker`, up to `until` when given.
fn block<'a>(prompt: &'a str, marker: &str, until: Option<&str>) -> &'a str {
    let Some(start) = prompt.find(marker) else {
        return "";
    };
    let rest = &prompt[start + marker.len()..];
    let end = until.and_then(|u| rest.find(u)).unwrap_or(rest.len());
    rest[..end].trim()
}

fn normalize(question: &str) -> String {
    question.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

const EPISODIC_OPENERS: &[&str] = &[
    "how do i",
    "how can i",
    "how would i",
    "how should i",
    "how do we",
    "how do you",
    "how to",
    "what is the process",
    "what's the process",
    "what are the steps",
    "walk me through",
    "show me how",
    "what happens if",
    "what happens when",
    "what if",
    "simulate",
];

fn memory_kind(question: &str) -> String {
    let q = normalize(question);
    let episodic = EPISODIC_OPENERS.iter().any(|o| q.starts_with(o));
    if episodic { "Episodic" } else { "Semantic" }.to_string()
}

const KNOWLEDGE_WORDS: &[&str] = &["relationship", "relation", "property", "entity", "concept", "object"];
const METHOD_WORDS: &[&str] = &[
    "method",
    "task",
    "step",
    "process",
    "procedure",
    "state",
    "transition",
    "goal",
    "achieve",
    "accomplish",
    "solve",
    "solution",
    "mechanism",
    "organizer",
    "plan",
];

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Knowledge,
    Method,
}

/// Names listed as `        - Name: description` under the knowledge and method headers.
fn listed_names(prompt: &str) -> (Vec<String>, Vec<String>) {
    let (mut knowledge, mut method) = (Vec::new(), Vec::new());
    let mut section = None;
    for line in prompt.lines() {
        if line.contains("following knowledge entities:") {
            section = Some(Section::Knowledge);
        } else if line.contains("following tasks:") || line.contains("following method steps:") {
            section = Some(Section::Method);
        } else if let Some(item) = line.strip_prefix("        - ") {
            let name = item.split_once(':').map_or(item, |(n, _)| n).trim().to_string();
            match section {
                Some(Section::Knowledge) => knowledge.push(name),
                Some(Section::Method) => method.push(name),
                None => {}
            }
        } else {
            section = None;
        }
    }
    (knowledge, method)
}

fn category(prompt: &str) -> String {
    let question = stem_set(&field(prompt, "Question:"));
    let (knowledge_names, method_names) = listed_names(prompt);
    let mut knowledge: BTreeSet<String> = knowledge_names.iter().flat_map(|n| stem_set(n)).collect();
    knowledge.extend(KNOWLEDGE_WORDS.iter().map(|w| stem(w)));
    let mut method: BTreeSet<String> =
        method_names.iter().flat_map(|n| stem_set(n)).filter(|t| !knowledge.contains(t)).collect();
    method.extend(METHOD_WORDS.iter().map(|w| stem(w)));
    let k = !question.is_disjoint(&knowledge);
    let m = !question.is_disjoint(&method);
    match (k, m) {
        (true, false) => "Knowledge Model",
        (false, true) => "Method/Task Model",
        (true, true) => "Multi Model",
        (false, false) => "Irrelevant",
    }
    .to_string()
}

fn k_score(question: &str) -> u8 {
    let q = normalize(question);
    let words: Vec<&str> = q.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).collect();
    let has = |w: &str| words.contains(&w);
    if has("compare") || has("discuss") || has("elaborate") || q.contains("in detail") {
        4
    } else if matches!(words.first(), Some(&"list" | &"name")) || has("list") {
        1
    } else if matches!(words.first(), Some(&"explain" | &"why" | &"how" | &"describe")) || has("why") {
        3
    } else {
        2
    }
}

fn overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> usize {
    a.intersection(b).count()
}

fn frame(topic: &str, sentence: &str) -> String {
    if topic.is_empty() {
        sentence.to_string()
    } else {
        format!("In the {}, {}", topic.to_lowercase(), lowercase_first(sentence))
    }
}

fn initial(prompt: &str) -> String {
    let question = stem_set(&field(prompt, "Question:"));
    let k = verbosity(prompt);
    let topic = field(prompt, "Topic:");
    let doc = sentences(block(prompt, "\nContext:", None));
    if doc.is_empty() {
        return "I could not find anything relevant.".to_string();
    }
    let scores: Vec<usize> = doc.iter().map(|s| overlap(&stem_set(s), &question)).collect();
    let best = scores.iter().max().copied().unwrap_or(0);
    let chosen = scores.iter().position(|&s| s == best).unwrap_or(0);
    if k == 1 {
        let words: Vec<&str> = doc[chosen].trim_end_matches(['.', '!', '?']).split_whitespace().take(5).collect();
        return format!("{}.", words.join(" "));
    }
    let mut picked = vec![chosen];
    match k {
        2 => {}
        3 => picked.extend((chosen + 1..doc.len()).take(2)),
        _ => picked.extend((0..doc.len()).filter(|&i| i != chosen)),
    }
    let mut out = frame(&topic, &doc[picked[0]]);
    for &i in &picked[1..] {
        out.push(' ');
        out.push_str(&doc[i]);
    }
    out
}

/// Splits a leading "In the <topic>, " off a sentence.
fn split_frame<'a>(sentence: &'a str, topic: &str) -> (&'a str, &'a str) {
    let prefix = format!("in the {}, ", topic.to_lowercase());
    if !topic.is_empty() && sentence.to_lowercase().starts_with(&prefix) {
        sentence.split_at(prefix.len())
    } else {
        ("", sentence)
    }
}

fn same_text(a: &str, b: &str) -> bool {
    content_tokens(a) == content_tokens(b) && normalize(a) == normalize(b)
}

/// "The guards play ..." becomes "They play ..." when the draft is already about the guards.
fn pronoun(sentence: &str, subject: &str) -> String {
    let mut words = sentence.splitn(3, ' ');
    if let (Some(det), Some(noun), Some(rest)) = (words.next(), words.next(), words.next()) {
        let draft_subject: Vec<String> = subject.split_whitespace().take(2).map(str::to_lowercase).collect();
        if det.eq_ignore_ascii_case("the")
            && noun.len() > 1
            && noun.ends_with('s')
            && draft_subject == ["the".to_string(), noun.to_lowercase()]
        {
            return format!("They {rest}");
        }
    }
    sentence.to_string()
}

fn refine(prompt: &str) -> String {
    let question = stem_set(&field(prompt, "Question:"));
    let k = verbosity(prompt);
    let topic = field(prompt, "Topic:");
    let draft = block(prompt, "Initial Response:", Some("\nAdditional Context:")).to_string();
    let doc = sentences(block(prompt, "\nAdditional Context:", None));
    let mut draft_sentences = sentences(&draft);
    if draft_sentences.is_empty() || doc.is_empty() {
        return draft;
    }
    let mut used = vec![false; doc.len()];

    for ds in draft_sentences.iter_mut() {
        let (prefix, body) = split_frame(ds, &topic);
        let body_stems = stem_set(body);
        let mut replacement = None;
        for (i, d) in doc.iter().enumerate() {
            if used[i] || jaccard(&body_stems, &stem_set(d)) < 0.8 {
                continue;
            }
            used[i] = true;
            if replacement.is_none() && !same_text(body, d) {
                replacement = Some(i);
            }
        }
        if let Some(i) = replacement {
            *ds = if prefix.is_empty() { doc[i].clone() } else { format!("{prefix}{}", lowercase_first(&doc[i])) };
        }
    }

    let draft_stems: BTreeSet<String> = draft_sentences.iter().flat_map(|s| stem_set(s)).collect();
    let mut candidates: Vec<(usize, usize, usize)> = doc
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .filter_map(|(i, d)| {
            let stems = stem_set(d);
            let adds = stems.iter().any(|t| !draft_stems.contains(t));
            let q = overlap(&stems, &question);
            let r = overlap(&stems, &draft_stems);
            (adds && q + r > 0).then_some((i, q, r))
        })
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
    let take = match k {
        1 | 2 => 1,
        3 => 2,
        _ => 3,
    };
    let subject = split_frame(&draft_sentences[0], &topic).1.to_string();
    for (i, _, _) in candidates.into_iter().take(take) {
        draft_sentences.push(uppercase_first(&pronoun(&doc[i], &subject)));
    }
    draft_sentences.join(" ")
}

struct TransitionLine {
    from: String,
    to: String,
    condition: String,
    actions: String,
    description: String,
}

fn parse_transition(line: &str) -> Option<TransitionLine> {
    let item = line.trim_start().strip_prefix("- ")?;
    let parts: Vec<&str> = item.splitn(6, " | ").map(str::trim).collect();
    if parts.len() != 6 {
        return None;
    }
    Some(TransitionLine {
        from: parts[1].strip_prefix("from ")?.to_string(),
        to: parts[2].strip_prefix("to ")?.to_string(),
        condition: parts[3].strip_prefix("when ")?.to_string(),
        actions: parts[4].strip_prefix("do ")?.to_string(),
        description: parts[5].to_string(),
    })
}

fn chain_of_thought(prompt: &str) -> String {
    let tail = prompt.rfind("\nQuestion:").map_or(prompt, |i| &prompt[i..]);
    let k = verbosity(tail);
    let (task_name, task_description) = field(tail, "Task:")
        .split_once(": ")
        .map(|(n, d)| (n.trim().to_string(), d.trim().to_string()))
        .unwrap_or_default();
    let transitions: Vec<TransitionLine> =
        block(tail, "\nTransitions:", None).lines().filter_map(parse_transition).collect();
    if k == 1 || transitions.is_empty() {
        return format!("Goal: {}.", lowercase_first(&task_name));
    }
    let label = |t: &TransitionLine| t.description.split(':').next().unwrap_or("").trim().to_string();
    if k == 2 {
        let mut labels: Vec<String> = Vec::new();
        for t in &transitions {
            let l = label(t);
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        return format!(
            "The goal is to {}. The method works through these steps: {}.",
            lowercase_first(&task_name),
            labels.join(", ")
        );
    }
    let steps: Vec<String> = transitions
        .iter()
        .map(|t| {
            let detail = t.description.split_once(':').map(|(_, d)| d.trim().trim_end_matches('.')).unwrap_or("");
            let detail = if detail.is_empty() { String::new() } else { format!(": {detail}") };
            if k == 3 {
                return format!("From {}, {} leads to {}{}.", t.from, label(t), t.to, detail);
            }
            let sets = if t.actions == "nothing" { String::new() } else { format!(" and sets {}", t.actions) };
            format!("From {}, {} fires when {}{}, leading to {}{}.", t.from, label(t), t.condition, sets, t.to, detail)
        })
        .collect();
    let body = steps.join(" ");
    if k == 3 {
        return body;
    }
    let description = match task_description.trim_end_matches('.') {
        "" => String::new(),
        d => format!(" {}.", uppercase_first(d)),
    };
    format!(
        "The task is to {}.{}\n\n{body}\n\nTogether these {} transitions accomplish the task.",
        lowercase_first(&task_name),
        description,
        transitions.len()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ask(prompt: &str) -> String {
        MockLanguageModel.complete(&CompletionRequest::new(prompt)).unwrap()
    }

    #[test]
    fn memory_rules() {
        for (q, want) in [
            ("What is a guard?", "Semantic"),
            ("Explain the boat.", "Semantic"),
            ("How do I do X?", "Episodic"),
            ("What is the process to achieve X?", "Episodic"),
            ("How does the method work?", "Semantic"),
        ] {
            assert_eq!(ask(&format!("{}\n\nQuestion: {q}\n", leads::MEMORY)), want, "{q}");
        }
    }

    fn category_prompt(q: &str) -> String {
        format!(
            "{}\n\nQuestion: {q}\nContext:\n    In the context of this problem, we have the following knowledge entities:\n        - Guards: people\n        - Boat: vessel\n    In the context of this problem, we have the following tasks:\n        - Transport All Individuals Across the River: goal\n    and the following method steps:\n        - Load Boat with Selected Individuals\n    Here are some example questions, TMK models, and classifications:\n    Q: What is a peg? => Knowledge Model\n",
            leads::CATEGORY
        )
    }

    #[test]
    fn category_rules_use_listed_names() {
        assert_eq!(ask(&category_prompt("Who is a guard?")), "Knowledge Model");
        assert_eq!(ask(&category_prompt("What is the capital of France?")), "Irrelevant");
        assert_eq!(ask(&category_prompt("How do guard counts affect the loading step?")), "Multi Model");
        assert_eq!(ask(&category_prompt("How does the method transport everyone across?")), "Method/Task Model");
        // "boat" is a knowledge word even though it also names a step.
        assert_eq!(ask(&category_prompt("What is the boat?")), "Knowledge Model");
        // Example lines are not part of the lexicon.
        assert_eq!(ask(&category_prompt("What is a peg?")), "Irrelevant");
    }

    #[test]
    fn k_score_rules() {
        for (q, want) in [
            ("Who is a guard?", 2),
            ("Name the boat.", 1),
            ("List the tasks.", 1),
            ("Explain the boat.", 3),
            ("Why must guards outnumber prisoners?", 3),
            ("Compare guards and prisoners.", 4),
            ("Discuss the method in detail.", 4),
        ] {
            assert_eq!(k_score(q), want, "{q}");
        }
    }

    #[test]
    fn refine_without_overlap_returns_draft() {
        let prompt = format!(
            "{}\n\nQuestion: Who is a guard?\nVerbosity: 2 - short\nTopic: River Crossing Problem\nContext:\n    Initial Response: In the river crossing problem, guards escort.\nAdditional Context: Zebras graze quietly.",
            leads::REFINE
        );
        assert_eq!(ask(&prompt), "In the river crossing problem, guards escort.");
    }

    #[test]
    fn pronoun_only_for_matching_subject() {
        assert_eq!(pronoun("The guards play a role.", "the guards are here."), "They play a role.");
        assert_eq!(pronoun("The prisoners escape.", "the guards are here."), "The prisoners escape.");
    }

    #[test]
    fn unknown_prompt_still_answers() {
        assert!(!ask("Tell me a joke").is_empty());
    }

    #[test]
    fn cot_parses_last_block() {
        let prompt = format!(
            "{} in order.\n\nTask: Other: x\nTransitions:\n    - a | from A | to B | when x = 1 | do nothing | Ignored: no.\n\nQuestion: How?\nVerbosity: 3 - detailed\nTask: Cross: get over\nTransitions:\n    - t1 | from Near | to Far | when ready = true | do side := far | Row: row the boat.\n",
            leads::COT
        );
        assert_eq!(ask(&prompt), "From Near, Row leads to Far: row the boat.");
        let full = ask(&prompt.replace("Verbosity: 3 - detailed", "Verbosity: 4 - comprehensive"));
        assert!(
            full.contains("From Near, Row fires when ready = true and sets side := far, leading to Far: row the boat.")
        );
        assert!(full.starts_with("The task is to cross. Get over.\n\n"), "{full}");
    }
}
