use std::sync::LazyLock;

use regex::Regex;

use super::{Step, StepKind, Trajectory, TrajectoryError};
use crate::fol::{parse_formula, Formula};
use crate::label::Label;
use crate::rules::Rule;

static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^\s*(?:[-*•]\s*)?(?:(?:step\s*)?\d+\s*[.):]\s*)?(thought|action|observation)\s*\d*\s*:\s?(.*)$",
    )
    .unwrap()
});

static NUMBERED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:step\s*)?\d+\s*[.):]\s*(.*)$").unwrap());

static FINISH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)finish\s*\[\s*([^\]]*?)\s*\]").unwrap());

static ANSWER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^\s*(?:final\s+)?answer\s*:\s*(.+)$").unwrap());

static BARE_TERMINAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:finish\s*\[|(?:final\s+)?answer\s*:)").unwrap());

/// Parses raw model output into steps and a final answer.
///
/// Marked output (`Thought:`/`Action:`/`Observation:` lines) is split on the
/// markers. Output without markers but with numbered items is split on the
/// items, each becoming a Thought with its formulas harvested.
pub fn parse_trajectory(raw: &str, problem_id: &str) -> Result<Trajectory, TrajectoryError> {
    let final_answer = final_answer(raw);
    let has_finish = FINISH.is_match(raw) || ANSWER.is_match(raw);
    let lines: Vec<&str> = raw.lines().collect();
    let marked = lines.iter().any(|l| MARKER.is_match(l));
    let steps = if marked {
        marked_steps(&lines)
    } else if lines.iter().any(|l| NUMBERED.is_match(l)) {
        numbered_steps(&lines)
    } else if has_finish {
        let lead = lines
            .iter()
            .filter(|l| !BARE_TERMINAL.is_match(l))
            .copied()
            .collect::<Vec<_>>()
            .join("\n");
        let lead = lead.trim();
        if lead.is_empty() {
            Vec::new()
        } else {
            vec![Step::new(StepKind::Thought, lead)]
        }
    } else {
        return Err(TrajectoryError::EmptyTrajectory);
    };
    if steps.is_empty() && !has_finish {
        return Err(TrajectoryError::EmptyTrajectory);
    }
    Ok(Trajectory {
        problem_id: problem_id.to_string(),
        steps,
        final_answer,
        generator: String::new(),
        seed_meta: Default::default(),
        raw_text: raw.to_string(),
    })
}

/// The last Finish [X] or `Answer: X`, mapped through its first label word.
fn final_answer(raw: &str) -> Option<Label> {
    let finish = FINISH.captures_iter(raw).last().map(|c| {
        let m = c.get(1).unwrap();
        (m.start(), m.as_str())
    });
    let answer = ANSWER.captures_iter(raw).last().map(|c| {
        let m = c.get(1).unwrap();
        (m.start(), m.as_str())
    });
    let (_, text) = match (finish, answer) {
        (Some(a), Some(b)) => {
            if a.0 > b.0 {
                a
            } else {
                b
            }
        }
        (a, b) => a.or(b)?,
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .find_map(Label::from_answer)
}

struct Pending {
    kind: StepKind,
    lines: Vec<String>,
}

fn finish_step(p: Pending) -> Step {
    let text = p.lines.join("\n").trim().to_string();
    let mut step = Step::new(p.kind, text);
    match p.kind {
        StepKind::Action => step.rule_hint = Rule::from_action_text(&step.text),
        StepKind::Observation => {
            for line in &p.lines {
                let found = harvest_formulas(line);
                if found.is_empty() && !line.trim().is_empty() {
                    step.unparsed.push(line.trim().to_string());
                }
                step.formulas.extend(found);
            }
        }
        StepKind::Thought => {}
    }
    step
}

fn marked_steps(lines: &[&str]) -> Vec<Step> {
    let mut steps = Vec::new();
    let mut lead = Vec::new();
    let mut current: Option<Pending> = None;
    for line in lines {
        if let Some(c) = MARKER.captures(line) {
            if let Some(done) = current.take() {
                steps.push(finish_step(done));
            } else if !lead.is_empty() {
                steps.push(finish_step(Pending {
                    kind: StepKind::Thought,
                    lines: std::mem::take(&mut lead),
                }));
            }
            let kind = match c[1].to_lowercase().as_str() {
                "thought" => StepKind::Thought,
                "action" => StepKind::Action,
                _ => StepKind::Observation,
            };
            let rest = c[2].trim();
            current = Some(Pending {
                kind,
                lines: if rest.is_empty() {
                    Vec::new()
                } else {
                    vec![rest.to_string()]
                },
            });
        } else if BARE_TERMINAL.is_match(line) || line.trim().is_empty() {
            continue;
        } else {
            let target = match current.as_mut() {
                Some(c) => &mut c.lines,
                None => &mut lead,
            };
            target.push(line.trim().to_string());
        }
    }
    if let Some(done) = current {
        steps.push(finish_step(done));
    }
    steps
}

fn numbered_steps(lines: &[&str]) -> Vec<Step> {
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut lead: Vec<String> = Vec::new();
    for line in lines {
        if BARE_TERMINAL.is_match(line) || line.trim().is_empty() {
            continue;
        }
        if let Some(c) = NUMBERED.captures(line) {
            groups.push(vec![c[1].trim_end().to_string()]);
        } else if let Some(g) = groups.last_mut() {
            g.push(line.trim().to_string());
        } else {
            lead.push(line.trim().to_string());
        }
    }
    if !lead.is_empty() {
        groups.insert(0, lead);
    }
    groups
        .into_iter()
        .map(|g| {
            let mut step = Step::new(StepKind::Thought, g.join("\n").trim());
            step.formulas = g.iter().flat_map(|l| harvest_formulas(l)).collect();
            step
        })
        .collect()
}

fn strip_decoration(line: &str) -> &str {
    let line = match line.find(":::") {
        Some(i) => &line[..i],
        None => line,
    };
    let line = line.trim();
    let line = line
        .strip_prefix(['-', '*', '•'])
        .map(str::trim_start)
        .unwrap_or(line);
    line.trim_end_matches(['.', ',', ';']).trim_end()
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Extracts every formula in a line of prose, best effort.
///
/// The whole line is tried first; otherwise the longest parseable span is
/// taken from each plausible start, scanning left to right without overlap.
pub fn harvest_formulas(line: &str) -> Vec<Formula> {
    let line = strip_decoration(line);
    if line.is_empty() {
        return Vec::new();
    }
    if let Ok(f) = parse_formula(line) {
        return vec![f];
    }
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let close_ends: Vec<usize> = chars
        .iter()
        .filter(|(_, c)| *c == ')')
        .map(|(i, _)| i + 1)
        .collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (start, c) = chars[k];
        let prev_ident = k > 0 && is_ident_char(chars[k - 1].1);
        let plausible =
            matches!(c, '∀' | '∃' | '¬' | '~' | '(') || (c.is_alphabetic() && !prev_ident);
        let mut found = None;
        if plausible {
            for &end in close_ends.iter().rev().filter(|&&e| e > start) {
                if let Ok(f) = parse_formula(&line[start..end]) {
                    found = Some((f, end));
                    break;
                }
            }
        }
        match found {
            Some((f, end)) => {
                out.push(f);
                while k < chars.len() && chars[k].0 < end {
                    k += 1;
                }
            }
            None => k += 1,
        }
    }
    out
}
