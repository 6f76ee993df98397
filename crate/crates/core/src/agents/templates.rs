//! Prompt templates with `{placeholder}` substitution. `{{` and `}}` render
//! as literal braces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` needs a value for `{{{placeholder}}}`")]
    MissingPlaceholder { template: TemplateId, placeholder: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateId {
    Agent1,
    Agent2,
    Agent3,
    Agent4,
    Judge1,
    Judge2,
    QaEtiological,
    QaEntity,
    QaCorrelationDirect,
    QaCorrelationMultihop,
    QaForecast,
    SpatialEffect,
}

impl TemplateId {
    pub const ALL: [TemplateId; 12] = [
        TemplateId::Agent1,
        TemplateId::Agent2,
        TemplateId::Agent3,
        TemplateId::Agent4,
        TemplateId::Judge1,
        TemplateId::Judge2,
        TemplateId::QaEtiological,
        TemplateId::QaEntity,
        TemplateId::QaCorrelationDirect,
        TemplateId::QaCorrelationMultihop,
        TemplateId::QaForecast,
        TemplateId::SpatialEffect,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateId::Agent1 => "agent1",
            TemplateId::Agent2 => "agent2",
            TemplateId::Agent3 => "agent3",
            TemplateId::Agent4 => "agent4",
            TemplateId::Judge1 => "judge1",
            TemplateId::Judge2 => "judge2",
            TemplateId::QaEtiological => "qa_etiological",
            TemplateId::QaEntity => "qa_entity",
            TemplateId::QaCorrelationDirect => "qa_correlation_direct",
            TemplateId::QaCorrelationMultihop => "qa_correlation_multihop",
            TemplateId::QaForecast => "qa_forecast",
            TemplateId::SpatialEffect => "spatial_effect",
        }
    }

    /// The raw template text.
    pub fn source(&self) -> &'static str {
        match self {
            TemplateId::Agent1 => include_str!("templates/agent1.txt"),
            TemplateId::Agent2 => include_str!("templates/agent2.txt"),
            TemplateId::Agent3 => include_str!("templates/agent3.txt"),
            TemplateId::Agent4 => include_str!("templates/agent4.txt"),
            TemplateId::Judge1 => include_str!("templates/judge1.txt"),
            TemplateId::Judge2 => include_str!("templates/judge2.txt"),
            TemplateId::QaEtiological => include_str!("templates/qa_etiological.txt"),
            TemplateId::QaEntity => include_str!("templates/qa_entity.txt"),
            TemplateId::QaCorrelationDirect => include_str!("templates/qa_correlation_direct.txt"),
            TemplateId::QaCorrelationMultihop => include_str!("templates/qa_correlation_multihop.txt"),
            TemplateId::QaForecast => include_str!("templates/qa_forecast.txt"),
            TemplateId::SpatialEffect => include_str!("templates/spatial_effect.txt"),
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut names = Vec::new();
        for piece in tokenize(self.source()) {
            if let Piece::Placeholder(name) = piece {
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_string());
                }
            }
        }
        names
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

enum Piece<'a> {
    Text(&'a str),
    Placeholder(&'a str),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn tokenize(src: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = src;
    while let Some(i) = rest.find(['{', '}']) {
        out.push(Piece::Text(&rest[..i]));
        let tail = &rest[i..];
        if let Some(after) = tail.strip_prefix("{{") {
            out.push(Piece::Text("{"));
            rest = after;
        } else if let Some(after) = tail.strip_prefix("}}") {
            out.push(Piece::Text("}"));
            rest = after;
        } else if let Some(body) = tail.strip_prefix('{') {
            match body.find('}') {
                Some(j) if is_ident(&body[..j]) => {
                    out.push(Piece::Placeholder(&body[..j]));
                    rest = &tail[j + 2..];
                }
                _ => {
                    out.push(Piece::Text("{"));
                    rest = &tail[1..];
                }
            }
        } else {
            out.push(Piece::Text("}"));
            rest = &tail[1..];
        }
    }
    out.push(Piece::Text(rest));
    out
}

/// Substitute every placeholder of `template` from `context`.
pub fn render_prompt(template: TemplateId, context: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.source().len());
    for piece in tokenize(template.source()) {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Placeholder(name) => {
                let value = context.get(name).ok_or_else(|| TemplateError::MissingPlaceholder {
                    template,
                    placeholder: name.to_string(),
                })?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}

/// Build a context map from `(name, value)` pairs.
pub fn context<K: Into<String>, V: ToString>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_context(t: TemplateId) -> BTreeMap<String, String> {
        t.placeholders().into_iter().map(|p| (p.clone(), format!("<{p}>"))).collect()
    }

    #[test]
    fn agent1_mentions_node_count() {
        let text = render_prompt(TemplateId::Agent1, &context([("num_nodes", "3"), ("max_seq_len", "512")])).unwrap();
        assert!(text.contains("with 3 interconnected nodes"));
        assert!(text.contains("smaller than 512"));
        assert!(text.starts_with("You are Agent 1: Scenario Generation Agent"));
    }

    #[test]
    fn judge1_mentions_expected_nodes() {
        let ctx = context([("expected_num_nodes", "5"), ("scenario", "s"), ("parsed_json", "j")]);
        let text = render_prompt(TemplateId::Judge1, &ctx).unwrap();
        assert!(text.contains("exactly 5 nodes"));
        assert!(text.contains("\"approved\": boolean"));
    }

    #[test]
    fn missing_placeholder_is_named() {
        let err = render_prompt(TemplateId::Agent1, &context([("num_nodes", "3")])).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingPlaceholder { template: TemplateId::Agent1, placeholder: "max_seq_len".into() }
        );
        assert!(err.to_string().contains("{max_seq_len}"));
    }

    #[test]
    fn unknown_template() {
        assert_eq!("agent9".parse::<TemplateId>(), Err(TemplateError::UnknownTemplate("agent9".into())));
        for t in TemplateId::ALL {
            assert_eq!(t.as_str().parse::<TemplateId>(), Ok(t));
        }
    }

    #[test]
    fn every_template_renders_without_leftover_placeholders() {
        for t in TemplateId::ALL {
            let ctx = full_context(t);
            let text = render_prompt(t, &ctx).unwrap();
            for p in t.placeholders() {
                assert!(!text.contains(&format!("{{{p}}}")), "{t} left {p}");
                assert!(text.contains(&format!("<{p}>")));
            }
            assert!(!text.contains("{{"), "{t} kept an escaped brace");
        }
    }

    #[test]
    fn escaped_braces_become_literal_json() {
        let text = render_prompt(TemplateId::Agent4, &full_context(TemplateId::Agent4)).unwrap();
        assert!(text.contains("\"time_modulation\": {"));
        assert!(text.contains("<structured_scenario>"));
    }

    #[test]
    fn substitution_only() {
        // rendering with a value equal to the raw placeholder restores the
        // template with escaped braces collapsed
        let t = TemplateId::Agent2;
        let identity: BTreeMap<String, String> =
            t.placeholders().into_iter().map(|p| (p.clone(), format!("{{{p}}}"))).collect();
        let text = render_prompt(t, &identity).unwrap();
        assert_eq!(text, t.source().replace("{{", "{").replace("}}", "}"));
    }

    #[test]
    fn distinct_contexts_render_distinctly() {
        let a = render_prompt(TemplateId::Agent3, &context([("structured_scenario", "x")])).unwrap();
        let b = render_prompt(TemplateId::Agent3, &context([("structured_scenario", "y")])).unwrap();
        assert_ne!(a, b);
    }
}
