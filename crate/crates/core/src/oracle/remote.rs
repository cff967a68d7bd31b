//! HTTP adapters. Every oracle POSTs one JSON object to `{base_url}/{route}`
//! with an optional `Authorization: Bearer` header:
//!
//! | route          | request                                   | response                      |
//! |----------------|-------------------------------------------|-------------------------------|
//! | `propose`      | `{query, class_names, snippets:[{id,text}]}` | plain-text proposal lines  |
//! | `annotate`     | `{report, concept_question}`              | `{"answer": "Yes" \| "No"}`   |
//! | `groundable`   | `{concept_question}`                      | `{"answer": "Yes" \| "No"}`   |
//! | `prior`        | `{class_names, concepts}`                 | `{"prior": [[±1, ...], ...]}` |
//!
//! The base URL and token come from the environment so they never land in
//! config files or manifests.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    AnnotationLabel, AnnotationOracle, ConceptProposer, GroundabilityOracle, PriorOracle,
    ProposalRequest,
};
use crate::error::{Error, Result};

/// Default name of the variable holding the endpoint base URL. The bearer
/// token is read from the same name with a `_TOKEN` suffix.
pub const DEFAULT_ENDPOINT_ENV: &str = "KBN_ENDPOINT";

#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    base_url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl RemoteEndpoint {
    pub fn new(base_url: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            token,
            agent,
        }
    }

    /// Reads `{var}` (base URL) and `{var}_TOKEN` (optional bearer token).
    pub fn from_env(var: &str, timeout: Duration) -> Result<Self> {
        let url = std::env::var(var)
            .map_err(|_| Error::Remote(format!("environment variable {var} is not set")))?;
        let token = std::env::var(format!("{var}_TOKEN")).ok();
        Ok(Self::new(url, token, timeout))
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<T: Serialize>(
        &self,
        route: &str,
        body: &T,
    ) -> Result<ureq::http::Response<ureq::Body>> {
        let url = format!("{}/{route}", self.base_url);
        let mut req = self.agent.post(&url);
        if let Some(tok) = &self.token {
            req = req.header("Authorization", &format!("Bearer {tok}"));
        }
        req.send_json(body)
            .map_err(|e| Error::Remote(format!("POST {url}: {e}")))
    }

    fn post_text<T: Serialize>(&self, route: &str, body: &T) -> Result<String> {
        self.post(route, body)?
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Remote(format!("{route}: reading body: {e}")))
    }

    fn post_json<T: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        route: &str,
        body: &T,
    ) -> Result<R> {
        self.post(route, body)?
            .body_mut()
            .read_json()
            .map_err(|e| Error::Remote(format!("{route}: bad JSON response: {e}")))
    }
}

#[derive(Deserialize)]
struct YesNo {
    answer: String,
}

fn parse_yes_no(answer: &str) -> Option<bool> {
    match answer.trim().to_ascii_lowercase().as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct RemoteProposer(pub RemoteEndpoint);

impl ConceptProposer for RemoteProposer {
    fn propose(&self, request: &ProposalRequest) -> Result<String> {
        self.0.post_text("propose", request)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteGroundability(pub RemoteEndpoint);

impl GroundabilityOracle for RemoteGroundability {
    fn is_groundable(&self, question: &str) -> Result<bool> {
        let r: YesNo = self.0.post_json(
            "groundable",
            &serde_json::json!({ "concept_question": question }),
        )?;
        parse_yes_no(&r.answer)
            .ok_or_else(|| Error::Remote(format!("groundable: unexpected answer {:?}", r.answer)))
    }
}

#[derive(Debug, Clone)]
pub struct RemoteAnnotator(pub RemoteEndpoint);

impl AnnotationOracle for RemoteAnnotator {
    fn annotate(&self, report: &str, question: &str) -> AnnotationLabel {
        let body = serde_json::json!({ "report": report, "concept_question": question });
        match self.0.post_json::<_, YesNo>("annotate", &body) {
            Ok(r) => match parse_yes_no(&r.answer) {
                Some(true) => AnnotationLabel::Positive,
                Some(false) => AnnotationLabel::Negative,
                None => AnnotationLabel::Unknown,
            },
            Err(e) => {
                log::warn!("annotation failed, marking unknown: {e}");
                AnnotationLabel::Unknown
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RemotePrior(pub RemoteEndpoint);

#[derive(Deserialize)]
struct PriorResponse {
    prior: Vec<Vec<i8>>,
}

impl PriorOracle for RemotePrior {
    fn prior_signs(&self, class_names: &[String], questions: &[String]) -> Result<Vec<Vec<i8>>> {
        let body = serde_json::json!({ "class_names": class_names, "concepts": questions });
        let r: PriorResponse = self.0.post_json("prior", &body)?;
        Ok(r.prior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yes_no_parsing() {
        assert_eq!(parse_yes_no("Yes"), Some(true));
        assert_eq!(parse_yes_no(" no "), Some(false));
        assert_eq!(parse_yes_no("maybe"), None);
    }

    #[test]
    fn unreachable_annotator_yields_unknown() {
        let ep = RemoteEndpoint::new("http://127.0.0.1:9", None, Duration::from_millis(300));
        assert_eq!(
            RemoteAnnotator(ep).annotate("report", "Is there x?"),
            AnnotationLabel::Unknown
        );
    }
}
