use std::collections::hash_map::RandomState;
use std::hash::BuildHasher;

use melodyforge_core::generator::{random_seed_pitch, GenerationError, GenerationRequest};
use melodyforge_core::pianoroll::{parse_note_list, PianoRollError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RequestError {
    #[error("invalid seed notes: {0}")]
    BadSeed(#[from] PianoRollError),
    #[error("seconds must be in (0, {max}], got {value}")]
    BadSeconds { value: f64, max: f64 },
    #[error(transparent)]
    Invalid(#[from] GenerationError),
}

/// Optional request fields as they arrive from the CLI or the HTTP body.
#[derive(Debug, Clone, Default, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestFields {
    /// Comma-separated note names, e.g. `"A4,C5"`.
    pub seed_notes: Option<String>,
    pub seconds: Option<f64>,
    pub temperature: Option<f64>,
    pub rng_seed: Option<u64>,
}

/// A seed from the process's hash randomness, for requests that bring none.
pub fn fresh_seed() -> u64 {
    RandomState::new().hash_one(std::time::SystemTime::now())
}

/// Fills defaults and validates. Without seed notes the seed is a single
/// pitch drawn from the request's rng seed.
pub fn resolve_request(fields: &RequestFields, max_seconds: f64) -> Result<GenerationRequest, RequestError> {
    let rng_seed = fields.rng_seed.unwrap_or_else(fresh_seed);
    let seed_tokens = match &fields.seed_notes {
        Some(names) => parse_note_list(names)?.into_iter().map(usize::from).collect(),
        None => vec![usize::from(random_seed_pitch(rng_seed))],
    };
    let mut req = GenerationRequest::new(seed_tokens, rng_seed);
    if let Some(s) = fields.seconds {
        req.target_seconds = s;
    }
    if let Some(t) = fields.temperature {
        req.temperature = t;
    }
    if !(req.target_seconds > 0.0 && req.target_seconds <= max_seconds) {
        return Err(RequestError::BadSeconds {
            value: req.target_seconds,
            max: max_seconds,
        });
    }
    req.validate()?;
    Ok(req)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let req = resolve_request(&RequestFields { rng_seed: Some(3), ..Default::default() }, 300.0).unwrap();
        assert_eq!(req.target_seconds, 120.0);
        assert_eq!(req.temperature, 1.0);
        assert_eq!(req.rng_seed, 3);
        assert_eq!(req.seed_tokens, vec![usize::from(random_seed_pitch(3))]);
    }

    #[test]
    fn named_seed_and_limits() {
        let fields = RequestFields {
            seed_notes: Some("A4,C5".into()),
            seconds: Some(30.0),
            temperature: Some(0.0),
            rng_seed: Some(1),
        };
        let req = resolve_request(&fields, 300.0).unwrap();
        assert_eq!(req.seed_tokens, vec![69, 72]);
        assert_eq!(req.temperature, 0.0);

        let bad_seed = RequestFields { seed_notes: Some("X4".into()), ..Default::default() };
        assert!(matches!(resolve_request(&bad_seed, 300.0), Err(RequestError::BadSeed(_))));
        for s in [0.0, -1.0, 301.0, f64::NAN] {
            let f = RequestFields { seconds: Some(s), ..Default::default() };
            assert!(matches!(resolve_request(&f, 300.0), Err(RequestError::BadSeconds { .. })));
        }
        let hot = RequestFields { temperature: Some(-1.0), ..Default::default() };
        assert!(matches!(resolve_request(&hot, 300.0), Err(RequestError::Invalid(_))));
    }

    #[test]
    fn json_fields() {
        let f: RequestFields = serde_json::from_str(r#"{"seed_notes":"A4","rng_seed":7}"#).unwrap();
        assert_eq!(f.seed_notes.as_deref(), Some("A4"));
        assert!(serde_json::from_str::<RequestFields>(r#"{"seeds":"A4"}"#).is_err());
    }
}
