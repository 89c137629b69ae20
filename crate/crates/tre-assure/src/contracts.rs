//! Contract data model: tail SLOs, arrival envelopes, tail-risk envelopes,
//! domain offers, canonical serialization, and signing.
//!
//! A tail-risk envelope (TRE) is a domain's published service contract at a
//! given reservation class and tilting parameter θ: a deterministic
//! rate–latency guardrail `(rate, latency)` plus an impairment envelope
//! `(kappa, eta)` bounding the exponential moments of whatever service the
//! domain fails to deliver beyond the guardrail. Arrival envelopes bound
//! tenant traffic the same way: `E[exp(θ·A(s,t))] ≤ exp(θ·rho·(t−s) + θ·sigma)`.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Signing operates on a fixed canonical byte layout, not on JSON,
//! so signatures are bit-exact across implementations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by contract handling.
#[derive(Debug, Error)]
pub enum ContractError {
    /// A numeric field is NaN or infinite and cannot be canonically encoded.
    #[error("serialization error: {0}")]
    Serialization(String),
    /// Key material is malformed for the configured signature scheme.
    #[error("key error: {0}")]
    Key(String),
    /// Verification was requested on a contract with no signature attached.
    #[error("verify error: {0}")]
    Verify(String),
    /// A parameter is outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),
}

/// End-to-end tail service-level objective for one tenant and request class.
///
/// `tau` is the deadline and `epsilon` the allowed violation probability
/// (`epsilon = 1e-3` is p99.9). `policy` carries the opaque admissibility
/// tags used to filter candidate domains. `quality` and `freshness` are
/// carried opaquely and never interpreted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSlo {
    pub tenant_id: String,
    pub class_id: String,
    pub tau: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub policy: BTreeSet<String>,
    #[serde(default)]
    pub quality: Option<serde_json::Value>,
    #[serde(default)]
    pub freshness: Option<serde_json::Value>,
}

impl TailSlo {
    /// Checks `tau > 0` and `0 < epsilon < 1`.
    pub fn validate(&self) -> Result<(), ContractError> {
        if !(self.tau > 0.0) {
            return Err(ContractError::Parameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ContractError::Parameter(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// MGF traffic descriptor at tilting parameter `theta`: sustained rate `rho`
/// plus burst allowance `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalEnvelope {
    pub theta: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl ArrivalEnvelope {
    pub fn new(theta: f64, rho: f64, sigma: f64) -> Result<Self, ContractError> {
        if !(theta > 0.0) {
            return Err(ContractError::Parameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if !(rho >= 0.0) || !(sigma >= 0.0) {
            return Err(ContractError::Parameter(format!(
                "rho and sigma must be nonnegative, got rho={rho} sigma={sigma}"
            )));
        }
        Ok(Self { theta, rho, sigma })
    }
}

/// Signed per-domain tail-risk envelope at tilting parameter `theta`.
///
/// `rate` and `latency` are the deterministic guardrail; `kappa` (impairment
/// slope, workload per time unit) and `eta` (impairment offset, workload
/// units) bound the residual uncertainty. The signature covers the canonical
/// serialization of every other field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRiskEnvelope {
    pub domain_id: String,
    pub reservation_class: String,
    pub theta: f64,
    pub rate: f64,
    pub latency: f64,
    pub kappa: f64,
    pub eta: f64,
    pub signer_id: String,
    #[serde(default, with = "base64_opt")]
    pub signature: Option<Vec<u8>>,
}

impl TailRiskEnvelope {
    /// Checks the numeric invariants: `theta > 0`, `rate > 0`, `latency ≥ 0`,
    /// `kappa ≥ 0`, `eta ≥ 0`, all finite.
    pub fn validate(&self) -> Result<(), ContractError> {
        let finite = [self.theta, self.rate, self.latency, self.kappa, self.eta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(ContractError::Parameter(
                "all numeric fields must be finite".into(),
            ));
        }
        if !(self.theta > 0.0) {
            return Err(ContractError::Parameter(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.rate > 0.0) {
            return Err(ContractError::Parameter(format!(
                "rate must be positive, got {}",
                self.rate
            )));
        }
        if self.latency < 0.0 || self.kappa < 0.0 || self.eta < 0.0 {
            return Err(ContractError::Parameter(
                "latency, kappa, and eta must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// A domain's published offer: one TRE per reservation class (and tilting
/// point), a cost slope for reserved rate, total reservable capacity, and
/// the policy tags the domain can satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainOffer {
    pub domain_id: String,
    pub tres: Vec<TailRiskEnvelope>,
    pub cost_slope: f64,
    pub capacity: f64,
    #[serde(default)]
    pub admissible_tags: BTreeSet<String>,
    /// Optional convex piecewise-linear cost curve as `(rate_breakpoint,
    /// slope_above)` segments; when absent the cost is `cost_slope · rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_curve: Option<Vec<(f64, f64)>>,
}

impl DomainOffer {
    /// Reserved-rate cost at total rate `r`.
    pub fn cost(&self, r: f64) -> f64 {
        match &self.cost_curve {
            None => self.cost_slope * r,
            Some(segments) => {
                let mut total = 0.0;
                let mut prev_break = 0.0;
                let mut prev_slope = self.cost_slope;
                for &(brk, slope) in segments {
                    if r <= brk {
                        break;
                    }
                    total += prev_slope * (brk.min(r) - prev_break);
                    prev_break = brk;
                    prev_slope = slope;
                }
                total + prev_slope * (r - prev_break).max(0.0)
            }
        }
    }

    /// Marginal cost slope at total rate `r`.
    pub fn marginal_cost(&self, r: f64) -> f64 {
        match &self.cost_curve {
            None => self.cost_slope,
            Some(segments) => {
                let mut slope = self.cost_slope;
                for &(brk, s) in segments {
                    if r > brk {
                        slope = s;
                    }
                }
                slope
            }
        }
    }

    /// Find the TRE published for `reservation_class` at tilting `theta`.
    pub fn tre_for(&self, reservation_class: &str, theta: f64) -> Option<&TailRiskEnvelope> {
        self.tres
            .iter()
            .find(|t| t.reservation_class == reservation_class && t.theta == theta)
    }
}

/// One violation found while validating an offer. Violations are data, not
/// errors: a validator reports all of them at once.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OfferViolation {
    InvariantViolation { field: String, detail: String },
    SignatureViolation { domain_id: String, reservation_class: String },
    MissingKey { signer_id: String },
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

// Field order is fixed alphabetically over the canonical field names:
// domain_id, eta, kappa, latency, rate, reservation_class, signer_id, theta.
// Strings are u32 big-endian length + UTF-8 bytes; floats are 8-byte
// big-endian IEEE 754. The signature field is never part of the layout.

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_f64(out: &mut Vec<u8>, name: &str, v: f64) -> Result<(), ContractError> {
    if !v.is_finite() {
        return Err(ContractError::Serialization(format!(
            "field {name} is not finite: {v}"
        )));
    }
    out.extend_from_slice(&v.to_be_bytes());
    Ok(())
}

/// Canonical byte encoding of a TRE's non-signature fields.
///
/// Equal field values yield identical bytes; any field change yields
/// different bytes. This is the exact message covered by [`sign_tre`].
pub fn canonical_serialize(tre: &TailRiskEnvelope) -> Result<Vec<u8>, ContractError> {
    let mut out = Vec::with_capacity(64);
    put_str(&mut out, &tre.domain_id);
    put_f64(&mut out, "eta", tre.eta)?;
    put_f64(&mut out, "kappa", tre.kappa)?;
    put_f64(&mut out, "latency", tre.latency)?;
    put_f64(&mut out, "rate", tre.rate)?;
    put_str(&mut out, &tre.reservation_class);
    put_str(&mut out, &tre.signer_id);
    put_f64(&mut out, "theta", tre.theta)?;
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContractError> {
        if self.pos + n > self.buf.len() {
            return Err(ContractError::Serialization("truncated input".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn get_str(&mut self) -> Result<String, ContractError> {
        let len = u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|e| ContractError::Serialization(format!("invalid UTF-8: {e}")))
    }

    fn get_f64(&mut self) -> Result<f64, ContractError> {
        Ok(f64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Inverse of [`canonical_serialize`]; the decoded TRE carries no signature.
pub fn canonical_deserialize(bytes: &[u8]) -> Result<TailRiskEnvelope, ContractError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let domain_id = cur.get_str()?;
    let eta = cur.get_f64()?;
    let kappa = cur.get_f64()?;
    let latency = cur.get_f64()?;
    let rate = cur.get_f64()?;
    let reservation_class = cur.get_str()?;
    let signer_id = cur.get_str()?;
    let theta = cur.get_f64()?;
    if cur.pos != bytes.len() {
        return Err(ContractError::Serialization("trailing bytes".into()));
    }
    Ok(TailRiskEnvelope {
        domain_id,
        reservation_class,
        theta,
        rate,
        latency,
        kappa,
        eta,
        signer_id,
        signature: None,
    })
}

// ---------------------------------------------------------------------------
// Signing
// ---------------------------------------------------------------------------

/// Pluggable detached signature scheme over raw bytes.
///
/// `verify` returns `Ok(false)` for a well-formed but non-matching
/// signature and `Err` only for malformed key material.
pub trait SignatureScheme: Send + Sync {
    fn sign(&self, signing_key: &[u8], message: &[u8]) -> Result<Vec<u8>, ContractError>;
    fn verify(
        &self,
        public_key: &[u8],
        message: &[u8],
        signature: &[u8],
    ) -> Result<bool, ContractError>;
}

/// Default scheme: detached Ed25519 signatures. Signing keys are 32-byte
/// seeds, public keys 32-byte compressed points, signatures 64 bytes.
pub struct Ed25519Scheme;

impl SignatureScheme for Ed25519Scheme {
    fn sign(&self, signing_key: &[u8], message: &[u8]) -> Result<Vec<u8>, ContractError> {
        use ed25519_dalek::{Signer, SigningKey};
        let seed: [u8; 32] = signing_key
            .try_into()
            .map_err(|_| ContractError::Key(format!("signing key must be 32 bytes, got {}", signing_key.len())))?;
        let key = SigningKey::from_bytes(&seed);
        Ok(key.sign(message).to_bytes().to_vec())
    }

    fn verify(
        &self,
        public_key: &[u8],
        message: &[u8],
        signature: &[u8],
    ) -> Result<bool, ContractError> {
        use ed25519_dalek::{Signature, Verifier, VerifyingKey};
        let pk: [u8; 32] = public_key
            .try_into()
            .map_err(|_| ContractError::Key(format!("public key must be 32 bytes, got {}", public_key.len())))?;
        let key = VerifyingKey::from_bytes(&pk)
            .map_err(|e| ContractError::Key(format!("invalid public key: {e}")))?;
        let sig: [u8; 64] = match signature.try_into() {
            Ok(s) => s,
            Err(_) => return Ok(false),
        };
        Ok(key.verify(message, &Signature::from_bytes(&sig)).is_ok())
    }
}

/// Deterministic Ed25519 keypair for fixtures and tests: the signing seed is
/// `SHA-256(label)`, the public key follows from it.
pub fn keypair_from_label(label: &str) -> (Vec<u8>, Vec<u8>) {
    use ed25519_dalek::SigningKey;
    use sha2::{Digest, Sha256};
    let seed: [u8; 32] = Sha256::digest(label.as_bytes()).into();
    let key = SigningKey::from_bytes(&seed);
    (seed.to_vec(), key.verifying_key().to_bytes().to_vec())
}

/// Attach a signature over the canonical serialization.
pub fn sign_tre(
    tre: &TailRiskEnvelope,
    scheme: &dyn SignatureScheme,
    signing_key: &[u8],
) -> Result<TailRiskEnvelope, ContractError> {
    let message = canonical_serialize(tre)?;
    let signature = scheme.sign(signing_key, &message)?;
    let mut signed = tre.clone();
    signed.signature = Some(signature);
    Ok(signed)
}

/// Verify a TRE's signature against its canonical serialization.
///
/// Returns `Ok(false)` when the signature does not match; `Err(Verify)` when
/// no signature is attached.
pub fn verify_tre(
    tre: &TailRiskEnvelope,
    scheme: &dyn SignatureScheme,
    public_key: &[u8],
) -> Result<bool, ContractError> {
    let signature = tre
        .signature
        .as_ref()
        .ok_or_else(|| ContractError::Verify("TRE carries no signature".into()))?;
    let message = canonical_serialize(tre)?;
    scheme.verify(public_key, &message, signature)
}

// ---------------------------------------------------------------------------
// Arrival envelopes
// ---------------------------------------------------------------------------

/// Exact effective-bandwidth envelope for a unit-increment Poisson process in
/// discrete time: `rho(θ) = λ(e^θ − 1)/θ`, `sigma = 0`.
///
/// Below `θ = 1e-8` the quotient is evaluated by series to avoid
/// cancellation; the limit is `rho → λ`.
pub fn effective_rate_poisson(lambda: f64, theta: f64) -> Result<ArrivalEnvelope, ContractError> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(ContractError::Parameter(format!(
            "theta must be positive and finite, got {theta}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ContractError::Parameter(format!(
            "lambda must be nonnegative and finite, got {lambda}"
        )));
    }
    let factor = if theta < 1e-8 {
        // (e^θ − 1)/θ = 1 + θ/2 + θ²/6 + O(θ³)
        1.0 + theta / 2.0 + theta * theta / 6.0
    } else {
        theta.exp_m1() / theta
    };
    ArrivalEnvelope::new(theta, lambda * factor, 0.0)
}

/// Validate all type invariants of an offer and verify every TRE signature.
///
/// `keys` resolves a signer id to its public key; `scheme` is the signature
/// scheme the offer was signed under. Pass `scheme = None` to skip signature
/// checks (unsigned workflows).
pub fn validate_offer(
    offer: &DomainOffer,
    scheme: Option<&dyn SignatureScheme>,
    keys: &std::collections::BTreeMap<String, Vec<u8>>,
) -> Vec<OfferViolation> {
    let mut violations = Vec::new();
    if !(offer.cost_slope >= 0.0) {
        violations.push(OfferViolation::InvariantViolation {
            field: "cost_slope".into(),
            detail: format!("must be nonnegative, got {}", offer.cost_slope),
        });
    }
    let max_rate = offer.tres.iter().map(|t| t.rate).fold(0.0_f64, f64::max);
    if offer.capacity < max_rate {
        violations.push(OfferViolation::InvariantViolation {
            field: "capacity".into(),
            detail: format!(
                "capacity {} below largest published rate {}",
                offer.capacity, max_rate
            ),
        });
    }
    for tre in &offer.tres {
        if tre.domain_id != offer.domain_id {
            violations.push(OfferViolation::InvariantViolation {
                field: "domain_id".into(),
                detail: format!(
                    "TRE domain {} does not match offer domain {}",
                    tre.domain_id, offer.domain_id
                ),
            });
        }
        if let Err(e) = tre.validate() {
            let field = match &e {
                ContractError::Parameter(msg) => msg
                    .split_whitespace()
                    .next()
                    .unwrap_or("unknown")
                    .to_string(),
                _ => "unknown".to_string(),
            };
            violations.push(OfferViolation::InvariantViolation {
                field,
                detail: e.to_string(),
            });
        }
        if let Some(scheme) = scheme {
            match keys.get(&tre.signer_id) {
                None => violations.push(OfferViolation::MissingKey {
                    signer_id: tre.signer_id.clone(),
                }),
                Some(pk) => {
                    let ok = verify_tre(tre, scheme, pk).unwrap_or(false);
                    if !ok {
                        violations.push(OfferViolation::SignatureViolation {
                            domain_id: tre.domain_id.clone(),
                            reservation_class: tre.reservation_class.clone(),
                        });
                    }
                }
            }
        }
    }
    violations
}

mod base64_opt {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_some(&STANDARD.encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let opt: Option<String> = Option::deserialize(d)?;
        match opt {
            None => Ok(None),
            Some(text) => STANDARD
                .decode(text.as_bytes())
                .map(Some)
                .map_err(serde::de::Error::custom),
        }
    }
}
