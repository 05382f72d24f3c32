//! Bearer tokens (compact HS256 JWS) and salted password digests.

use argon2::password_hash::{PasswordHash, PasswordHasher as _, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Duration, TimeZone, Utc};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::access::Grant;
use crate::model::UserId;

type HmacSha256 = Hmac<Sha256>;

const HEADER: &str = r#"{"alg":"HS256","typ":"JWT"}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token expired")]
    Expired,
    #[error("token signature does not verify")]
    BadSignature,
    #[error("token is malformed")]
    Malformed,
}

impl TokenError {
    pub fn code(&self) -> &'static str {
        match self {
            TokenError::Expired => "EXPIRED",
            TokenError::BadSignature => "BAD_SIGNATURE",
            TokenError::Malformed => "MALFORMED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claims {
    pub sub: UserId,
    /// Roles held when the token was issued.
    pub roles: Vec<Grant>,
    pub iat: i64,
    pub exp: i64,
}

impl Claims {
    pub fn issued_at(&self) -> DateTime<Utc> {
        Utc.timestamp_opt(self.iat, 0).single().unwrap_or_default()
    }

    pub fn expires_at(&self) -> DateTime<Utc> {
        Utc.timestamp_opt(self.exp, 0).single().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthToken {
    pub token: String,
    pub claims: Claims,
}

/// Signs and checks bearer tokens with one server secret.
#[derive(Clone)]
pub struct TokenIssuer {
    secret: Vec<u8>,
    ttl: Duration,
}

impl std::fmt::Debug for TokenIssuer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenIssuer").field("ttl", &self.ttl).finish_non_exhaustive()
    }
}

impl TokenIssuer {
    pub const DEFAULT_TTL_HOURS: i64 = 24;

    pub fn new(secret: impl Into<Vec<u8>>, ttl: Duration) -> Self {
        Self { secret: secret.into(), ttl }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    fn mac(&self) -> HmacSha256 {
        HmacSha256::new_from_slice(&self.secret).expect("HMAC accepts keys of any length")
    }

    pub fn issue(&self, user: &UserId, roles: Vec<Grant>, now: DateTime<Utc>) -> AuthToken {
        let claims = Claims { sub: user.clone(), roles, iat: now.timestamp(), exp: (now + self.ttl).timestamp() };
        let payload = serde_json::to_vec(&claims).expect("claims always serialize");
        let signing_input = format!("{}.{}", URL_SAFE_NO_PAD.encode(HEADER), URL_SAFE_NO_PAD.encode(payload));
        let mut mac = self.mac();
        mac.update(signing_input.as_bytes());
        let signature = URL_SAFE_NO_PAD.encode(mac.finalize().into_bytes());
        AuthToken { token: format!("{signing_input}.{signature}"), claims }
    }

    /// Accepts iff the signature verifies and `now` is before expiry.
    pub fn verify(&self, token: &str, now: DateTime<Utc>) -> Result<Claims, TokenError> {
        let mut parts = token.split('.');
        let (Some(header), Some(payload), Some(signature), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(TokenError::Malformed);
        };
        let signature = URL_SAFE_NO_PAD.decode(signature).map_err(|_| TokenError::Malformed)?;

        // The MAC covers the encoded text, so any tampering fails here first.
        let mut mac = self.mac();
        mac.update(header.as_bytes());
        mac.update(b".");
        mac.update(payload.as_bytes());
        mac.verify_slice(&signature).map_err(|_| TokenError::BadSignature)?;

        let header = URL_SAFE_NO_PAD.decode(header).map_err(|_| TokenError::Malformed)?;
        let header: serde_json::Value = serde_json::from_slice(&header).map_err(|_| TokenError::Malformed)?;
        if header.get("alg").and_then(|a| a.as_str()) != Some("HS256") {
            return Err(TokenError::Malformed);
        }
        let payload = URL_SAFE_NO_PAD.decode(payload).map_err(|_| TokenError::Malformed)?;
        let claims: Claims = serde_json::from_slice(&payload).map_err(|_| TokenError::Malformed)?;
        if now.timestamp() >= claims.exp {
            return Err(TokenError::Expired);
        }
        Ok(claims)
    }
}

/// Argon2id cost parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordPolicy {
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

impl Default for PasswordPolicy {
    fn default() -> Self {
        Self { memory_kib: 19 * 1024, iterations: 2, parallelism: 1 }
    }
}

impl PasswordPolicy {
    /// Cheap settings for tests and synthetic accounts.
    pub fn fast() -> Self {
        Self { memory_kib: 256, iterations: 1, parallelism: 1 }
    }

    fn argon2(&self) -> Argon2<'static> {
        let params = Params::new(self.memory_kib, self.iterations, self.parallelism, None)
            .expect("password policy parameters are within argon2 limits");
        Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
    }

    pub fn hash(&self, password: &str) -> String {
        let salt: [u8; 16] = rand::random();
        self.hash_with_salt_bytes(password, &salt)
    }

    /// Deterministic digest for a caller-chosen salt (at least 8 bytes).
    pub fn hash_with_salt_bytes(&self, password: &str, salt: &[u8]) -> String {
        let salt = SaltString::encode_b64(salt).expect("salt length is within limits");
        self.hash_with_salt(password, &salt)
    }

    fn hash_with_salt(&self, password: &str, salt: &SaltString) -> String {
        self.argon2()
            .hash_password(password.as_bytes(), salt)
            .expect("argon2 hashing does not fail for valid parameters")
            .to_string()
    }

    /// Parameters are read back from the digest, so policy changes keep old digests valid.
    pub fn verify(password: &str, digest: &str) -> bool {
        PasswordHash::new(digest)
            .map(|parsed| Argon2::default().verify_password(password.as_bytes(), &parsed).is_ok())
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures::ts, Role};
    use proptest::prelude::*;

    fn issuer() -> TokenIssuer {
        TokenIssuer::new("test-secret", Duration::hours(24))
    }

    #[test]
    fn round_trip_within_ttl() {
        let now = ts(2026, 1, 1);
        let roles = vec![Grant::global(Role::Community), Grant::for_call(Role::Pi, "call-1".into())];
        let t = issuer().issue(&"usr-1".into(), roles, now);
        assert_eq!(t.token.split('.').count(), 3);
        let claims = issuer().verify(&t.token, now + Duration::seconds(1)).unwrap();
        assert_eq!(claims, t.claims);
        assert_eq!(claims.expires_at(), now + Duration::hours(24));
    }

    #[test]
    fn expiry_is_exclusive() {
        let now = ts(2026, 1, 1);
        let t = issuer().issue(&"usr-1".into(), vec![], now);
        let exp = t.claims.expires_at();
        assert_eq!(issuer().verify(&t.token, exp - Duration::seconds(1)).map(|c| c.sub), Ok("usr-1".into()));
        assert_eq!(issuer().verify(&t.token, exp), Err(TokenError::Expired));
        assert_eq!(issuer().verify(&t.token, exp + Duration::seconds(1)), Err(TokenError::Expired));
    }

    #[test]
    fn other_secret_is_rejected() {
        let t = issuer().issue(&"usr-1".into(), vec![], ts(2026, 1, 1));
        let other = TokenIssuer::new("other", Duration::hours(24));
        assert_eq!(other.verify(&t.token, ts(2026, 1, 1)), Err(TokenError::BadSignature));
    }

    #[test]
    fn malformed_tokens() {
        for bad in ["", "abc", "a.b", "a.b.c.d", "a.b.!!!"] {
            assert_eq!(issuer().verify(bad, ts(2026, 1, 1)), Err(TokenError::Malformed), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn verify_inverts_issue_within_the_ttl(
            user in "usr-[a-z0-9]{1,12}",
            roles in prop::collection::vec(prop::sample::select(Role::ALL.to_vec()), 0..4),
            elapsed in 0i64..86_400,
        ) {
            let now = ts(2026, 1, 1);
            let grants: Vec<Grant> = roles.into_iter().map(Grant::global).collect();
            let t = issuer().issue(&user.as_str().into(), grants, now);
            prop_assert_eq!(issuer().verify(&t.token, now + Duration::seconds(elapsed)), Ok(t.claims));
        }

        #[test]
        fn any_payload_flip_breaks_the_signature(pos in 0usize..1000, bit in 0u8..7) {
            let t = issuer().issue(&"usr-1".into(), vec![Grant::global(Role::Reviewer)], ts(2026, 1, 1));
            let (head, rest) = t.token.split_once('.').unwrap();
            let (payload, sig) = rest.split_once('.').unwrap();
            let mut bytes = payload.as_bytes().to_vec();
            let i = pos % bytes.len();
            bytes[i] ^= 1 << bit;
            let tampered = format!("{head}.{}.{sig}", String::from_utf8_lossy(&bytes));
            prop_assume!(tampered != t.token && tampered.matches('.').count() == 2);
            prop_assert_eq!(issuer().verify(&tampered, ts(2026, 1, 1)), Err(TokenError::BadSignature));
        }
    }

    #[test]
    fn password_digests() {
        let policy = PasswordPolicy::fast();
        let digest = policy.hash("correct horse");
        assert!(digest.starts_with("$argon2id$"));
        assert!(!digest.contains("correct horse"));
        assert!(PasswordPolicy::verify("correct horse", &digest));
        assert!(!PasswordPolicy::verify("wrong", &digest));
        assert_ne!(digest, policy.hash("correct horse"), "salts differ");
        let fixed = policy.hash_with_salt_bytes("pw", b"0123456789abcdef");
        assert_eq!(fixed, policy.hash_with_salt_bytes("pw", b"0123456789abcdef"));
    }
}
