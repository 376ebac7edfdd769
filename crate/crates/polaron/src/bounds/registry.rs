//! Versioned store of the numerical constants that enter the bounds.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Where a constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Exhaustive enumeration with a completeness certificate.
    Enumerated,
    /// Least envelope over a seeded sweep.
    Fitted,
    /// Read off a grid construction.
    Measured,
    /// Fixed by the model definition.
    PaperFixed,
    /// Chosen to reproduce a published number.
    Sourced,
    /// Computed from other registry entries by a closed formula.
    Derived,
}

/// A constant, its provenance and the sweep that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub value: f64,
    pub provenance: Provenance,
    pub manifest: Value,
    /// sha256 of the compact JSON of `manifest`.
    pub manifest_hash: String,
}

impl ConstantEntry {
    pub fn new(value: f64, provenance: Provenance, manifest: Value) -> Self {
        let manifest_hash = sha256_hex(manifest.to_string().as_bytes());
        Self {
            value,
            provenance,
            manifest,
            manifest_hash,
        }
    }

    fn audit(&self, name: &str) -> Result<()> {
        if !(self.value > 0.0 && self.value.is_finite()) {
            return Err(Error::precondition(format!(
                "registry constant {name} = {} is not positive",
                self.value
            )));
        }
        if self.manifest_hash != sha256_hex(self.manifest.to_string().as_bytes()) {
            return Err(Error::precondition(format!(
                "manifest hash of {name} does not match its manifest"
            )));
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// The constants c_T, c'_L, c_L, c_Λ, c_η, A and m** plus the absolute
/// constant of the final bound, which has no closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRegistry {
    pub schema_version: u32,
    /// RFC 3339 creation time.
    pub created: String,
    pub c_t: ConstantEntry,
    pub c_l_prime: ConstantEntry,
    pub c_l: ConstantEntry,
    pub c_lambda: ConstantEntry,
    pub c_eta: ConstantEntry,
    /// A(m) = 1/(m + 2); `value` is A at m**.
    pub a_const: ConstantEntry,
    pub m_star_star: ConstantEntry,
    pub main_const: ConstantEntry,
}

/// c_L = ((m** + 1)/(2m**))·c'_L/c_T.
pub fn derive_c_l(m_star_star: f64, c_l_prime: f64, c_t: f64) -> f64 {
    (m_star_star + 1.0) / (2.0 * m_star_star) * c_l_prime / c_t
}

impl ConstantsRegistry {
    /// Assemble a registry; c_L and A(m**) are derived here.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        created: String,
        c_t: ConstantEntry,
        c_l_prime: ConstantEntry,
        c_lambda: ConstantEntry,
        c_eta: ConstantEntry,
        m_star_star: ConstantEntry,
        main_const: ConstantEntry,
    ) -> Result<Self> {
        let mss = m_star_star.value;
        let c_l = ConstantEntry::new(
            derive_c_l(mss, c_l_prime.value, c_t.value),
            Provenance::Derived,
            json!({
                "formula": "((m**+1)/(2 m**)) * c_L' / c_T",
                "inputs": {
                    "m_star_star": m_star_star.manifest_hash,
                    "c_l_prime": c_l_prime.manifest_hash,
                    "c_t": c_t.manifest_hash,
                },
            }),
        );
        let a_const = ConstantEntry::new(
            crate::kernels::default_a_const(mss),
            Provenance::Sourced,
            json!({ "formula": "A(m) = 1/(m+2)", "evaluated_at": "m_star_star", "m": mss }),
        );
        let reg = Self {
            schema_version: SCHEMA_VERSION,
            created,
            c_t,
            c_l_prime,
            c_l,
            c_lambda,
            c_eta,
            a_const,
            m_star_star,
            main_const,
        };
        reg.validate()?;
        Ok(reg)
    }

    /// The registry shipped with the library, produced by `polaron calibrate`
    /// with the default sweep.
    pub fn pinned() -> Self {
        let c_t = ConstantEntry::new(
            PINNED_C_T,
            Provenance::Enumerated,
            json!({ "n_max": 1000, "argmin_n": 3, "complete_to_norm_sq": 49 }),
        );
        let c_l_prime = ConstantEntry::new(
            PINNED_C_L_PRIME,
            Provenance::Fitted,
            json!({
                "mass_spread": PINNED_C_L_PRIME_SPREAD,
                "sweep": {
                    "seed": 2024, "points": 1000, "m_range": [0.3, 10.0], "ell_range": [0.5, 4.0],
                    "q_ell_sq_range": [0.05, 100.0], "n_range": [2, 4], "k_max": 1
                }
            }),
        );
        let c_lambda = ConstantEntry::new(
            PINNED_C_LAMBDA,
            Provenance::Fitted,
            json!({ "m": [1.0, 3.0], "N": [100, 1000, 10000], "kappa_fraction": 0.25, "ell": 1.0 }),
        );
        let c_eta = ConstantEntry::new(
            PINNED_C_ETA,
            Provenance::Measured,
            json!({
                "spec": { "bump": "Standard", "ell": 1.0, "epsilon": 0.125, "l": 3.0, "points_per_ell": 64 },
                "spread": PINNED_C_ETA_SPREAD
            }),
        );
        let m_star_star = ConstantEntry::new(
            PINNED_M_STAR_STAR,
            Provenance::Measured,
            json!({ "operation": "critical_mass", "bracket": [0.3, 0.45], "m_tol": 1e-3 }),
        );
        let main_const = ConstantEntry::new(
            8.0 * PINNED_C_ETA,
            Provenance::Fitted,
            json!({ "rule": "max(8 c_eta, (m**+1)/(8 pi^4 m**))", "c_eta": PINNED_C_ETA, "m_star_star": PINNED_M_STAR_STAR }),
        );
        Self::assemble(
            PINNED_CREATED.to_string(),
            c_t,
            c_l_prime,
            c_lambda,
            c_eta,
            m_star_star,
            main_const,
        )
        .expect("pinned registry is valid")
    }

    /// Positivity, manifest hashes, schema version and the exact c_L identity.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::precondition(format!(
                "registry schema {} is not the supported version {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        for (name, e) in self.entries() {
            e.audit(name)?;
        }
        let c_l = derive_c_l(self.m_star_star.value, self.c_l_prime.value, self.c_t.value);
        if c_l.to_bits() != self.c_l.value.to_bits() {
            return Err(Error::precondition(format!(
                "c_L = {} does not recompute from m**, c_L', c_T (expected {c_l})",
                self.c_l.value
            )));
        }
        Ok(())
    }

    pub fn entries(&self) -> [(&'static str, &ConstantEntry); 8] {
        [
            ("c_t", &self.c_t),
            ("c_l_prime", &self.c_l_prime),
            ("c_l", &self.c_l),
            ("c_lambda", &self.c_lambda),
            ("c_eta", &self.c_eta),
            ("a_const", &self.a_const),
            ("m_star_star", &self.m_star_star),
            ("main_const", &self.main_const),
        ]
    }

    /// sha256 over the constants and manifests; the timestamp is excluded so
    /// that identical calibrations hash identically.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("registry serialises");
        if let Value::Object(map) = &mut v {
            map.remove("created");
        }
        sha256_hex(v.to_string().as_bytes())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let reg: Self = serde_json::from_str(s)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

const PINNED_CREATED: &str = "2026-10-18T09:11:37.928657339+00:00";
const PINNED_C_T: f64 = 3.163207268127829;
const PINNED_C_L_PRIME: f64 = 244.68343252507933;
const PINNED_C_L_PRIME_SPREAD: f64 = 1.0087167803375983;
const PINNED_C_LAMBDA: f64 = 3.984193263607766e-06;
const PINNED_C_ETA: f64 = 56.333332877358075;
const PINNED_C_ETA_SPREAD: f64 = 0.010676055526757445;
const PINNED_M_STAR_STAR: f64 = 0.35771484375;
