//! Operation-count model for one transfer, following the cost breakdown:
//! one token per storage actor, one Alice-Bob key computation per side
//! (two RDMPFs each when tokens are recomputed), and one transport RDMPF per
//! side per contacted storage actor.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use deaddrop_core::kem::{
    decapsulate_counted, encapsulate_counted, Capsule, TransferContext, ENVELOPE_HEADER_LEN,
};
use deaddrop_core::math::{encoded_matrix_len, rdmpf, rdmpf_counted, KeyPair, OpCounter, PublicKey, PublicParams};
use deaddrop_core::suite::{DetRng, AEAD_IV_LEN, AEAD_TAG_LEN};

use crate::SimError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TokenMode {
    /// Each side reuses the peer's published token.
    #[default]
    Reuse,
    /// Each side recomputes the peer's token before combining.
    Recompute,
}

impl fmt::Display for TokenMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenMode::Reuse => "reuse",
            TokenMode::Recompute => "recompute",
        })
    }
}

impl FromStr for TokenMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "reuse" => Ok(TokenMode::Reuse),
            "recompute" => Ok(TokenMode::Recompute),
            _ => Err(SimError::Scenario(format!("unknown mode {s:?}"))),
        }
    }
}

/// `3n + 2` with token reuse, `3n + 4` with recomputation.
pub fn predicted_rdmpfs(n: usize, mode: TokenMode) -> u64 {
    3 * n as u64 + if mode == TokenMode::Reuse { 2 } else { 4 }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireSizes {
    pub matrix: usize,
    pub public_key: usize,
    pub capsule: usize,
    /// Envelope bytes beyond the payload: IV, AEAD tag, `h` and `reclaim_tag`.
    pub envelope_overhead: usize,
}

impl WireSizes {
    pub fn for_params(params: &PublicParams) -> Self {
        Self {
            matrix: encoded_matrix_len(params.field(), params.dim()),
            public_key: PublicKey::encoded_len(params),
            capsule: Capsule::encoded_len(params),
            envelope_overhead: AEAD_IV_LEN + AEAD_TAG_LEN + ENVELOPE_HEADER_LEN,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub dim: usize,
    pub bits: u64,
    pub n: usize,
    pub mode: TokenMode,
    pub per_actor: BTreeMap<String, OpCounter>,
    pub total: OpCounter,
    pub predicted: u64,
    /// Exponentiations in every single RDMPF call; `None` if calls disagreed.
    pub modexp_per_call: Option<u64>,
    /// Encapsulate plus decapsulate on the protocol path, counted separately.
    pub protocol_path: OpCounter,
    pub wire: WireSizes,
}

impl BenchReport {
    pub fn matches_prediction(&self) -> bool {
        self.total.rdmpf_calls == self.predicted
            && self.modexp_per_call == Some((self.dim as u64).pow(4))
            && self.protocol_path.rdmpf_calls == 4
    }
}

/// Records one call and checks its exponentiation count stays uniform.
struct Tally {
    per_actor: BTreeMap<String, OpCounter>,
    per_call: Option<Option<u64>>,
}

impl Tally {
    fn add(&mut self, actor: &str, c: OpCounter) {
        self.per_actor.entry(actor.to_owned()).or_default().absorb(c);
        let this = Some(c.modexps);
        self.per_call = Some(match self.per_call {
            None => this,
            Some(prev) if prev == this => prev,
            Some(_) => None,
        });
    }
}

pub fn run_bench(params: &PublicParams, n: usize, mode: TokenMode, seed: &[u8]) -> Result<BenchReport, SimError> {
    let f = params.field();
    let w = params.w();
    let mut rng = DetRng::new("bench", seed);
    let alice = KeyPair::generate(params, &mut rng);
    let bob = KeyPair::generate(params, &mut rng);
    let storage: Vec<KeyPair> = (0..n).map(|_| KeyPair::generate(params, &mut rng)).collect();
    let mut tally = Tally { per_actor: BTreeMap::new(), per_call: None };

    let call = |tally: &mut Tally, actor: &str, kp: &PublicKey, mid: &_| {
        let mut c = OpCounter::default();
        let out = rdmpf_counted(f, &kp.p, mid, &kp.q, &mut c);
        tally.add(actor, c);
        out
    };

    let mut tokens = Vec::with_capacity(n);
    for (i, c) in storage.iter().enumerate() {
        tokens.push(call(&mut tally, &format!("C{}", i + 1), c.public(), w)?);
    }

    // Alice-Bob agreement. Published tokens exist beforehand and are not counted.
    let (token_a, token_b) = match mode {
        TokenMode::Reuse => (
            rdmpf(f, &alice.public().p, w, &alice.public().q)?,
            rdmpf(f, &bob.public().p, w, &bob.public().q)?,
        ),
        TokenMode::Recompute => (
            call(&mut tally, "bob", alice.public(), w)?,
            call(&mut tally, "alice", bob.public(), w)?,
        ),
    };
    let k_alice = call(&mut tally, "alice", alice.public(), &token_b)?;
    let k_bob = call(&mut tally, "bob", bob.public(), &token_a)?;
    if k_alice != k_bob {
        return Err(SimError::Bench("Alice and Bob derived different keys".into()));
    }

    for t in &tokens {
        call(&mut tally, "alice", alice.public(), t)?;
        call(&mut tally, "bob", bob.public(), t)?;
    }

    let mut protocol_path = OpCounter::default();
    let ctx = TransferContext::new().with("bench", seed);
    let enc = encapsulate_counted(params, &alice, bob.public(), &ctx, b"bench", [0; 32], &mut rng, &mut protocol_path)
        .map_err(|e| SimError::Bench(e.to_string()))?;
    decapsulate_counted(params, &bob, &enc.capsule, &ctx, &mut protocol_path).map_err(|e| SimError::Bench(e.to_string()))?;

    let mut total = OpCounter::default();
    for c in tally.per_actor.values() {
        total.absorb(*c);
    }
    Ok(BenchReport {
        dim: params.dim(),
        bits: params.p().bits(),
        n,
        mode,
        per_actor: tally.per_actor,
        total,
        predicted: predicted_rdmpfs(n, mode),
        modexp_per_call: tally.per_call.flatten(),
        protocol_path,
        wire: WireSizes::for_params(params),
    })
}
