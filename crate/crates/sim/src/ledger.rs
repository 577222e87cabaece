//! Toy ledger with subaccounts and a shared mixer pool.

use std::collections::BTreeMap;

use deaddrop_core::suite::{blake2s_event, DetRng, DomainTag};

pub const MIXER_POOL: &str = "mixer-pool";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub tick: u64,
    pub from: String,
    pub to: String,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("insufficient funds in {account}: have {have}, need {need}")]
    Insufficient { account: String, have: u64, need: u64 },
    #[error("zero-amount transfer")]
    ZeroAmount,
}

#[derive(Clone, Debug, Default)]
pub struct Ledger {
    balances: BTreeMap<String, u64>,
    log: Vec<Transfer>,
    minted: u128,
}

/// `"sub-" || hex(blake2s_event("subaccount", deposit_id))`.
pub fn subaccount(deposit_id: &str) -> String {
    let d = blake2s_event(DomainTag::Subaccount, &[deposit_id.as_bytes()]).expect("subaccount is a BLAKE2s tag");
    format!("sub-{}", hex::encode(d))
}

impl Ledger {
    /// Genesis allocation. The only way supply enters the ledger.
    pub fn mint(&mut self, account: &str, amount: u64) {
        *self.balances.entry(account.to_owned()).or_default() += amount;
        self.minted += u128::from(amount);
    }

    pub fn balance(&self, account: &str) -> u64 {
        self.balances.get(account).copied().unwrap_or(0)
    }

    pub fn transfer(&mut self, tick: u64, from: &str, to: &str, amount: u64) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let have = self.balance(from);
        if have < amount {
            return Err(LedgerError::Insufficient { account: from.to_owned(), have, need: amount });
        }
        *self.balances.get_mut(from).expect("nonzero balance exists") -= amount;
        *self.balances.entry(to.to_owned()).or_default() += amount;
        self.log.push(Transfer { tick, from: from.to_owned(), to: to.to_owned(), amount });
        Ok(())
    }

    pub fn log(&self) -> &[Transfer] {
        &self.log
    }

    pub fn total(&self) -> u128 {
        self.balances.values().map(|&v| u128::from(v)).sum()
    }

    /// Sum of balances equals everything ever minted.
    pub fn conserved(&self) -> bool {
        self.total() == self.minted
    }
}

/// Random split of `amount` into `k ∈ [3, 8]` positive chunks (fewer when
/// `amount < k`). Cut points are distinct and uniform over `1..amount`.
pub fn mixer_chunk(amount: u64, seed: &[u8]) -> Vec<u64> {
    if amount == 0 {
        return Vec::new();
    }
    let mut rng = DetRng::new("mixer-chunk", seed);
    let k = rng.range_inclusive(3, 8).min(amount);
    let mut cuts = std::collections::BTreeSet::new();
    while (cuts.len() as u64) < k - 1 {
        cuts.insert(1 + rng.below(amount - 1));
    }
    let mut out = Vec::with_capacity(k as usize);
    let mut last = 0;
    for c in cuts.into_iter().chain([amount]) {
        out.push(c - last);
        last = c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfers_conserve_and_refuse_overdraft() {
        let mut l = Ledger::default();
        l.mint("a", 10);
        l.transfer(1, "a", "b", 4).unwrap();
        assert_eq!((l.balance("a"), l.balance("b")), (6, 4));
        assert!(matches!(l.transfer(2, "b", "a", 5), Err(LedgerError::Insufficient { .. })));
        assert_eq!(l.transfer(2, "b", "a", 0), Err(LedgerError::ZeroAmount));
        assert!(l.conserved());
        assert_eq!(l.log().len(), 1);
    }

    #[test]
    fn chunk_edge_cases() {
        assert_eq!(mixer_chunk(1, b"s"), vec![1]);
        assert_eq!(mixer_chunk(2, b"s"), vec![1, 1]);
        assert!(mixer_chunk(0, b"s").is_empty());
        let c = mixer_chunk(1_000, b"s");
        assert!((3..=8).contains(&c.len()));
        assert_eq!(c.iter().sum::<u64>(), 1_000);
        assert_eq!(c, mixer_chunk(1_000, b"s"));
    }

    #[test]
    fn subaccounts_are_distinct() {
        assert_ne!(subaccount("d1"), subaccount("d2"));
        assert_eq!(subaccount("d1").len(), 4 + 64);
    }
}
