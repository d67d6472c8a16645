//! Swap amounts, fees and timelocks shared by both protocols.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapParams {
    /// Bitcoin being swapped, in satoshi.
    pub amt_btc: u64,
    /// Monero being swapped, in piconero.
    pub amt_xmr: u64,
    /// Fixed Bitcoin fee paid by every Bitcoin transaction.
    pub fee: u64,
    /// Fixed Monero fee paid by every Monero transaction.
    pub xmr_fee: u64,
    pub t1: u32,
    pub t2: u32,
    pub btc_conf_target: u64,
    pub xmr_conf_target: u64,
    /// Alice redeems only while `confirmations(lock) + margin <= t1`.
    pub redeem_safety_margin: u64,
}

impl Default for SwapParams {
    fn default() -> Self {
        Self {
            amt_btc: 100_000,
            amt_xmr: 5_000_000,
            fee: 1_000,
            xmr_fee: 10_000,
            t1: 10,
            t2: 10,
            btc_conf_target: 1,
            xmr_conf_target: 1,
            redeem_safety_margin: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamsError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("fee {fee} leaves nothing of {amount} after two spends")]
    FeeTooHigh { fee: u64, amount: u64 },
}

impl SwapParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let positive = [
            ("amt_btc", self.amt_btc),
            ("amt_xmr", self.amt_xmr),
            ("fee", self.fee),
            ("xmr_fee", self.xmr_fee),
            ("t1", self.t1 as u64),
            ("t2", self.t2 as u64),
            ("btc_conf_target", self.btc_conf_target),
            ("xmr_conf_target", self.xmr_conf_target),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ParamsError::NotPositive(name));
        }
        if self.fee.saturating_mul(2) >= self.amt_btc {
            return Err(ParamsError::FeeTooHigh {
                fee: self.fee,
                amount: self.amt_btc,
            });
        }
        if self.xmr_fee.saturating_mul(2) >= self.amt_xmr {
            return Err(ParamsError::FeeTooHigh {
                fee: self.xmr_fee,
                amount: self.amt_xmr,
            });
        }
        Ok(())
    }

    /// Whether a redeem may still be broadcast with the lock at `lock_conf`
    /// confirmations.
    pub fn redeem_allowed(&self, lock_conf: u64) -> bool {
        lock_conf + self.redeem_safety_margin <= self.t1 as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SwapParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_zero_and_oversized_fees() {
        let p = SwapParams {
            t1: 0,
            ..SwapParams::default()
        };
        assert_eq!(p.validate(), Err(ParamsError::NotPositive("t1")));
        let p = SwapParams {
            fee: 50_000,
            ..SwapParams::default()
        };
        assert!(matches!(p.validate(), Err(ParamsError::FeeTooHigh { .. })));
    }

    #[test]
    fn safety_margin_boundary() {
        let p = SwapParams::default();
        assert!(p.redeem_allowed(8));
        assert!(!p.redeem_allowed(9));
        let off = SwapParams {
            redeem_safety_margin: 0,
            ..p
        };
        assert!(off.redeem_allowed(10));
    }
}
