//! Factor counts `r(k)`, `2·r^(ℓ−1)`, `s` and `t`, the witness chain for
//! `α(β∘γ∘β) ⊆ αβ ∘_r αγ`, and quantified checks of the
//! resulting identities.

mod checks;
mod level;

use thiserror::Error;

pub use checks::{
    check_bip, check_cor, check_k_identity, check_level_identity, check_nte, BoundsContext, BoundsVerdict,
    Hypothesis, NteFamily, BIP_MAX_ELL,
};
pub use level::{build_level_chain, level_instances, ChainCertificate, LevelInstance, LinkLabel};

use crate::identity::CheckError;
use crate::maltsev::MaltsevError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("{name} = {value} is out of range (need {need})")]
    OutOfRange {
        name: &'static str,
        value: u64,
        need: &'static str,
    },
    #[error("value overflows 64 bits")]
    Overflow,
    #[error("precondition fails: {0}")]
    Precondition(String),
    #[error("link {index} ({stage}) fails: ({from}, {to}) not in {label}")]
    LinkFails {
        index: usize,
        stage: String,
        from: usize,
        to: usize,
        label: LinkLabel,
    },
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Maltsev(#[from] MaltsevError),
}

fn need(name: &'static str, value: u64, ok: bool, need: &'static str) -> Result<(), BoundsError> {
    if ok {
        Ok(())
    } else {
        Err(BoundsError::OutOfRange { name, value, need })
    }
}

/// Factors `r` of `αβ ∘_r αγ` obtained from `k` factors in `αβ ∘_k γ`:
/// `(k²−4k+9)/2` for odd `k`, `(k²−3k+4)/2` for even `k`.
pub fn r_of_k(k: u64) -> Result<u64, BoundsError> {
    need("k", k, k >= 3, "k >= 3")?;
    let sq = k.checked_mul(k).ok_or(BoundsError::Overflow)?;
    let num = if k % 2 == 1 { sq + 9 - 4 * k } else { sq + 4 - 3 * k };
    assert_eq!(num % 2, 0, "numerator of r({k}) is odd");
    Ok(num / 2)
}

/// `2·r^(ℓ−1)` with `r = ⌈k/2⌉`.
pub fn bip_exponent(k: u64, ell: u64) -> Result<u64, BoundsError> {
    need("k", k, k >= 2, "k >= 2")?;
    need("ell", ell, ell >= 2, "ell >= 2")?;
    let r = k.div_ceil(2);
    let exp = u32::try_from(ell - 1).map_err(|_| BoundsError::Overflow)?;
    r.checked_pow(exp)
        .and_then(|v| v.checked_mul(2))
        .ok_or(BoundsError::Overflow)
}

/// `s = (p−1)²(ℓ−1)+1`.
pub fn s_of(p: u64, ell: u64) -> Result<u64, BoundsError> {
    need("p", p, p >= 1, "p >= 1")?;
    need("ell", ell, ell >= 2, "ell >= 2")?;
    (p - 1)
        .checked_mul(p - 1)
        .and_then(|v| v.checked_mul(ell - 1))
        .and_then(|v| v.checked_add(1))
        .ok_or(BoundsError::Overflow)
}

/// `t = (p−1)²+1`.
pub fn t_of(p: u64) -> Result<u64, BoundsError> {
    need("p", p, p >= 1, "p >= 1")?;
    let t = (p - 1)
        .checked_mul(p - 1)
        .and_then(|v| v.checked_add(1))
        .ok_or(BoundsError::Overflow)?;
    debug_assert_eq!(Ok(t), s_of(p, 2));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_values() {
        let got: Vec<u64> = (3..=8).map(|k| r_of_k(k).unwrap()).collect();
        assert_eq!(got, [3, 4, 7, 11, 15, 22]);
        for k in 3..=100 {
            r_of_k(k).unwrap();
        }
        assert!(r_of_k(2).is_err());
    }

    #[test]
    fn bip_and_cor_values() {
        assert_eq!(bip_exponent(4, 2).unwrap(), 4);
        assert_eq!(bip_exponent(4, 3).unwrap(), 8);
        assert_eq!(bip_exponent(6, 3).unwrap(), 18);
        assert_eq!(bip_exponent(3, 3).unwrap(), 8);
        assert!(bip_exponent(1, 2).is_err());
        assert_eq!(s_of(2, 2).unwrap(), 2);
        assert_eq!(s_of(3, 3).unwrap(), 9);
        assert_eq!(t_of(2).unwrap(), 2);
        assert_eq!(t_of(1).unwrap(), 1);
        for p in 1..=20 {
            assert_eq!(t_of(p).unwrap(), s_of(p, 2).unwrap());
        }
        assert!(s_of(0, 2).is_err());
        assert!(s_of(2, 1).is_err());
    }
}
