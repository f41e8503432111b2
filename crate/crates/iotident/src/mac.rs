//! Hardware (MAC) addresses as they appear in captured frames.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A 6-byte hardware address.
///
/// Ordering and hashing follow the raw octets, so `MacAddr` can key sorted
/// maps and break ties deterministically ("lexicographically smallest MAC").
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacAddr(pub [u8; 6]);

impl MacAddr {
    /// The all-zero address shared by non-IP (802.15.4) frames.
    pub const ZERO: MacAddr = MacAddr([0; 6]);

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 6]
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid MAC address `{0}`")]
pub struct MacParseError(pub String);

impl FromStr for MacAddr {
    type Err = MacParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut octets = [0u8; 6];
        let mut parts = s.split([':', '-']);
        for slot in octets.iter_mut() {
            let part = parts.next().ok_or_else(|| MacParseError(s.to_string()))?;
            *slot = u8::from_str_radix(part, 16).map_err(|_| MacParseError(s.to_string()))?;
        }
        if parts.next().is_some() {
            return Err(MacParseError(s.to_string()));
        }
        Ok(MacAddr(octets))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let mac: MacAddr = "a0:b1:c2:d3:e4:f5".parse().unwrap();
        assert_eq!(mac.octets(), [0xa0, 0xb1, 0xc2, 0xd3, 0xe4, 0xf5]);
        assert_eq!(mac.to_string(), "a0:b1:c2:d3:e4:f5");
        assert_eq!("A0-B1-C2-D3-E4-F5".parse::<MacAddr>().unwrap(), mac);
    }

    #[test]
    fn rejects_malformed() {
        assert!("a0:b1:c2:d3:e4".parse::<MacAddr>().is_err());
        assert!("a0:b1:c2:d3:e4:f5:00".parse::<MacAddr>().is_err());
        assert!("zz:b1:c2:d3:e4:f5".parse::<MacAddr>().is_err());
    }

    #[test]
    fn ordering_is_bytewise() {
        let a: MacAddr = "00:00:00:00:00:01".parse().unwrap();
        let b: MacAddr = "00:00:00:00:00:02".parse().unwrap();
        assert!(a < b);
        assert!(MacAddr::ZERO < a);
        assert!(MacAddr::ZERO.is_zero());
    }
}
