//! Sidelink control information, format 1, in a fixed 32-bit layout.
//!
//! | field                     | bits |
//! |---------------------------|------|
//! | frequency hopping flag    | 1    |
//! | resource indication       | 8    |
//! | time resource pattern     | 7    |
//! | MCS                       | 5    |
//! | retransmission indicator  | 1    |
//! | group destination id      | 9    |
//! | reserved (zero)           | 1    |

use serde::{Deserialize, Serialize};
use sidelink_core::coding::{bits_from_u64, bits_to_u64};

use crate::error::{Error, Result};
use crate::phy::pool::SCI_BITS;

const WIDTHS: [usize; 7] = [1, 8, 7, 5, 1, 9, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SciMessage {
    pub frequency_hopping: bool,
    /// Start subchannel of a single-subchannel allocation.
    pub resource_indication: u32,
    pub time_resource_pattern: u32,
    pub mcs: u32,
    pub retransmission: bool,
    pub group_destination_id: u32,
}

impl SciMessage {
    fn fields(&self) -> [u64; 7] {
        [
            u64::from(self.frequency_hopping),
            u64::from(self.resource_indication),
            u64::from(self.time_resource_pattern),
            u64::from(self.mcs),
            u64::from(self.retransmission),
            u64::from(self.group_destination_id),
            0,
        ]
    }

    pub fn to_bits(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(SCI_BITS);
        for (v, w) in self.fields().into_iter().zip(WIDTHS) {
            if v >> w != 0 {
                return Err(Error::Config(format!("SCI field value {v} exceeds {w} bits")));
            }
            out.extend(bits_from_u64(v, w));
        }
        Ok(out)
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() != SCI_BITS {
            return Err(Error::Config(format!("SCI must be {SCI_BITS} bits")));
        }
        let mut f = [0u64; 7];
        let mut pos = 0;
        for (slot, w) in f.iter_mut().zip(WIDTHS) {
            *slot = bits_to_u64(&bits[pos..pos + w]);
            pos += w;
        }
        Ok(Self {
            frequency_hopping: f[0] == 1,
            resource_indication: f[1] as u32,
            time_resource_pattern: f[2] as u32,
            mcs: f[3] as u32,
            retransmission: f[4] == 1,
            group_destination_id: f[5] as u32,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_32_bits() {
        assert_eq!(WIDTHS.iter().sum::<usize>(), SCI_BITS);
        let sci = SciMessage { group_destination_id: 510, ..Default::default() };
        let bits = sci.to_bits().unwrap();
        assert_eq!(bits.len(), 32);
        assert_eq!(&bits[22..31], &[1, 1, 1, 1, 1, 1, 1, 1, 0]);
        assert!(SciMessage { mcs: 32, ..sci }.to_bits().is_err());
    }

    proptest! {
        #[test]
        fn round_trip(fh: bool, ri in 0u32..256, trp in 0u32..128, mcs in 0u32..32, rt: bool,
                      gid in 0u32..512) {
            let sci = SciMessage {
                frequency_hopping: fh,
                resource_indication: ri,
                time_resource_pattern: trp,
                mcs,
                retransmission: rt,
                group_destination_id: gid,
            };
            prop_assert_eq!(SciMessage::from_bits(&sci.to_bits().unwrap()).unwrap(), sci);
        }
    }
}
