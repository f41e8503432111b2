//! Per-packet IoT device identification.
//!
//! This crate turns raw packet captures into per-packet feature
//! fingerprints, trains a deterministic decision tree over them, and
//! smooths the per-packet predictions with a MAC-majority aggregation
//! step that knows when *not* to trust a MAC address (several devices can
//! hide behind one address once a gateway re-encapsulates their traffic).
//!
//! The pipeline stages, in order:
//!
//! 1. [`pcap`] / [`decode`] — read classic pcap files and dissect each
//!    frame into its protocol layers.
//! 2. [`features`] — encode each packet as a fixed-order vector of 30
//!    numeric features, with `−1` marking absent layers.
//! 3. [`dataset`] — label fingerprints from a MAC map, register capture
//!    sessions, pair sessions with identical device populations, and build
//!    merged train/test datasets.
//! 4. [`tree`] — fit a deterministic CART classifier and predict labels.
//! 5. [`aggregate`] — build the exception list and apply per-MAC majority
//!    voting to the predictions.
//! 6. [`evaluate`] — confusion matrices, per-class precision/recall/F1,
//!    repeat statistics, condition grids and all-pairs session sweeps.
//!
//! ```
//! use iotident::aggregate::{aggregate_labels, build_exception_list, GroupSize};
//! use iotident::mac::MacAddr;
//!
//! let cam: MacAddr = "02:00:00:00:00:01".parse().unwrap();
//! let plug: MacAddr = "02:00:00:00:00:02".parse().unwrap();
//! let preds = vec![
//!     (cam, "camera"), (cam, "camera"), (cam, "plug"),
//!     (plug, "plug"), (plug, "plug"),
//! ];
//! let exceptions = build_exception_list(&preds);
//! assert!(exceptions.is_empty());
//! let finals = aggregate_labels(&preds, &exceptions, GroupSize::Whole);
//! assert_eq!(finals, vec!["camera", "camera", "camera", "plug", "plug"]);
//! ```

pub mod aggregate;
pub mod dataset;
pub mod decode;
pub mod evaluate;
pub mod features;
pub mod frames;
pub mod mac;
pub mod pcap;
pub mod report;
pub mod synth;
pub mod tree;

pub use mac::MacAddr;

/// Derive an independent RNG seed from a base seed and a salt
/// (SplitMix64 finalizer). Used wherever one configured seed must fan out
/// into uncorrelated deterministic streams.
pub(crate) fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
