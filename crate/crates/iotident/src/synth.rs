//! Synthetic capture generation for tests and demos.
//!
//! Produces a small lab of fake IP devices, each with a stable traffic
//! personality (TTL, favourite ports, TCP window, payload alphabet), plus
//! the label map and session manifest needed to drive the whole pipeline
//! without real captures. A slice of each device's traffic is
//! indistinguishable empty TCP ACKs, which is exactly the per-packet noise
//! the aggregation step exists to absorb.

use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::dataset::{ManifestEntry, SessionState, TrainTest};
use crate::frames::{self, TcpSpec, UdpSpec};
use crate::mac::MacAddr;
use crate::mix_seed;
use crate::pcap::{ByteOrder, LinkType, PcapError, PcapWriter, RawRecord, Timestamp};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Pcap(#[from] PcapError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One synthetic device and its traffic personality.
#[derive(Debug, Clone)]
pub struct SynthDevice {
    pub mac: MacAddr,
    pub label: String,
    ttl: u8,
    port: u16,
    window: u16,
    payload_len: usize,
    alphabet: u8,
}

const KINDS: [&str; 5] = ["camera", "plug", "speaker", "sensor", "hub"];
const PORTS: [u16; 8] = [443, 8883, 80, 5683, 1883, 8080, 9443, 10001];
const TTLS: [u8; 4] = [64, 64, 128, 255];

/// Deterministic device roster: `camera-01`, `plug-02`, ...
pub fn device_roster(devices: usize) -> Vec<SynthDevice> {
    (0..devices)
        .map(|i| SynthDevice {
            mac: MacAddr([0x02, 0x00, 0x00, 0x00, 0x00, (i + 1) as u8]),
            label: format!("{}-{:02}", KINDS[i % KINDS.len()], i + 1),
            ttl: TTLS[i % TTLS.len()],
            port: PORTS[i % PORTS.len()],
            window: 8192 + 1024 * (i as u16 % 32),
            payload_len: 16 + (i * 7) % 48,
            alphabet: 1 + (i % 5) as u8,
        })
        .collect()
}

/// The infrastructure MAC that appears in captures but must be ignored.
pub fn hub_mac() -> MacAddr {
    MacAddr([0x02, 0xFF, 0, 0, 0, 0xAA])
}

/// A MAC that is neither labeled nor ignored (drop-report fodder).
pub fn stray_mac() -> MacAddr {
    MacAddr([0x02, 0xFF, 0, 0, 0, 0xBB])
}

/// Fraction of device packets emitted as featureless empty ACKs.
const NOISE_SHARE: f64 = 0.25;

fn device_packet(dev: &SynthDevice, rng: &mut StdRng, step: usize) -> Vec<u8> {
    let roll: f64 = rng.random();
    if roll < NOISE_SHARE {
        // Empty handshake ACK: identical across all devices.
        return frames::tcp_frame(TcpSpec {
            src_mac: dev.mac.octets(),
            ttl: 64,
            src_port: 50000,
            dst_port: 443,
            ack: true,
            window: 65535,
            payload: Vec::new(),
            ..TcpSpec::default()
        });
    }
    match step % 10 {
        7 => frames::dns_query_frame(dev.mac.octets(), 53, 1, true),
        8 => frames::udp_frame(UdpSpec {
            src_mac: dev.mac.octets(),
            ttl: dev.ttl,
            src_port: 40000 + dev.port % 1000,
            dst_port: 123,
            payload: vec![0x1B; 48],
            ..UdpSpec::default()
        }),
        9 if step % 50 == 9 => frames::dhcp_frame(dev.mac.octets(), &[53, 55, 61, 12]),
        _ => {
            let mut payload = vec![0u8; dev.payload_len];
            for byte in payload.iter_mut() {
                *byte = rng.random_range(0..=dev.alphabet.max(1));
            }
            frames::tcp_frame(TcpSpec {
                src_mac: dev.mac.octets(),
                ttl: dev.ttl,
                src_port: rng.random_range(49152..=65535),
                dst_port: dev.port,
                ack: true,
                window: dev.window,
                payload,
                ..TcpSpec::default()
            })
        }
    }
}

/// Generate one session's records, round-robin across the roster.
pub fn generate_session_records(
    roster: &[SynthDevice],
    packets_per_device: usize,
    session_seed: u64,
) -> Vec<RawRecord> {
    let mut rng = StdRng::seed_from_u64(session_seed);
    let mut records = Vec::with_capacity(roster.len() * packets_per_device + 4);
    let mut now = Timestamp::new(1_637_000_000, 0);
    for step in 0..packets_per_device {
        for dev in roster {
            let data = device_packet(dev, &mut rng, step);
            now = Timestamp::new(
                now.secs + u64::from(rng.random_range(0..2u32)),
                rng.random_range(0..1_000_000) * 1_000,
            );
            records.push(RawRecord {
                timestamp: now,
                orig_len: data.len() as u32,
                data,
            });
        }
    }
    // Background chatter from unlabeled infrastructure.
    for (mac, port) in [(hub_mac(), 1900u16), (stray_mac(), 5353u16)] {
        records.push(RawRecord {
            timestamp: now,
            orig_len: 60,
            data: frames::udp_frame(UdpSpec {
                src_mac: mac.octets(),
                dst_port: port,
                payload: vec![0x20; 16],
                ..UdpSpec::default()
            }),
        });
    }
    records
}

pub fn write_session_pcap(path: impl AsRef<Path>, records: &[RawRecord]) -> Result<(), SynthError> {
    let mut writer = PcapWriter::create(path, LinkType::Ethernet, ByteOrder::Little, false)?;
    for r in records {
        writer.write_record(r.timestamp, r.orig_len, &r.data)?;
    }
    writer.finish()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub devices: usize,
    pub packets_per_device: usize,
    /// Sessions per state; each state's sessions alternate train/test.
    pub sessions_per_state: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            devices: 5,
            packets_per_device: 200,
            sessions_per_state: 2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub roster: Vec<SynthDevice>,
    pub manifest: Vec<ManifestEntry>,
}

/// Generate a full corpus under `dir`: one pcap per session plus
/// `labels.csv` and `manifest.csv`.
pub fn generate_corpus(
    dir: impl AsRef<Path>,
    cfg: &SynthConfig,
) -> Result<SynthCorpus, SynthError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let roster = device_roster(cfg.devices);

    let mut labels = String::from("mac,label\n");
    for dev in &roster {
        labels.push_str(&format!("{},{}\n", dev.mac, dev.label));
    }
    labels.push_str(&format!("{},ignore\n", hub_mac()));
    std::fs::write(dir.join("labels.csv"), labels)?;

    let mut manifest_csv = String::from("session_ref,state,date,condition,path\n");
    let mut manifest = Vec::new();
    let mut session_index = 0u64;
    for state in [SessionState::Active, SessionState::Idle] {
        for s in 0..cfg.sessions_per_state {
            let day = s + 2;
            let session_ref = format!("{}2111{:02}", state.prefix(), day);
            let date = format!("2021-11-{day:02}");
            let role = if s % 2 == 0 {
                TrainTest::Train
            } else {
                TrainTest::Test
            };
            let file = format!("{session_ref}.pcap");
            let records = generate_session_records(
                &roster,
                cfg.packets_per_device,
                mix_seed(cfg.seed, session_index),
            );
            write_session_pcap(dir.join(&file), &records)?;
            manifest_csv.push_str(&format!(
                "{session_ref},{state},{date},{},{file}\n",
                match role {
                    TrainTest::Train => "train",
                    TrainTest::Test => "test",
                }
            ));
            manifest.push(ManifestEntry {
                session_ref,
                state,
                date,
                role,
                path: file.into(),
            });
            session_index += 1;
        }
    }
    std::fs::write(dir.join("manifest.csv"), manifest_csv)?;
    Ok(SynthCorpus { roster, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{label_fingerprints, LabelMap};
    use crate::decode::decode_record;
    use crate::features::extract_fingerprint;
    use crate::pcap::open_capture;

    #[test]
    fn corpus_is_deterministic_and_extractable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            devices: 3,
            packets_per_device: 30,
            sessions_per_state: 1,
            seed: 11,
        };
        let corpus = generate_corpus(dir.path().join("one"), &cfg).unwrap();
        generate_corpus(dir.path().join("two"), &cfg).unwrap();
        assert_eq!(corpus.manifest.len(), 2);

        for entry in &corpus.manifest {
            let a = std::fs::read(dir.path().join("one").join(&entry.path)).unwrap();
            let b = std::fs::read(dir.path().join("two").join(&entry.path)).unwrap();
            assert_eq!(a, b, "same seed must give identical captures");
        }

        let map = LabelMap::from_csv_path(dir.path().join("one/labels.csv")).unwrap();
        let entry = &corpus.manifest[0];
        let cap = open_capture(dir.path().join("one").join(&entry.path)).unwrap();
        assert_eq!(cap.packet_count, 3 * 30 + 2);
        let fps: Vec<_> = cap
            .records()
            .unwrap()
            .map(|r| {
                let rec = r.unwrap();
                extract_fingerprint(&decode_record(&rec, cap.link_type), &entry.session_ref)
                    .unwrap()
            })
            .collect();
        let (labeled, report) = label_fingerprints(fps, &map);
        assert_eq!(labeled.len(), 90);
        assert_eq!(report.ignored, 1);
        assert_eq!(report.unknown, 1);
    }
}
