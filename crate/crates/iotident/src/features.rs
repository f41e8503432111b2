//! Per-packet fingerprint extraction.
//!
//! Every decoded packet maps to a fixed-order vector of 30 numeric
//! features. Features whose protocol layer is absent carry the
//! [`MISSING`] sentinel (−1), chosen so that a threshold-splitting tree can
//! isolate absence on its own branch. Variable-length fields (IP options,
//! BOOTP name/file/vendor areas, DHCP option lists) are folded to a stable
//! 32-bit FNV-1a hash so distinct vendor patterns stay distinguishable
//! across runs and platforms.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::decode::DecodedPacket;
use crate::mac::MacAddr;

/// Number of features in a fingerprint vector.
pub const FEATURE_COUNT: usize = 30;

/// Version of the feature schema; bumped whenever order or encoding changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Sentinel for a feature whose owning protocol layer is absent.
pub const MISSING: f64 = -1.0;

/// Fixed feature order. The CSV interchange format uses these names as its
/// header columns.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "pck_size",
    "Ether_type",
    "LLC_ctrl",
    "EAPOL_version",
    "EAPOL_type",
    "IP_ihl",
    "IP_tos",
    "IP_len",
    "IP_flags",
    "IP_DF",
    "IP_ttl",
    "IP_options",
    "ICMP_code",
    "TCP_dataofs",
    "TCP_FIN",
    "TCP_ACK",
    "TCP_window",
    "UDP_len",
    "DHCP_options",
    "BOOTP_hlen",
    "BOOTP_flags",
    "BOOTP_sname",
    "BOOTP_file",
    "BOOTP_options",
    "DNS_qr",
    "DNS_rd",
    "DNS_qdcount",
    "dport_class",
    "payload_bytes",
    "entropy",
];

/// One packet's fingerprint: the feature vector plus grouping metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub features: [f64; FEATURE_COUNT],
    pub src_mac: MacAddr,
    pub session_ref: String,
    pub true_label: Option<String>,
}

/// IANA-style destination-port class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortClass {
    Absent = 0,
    WellKnown = 1,
    Registered = 2,
    Dynamic = 3,
}

/// Classify a destination port into the three IANA ranges, with a fourth
/// class for packets that have no transport layer.
pub fn classify_dport(dst_port: Option<u16>) -> PortClass {
    match dst_port {
        None => PortClass::Absent,
        Some(p) if p <= 1023 => PortClass::WellKnown,
        Some(p) if p <= 49151 => PortClass::Registered,
        Some(_) => PortClass::Dynamic,
    }
}

/// Shannon entropy of the byte-value distribution, in bits per byte.
///
/// Ranges over [0, 8]; the empty payload is defined as 0.
///
/// ```
/// use iotident::features::payload_entropy;
///
/// assert_eq!(payload_entropy(&[]), 0.0);
/// assert_eq!(payload_entropy(&[0x41; 100]), 0.0);
/// assert!((payload_entropy(&[0x00, 0x01]) - 1.0).abs() < 1e-12);
/// let all: Vec<u8> = (0..=255).collect();
/// assert!((payload_entropy(&all) - 8.0).abs() < 1e-12);
/// ```
pub fn payload_entropy(payload: &[u8]) -> f64 {
    if payload.is_empty() {
        return 0.0;
    }
    let mut freq = [0u64; 256];
    for &b in payload {
        freq[b as usize] += 1;
    }
    let len = payload.len() as f64;
    let mut entropy = 0.0;
    for &count in freq.iter() {
        if count == 0 {
            continue;
        }
        let p = count as f64 / len;
        entropy -= p * p.log2();
    }
    entropy
}

/// 32-bit FNV-1a over a byte sequence.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut hash: u32 = 0x811C_9DC5;
    for &b in bytes {
        hash ^= u32::from(b);
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

/// Encode a variable-length field as a feature value: FNV-1a hash of the
/// bytes, with the empty sequence pinned to 0.
pub fn encode_variable_field(bytes: &[u8]) -> f64 {
    if bytes.is_empty() {
        0.0
    } else {
        f64::from(fnv1a32(bytes))
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("frame has no source address")]
    NoSourceMac,
}

/// Extract the 30-feature fingerprint from a decoded packet.
///
/// Frames without a source address (raw IP captures, malformed Ethernet)
/// do not produce fingerprints; callers count them via the error.
pub fn extract_fingerprint(
    pkt: &DecodedPacket,
    session_ref: &str,
) -> Result<Fingerprint, ExtractError> {
    let src_mac = pkt.src_mac.ok_or(ExtractError::NoSourceMac)?;
    let mut f = [MISSING; FEATURE_COUNT];

    f[0] = f64::from(pkt.wire_length);
    if let Some(eth) = &pkt.ethernet {
        f[1] = f64::from(eth.ether_type);
    }
    if let Some(llc) = &pkt.llc {
        f[2] = f64::from(llc.ctrl);
    }
    if let Some(eapol) = &pkt.eapol {
        f[3] = f64::from(eapol.version);
        f[4] = f64::from(eapol.packet_type);
    }
    if let Some(ip) = &pkt.ipv4 {
        f[5] = f64::from(ip.ihl);
        f[6] = f64::from(ip.tos);
        f[7] = f64::from(ip.total_length);
        f[8] = f64::from(ip.flags_bits);
        f[9] = f64::from(u8::from(ip.df_bit));
        f[10] = f64::from(ip.ttl);
        f[11] = encode_variable_field(&ip.options);
    }
    if let Some(icmp) = &pkt.icmp {
        f[12] = f64::from(icmp.code);
    }
    if let Some(tcp) = &pkt.tcp {
        f[13] = f64::from(tcp.data_offset);
        f[14] = f64::from(u8::from(tcp.flag_fin));
        f[15] = f64::from(u8::from(tcp.flag_ack));
        f[16] = f64::from(tcp.window);
    }
    if let Some(udp) = &pkt.udp {
        f[17] = f64::from(udp.length);
    }
    if let Some(dhcp) = &pkt.dhcp {
        f[18] = encode_variable_field(&dhcp.option_codes);
    }
    if let Some(bootp) = &pkt.bootp {
        f[19] = f64::from(bootp.hlen);
        f[20] = f64::from(bootp.flags);
        f[21] = encode_variable_field(&bootp.sname);
        f[22] = encode_variable_field(&bootp.file);
        f[23] = encode_variable_field(&bootp.options);
    }
    if let Some(dns) = &pkt.dns {
        f[24] = f64::from(dns.qr);
        f[25] = f64::from(dns.rd);
        f[26] = f64::from(dns.qdcount);
    }
    f[27] = classify_dport(pkt.dst_port()) as u8 as f64;
    let payload = pkt.transport_payload();
    f[28] = payload.len() as f64;
    f[29] = payload_entropy(payload);

    Ok(Fingerprint {
        features: f,
        src_mac,
        session_ref: session_ref.to_string(),
        true_label: None,
    })
}

// ---------------------------------------------------------------------------
// CSV interchange format
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn needs_quoting(s: &str) -> bool {
    s.contains(',') || s.contains('"') || s.contains('\n')
}

pub(crate) fn write_csv_field(out: &mut String, s: &str) {
    if needs_quoting(s) {
        out.push('"');
        for c in s.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(s);
    }
}

/// Split one CSV line into fields, honoring double-quote escaping.
pub(crate) fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut in_quotes = false;
    while let Some(c) = chars.next() {
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push(c);
            }
        } else {
            match c {
                '"' => in_quotes = true,
                ',' => fields.push(std::mem::take(&mut field)),
                _ => field.push(c),
            }
        }
    }
    fields.push(field);
    fields
}

/// The CSV header row: the 30 feature names followed by `mac,session,label`.
pub fn csv_header() -> String {
    let mut h = FEATURE_NAMES.join(",");
    h.push_str(",mac,session,label");
    h
}

/// Streaming fingerprint CSV writer; the header goes out on construction,
/// rows one at a time, so extraction runs in constant memory.
pub struct FingerprintCsvWriter<W: Write> {
    inner: W,
    buf: String,
    rows: u64,
}

impl<W: Write> FingerprintCsvWriter<W> {
    pub fn new(mut inner: W) -> Result<Self, CsvError> {
        inner.write_all(csv_header().as_bytes())?;
        inner.write_all(b"\n")?;
        Ok(FingerprintCsvWriter {
            inner,
            buf: String::new(),
            rows: 0,
        })
    }

    pub fn write(&mut self, fp: &Fingerprint) -> Result<(), CsvError> {
        self.buf.clear();
        for value in fp.features.iter() {
            let _ = write!(self.buf, "{value},");
        }
        let _ = write!(self.buf, "{},", fp.src_mac);
        write_csv_field(&mut self.buf, &fp.session_ref);
        self.buf.push(',');
        if let Some(label) = &fp.true_label {
            write_csv_field(&mut self.buf, label);
        }
        self.buf.push('\n');
        self.inner.write_all(self.buf.as_bytes())?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows_written(&self) -> u64 {
        self.rows
    }

    pub fn finish(mut self) -> Result<W, CsvError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Write fingerprints in the interchange CSV format.
pub fn write_fingerprints_csv<W: Write>(
    w: W,
    fingerprints: &[Fingerprint],
) -> Result<(), CsvError> {
    let mut writer = FingerprintCsvWriter::new(w)?;
    for fp in fingerprints {
        writer.write(fp)?;
    }
    writer.finish()?;
    Ok(())
}

pub fn write_fingerprints_csv_path(
    path: impl AsRef<std::path::Path>,
    fingerprints: &[Fingerprint],
) -> Result<(), CsvError> {
    let file = std::fs::File::create(path)?;
    write_fingerprints_csv(io::BufWriter::new(file), fingerprints)
}

/// Read fingerprints from the interchange CSV format.
pub fn read_fingerprints_csv<R: BufRead>(reader: R) -> Result<Vec<Fingerprint>, CsvError> {
    let expected_header = csv_header();
    let mut fingerprints = Vec::new();
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end() == expected_header => {}
        Some((_, Ok(other))) => {
            return Err(CsvError::Malformed {
                line: 1,
                message: format!("unexpected header `{other}`"),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => {
            return Err(CsvError::Malformed {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    for (idx, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields = split_csv_line(&line);
        if fields.len() != FEATURE_COUNT + 3 {
            return Err(CsvError::Malformed {
                line: lineno,
                message: format!(
                    "expected {} fields, got {}",
                    FEATURE_COUNT + 3,
                    fields.len()
                ),
            });
        }
        let mut features = [0.0f64; FEATURE_COUNT];
        for (slot, raw) in features.iter_mut().zip(&fields[..FEATURE_COUNT]) {
            *slot = raw.parse().map_err(|_| CsvError::Malformed {
                line: lineno,
                message: format!("bad numeric value `{raw}`"),
            })?;
        }
        let src_mac = fields[FEATURE_COUNT]
            .parse()
            .map_err(|_| CsvError::Malformed {
                line: lineno,
                message: format!("bad MAC `{}`", fields[FEATURE_COUNT]),
            })?;
        let session_ref = fields[FEATURE_COUNT + 1].clone();
        let label = &fields[FEATURE_COUNT + 2];
        fingerprints.push(Fingerprint {
            features,
            src_mac,
            session_ref,
            true_label: if label.is_empty() {
                None
            } else {
                Some(label.clone())
            },
        });
    }
    Ok(fingerprints)
}

pub fn read_fingerprints_csv_path(
    path: impl AsRef<std::path::Path>,
) -> Result<Vec<Fingerprint>, CsvError> {
    let file = std::fs::File::open(path)?;
    read_fingerprints_csv(io::BufReader::new(file))
}
