//! Classic (libpcap) capture file reading and writing.
//!
//! Both byte orders and both timestamp precisions (microsecond and
//! nanosecond magic) are supported. pcapng is not; captures in that format
//! must be converted first.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

const MAGIC_USEC: u32 = 0xA1B2_C3D4;
const MAGIC_NSEC: u32 = 0xA1B2_3C4D;

/// Upper bound on a single record's captured length; anything larger is
/// treated as file corruption rather than a genuine jumbo record.
const MAX_RECORD_LEN: u32 = 64 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("{0}: not a pcap file (unrecognized magic)")]
    NotPcap(PathBuf),
    #[error("{path}: truncated at record {record}")]
    Truncated { path: PathBuf, record: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Big,
    Little,
}

/// Link-layer framing of the capture.
///
/// Everything that is not Ethernet (1) or IEEE 802.15.4 (195/230) is mapped
/// to `Raw`; raw frames are probed for an IPv4 header but carry no source
/// address and therefore produce no fingerprints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkType {
    Ethernet,
    Ieee802154,
    Raw,
}

impl LinkType {
    pub fn from_raw(value: u32) -> LinkType {
        match value {
            1 => LinkType::Ethernet,
            195 | 230 => LinkType::Ieee802154,
            _ => LinkType::Raw,
        }
    }

    pub fn to_raw(self) -> u32 {
        match self {
            LinkType::Ethernet => 1,
            LinkType::Ieee802154 => 195,
            LinkType::Raw => 101,
        }
    }
}

/// Capture timestamp: seconds plus nanoseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Timestamp {
    pub secs: u64,
    pub nanos: u32,
}

impl Timestamp {
    pub fn new(secs: u64, nanos: u32) -> Timestamp {
        Timestamp { secs, nanos }
    }

    pub fn as_f64(&self) -> f64 {
        self.secs as f64 + self.nanos as f64 * 1e-9
    }
}

/// One record as stored in the file: timestamp, original wire length and
/// the captured bytes (which may be shorter than `orig_len` under snaplen).
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub timestamp: Timestamp,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

/// An opened classic pcap file.
///
/// `packet_count` is established by a structural scan at open time, so a
/// truncated record chain is reported before any decoding starts.
#[derive(Debug, Clone)]
pub struct CaptureFile {
    pub path: PathBuf,
    pub link_type: LinkType,
    pub byte_order: ByteOrder,
    pub nanosecond_timestamps: bool,
    pub snaplen: u32,
    pub packet_count: u64,
}

struct Header {
    byte_order: ByteOrder,
    nanosecond: bool,
    snaplen: u32,
    link_type: LinkType,
}

fn read_u32(buf: &[u8], order: ByteOrder) -> u32 {
    let b: [u8; 4] = buf[..4].try_into().unwrap();
    match order {
        ByteOrder::Big => u32::from_be_bytes(b),
        ByteOrder::Little => u32::from_le_bytes(b),
    }
}

fn parse_header(path: &Path, raw: &[u8; 24]) -> Result<Header, PcapError> {
    let magic_be = u32::from_be_bytes(raw[..4].try_into().unwrap());
    let magic_le = u32::from_le_bytes(raw[..4].try_into().unwrap());
    let (byte_order, nanosecond) = if magic_be == MAGIC_USEC {
        (ByteOrder::Big, false)
    } else if magic_le == MAGIC_USEC {
        (ByteOrder::Little, false)
    } else if magic_be == MAGIC_NSEC {
        (ByteOrder::Big, true)
    } else if magic_le == MAGIC_NSEC {
        (ByteOrder::Little, true)
    } else {
        return Err(PcapError::NotPcap(path.to_path_buf()));
    };
    let snaplen = read_u32(&raw[16..20], byte_order);
    let link_type = LinkType::from_raw(read_u32(&raw[20..24], byte_order));
    Ok(Header {
        byte_order,
        nanosecond,
        snaplen,
        link_type,
    })
}

/// Open a capture, validate its header and count its records.
pub fn open_capture(path: impl AsRef<Path>) -> Result<CaptureFile, PcapError> {
    let path = path.as_ref();
    let mut file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut head = [0u8; 24];
    file.read_exact(&mut head)
        .map_err(|_| PcapError::NotPcap(path.to_path_buf()))?;
    let header = parse_header(path, &head)?;

    // Structural scan: hop record headers without loading payloads.
    let mut count: u64 = 0;
    let mut pos: u64 = 24;
    let mut rec_head = [0u8; 16];
    loop {
        if pos == file_len {
            break;
        }
        if file_len - pos < 16 {
            return Err(PcapError::Truncated {
                path: path.to_path_buf(),
                record: count,
            });
        }
        file.read_exact(&mut rec_head)?;
        let incl_len = read_u32(&rec_head[8..12], header.byte_order);
        if incl_len > MAX_RECORD_LEN || u64::from(incl_len) > file_len - pos - 16 {
            return Err(PcapError::Truncated {
                path: path.to_path_buf(),
                record: count,
            });
        }
        pos += 16 + u64::from(incl_len);
        file.seek(SeekFrom::Start(pos))?;
        count += 1;
    }

    Ok(CaptureFile {
        path: path.to_path_buf(),
        link_type: header.link_type,
        byte_order: header.byte_order,
        nanosecond_timestamps: header.nanosecond,
        snaplen: header.snaplen,
        packet_count: count,
    })
}

impl CaptureFile {
    /// Stream the records in file order. Each call opens a fresh reader.
    pub fn records(&self) -> Result<RecordIter, PcapError> {
        let mut reader = BufReader::with_capacity(1 << 16, File::open(&self.path)?);
        reader.seek(SeekFrom::Start(24))?;
        Ok(RecordIter {
            path: self.path.clone(),
            reader,
            byte_order: self.byte_order,
            nanosecond: self.nanosecond_timestamps,
            index: 0,
            done: false,
        })
    }
}

pub struct RecordIter {
    path: PathBuf,
    reader: BufReader<File>,
    byte_order: ByteOrder,
    nanosecond: bool,
    index: u64,
    done: bool,
}

impl Iterator for RecordIter {
    type Item = Result<RawRecord, PcapError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut head = [0u8; 16];
        match self.reader.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                self.done = true;
                return None;
            }
            Err(e) => {
                self.done = true;
                return Some(Err(e.into()));
            }
        }
        let ts_sec = read_u32(&head[0..4], self.byte_order);
        let ts_sub = read_u32(&head[4..8], self.byte_order);
        let incl_len = read_u32(&head[8..12], self.byte_order);
        let orig_len = read_u32(&head[12..16], self.byte_order);
        if incl_len > MAX_RECORD_LEN {
            self.done = true;
            return Some(Err(PcapError::Truncated {
                path: self.path.clone(),
                record: self.index,
            }));
        }
        let mut data = vec![0u8; incl_len as usize];
        if let Err(e) = self.reader.read_exact(&mut data) {
            self.done = true;
            return Some(Err(if e.kind() == io::ErrorKind::UnexpectedEof {
                PcapError::Truncated {
                    path: self.path.clone(),
                    record: self.index,
                }
            } else {
                e.into()
            }));
        }
        self.index += 1;
        let nanos = if self.nanosecond {
            ts_sub
        } else {
            ts_sub.saturating_mul(1_000)
        };
        Some(Ok(RawRecord {
            timestamp: Timestamp::new(u64::from(ts_sec), nanos),
            orig_len,
            data,
        }))
    }
}

/// Classic pcap writer; the counterpart of [`open_capture`] used by the
/// synthetic generator and the test suites.
pub struct PcapWriter<W: Write> {
    inner: W,
    byte_order: ByteOrder,
    nanosecond: bool,
}

impl PcapWriter<BufWriter<File>> {
    pub fn create(
        path: impl AsRef<Path>,
        link_type: LinkType,
        byte_order: ByteOrder,
        nanosecond: bool,
    ) -> Result<Self, PcapError> {
        let file = BufWriter::new(File::create(path)?);
        PcapWriter::new(file, link_type, byte_order, nanosecond)
    }
}

impl<W: Write> PcapWriter<W> {
    pub fn new(
        mut inner: W,
        link_type: LinkType,
        byte_order: ByteOrder,
        nanosecond: bool,
    ) -> Result<Self, PcapError> {
        let magic = if nanosecond { MAGIC_NSEC } else { MAGIC_USEC };
        let mut head = Vec::with_capacity(24);
        put_u32(&mut head, magic, byte_order);
        put_u16(&mut head, 2, byte_order);
        put_u16(&mut head, 4, byte_order);
        put_u32(&mut head, 0, byte_order); // thiszone
        put_u32(&mut head, 0, byte_order); // sigfigs
        put_u32(&mut head, 65535, byte_order); // snaplen
        put_u32(&mut head, link_type.to_raw(), byte_order);
        inner.write_all(&head)?;
        Ok(PcapWriter {
            inner,
            byte_order,
            nanosecond,
        })
    }

    pub fn write_record(
        &mut self,
        timestamp: Timestamp,
        orig_len: u32,
        data: &[u8],
    ) -> Result<(), PcapError> {
        let subsec = if self.nanosecond {
            timestamp.nanos
        } else {
            timestamp.nanos / 1_000
        };
        let mut head = Vec::with_capacity(16);
        put_u32(&mut head, timestamp.secs as u32, self.byte_order);
        put_u32(&mut head, subsec, self.byte_order);
        put_u32(&mut head, data.len() as u32, self.byte_order);
        put_u32(&mut head, orig_len, self.byte_order);
        self.inner.write_all(&head)?;
        self.inner.write_all(data)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, PcapError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

fn put_u32(buf: &mut Vec<u8>, value: u32, order: ByteOrder) {
    match order {
        ByteOrder::Big => buf.extend_from_slice(&value.to_be_bytes()),
        ByteOrder::Little => buf.extend_from_slice(&value.to_le_bytes()),
    }
}

fn put_u16(buf: &mut Vec<u8>, value: u16, order: ByteOrder) {
    match order {
        ByteOrder::Big => buf.extend_from_slice(&value.to_be_bytes()),
        ByteOrder::Little => buf.extend_from_slice(&value.to_le_bytes()),
    }
}
