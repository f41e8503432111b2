//! Construction of well-formed Ethernet/IPv4 frames.
//!
//! Shared by the synthetic traffic generator and the test suites. Checksums
//! are left zero; nothing in the pipeline validates them.

/// Parameters for a TCP frame. Defaults give an empty-payload segment from
/// a locally administered MAC.
#[derive(Debug, Clone)]
pub struct TcpSpec {
    pub src_mac: [u8; 6],
    pub dst_mac: [u8; 6],
    pub src_ip: [u8; 4],
    pub dst_ip: [u8; 4],
    pub tos: u8,
    pub ttl: u8,
    pub df: bool,
    pub src_port: u16,
    pub dst_port: u16,
    pub fin: bool,
    pub ack: bool,
    pub window: u16,
    pub payload: Vec<u8>,
    /// Pad the frame with trailing zeros up to this length (0 = no padding).
    pub pad_to: usize,
}

impl Default for TcpSpec {
    fn default() -> Self {
        TcpSpec {
            src_mac: [0x02, 0, 0, 0, 0, 0x01],
            dst_mac: [0x02, 0, 0, 0, 0, 0xFE],
            src_ip: [192, 168, 1, 10],
            dst_ip: [192, 168, 1, 1],
            tos: 0,
            ttl: 64,
            df: true,
            src_port: 40000,
            dst_port: 443,
            fin: false,
            ack: false,
            window: 65535,
            payload: Vec::new(),
            pad_to: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UdpSpec {
    pub src_mac: [u8; 6],
    pub dst_mac: [u8; 6],
    pub src_ip: [u8; 4],
    pub dst_ip: [u8; 4],
    pub tos: u8,
    pub ttl: u8,
    pub df: bool,
    pub src_port: u16,
    pub dst_port: u16,
    pub payload: Vec<u8>,
    pub pad_to: usize,
}

impl Default for UdpSpec {
    fn default() -> Self {
        UdpSpec {
            src_mac: [0x02, 0, 0, 0, 0, 0x01],
            dst_mac: [0x02, 0, 0, 0, 0, 0xFE],
            src_ip: [192, 168, 1, 10],
            dst_ip: [192, 168, 1, 1],
            tos: 0,
            ttl: 64,
            df: false,
            src_port: 40001,
            dst_port: 123,
            payload: Vec::new(),
            pad_to: 60,
        }
    }
}

fn ethernet_header(dst: [u8; 6], src: [u8; 6], ether_type: u16) -> Vec<u8> {
    let mut f = Vec::with_capacity(14);
    f.extend_from_slice(&dst);
    f.extend_from_slice(&src);
    f.extend_from_slice(&ether_type.to_be_bytes());
    f
}

#[allow(clippy::too_many_arguments)]
fn ipv4_header(
    tos: u8,
    total_len: u16,
    df: bool,
    ttl: u8,
    protocol: u8,
    src: [u8; 4],
    dst: [u8; 4],
) -> Vec<u8> {
    let mut h = Vec::with_capacity(20);
    h.push(0x45);
    h.push(tos);
    h.extend_from_slice(&total_len.to_be_bytes());
    h.extend_from_slice(&[0, 0]); // identification
    h.push(if df { 0x40 } else { 0x00 });
    h.push(0);
    h.push(ttl);
    h.push(protocol);
    h.extend_from_slice(&[0, 0]); // checksum
    h.extend_from_slice(&src);
    h.extend_from_slice(&dst);
    h
}

fn pad(mut frame: Vec<u8>, pad_to: usize) -> Vec<u8> {
    if frame.len() < pad_to {
        frame.resize(pad_to, 0);
    }
    frame
}

pub fn tcp_frame(spec: TcpSpec) -> Vec<u8> {
    let total_len = (20 + 20 + spec.payload.len()) as u16;
    let mut frame = ethernet_header(spec.dst_mac, spec.src_mac, 0x0800);
    frame.extend_from_slice(&ipv4_header(
        spec.tos,
        total_len,
        spec.df,
        spec.ttl,
        6,
        spec.src_ip,
        spec.dst_ip,
    ));
    frame.extend_from_slice(&spec.src_port.to_be_bytes());
    frame.extend_from_slice(&spec.dst_port.to_be_bytes());
    frame.extend_from_slice(&[0, 0, 0, 0]); // seq
    frame.extend_from_slice(&[0, 0, 0, 0]); // ack number
    frame.push(0x50); // data offset 5
    frame.push((u8::from(spec.ack) << 4) | u8::from(spec.fin));
    frame.extend_from_slice(&spec.window.to_be_bytes());
    frame.extend_from_slice(&[0, 0, 0, 0]); // checksum + urgent
    frame.extend_from_slice(&spec.payload);
    pad(frame, spec.pad_to)
}

pub fn udp_frame(spec: UdpSpec) -> Vec<u8> {
    let udp_len = (8 + spec.payload.len()) as u16;
    let total_len = 20 + udp_len;
    let mut frame = ethernet_header(spec.dst_mac, spec.src_mac, 0x0800);
    frame.extend_from_slice(&ipv4_header(
        spec.tos,
        total_len,
        spec.df,
        spec.ttl,
        17,
        spec.src_ip,
        spec.dst_ip,
    ));
    frame.extend_from_slice(&spec.src_port.to_be_bytes());
    frame.extend_from_slice(&spec.dst_port.to_be_bytes());
    frame.extend_from_slice(&udp_len.to_be_bytes());
    frame.extend_from_slice(&[0, 0]); // checksum
    frame.extend_from_slice(&spec.payload);
    pad(frame, spec.pad_to)
}

/// A DNS query over UDP with the requested question count and RD flag.
pub fn dns_query_frame(src_mac: [u8; 6], dst_port: u16, qdcount: u16, rd: bool) -> Vec<u8> {
    let mut dns = Vec::new();
    dns.extend_from_slice(&[0x12, 0x34]); // id
    dns.extend_from_slice(&if rd { [0x01, 0x00] } else { [0x00, 0x00] });
    dns.extend_from_slice(&qdcount.to_be_bytes());
    dns.extend_from_slice(&[0, 0, 0, 0, 0, 0]); // an/ns/ar counts
                                                // One question: "iot.local" A IN
    dns.extend_from_slice(&[3]);
    dns.extend_from_slice(b"iot");
    dns.extend_from_slice(&[5]);
    dns.extend_from_slice(b"local");
    dns.push(0);
    dns.extend_from_slice(&[0, 1, 0, 1]);
    udp_frame(UdpSpec {
        src_mac,
        src_port: 50000,
        dst_port,
        payload: dns,
        pad_to: 0,
        ..UdpSpec::default()
    })
}

/// A minimal DHCP message carrying the given option codes (each with a
/// one-byte zero value) plus the end option.
pub fn dhcp_frame(src_mac: [u8; 6], option_codes: &[u8]) -> Vec<u8> {
    let mut b = vec![0u8; 236];
    b[0] = 1; // BOOTREQUEST
    b[1] = 1; // htype Ethernet
    b[2] = 6; // hlen
    b[10] = 0x80; // broadcast flag
    b[28..34].copy_from_slice(&src_mac);
    b.extend_from_slice(&[0x63, 0x82, 0x53, 0x63]);
    for &code in option_codes {
        b.extend_from_slice(&[code, 1, 0]);
    }
    b.push(255);
    udp_frame(UdpSpec {
        src_mac,
        src_ip: [0, 0, 0, 0],
        dst_ip: [255, 255, 255, 255],
        dst_mac: [0xFF; 6],
        src_port: 68,
        dst_port: 67,
        ttl: 128,
        payload: b,
        pad_to: 0,
        ..UdpSpec::default()
    })
}

/// An EAPOL (802.1X) frame.
pub fn eapol_frame(src_mac: [u8; 6], version: u8, packet_type: u8) -> Vec<u8> {
    let mut frame = ethernet_header([0x01, 0x80, 0xC2, 0x00, 0x00, 0x03], src_mac, 0x888E);
    frame.extend_from_slice(&[version, packet_type, 0, 0]);
    pad(frame, 60)
}

/// An 802.3 frame with an LLC header carrying the given control byte.
pub fn llc_frame(src_mac: [u8; 6], ctrl: u8) -> Vec<u8> {
    let mut frame = ethernet_header([0xFF; 6], src_mac, 8); // length = 8
    frame.extend_from_slice(&[0x42, 0x42, ctrl]);
    frame.extend_from_slice(&[0u8; 5]);
    pad(frame, 60)
}

/// An ARP request frame (no IP stack above Ethernet).
pub fn arp_frame(src_mac: [u8; 6]) -> Vec<u8> {
    let mut frame = ethernet_header([0xFF; 6], src_mac, 0x0806);
    frame.extend_from_slice(&[0, 1, 8, 0, 6, 4, 0, 1]);
    frame.extend_from_slice(&src_mac);
    frame.extend_from_slice(&[10, 0, 0, 2]);
    frame.extend_from_slice(&[0; 6]);
    frame.extend_from_slice(&[10, 0, 0, 1]);
    pad(frame, 60)
}

/// A minimal ICMP echo-request frame.
pub fn icmp_frame(src_mac: [u8; 6], code: u8) -> Vec<u8> {
    let mut frame = ethernet_header([0x02, 0, 0, 0, 0, 0xFE], src_mac, 0x0800);
    frame.extend_from_slice(&ipv4_header(
        0,
        20 + 8,
        false,
        64,
        1,
        [192, 168, 1, 20],
        [192, 168, 1, 1],
    ));
    frame.extend_from_slice(&[8, code, 0, 0, 0, 1, 0, 1]);
    pad(frame, 60)
}

/// A bare 802.15.4 data frame (used for non-IP device traffic).
pub fn ieee802154_frame(seq: u8, payload_len: usize) -> Vec<u8> {
    let mut frame = vec![0x41, 0x88, seq, 0x34, 0x12, 0xFF, 0xFF, 0x00, 0x00];
    frame.extend(std::iter::repeat_n(0xA5u8, payload_len));
    frame
}
