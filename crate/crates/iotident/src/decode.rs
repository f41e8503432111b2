//! Protocol-layer dissection of captured frames.
//!
//! Decoding is total: malformed or truncated inner layers are left absent
//! and counted in [`DecodedPacket::warnings`], never fabricated. A layer is
//! populated only when its enclosing layer's demultiplexing field selects
//! it (IPv4 only under ether type 0x0800, TCP only under IP protocol 6,
//! and so on).

use crate::mac::MacAddr;
use crate::pcap::{LinkType, RawRecord, Timestamp};

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_VLAN: u16 = 0x8100;
pub const ETHERTYPE_EAPOL: u16 = 0x888E;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EthernetLayer {
    pub ether_type: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LlcLayer {
    pub ctrl: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EapolLayer {
    pub version: u8,
    pub packet_type: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ipv4Layer {
    pub ihl: u8,
    pub tos: u8,
    pub total_length: u16,
    /// The 3-bit flags field (reserved, DF, MF) as an integer in 0..=7.
    pub flags_bits: u8,
    pub df_bit: bool,
    pub ttl: u8,
    pub protocol: u8,
    pub options: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IcmpLayer {
    pub code: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcpLayer {
    pub src_port: u16,
    pub dst_port: u16,
    pub data_offset: u8,
    pub flag_fin: bool,
    pub flag_ack: bool,
    pub window: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UdpLayer {
    pub src_port: u16,
    pub dst_port: u16,
    pub length: u16,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootpLayer {
    pub hlen: u8,
    pub flags: u16,
    /// Server-name field with the zero padding stripped.
    pub sname: Vec<u8>,
    /// Boot-file field with the zero padding stripped.
    pub file: Vec<u8>,
    /// Everything after the 236-byte fixed header, zero padding stripped.
    pub options: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DhcpLayer {
    /// Option type codes in wire order, pads skipped, terminator included.
    pub option_codes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DnsLayer {
    pub qr: u8,
    pub rd: u8,
    pub qdcount: u16,
}

/// Parsed multi-layer view of one captured frame.
#[derive(Debug, Clone, Default)]
pub struct DecodedPacket {
    pub timestamp: Timestamp,
    pub wire_length: u32,
    pub src_mac: Option<MacAddr>,
    pub dst_mac: Option<MacAddr>,
    pub ethernet: Option<EthernetLayer>,
    pub llc: Option<LlcLayer>,
    pub eapol: Option<EapolLayer>,
    pub ipv4: Option<Ipv4Layer>,
    pub icmp: Option<IcmpLayer>,
    pub tcp: Option<TcpLayer>,
    pub udp: Option<UdpLayer>,
    pub bootp: Option<BootpLayer>,
    pub dhcp: Option<DhcpLayer>,
    pub dns: Option<DnsLayer>,
    /// Number of inner layers that looked selected but were malformed or
    /// cut short and therefore left absent.
    pub warnings: u32,
}

impl DecodedPacket {
    /// Destination port of the transport layer, if any.
    pub fn dst_port(&self) -> Option<u16> {
        self.tcp
            .as_ref()
            .map(|t| t.dst_port)
            .or_else(|| self.udp.as_ref().map(|u| u.dst_port))
    }

    /// Transport payload bytes (TCP or UDP), empty when neither is present.
    pub fn transport_payload(&self) -> &[u8] {
        if let Some(t) = &self.tcp {
            &t.payload
        } else if let Some(u) = &self.udp {
            &u.payload
        } else {
            &[]
        }
    }
}

/// Decode one record into a structured packet view.
pub fn decode_record(record: &RawRecord, link_type: LinkType) -> DecodedPacket {
    decode_packet(&record.data, link_type, record.timestamp, record.orig_len)
}

/// Decode raw frame bytes. `wire_length` is the original (untruncated)
/// length from the capture record.
pub fn decode_packet(
    raw: &[u8],
    link_type: LinkType,
    timestamp: Timestamp,
    wire_length: u32,
) -> DecodedPacket {
    let mut pkt = DecodedPacket {
        timestamp,
        wire_length,
        ..DecodedPacket::default()
    };
    match link_type {
        LinkType::Ethernet => decode_ethernet(raw, &mut pkt),
        LinkType::Ieee802154 => decode_802154(raw, &mut pkt),
        LinkType::Raw => {
            // Raw IP capture: no link header, probe for IPv4 directly.
            if !raw.is_empty() && raw[0] >> 4 == 4 {
                decode_ipv4(raw, &mut pkt);
            }
        }
    }
    pkt
}

fn decode_ethernet(raw: &[u8], pkt: &mut DecodedPacket) {
    if raw.len() < 14 {
        pkt.warnings += 1;
        return;
    }
    pkt.dst_mac = Some(MacAddr(raw[0..6].try_into().unwrap()));
    pkt.src_mac = Some(MacAddr(raw[6..12].try_into().unwrap()));
    let mut ether_type = u16::from_be_bytes([raw[12], raw[13]]);
    let mut offset = 14usize;
    // 802.1Q tags are skipped transparently to reach the inner type.
    while ether_type == ETHERTYPE_VLAN {
        if raw.len() < offset + 4 {
            pkt.warnings += 1;
            return;
        }
        ether_type = u16::from_be_bytes([raw[offset + 2], raw[offset + 3]]);
        offset += 4;
    }
    pkt.ethernet = Some(EthernetLayer { ether_type });
    let payload = &raw[offset..];
    if ether_type < 0x0600 {
        // IEEE 802.3: the type field is a length and an LLC header follows.
        if payload.len() >= 3 {
            pkt.llc = Some(LlcLayer { ctrl: payload[2] });
        } else {
            pkt.warnings += 1;
        }
        return;
    }
    match ether_type {
        ETHERTYPE_IPV4 => decode_ipv4(payload, pkt),
        ETHERTYPE_EAPOL => {
            if payload.len() >= 4 {
                pkt.eapol = Some(EapolLayer {
                    version: payload[0],
                    packet_type: payload[1],
                });
            } else {
                pkt.warnings += 1;
            }
        }
        _ => {}
    }
}

/// IEEE 802.15.4: only the MAC header matters here. All frames carry the
/// fixed all-zero source address, matching how non-IP traffic is grouped
/// downstream; the IP stack layers stay absent.
fn decode_802154(raw: &[u8], pkt: &mut DecodedPacket) {
    if raw.len() < 3 {
        pkt.warnings += 1;
        return;
    }
    pkt.src_mac = Some(MacAddr::ZERO);
}

fn decode_ipv4(p: &[u8], pkt: &mut DecodedPacket) {
    if p.len() < 20 || p[0] >> 4 != 4 {
        pkt.warnings += 1;
        return;
    }
    let ihl = p[0] & 0x0F;
    if ihl < 5 {
        pkt.warnings += 1;
        return;
    }
    let header_len = usize::from(ihl) * 4;
    let total_length = u16::from_be_bytes([p[2], p[3]]);
    let flags_bits = p[6] >> 5;
    let frag_offset = (u16::from(p[6] & 0x1F) << 8) | u16::from(p[7]);
    let options_end = header_len.min(p.len());
    let options = if options_end > 20 {
        p[20..options_end].to_vec()
    } else {
        Vec::new()
    };
    let protocol = p[9];
    pkt.ipv4 = Some(Ipv4Layer {
        ihl,
        tos: p[1],
        total_length,
        flags_bits,
        df_bit: flags_bits & 0b010 != 0,
        ttl: p[8],
        protocol,
        options,
    });
    if p.len() < header_len {
        // Header cut by the snaplen; nothing reliable beyond it.
        pkt.warnings += 1;
        return;
    }
    // Later fragments carry no transport header of their own.
    if frag_offset != 0 {
        return;
    }
    // Bound the transport slice by total_length so Ethernet trailer padding
    // never leaks into payloads.
    let ip_end = if usize::from(total_length) >= header_len {
        p.len().min(usize::from(total_length))
    } else {
        p.len()
    };
    let transport = &p[header_len..ip_end.max(header_len)];
    match protocol {
        1 => decode_icmp(transport, pkt),
        6 => decode_tcp(transport, pkt),
        17 => decode_udp(transport, pkt),
        _ => {}
    }
}

fn decode_icmp(t: &[u8], pkt: &mut DecodedPacket) {
    if t.len() < 4 {
        pkt.warnings += 1;
        return;
    }
    pkt.icmp = Some(IcmpLayer { code: t[1] });
}

fn decode_tcp(t: &[u8], pkt: &mut DecodedPacket) {
    if t.len() < 20 {
        pkt.warnings += 1;
        return;
    }
    let data_offset = t[12] >> 4;
    if data_offset < 5 {
        pkt.warnings += 1;
        return;
    }
    let header_len = usize::from(data_offset) * 4;
    // Payload is whatever survives the capture cut past the header.
    let payload = if t.len() > header_len {
        t[header_len..].to_vec()
    } else {
        Vec::new()
    };
    pkt.tcp = Some(TcpLayer {
        src_port: u16::from_be_bytes([t[0], t[1]]),
        dst_port: u16::from_be_bytes([t[2], t[3]]),
        data_offset,
        flag_fin: t[13] & 0x01 != 0,
        flag_ack: t[13] & 0x10 != 0,
        window: u16::from_be_bytes([t[14], t[15]]),
        payload,
    });
}

fn decode_udp(u: &[u8], pkt: &mut DecodedPacket) {
    if u.len() < 8 {
        pkt.warnings += 1;
        return;
    }
    let src_port = u16::from_be_bytes([u[0], u[1]]);
    let dst_port = u16::from_be_bytes([u[2], u[3]]);
    let length = u16::from_be_bytes([u[4], u[5]]);
    let datagram_end = if usize::from(length) >= 8 {
        u.len().min(usize::from(length))
    } else {
        u.len()
    };
    let payload = if datagram_end > 8 {
        u[8..datagram_end].to_vec()
    } else {
        Vec::new()
    };
    pkt.udp = Some(UdpLayer {
        src_port,
        dst_port,
        length,
        payload: payload.clone(),
    });
    let is_bootp = matches!(dst_port, 67 | 68) || matches!(src_port, 67 | 68);
    // 53 plain DNS, 5353 mDNS, 5355 LLMNR: all share the DNS header layout.
    let is_dns = matches!(dst_port, 53 | 5353 | 5355) || matches!(src_port, 53 | 5353 | 5355);
    if is_bootp {
        decode_bootp(&payload, pkt);
    } else if is_dns {
        decode_dns(&payload, pkt);
    }
}

fn trim_zero_padding(bytes: &[u8]) -> Vec<u8> {
    let end = bytes.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    bytes[..end].to_vec()
}

fn decode_bootp(b: &[u8], pkt: &mut DecodedPacket) {
    if b.len() < 12 {
        pkt.warnings += 1;
        return;
    }
    let slice = |from: usize, to: usize| -> Vec<u8> {
        if b.len() > from {
            trim_zero_padding(&b[from..to.min(b.len())])
        } else {
            Vec::new()
        }
    };
    let vendor = if b.len() > 236 { &b[236..] } else { &[][..] };
    pkt.bootp = Some(BootpLayer {
        hlen: b[2],
        flags: u16::from_be_bytes([b[10], b[11]]),
        sname: slice(44, 108),
        file: slice(108, 236),
        options: trim_zero_padding(vendor),
    });
    // DHCP rides on BOOTP behind the magic cookie.
    if vendor.len() >= 4 && vendor[..4] == [0x63, 0x82, 0x53, 0x63] {
        let mut codes = Vec::new();
        let opts = &vendor[4..];
        let mut i = 0usize;
        while i < opts.len() {
            let code = opts[i];
            if code == 0 {
                i += 1;
                continue;
            }
            codes.push(code);
            if code == 255 {
                break;
            }
            if i + 1 >= opts.len() {
                pkt.warnings += 1;
                break;
            }
            i += 2 + usize::from(opts[i + 1]);
        }
        pkt.dhcp = Some(DhcpLayer {
            option_codes: codes,
        });
    }
}

fn decode_dns(d: &[u8], pkt: &mut DecodedPacket) {
    if d.len() < 12 {
        pkt.warnings += 1;
        return;
    }
    let flags = u16::from_be_bytes([d[2], d[3]]);
    pkt.dns = Some(DnsLayer {
        qr: (flags >> 15) as u8 & 1,
        rd: (flags >> 8) as u8 & 1,
        qdcount: u16::from_be_bytes([d[4], d[5]]),
    });
}
