//! Packet capture ingestion.
//!
//! Parses classic pcap files (both byte orders, Ethernet II link type only)
//! into [`PacketRecord`]s and reads/writes the line-based record interchange
//! format. IPv6, pcapng and nanosecond-precision captures are out of scope;
//! frames the parser cannot use are counted and skipped rather than failing
//! the whole capture.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Classic pcap magic, as read in file byte order.
pub const PCAP_MAGIC: u32 = 0xa1b2_c3d4;
/// The same magic seen through the opposite byte order.
pub const PCAP_MAGIC_SWAPPED: u32 = 0xd4c3_b2a1;
/// Nanosecond-precision pcap magic; rejected to keep all timestamps in microseconds.
pub const PCAP_MAGIC_NANOS: u32 = 0xa1b2_3c4d;
const PCAP_MAGIC_NANOS_SWAPPED: u32 = 0x4d3c_b2a1;

const LINKTYPE_ETHERNET: u32 = 1;
const ETHERTYPE_IPV4: u16 = 0x0800;
const IP_PROTO_TCP: u8 = 6;
const IP_PROTO_UDP: u8 = 17;

/// TCP flag bits as stored in [`PacketRecord::tcp_flags`] (9-bit mask).
pub mod tcp_flags {
    pub const FIN: u16 = 0x001;
    pub const SYN: u16 = 0x002;
    pub const RST: u16 = 0x004;
    pub const PSH: u16 = 0x008;
    pub const ACK: u16 = 0x010;
    pub const URG: u16 = 0x020;
    pub const ECE: u16 = 0x040;
    pub const CWR: u16 = 0x080;
    pub const NS: u16 = 0x100;

    /// Every bit the mask may carry.
    pub const ALL: u16 = 0x1ff;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    Tcp,
    Udp,
    Other,
}

impl Protocol {
    /// IANA protocol number used as the categorical feature token (OTHER maps to 0).
    pub fn feature_code(self) -> u16 {
        match self {
            Protocol::Tcp => 6,
            Protocol::Udp => 17,
            Protocol::Other => 0,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Tcp => write!(f, "TCP"),
            Protocol::Udp => write!(f, "UDP"),
            Protocol::Other => write!(f, "OTHER"),
        }
    }
}

/// Packet direction relative to the configured internal network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Outgoing => Direction::Incoming,
            Direction::Incoming => Direction::Outgoing,
        }
    }

    /// Feature encoding: OUT = 0, IN = 1.
    pub fn feature_code(self) -> u16 {
        match self {
            Direction::Outgoing => 0,
            Direction::Incoming => 1,
        }
    }
}

/// Header-derived fields of one observed packet.
///
/// Invariants: ports are 0 for `Other` protocol; `tcp_flags` is 0 unless the
/// protocol is TCP. [`PacketRecord::validate`] checks both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub ts_micros: u64,
    pub src_ip: u32,
    pub dst_ip: u32,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
    pub size_bytes: u64,
    pub tcp_flags: u16,
    pub direction: Direction,
    pub tls_present: bool,
}

impl PacketRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.protocol == Protocol::Other && (self.src_port != 0 || self.dst_port != 0) {
            return Err("ports must be 0 when protocol is OTHER".into());
        }
        if self.protocol != Protocol::Tcp && self.tcp_flags != 0 {
            return Err("tcp_flags must be 0 for non-TCP packets".into());
        }
        if self.tcp_flags & !tcp_flags::ALL != 0 {
            return Err("tcp_flags outside the 9-bit mask".into());
        }
        Ok(())
    }
}

/// Format an IPv4 address held as a big-endian u32.
pub fn ip_to_string(ip: u32) -> String {
    let b = ip.to_be_bytes();
    format!("{}.{}.{}.{}", b[0], b[1], b[2], b[3])
}

/// Parse a dotted-quad IPv4 address.
pub fn parse_ip(s: &str) -> Option<u32> {
    let mut parts = s.split('.');
    let mut out = [0u8; 4];
    for slot in out.iter_mut() {
        *slot = parts.next()?.parse().ok()?;
    }
    if parts.next().is_some() {
        return None;
    }
    Some(u32::from_be_bytes(out))
}

/// CIDR-list predicate deciding which addresses count as "internal".
///
/// Packets whose source matches are OUTGOING; everything else is INCOMING.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalNet {
    nets: Vec<(u32, u8)>,
}

impl InternalNet {
    pub fn new(nets: Vec<(u32, u8)>) -> Self {
        InternalNet { nets }
    }

    /// Parse a comma-separated CIDR list, e.g. `10.0.0.0/8,192.168.0.0/16`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut nets = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (addr, prefix) = match part.split_once('/') {
                Some((a, p)) => (parse_ip(a)?, p.parse::<u8>().ok()?),
                None => (parse_ip(part)?, 32),
            };
            if prefix > 32 {
                return None;
            }
            nets.push((addr, prefix));
        }
        Some(InternalNet { nets })
    }

    pub fn contains(&self, ip: u32) -> bool {
        self.nets.iter().any(|&(net, prefix)| {
            let mask = if prefix == 0 { 0 } else { u32::MAX << (32 - prefix) };
            ip & mask == net & mask
        })
    }

    pub fn direction_of(&self, src_ip: u32) -> Direction {
        if self.contains(src_ip) {
            Direction::Outgoing
        } else {
            Direction::Incoming
        }
    }
}

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("bad pcap magic 0x{0:08x}")]
    BadMagic(u32),
    #[error("pcap global header truncated: got {0} bytes, need 24")]
    TruncatedHeader(usize),
    #[error("unsupported pcap link type {0} (only Ethernet II, link type 1)")]
    UnsupportedLinkType(u32),
    #[error("pcap frame truncated at byte offset {0}")]
    TruncatedFrame(usize),
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: field `{field}` out of range: {value}")]
    FieldOutOfRange {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("record {index} cannot be written as a pcap frame: {reason}")]
    UnwritableRecord { index: usize, reason: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Frames that were seen but produced no record, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounts {
    /// Ethertype other than IPv4.
    pub non_ipv4: u64,
    /// IPv4 but not TCP/UDP, or a non-first fragment.
    pub non_transport: u64,
    /// Captured bytes too short for the headers the frame claims to carry.
    pub truncated: u64,
}

impl SkipCounts {
    pub fn total(&self) -> u64 {
        self.non_ipv4 + self.non_transport + self.truncated
    }
}

/// Result of parsing one capture file.
#[derive(Debug, Clone)]
pub struct PcapCapture {
    pub records: Vec<PacketRecord>,
    pub skipped: SkipCounts,
    pub snaplen: u32,
    /// True when the file's byte order was opposite to the reader's.
    pub swapped: bool,
}

#[derive(Clone, Copy)]
struct ByteOrder {
    swapped: bool,
}

impl ByteOrder {
    fn u32(&self, b: &[u8]) -> u32 {
        let arr = [b[0], b[1], b[2], b[3]];
        if self.swapped {
            u32::from_be_bytes(arr)
        } else {
            u32::from_le_bytes(arr)
        }
    }

    fn u16(&self, b: &[u8]) -> u16 {
        let arr = [b[0], b[1]];
        if self.swapped {
            u16::from_be_bytes(arr)
        } else {
            u16::from_le_bytes(arr)
        }
    }
}

/// Parse a classic pcap byte stream into packet records.
///
/// One record per IPv4 TCP/UDP frame, in file order; other frames are counted
/// in [`PcapCapture::skipped`]. The parser never reads past a frame's captured
/// length and a file cut mid-record yields [`CaptureError::TruncatedFrame`].
pub fn parse_pcap(bytes: &[u8], internal: &InternalNet) -> Result<PcapCapture, CaptureError> {
    if bytes.len() < 24 {
        return Err(CaptureError::TruncatedHeader(bytes.len()));
    }
    let magic = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let order = match magic {
        PCAP_MAGIC => ByteOrder { swapped: false },
        PCAP_MAGIC_SWAPPED => ByteOrder { swapped: true },
        // Nanosecond captures are rejected rather than coerced so IAT units stay unambiguous.
        PCAP_MAGIC_NANOS | PCAP_MAGIC_NANOS_SWAPPED => return Err(CaptureError::BadMagic(magic)),
        other => return Err(CaptureError::BadMagic(other)),
    };
    let snaplen = order.u32(&bytes[16..20]);
    let link_type = order.u32(&bytes[20..24]);
    if link_type != LINKTYPE_ETHERNET {
        return Err(CaptureError::UnsupportedLinkType(link_type));
    }

    let mut records = Vec::new();
    let mut skipped = SkipCounts::default();
    let mut off = 24usize;
    while off < bytes.len() {
        if bytes.len() - off < 16 {
            return Err(CaptureError::TruncatedFrame(off));
        }
        let ts_sec = order.u32(&bytes[off..off + 4]) as u64;
        let ts_usec = order.u32(&bytes[off + 4..off + 8]) as u64;
        let incl_len = order.u32(&bytes[off + 8..off + 12]) as usize;
        let orig_len = order.u32(&bytes[off + 12..off + 16]) as u64;
        off += 16;
        if bytes.len() - off < incl_len {
            return Err(CaptureError::TruncatedFrame(off));
        }
        let frame = &bytes[off..off + incl_len];
        off += incl_len;

        let ts_micros = ts_sec * 1_000_000 + ts_usec;
        match parse_frame(frame, ts_micros, orig_len, internal) {
            FrameOutcome::Record(rec) => records.push(rec),
            FrameOutcome::NonIpv4 => skipped.non_ipv4 += 1,
            FrameOutcome::NonTransport => skipped.non_transport += 1,
            FrameOutcome::Truncated => skipped.truncated += 1,
        }
    }

    Ok(PcapCapture {
        records,
        skipped,
        snaplen,
        swapped: order.swapped,
    })
}

enum FrameOutcome {
    Record(PacketRecord),
    NonIpv4,
    NonTransport,
    Truncated,
}

fn parse_frame(
    frame: &[u8],
    ts_micros: u64,
    orig_len: u64,
    internal: &InternalNet,
) -> FrameOutcome {
    if frame.len() < 14 {
        return FrameOutcome::Truncated;
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    if ethertype != ETHERTYPE_IPV4 {
        return FrameOutcome::NonIpv4;
    }
    let ip = &frame[14..];
    if ip.len() < 20 {
        return FrameOutcome::Truncated;
    }
    if ip[0] >> 4 != 4 {
        return FrameOutcome::NonIpv4;
    }
    let ihl = ((ip[0] & 0x0f) as usize) * 4;
    if ihl < 20 || ip.len() < ihl {
        return FrameOutcome::Truncated;
    }
    let frag_offset = u16::from_be_bytes([ip[6], ip[7]]) & 0x1fff;
    let proto = ip[9];
    let src_ip = u32::from_be_bytes([ip[12], ip[13], ip[14], ip[15]]);
    let dst_ip = u32::from_be_bytes([ip[16], ip[17], ip[18], ip[19]]);
    if frag_offset != 0 || (proto != IP_PROTO_TCP && proto != IP_PROTO_UDP) {
        return FrameOutcome::NonTransport;
    }
    let transport = &ip[ihl..];

    let (protocol, src_port, dst_port, flags, tls_present) = if proto == IP_PROTO_TCP {
        if transport.len() < 14 {
            return FrameOutcome::Truncated;
        }
        let src_port = u16::from_be_bytes([transport[0], transport[1]]);
        let dst_port = u16::from_be_bytes([transport[2], transport[3]]);
        let doff = ((transport[12] >> 4) as usize) * 4;
        let flags = (((transport[12] & 0x01) as u16) << 8) | transport[13] as u16;
        // TLS presence: record-layer header at the start of the TCP payload.
        let tls = transport
            .get(doff..doff + 3)
            .map(|p| (0x14..=0x17).contains(&p[0]) && p[1] == 0x03)
            .unwrap_or(false);
        (Protocol::Tcp, src_port, dst_port, flags, tls)
    } else {
        if transport.len() < 8 {
            return FrameOutcome::Truncated;
        }
        let src_port = u16::from_be_bytes([transport[0], transport[1]]);
        let dst_port = u16::from_be_bytes([transport[2], transport[3]]);
        (Protocol::Udp, src_port, dst_port, 0, false)
    };

    FrameOutcome::Record(PacketRecord {
        ts_micros,
        src_ip,
        dst_ip,
        src_port,
        dst_port,
        protocol,
        size_bytes: orig_len,
        tcp_flags: flags,
        direction: internal.direction_of(src_ip),
        tls_present,
    })
}

/// Write records as a classic pcap file (Ethernet II / IPv4 / TCP or UDP).
///
/// Frames are reconstructed skeletons: zeroed MACs, no checksums, zero
/// payload except a TLS record header when `tls_present` is set. `swapped`
/// selects the non-native byte order.
pub fn write_pcap<W: Write>(
    records: &[PacketRecord],
    w: &mut W,
    swapped: bool,
) -> Result<(), CaptureError> {
    let put32 = |buf: &mut Vec<u8>, v: u32| {
        buf.extend_from_slice(&if swapped { v.to_be_bytes() } else { v.to_le_bytes() })
    };
    let mut buf = Vec::new();
    put32(&mut buf, PCAP_MAGIC);
    // version 2.4
    buf.extend_from_slice(&if swapped {
        [0u8, 2, 0, 4]
    } else {
        [2u8, 0, 4, 0]
    });
    put32(&mut buf, 0); // thiszone
    put32(&mut buf, 0); // sigfigs
    put32(&mut buf, 65535); // snaplen
    put32(&mut buf, LINKTYPE_ETHERNET);

    for (index, rec) in records.iter().enumerate() {
        let transport_len = match rec.protocol {
            Protocol::Tcp => 20,
            Protocol::Udp => 8,
            Protocol::Other => {
                return Err(CaptureError::UnwritableRecord {
                    index,
                    reason: "protocol OTHER has no frame layout",
                })
            }
        };
        let min_len = 14 + 20 + transport_len + if rec.tls_present { 3 } else { 0 };
        if (rec.size_bytes as usize) < min_len {
            return Err(CaptureError::UnwritableRecord {
                index,
                reason: "size_bytes smaller than the minimal frame",
            });
        }
        let frame_len = rec.size_bytes as usize;

        let mut frame = vec![0u8; frame_len];
        frame[12..14].copy_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
        let ip_total = (frame_len - 14) as u16;
        let ip = &mut frame[14..];
        ip[0] = 0x45;
        ip[2..4].copy_from_slice(&ip_total.to_be_bytes());
        ip[8] = 64; // ttl
        ip[9] = match rec.protocol {
            Protocol::Tcp => IP_PROTO_TCP,
            _ => IP_PROTO_UDP,
        };
        ip[12..16].copy_from_slice(&rec.src_ip.to_be_bytes());
        ip[16..20].copy_from_slice(&rec.dst_ip.to_be_bytes());
        let t = &mut ip[20..];
        t[0..2].copy_from_slice(&rec.src_port.to_be_bytes());
        t[2..4].copy_from_slice(&rec.dst_port.to_be_bytes());
        match rec.protocol {
            Protocol::Tcp => {
                t[12] = 0x50 | ((rec.tcp_flags >> 8) as u8 & 0x01);
                t[13] = (rec.tcp_flags & 0xff) as u8;
                if rec.tls_present {
                    t[20] = 0x17;
                    t[21] = 0x03;
                    t[22] = 0x03;
                }
            }
            Protocol::Udp => {
                let udp_len = (ip_total - 20) as u16;
                t[4..6].copy_from_slice(&udp_len.to_be_bytes());
            }
            Protocol::Other => unreachable!(),
        }

        put32(&mut buf, (rec.ts_micros / 1_000_000) as u32);
        put32(&mut buf, (rec.ts_micros % 1_000_000) as u32);
        put32(&mut buf, frame_len as u32);
        put32(&mut buf, frame_len as u32);
        buf.extend_from_slice(&frame);
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Serialize records in the canonical interchange format, one per line:
/// `ts_micros,src_ip,dst_ip,src_port,dst_port,protocol,size_bytes,tcp_flags,direction,tls_present`.
pub fn write_records<W: Write>(records: &[PacketRecord], w: &mut W) -> Result<(), CaptureError> {
    for rec in records {
        let dir = match rec.direction {
            Direction::Outgoing => "OUT",
            Direction::Incoming => "IN",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            rec.ts_micros,
            ip_to_string(rec.src_ip),
            ip_to_string(rec.dst_ip),
            rec.src_port,
            rec.dst_port,
            rec.protocol,
            rec.size_bytes,
            rec.tcp_flags,
            dir,
            rec.tls_present as u8,
        )?;
    }
    Ok(())
}

/// Parse interchange-format records. Lines starting with `#` and blank lines
/// are skipped, so files may carry a metadata header.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<PacketRecord>, CaptureError> {
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records.push(parse_record_line(trimmed, line_no)?);
    }
    Ok(records)
}

fn parse_record_line(line: &str, line_no: usize) -> Result<PacketRecord, CaptureError> {
    let malformed = |reason: &str| CaptureError::MalformedLine {
        line: line_no,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 10 {
        return Err(malformed(&format!("expected 10 fields, got {}", fields.len())));
    }

    let out_of_range = |field: &'static str, value: &str| CaptureError::FieldOutOfRange {
        line: line_no,
        field,
        value: value.to_string(),
    };

    let ts_micros: u64 = fields[0].parse().map_err(|_| malformed("bad ts_micros"))?;
    let src_ip = parse_ip(fields[1]).ok_or_else(|| malformed("bad src_ip"))?;
    let dst_ip = parse_ip(fields[2]).ok_or_else(|| malformed("bad dst_ip"))?;
    let src_port_raw: u64 = fields[3].parse().map_err(|_| malformed("bad src_port"))?;
    let dst_port_raw: u64 = fields[4].parse().map_err(|_| malformed("bad dst_port"))?;
    if src_port_raw > 65535 {
        return Err(out_of_range("src_port", fields[3]));
    }
    if dst_port_raw > 65535 {
        return Err(out_of_range("dst_port", fields[4]));
    }
    let protocol = match fields[5] {
        "TCP" => Protocol::Tcp,
        "UDP" => Protocol::Udp,
        "OTHER" => Protocol::Other,
        other => return Err(malformed(&format!("bad protocol `{other}`"))),
    };
    let size_bytes: u64 = fields[6].parse().map_err(|_| malformed("bad size_bytes"))?;
    let tcp_flags_raw: u64 = fields[7].parse().map_err(|_| malformed("bad tcp_flags"))?;
    if tcp_flags_raw > tcp_flags::ALL as u64 {
        return Err(out_of_range("tcp_flags", fields[7]));
    }
    let direction = match fields[8] {
        "OUT" => Direction::Outgoing,
        "IN" => Direction::Incoming,
        other => return Err(malformed(&format!("bad direction `{other}`"))),
    };
    let tls_present = match fields[9] {
        "0" => false,
        "1" => true,
        other => return Err(malformed(&format!("bad tls_present `{other}`"))),
    };

    let rec = PacketRecord {
        ts_micros,
        src_ip,
        dst_ip,
        src_port: src_port_raw as u16,
        dst_port: dst_port_raw as u16,
        protocol,
        size_bytes,
        tcp_flags: tcp_flags_raw as u16,
        direction,
        tls_present,
    };
    if rec.protocol == Protocol::Other && (rec.src_port != 0 || rec.dst_port != 0) {
        return Err(out_of_range("src_port/dst_port", "nonzero for OTHER"));
    }
    if rec.protocol != Protocol::Tcp && rec.tcp_flags != 0 {
        return Err(out_of_range("tcp_flags", "nonzero for non-TCP"));
    }
    Ok(rec)
}

pub fn read_records_path(path: &Path) -> Result<Vec<PacketRecord>, CaptureError> {
    read_records(File::open(path)?)
}

pub fn write_records_path(records: &[PacketRecord], path: &Path) -> Result<(), CaptureError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_records(records, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn internal_10() -> InternalNet {
        InternalNet::parse("10.0.0.0/8").unwrap()
    }

    /// Build a pcap header + frames by hand from the format definition.
    fn handcrafted_pcap(swapped: bool, frames: &[(u32, u32, Vec<u8>)]) -> Vec<u8> {
        let put32 = |buf: &mut Vec<u8>, v: u32| {
            buf.extend_from_slice(&if swapped { v.to_be_bytes() } else { v.to_le_bytes() })
        };
        let put16 = |buf: &mut Vec<u8>, v: u16| {
            buf.extend_from_slice(&if swapped { v.to_be_bytes() } else { v.to_le_bytes() })
        };
        let mut buf = Vec::new();
        put32(&mut buf, PCAP_MAGIC);
        put16(&mut buf, 2);
        put16(&mut buf, 4);
        put32(&mut buf, 0);
        put32(&mut buf, 0);
        put32(&mut buf, 262_144);
        put32(&mut buf, 1);
        for (sec, usec, frame) in frames {
            put32(&mut buf, *sec);
            put32(&mut buf, *usec);
            put32(&mut buf, frame.len() as u32);
            put32(&mut buf, frame.len() as u32);
            buf.extend_from_slice(frame);
        }
        buf
    }

    /// Ethernet + IPv4 + UDP frame built byte by byte.
    fn udp_frame(src_ip: [u8; 4], dst_ip: [u8; 4], src_port: u16, dst_port: u16) -> Vec<u8> {
        let mut f = vec![0u8; 14 + 20 + 8];
        f[12] = 0x08;
        f[13] = 0x00;
        f[14] = 0x45;
        f[14 + 9] = 17;
        f[14 + 12..14 + 16].copy_from_slice(&src_ip);
        f[14 + 16..14 + 20].copy_from_slice(&dst_ip);
        f[34..36].copy_from_slice(&src_port.to_be_bytes());
        f[36..38].copy_from_slice(&dst_port.to_be_bytes());
        f[38..40].copy_from_slice(&8u16.to_be_bytes());
        f
    }

    fn tcp_frame(
        src_ip: [u8; 4],
        dst_ip: [u8; 4],
        src_port: u16,
        dst_port: u16,
        flags: u16,
    ) -> Vec<u8> {
        let mut f = vec![0u8; 14 + 20 + 20];
        f[12] = 0x08;
        f[13] = 0x00;
        f[14] = 0x45;
        f[14 + 9] = 6;
        f[14 + 12..14 + 16].copy_from_slice(&src_ip);
        f[14 + 16..14 + 20].copy_from_slice(&dst_ip);
        f[34..36].copy_from_slice(&src_port.to_be_bytes());
        f[36..38].copy_from_slice(&dst_port.to_be_bytes());
        f[34 + 12] = 0x50 | ((flags >> 8) as u8 & 1);
        f[34 + 13] = (flags & 0xff) as u8;
        f
    }

    #[test]
    fn swapped_magic_udp_packet_parses_with_correct_ports() {
        let frame = udp_frame([10, 0, 0, 5], [203, 0, 113, 9], 5353, 53);
        let bytes = handcrafted_pcap(true, &[(100, 250, frame)]);
        let cap = parse_pcap(&bytes, &internal_10()).unwrap();
        assert!(cap.swapped);
        assert_eq!(cap.records.len(), 1);
        let rec = &cap.records[0];
        assert_eq!(rec.ts_micros, 100_000_250);
        assert_eq!(rec.src_port, 5353);
        assert_eq!(rec.dst_port, 53);
        assert_eq!(rec.protocol, Protocol::Udp);
        assert_eq!(rec.direction, Direction::Outgoing);
        assert_eq!(rec.size_bytes, 42);
    }

    #[test]
    fn both_byte_orders_yield_identical_records() {
        let frames = vec![
            (7, 1, tcp_frame([10, 1, 2, 3], [8, 8, 8, 8], 50000, 443, 0x002)),
            (7, 900, udp_frame([8, 8, 8, 8], [10, 1, 2, 3], 53, 5353)),
        ];
        let native = handcrafted_pcap(false, &frames);
        let swapped = handcrafted_pcap(true, &frames);
        let a = parse_pcap(&native, &internal_10()).unwrap();
        let b = parse_pcap(&swapped, &internal_10()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 2);
    }

    #[test]
    fn empty_capture_yields_no_records() {
        let bytes = handcrafted_pcap(false, &[]);
        let cap = parse_pcap(&bytes, &internal_10()).unwrap();
        assert!(cap.records.is_empty());
        assert_eq!(cap.skipped.total(), 0);
    }

    #[test]
    fn ipv6_frame_is_skipped_and_counted() {
        let mut frame = vec![0u8; 60];
        frame[12] = 0x86;
        frame[13] = 0xdd;
        let bytes = handcrafted_pcap(false, &[(1, 0, frame)]);
        let cap = parse_pcap(&bytes, &internal_10()).unwrap();
        assert!(cap.records.is_empty());
        assert_eq!(cap.skipped.non_ipv4, 1);
        assert_eq!(cap.skipped.total(), 1);
    }

    #[test]
    fn nanosecond_magic_is_rejected() {
        let mut bytes = handcrafted_pcap(false, &[]);
        bytes[0..4].copy_from_slice(&PCAP_MAGIC_NANOS.to_le_bytes());
        match parse_pcap(&bytes, &internal_10()) {
            Err(CaptureError::BadMagic(m)) => assert_eq!(m, PCAP_MAGIC_NANOS),
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn unknown_magic_and_short_header_fail() {
        assert!(matches!(
            parse_pcap(&[0u8; 24], &internal_10()),
            Err(CaptureError::BadMagic(0))
        ));
        assert!(matches!(
            parse_pcap(&[0u8; 10], &internal_10()),
            Err(CaptureError::TruncatedHeader(10))
        ));
    }

    #[test]
    fn non_ethernet_link_type_is_rejected() {
        let mut bytes = handcrafted_pcap(false, &[]);
        bytes[20..24].copy_from_slice(&101u32.to_le_bytes()); // LINKTYPE_RAW
        assert!(matches!(
            parse_pcap(&bytes, &internal_10()),
            Err(CaptureError::UnsupportedLinkType(101))
        ));
    }

    #[test]
    fn fuzzed_truncations_error_but_never_panic() {
        let frames = vec![
            (1, 0, tcp_frame([10, 0, 0, 1], [1, 1, 1, 1], 1234, 80, 0x018)),
            (2, 0, udp_frame([10, 0, 0, 1], [1, 1, 1, 1], 5353, 53)),
        ];
        let full = handcrafted_pcap(false, &frames);
        let net = internal_10();
        for cut in 0..full.len() {
            // Any prefix must either parse (shorter capture) or error cleanly.
            let _ = parse_pcap(&full[..cut], &net);
        }
        // Garbage bodies with plausible structure must not panic either.
        let mut mangled = full.clone();
        for i in 24..mangled.len() {
            mangled[i] = mangled[i].wrapping_mul(31).wrapping_add(7);
        }
        let _ = parse_pcap(&mangled, &net);
    }

    #[test]
    fn truncated_transport_header_is_counted_not_fatal() {
        let mut frame = tcp_frame([10, 0, 0, 1], [1, 1, 1, 1], 1234, 80, 0x010);
        frame.truncate(14 + 20 + 4); // TCP header cut before the flags byte
        let bytes = handcrafted_pcap(false, &[(1, 0, frame)]);
        let cap = parse_pcap(&bytes, &internal_10()).unwrap();
        assert!(cap.records.is_empty());
        assert_eq!(cap.skipped.truncated, 1);
    }

    fn sample_records() -> Vec<PacketRecord> {
        vec![
            PacketRecord {
                ts_micros: 1_700_000_000_000_000,
                src_ip: parse_ip("10.0.0.1").unwrap(),
                dst_ip: parse_ip("203.0.113.5").unwrap(),
                src_port: 50123,
                dst_port: 443,
                protocol: Protocol::Tcp,
                size_bytes: 60,
                tcp_flags: tcp_flags::SYN,
                direction: Direction::Outgoing,
                tls_present: false,
            },
            PacketRecord {
                ts_micros: 1_700_000_000_004_000,
                src_ip: parse_ip("203.0.113.5").unwrap(),
                dst_ip: parse_ip("10.0.0.1").unwrap(),
                src_port: 443,
                dst_port: 50123,
                protocol: Protocol::Tcp,
                size_bytes: 1500,
                tcp_flags: tcp_flags::SYN | tcp_flags::ACK,
                direction: Direction::Incoming,
                tls_present: true,
            },
            PacketRecord {
                ts_micros: 1_700_000_000_010_000,
                src_ip: parse_ip("10.0.0.2").unwrap(),
                dst_ip: parse_ip("8.8.8.8").unwrap(),
                src_port: 0,
                dst_port: 0,
                protocol: Protocol::Other,
                size_bytes: 84,
                tcp_flags: 0,
                direction: Direction::Outgoing,
                tls_present: false,
            },
        ]
    }

    #[test]
    fn interchange_round_trip_is_identity() {
        let records = sample_records();
        let mut buf = Vec::new();
        write_records(&records, &mut buf).unwrap();
        let back = read_records(&buf[..]).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn interchange_reader_skips_comments_and_blank_lines() {
        let records = sample_records();
        let mut buf = b"# uninet:records v1\n\n".to_vec();
        write_records(&records, &mut buf).unwrap();
        assert_eq!(read_records(&buf[..]).unwrap(), records);
    }

    #[test]
    fn port_out_of_range_is_field_error() {
        let line = "1,10.0.0.1,8.8.8.8,70000,53,UDP,60,0,OUT,0\n";
        match read_records(line.as_bytes()) {
            Err(CaptureError::FieldOutOfRange { line: 1, field, .. }) => {
                assert_eq!(field, "src_port")
            }
            other => panic!("expected FieldOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn other_protocol_with_flags_violates_invariant() {
        let line = "1,10.0.0.1,8.8.8.8,0,0,OTHER,60,2,OUT,0\n";
        assert!(matches!(
            read_records(line.as_bytes()),
            Err(CaptureError::FieldOutOfRange { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let data = "1,10.0.0.1,8.8.8.8,1,53,UDP,60,0,OUT,0\nnot-a-record\n";
        match read_records(data.as_bytes()) {
            Err(CaptureError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
    }

    #[test]
    fn pcap_writer_round_trips_through_parser() {
        let records: Vec<PacketRecord> = sample_records()
            .into_iter()
            .filter(|r| r.protocol != Protocol::Other)
            .collect();
        for swapped in [false, true] {
            let mut buf = Vec::new();
            write_pcap(&records, &mut buf, swapped).unwrap();
            let cap = parse_pcap(&buf, &internal_10()).unwrap();
            assert_eq!(cap.records, records);
        }
    }

    #[test]
    fn internal_net_predicate_matches_prefixes() {
        let net = InternalNet::parse("10.0.0.0/8, 192.168.1.0/24").unwrap();
        assert!(net.contains(parse_ip("10.200.3.4").unwrap()));
        assert!(net.contains(parse_ip("192.168.1.77").unwrap()));
        assert!(!net.contains(parse_ip("192.168.2.1").unwrap()));
        assert!(!net.contains(parse_ip("8.8.8.8").unwrap()));
    }
}
