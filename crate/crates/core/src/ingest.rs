//! Stream listener that records sessions from the wire protocol.
//!
//! One device connection at a time: accept, reassemble frames from the byte
//! stream, convert ADC counts to volts, hand [`SensorFrame`]s to the sink in
//! seq order. Connection errors end the session cleanly with partial data
//! preserved.

use std::io::Read;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use thiserror::Error;

use crate::model::SensorFrame;
use crate::wire::{adc_to_volts, AdcScale, FrameReassembler};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to bind {addr}: {source}")]
    BindFailure {
        addr: String,
        source: std::io::Error,
    },
    #[error("accept failed: {0}")]
    Accept(std::io::Error),
}

/// Counters reported after a stream ends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub frames_received: u64,
    /// Number of seq discontinuities observed.
    pub gaps: u64,
    /// Total missing frames implied by the discontinuities.
    pub frames_dropped: u64,
    pub crc_failures: u64,
    pub resyncs: u64,
}

/// Bind `addr` and record a single incoming stream into `sink`.
pub fn serve_ingest<A, F>(addr: A, scale: &AdcScale, sink: F) -> Result<IngestStats, IngestError>
where
    A: ToSocketAddrs + std::fmt::Display,
    F: FnMut(SensorFrame),
{
    let listener = bind(&addr)?;
    serve_one_connection(&listener, scale, sink)
}

pub fn bind<A: ToSocketAddrs + std::fmt::Display>(addr: A) -> Result<TcpListener, IngestError> {
    TcpListener::bind(&addr).map_err(|source| IngestError::BindFailure {
        addr: addr.to_string(),
        source,
    })
}

/// Accept exactly one connection on an already-bound listener and drain it.
pub fn serve_one_connection<F>(
    listener: &TcpListener,
    scale: &AdcScale,
    sink: F,
) -> Result<IngestStats, IngestError>
where
    F: FnMut(SensorFrame),
{
    let (stream, _) = listener.accept().map_err(IngestError::Accept)?;
    Ok(drain_stream(stream, scale, sink))
}

/// Read a connected stream to EOF, reassembling and converting frames.
/// I/O errors terminate the session; whatever was decoded is kept.
pub fn drain_stream<F>(mut stream: TcpStream, scale: &AdcScale, mut sink: F) -> IngestStats
where
    F: FnMut(SensorFrame),
{
    let mut reassembler = FrameReassembler::new();
    let mut stats = IngestStats::default();
    let mut last_seq: Option<u32> = None;
    let mut buf = [0u8; 4096];
    loop {
        let n = match stream.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(_) => break,
        };
        for wire in reassembler.push(&buf[..n]) {
            if let Some(prev) = last_seq {
                let expected = prev.wrapping_add(1);
                if wire.seq != expected {
                    stats.gaps += 1;
                    stats.frames_dropped += wire.seq.wrapping_sub(expected) as u64;
                }
            }
            last_seq = Some(wire.seq);
            let mut volts = [0.0f64; crate::model::CHANNELS];
            let mut ok = true;
            for (c, &raw) in wire.adc.iter().enumerate() {
                match adc_to_volts(raw, scale) {
                    Ok(v) => volts[c] = v,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                // out-of-range counts are treated like a corrupted frame
                stats.crc_failures += 1;
                continue;
            }
            stats.frames_received += 1;
            sink(SensorFrame {
                timestamp_us: wire.timestamp_us,
                volts,
                seq: wire.seq,
            });
        }
    }
    stats.crc_failures += reassembler.crc_failures;
    stats.resyncs = reassembler.resyncs;
    stats
}
