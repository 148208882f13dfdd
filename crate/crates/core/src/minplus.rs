//! Leaky-bucket arrival curves, rate-latency service curves and the closed-form
//! bounds between them.

use serde::{Deserialize, Serialize};

use crate::error::CurveError;

/// Leaky-bucket arrival curve `α(t) = ρt + σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalCurve {
    /// Sustained rate in bits per second.
    pub rate: f64,
    /// Burst in bits.
    pub burst: f64,
}

/// Rate-latency service curve `β(t) = R[t − T]⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceCurve {
    /// Guaranteed rate in bits per second.
    pub rate: f64,
    /// Latency in seconds.
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketizerConfig {
    /// Largest packet in bits.
    pub max_packet_bits: f64,
}

impl ArrivalCurve {
    pub fn new(rate: f64, burst: f64) -> Result<Self, CurveError> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(CurveError::InvalidParameter(format!("arrival rate {rate}")));
        }
        if !(burst >= 0.0 && burst.is_finite()) {
            return Err(CurveError::InvalidParameter(format!("arrival burst {burst}")));
        }
        Ok(Self { rate, burst })
    }

    pub const ZERO: ArrivalCurve = ArrivalCurve { rate: 0.0, burst: 0.0 };
}

impl ServiceCurve {
    pub fn new(rate: f64, latency: f64) -> Result<Self, CurveError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(CurveError::InvalidParameter(format!("service rate {rate}")));
        }
        if !(latency >= 0.0 && latency.is_finite()) {
            return Err(CurveError::InvalidParameter(format!("service latency {latency}")));
        }
        Ok(Self { rate, latency })
    }
}

fn check_stable(a: &ArrivalCurve, s: &ServiceCurve) -> Result<(), CurveError> {
    if a.rate > s.rate {
        Err(CurveError::Unstable { arrival_rate: a.rate, service_rate: s.rate })
    } else {
        Ok(())
    }
}

/// Horizontal deviation between `α` and `β`: `T + σ/R`.
pub fn delay_bound_single(a: &ArrivalCurve, s: &ServiceCurve) -> Result<f64, CurveError> {
    check_stable(a, s)?;
    Ok(s.latency + a.burst / s.rate)
}

/// Vertical deviation between `α` and `β`: `σ + ρT`.
pub fn backlog_bound(a: &ArrivalCurve, s: &ServiceCurve) -> Result<f64, CurveError> {
    check_stable(a, s)?;
    Ok(a.burst + a.rate * s.latency)
}

/// Min-plus convolution of rate-latency curves: slowest rate, summed latency.
pub fn concatenate(curves: &[ServiceCurve]) -> Result<ServiceCurve, CurveError> {
    let first = curves.first().ok_or(CurveError::EmptyConcatenation)?;
    Ok(curves[1..].iter().fold(*first, |acc, c| ServiceCurve {
        rate: acc.rate.min(c.rate),
        latency: acc.latency + c.latency,
    }))
}

/// Hop-by-hop bound over `hops` identical servers, re-paying the burst at each hop.
pub fn additive_delay(a: &ArrivalCurve, s: &ServiceCurve, hops: u32) -> Result<f64, CurveError> {
    if hops == 0 {
        return Err(CurveError::InvalidParameter("hop count must be at least 1".into()));
    }
    check_stable(a, s)?;
    let v = f64::from(hops);
    Ok(v * s.latency + v * (a.burst + (v - 1.0) / 2.0 * a.rate * s.latency) / s.rate)
}

/// Service left to one flow at a FIFO server after `cross` is served.
pub fn leftover_fifo(s: &ServiceCurve, cross: &ArrivalCurve) -> Result<ServiceCurve, CurveError> {
    if cross.rate >= s.rate {
        return Err(CurveError::Saturated { cross_rate: cross.rate, service_rate: s.rate });
    }
    Ok(ServiceCurve {
        rate: s.rate - cross.rate,
        latency: s.latency + cross.burst / s.rate,
    })
}

/// Burst of a flow after crossing servers with the given latencies: `σ + ρΣT`.
pub fn updated_burst(a: &ArrivalCurve, upstream_latencies: &[f64]) -> f64 {
    let total: f64 = upstream_latencies.iter().sum();
    a.burst + a.rate * total
}

/// Rate-latency equivalent of `[β − l_max]⁺`.
pub fn packetize(s: &ServiceCurve, p: &PacketizerConfig) -> ServiceCurve {
    ServiceCurve {
        rate: s.rate,
        latency: s.latency + p.max_packet_bits / s.rate,
    }
}
