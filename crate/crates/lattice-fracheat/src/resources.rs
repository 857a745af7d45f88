//! Allocation budget shared by every operation that materialises a box.

/// Environment variable holding the allocation cap in MiB.
pub const MEM_CAP_ENV: &str = "LATTICE_FRACHEAT_MEM_CAP_MB";

/// Cap used when the environment variable is absent or unparsable.
pub const DEFAULT_MEM_CAP_MB: u64 = 2048;

/// The configured cap in MiB.
pub fn mem_cap_mb() -> u64 {
    std::env::var(MEM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MEM_CAP_MB)
}

/// The configured cap in bytes.
pub fn mem_cap_bytes() -> u64 {
    mem_cap_mb().saturating_mul(1 << 20)
}

/// Bytes rounded up to whole MiB, for error messages.
pub fn to_mb(bytes: u64) -> u64 {
    bytes.div_ceil(1 << 20)
}
