#pragma once

#include <cstdint>
#include <string>

#include "varred/field.hpp"
#include "varred/radial.hpp"

namespace varred {

/// Binary field format: 32-byte header (magic "VRNLSFLD", u32 N, u32 M,
/// f64 L, 8 reserved zero bytes), then M^N little-endian float64, row-major.
void save_field(const Field& u, const std::string& path);
Field load_field(const std::string& path, double decay_tol = 1e-6);

/// Radial profile as CSV with header line "r,u".
void save_profile(const RadialProfile& p, const std::string& path);
RadialProfile load_profile(const std::string& path);

/// FNV-1a 64-bit hash; used for content-addressed caches and config hashes.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t fnv1a(const std::string& s);
std::uint64_t field_hash(const Field& u);

/// Shortest decimal form that round-trips a double (deterministic report numbers).
std::string format_double(double v);

} // namespace varred
