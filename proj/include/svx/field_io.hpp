#pragma once

// On-disk formats for lattice fields.
//
// Binary snapshot (version 1), all values little-endian:
//   bytes 0..7   magic "SVXSNAP\0"
//   bytes 8..11  u32 format version
//   bytes 12..15 u32 endianness marker 0x01020304
//   payload      i32 Ns, i32 Nt, f64 Ls, f64 Lt, f64 lambda[Ns*Nt],
//                i32 N, i32 r, i64 degree[r], f64 epsilon,
//                f64 (re, im) z[Ns*Nt*N], f64 a_s[Ns*Nt*r], f64 a_t[Ns*Nt*r]
//
// CSV (version 1): one comment line "# svx-field v1 <kind> ...", a header
// row, then one row per site: site, i, j, values.

#include <cstdint>
#include <string>

#include "svx/vortex.hpp"

namespace svx {

inline constexpr std::uint32_t kSnapshotVersion = 1;

void write_snapshot(const std::string& path, const VortexState& state);
VortexState read_snapshot(const std::string& path);

std::string encode_snapshot(const VortexState& state);
VortexState decode_snapshot(const std::string& bytes);

/// Section as CSV: site, i, j, re_0, im_0, ..., abs2.
std::string section_csv(const TorusGeometry& geom, const SiteField& z);

/// Connection and site-averaged curvature as CSV: site, i, j, as_*, at_*, f_*.
std::string connection_csv(const TorusGeometry& geom, const LinkField& a);

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace svx
