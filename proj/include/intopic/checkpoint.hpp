#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "intopic/etm.hpp"

namespace intopic {

inline constexpr char kCheckpointMagic[4] = {'I', 'T', 'M', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers and floats little-endian):
//   magic "ITMC" | u32 version | config block
//   | u64 rows, u64 cols, rows*cols f64 row-major, for rho, alpha, w_in,
//     b_in, w_mu, b_mu, w_logvar, b_logvar
//   | u64 n, n * (u32 len, bytes, f64 df) vocabulary
//   | u64 n, n * f64 loss curve
// beta is recomputed from rho and alpha on load.
void write_model(EtmModel const& model, std::ostream& out);
EtmModel read_model(std::istream& in);

void save_model(EtmModel const& model, std::filesystem::path const& path);
EtmModel load_model(std::filesystem::path const& path);

}  // namespace intopic
