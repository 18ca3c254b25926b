// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GELCAL_TABLE_HPP_
#define GELCAL_TABLE_HPP_

#include <string>

#include "gelcal/simulation.hpp"

namespace gelcal {

/// Reproducibility metadata carried in every emitted table.  No wall-clock
/// fields: identical runs must emit identical bytes.
struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version;
};

/// 64-bit FNV-1a, hex encoded; used to fingerprint configurations.
std::string fnv1a_hex(const std::string& text);

std::string mc_table_csv(const McTable& table, const Provenance& prov);
std::string mc_table_markdown(const McTable& table, const Provenance& prov);

std::string resampling_table_csv(const ResamplingTable& table, const Provenance& prov);
std::string resampling_table_markdown(const ResamplingTable& table, const Provenance& prov);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace gelcal

#endif  // GELCAL_TABLE_HPP_
