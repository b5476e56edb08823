#pragma once

// Configuration files, binary snapshots, the CSV ledger and JSON reports.
//
// Snapshot layout (little-endian throughout):
//   "MAGG" | u32 version = 1 | u32 n | f64 box_length | f64 time | u32 field_count
//   then per field: u32 name length | UTF-8 name | n*n f64 values, row-major.
// Fields written: phi, u_x, u_y, omega. mu and p are recomputed on load.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "magg/cahn_hilliard.hpp"
#include "magg/diagnostics.hpp"
#include "magg/simulation.hpp"

namespace magg {

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Parses and validates a configuration. Unknown keys, wrong types and
/// violated invariants raise ConfigError naming the field; malformed JSON
/// reports line and column.
SimConfig parse_config(std::string_view text);
SimConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text with every field spelled out.
std::string serialize_config(const SimConfig& config);

/// SHA-256 hex digest of serialize_config(config).
std::string config_digest(const SimConfig& config);

struct SnapshotData {
  int n = 0;
  double box_length = 0.0;
  double time = 0.0;
  std::vector<std::pair<std::string, std::vector<double>>> fields;
};

std::string encode_snapshot(const State& state);
SnapshotData decode_snapshot(std::string_view bytes);

void write_snapshot(const State& state, const std::filesystem::path& path);
SnapshotData read_snapshot_data(const std::filesystem::path& path);
State read_snapshot(const std::filesystem::path& path, const ModelParams& params,
                    DealiasRule rule = DealiasRule::TwoThirds);

/// RFC 4180 text with CRLF line ends and 17 significant digits.
std::string ledger_csv(const EnergyLedger& ledger);
void write_ledger_csv(const EnergyLedger& ledger, const std::filesystem::path& path);

std::string sweep_report_json(const SweepReport& report, const std::string& digest);
std::string energy_order_json(const EnergyOrderReport& report);
std::string convergence_json(const ConvergenceReport& report);
std::string mollifier_json(const MollifierReport& report);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace magg
