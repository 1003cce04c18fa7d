#pragma once

// Text formats: JSON objects for sequences, segments, configs and
// diagnostics; CSV for matrices and loss traces.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "vcm/alignment.hpp"
#include "vcm/attention.hpp"
#include "vcm/concept.hpp"
#include "vcm/length_policy.hpp"
#include "vcm/matrix.hpp"
#include "vcm/trainer.hpp"

namespace vcm::io {

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Fixed-point with `precision` decimals when set, shortest round-trip otherwise.
std::string format_number(double value, std::optional<int> precision);

// Rows of comma-separated numbers. With `index_header`, a header row
// "t,1,2,...,n" is written and each row is prefixed by its 1-based index.
std::string matrix_to_csv(const Matrix& m, std::optional<int> precision = {},
                          bool index_header = false);

// Numeric CSV; blank lines are skipped and a non-numeric first line is treated
// as a header. Throws ParseError / DimensionMismatch.
Matrix parse_csv_matrix(std::string_view text);

using Sequence = std::variant<EmissionSequence, LogitSequence>;

// {"probs": [[p_blank, p_keep], ...]} or {"logits": [[u_blank, u_keep], ...]}
Sequence parse_sequence(std::string_view json_text);
EmissionSequence to_emissions(const Sequence& seq);

std::string emissions_to_json(const EmissionSequence& em);
std::string logits_to_json(const LogitSequence& logits);

// {"concepts": [[...], ...], "spans": [[start, end], ...], "masses": [...]}
std::string segments_to_json(const ConceptSegments& segments);
ConceptSegments parse_segments(std::string_view json_text);

struct AppConfig {
  LengthConfig length;
  CoefficientParams coefficient;
  std::uint64_t seed = 0;
  std::size_t width = 32;
  std::size_t heads = 16;
  std::size_t vocab = 64;
};

// Every field optional: {"S", "a", "b", "k", "n_key_max", "n_key_min",
// "min_length", "seed", "d", "h", "V"}.
AppConfig parse_config(std::string_view json_text);

std::string trace_to_csv(const TrainTrace& trace);

std::string diagnostics_to_json(const PipelineDiagnostics& diag);

// Hex FNV-1a over the shortest round-trip rendering of every entry.
std::string fingerprint(const Matrix& m);
std::string fingerprint(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary and renames, so readers never observe a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace vcm::io
