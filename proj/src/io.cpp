#include "vcm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "vcm/error.hpp"
#include "vcm/hash.hpp"

namespace vcm {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

namespace io {

using nlohmann::json;

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

std::vector<Emission> parse_pairs(const json& arr, const char* field) {
  if (!arr.is_array()) throw ParseError(std::string("'") + field + "' must be an array");
  std::vector<Emission> out;
  out.reserve(arr.size());
  for (const json& pair : arr) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
        !pair[1].is_number())
      throw ParseError(std::string("'") + field + "' entries must be [blank, keep] pairs");
    out.push_back({pair[0].get<double>(), pair[1].get<double>()});
  }
  return out;
}

json pairs_to_json(std::span<const Emission> pairs) {
  json arr = json::array();
  for (const Emission& e : pairs) arr.push_back({e.blank, e.keep});
  return arr;
}

bool parse_row(std::string_view line, std::vector<double>& row) {
  row.clear();
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) comma = line.size();
    std::string_view cell = line.substr(pos, comma - pos);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
      cell.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) return false;
    row.push_back(value);
    pos = comma + 1;
  }
  return true;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_number(double value, std::optional<int> precision) {
  if (!precision) return format_double(value);
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, *precision);
  if (ec != std::errc{}) return format_double(value);
  return std::string(buf, ptr);
}

std::string matrix_to_csv(const Matrix& m, std::optional<int> precision,
                          bool index_header) {
  std::string out;
  if (index_header) {
    out += "t";
    for (std::size_t c = 0; c < m.cols(); ++c) out += "," + std::to_string(c + 1);
    out += "\n";
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (index_header) out += std::to_string(r + 1) + ",";
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out += ",";
      out += format_number(m(r, c), precision);
    }
    out += "\n";
  }
  return out;
}

Matrix parse_csv_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  bool first = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    if (!parse_row(line, row)) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw ParseError("CSV line " + std::to_string(line_no) + " is not numeric");
    }
    first = false;
    rows.push_back(row);
  }
  if (rows.empty()) throw ParseError("CSV contains no numeric rows");
  return Matrix::from_rows(rows);
}

Sequence parse_sequence(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw ParseError("sequence must be a JSON object");
  const bool has_probs = doc.contains("probs");
  const bool has_logits = doc.contains("logits");
  if (has_probs == has_logits)
    throw ParseError("sequence needs exactly one of 'probs' or 'logits'");
  if (has_probs) return EmissionSequence(parse_pairs(doc["probs"], "probs"));
  return LogitSequence(parse_pairs(doc["logits"], "logits"));
}

EmissionSequence to_emissions(const Sequence& seq) {
  if (const auto* em = std::get_if<EmissionSequence>(&seq)) return *em;
  return std::get<LogitSequence>(seq).softmax();
}

std::string emissions_to_json(const EmissionSequence& em) {
  return json{{"probs", pairs_to_json(em.probs())}}.dump();
}

std::string logits_to_json(const LogitSequence& logits) {
  return json{{"logits", pairs_to_json(logits.logits())}}.dump();
}

std::string segments_to_json(const ConceptSegments& segments) {
  json spans = json::array();
  for (const Span& s : segments.spans) spans.push_back({s.start, s.end});
  json concepts = json::array();
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto row = segments.concepts.row(k);
    concepts.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json doc = {{"concepts", concepts},
              {"spans", spans},
              {"masses", segments.masses}};
  return doc.dump();
}

ConceptSegments parse_segments(std::string_view json_text) {
  const json doc = parse_json(json_text);
  try {
    ConceptSegments out;
    out.concepts = Matrix::from_rows(doc.at("concepts").get<std::vector<std::vector<double>>>());
    for (const json& s : doc.at("spans"))
      out.spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    out.masses = doc.at("masses").get<std::vector<double>>();
    if (out.spans.size() != out.size() || out.masses.size() != out.size())
      throw ParseError("concepts, spans and masses must have equal lengths");
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed segments: ") + e.what());
  }
}

AppConfig parse_config(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw ParseError("config must be a JSON object");
  AppConfig cfg;
  try {
    cfg.length.info_scale = doc.value("S", cfg.length.info_scale);
    cfg.length.n_key_max = doc.value("n_key_max", cfg.length.n_key_max);
    cfg.length.n_key_min = doc.value("n_key_min", cfg.length.n_key_min);
    cfg.length.min_length = doc.value("min_length", cfg.length.min_length);
    cfg.coefficient.a = doc.value("a", cfg.coefficient.a);
    cfg.coefficient.b = doc.value("b", cfg.coefficient.b);
    cfg.coefficient.k = doc.value("k", cfg.coefficient.k);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.width = doc.value("d", cfg.width);
    cfg.heads = doc.value("h", cfg.heads);
    cfg.vocab = doc.value("V", cfg.vocab);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad config field: ") + e.what());
  }
  cfg.length.validate();
  cfg.coefficient.validate();
  return cfg;
}

std::string trace_to_csv(const TrainTrace& trace) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < trace.losses.size(); ++i)
    out += std::to_string(i) + "," + format_double(trace.losses[i]) + "\n";
  return out;
}

std::string diagnostics_to_json(const PipelineDiagnostics& d) {
  json doc = {{"tokens", d.tokens},
              {"keywords", d.keywords},
              {"n_instruction", d.n_instruction},
              {"n_response", d.n_response},
              {"n_key", d.n_key},
              {"concept_length", d.concept_length},
              {"selected_runs", d.selected_runs},
              {"best_path_runs", d.best_path_runs},
              {"runs_match_length", d.runs_match_length},
              {"vcm_loss", d.vcm_loss},
              {"sa_loss", d.sa_loss},
              {"epsilon", d.epsilon},
              {"weighted_vcm_loss", d.weighted_vcm_loss}};
  return doc.dump();
}

std::string fingerprint(const Matrix& m) {
  std::string text = std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ":";
  for (double x : m.data()) text += format_double(x) + ";";
  return fingerprint(text);
}

std::string fingerprint(std::string_view text) { return hex64(fnv1a64(text)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InvalidArgument("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace io
}  // namespace vcm
