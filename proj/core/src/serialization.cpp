#include "netobs/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "netobs/errors.hpp"

namespace netobs {

namespace {

std::string mode_name(ScheduleMode mode) {
  return mode == ScheduleMode::kRoundRobin ? "round_robin" : "concentrated";
}

ScheduleMode mode_from_name(const std::string& name, const std::string& where) {
  if (name == "round_robin") return ScheduleMode::kRoundRobin;
  if (name == "concentrated") return ScheduleMode::kConcentrated;
  throw ConfigError(where + ": unknown mode '" + name + "'");
}

void append_matrix(std::string* out, const Eigen::MatrixXd& m, const std::string& pad) {
  *out += "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) *out += ",";
    *out += "\n" + pad + "  [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) *out += ", ";
      *out += format_double(m(r, c));
    }
    *out += "]";
  }
  *out += "\n" + pad + "]";
}

void append_table(std::string* out, const std::vector<std::vector<Eigen::MatrixXd>>& table,
                  const std::string& pad) {
  *out += "[";
  for (std::size_t s = 0; s < table.size(); ++s) {
    if (s > 0) *out += ",";
    *out += "\n" + pad + "  [";
    for (std::size_t d = 0; d < table[s].size(); ++d) {
      if (d > 0) *out += ", ";
      append_matrix(out, table[s][d], pad + "  ");
    }
    *out += "]";
  }
  *out += "\n" + pad + "]";
}

Eigen::MatrixXd parse_matrix(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.empty()) {
      throw ConfigError(where + ": row " + std::to_string(r) + " is not a nonempty array");
    }
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw ConfigError(where + ": row " + std::to_string(r) + " has " +
                        std::to_string(row.size()) + " entries, expected " +
                        std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ConfigError(where + ": entry (" + std::to_string(r) + ", " +
                          std::to_string(c) + ") is not a number");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

std::vector<std::vector<Eigen::MatrixXd>> parse_table(const nlohmann::json& j,
                                                      const std::string& where, int stages,
                                                      int depth, Eigen::Index rows,
                                                      Eigen::Index cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != stages) {
    throw ConfigError(where + ": expected " + std::to_string(stages) + " stage entries");
  }
  std::vector<std::vector<Eigen::MatrixXd>> table(static_cast<std::size_t>(stages));
  for (int s = 0; s < stages; ++s) {
    const auto& row = j[static_cast<std::size_t>(s)];
    if (!row.is_array() || static_cast<int>(row.size()) != depth) {
      throw ConfigError(where + "[" + std::to_string(s) + "]: expected " +
                        std::to_string(depth) + " entries");
    }
    for (int d = 0; d < depth; ++d) {
      const std::string at = where + "[" + std::to_string(s) + "][" + std::to_string(d) + "]";
      Eigen::MatrixXd m = parse_matrix(row[static_cast<std::size_t>(d)], at);
      if (m.rows() != rows || m.cols() != cols) {
        throw ConfigError(at + ": expected a " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " matrix");
      }
      table[static_cast<std::size_t>(s)].push_back(std::move(m));
    }
  }
  return table;
}

nlohmann::json parse_document(const std::string& text, const std::string& what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError(what + ": malformed JSON");
  if (!j.is_object()) throw ConfigError(what + ": top level must be an object");
  return j;
}

int require_int(const nlohmann::json& j, const std::string& field, const std::string& what) {
  if (!j.contains(field) || !j[field].is_number_integer()) {
    throw ConfigError(what + ": missing integer field '" + field + "'");
  }
  return j[field].get<int>();
}

double require_number(const nlohmann::json& j, const std::string& field,
                      const std::string& what) {
  if (!j.contains(field) || !j[field].is_number()) {
    throw ConfigError(what + ": missing numeric field '" + field + "'");
  }
  return j[field].get<double>();
}

std::string require_string(const nlohmann::json& j, const std::string& field,
                           const std::string& what) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw ConfigError(what + ": missing string field '" + field + "'");
  }
  return j[field].get<std::string>();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string gains_to_json(const GainSchedule& gains) {
  const Eigen::Index n = gains.gains.empty() || gains.gains.front().empty()
                             ? 0
                             : gains.gains.front().front().rows();
  const Eigen::Index w = gains.gains.empty() || gains.gains.front().empty()
                             ? 0
                             : gains.gains.front().front().cols();
  std::string out = "{\n";
  out += "  \"mode\": \"" + mode_name(gains.mode) + "\",\n";
  out += "  \"state_dim\": " + std::to_string(n) + ",\n";
  out += "  \"width\": " + std::to_string(w) + ",\n";
  out += "  \"stages\": " + std::to_string(gains.stages()) + ",\n";
  out += "  \"depth\": " + std::to_string(gains.depth()) + ",\n";
  out += "  \"gains\": ";
  append_table(&out, gains.gains, "  ");
  out += "\n}\n";
  return out;
}

GainSchedule gains_from_json(const std::string& text) {
  const nlohmann::json j = parse_document(text, "gain schedule");
  GainSchedule gains;
  gains.mode = mode_from_name(require_string(j, "mode", "gain schedule"), "gain schedule");
  const int n = require_int(j, "state_dim", "gain schedule");
  const int w = require_int(j, "width", "gain schedule");
  const int stages = require_int(j, "stages", "gain schedule");
  const int depth = require_int(j, "depth", "gain schedule");
  if (n < 1 || w < 1 || stages < 1 || depth < 1) {
    throw ConfigError("gain schedule: dimensions must be positive");
  }
  if (!j.contains("gains")) throw ConfigError("gain schedule: missing field 'gains'");
  gains.gains = parse_table(j["gains"], "gains", stages, depth, n, w);
  return gains;
}

void write_gains_json(const GainSchedule& gains, const std::string& path) {
  spill_file(path, gains_to_json(gains));
}

GainSchedule read_gains_json(const std::string& path) {
  return gains_from_json(slurp_file(path));
}

std::string certificate_to_json(const Certificate& cert) {
  const Eigen::Index n = cert.P.empty() || cert.P.front().empty()
                             ? 0
                             : cert.P.front().front().rows();
  const Eigen::Index w = cert.G.empty() || cert.G.front().empty()
                             ? 0
                             : cert.G.front().front().cols();
  std::string out = "{\n";
  out += "  \"mode\": \"" + mode_name(cert.mode) + "\",\n";
  out += "  \"feasibility_margin\": " + format_double(cert.feasibility_margin) + ",\n";
  out += "  \"state_dim\": " + std::to_string(n) + ",\n";
  out += "  \"width\": " + std::to_string(w) + ",\n";
  out += "  \"stages\": " + std::to_string(cert.stages()) + ",\n";
  out += "  \"depth\": " + std::to_string(cert.depth()) + ",\n";
  out += "  \"P\": ";
  append_table(&out, cert.P, "  ");
  out += ",\n  \"X\": ";
  append_table(&out, cert.X, "  ");
  out += ",\n  \"G\": ";
  append_table(&out, cert.G, "  ");
  out += "\n}\n";
  return out;
}

Certificate certificate_from_json(const std::string& text) {
  const nlohmann::json j = parse_document(text, "certificate");
  Certificate cert;
  cert.mode = mode_from_name(require_string(j, "mode", "certificate"), "certificate");
  cert.feasibility_margin = require_number(j, "feasibility_margin", "certificate");
  const int n = require_int(j, "state_dim", "certificate");
  const int w = require_int(j, "width", "certificate");
  const int stages = require_int(j, "stages", "certificate");
  const int depth = require_int(j, "depth", "certificate");
  if (n < 1 || w < 1 || stages < 1 || depth < 1) {
    throw ConfigError("certificate: dimensions must be positive");
  }
  for (const char* field : {"P", "X", "G"}) {
    if (!j.contains(field)) {
      throw ConfigError(std::string("certificate: missing field '") + field + "'");
    }
  }
  cert.P = parse_table(j["P"], "P", stages, depth, n, n);
  cert.X = parse_table(j["X"], "X", stages, depth, n, n);
  cert.G = parse_table(j["G"], "G", stages, depth, n, w);
  return cert;
}

void write_certificate_json(const Certificate& cert, const std::string& path) {
  spill_file(path, certificate_to_json(cert));
}

Certificate read_certificate_json(const std::string& path) {
  return certificate_from_json(slurp_file(path));
}

std::string verification_to_json(const VerificationReport& report) {
  std::string out = "{\n";
  out += std::string("  \"pass\": ") + (report.pass ? "true" : "false") + ",\n";
  out += "  \"min_p_eigenvalue\": " + format_double(report.min_p_eigenvalue) + ",\n";
  out += "  \"worst_decrease\": " + format_double(report.worst_decrease) + ",\n";
  out += "  \"num_decrease_tests\": " + std::to_string(report.num_decrease_tests) + ",\n";
  out += "  \"worst_stage\": " + std::to_string(report.worst_stage) + ",\n";
  out += "  \"worst_gap\": " + std::to_string(report.worst_gap) + ",\n";
  out += "  \"worst_next_gap\": " + std::to_string(report.worst_next_gap) + "\n";
  out += "}\n";
  return out;
}

void write_verification_json(const VerificationReport& report, const std::string& path) {
  spill_file(path, verification_to_json(report));
}

std::string slurp_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return buffer.str();
}

void spill_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << content;
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace netobs
