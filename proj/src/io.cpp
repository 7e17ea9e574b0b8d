#include "dpcp/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dpcp {
namespace {

std::string location(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

// Splits on commas; empty fields are preserved.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& field, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || field.empty() || errno == ERANGE ||
      !std::isfinite(v))
    throw ParseError(where + ": field '" + field + "' is not a finite number");
  return v;
}

long parse_count(const std::string& field, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size() || field.empty() || errno == ERANGE || v < 0)
    throw ParseError(where + ": field '" + field + "' is not a nonnegative integer");
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ObservationSet read_observations(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  const std::vector<std::string> header = split_fields(lines[0]);
  if (header.size() != 2)
    throw ParseError(location(path, 1) + ": header must be 'rows,cols'");
  const long rows = parse_count(header[0], location(path, 1));
  const long cols = parse_count(header[1], location(path, 1));
  if (lines.size() != static_cast<std::size_t>(rows) + 1)
    throw ParseError(path + ": expected " + std::to_string(rows) + " data lines, got " +
                     std::to_string(lines.size() - 1));

  ObservationSet obs;
  obs.values = Matrix::Zero(rows, cols);
  obs.mask = Matrix::Zero(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const std::string& where = location(path, static_cast<std::size_t>(i) + 2);
    const std::vector<std::string> fields = split_fields(lines[static_cast<std::size_t>(i) + 1]);
    if (fields.size() != static_cast<std::size_t>(cols))
      throw ParseError(where + ": expected " + std::to_string(cols) + " fields, got " +
                       std::to_string(fields.size()));
    for (long j = 0; j < cols; ++j) {
      const std::string& f = fields[static_cast<std::size_t>(j)];
      if (f.empty()) continue;
      obs.values(i, j) = parse_field(f, where);
      obs.mask(i, j) = 1.0;
    }
  }
  return obs;
}

Matrix read_matrix(const std::string& path) {
  ObservationSet obs = read_observations(path);
  if ((obs.mask.array() != 1.0).any())
    throw ValidationError(path + ": matrix has unobserved entries");
  return std::move(obs.values);
}

void write_matrix(const std::string& path, const Matrix& a, const Matrix* mask) {
  if (mask != nullptr && (mask->rows() != a.rows() || mask->cols() != a.cols()))
    throw ValidationError("write_matrix: mask shape mismatch");
  std::ostringstream out;
  out << a.rows() << "," << a.cols() << "\n";
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ",";
      if (mask == nullptr || (*mask)(i, j) != 0.0) out << format_double(a(i, j));
    }
    out << "\n";
  }
  write_text(path, out.str());
}

MeterGraph read_graph(const std::string& path) {
  const nlohmann::json j = read_json(path);
  if (!j.is_object() || !j.contains("n") || !j.contains("edges") ||
      !j["n"].is_number_integer() || !j["edges"].is_array())
    throw ParseError(path + ": expected {\"n\": int, \"edges\": [[i,j],...]}");
  const int n = j["n"].get<int>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer())
      throw ParseError(path + ": edge must be a pair of integers");
    const int a = e[0].get<int>();
    const int b = e[1].get<int>();
    if (a >= b) throw ValidationError(path + ": edge endpoints must satisfy i < j");
    edges.emplace_back(a, b);
  }
  MeterGraph g = make_graph(n, std::move(edges));
  if (!is_connected(g)) throw ValidationError(path + ": graph is not connected");
  return g;
}

void write_graph(const std::string& path, const MeterGraph& g) {
  nlohmann::json j;
  j["n"] = g.n_nodes;
  j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : g.edges) j["edges"].push_back({a, b});
  write_json(path, j);
}

Matrix downsample(const Matrix& a, int factor) {
  if (factor < 1) throw ValidationError("downsample: factor must be >= 1");
  const Index kept = (a.cols() + factor - 1) / factor;
  Matrix out(a.rows(), kept);
  for (Index j = 0; j < kept; ++j) out.col(j) = a.col(j * factor);
  return out;
}

void write_dpcp_trace(const std::string& path, const std::vector<RoundTrace>& traces) {
  std::ostringstream out;
  const std::size_t n = traces.empty() ? 0 : traces[0].consensus.size();
  out << "k,e_X,e_O,consensus_max,objective";
  for (std::size_t i = 0; i < n; ++i) out << ",consensus_node" << i;
  out << "\n";
  for (const RoundTrace& tr : traces) {
    out << tr.k << ",";
    if (tr.e_X) out << format_double(*tr.e_X);
    out << ",";
    if (tr.e_O) out << format_double(*tr.e_O);
    out << "," << format_double(tr.consensus_max) << "," << format_double(tr.objective);
    for (double c : tr.consensus) out << "," << format_double(c);
    out << "\n";
  }
  write_text(path, out.str());
}

void write_central_trace(const std::string& path, const PcpSolution& sol) {
  std::ostringstream out;
  out << "iter,objective,spectral_gap,inf_gap\n";
  for (std::size_t i = 0; i < sol.objective_trace.size(); ++i) {
    out << i << "," << format_double(sol.objective_trace[i]) << ","
        << format_double(sol.gap_trace[i].spectral_gap) << ","
        << format_double(sol.gap_trace[i].inf_gap) << "\n";
  }
  write_text(path, out.str());
}

nlohmann::json to_json(const ErrorReport& r) {
  nlohmann::json j;
  j["e_X"] = r.e_X;
  j["e_O"] = r.e_O;
  if (r.imputation_rel)
    j["imputation_rel"] = *r.imputation_rel;
  else
    j["imputation_rel"] = nullptr;
  j["precision"] = r.support.precision;
  j["recall"] = r.support.recall;
  j["f1"] = r.support.f1;
  j["support_threshold"] = r.support_threshold;
  return j;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dpcp
