#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dpcp/central.hpp"
#include "dpcp/common.hpp"
#include "dpcp/distributed.hpp"
#include "dpcp/graph.hpp"
#include "dpcp/metrics.hpp"

namespace dpcp {

// 17 significant digits; doubles survive a text round trip bit-for-bit.
std::string format_double(double v);

// Matrix CSV: header line "rows,cols", then one line per row with
// comma-separated decimal fields. An empty field marks an unobserved entry
// (mask 0, stored value 0).
ObservationSet read_observations(const std::string& path);

// Same format, but every entry must be present.
Matrix read_matrix(const std::string& path);

// mask == nullptr writes every entry; otherwise entries with mask 0 are
// written as empty fields.
void write_matrix(const std::string& path, const Matrix& a,
                  const Matrix* mask = nullptr);

// {"n": N, "edges": [[i, j], ...]} with 0 <= i < j < N; the loaded graph must
// be connected.
MeterGraph read_graph(const std::string& path);
void write_graph(const std::string& path, const MeterGraph& g);

// Keeps columns 0, factor, 2*factor, ... (trailing remainder dropped).
Matrix downsample(const Matrix& a, int factor);

// Header: k,e_X,e_O,consensus_max,objective,consensus_node0,... Optional
// error fields are written empty when no ground truth was supplied.
void write_dpcp_trace(const std::string& path, const std::vector<RoundTrace>& traces);

// Header: iter,objective,spectral_gap,inf_gap with iter 0 the initial point.
void write_central_trace(const std::string& path, const PcpSolution& sol);

nlohmann::json to_json(const ErrorReport& r);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace dpcp
