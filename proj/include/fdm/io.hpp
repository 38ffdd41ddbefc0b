#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fdm/equilibrium.hpp"
#include "fdm/goals.hpp"
#include "fdm/network.hpp"
#include "fdm/optimizer.hpp"

namespace fdm::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "1.0";

/// User-facing ids. Internal vertex/edge indices are ranks in ascending id order.
class NetworkIds {
 public:
  NetworkIds() = default;
  NetworkIds(std::vector<std::int64_t> vertex_ids, std::vector<std::int64_t> edge_ids);

  const std::vector<std::int64_t>& vertex_ids() const noexcept { return vertex_ids_; }
  const std::vector<std::int64_t>& edge_ids() const noexcept { return edge_ids_; }
  std::optional<Index> vertex_index(std::int64_t id) const;
  std::optional<Index> edge_index(std::int64_t id) const;

  /// Ids equal to the internal indices.
  static NetworkIds sequential(std::size_t vertex_count, std::size_t edge_count);

  friend bool operator==(const NetworkIds& a, const NetworkIds& b) {
    return a.vertex_ids_ == b.vertex_ids_ && a.edge_ids_ == b.edge_ids_;
  }

 private:
  std::vector<std::int64_t> vertex_ids_;
  std::vector<std::int64_t> edge_ids_;
  std::unordered_map<std::int64_t, Index> vertex_lookup_;
  std::unordered_map<std::int64_t, Index> edge_lookup_;
};

struct NetworkDocument {
  FdmNetwork network;
  Theta theta;
  NetworkIds ids;
};

/// Throws ParseError on schema violations and ValidationError when the graph
/// breaks a network invariant. `source` prefixes messages.
NetworkDocument parse_network(const Json& doc, const std::string& source = "network");
NetworkDocument load_network(const std::filesystem::path& path);

/// Canonical NetworkFile JSON. Free vertex coordinates come from `xyz` when
/// given (n x 3), otherwise from the network's reference coordinates.
Json network_to_json(const FdmNetwork& network, const Theta& theta, const NetworkIds& ids,
                     const DenseMatrix* xyz = nullptr);
void save_network(const std::filesystem::path& path, const NetworkDocument& doc);

struct Job {
  NetworkDocument network;
  LossSpec loss;
  OptimizerConfig config;
};

Job parse_job(const Json& doc, const std::filesystem::path& base_dir, const std::string& source = "job");
Job load_job(const std::filesystem::path& path);

struct ConfigOverrides {
  std::optional<int> max_iterations;
  std::optional<double> learning_rate;
  std::optional<Method> method;
};

/// Command-line values win over job-file values, which win over defaults.
void apply_overrides(OptimizerConfig& config, const ConfigOverrides& overrides);

Json results_to_json(const NetworkDocument& doc, const Theta& theta, const EquilibriumState& state,
                     const OptimizationTrace* trace = nullptr);
void save_results(const std::filesystem::path& path, const NetworkDocument& doc, const Theta& theta,
                  const EquilibriumState& state, const OptimizationTrace* trace = nullptr);

/// Pretty-printed JSON with doubles at 17 significant digits.
std::string format_json(const Json& doc);

/// Parses JSON text; ParseError messages carry line and column.
Json parse_json_text(const std::string& text, const std::string& source);

/// Wavefront OBJ: `v x y z` per vertex in index order, `l a b` per edge, 1-based.
std::string obj_string(const FdmNetwork& network, const EquilibriumState& state);
void export_obj(const std::filesystem::path& path, const FdmNetwork& network, const EquilibriumState& state);

}  // namespace fdm::io
