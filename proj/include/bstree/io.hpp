#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bstree/edge_weights.hpp"
#include "bstree/graph_core.hpp"

namespace bstree {

struct CsvTable {
  Eigen::MatrixXd values;
  std::vector<std::string> header;
};

/// Numeric CSV; the first row is a header when `has_header` is set.
CsvTable read_csv(const std::filesystem::path& path, bool has_header = true);

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header = {});

/// Edge list with header "j,k" and 1-based node indices, j < k.
void write_tree_csv(const std::filesystem::path& path, const SpanningTree& tree);
SpanningTree read_tree_csv(const std::filesystem::path& path, int p);

/// Settings shared by the mcp, mode and fit subcommands.
struct ModelConfig {
  double alpha = 5.0;
  std::optional<double> tau_init;
  TreePrior prior = UniformPrior{};
};

/// Parses {alpha, tau_init, prior: {kind, params}}. Relative eta_file paths
/// are resolved against the config file's directory. An empty path yields
/// the defaults.
ModelConfig read_model_config(const std::filesystem::path& path, int p);
ModelConfig parse_model_config(const nlohmann::json& j, int p,
                               const std::filesystem::path& base_dir = {});

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json tree_to_json(const SpanningTree& tree);

}  // namespace bstree
