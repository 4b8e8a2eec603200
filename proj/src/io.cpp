#include "bstree/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bstree {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, int line) {
  if (cell == "inf" || cell == "Inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf" || cell == "-Inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": '" + cell +
                             "' is not a number");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (has_header && table.header.empty() && rows.empty()) {
      table.header = cells;
      width = cells.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields, found " +
                               std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, path, line_no));
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& header) {
  auto out = open_out(path);
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << values(r, c);
    out << '\n';
  }
}

void write_tree_csv(const std::filesystem::path& path, const SpanningTree& tree) {
  auto out = open_out(path);
  out << "j,k\n";
  for (const auto& e : tree.sorted_edges()) out << e.j + 1 << ',' << e.k + 1 << '\n';
}

SpanningTree read_tree_csv(const std::filesystem::path& path, int p) {
  const auto table = read_csv(path, true);
  if (table.values.cols() != 2) throw std::runtime_error(path.string() + ": expected columns j,k");
  std::vector<Edge> edges;
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    const double a = table.values(r, 0);
    const double b = table.values(r, 1);
    if (a != std::floor(a) || b != std::floor(b)) {
      throw std::runtime_error(path.string() + ": node indices must be integers");
    }
    edges.emplace_back(static_cast<int>(a) - 1, static_cast<int>(b) - 1);
  }
  return SpanningTree::from_edges(p, std::move(edges));
}

ModelConfig parse_model_config(const nlohmann::json& j, int p,
                               const std::filesystem::path& base_dir) {
  ModelConfig cfg;
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("tau_init") && !j.at("tau_init").is_null()) {
    cfg.tau_init = j.at("tau_init").get<double>();
  }
  if (j.contains("prior")) {
    const auto& prior = j.at("prior");
    const std::string kind = prior.value("kind", std::string("uniform"));
    const nlohmann::json params = prior.value("params", nlohmann::json::object());
    if (kind == "uniform") {
      cfg.prior = UniformPrior{};
    } else if (kind == "edge") {
      EdgePrior e;
      if (params.contains("eta")) {
        const auto rows = params.at("eta").get<std::vector<std::vector<double>>>();
        e.eta.resize(static_cast<Eigen::Index>(rows.size()), p);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (static_cast<int>(rows[r].size()) != p) throw std::invalid_argument("eta must be p x p");
          for (int c = 0; c < p; ++c) e.eta(static_cast<Eigen::Index>(r), c) = rows[r][c];
        }
      } else if (params.contains("eta_file")) {
        std::filesystem::path file = params.at("eta_file").get<std::string>();
        if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
        e.eta = read_csv(file, false).values;
      } else {
        throw std::invalid_argument("edge prior needs params.eta or params.eta_file");
      }
      cfg.prior = std::move(e);
    } else if (kind == "degree") {
      DegreePrior d;
      d.alpha_dir = params.value("alpha_dir", 1.0);
      if (params.contains("v")) {
        const auto v = params.at("v").get<std::vector<double>>();
        d.v = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else {
        d.v = Eigen::VectorXd::Constant(p, 1.0 / p);
      }
      cfg.prior = std::move(d);
    } else {
      throw std::invalid_argument("unknown prior kind '" + kind + "'");
    }
  }
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (cfg.tau_init && !(*cfg.tau_init > 0.0)) throw std::invalid_argument("tau_init must be positive");
  validate_prior(cfg.prior, p);
  return cfg;
}

ModelConfig read_model_config(const std::filesystem::path& path, int p) {
  if (path.empty()) return parse_model_config(nlohmann::json::object(), p);
  return parse_model_config(read_json(path), p, path.parent_path());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

nlohmann::json tree_to_json(const SpanningTree& tree) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : tree.sorted_edges()) edges.push_back({e.j + 1, e.k + 1});
  return edges;
}

}  // namespace bstree
