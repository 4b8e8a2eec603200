#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <variant>

#include "bstree/io.hpp"

using namespace bstree;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "bstree_io_test";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("CSV round trip keeps values and header") {
  const auto path = scratch_dir() / "round.csv";
  Eigen::MatrixXd m(3, 2);
  m << 1.5, -2.0, 1e-17, 3.141592653589793, 12345678.125, 0.1;
  write_csv(path, m, {"a", "b"});
  const auto back = read_csv(path);
  CHECK(back.header == std::vector<std::string>{"a", "b"});
  CHECK(back.values == m);
}

TEST_CASE("CSV without header and malformed cells") {
  const auto dir = scratch_dir();
  write_text(dir / "plain.csv", "1,2\n3,4\n");
  const auto plain = read_csv(dir / "plain.csv", false);
  CHECK(plain.values.rows() == 2);
  CHECK(plain.values(1, 0) == 3.0);
  CHECK(plain.header.empty());

  write_text(dir / "bad.csv", "x,y\n1,oops\n");
  try {
    read_csv(dir / "bad.csv");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("oops") != std::string::npos);
  }
  write_text(dir / "ragged.csv", "x,y\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(dir / "ragged.csv"), std::runtime_error);
  CHECK_THROWS_AS(read_csv(dir / "missing.csv"), std::runtime_error);
}

TEST_CASE("tree files use one-based indices") {
  const auto path = scratch_dir() / "tree.csv";
  const auto tree = SpanningTree::from_edges(4, {{2, 0}, {0, 1}, {3, 1}});
  write_tree_csv(path, tree);
  std::ifstream in(path);
  std::string first;
  std::string second;
  std::getline(in, first);
  std::getline(in, second);
  CHECK(first == "j,k");
  CHECK(second == "1,2");
  CHECK(read_tree_csv(path, 4).same_edges(tree));
  CHECK_THROWS(read_tree_csv(path, 3));
}

TEST_CASE("model configuration") {
  SUBCASE("defaults") {
    const auto cfg = parse_model_config(nlohmann::json::object(), 4);
    CHECK(cfg.alpha == 5.0);
    CHECK_FALSE(cfg.tau_init);
    CHECK(std::holds_alternative<UniformPrior>(cfg.prior));
    CHECK(read_model_config({}, 4).alpha == 5.0);
  }
  SUBCASE("inline edge prior") {
    const auto j = nlohmann::json::parse(
        R"({"alpha": 3, "tau_init": 0.5,
            "prior": {"kind": "edge", "params": {"eta": [[1,1,0],[1,1,1],[0,1,1]]}}})");
    const auto cfg = parse_model_config(j, 3);
    CHECK(cfg.alpha == 3.0);
    CHECK(*cfg.tau_init == 0.5);
    REQUIRE(std::holds_alternative<EdgePrior>(cfg.prior));
    CHECK(std::get<EdgePrior>(cfg.prior).eta(0, 2) == 0.0);
  }
  SUBCASE("eta file next to the config") {
    const auto dir = scratch_dir() / "cfg";
    fs::create_directories(dir);
    write_text(dir / "eta.csv", "1,0.5\n0.5,1\n");
    write_text(dir / "model.json", R"({"prior": {"kind": "edge", "params": {"eta_file": "eta.csv"}}})");
    const auto cfg = read_model_config(dir / "model.json", 2);
    CHECK(std::get<EdgePrior>(cfg.prior).eta(0, 1) == 0.5);
  }
  SUBCASE("degree prior") {
    const auto j = nlohmann::json::parse(R"({"prior": {"kind": "degree", "params": {"alpha_dir": 2}}})");
    const auto cfg = parse_model_config(j, 4);
    const auto& d = std::get<DegreePrior>(cfg.prior);
    CHECK(d.alpha_dir == 2.0);
    CHECK(d.v.isApprox(Eigen::VectorXd::Constant(4, 0.25)));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(parse_model_config(nlohmann::json::parse(R"({"alpha": -1})"), 3), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_config(nlohmann::json::parse(R"({"tau_init": 0})"), 3), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_config(nlohmann::json::parse(R"({"prior": {"kind": "magic"}})"), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_model_config(nlohmann::json::parse(R"({"prior": {"kind": "edge"}})"), 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        parse_model_config(nlohmann::json::parse(R"({"prior": {"kind": "degree", "params": {"v": [0.5, 0.5]}}})"), 3),
        std::invalid_argument);
    const auto bad = scratch_dir() / "broken.json";
    write_text(bad, "{not json");
    CHECK_THROWS_AS(read_model_config(bad, 3), std::runtime_error);
  }
}

TEST_CASE("JSON helpers") {
  const auto path = scratch_dir() / "x.json";
  write_json(path, {{"a", 1}, {"b", {1, 2}}});
  const auto back = read_json(path);
  CHECK(back.at("a") == 1);
  const auto t = tree_to_json(SpanningTree::from_edges(3, {{0, 1}, {1, 2}}));
  CHECK(t.dump() == "[[1,2],[2,3]]");
}
