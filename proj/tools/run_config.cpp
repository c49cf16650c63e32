#include "run_config.hpp"

#include <sstream>

#include "qpar/errors.hpp"

namespace qpar::cli {

namespace {

template <class T>
void put_opt(nlohmann::ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
  else j[key] = nullptr;
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["command"] = c.command;
  j["scene"] = c.scene;
  j["testbed"] = c.testbed;
  j["eigenpair"] = c.eigenpair;
  j["variant"] = c.variant;
  j["probe"] = c.probe;
  put_opt(j, "alpha", c.alpha);
  j["alphas"] = c.alphas;
  if (c.window_center)
    j["window_center"] = {c.window_center->real(), c.window_center->imag()};
  else
    j["window_center"] = nullptr;
  put_opt(j, "window_radius", c.window_radius);
  j["count"] = c.count;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  put_opt(j, "tol_eigen", c.tol_eigen);
  put_opt(j, "tol_alpha", c.tol_alpha);
  put_opt(j, "dead_band", c.dead_band);
  j["delta1"] = c.delta1;
  j["delta2"] = c.delta2;
  j["steps"] = c.steps;
  j["max_iterations"] = c.max_iterations;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.scene = j.value("scene", "");
  c.testbed = j.value("testbed", "");
  c.eigenpair = j.value("eigenpair", "");
  c.variant = j.value("variant", "");
  c.probe = j.value("probe", "");
  c.alpha = get_opt<double>(j, "alpha");
  c.alphas = j.value("alphas", std::vector<double>{});
  if (j.contains("window_center") && !j["window_center"].is_null()) {
    const auto w = j["window_center"].get<std::vector<double>>();
    if (w.size() != 2) throw Error("window_center must hold two numbers");
    c.window_center = std::complex<double>(w[0], w[1]);
  }
  c.window_radius = get_opt<double>(j, "window_radius");
  c.count = j.value("count", 1);
  c.seed = j.value("seed", std::uint64_t{1});
  c.threads = j.value("threads", 1);
  c.out_dir = j.value("out_dir", ".");
  c.tol_eigen = get_opt<double>(j, "tol_eigen");
  c.tol_alpha = get_opt<double>(j, "tol_alpha");
  c.dead_band = get_opt<double>(j, "dead_band");
  c.delta1 = j.value("delta1", 0.1);
  c.delta2 = j.value("delta2", 0.1);
  c.steps = j.value("steps", std::vector<double>{});
  c.max_iterations = j.value("max_iterations", 300);
  return c;
}

std::complex<double> parse_complex(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() == 1) return {v[0], 0.0};
  if (v.size() == 2) return {v[0], v[1]};
  throw Error("expected 're,im', got '" + s + "'");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw Error("not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw Error("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error("empty list");
  return out;
}

}  // namespace qpar::cli
