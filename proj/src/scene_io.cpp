#include "qpar/scene_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"

namespace qpar {

namespace {

constexpr std::uint32_t kSceneVersion = 1;

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open family config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error("family config is missing '" + key + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("family config value for '" + key + "' is not a number");
  }
}

}  // namespace

std::filesystem::path family_config_path(const std::filesystem::path& scene_path) {
  return std::filesystem::path(scene_path.string() + ".cfg");
}

void write_scene(const std::filesystem::path& path, const MaterialScene& scene) {
  const auto& g = scene.grid();
  const auto& fam = scene.family();
  BinaryWriter w;
  w.magic("QPAR");
  w.u32(kSceneVersion);
  for (int a = 0; a < 3; ++a) w.u32(std::uint32_t(g.dim(a)));
  for (int a = 0; a < 3; ++a) w.f64(g.spacing(a));
  for (int a = 0; a < 3; ++a) w.f64(g.origin()[a]);
  w.f64s(scene.eps());
  w.f64s(scene.sigma());
  w.f64s(fam.eps_out);
  w.u8s(scene.opt().cells);
  for (int s = 0; s < 6; ++s) {
    w.u32(std::uint32_t(scene.side(s).kind));
    if (scene.side(s).kind == BoundaryKind::Impedance) w.f64s(scene.side(s).impedance);
  }
  if (fam.kind != FamilyKind::Full3D) w.u8s(fam.cross_section);
  w.save(path);

  std::ofstream cfg(family_config_path(path));
  if (!cfg) throw Error("cannot write family config for " + path.string());
  cfg.precision(17);
  cfg << "family = " << to_string(fam.kind) << "\n";
  cfg << "eps_minus = " << fam.eps_minus << "\n";
  cfg << "eps_plus = " << fam.eps_plus << "\n";
  cfg << "c_minus = " << fam.c_minus << "\n";
  cfg << "c_plus = " << fam.c_plus << "\n";
}

MaterialScene read_scene(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("QPAR");
  if (r.u32() != kSceneVersion) throw Error("unsupported scene version in " + path.string());
  std::array<int, 3> dims{};
  std::array<double, 3> spacing{}, origin{};
  for (auto& d : dims) d = int(r.u32());
  for (auto& h : spacing) h = r.f64();
  for (auto& o : origin) o = r.f64();
  Grid grid(dims, spacing, origin);
  const std::size_t n = grid.cell_count();

  const auto kv = read_key_values(family_config_path(path));
  FeasibleFamily fam;
  const auto kind = kv.find("family");
  if (kind == kv.end()) throw Error("family config is missing 'family'");
  fam.kind = family_kind_from_string(kind->second);
  fam.eps_minus = parse_double(kv, "eps_minus");
  fam.eps_plus = parse_double(kv, "eps_plus");
  fam.c_minus = int(parse_double(kv, "c_minus"));
  fam.c_plus = int(parse_double(kv, "c_plus"));

  auto eps = r.f64s(n);
  auto sigma = r.f64s(n);
  fam.eps_out = r.f64s(n);
  RegionMask mask{r.u8s(n)};
  BoundarySet sides;
  for (int s = 0; s < 6; ++s) {
    const std::uint32_t k = r.u32();
    if (k > 2) throw Error("unknown boundary kind in " + path.string());
    sides[s].kind = BoundaryKind(k);
    if (sides[s].kind == BoundaryKind::Impedance)
      sides[s].impedance = r.f64s(side_face_count(grid, s));
  }
  if (fam.kind != FamilyKind::Full3D)
    fam.cross_section = r.u8s(std::size_t(dims[0]) * dims[1]);
  r.expect_end();
  return MaterialScene(grid, std::move(mask), std::move(fam), std::move(eps), std::move(sigma),
                       std::move(sides));
}

}  // namespace qpar
