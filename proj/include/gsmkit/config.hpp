#pragma once

// Run configuration and array layout files: INI-style sections of "key = value" lines.

#include "gsmkit/array.hpp"
#include "gsmkit/compression.hpp"
#include "gsmkit/gsm.hpp"
#include "gsmkit/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <type_traits>

namespace gsmkit::config {

namespace pt = boost::property_tree;

struct Sweep {
  double start = 0.0, stop = 0.0;
  int count = 1;

  std::vector<double> frequencies() const {
    std::vector<double> f;
    for (int i = 0; i < count; ++i) f.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    return f;
  }
};

struct VerifyThresholds {
  double unitarity = 1e-2;
  double reciprocity = 1e-12;
  double passivity = 1e-6;
  double circle = 1e-6;
  double reconstruction = 1e-3;
};

struct RunConfig {
  std::filesystem::path source;  // directory that relative paths resolve against
  std::filesystem::path mesh_path;
  Vec3 center = Vec3::Zero();
  std::vector<mom::PortDefinition> ports;
  Sweep sweep;
  mom::Formulation formulation = mom::Formulation::electric;
  std::optional<int> l_max;  // empty means the truncation rule
  int far_points = mom::AssemblyOptions{}.far_points;
  double iota = compression::default_iota;
  compression::Kind kind = compression::Kind::eigen;
  int trials = 100;
  std::uint64_t seed = 20240607;
  std::filesystem::path output_dir = ".";
  std::string prefix = "gsm";
  VerifyThresholds verify;
  std::string hash;  // SHA-256 of the canonical key/value listing

  gsm::SolveOptions solve_options() const {
    gsm::SolveOptions o;
    o.formulation = formulation;
    o.l_max = l_max;
    o.center = center;
    o.assembly.far_points = far_points;
    return o;
  }
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Sorted "section.key=value" lines; insensitive to ordering, spacing and comments.
inline std::string canonical(const pt::ptree& tree) {
  std::map<std::string, std::string> flat;
  for (const auto& [sec, body] : tree)
    for (const auto& [key, val] : body) flat[sec + "." + key] = val.data();
  std::string s;
  for (const auto& [k, v] : flat) s += k + "=" + v + "\n";
  return s;
}

namespace detail {

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  const pt::ptree* section(const std::string& s) const {
    const auto it = tree_.find(s);
    return it == tree_.not_found() ? nullptr : &it->second;
  }
  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    const auto* s = section(sec);
    if (!s) return std::nullopt;
    const auto it = s->find(key);
    if (it == s->not_found()) return std::nullopt;
    return it->second.data();
  }
  std::string require(const std::string& sec, const std::string& key) const {
    auto v = get(sec, key);
    if (!v) throw ValidationError(where(sec, key) + " is required");
    return *v;
  }
  double number(const std::string& sec, const std::string& key, std::optional<double> def = std::nullopt) const {
    const auto v = get(sec, key);
    if (!v) {
      if (def) return *def;
      throw ValidationError(where(sec, key) + " is required");
    }
    return wrap(sec, key, [&] { return io::parse_double(*v, key); });
  }
  int integer(const std::string& sec, const std::string& key, std::optional<int> def = std::nullopt) const {
    const auto v = get(sec, key);
    if (!v) {
      if (def) return *def;
      throw ValidationError(where(sec, key) + " is required");
    }
    return wrap(sec, key, [&] { return io::parse_int(*v, key); });
  }
  Vec3 vec(const std::string& sec, const std::string& key, std::optional<Vec3> def = std::nullopt) const {
    const auto v = get(sec, key);
    if (!v) {
      if (def) return *def;
      throw ValidationError(where(sec, key) + " is required");
    }
    std::istringstream in(*v);
    std::string tok;
    std::vector<double> c;
    while (in >> tok) c.push_back(wrap(sec, key, [&] { return io::parse_double(tok, key); }));
    if (c.size() != 3) throw ValidationError(where(sec, key) + " needs three numbers");
    return {c[0], c[1], c[2]};
  }
  std::string where(const std::string& sec, const std::string& key) const {
    return name_ + ": [" + sec + "] " + key;
  }

 private:
  template <class F>
  std::invoke_result_t<F> wrap(const std::string& sec, const std::string& key, F f) const {
    try {
      return f();
    } catch (const ParseError& e) {
      throw ValidationError(where(sec, key) + ": " + e.what());
    }
  }
  const pt::ptree& tree_;
  std::string name_;
};

inline pt::ptree read_ini(std::istream& in, const std::string& name) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return tree;
}

inline void reject_unknown(const pt::ptree& tree, const std::map<std::string, std::vector<std::string>>& allowed,
                           const std::string& name) {
  for (const auto& [sec, body] : tree) {
    const auto dot = sec.find('.');
    const std::string family = dot == std::string::npos ? sec : sec.substr(0, dot) + ".*";
    const auto it = allowed.find(family);
    if (it == allowed.end()) throw ValidationError(name + ": unknown section [" + sec + "]");
    for (const auto& [key, val] : body)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ValidationError(name + ": unknown key '" + key + "' in [" + sec + "]");
  }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Parses a run configuration. Relative paths resolve against base_dir.
inline RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir,
                                  const std::string& name = "config") {
  const auto tree = detail::read_ini(in, name);
  detail::reject_unknown(tree,
                         {{"mesh", {"path", "center"}},
                          {"port.*", {"kind", "a", "b", "origin", "normal", "u", "eps_r", "mu_r", "mode_count"}},
                          {"sweep", {"start", "stop", "count"}},
                          {"solver", {"formulation", "l_max", "far_points"}},
                          {"compression", {"iota", "kind", "trials", "seed"}},
                          {"output", {"dir", "prefix"}},
                          {"verify", {"unitarity", "reciprocity", "passivity", "circle", "reconstruction"}}},
                         name);
  const detail::Reader r(tree, name);
  RunConfig c;
  c.source = base_dir;
  c.mesh_path = detail::resolve(base_dir, r.require("mesh", "path"));
  c.center = r.vec("mesh", "center", Vec3::Zero());

  for (const auto& [sec, body] : tree) {
    if (sec.rfind("port.", 0) != 0) continue;
    mom::PortDefinition d;
    d.name = sec.substr(5);
    if (d.name.empty()) throw ValidationError(name + ": port section needs a name, as in [port.feed]");
    const auto kind = r.require(sec, "kind");
    if (kind == "rectangular") {
      d.spec.kind = waveguide::Kind::rectangular;
    } else if (kind == "coaxial") {
      d.spec.kind = waveguide::Kind::coaxial;
    } else {
      throw ValidationError(r.where(sec, "kind") + " must be rectangular or coaxial, got '" + kind + "'");
    }
    d.spec.a = r.number(sec, "a");
    d.spec.b = r.number(sec, "b");
    d.spec.eps_r = r.number(sec, "eps_r", 1.0);
    d.spec.mu_r = r.number(sec, "mu_r", 1.0);
    d.spec.frame.origin = r.vec(sec, "origin", Vec3::Zero());
    d.spec.frame.normal = r.vec(sec, "normal", Vec3::UnitZ());
    d.spec.frame.u = r.vec(sec, "u", Vec3::UnitX());
    if (r.get(sec, "mode_count")) d.spec.mode_count = r.integer(sec, "mode_count");
    try {
      d.spec.check();
    } catch (const ArgumentError& e) {
      throw ValidationError(name + ": [" + sec + "] " + e.what());
    }
    c.ports.push_back(std::move(d));
  }

  c.sweep.start = r.number("sweep", "start");
  c.sweep.stop = r.number("sweep", "stop", c.sweep.start);
  c.sweep.count = r.integer("sweep", "count", 1);
  if (c.sweep.count < 1) throw ValidationError(r.where("sweep", "count") + " must be at least 1");
  if (!(c.sweep.start > 0.0) || !(c.sweep.stop >= c.sweep.start))
    throw ValidationError(name + ": [sweep] needs 0 < start <= stop");

  const auto form = r.get("solver", "formulation").value_or("electric");
  if (form == "electric") {
    c.formulation = mom::Formulation::electric;
  } else if (form == "magnetic") {
    c.formulation = mom::Formulation::magnetic;
  } else {
    throw ValidationError(r.where("solver", "formulation") + " must be electric or magnetic");
  }
  const auto lmax = r.get("solver", "l_max").value_or("auto");
  if (lmax != "auto") {
    c.l_max = r.integer("solver", "l_max");
    if (*c.l_max < 1) throw ValidationError(r.where("solver", "l_max") + " must be auto or at least 1");
  }
  c.far_points = r.integer("solver", "far_points", c.far_points);

  c.iota = r.number("compression", "iota", c.iota);
  if (!(c.iota > 0.0 && c.iota < 1.0) && c.iota != 1.0)
    throw ValidationError(r.where("compression", "iota") + " must lie in (0, 1]");
  const auto kind = r.get("compression", "kind").value_or("eigen");
  if (kind == "eigen") {
    c.kind = compression::Kind::eigen;
  } else if (kind == "singular") {
    c.kind = compression::Kind::singular;
  } else {
    throw ValidationError(r.where("compression", "kind") + " must be eigen or singular");
  }
  c.trials = r.integer("compression", "trials", c.trials);
  if (c.trials < 1) throw ValidationError(r.where("compression", "trials") + " must be at least 1");
  const auto seed = r.get("compression", "seed");
  if (seed) {
    const auto s = r.integer("compression", "seed");
    if (s < 0) throw ValidationError(r.where("compression", "seed") + " must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }

  c.output_dir = detail::resolve(base_dir, r.get("output", "dir").value_or("."));
  c.prefix = r.get("output", "prefix").value_or(c.prefix);

  auto& v = c.verify;
  v.unitarity = r.number("verify", "unitarity", v.unitarity);
  v.reciprocity = r.number("verify", "reciprocity", v.reciprocity);
  v.passivity = r.number("verify", "passivity", v.passivity);
  v.circle = r.number("verify", "circle", v.circle);
  v.reconstruction = r.number("verify", "reconstruction", v.reconstruction);

  c.hash = sha256_hex(canonical(tree));
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_run_config(in, path.parent_path(), path.string());
}

/// Checks that mesh port regions and [port.*] sections name the same set.
inline void check_ports(const RunConfig& c, const mesh::TriangleMesh& m) {
  for (const auto& p : m.port_names)
    if (std::none_of(c.ports.begin(), c.ports.end(), [&](const auto& d) { return d.name == p; }))
      throw ValidationError("mesh port '" + p + "' has no [port." + p + "] section");
  for (const auto& d : c.ports)
    if (std::find(m.port_names.begin(), m.port_names.end(), d.name) == m.port_names.end())
      throw ValidationError("[port." + d.name + "] does not match any port tag in the mesh");
}

/// Output file for one sweep point, e.g. "dipole_2000000000Hz.gsm".
inline std::filesystem::path gsm_path(const RunConfig& c, double f) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), f, std::chars_format::fixed);
  return c.output_dir / (c.prefix + "_" + std::string(buf.data(), r.ptr) + "Hz.gsm");
}

/// Array layout: one [element.ID] section per element with a center and either
///   gsm = FILE      a single container, with radius from the element or [layout] section, or
///   config = FILE   a run config whose sweep supplies one container per frequency; the
///                   radius defaults to the mesh's enclosing radius about the config center.
struct LayoutEntry {
  std::string id;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  std::vector<std::filesystem::path> files;  // one per sweep point
};

struct LayoutFile {
  std::vector<LayoutEntry> elements;
  std::string hash;
  std::size_t points() const { return elements.front().files.size(); }
};

inline LayoutFile parse_layout(std::istream& in, const std::filesystem::path& base_dir,
                               const std::string& name = "layout") {
  const auto tree = detail::read_ini(in, name);
  detail::reject_unknown(tree, {{"layout", {"radius"}}, {"element.*", {"gsm", "config", "center", "radius"}}}, name);
  const detail::Reader r(tree, name);
  std::optional<double> def;
  if (r.get("layout", "radius")) def = r.number("layout", "radius");
  LayoutFile out;
  for (const auto& [sec, body] : tree) {
    if (sec.rfind("element.", 0) != 0) continue;
    LayoutEntry e;
    e.id = sec.substr(8);
    if (e.id.empty()) throw ValidationError(name + ": element section needs an id, as in [element.d1]");
    e.center = r.vec(sec, "center");
    const auto gsm = r.get(sec, "gsm");
    const auto cfg = r.get(sec, "config");
    if (gsm.has_value() == cfg.has_value()) throw ValidationError(name + ": [" + sec + "] needs exactly one of gsm, config");
    std::optional<double> radius = def;
    if (r.get(sec, "radius")) radius = r.number(sec, "radius");
    if (gsm) {
      e.files = {detail::resolve(base_dir, *gsm)};
    } else {
      const auto c = load_run_config(detail::resolve(base_dir, *cfg));
      for (double f : c.sweep.frequencies()) e.files.push_back(gsm_path(c, f));
      if (!r.get(sec, "radius")) radius = gsm::enclosing_radius(mesh::load_mesh(c.mesh_path), c.center);
    }
    if (!radius) throw ValidationError(r.where(sec, "radius") + " is required");
    e.radius = *radius;
    if (!(e.radius > 0.0)) throw ValidationError(r.where(sec, "radius") + " must be positive");
    out.elements.push_back(std::move(e));
  }
  if (out.elements.empty()) throw ValidationError(name + ": no [element.*] sections");
  for (const auto& e : out.elements)
    if (e.files.size() != out.points())
      throw ValidationError(name + ": element '" + e.id + "' has " + std::to_string(e.files.size()) +
                            " sweep points but '" + out.elements.front().id + "' has " +
                            std::to_string(out.points()));
  out.hash = sha256_hex(canonical(tree));
  return out;
}

inline LayoutFile load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout " + path.string());
  return parse_layout(in, path.parent_path(), path.string());
}

/// Reads the containers of one sweep point; identical paths share one Gsm object.
inline array::Layout build_layout(const LayoutFile& lf, std::size_t point = 0) {
  if (point >= lf.points()) throw ArgumentError("build_layout: sweep point out of range");
  using Loaded = std::pair<std::shared_ptr<const gsm::Gsm>, std::shared_ptr<const compression::CompressedGsm>>;
  std::map<std::filesystem::path, Loaded> cache;
  array::Layout lay;
  for (const auto& e : lf.elements) {
    const auto& path = e.files[point];
    auto it = cache.find(path);
    if (it == cache.end()) {
      auto c = io::read_container(path);
      Loaded l{std::make_shared<const gsm::Gsm>(std::move(c.gsm)), nullptr};
      if (c.compressed) l.second = std::make_shared<const compression::CompressedGsm>(std::move(*c.compressed));
      it = cache.emplace(path, std::move(l)).first;
    }
    lay.elements.push_back({e.id, it->second.first, it->second.second, e.center, e.radius});
  }
  return lay;
}

}  // namespace gsmkit::config
