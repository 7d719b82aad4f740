#pragma once

#include "gsmkit/compression.hpp"
#include "gsmkit/core.hpp"
#include "gsmkit/gsm.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gsmkit::io {

/// Shortest round-trip decimal form; locale independent.
inline std::string fmt(double x) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), r.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError(what + ": not a number '" + s + "'");
  return x;
}

inline long long parse_int(const std::string& s, const std::string& what) {
  long long x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError(what + ": not an integer '" + s + "'");
  return x;
}

// ------------------------------------------------------------------ GSM container
//
// Layout: ASCII header lines "key: value" from the magic line to "end_header", then
// little-endian IEEE-754 float64 blocks, complex entries as (re, im), column-major.
//   type gsm:        Gamma (M x M), R (M x J), T (J x M), S (J x J)
//   type compressed: values (N), F (dim x N), then G (dim x N) for the singular kind

inline constexpr const char* container_magic = "gsmkit-container 1";

namespace detail {

inline void put_f64(std::string& out, double x) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xffu));
}

inline void put_matrix(std::string& out, const MatrixXc& m) {
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) {
      put_f64(out, m(r, c).real());
      put_f64(out, m(r, c).imag());
    }
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::size_t pos, std::string name) : d_(data), p_(pos), name_(std::move(name)) {}
  double f64() {
    if (p_ + 8 > d_.size()) throw ParseError(name_ + ": truncated data block");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= std::uint64_t(static_cast<unsigned char>(d_[p_ + i])) << (8 * i);
    p_ += 8;
    return std::bit_cast<double>(u);
  }
  MatrixXc matrix(Index rows, Index cols) {
    MatrixXc m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) {
        const double re = f64();
        m(r, c) = cplx(re, f64());
      }
    return m;
  }
  void finish() const {
    if (p_ != d_.size()) throw ParseError(name_ + ": " + std::to_string(d_.size() - p_) + " trailing bytes");
  }

 private:
  const std::string& d_;
  std::size_t p_;
  std::string name_;
};

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string common_header(const gsm::Gsm& g, const std::string& type) {
  std::string h = std::string(container_magic) + "\n";
  h += "type: " + type + "\n";
  h += "frequency_hz: " + fmt(g.frequency) + "\n";
  h += "k: " + fmt(g.k()) + "\n";
  h += "l_max: " + std::to_string(g.basis.l_max()) + "\n";
  h += "mode_ordering: l,m,sigma(even,odd),tau(1,2)\n";
  h += "formulation: " + g.formulation + "\n";
  h += "num_ports: " + std::to_string(g.num_ports()) + "\n";
  for (const auto& l : g.port_modes) h += "port_mode: " + l + "\n";
  h += "spherical_dim: " + std::to_string(g.basis.size()) + "\n";
  return h;
}

}  // namespace detail

/// Byte-exact serialization of a dense GSM.
inline std::string serialize(const gsm::Gsm& g) {
  std::string out = detail::common_header(g, "gsm");
  out += "iota: none\nend_header\n";
  for (const MatrixXc* m : {&g.Gamma, &g.R, &g.T, &g.S}) detail::put_matrix(out, *m);
  return out;
}

/// Reconstruction error measured against the dense parent when the file was written.
struct ErrorRecord {
  double err = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  bool operator==(const ErrorRecord&) const = default;
};

/// Serialization of a compressed GSM; metadata comes from the parent.
inline std::string serialize(const compression::CompressedGsm& c, const gsm::Gsm& parent,
                             const std::optional<ErrorRecord>& err = std::nullopt) {
  if (c.dim != parent.dim()) throw ArgumentError("serialize: compressed GSM does not match its parent");
  std::string out = detail::common_header(parent, "compressed");
  out += "iota: " + fmt(c.iota) + "\n";
  out += "kind: " + compression::to_string(c.kind) + "\n";
  out += "retained: " + std::to_string(c.retained()) + "\n";
  if (err) {
    out += "reconstruction_error: " + fmt(err->err) + "\n";
    out += "error_trials: " + std::to_string(err->trials) + "\n";
    out += "error_seed: " + std::to_string(err->seed) + "\n";
  }
  out += "end_header\n";
  VectorXc v = c.values;
  detail::put_matrix(out, MatrixXc(v));
  detail::put_matrix(out, c.F);
  if (c.kind == compression::Kind::singular) detail::put_matrix(out, c.G);
  return out;
}

inline void write_gsm(const gsm::Gsm& g, const std::filesystem::path& path) { detail::write_bytes(path, serialize(g)); }

inline void write_compressed(const compression::CompressedGsm& c, const gsm::Gsm& parent,
                             const std::filesystem::path& path, const std::optional<ErrorRecord>& err = std::nullopt) {
  detail::write_bytes(path, serialize(c, parent, err));
}

/// Contents of a container. For compressed files the dense blocks are reconstructed.
struct Container {
  std::string type;
  gsm::Gsm gsm;
  std::optional<compression::CompressedGsm> compressed;
  std::optional<ErrorRecord> error;
};

inline Container parse_container(const std::string& data, const std::string& name = "container") {
  std::size_t pos = 0;
  auto next_line = [&]() {
    const auto e = data.find('\n', pos);
    if (e == std::string::npos) throw ParseError(name + ": header is not terminated");
    std::string s = data.substr(pos, e - pos);
    pos = e + 1;
    return s;
  };
  if (next_line() != container_magic) throw ParseError(name + ": not a gsmkit container");
  std::map<std::string, std::string> kv;
  std::vector<std::string> labels;
  for (std::string s = next_line(); s != "end_header"; s = next_line()) {
    const auto c = s.find(": ");
    if (c == std::string::npos) throw ParseError(name + ": malformed header line '" + s + "'");
    const auto key = s.substr(0, c), val = s.substr(c + 2);
    if (key == "port_mode")
      labels.push_back(val);
    else if (!kv.emplace(key, val).second)
      throw ParseError(name + ": duplicate header key '" + key + "'");
  }
  auto get = [&](const std::string& k) {
    const auto it = kv.find(k);
    if (it == kv.end()) throw ParseError(name + ": missing header key '" + k + "'");
    return it->second;
  };
  Container out;
  out.type = get("type");
  const double freq = parse_double(get("frequency_hz"), name);
  const double k = parse_double(get("k"), name);
  const int L = static_cast<int>(parse_int(get("l_max"), name));
  const Index M = parse_int(get("num_ports"), name);
  const Index J = parse_int(get("spherical_dim"), name);
  if (L < 1 || M < 0 || J != sphwave::mode_count(L) || static_cast<Index>(labels.size()) != M)
    throw ParseError(name + ": inconsistent dimensions in header");
  sphwave::SphericalBasis basis(k, L);
  detail::ByteReader rd(data, pos, name);
  if (out.type == "gsm") {
    gsm::Gsm g;
    g.frequency = freq;
    g.basis = basis;
    g.port_modes = labels;
    g.formulation = get("formulation");
    g.Gamma = rd.matrix(M, M);
    g.R = rd.matrix(M, J);
    g.T = rd.matrix(J, M);
    g.S = rd.matrix(J, J);
    rd.finish();
    out.gsm = std::move(g);
  } else if (out.type == "compressed") {
    compression::CompressedGsm c;
    c.kind = compression::kind_from_string(get("kind"));
    c.iota = parse_double(get("iota"), name);
    c.num_ports = M;
    c.dim = M + J;
    const Index n = parse_int(get("retained"), name);
    if (n < 1 || n > c.dim) throw ParseError(name + ": invalid retained count");
    if (kv.count("reconstruction_error")) {
      ErrorRecord e;
      e.err = parse_double(get("reconstruction_error"), name);
      e.trials = static_cast<int>(parse_int(get("error_trials"), name));
      const auto seed = parse_int(get("error_seed"), name);
      if (e.trials < 1 || seed < 0) throw ParseError(name + ": invalid error record");
      e.seed = static_cast<std::uint64_t>(seed);
      out.error = e;
    }
    c.values = rd.matrix(n, 1).col(0);
    c.F = rd.matrix(c.dim, n);
    if (c.kind == compression::Kind::singular) c.G = rd.matrix(c.dim, n);
    rd.finish();
    out.gsm = gsm::Gsm::from_stacked(c.reconstruct(), M, freq, basis, labels, get("formulation"));
    out.compressed = std::move(c);
  } else {
    throw ParseError(name + ": unknown container type '" + out.type + "'");
  }
  return out;
}

inline Container read_container(const std::filesystem::path& path) {
  return parse_container(detail::read_bytes(path), path.string());
}

// ------------------------------------------------------------------ Touchstone v1

struct Touchstone {
  std::vector<double> frequencies;  // Hz
  std::vector<MatrixXc> data;       // one N x N matrix per frequency
  std::vector<std::string> comments;
};

/// Writes magnitude/angle Touchstone v1. Rows wrap after four pairs; the 2-port case uses
/// the column-first order S11 S21 S12 S22 that the format prescribes.
inline std::string format_touchstone(const Touchstone& t) {
  if (t.frequencies.size() != t.data.size()) throw ArgumentError("touchstone: frequency and data counts differ");
  const Index n = t.data.empty() ? 0 : t.data.front().rows();
  std::ostringstream os;
  for (const auto& c : t.comments) os << "! " << c << '\n';
  os << "# HZ S MA R 50\n";
  auto pair = [&](cplx z) { os << ' ' << fmt(std::abs(z)) << ' ' << fmt(std::arg(z) * 180.0 / pi); };
  for (std::size_t f = 0; f < t.frequencies.size(); ++f) {
    const MatrixXc& s = t.data[f];
    if (s.rows() != n || s.cols() != n) throw ArgumentError("touchstone: inconsistent matrix sizes");
    os << fmt(t.frequencies[f]);
    if (n == 2) {
      pair(s(0, 0));
      pair(s(1, 0));
      pair(s(0, 1));
      pair(s(1, 1));
      os << '\n';
      continue;
    }
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < n; ++c) {
        if (c > 0 && c % 4 == 0) os << '\n';
        pair(s(r, c));
      }
      os << '\n';
    }
  }
  return os.str();
}

inline void write_touchstone(const Touchstone& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_touchstone(t);
}

/// Parses Touchstone v1 with any frequency unit and MA, DB or RI data for n ports.
inline Touchstone parse_touchstone(std::istream& in, Index n, const std::string& name = "touchstone") {
  if (n < 1) throw ArgumentError("touchstone: port count must be positive");
  Touchstone t;
  double unit = 1e9;
  std::string format = "MA";
  bool have_option = false;
  std::vector<double> nums;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto bang = line.find('!');
    if (bang != std::string::npos) {
      if (bang == 0) {
        const auto first = line.find_first_not_of(' ', 1);
        if (first != std::string::npos) t.comments.push_back(line.substr(first));
      }
      line.erase(bang);
    }
    std::istringstream ss(line);
    std::string tok;
    if (line.find('#') != std::string::npos) {
      if (have_option) throw ParseError(name + ":" + std::to_string(ln) + ": repeated option line");
      have_option = true;
      ss.str(line.substr(line.find('#') + 1));
      while (ss >> tok) {
        for (auto& ch : tok) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (tok == "HZ") unit = 1.0;
        else if (tok == "KHZ") unit = 1e3;
        else if (tok == "MHZ") unit = 1e6;
        else if (tok == "GHZ") unit = 1e9;
        else if (tok == "MA" || tok == "DB" || tok == "RI") format = tok;
        else if (tok == "S" || tok == "R") continue;
        else if (!std::isdigit(static_cast<unsigned char>(tok[0])))
          throw ParseError(name + ":" + std::to_string(ln) + ": unsupported option '" + tok + "'");
      }
      continue;
    }
    while (ss >> tok) nums.push_back(parse_double(tok, name + ":" + std::to_string(ln)));
  }
  const std::size_t per = 1 + 2 * static_cast<std::size_t>(n * n);
  if (nums.size() % per != 0) throw ParseError(name + ": data count is not a multiple of the block size");
  for (std::size_t b = 0; b < nums.size(); b += per) {
    t.frequencies.push_back(nums[b] * unit);
    MatrixXc s(n, n);
    for (Index i = 0; i < n * n; ++i) {
      const double x = nums[b + 1 + 2 * i], y = nums[b + 2 + 2 * i];
      cplx z;
      if (format == "RI") z = cplx(x, y);
      else if (format == "MA") z = std::polar(x, y * pi / 180.0);
      else z = std::polar(std::pow(10.0, x / 20.0), y * pi / 180.0);
      const Index r = i / n, c = i % n;
      if (n == 2) s(c, r) = z;
      else s(r, c) = z;
    }
    t.data.push_back(s);
  }
  return t;
}

inline Touchstone read_touchstone(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext.size() < 4 || (ext[1] != 's' && ext[1] != 'S') || (ext.back() != 'p' && ext.back() != 'P'))
    throw ParseError(path.string() + ": expected a .sNp extension");
  const Index n = parse_int(ext.substr(2, ext.size() - 3), path.string());
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_touchstone(in, n, path.string());
}

// ------------------------------------------------------------------ far-field CSV

inline std::string format_farfield_csv(const std::vector<gsm::PatternSample>& samples) {
  std::string out = "theta_deg,phi_deg,etheta_re,etheta_im,ephi_re,ephi_im,gain_dbi\n";
  for (const auto& s : samples) {
    out += fmt(s.theta * 180.0 / pi) + ',' + fmt(s.phi * 180.0 / pi) + ',' + fmt(s.e_theta.real()) + ',' +
           fmt(s.e_theta.imag()) + ',' + fmt(s.e_phi.real()) + ',' + fmt(s.e_phi.imag()) + ',' + fmt(s.gain_dbi) + '\n';
  }
  return out;
}

inline void write_farfield_csv(const std::vector<gsm::PatternSample>& samples, const std::filesystem::path& path) {
  detail::write_bytes(path, format_farfield_csv(samples));
}

}  // namespace gsmkit::io
