#pragma once

// Experiment configuration: a sectioned key = value document (INI syntax),
// profile library, and validation against the weak/strong assumption sets.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdlib>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mks/integrator.hpp"

namespace mks {

// "<name> key=value key=value ..."
struct ProfileSpec {
  std::string name = "zero";
  std::map<std::string, std::string> params;
  std::string text = "zero";
};

struct AssumptionStatus {
  std::string tag;
  std::string status;  // "validated", "not required (weak mode)", "not machine-checkable"
  std::string note;
};

struct ExperimentConfig {
  // [grid]
  int points = 16;
  double length = 2.0 * std::numbers::pi;
  // [model]
  double q = 2.0;
  bool strong = false;
  Equation equation = Equation::TSEE;
  bool kerr_enabled = true;
  // [noise]
  int noise_count = 0;
  std::vector<ProfileSpec> B, b, b_time;
  ProfileSpec J, J_time, u0;
  std::string b_class = "Linf";
  // [kernel]
  std::string kernel_form = "zero";
  KernelSpec kernel;
  // [scheme]
  Scheme scheme_type = Scheme::euler_maruyama;
  double dt = 1.0 / 64;
  double horizon = 1.0;
  int cutoff = -1;  // -1: Nyquist level
  double truncation_m = 0.0;
  bool diagnostics = true;
  double blowup = 1e8;
  double lipschitz = -1.0;
  double burkholder = 2.0;
  // [monte_carlo]
  int paths = 1;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: MKS_WORKERS or 1
  // [outputs]
  std::string out_dir = "mks_out";
  int stride = 1;
  bool checkpoints = false;

  // Built and validated objects.
  GridSpec grid;
  NoiseSpec spec;
  SchemeConfig scheme;
  std::vector<AssumptionStatus> assumptions;
};

namespace config_detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double x = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline long long to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long x = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  throw ConfigError(key + ": expected on/off, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& x : split(v, ',')) out.push_back(to_double(key, x));
  return out;
}

inline ProfileSpec parse_profile(const std::string& key, const std::string& text) {
  ProfileSpec p;
  p.text = trim(text);
  std::istringstream is(p.text);
  std::string tok;
  if (!(is >> p.name)) throw ConfigError(key + ": empty profile");
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError(key + ": profile parameter '" + tok + "' is not key=value");
    p.params[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return p;
}

class ParamReader {
public:
  ParamReader(std::string key, const ProfileSpec& p) : key_(std::move(key)), p_(p) {}

  double number(const std::string& k, double def) {
    used_.insert(k);
    auto it = p_.params.find(k);
    return it == p_.params.end() ? def : to_double(key_ + "." + k, it->second);
  }
  std::vector<double> list(const std::string& k, std::vector<double> def) {
    used_.insert(k);
    auto it = p_.params.find(k);
    if (it == p_.params.end()) return def;
    auto v = to_list(key_ + "." + k, it->second);
    if (!def.empty() && v.size() != def.size())
      throw ConfigError(key_ + "." + k + ": expected " + std::to_string(def.size()) + " values");
    return v;
  }
  std::string word(const std::string& k, const std::string& def) {
    used_.insert(k);
    auto it = p_.params.find(k);
    return it == p_.params.end() ? def : it->second;
  }
  void finish() const {
    for (const auto& [k, v] : p_.params)
      if (!used_.count(k))
        throw ConfigError(key_ + ": unknown parameter '" + k + "' for profile '" + p_.name + "'");
  }

private:
  std::string key_;
  const ProfileSpec& p_;
  std::set<std::string> used_;
};

}  // namespace config_detail

// Spatial profile library. k is given in integer mode numbers m (wavenumber
// 2 pi m / L); dir holds the C component weights.
template <int C>
Field<C> make_profile(const std::string& key, const ProfileSpec& p, const GridSpec& g) {
  using namespace config_detail;
  ParamReader r(key, p);
  std::vector<double> dir_default(C, 0.0);
  dir_default[0] = 1.0;
  Field<C> out(g, Representation::physical);
  const double L = g.length();
  const double two_pi = 2.0 * std::numbers::pi;
  if (p.name == "zero") {
  } else if (p.name == "constant") {
    const double a = r.number("amp", 1.0);
    const auto dir = r.list("dir", dir_default);
    out = sample_field<C>(g, [&](double, double, double) {
      std::array<cplx, C> v;
      for (int c = 0; c < C; ++c) v[static_cast<std::size_t>(c)] = a * dir[static_cast<std::size_t>(c)];
      return v;
    });
  } else if (p.name == "plane-wave") {
    const double a = r.number("amp", 1.0);
    const auto k = r.list("k", {1.0, 0.0, 0.0});
    const auto dir = r.list("dir", dir_default);
    const double ph = r.number("phase", 0.0);
    const std::string form = r.word("form", "cos");
    if (form != "cos" && form != "sin" && form != "exp")
      throw ConfigError(key + ": plane-wave form must be cos, sin or exp");
    for (double m : k)
      if (m != std::round(m)) throw ConfigError(key + ": plane-wave k must be integer mode numbers");
    out = sample_field<C>(g, [&](double x, double y, double z) {
      const double arg = two_pi / L * (k[0] * x + k[1] * y + k[2] * z) + ph;
      const cplx s = form == "cos" ? cplx(std::cos(arg)) : form == "sin" ? cplx(std::sin(arg))
                                                                         : std::polar(1.0, arg);
      std::array<cplx, C> v;
      for (int c = 0; c < C; ++c) v[static_cast<std::size_t>(c)] = a * dir[static_cast<std::size_t>(c)] * s;
      return v;
    });
  } else if (p.name == "gaussian-bump") {
    const double a = r.number("amp", 1.0);
    const double w = r.number("width", L / 8.0);
    const auto ctr = r.list("center", {L / 2, L / 2, L / 2});
    const auto dir = r.list("dir", dir_default);
    if (!(w > 0.0)) throw ConfigError(key + ": gaussian-bump width must be positive");
    out = sample_field<C>(g, [&](double x, double y, double z) {
      double d2 = 0.0;
      const double xs[3] = {x, y, z};
      for (int i = 0; i < 3; ++i) {
        double d = xs[i] - ctr[static_cast<std::size_t>(i)];
        d -= L * std::round(d / L);
        d2 += d * d;
      }
      const double s = std::exp(-0.5 * d2 / (w * w));
      std::array<cplx, C> v;
      for (int c = 0; c < C; ++c) v[static_cast<std::size_t>(c)] = a * dir[static_cast<std::size_t>(c)] * s;
      return v;
    });
  } else if (p.name == "band-limited-random") {
    const double a = r.number("amp", 1.0);
    const int kmax = static_cast<int>(r.number("kmax", 2.0));
    const auto seed = static_cast<std::uint64_t>(r.number("seed", -1.0));
    if (p.params.find("seed") == p.params.end())
      throw ConfigError(key + ": band-limited-random needs seed=");
    if (kmax < 0 || kmax >= g.points() / 2)
      throw ConfigError(key + ": band-limited-random kmax must be in [0, n/2)");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Field<C> h(g, Representation::spectral);
    const int n = g.points();
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            if (std::abs(g.signed_frequency(i)) > kmax || std::abs(g.signed_frequency(j)) > kmax ||
                std::abs(g.signed_frequency(l)) > kmax)
              continue;
            const double re = z(rng), im = z(rng);
            h.at(c, g.index(i, j, l)) = cplx(re, im);
          }
    out = to_physical(std::move(h));
    for (auto& v : out.data()) v = cplx(v.real(), 0.0);
    const double rms = l2_norm(out) / std::sqrt(g.volume());
    if (rms > 0.0) out *= cplx(a / rms);
  } else {
    throw ConfigError(key + ": unknown profile '" + p.name + "'");
  }
  r.finish();
  out.set_real_state(false);
  return out;
}

inline TimeProfile make_time_profile(const std::string& key, const ProfileSpec& p) {
  config_detail::ParamReader r(key, p);
  TimeProfile t;
  if (p.name == "constant") {
    t = TimeProfile::constant(r.number("value", 1.0));
  } else if (p.name == "sine") {
    const double a = r.number("amp", 1.0);
    const double w = r.number("omega", 1.0);
    t = TimeProfile::sine(a, w, r.number("phase", 0.0));
  } else if (p.name == "exponential") {
    const double a = r.number("amp", 1.0);
    t = TimeProfile::exponential(a, r.number("rate", 1.0));
  } else if (p.name == "linear") {
    const double a = r.number("a", 0.0);
    t = TimeProfile::linear(a, r.number("b", 1.0));
  } else {
    throw ConfigError(key + ": unknown time profile '" + p.name + "'");
  }
  r.finish();
  return t;
}

namespace config_detail {

class Sections {
public:
  explicit Sections(const boost::property_tree::ptree& pt) : pt_(pt) {
    for (const auto& [name, sec] : pt) {
      if (!sec.data().empty() && sec.empty())
        throw ConfigError("key '" + name + "' must appear inside a [section]");
      static const std::set<std::string> known = {"grid",   "model",     "noise",      "kernel",
                                                  "scheme", "monte_carlo", "outputs"};
      if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");
    }
  }

  std::optional<std::string> get(const std::string& sec, const std::string& key) {
    used_.insert(sec + "." + key);
    auto s = pt_.get_child_optional(sec);
    if (!s) return std::nullopt;
    for (const auto& [k, v] : *s)
      if (k == key) return v.data();
    return std::nullopt;
  }

  void finish() const {
    for (const auto& [name, sec] : pt_)
      for (const auto& [k, v] : sec)
        if (!used_.count(name + "." + k)) throw ConfigError("unknown key '" + k + "' in [" + name + "]");
  }

private:
  const boost::property_tree::ptree& pt_;
  std::set<std::string> used_;
};

inline int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("MKS_WORKERS")) {
    const long long w = to_int("MKS_WORKERS", env);
    if (w >= 1) return static_cast<int>(w);
    throw ConfigError("MKS_WORKERS must be >= 1");
  }
  return 1;
}

}  // namespace config_detail

inline int effective_workers(const ExperimentConfig& c) {
  return config_detail::resolve_workers(c.workers);
}

// Builds the grid, fields and scheme and checks the assumption sets. All
// violations are collected into one ConfigError.
inline void validate_config(ExperimentConfig& c) {
  using namespace config_detail;
  std::vector<std::string> errors;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      errors.emplace_back(e.what());
    }
  };
  auto ok = [&](std::string tag, std::string note) {
    c.assumptions.push_back({std::move(tag), "validated", std::move(note)});
  };
  auto skip = [&](std::string tag, std::string status, std::string note) {
    c.assumptions.push_back({std::move(tag), std::move(status), std::move(note)});
  };
  c.assumptions.clear();

  c.grid = make_grid(c.points, c.length);
  const GridSpec& g = c.grid;
  if (c.cutoff < 0) c.cutoff = nyquist_level(g);

  check([&] { (void)make_kerr_exponent(c.q, c.strong); });
  if (c.noise_count < 0) errors.emplace_back("noise count must be >= 0");
  if (c.paths < 1) errors.emplace_back("monte_carlo.paths must be >= 1");
  if (c.b_class != "Linf" && c.b_class != "Lp") errors.emplace_back("noise.b_class must be Linf or Lp");
  if (c.equation == Equation::WSEE_linear_noise && c.strong)
    errors.emplace_back("equation WSEE is the weak formulation; use mode = weak");

  std::vector<ScalarField> Bs;
  std::vector<SpaceTimeField> bs;
  SpaceTimeField J;
  Field6 u0(g, Representation::physical);
  for (int j = 0; j < c.noise_count; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const std::string n = std::to_string(j + 1);
    check([&] { Bs.push_back(make_profile<1>("noise.B" + n, c.B.at(idx), g)); });
    check([&] {
      bs.push_back({make_time_profile("noise.b" + n + ".time", c.b_time.at(idx)),
                    make_profile<6>("noise.b" + n, c.b.at(idx), g)});
    });
  }
  check([&] { J = {make_time_profile("noise.J.time", c.J_time), make_profile<6>("noise.J", c.J, g)}; });
  check([&] { u0 = make_profile<6>("noise.u0", c.u0, g); });
  if (!errors.empty()) {
    std::string all;
    for (const auto& e : errors) all += (all.empty() ? "" : "\n") + e;
    throw ConfigError(all);
  }

  check([&] { c.spec = make_noise_spec(g, Bs, bs, J, u0); });

  c.scheme = SchemeConfig{};
  c.scheme.scheme = c.scheme_type;
  c.scheme.dt = c.dt;
  c.scheme.horizon = c.horizon;
  c.scheme.cutoff = CutoffLevel{c.cutoff};
  c.scheme.equation = c.equation;
  c.scheme.kerr = KerrExponent{c.q, c.strong};
  c.scheme.kerr_enabled = c.kerr_enabled;
  c.scheme.beta_truncation_m = c.truncation_m;
  c.scheme.save_stride = c.stride;
  c.scheme.diagnostics = c.diagnostics;
  c.scheme.blowup_threshold = c.blowup;
  c.scheme.lipschitz_noise = c.lipschitz;
  c.scheme.burkholder = c.burkholder;
  check([&] { validate_scheme(c.scheme, g); });

  auto finite = [](const Field6& f) {
    return std::ranges::all_of(f.data(), [](const cplx& v) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    });
  };

  skip("[W1]", "not machine-checkable",
       "periodic torus [0,L)^3 replaces the bounded C^1 domain / R^3");
  if (finite(u0)) ok("[W2]", "u0 in L^2, ||u0||_2 = " + std::to_string(l2_norm(u0)));
  else errors.emplace_back("[W2] violated: u0 has non-finite values");
  {
    const double g1 = c.kernel.l1_norm(c.horizon);
    if (std::isfinite(g1)) ok("[W3]", "int_0^T ||G|| dt = " + std::to_string(g1));
    else errors.emplace_back("[W3] violated: kernel L^1 norm is not finite");
  }
  ok("[W4]", "noise b_j + i B_j u is affine, Lipschitz constant max_j ||B_j||_inf");
  if (finite(J.shape)) ok("[W5]", "J = g(t) J(x) with bounded g on [0,T]");
  else errors.emplace_back("[W5] violated: J has non-finite values");

  if (!c.strong) {
    for (const char* t : {"[M1]", "[M2]", "[M3]", "[M4]", "[M5]", "[M6]"})
      skip(t, "not required (weak mode)", "");
  } else {
    ok("[M1]", "q = " + std::to_string(c.q) + " in (1,2]");
    check([&] {
      const Field6 uh = to_spectral(u0);
      const double mu = l2_norm(maxwell_apply(uh));
      const double lp = lp_norm(u0, 2.0 * (c.q + 1.0));
      if (!std::isfinite(mu) || !std::isfinite(lp)) throw ConfigError("[M2] violated: u0 norms not finite");
      ok("[M2]", "||M u0||_2 = " + std::to_string(mu) + ", ||u0||_{2(q+1)} = " + std::to_string(lp));
    });
    if (c.kernel.form == KernelSpec::Form::matrix_profile)
      errors.emplace_back("[M3] violated: tabulated kernel has no W^{1,1} derivative; use a closed form");
    else
      ok("[M3]", "closed-form kernel with analytic G'");
    ok("[M4]", "J(t) = g(t) J(x) with analytic g'");
    check([&] {
      if (c.q == 2.0 && c.b_class != "Linf")
        throw ConfigError("[M5] violated: q=2 requires b_class = Linf");
      if (c.q == 2.0) {
        const int cut_index =
            static_cast<int>(std::floor(std::ldexp(1.0, c.cutoff) * g.length() / (2 * std::numbers::pi) + 1e-9));
        const int max_index = std::min(cut_index, g.points() / 4);
        for (int j = 0; j < c.noise_count; ++j) {
          const double leak = band_leakage(to_spectral(bs.at(static_cast<std::size_t>(j)).shape), max_index);
          if (leak > kLeakageTolerance) {
            std::ostringstream os;
            os << "[M5] violated: b" << j + 1 << " is not band-limited to index " << max_index
               << " (leakage " << leak << ")";
            throw ConfigError(os.str());
          }
        }
      }
      ok("[M5]", "b_class " + c.b_class + (c.q == 2.0 ? ", b_j band-limited" : ""));
    });
    ok("[M6]", "B_j real and band-limited to half-Nyquist");
  }
  skip("[adapted]", "not machine-checkable", "inputs are deterministic profiles");

  if (!errors.empty()) {
    std::string all;
    for (const auto& e : errors) all += (all.empty() ? "" : "\n") + e;
    throw ConfigError(all);
  }
}

inline ExperimentConfig parse_config(const std::string& text) {
  using namespace config_detail;
  boost::property_tree::ptree pt;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  Sections s(pt);
  ExperimentConfig c;
  auto num = [&](const char* sec, const char* key, double& dst) {
    if (auto v = s.get(sec, key)) dst = to_double(std::string(sec) + "." + key, *v);
  };
  auto integer = [&](const char* sec, const char* key, int& dst) {
    if (auto v = s.get(sec, key)) dst = static_cast<int>(to_int(std::string(sec) + "." + key, *v));
  };
  auto flag = [&](const char* sec, const char* key, bool& dst) {
    if (auto v = s.get(sec, key)) dst = to_bool(std::string(sec) + "." + key, *v);
  };
  auto word = [&](const char* sec, const char* key, const std::set<std::string>& allowed,
                  std::string def) {
    auto v = s.get(sec, key);
    if (!v) return def;
    const std::string t = trim(*v);
    if (!allowed.count(t)) throw ConfigError(std::string(sec) + "." + key + ": invalid value '" + t + "'");
    return t;
  };
  auto autonum = [&](const char* sec, const char* key, double& dst) {
    if (auto v = s.get(sec, key)) {
      if (trim(*v) == "auto") dst = -1.0;
      else dst = to_double(std::string(sec) + "." + key, *v);
    }
  };

  integer("grid", "points", c.points);
  num("grid", "length", c.length);

  num("model", "q", c.q);
  c.strong = word("model", "mode", {"weak", "strong"}, "weak") == "strong";
  const std::string eq = word("model", "equation", {"TSEE", "MSEE", "WSEE"}, "TSEE");
  c.equation = eq == "TSEE" ? Equation::TSEE : eq == "MSEE" ? Equation::MSEE : Equation::WSEE_linear_noise;
  flag("model", "kerr", c.kerr_enabled);

  integer("noise", "count", c.noise_count);
  for (int j = 1; j <= std::max(c.noise_count, 0); ++j) {
    const std::string n = std::to_string(j);
    auto Bj = s.get("noise", "B" + n);
    if (!Bj) throw ConfigError("noise.B" + n + " missing (count = " + std::to_string(c.noise_count) + ")");
    c.B.push_back(parse_profile("noise.B" + n, *Bj));
    auto bj = s.get("noise", "b" + n);
    c.b.push_back(bj ? parse_profile("noise.b" + n, *bj) : ProfileSpec{});
    auto bt = s.get("noise", "b" + n + ".time");
    c.b_time.push_back(parse_profile("noise.b" + n + ".time", bt ? *bt : "constant value=1"));
  }
  if (auto v = s.get("noise", "J")) c.J = parse_profile("noise.J", *v);
  c.J_time = parse_profile("noise.J.time", s.get("noise", "J.time").value_or("constant value=1"));
  if (auto v = s.get("noise", "u0")) c.u0 = parse_profile("noise.u0", *v);
  c.b_class = word("noise", "b_class", {"Linf", "Lp"}, "Linf");

  c.kernel_form = word("kernel", "form", {"zero", "exponential", "table"}, "zero");
  {
    double amp = 0.0, decay = 0.0, tdt = 0.0;
    num("kernel", "amplitude", amp);
    num("kernel", "decay", decay);
    num("kernel", "table_dt", tdt);
    Mat6 mat = Mat6::Identity();
    if (auto v = s.get("kernel", "matrix")) {
      const std::string t = trim(*v);
      if (t != "identity") {
        const auto vals = to_list("kernel.matrix", t);
        if (vals.size() == 6) mat = Eigen::Matrix<double, 6, 1>(vals.data()).asDiagonal();
        else if (vals.size() == 36) mat = Eigen::Map<const Eigen::Matrix<double, 6, 6, Eigen::RowMajor>>(vals.data());
        else throw ConfigError("kernel.matrix: expected identity, 6 diagonal or 36 row-major values");
      }
    }
    std::vector<double> table;
    if (auto v = s.get("kernel", "table")) table = to_list("kernel.table", *v);
    if (c.kernel_form == "exponential") {
      if (decay < 0.0) throw ConfigError("kernel.decay must be >= 0");
      c.kernel = KernelSpec::exponential(amp, decay, mat);
    } else if (c.kernel_form == "table") {
      std::vector<Mat6> samples;
      for (double x : table) samples.push_back(x * mat);
      c.kernel = KernelSpec::profile(tdt, samples);
    }
  }
  autonum("kernel", "lipschitz", c.lipschitz);
  num("kernel", "burkholder", c.burkholder);

  c.scheme_type = word("scheme", "type", {"euler", "lie"}, "euler") == "euler" ? Scheme::euler_maruyama
                                                                             : Scheme::lie_splitting;
  num("scheme", "dt", c.dt);
  num("scheme", "T", c.horizon);
  if (auto v = s.get("scheme", "cutoff"))
    c.cutoff = trim(*v) == "auto" ? -1 : static_cast<int>(to_int("scheme.cutoff", *v));
  autonum("scheme", "m", c.truncation_m);
  if (c.truncation_m < 0.0) c.truncation_m = 0.0;
  flag("scheme", "diagnostics", c.diagnostics);
  num("scheme", "blowup", c.blowup);

  integer("monte_carlo", "paths", c.paths);
  if (auto v = s.get("monte_carlo", "seed")) {
    const long long sd = to_int("monte_carlo.seed", *v);
    if (sd < 0) throw ConfigError("monte_carlo.seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(sd);
  }
  integer("monte_carlo", "workers", c.workers);

  if (auto v = s.get("outputs", "directory")) c.out_dir = trim(*v);
  integer("outputs", "stride", c.stride);
  flag("outputs", "checkpoints", c.checkpoints);
  s.finish();

  validate_config(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

// Normalized echo of the configuration and the assumption table.
inline std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "[grid]\npoints = " << c.points << "\nlength = " << c.length << "\n\n";
  os << "[model]\nq = " << c.q << "\nmode = " << (c.strong ? "strong" : "weak")
     << "\nequation = " << to_string(c.equation) << "\nkerr = " << (c.kerr_enabled ? "on" : "off")
     << "\n\n";
  os << "[noise]\ncount = " << c.noise_count << "\n";
  for (std::size_t j = 0; j < c.B.size(); ++j) {
    os << "B" << j + 1 << " = " << c.B[j].text << "\n";
    os << "b" << j + 1 << " = " << c.b[j].text << "\n";
    os << "b" << j + 1 << ".time = " << c.b_time[j].text << "\n";
  }
  os << "J = " << c.J.text << "\nJ.time = " << c.J_time.text << "\nu0 = " << c.u0.text
     << "\nb_class = " << c.b_class << "\n\n";
  os << "[kernel]\nform = " << c.kernel_form << "\n\n";
  os << "[scheme]\ntype = " << (c.scheme_type == Scheme::euler_maruyama ? "euler" : "lie")
     << "\ndt = " << c.dt << "\nT = " << c.horizon << "\ncutoff = " << c.cutoff
     << "\nm = " << c.scheme.truncation_level() << "\n\n";
  os << "[monte_carlo]\npaths = " << c.paths << "\nseed = " << c.seed << "\n\n";
  os << "[outputs]\ndirectory = " << c.out_dir << "\nstride = " << c.stride << "\n\n";
  os << "; assumptions\n";
  for (const auto& a : c.assumptions)
    os << "; " << a.tag << " " << a.status << (a.note.empty() ? "" : ": " + a.note) << "\n";
  return os.str();
}

}  // namespace mks
