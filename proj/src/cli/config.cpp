#include "iongate/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "iongate/errors.hpp"
#include "iongate/units.hpp"

namespace iongate::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// Recursive-descent evaluator over a single expression string.
class ExprParser {
 public:
  ExprParser(const std::string& key, const std::string& text) : key_(key), s_(text) {}

  double run() {
    const double v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_) + "'");
    if (!std::isfinite(v)) fail("value is not finite");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(key_ + ": cannot evaluate '" + s_ + "': " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) {
        v += term();
      } else if (eat('-')) {
        v -= term();
      } else {
        return v;
      }
    }
  }
  double term() {
    double v = power();
    for (;;) {
      if (eat('*')) {
        v *= power();
      } else if (eat('/')) {
        v /= power();
      } else {
        return v;
      }
    }
  }
  double power() {
    const double base = unary();
    if (eat('^')) return std::pow(base, power());
    return base;
  }
  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return primary();
  }
  double primary() {
    skip();
    if (eat('(')) {
      const double v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      std::size_t e = pos_;
      while (e < s_.size() && std::isalnum(static_cast<unsigned char>(s_[e]))) ++e;
      const std::string id = s_.substr(pos_, e - pos_);
      pos_ = e;
      if (id == "pi") return units::pi;
      if (id == "sqrt") {
        if (!eat('(')) fail("sqrt needs '('");
        const double v = expr();
        if (!eat(')')) fail("missing ')'");
        return std::sqrt(v);
      }
      fail("unknown name '" + id + "'");
    }
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(pos_ < s_.size() ? "expected a number" : "empty expression");
    pos_ += std::size_t(end - begin);
    return v;
  }

  const std::string& key_;
  const std::string& s_;
  std::size_t pos_ = 0;
};

struct UnitDef {
  const char* name;
  Dim dim;
  double factor;
};

// Angular frequencies take Hz as a plain 1/s scale: write 2*pi explicitly.
constexpr UnitDef kUnits[] = {
    {"rad/s", Dim::angular_frequency, 1.0}, {"Hz", Dim::angular_frequency, 1.0},
    {"kHz", Dim::angular_frequency, 1e3},   {"MHz", Dim::angular_frequency, 1e6},
    {"s^-1", Dim::rate, 1.0},               {"1/s", Dim::rate, 1.0},
    {"ms^-1", Dim::rate, 1e3},              {"s", Dim::time, 1.0},
    {"ms", Dim::time, 1e-3},                {"us", Dim::time, 1e-6},
    {"ns", Dim::time, 1e-9},                {"t_gate", Dim::time, 0.0},
    {"T_R", Dim::time, 0.0},                {"K", Dim::temperature, 1.0},
    {"mK", Dim::temperature, 1e-3},         {"uK", Dim::temperature, 1e-6},
    {"nK", Dim::temperature, 1e-9},         {"m", Dim::length, 1.0},
    {"um", Dim::length, 1e-6},              {"nm", Dim::length, 1e-9},
    {"a0", Dim::length, units::bohr},       {"R*", Dim::length, 0.0},
    {"m^-3", Dim::density, 1.0},            {"cm^-3", Dim::density, 1e6},
    {"J", Dim::energy, 1.0},                {"kg", Dim::mass, 1.0},
    {"u", Dim::mass, units::amu},
};

double unit_factor(const std::string& key, const UnitDef& u, const UnitContext& ctx) {
  if (u.factor != 0.0) return u.factor;
  const std::string name = u.name;
  const std::optional<double>* v = name == "t_gate" ? &ctx.t_gate
                                   : name == "T_R"  ? &ctx.T_R
                                                    : &ctx.R_star;
  if (!v->has_value()) throw ConfigError(key + ": unit " + name + " is not available here");
  return **v;
}

std::string units_for(Dim dim) {
  std::string out;
  for (const UnitDef& u : kUnits) {
    if (u.dim != dim) continue;
    if (!out.empty()) out += ", ";
    out += u.name;
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

using Defaults = std::map<std::string, std::string>;

const Defaults& common_defaults() {
  static const Defaults d = {
      {"chain.omega_cm", "2*pi*500 kHz"},
      {"chain.delta_cm", "2*pi*4 kHz"},
      {"chain.Omega_cm", "2*pi*2*sqrt(3) kHz"},
      {"chain.ion_mass", "173.938866 u"},
      {"chain.cm_only", "false"},
      {"bath.species", "li7"},
      {"bath.n0", "1e13 cm^-3"},
      {"bath.T", "200 nK"},
      {"bath.mu_B", "0 J"},
      {"bath.a_ai", "1 R*"},
      {"bath.calibration", "vary_c"},
      {"bath.calibration_fixed", "0.4 R*"},
      {"heating.gamma_Nbar", "20 s^-1"},
      {"heating.Nbar_large", "true"},
      {"heating.Nbar", "0"},
      {"initial.spin", "uu"},
      {"initial.c0", "0.9"},
      {"initial.c1", "0.1"},
      {"solver.method", "rk4"},
      {"solver.steps_per_period", "128"},
      {"solver.rtol", "1e-8"},
      {"solver.atol", "1e-10"},
      {"solver.sample_every", "1 T_R"},
      {"solver.max_steps", "200000000"},
      {"solver.jobs", "1"},
      {"solver.min_eig_stride", "0"},
      {"solver.n_max", "10"},
      {"solver.convergence", "true"},
      {"solver.convergence_extra", "4"},
      {"solver.convergence_limit", "0.005"},
      {"toggles.gas", "true"},
      {"toggles.drive", "true"},
      {"toggles.heating", "true"},
      {"cool.duration", "1 ms"},
      {"cool.families", "unitary, heating, gas, all"},
      {"cool.drive", "on, off"},
      {"phase_space.duration", "1 t_gate"},
      {"phase_space.spins", "uu, ud"},
      {"phase_space.gas", "on, off"},
      {"gate.duration", "1 t_gate"},
      {"gate.baseline", "true"},
      {"sweep.a_min", "-2.5 R*"},
      {"sweep.a_max", "2.5 R*"},
      {"sweep.points", "13"},
      {"sweep.fit_start", "0 ms"},
      {"sweep.fit_end", "2 ms"},
      {"sweep.cool_duration", "2 ms"},
      {"validate.n_max", "10"},
      {"validate.magnus_n_max", "12"},
  };
  return d;
}

const std::set<std::string>& optional_keys() {
  static const std::set<std::string> k = {"bath.b", "bath.c", "solver.n_cm", "solver.n_wb"};
  return k;
}

}  // namespace

std::string to_string(Dim d) {
  switch (d) {
    case Dim::angular_frequency: return "angular frequency";
    case Dim::rate: return "rate";
    case Dim::time: return "time";
    case Dim::temperature: return "temperature";
    case Dim::length: return "length";
    case Dim::density: return "density";
    case Dim::energy: return "energy";
    case Dim::mass: return "mass";
    case Dim::none: return "dimensionless";
  }
  return "?";
}

double parse_number(const std::string& key, const std::string& text) {
  return ExprParser(key, text).run();
}


double parse_quantity(const std::string& key, const std::string& text, Dim dim,
                      const UnitContext& ctx) {
  if (dim == Dim::none) return parse_number(key, text);
  const std::string s = trim(text);
  const auto cut = s.find_last_of(" \t");
  const std::string unit = cut == std::string::npos ? s : s.substr(cut + 1);
  const std::string expr = cut == std::string::npos ? std::string() : trim(s.substr(0, cut));
  for (const UnitDef& u : kUnits) {
    if (unit != u.name) continue;
    if (u.dim != dim) {
      throw ConfigError(key + ": '" + text + "' is a " + to_string(u.dim) + ", expected a " +
                        to_string(dim) + " (" + units_for(dim) + ")");
    }
    const double v = expr.empty() ? 1.0 : parse_number(key, expr);
    return v * unit_factor(key, u, ctx);
  }
  throw ConfigError(key + ": '" + text + "' has no recognised unit; expected a " +
                    to_string(dim) + " in one of " + units_for(dim));
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::cool: return "cool";
    case Scenario::phase_space: return "phase-space";
    case Scenario::gate: return "gate";
    case Scenario::sweep: return "sweep";
    case Scenario::validate: return "validate";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  for (Scenario v : {Scenario::cool, Scenario::phase_space, Scenario::gate, Scenario::sweep,
                     Scenario::validate}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown scenario '" + s + "'");
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(t);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) {
      throw ConfigError(origin + ": manifest has no \"config\" object");
    }
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw ConfigError(origin + ": config." + k + " is not a string");
      c.entries_[k] = v.get<std::string>();
    }
    return c;
  }
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside a section");
    if (key.empty()) throw ConfigError(where + ": empty key");
    c.entries_[section + "." + key] = unquote(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

Config Config::defaults(Scenario s) {
  Config c;
  c.entries_ = common_defaults();
  // Defaults differ per scenario: the temperature runs use the
  // stronger heating, the phase-space comparison is gas versus unitary.
  if (s == Scenario::cool) c.entries_["heating.gamma_Nbar"] = "200 s^-1";
  if (s == Scenario::phase_space) c.entries_["toggles.heating"] = "false";
  return c;
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  set(trim(assignment.substr(0, eq)), unquote(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos) {
    throw ConfigError("override key '" + key + "' must be section.key");
  }
  entries_[key] = value;
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& Config::raw(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::quantity(const std::string& key, Dim dim, const UnitContext& ctx) const {
  return parse_quantity(key, raw(key), dim, ctx);
}

double Config::number(const std::string& key) const { return parse_number(key, raw(key)); }

int Config::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ConfigError(key + ": expected an integer, got '" + raw(key) + "'");
  }
  return int(v);
}

bool Config::flag(const std::string& key) const { return parse_bool(key, raw(key)); }

std::string Config::text(const std::string& key) const { return trim(raw(key)); }

std::vector<std::string> Config::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(raw(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void Config::check_known_keys() const {
  for (const auto& [k, v] : entries_) {
    if (common_defaults().count(k) == 0 && optional_keys().count(k) == 0) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
}

SpinInit spin_from_string(const std::string& s) {
  if (s == "uu") return SpinInit::uu;
  if (s == "ud") return SpinInit::ud;
  if (s == "du") return SpinInit::du;
  if (s == "dd") return SpinInit::dd;
  if (s == "++") return SpinInit::pp;
  throw ConfigError("spin state '" + s + "' is not one of uu, ud, du, dd, ++");
}

std::string to_string(SpinInit s) {
  switch (s) {
    case SpinInit::uu: return "uu";
    case SpinInit::ud: return "ud";
    case SpinInit::du: return "du";
    case SpinInit::dd: return "dd";
    case SpinInit::pp: return "++";
  }
  return "?";
}

Mat spin_matrix(SpinInit s) {
  if (s == SpinInit::pp) return Mat::Constant(4, 4, 0.25);
  Mat m = Mat::Zero(4, 4);
  const int k = int(s);  // uu, ud, du, dd follow the block index
  m(k, k) = 1.0;
  return m;
}

UnitContext RunConfig::units() const {
  UnitContext u;
  u.t_gate = chain.t_gate;
  u.T_R = 2.0 * units::pi / chain.omega_R;
  u.R_star = species.R_star;
  return u;
}

namespace {

std::vector<bool> on_off_list(const Config& c, const std::string& key) {
  std::vector<bool> out;
  for (const std::string& v : c.list(key)) out.push_back(parse_bool(key, v));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

}  // namespace

RunConfig resolve(Scenario s, const Config& cfg) {
  Config eff = Config::defaults(s);
  eff.merge(cfg);
  eff.check_known_keys();

  RunConfig r;
  r.scenario = s;
  r.source = eff;

  const double M = eff.quantity("chain.ion_mass", Dim::mass);
  r.chain = default_modes(eff.quantity("chain.omega_cm", Dim::angular_frequency),
                          eff.quantity("chain.delta_cm", Dim::angular_frequency),
                          eff.quantity("chain.Omega_cm", Dim::angular_frequency), M);
  r.cm_only = eff.flag("chain.cm_only");
  if (r.cm_only) r.chain = cm_only(r.chain);

  r.species_name = eff.text("bath.species");
  if (r.species_name == "li7") {
    r.species = SpeciesParams::make("li7", units::mass_li7, M, units::polarizability_li_au, false);
  } else if (r.species_name == "li6") {
    r.species = SpeciesParams::make("li6", units::mass_li6, M, units::polarizability_li_au, true);
  } else {
    throw ConfigError("bath.species: '" + r.species_name + "' is not one of li7, li6");
  }
  const UnitContext u = r.units();

  r.a_ai = eff.quantity("bath.a_ai", Dim::length, u);
  if (eff.has("bath.b") != eff.has("bath.c")) {
    throw ConfigError("bath.b and bath.c must be given together");
  }
  if (eff.has("bath.b")) {
    PotentialParams p;
    p.b = eff.quantity("bath.b", Dim::length, u);
    p.c = eff.quantity("bath.c", Dim::length, u);
    p.validate();
    r.explicit_potential = p;
  }
  const std::string fam = eff.text("bath.calibration");
  if (fam == "vary_c") {
    r.calibration.family = CalibrationFamily::vary_c;
  } else if (fam == "vary_b") {
    r.calibration.family = CalibrationFamily::vary_b;
  } else {
    throw ConfigError("bath.calibration: '" + fam + "' is not one of vary_c, vary_b");
  }
  r.calibration.fixed_over_Rstar =
      eff.quantity("bath.calibration_fixed", Dim::length, u) / r.species.R_star;
  r.n0 = eff.quantity("bath.n0", Dim::density);
  r.T = eff.quantity("bath.T", Dim::temperature);
  r.mu_B = eff.quantity("bath.mu_B", Dim::energy);
  if (!(r.n0 >= 0.0) || !(r.T >= 0.0)) throw ConfigError("bath.n0 and bath.T must be >= 0");

  r.heating.gamma_Nbar = eff.quantity("heating.gamma_Nbar", Dim::rate);
  r.heating.Nbar_large = eff.flag("heating.Nbar_large");
  r.heating.Nbar = eff.number("heating.Nbar");
  r.heating.validate();

  r.spin = spin_from_string(eff.text("initial.spin"));
  r.c0 = eff.number("initial.c0");
  r.c1 = eff.number("initial.c1");
  thermal_mix(r.c0, r.c1, 2);  // validates

  const int n_max = eff.integer("solver.n_max");
  r.n_cm = eff.has("solver.n_cm") ? eff.integer("solver.n_cm") : n_max;
  r.n_wb = eff.has("solver.n_wb") ? eff.integer("solver.n_wb") : n_max;
  if (r.n_cm < 2 || r.n_wb < 2) throw ConfigError("solver: Fock cutoffs must be >= 2");

  const std::string method = eff.text("solver.method");
  if (method == "rk4") {
    r.solver.method = SolverOptions::Method::rk4;
  } else if (method == "dopri5") {
    r.solver.method = SolverOptions::Method::dopri5;
  } else {
    throw ConfigError("solver.method: '" + method + "' is not one of rk4, dopri5");
  }
  r.solver.steps_per_period = eff.integer("solver.steps_per_period");
  r.solver.rtol = eff.number("solver.rtol");
  r.solver.atol = eff.number("solver.atol");
  r.solver.sample_every = eff.quantity("solver.sample_every", Dim::time, u);
  r.solver.max_steps = long(eff.number("solver.max_steps"));
  r.solver.jobs = eff.integer("solver.jobs");
  r.solver.min_eig_stride = eff.integer("solver.min_eig_stride");
  r.solver.validate();
  r.convergence = eff.flag("solver.convergence");
  r.convergence_extra = eff.integer("solver.convergence_extra");
  r.convergence_limit = eff.number("solver.convergence_limit");
  if (r.convergence_extra < 1) throw ConfigError("solver.convergence_extra must be >= 1");

  r.toggles.gas = eff.flag("toggles.gas");
  r.toggles.drive = eff.flag("toggles.drive");
  r.toggles.heating = eff.flag("toggles.heating");

  r.cool_duration = eff.quantity("cool.duration", Dim::time, u);
  r.cool_families = eff.list("cool.families");
  for (const std::string& f : r.cool_families) {
    if (f != "unitary" && f != "heating" && f != "gas" && f != "all") {
      throw ConfigError("cool.families: '" + f + "' is not one of unitary, heating, gas, all");
    }
  }
  r.cool_drives = on_off_list(eff, "cool.drive");

  r.ps_duration = eff.quantity("phase_space.duration", Dim::time, u);
  for (const std::string& sp : eff.list("phase_space.spins")) {
    r.ps_spins.push_back(spin_from_string(sp));
  }
  r.ps_gas = on_off_list(eff, "phase_space.gas");

  r.gate_duration = eff.quantity("gate.duration", Dim::time, u);
  r.gate_baseline = eff.flag("gate.baseline");

  const double a_lo = eff.quantity("sweep.a_min", Dim::length, u) / r.species.R_star;
  const double a_hi = eff.quantity("sweep.a_max", Dim::length, u) / r.species.R_star;
  const int pts = eff.integer("sweep.points");
  if (pts < 1) throw ConfigError("sweep.points must be >= 1");
  for (int k = 0; k < pts; ++k) {
    r.sweep_points.push_back(pts == 1 ? a_lo : a_lo + k * (a_hi - a_lo) / (pts - 1));
  }
  r.fit_t0 = eff.quantity("sweep.fit_start", Dim::time, u);
  r.fit_t1 = eff.quantity("sweep.fit_end", Dim::time, u);
  r.sweep_cool_duration = eff.quantity("sweep.cool_duration", Dim::time, u);
  if (!(r.fit_t1 > r.fit_t0) || r.fit_t1 > r.sweep_cool_duration * (1 + 1e-12)) {
    throw ConfigError("sweep: need fit_start < fit_end <= cool_duration");
  }

  r.validate_n_max = eff.integer("validate.n_max");
  r.magnus_n_max = eff.integer("validate.magnus_n_max");

  for (double d : {r.cool_duration, r.ps_duration, r.gate_duration, r.sweep_cool_duration}) {
    if (!(d > 0.0)) throw ConfigError("durations must be positive");
  }
  return r;
}

}  // namespace iongate::cli
