#include "magg/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "magg/errors.hpp"

namespace magg {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Strict JSON reading

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ConfigError(join(where, key), "unknown key \"" + key + "\"");
}

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw ConfigError(field, "expected an integer");
}

int get_int(const json& v, const std::string& field) {
  const long long x = get_integer(v, field);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(field, "integer out of range");
  return static_cast<int>(x);
}

bool get_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

// A number sets both phases; a two-element array sets [phase1, phase2].
PhasePair get_pair(const json& v, const std::string& field) {
  if (v.is_number()) {
    const double x = v.get<double>();
    return {x, x};
  }
  if (v.is_array() && v.size() == 2)
    return {get_number(v[0], field + "[0]"), get_number(v[1], field + "[1]")};
  throw ConfigError(field, "expected a number or a [phase1, phase2] pair");
}

template <class T>
T get_enum(const json& v, const std::string& field, const std::map<std::string, T>& names) {
  const std::string s = get_string(v, field);
  auto it = names.find(s);
  if (it == names.end()) {
    std::string list;
    for (const auto& [name, value] : names) list += (list.empty() ? "" : ", ") + name;
    throw ConfigError(field, "unknown value \"" + s + "\" (expected one of " + list + ")");
  }
  return it->second;
}

template <class T>
std::string enum_name(T value, const std::map<std::string, T>& names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return "";
}

const std::map<std::string, DealiasRule> kRules{{"two_thirds", DealiasRule::TwoThirds}, {"half", DealiasRule::Half}};
const std::map<std::string, Potential> kPotentials{{"quartic", Potential::Quartic},
                                                   {"logarithmic", Potential::Logarithmic}};
const std::map<std::string, Variant> kVariants{
    {"magg", Variant::MAGG}, {"agg", Variant::AGG}, {"model_h", Variant::ModelH}};
const std::map<std::string, InitialKind> kKinds{{"uniform_plus_modes", InitialKind::UniformPlusModes},
                                                {"tanh_stripe", InitialKind::TanhStripe},
                                                {"from_snapshot", InitialKind::FromSnapshot}};

FieldSpec read_field_spec(const json& v, const std::string& where) {
  require_keys(v, where, {"mean", "modes"});
  FieldSpec spec;
  if (v.contains("mean")) spec.mean = get_number(v["mean"], join(where, "mean"));
  if (v.contains("modes")) {
    const std::string mw = join(where, "modes");
    if (!v["modes"].is_array()) throw ConfigError(mw, "expected an array");
    for (std::size_t i = 0; i < v["modes"].size(); ++i) {
      const std::string w = mw + "[" + std::to_string(i) + "]";
      const json& m = v["modes"][i];
      require_keys(m, w, {"k", "amplitude", "phase"});
      ModeSpec mode;
      if (!m.contains("k") || !m["k"].is_array() || m["k"].size() != 2)
        throw ConfigError(join(w, "k"), "expected [kx, ky]");
      mode.k = {get_int(m["k"][0], join(w, "k")), get_int(m["k"][1], join(w, "k"))};
      if (!m.contains("amplitude")) throw ConfigError(join(w, "amplitude"), "required");
      mode.amplitude = get_number(m["amplitude"], join(w, "amplitude"));
      if (m.contains("phase")) mode.phase = get_number(m["phase"], join(w, "phase"));
      spec.modes.push_back(mode);
    }
  }
  return spec;
}

ModelParams read_params(const json& v) {
  const std::string w = "params";
  require_keys(v, w,
               {"sigma", "eps", "rho1", "rho2", "eta", "eta_r", "c0", "cd", "ca", "theta", "theta0", "potential",
                "alpha", "variant", "rho_bar", "stabilization", "delta_floor"});
  ModelParams p;
  auto num = [&](const char* key, double& out) {
    if (v.contains(key)) out = get_number(v[key], join(w, key));
  };
  auto pair = [&](const char* key, PhasePair& out) {
    if (v.contains(key)) out = get_pair(v[key], join(w, key));
  };
  num("sigma", p.sigma);
  num("eps", p.eps);
  num("rho1", p.rho1);
  num("rho2", p.rho2);
  pair("eta", p.eta);
  pair("eta_r", p.eta_r);
  pair("c0", p.c0);
  pair("cd", p.cd);
  pair("ca", p.ca);
  num("theta", p.theta);
  num("theta0", p.theta0);
  if (v.contains("potential")) p.potential = get_enum(v["potential"], join(w, "potential"), kPotentials);
  num("alpha", p.alpha);
  if (v.contains("variant")) p.variant = get_enum(v["variant"], join(w, "variant"), kVariants);
  num("rho_bar", p.rho_bar);
  if (v.contains("stabilization") && !v["stabilization"].is_null())
    p.stabilization = get_number(v["stabilization"], join(w, "stabilization"));
  num("delta_floor", p.delta_floor);
  return p;
}

SimConfig read_config(const json& root) {
  require_keys(root, "", {"grid", "params", "dt", "t_end", "cfl_number", "fixed_dt", "flow", "output", "seed",
                          "initial_condition"});
  SimConfig c;
  if (!root.contains("grid")) throw ConfigError("grid", "required");
  {
    const json& g = root["grid"];
    require_keys(g, "grid", {"n", "box_length", "dealias"});
    if (!g.contains("n")) throw ConfigError("grid.n", "required");
    c.grid.n = get_int(g["n"], "grid.n");
    if (g.contains("box_length")) c.grid.box_length = get_number(g["box_length"], "grid.box_length");
    if (g.contains("dealias")) c.grid.dealias = get_enum(g["dealias"], "grid.dealias", kRules);
  }
  if (root.contains("params")) c.params = read_params(root["params"]);
  if (!root.contains("dt")) throw ConfigError("dt", "required");
  c.dt = get_number(root["dt"], "dt");
  if (!root.contains("t_end")) throw ConfigError("t_end", "required");
  c.t_end = get_number(root["t_end"], "t_end");
  if (root.contains("cfl_number")) c.cfl_number = get_number(root["cfl_number"], "cfl_number");
  if (root.contains("fixed_dt")) c.fixed_dt = get_bool(root["fixed_dt"], "fixed_dt");
  if (root.contains("flow")) {
    const json& f = root["flow"];
    require_keys(f, "flow", {"pressure_iterations", "implicit_viscosity", "implicit_omega_diffusion"});
    if (f.contains("pressure_iterations"))
      c.flow.pressure_iterations = get_int(f["pressure_iterations"], "flow.pressure_iterations");
    if (f.contains("implicit_viscosity") && !f["implicit_viscosity"].is_null())
      c.flow.implicit_viscosity = get_number(f["implicit_viscosity"], "flow.implicit_viscosity");
    if (f.contains("implicit_omega_diffusion") && !f["implicit_omega_diffusion"].is_null())
      c.flow.implicit_omega_diffusion = get_number(f["implicit_omega_diffusion"], "flow.implicit_omega_diffusion");
  }
  if (root.contains("output")) {
    const json& o = root["output"];
    require_keys(o, "output", {"directory", "ledger_every", "snapshot_every"});
    if (o.contains("directory")) c.output.directory = get_string(o["directory"], "output.directory");
    if (o.contains("ledger_every")) c.output.ledger_every = get_int(o["ledger_every"], "output.ledger_every");
    if (o.contains("snapshot_every")) c.output.snapshot_every = get_int(o["snapshot_every"], "output.snapshot_every");
  }
  if (root.contains("seed")) {
    const long long s = get_integer(root["seed"], "seed");
    if (s < 0) throw ConfigError("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (root.contains("initial_condition")) {
    const json& ic = root["initial_condition"];
    const std::string w = "initial_condition";
    require_keys(ic, w,
                 {"type", "phi", "u_x", "u_y", "omega", "noise", "width", "amplitude", "path"});
    auto& out = c.initial_condition;
    if (ic.contains("type")) out.kind = get_enum(ic["type"], join(w, "type"), kKinds);
    if (ic.contains("phi")) out.phi = read_field_spec(ic["phi"], join(w, "phi"));
    if (ic.contains("u_x")) out.u_x = read_field_spec(ic["u_x"], join(w, "u_x"));
    if (ic.contains("u_y")) out.u_y = read_field_spec(ic["u_y"], join(w, "u_y"));
    if (ic.contains("omega")) out.omega = read_field_spec(ic["omega"], join(w, "omega"));
    if (ic.contains("noise")) {
      const json& nz = ic["noise"];
      require_keys(nz, join(w, "noise"), {"amplitude", "max_mode"});
      if (nz.contains("amplitude")) out.noise.amplitude = get_number(nz["amplitude"], join(w, "noise.amplitude"));
      if (nz.contains("max_mode")) out.noise.max_mode = get_int(nz["max_mode"], join(w, "noise.max_mode"));
    }
    if (ic.contains("width")) out.width = get_number(ic["width"], join(w, "width"));
    if (ic.contains("amplitude")) out.amplitude = get_number(ic["amplitude"], join(w, "amplitude"));
    if (ic.contains("path")) out.path = get_string(ic["path"], join(w, "path"));
  }
  c.validate();
  return c;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json pair_json(const PhasePair& p) { return json::array({p.phase1, p.phase2}); }

json field_spec_json(const FieldSpec& s) {
  json modes = json::array();
  for (const auto& m : s.modes)
    modes.push_back({{"k", {m.k[0], m.k[1]}}, {"amplitude", m.amplitude}, {"phase", m.phase}});
  return {{"mean", s.mean}, {"modes", modes}};
}

json config_json(const SimConfig& c) {
  const auto& p = c.params;
  json params = {{"sigma", p.sigma},
                 {"eps", p.eps},
                 {"rho1", p.rho1},
                 {"rho2", p.rho2},
                 {"eta", pair_json(p.eta)},
                 {"eta_r", pair_json(p.eta_r)},
                 {"c0", pair_json(p.c0)},
                 {"cd", pair_json(p.cd)},
                 {"ca", pair_json(p.ca)},
                 {"theta", p.theta},
                 {"theta0", p.theta0},
                 {"potential", enum_name(p.potential, kPotentials)},
                 {"alpha", p.alpha},
                 {"variant", enum_name(p.variant, kVariants)},
                 {"rho_bar", p.rho_bar},
                 {"stabilization", p.stabilization ? json(*p.stabilization) : json(nullptr)},
                 {"delta_floor", p.delta_floor}};
  const auto& ic = c.initial_condition;
  json flow = {{"pressure_iterations", c.flow.pressure_iterations},
               {"implicit_viscosity", c.flow.implicit_viscosity ? json(*c.flow.implicit_viscosity) : json(nullptr)},
               {"implicit_omega_diffusion",
                c.flow.implicit_omega_diffusion ? json(*c.flow.implicit_omega_diffusion) : json(nullptr)}};
  return {{"grid", {{"n", c.grid.n}, {"box_length", c.grid.box_length}, {"dealias", enum_name(c.grid.dealias, kRules)}}},
          {"params", params},
          {"dt", c.dt},
          {"t_end", c.t_end},
          {"cfl_number", c.cfl_number},
          {"fixed_dt", c.fixed_dt},
          {"flow", flow},
          {"output",
           {{"directory", c.output.directory},
            {"ledger_every", c.output.ledger_every},
            {"snapshot_every", c.output.snapshot_every}}},
          {"seed", c.seed},
          {"initial_condition",
           {{"type", enum_name(ic.kind, kKinds)},
            {"phi", field_spec_json(ic.phi)},
            {"u_x", field_spec_json(ic.u_x)},
            {"u_y", field_spec_json(ic.u_y)},
            {"omega", field_spec_json(ic.omega)},
            {"noise", {{"amplitude", ic.noise.amplitude}, {"max_mode", ic.noise.max_mode}}},
            {"width", ic.width},
            {"amplitude", ic.amplitude},
            {"path", ic.path}}}};
}

// ---------------------------------------------------------------------------
// Little-endian byte packing

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

class Reader {
public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t count, const char* what) {
    if (bytes_.size() - pos_ < count)
      throw TruncatedPayload(std::string("snapshot truncated while reading ") + what);
    auto s = bytes_.substr(pos_, count);
    pos_ += count;
    return s;
  }
  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(s[b]);
    return v;
  }
  double f64(const char* what) {
    auto s = take(8, what);
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(s[b]);
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Config

SimConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ConfigError("", "JSON parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                              ": " + e.what());
  }
  try {
    return read_config(root);
  } catch (const json::exception& e) {
    throw ConfigError("", e.what());
  }
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text);
}

std::string serialize_config(const SimConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string config_digest(const SimConfig& config) {
  const std::string text = serialize_config(config);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshots

std::string encode_snapshot(const State& state) {
  const auto& g = state.grid();
  std::string out = "MAGG";
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(g.n()));
  put_f64(out, g.box_length());
  put_f64(out, state.time);
  const std::pair<const char*, const Field*> fields[] = {
      {"phi", &state.phi}, {"u_x", &state.u.x}, {"u_y", &state.u.y}, {"omega", &state.omega}};
  put_u32(out, 4);
  for (const auto& [name, f] : fields) {
    const std::uint32_t len = static_cast<std::uint32_t>(std::strlen(name));
    put_u32(out, len);
    out.append(name, len);
    for (double v : f->values()) put_f64(out, v);
  }
  return out;
}

SnapshotData decode_snapshot(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(std::min<std::size_t>(4, bytes.size()), "magic") != "MAGG" || bytes.size() < 4)
    throw MagicMismatch("not a snapshot: magic bytes differ from \"MAGG\"");
  const std::uint32_t version = r.u32("version");
  if (version != kSnapshotVersion)
    throw VersionMismatch("snapshot format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kSnapshotVersion) + ")");
  SnapshotData d;
  const std::uint32_t n = r.u32("n");
  if (n < 8 || n % 2 != 0 || n > 65536) throw SnapshotError("snapshot grid size " + std::to_string(n) + " is invalid");
  d.n = static_cast<int>(n);
  d.box_length = r.f64("box_length");
  d.time = r.f64("time");
  const std::uint32_t count = r.u32("field_count");
  const std::size_t values = static_cast<std::size_t>(n) * n;
  for (std::uint32_t f = 0; f < count; ++f) {
    const std::uint32_t len = r.u32("field name length");
    std::string name(r.take(len, "field name"));
    if (r.remaining() / 8 < values) throw TruncatedPayload("snapshot truncated in field \"" + name + "\"");
    std::vector<double> v(values);
    for (auto& x : v) x = r.f64("field values");
    d.fields.emplace_back(std::move(name), std::move(v));
  }
  if (r.remaining() != 0)
    throw SnapshotError("snapshot payload has " + std::to_string(r.remaining()) + " unexpected trailing bytes");
  return d;
}

void write_snapshot(const State& state, const std::filesystem::path& path) { write_text(path, encode_snapshot(state)); }

SnapshotData read_snapshot_data(const std::filesystem::path& path) { return decode_snapshot(read_file(path)); }

State read_snapshot(const std::filesystem::path& path, const ModelParams& params, DealiasRule rule) {
  SnapshotData d = read_snapshot_data(path);
  const GridPtr grid = make_grid(d.n, d.box_length);
  auto take = [&](const char* name) {
    for (auto& [fname, v] : d.fields)
      if (fname == name) return Field::from_values(grid, std::move(v));
    throw SnapshotError(std::string("snapshot lacks field \"") + name + "\"");
  };
  Field phi = take("phi");
  Field ux = take("u_x");
  Field uy = take("u_y");
  Field omega = take("omega");
  return make_state(d.time, VecField{std::move(ux), std::move(uy)}, std::move(omega), std::move(phi), params, rule);
}

// ---------------------------------------------------------------------------
// Ledger and reports

std::string ledger_csv(const EnergyLedger& ledger) {
  std::string out =
      "t,E_total,E_kin_u,E_kin_omega,E_grad,E_pot,D_total,D_mu,D_visc,D_rot,D_omega,mass,separation,max_u,"
      "div_residual,energy_residual\r\n";
  for (const auto& r : ledger.records) {
    const double cols[] = {r.time,
                           r.energy.total,
                           r.energy.kinetic_u,
                           r.energy.kinetic_omega,
                           r.energy.gradient,
                           r.energy.potential,
                           r.dissipation.total,
                           r.dissipation.mu_grad,
                           r.dissipation.viscous_sym,
                           r.dissipation.rotational_coupling,
                           r.dissipation.omega_diffusion,
                           r.mass,
                           r.separation,
                           r.max_u,
                           r.div_residual,
                           r.energy_residual};
    bool first = true;
    for (double v : cols) {
      if (!first) out += ',';
      out += fmt17(v);
      first = false;
    }
    out += "\r\n";
  }
  return out;
}

void write_ledger_csv(const EnergyLedger& ledger, const std::filesystem::path& path) {
  write_text(path, ledger_csv(ledger));
}

std::string sweep_report_json(const SweepReport& report, const std::string& digest) {
  json diffs = json::array();
  for (const auto& d : report.diffs)
    diffs.push_back({{"sup_u_l2_sq", d.sup_u_l2_sq},
                     {"sup_omega_l2_sq", d.sup_omega_l2_sq},
                     {"sup_phi_h2_sq", d.sup_phi_h2_sq},
                     {"combined", d.combined},
                     {"samples", d.sample_times.size()}});
  json j = {{"parameter", report.parameter},
            {"parameter_values", report.parameter_values},
            {"fit_abscissa", report.fit_abscissa},
            {"errors", report.errors},
            {"diffs", diffs},
            {"fitted_slope", opt_json(report.fitted_slope)},
            {"fit_r2", opt_json(report.fit_r2)},
            {"complete", report.complete},
            {"config_digest", digest}};
  if (!report.complete) j["failure"] = report.failure;
  return j.dump(2) + "\n";
}

std::string energy_order_json(const EnergyOrderReport& report) {
  json j = {{"dt_values", report.dt_values},
            {"max_residuals", report.max_residuals},
            {"ratios", report.ratios},
            {"fitted_order", opt_json(report.fitted_order)},
            {"fit_skipped", report.fit_skipped}};
  return j.dump(2) + "\n";
}

std::string convergence_json(const ConvergenceReport& report) {
  json j = {{"grids", report.grids}, {"errors", report.errors}};
  return j.dump(2) + "\n";
}

std::string mollifier_json(const MollifierReport& report) {
  json j = {{"k_level", report.k_level},
            {"iterations", report.iterations},
            {"residual", report.residual},
            {"separation", report.separation},
            {"mean_drift", report.mean_drift},
            {"used_picard", report.used_picard}};
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace magg
