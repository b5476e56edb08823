#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "magg/errors.hpp"
#include "magg/io.hpp"

namespace {

using namespace magg;
namespace fs = std::filesystem;
constexpr double pi = std::numbers::pi;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> bits(const Field& f) { return {f.values().begin(), f.values().end()}; }

const char* kMinimal = R"({
  "grid": {"n": 64, "box_length": 6.2831853},
  "params": {"sigma": 1.0, "eps": 0.25, "potential": "quartic"},
  "dt": 1e-3,
  "t_end": 0.25
})";

template <class Fn>
std::string config_error(Fn&& fn, std::string* field = nullptr) {
  try {
    fn();
  } catch (const ConfigError& e) {
    if (field) *field = e.field();
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError";
  return {};
}

// Strict RFC 4180: CRLF record ends, quoted fields may hold commas, quotes and
// line breaks, a stray quote or bare CR/LF is an error, and every record has
// the header's field count.
std::vector<std::vector<std::string>> parse_rfc4180(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t i = 0;
  bool at_field_start = true;
  while (i < text.size()) {
    const char c = text[i];
    if (at_field_start && c == '"') {
      ++i;
      for (;;) {
        if (i >= text.size()) throw std::runtime_error("unterminated quote");
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += text[i++];
      }
      at_field_start = false;
      continue;
    }
    if (c == ',') {
      row.push_back(field);
      field.clear();
      at_field_start = true;
      ++i;
    } else if (c == '\r') {
      if (i + 1 >= text.size() || text[i + 1] != '\n') throw std::runtime_error("bare CR");
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
      at_field_start = true;
      i += 2;
    } else if (c == '\n') {
      throw std::runtime_error("bare LF");
    } else if (c == '"') {
      throw std::runtime_error("quote inside unquoted field");
    } else {
      if (!at_field_start && !field.empty() && i > 0 && text[i - 1] == '"') throw std::runtime_error("text after quote");
      field += c;
      at_field_start = false;
      ++i;
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) throw std::runtime_error("ragged record");
  return rows;
}

State random_state(int n, std::uint64_t seed) {
  SimConfig c;
  c.grid.n = n;
  c.seed = seed;
  c.initial_condition.phi = {0.1, {{{1, 2}, 0.3, 0.4}}};
  c.initial_condition.u_x = {0.0, {{{0, 1}, 0.5, 0.1}}};
  c.initial_condition.u_y = {0.2, {{{3, 1}, 0.5, 0.0}}};
  c.initial_condition.omega = {0.05, {{{1, 1}, 0.2, 1.0}}};
  c.initial_condition.noise = {0.05, 4};
  State s = make_initial_state(c, make_grid(n, 2 * pi));
  s.time = 0.123456789;
  return s;
}

TEST(Config, MinimalIsValid) {
  const SimConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.grid.n, 64);
  EXPECT_DOUBLE_EQ(c.grid.box_length, 6.2831853);
  EXPECT_DOUBLE_EQ(c.dt, 1e-3);
  EXPECT_DOUBLE_EQ(c.t_end, 0.25);
  EXPECT_EQ(c.params.potential, Potential::Quartic);
  EXPECT_EQ(c.params.variant, Variant::MAGG);
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(MAGG_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
  }
}

TEST(Config, LogPotentialNeedsThetaBelowTheta0) {
  const std::string text = R"({"grid": {"n": 32}, "params": {"potential": "logarithmic", "theta": 2.0, "theta0": 1.5},
                             "dt": 1e-3, "t_end": 0.1})";
  std::string field;
  const std::string msg = config_error([&] { parse_config(text); }, &field);
  EXPECT_NE(msg.find("0 < θ < θ₀"), std::string::npos) << msg;
  EXPECT_NE(field.find("theta"), std::string::npos);
}

TEST(Config, UnknownKeyIsNamed) {
  const std::string text = R"({"grid": {"n": 32}, "params": {"viscocity": 0.1}, "dt": 1e-3, "t_end": 0.1})";
  std::string field;
  const std::string msg = config_error([&] { parse_config(text); }, &field);
  EXPECT_NE(msg.find("viscocity"), std::string::npos) << msg;
  EXPECT_EQ(field, "params.viscocity");
}

TEST(Config, WrongTypeIsNamed) {
  std::string field;
  config_error([] { parse_config(R"({"grid": {"n": "big"}, "dt": 1e-3, "t_end": 0.1})"); }, &field);
  EXPECT_EQ(field, "grid.n");
  config_error([] { parse_config(R"({"grid": {"n": 30}, "dt": -1, "t_end": 0.1})"); }, &field);
  EXPECT_EQ(field, "dt");
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  const std::string text = "{\n  \"dt\": 1e-3,\n  \"t_end\" 0.1\n}";
  const std::string msg = config_error([&] { parse_config(text); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/magg.json"), ConfigError);
}

TEST(Config, SerializationIsIdempotent) {
  for (const auto& entry : fs::directory_iterator(MAGG_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const SimConfig c = load_config(entry.path());
    const std::string once = serialize_config(c);
    const SimConfig back = parse_config(once);
    EXPECT_TRUE(back == c) << entry.path();
    EXPECT_EQ(serialize_config(back), once);
    EXPECT_EQ(config_digest(back), config_digest(c));
  }
}

TEST(Config, DigestIsSha256Hex) {
  const SimConfig c = parse_config(kMinimal);
  const std::string d = config_digest(c);
  EXPECT_EQ(d.size(), 64u);
  EXPECT_EQ(d.find_first_not_of("0123456789abcdef"), std::string::npos);
  SimConfig other = c;
  other.seed = 1;
  EXPECT_NE(config_digest(other), d);
}

TEST(Snapshot, RoundTripIsBitExact) {
  const State s = random_state(32, 5);
  const SnapshotData d = decode_snapshot(encode_snapshot(s));
  EXPECT_EQ(d.n, 32);
  EXPECT_EQ(d.time, s.time);
  ASSERT_EQ(d.fields.size(), 4u);
  EXPECT_EQ(d.fields[0].first, "phi");
  EXPECT_EQ(d.fields[0].second, bits(s.phi));
  EXPECT_EQ(d.fields[1].second, bits(s.u.x));
  EXPECT_EQ(d.fields[2].second, bits(s.u.y));
  EXPECT_EQ(d.fields[3].second, bits(s.omega));

  const fs::path path = fs::temp_directory_path() / "magg_io_roundtrip.bin";
  write_snapshot(s, path);
  const State r = read_snapshot(path, ModelParams{});
  EXPECT_EQ(bits(r.phi), bits(s.phi));
  EXPECT_EQ(bits(r.u.x), bits(s.u.x));
  EXPECT_EQ(bits(r.u.y), bits(s.u.y));
  EXPECT_EQ(bits(r.omega), bits(s.omega));
  EXPECT_EQ(r.time, s.time);
  fs::remove(path);
}

TEST(Snapshot, CorruptHeadersAreRejected) {
  const std::string good = encode_snapshot(random_state(16, 1));
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad), MagicMismatch);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(decode_snapshot(bad), VersionMismatch);
  EXPECT_THROW(decode_snapshot(good.substr(0, good.size() - 3)), TruncatedPayload);
  EXPECT_THROW(decode_snapshot(good.substr(0, 10)), TruncatedPayload);
  EXPECT_THROW(decode_snapshot(good + "x"), SnapshotError);
}

TEST(Snapshot, MatchesGoldenFile) {
  const std::string golden = slurp(fs::path(MAGG_TEST_DATA) / "golden_snapshot.bin");
  ASSERT_FALSE(golden.empty());
  const int n = 8;
  auto g = make_grid(n, 2 * pi);
  auto field = [&](int f) {
    std::vector<double> v(n * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v[j * n + i] = (f + 1) * 0.125 * (j * n + i) - 0.75 * f - 1.0;
    return Field::from_values(g, v);
  };
  State s;
  s.time = 0.5;
  s.phi = field(0);
  s.u = VecField{field(1), field(2)};
  s.omega = field(3);
  EXPECT_EQ(encode_snapshot(s), golden);

  const SnapshotData d = decode_snapshot(golden);
  EXPECT_EQ(d.n, 8);
  EXPECT_EQ(d.box_length, 2 * pi);
  EXPECT_EQ(d.time, 0.5);
  EXPECT_EQ(d.fields[3].first, "omega");
  EXPECT_EQ(d.fields[3].second, bits(s.omega));
}

TEST(Ledger, CsvIsStrictRfc4180) {
  SimConfig c;
  c.grid.n = 16;
  c.t_end = 0.005;
  c.initial_condition.phi = {0.1, {{{1, 1}, 0.4, 0.0}}};
  const RunResult r = run(c);
  const std::string text = ledger_csv(r.ledger);
  const auto rows = parse_rfc4180(text);
  ASSERT_EQ(rows.size(), r.ledger.records.size() + 1);
  EXPECT_EQ(rows[0].front(), "t");
  EXPECT_EQ(rows[0].back(), "energy_residual");
  EXPECT_EQ(rows[0].size(), 16u);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& rec = r.ledger.records[k - 1];
    EXPECT_EQ(std::stod(rows[k][0]), rec.time);
    EXPECT_EQ(std::stod(rows[k][1]), rec.energy.total);
    EXPECT_EQ(std::stod(rows[k][11]), rec.mass);
  }
}

TEST(Ledger, ReaderRejectsMalformedText) {
  EXPECT_THROW(parse_rfc4180("a,b\nc,d\n"), std::runtime_error);
  EXPECT_THROW(parse_rfc4180("a,b\r\nc\r\n"), std::runtime_error);
  EXPECT_THROW(parse_rfc4180("a,b\"\r\n"), std::runtime_error);
  EXPECT_EQ(parse_rfc4180("\"x,\"\"y\"\"\",b\r\n")[0][0], "x,\"y\"");
}

TEST(Reports, SweepJsonCarriesRequiredFields) {
  SweepReport r;
  r.parameter = "eta_r";
  r.parameter_values = {0.1, 0.01};
  r.fit_abscissa = r.parameter_values;
  r.errors = {1e-2, 1e-3};
  r.diffs.resize(2);
  r.fitted_slope = 1.0;
  r.fit_r2 = 1.0;
  const std::string text = sweep_report_json(r, "abc");
  for (const char* key : {"\"parameter_values\"", "\"errors\"", "\"fitted_slope\"", "\"fit_r2\"", "\"config_digest\""})
    EXPECT_NE(text.find(key), std::string::npos) << key;
  SweepReport single;
  single.parameter_values = {0.1};
  single.errors = {1e-2};
  EXPECT_NE(sweep_report_json(single, "abc").find("\"fitted_slope\": null"), std::string::npos);
}

}  // namespace
