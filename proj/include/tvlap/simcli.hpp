#pragma once

/// Command-line front end: CSV ingestion and emission, the experiment
/// drivers, and the model comparison harness.
///
/// Exit codes: 0 success, 1 analytic failure (check failed, filter broke
/// down), 2 usage, configuration or input-data error.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tvlap/analysis.hpp"
#include "tvlap/filter.hpp"
#include "tvlap/model.hpp"
#include "tvlap/simgen.hpp"
#include "tvlap/verify.hpp"

namespace tvlap::cli {

/// Input files, configuration values and flag combinations the user can fix.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- numbers

/// Shortest-safe text: 17 significant digits, '.' decimal point, no locale.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// ---------------------------------------------------------------- CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;  ///< column-major
  std::vector<std::vector<std::string>> text;  ///< raw trimmed cells, column-major

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

/// strict: every cell must be a finite number. Otherwise non-numeric cells
/// read as NaN and stay available through `text`.
inline CsvTable parse_csv(std::istream& in, const std::string& source, bool strict = true) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (table.header.empty()) {
      for (const auto& f : fields) table.header.push_back(trim(f));
      table.columns.resize(fields.size());
      table.text.resize(fields.size());
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto v = parse_double(fields[i]);
      table.text[i].push_back(trim(fields[i]));
      if (!v && !strict) {
        table.columns[i].push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      if (!v) {
        throw UsageError(source + ":" + std::to_string(line_no) + ": field '" +
                         table.header[i] + "' is not a finite number: '" + fields[i] + "'");
      }
      table.columns[i].push_back(*v);
    }
  }
  if (table.header.empty()) throw UsageError(source + ": missing header row");
  if (table.rows() == 0) throw UsageError(source + ": no data rows");
  return table;
}

inline CsvTable read_csv(const std::string& path, bool strict = true) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  return parse_csv(in, path, strict);
}

inline void require_increasing(const std::vector<double>& t, const std::string& source) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) {
      // +2: one for the header, one for 1-based numbering.
      throw UsageError(source + ": time is not strictly increasing at data row " +
                       std::to_string(i + 1) + " (line " + std::to_string(i + 2) + ")");
    }
  }
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw UsageError("cannot write '" + path + "'");
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

// ---------------------------------------------------------------- config

/// Parses --q: a scalar, or a comma-separated diagonal.
/// G1 takes a single value. For G2/G3 a scalar means q*I and a list is the
/// diagonal, zero-padded on the right to K+1 entries.
inline Matrix parse_q(const std::string& text, unsigned order, NoiseDriver driver) {
  std::vector<double> values;
  for (const auto& field : split(text, ',')) {
    const auto v = parse_double(field);
    if (!v) throw UsageError("--q: '" + field + "' is not a number");
    values.push_back(*v);
  }
  if (driver == NoiseDriver::G1) {
    if (values.size() != 1) {
      throw UsageError("--q: driver g1 takes one variance, got " +
                       std::to_string(values.size()));
    }
    return Matrix{{values[0]}};
  }
  if (values.size() == 1) return values[0] * Matrix::identity(order + 1);
  if (values.size() > order + 1) {
    throw UsageError("--q: " + std::to_string(values.size()) +
                     " diagonal entries exceed state dimension " + std::to_string(order + 1));
  }
  return padded_diagonal_q(order, values);
}

inline NoiseDriver parse_driver(const std::string& text) {
  if (text == "g1") return NoiseDriver::G1;
  if (text == "g2") return NoiseDriver::G2;
  if (text == "g3") return NoiseDriver::G3;
  throw UsageError("--g must be g1, g2 or g3, got '" + text + "'");
}

/// Reads flat key=value lines ('#' starts a comment) and renders them as
/// "--key=value" arguments.
inline std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(body.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty() || key == "config") {
      throw UsageError(path + ":" + std::to_string(line_no) + ": invalid key '" + key + "'");
    }
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

/// Flags shared by the filtering subcommands; defaults are set per subcommand.
struct ModelFlags {
  unsigned k = 4;
  double t = 0.1;
  std::string g = "g1";
  std::string q = "0.0001";
  double r = 1.0;
  double epsilon = 1e-6;

  TvlapConfig config() const {
    TvlapConfig c;
    c.order = k;
    c.time_gap = t;
    c.driver = parse_driver(g);
    c.q = parse_q(q, k, c.driver);
    c.r = r;
    c.epsilon = epsilon;
    try {
      validate(c);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

inline void add_model_flags(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--k", f.k, "Polynomial order K")->capture_default_str();
  sub->add_option("--t", f.t, "Model time gap T")->capture_default_str();
  sub->add_option("--g", f.g, "Noise driver")
      ->check(CLI::IsMember({"g1", "g2", "g3"}))
      ->capture_default_str();
  sub->add_option("--q", f.q, "Process-noise variance: scalar or comma-separated diagonal")
      ->capture_default_str();
  sub->add_option("--r", f.r, "Measurement-noise variance R")->capture_default_str();
  sub->add_option("--epsilon", f.epsilon, "Threshold-mode |d1| bound")->capture_default_str();
}

// ---------------------------------------------------------------- comparison

inline constexpr double kCompareSplitTime = 100.0;
inline constexpr unsigned kCompareHorizon = 200;

/// Models of the sine-plus-exponential comparison, all with T = 0.001 and R = 1.
/// Baselines use the scalar driver with q = 300^2. TVLAP (K = 4) puts the
/// same variance on the third derivative: Q = diag(0, 0, 0, 300^2, 0) with
/// the identity driver.
inline StateSpaceModel compare_model(const std::string& name) {
  constexpr double kT = 0.001;
  constexpr double kQ = 300.0 * 300.0;
  if (name == "tvlap") {
    TvlapConfig c;
    c.order = 4;
    c.time_gap = kT;
    c.driver = NoiseDriver::G3;
    const double diag[] = {0.0, 0.0, 0.0, kQ};
    c.q = padded_diagonal_q(4, diag);
    c.r = 1.0;
    return make_tvlap(c);
  }
  if (name == "holt") return make_special(SpecialModel::Holt, kT, Matrix{{kQ}}, 1.0);
  if (name == "level") return make_special(SpecialModel::Level, kT, Matrix{{kQ}}, 1.0);
  throw UsageError("unknown model '" + name + "' (expected tvlap, holt or level)");
}

struct MseResult {
  double estimation = 0.0;  ///< filtered X0 vs truth on t <= split
  double prediction = 0.0;  ///< mean forecast vs truth on the next `horizon` samples
};

/// Filters the samples with t <= split and forecasts the following ones.
inline MseResult evaluate_split(const StateSpaceModel& model, const Scenario& s,
                                double split = kCompareSplitTime,
                                unsigned horizon = kCompareHorizon) {
  std::size_t n_fit = 0;
  while (n_fit < s.size() && s.t[n_fit] <= split + 1e-9) ++n_fit;
  if (n_fit == 0 || n_fit + horizon > s.size()) {
    throw std::invalid_argument("evaluate_split: scenario too short for the split");
  }
  FilterState state = init_state(model.dim());
  double se = 0.0;
  for (std::size_t i = 0; i < n_fit; ++i) {
    state = step(model, state, s.x[i]).state;
    const double e = state.xhat(0, 0) - s.truth[i];
    se += e * e;
  }
  MseResult out;
  out.estimation = se / static_cast<double>(n_fit);
  double sp = 0.0;
  for (const ForecastPoint& p : forecast(model, state, horizon)) {
    const double e = p.xhat(0, 0) - s.truth[n_fit + p.k - 1];
    sp += e * e;
  }
  out.prediction = sp / horizon;
  return out;
}

struct CompareRow {
  unsigned trial = 0;
  std::uint64_t seed = 0;
  std::string model;
  MseResult mse;
};

struct CompareSummary {
  std::string model;
  double best_estimation = std::numeric_limits<double>::infinity();
  double best_prediction = std::numeric_limits<double>::infinity();
  double mean_estimation = 0.0;
  double mean_prediction = 0.0;
};

/// Trial i uses seed base_seed + i for every model. Best-of-trials is taken
/// per model and per column independently.
inline std::vector<CompareRow> run_comparison(const std::vector<std::string>& models,
                                              unsigned trials, std::uint64_t base_seed) {
  if (trials < 1) throw UsageError("--trials must be >= 1");
  if (models.empty()) throw UsageError("--models must name at least one model");
  std::vector<StateSpaceModel> built;
  for (const auto& m : models) built.push_back(compare_model(m));
  std::vector<CompareRow> rows;
  for (unsigned trial = 0; trial < trials; ++trial) {
    const std::uint64_t seed = base_seed + trial;
    const Scenario s = gen_sine_exp(seed);
    for (std::size_t m = 0; m < models.size(); ++m) {
      rows.push_back(CompareRow{trial, seed, models[m], evaluate_split(built[m], s)});
    }
  }
  return rows;
}

inline std::vector<CompareSummary> summarize(const std::vector<std::string>& models,
                                             const std::vector<CompareRow>& rows) {
  std::vector<CompareSummary> out;
  for (const auto& m : models) {
    CompareSummary s;
    s.model = m;
    std::size_t count = 0;
    for (const auto& r : rows) {
      if (r.model != m) continue;
      ++count;
      s.best_estimation = std::min(s.best_estimation, r.mse.estimation);
      s.best_prediction = std::min(s.best_prediction, r.mse.prediction);
      s.mean_estimation += r.mse.estimation;
      s.mean_prediction += r.mse.prediction;
    }
    if (count) {
      s.mean_estimation /= static_cast<double>(count);
      s.mean_prediction /= static_cast<double>(count);
    }
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------- commands

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::size_t value_column(const CsvTable& table, const std::string& source) {
  if (table.header.size() < 2) throw UsageError(source + ": needs time and value columns");
  if (auto i = table.find("x")) return *i;
  if (auto i = table.find("value")) return *i;
  return 1;
}

inline std::vector<std::string> parse_models(const std::string& text) {
  std::vector<std::string> models;
  for (const auto& m : split(text, ',')) {
    const std::string name = trim(m);
    if (name != "tvlap" && name != "holt" && name != "level") {
      throw UsageError("unknown model '" + name + "' (expected tvlap, holt or level)");
    }
    models.push_back(name);
  }
  return models;
}

inline void print_warnings(const StateSpaceModel& model, std::ostream& err) {
  for (const auto& w : model.warnings) err << "warning: " << w << '\n';
}

}  // namespace detail

struct SimulateArgs {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out;
  unsigned jumps = 5;
  double mag = 5.0;
};

inline int cmd_simulate(const SimulateArgs& a, Streams io) {
  if (a.scenario == "fault") {
    const auto channels = gen_fault_channels(a.seed, a.jumps, a.mag);
    CsvWriter w(a.out);
    std::vector<std::string> header{"time"};
    for (const auto& c : channels) header.push_back(c.name);
    w.row(header);
    for (std::size_t i = 0; i < channels.front().size(); ++i) {
      std::vector<std::string> row{format_double(channels.front().t[i])};
      for (const auto& c : channels) row.push_back(format_double(c.x[i]));
      w.row(row);
    }
    w.close();
    io.out << "wrote " << channels.front().size() << " rows x " << channels.size()
           << " channels to " << a.out << '\n';
    return 0;
  }
  Scenario s;
  if (a.scenario == "sine") {
    s = gen_sine(a.seed);
  } else if (a.scenario == "sine_exp") {
    s = gen_sine_exp(a.seed);
  } else {
    throw UsageError("unknown scenario '" + a.scenario + "' (expected sine, sine_exp or fault)");
  }
  CsvWriter w(a.out);
  w.row({"time", "x", "truth", "truth_d1"});
  for (std::size_t i = 0; i < s.size(); ++i) {
    w.row({format_double(s.t[i]), format_double(s.x[i]), format_double(s.truth[i]),
           format_double(s.truth_d1[i])});
  }
  w.close();
  io.out << "wrote " << s.size() << " rows to " << a.out << '\n';
  return 0;
}

struct FilterArgs {
  std::string in;
  std::string out;
  ModelFlags model;
  std::string mode = "zerocross";
  bool extrema = false;  ///< forced on; otherwise on iff K >= 2
  unsigned steps = 200;
};

namespace detail {

struct Prepared {
  CsvTable table;
  std::size_t value_col = 1;
  TvlapConfig config;
  StateSpaceModel model;
  TrackOptions options;
};

inline Prepared prepare_filter(const FilterArgs& a, Streams io) {
  Prepared p;
  p.config = a.model.config();
  if (a.extrema && p.config.order < 2) {
    throw UsageError("extrema detection needs --k >= 2, got K=" +
                     std::to_string(p.config.order));
  }
  if (a.mode != "threshold" && a.mode != "zerocross") {
    throw UsageError("--mode must be threshold or zerocross");
  }
  p.options.detect_extrema = a.extrema || p.config.order >= 2;
  p.options.mode = a.mode == "threshold" ? ExtremaMode::Threshold : ExtremaMode::ZeroCross;
  p.table = read_csv(a.in);
  p.value_col = value_column(p.table, a.in);
  require_increasing(p.table.columns[0], a.in);
  p.model = make_tvlap(p.config);
  print_warnings(p.model, io.err);
  return p;
}

}  // namespace detail

inline int cmd_filter(const FilterArgs& a, Streams io) {
  detail::Prepared p = detail::prepare_filter(a, io);
  const auto& time = p.table.columns[0];
  const auto& values = p.table.columns[p.value_col];
  const auto truth_col = p.table.find("truth");

  CsvWriter w(a.out);
  std::vector<std::string> header{"n", "time", "fhat"};
  for (unsigned k = 1; k <= p.config.order; ++k) header.push_back("d" + std::to_string(k));
  header.push_back("p00");
  header.push_back("event");
  w.row(header);

  TrendTracker tracker(p.model, p.config, p.options);
  std::size_t events = 0;
  double se = 0.0;
  std::size_t se_count = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const TrackOutput o = tracker.push(values[i]);
    std::vector<std::string> row{std::to_string(o.n), format_double(time[i]),
                                 format_double(o.fhat)};
    for (double d : o.derivatives) row.push_back(format_double(d));
    row.push_back(format_double(tracker.state().p(0, 0)));
    row.push_back(o.event ? to_string(o.event->kind) : "");
    w.row(row);
    if (o.event) {
      ++events;
      io.out << "event " << to_string(o.event->kind) << " at n=" << o.n
             << " time=" << format_double(time[i]) << '\n';
    }
    if (truth_col && i >= tracker.burn_in()) {
      const double e = o.fhat - p.table.columns[*truth_col][i];
      se += e * e;
      ++se_count;
    }
  }
  w.close();
  io.out << "samples=" << values.size() << " events=" << events << '\n';
  if (truth_col && se_count) {
    io.out << "trend_mse=" << format_double(se / se_count) << " (after " << tracker.burn_in()
           << " burn-in samples)\n";
  }
  return 0;
}

inline int cmd_forecast(const FilterArgs& a, Streams io) {
  if (a.steps < 1) throw UsageError("--steps must be >= 1");
  detail::Prepared p = detail::prepare_filter(a, io);
  const auto& time = p.table.columns[0];
  const auto& values = p.table.columns[p.value_col];
  FilterState state = init_state(p.model.dim(), p.config.infinity);
  for (double y : values) state = step(p.model, state, y).state;

  const double dt =
      time.size() > 1 ? (time.back() - time.front()) / static_cast<double>(time.size() - 1) : 1.0;
  std::map<long, ExtremumKind> events;
  if (p.options.detect_extrema) {
    for (const auto& e : forecast_extrema(p.model, state, a.steps, p.config.epsilon)) {
      events.emplace(e.n, e.kind);
    }
  }
  CsvWriter w(a.out);
  w.row({"k", "time", "mean", "p00", "event"});
  for (const ForecastPoint& f : forecast(p.model, state, a.steps)) {
    const auto it = events.find(state.n + static_cast<long>(f.k));
    w.row({std::to_string(f.k), format_double(time.back() + f.k * dt),
           format_double(f.xhat(0, 0)), format_double(f.p(0, 0)),
           it == events.end() ? "" : to_string(it->second)});
  }
  w.close();
  for (const auto& [n, kind] : events) {
    io.out << "predicted " << to_string(kind) << " at k=" << (n - state.n)
           << " time=" << format_double(time.back() + (n - state.n) * dt) << '\n';
  }
  io.out << "steps=" << a.steps << " predicted_events=" << events.size() << '\n';
  return 0;
}

struct CompareArgs {
  std::string models = "tvlap,holt,level";
  unsigned trials = 10;
  std::uint64_t seed = 1;
  std::string out;
};

inline int cmd_compare(const CompareArgs& a, Streams io) {
  const auto models = detail::parse_models(a.models);
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  std::optional<CsvWriter> w;
  if (!a.out.empty()) w.emplace(a.out);
  const auto rows = run_comparison(models, a.trials, a.seed);
  if (w) {
    w->row({"trial", "seed", "model", "estimation_mse", "prediction_mse"});
    for (const auto& r : rows) {
      w->row({std::to_string(r.trial), std::to_string(r.seed), r.model,
              format_double(r.mse.estimation), format_double(r.mse.prediction)});
    }
    w->close();
  }
  io.out << "model  best_estimation_mse  best_prediction_mse  mean_estimation_mse  "
            "mean_prediction_mse\n";
  for (const auto& s : summarize(models, rows)) {
    io.out << s.model << "  " << format_double(s.best_estimation) << "  "
           << format_double(s.best_prediction) << "  " << format_double(s.mean_estimation)
           << "  " << format_double(s.mean_prediction) << '\n';
  }
  return 0;
}

struct DiagnoseArgs {
  std::string in;
  std::string out;
  ModelFlags model;
  double ratio = 3.0;
};

inline int cmd_diagnose(const DiagnoseArgs& a, Streams io) {
  const TvlapConfig config = a.model.config();
  if (!(a.ratio > 1.0)) throw UsageError("--ratio must exceed 1");
  const CsvTable table = read_csv(a.in);
  if (table.header.size() < 3) {
    throw UsageError(a.in + ": needs a time column and at least 2 channel columns");
  }
  std::optional<CsvWriter> w;
  if (!a.out.empty()) w.emplace(a.out);
  std::vector<Channel> channels;
  for (std::size_t i = 1; i < table.header.size(); ++i) {
    channels.push_back(Channel{table.header[i], table.columns[i]});
  }
  const auto verdicts = diagnose(channels, config, a.ratio);
  if (w) w->row({"channel", "variance", "faulty"});
  for (const auto& v : verdicts) {
    io.out << v.name << " variance=" << format_double(v.variance)
           << (v.faulty ? " FAULTY" : " ok") << '\n';
    if (w) w->row({v.name, format_double(v.variance), v.faulty ? "1" : "0"});
  }
  if (w) w->close();
  return 0;
}

struct CheckArgs {
  ModelFlags model;
  bool zero_g = false;
  double tol = 1e-10;
};

inline int cmd_check(const CheckArgs& a, Streams io) {
  TvlapConfig config = a.model.config();
  StateSpaceModel model = make_tvlap(config);
  if (a.zero_g) model.g = Matrix(model.g.rows(), model.g.cols());
  const SystemCheckReport r = check_system(model, a.tol);
  io.out << "K=" << config.order << " T=" << format_double(config.time_gap)
         << " driver=" << to_string(config.driver) << " dim=" << r.dim << '\n'
         << "observable=" << (r.observable ? "true" : "false") << " rank=" << r.obs_rank << '\n'
         << "controllable=" << (r.controllable ? "true" : "false") << " rank=" << r.ctrl_rank
         << '\n'
         << "phi_power_max_err=" << format_double(r.phi_power_max_err) << '\n';
  return r.observable && r.controllable ? 0 : 1;
}

// ---------------------------------------------------------------- driver

namespace detail {

/// Rebuilds argv as: program, subcommand, config-file flags, command-line
/// flags. Options keep their last value, so the command line wins.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!path) return rest;
  std::vector<std::string> out;
  // rest[0] is the program name; rest[1] the subcommand when present.
  const std::size_t head = std::min<std::size_t>(rest.size(), 2);
  out.insert(out.end(), rest.begin(), rest.begin() + head);
  for (auto& c : config_arguments(*path)) out.push_back(std::move(c));
  out.insert(out.end(), rest.begin() + head, rest.end());
  return out;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  Streams io{out, err};
  CLI::App app{"Trend estimation and extrema tracking with local polynomial Kalman models",
               "tvlap"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  // Documented here; consumed by expand_config before parsing.
  std::string config_path;
  app.add_option("--config", config_path, "Flat key=value file supplying any flag");

  auto make_sub = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    return sub;
  };
  std::function<int()> action;

  SimulateArgs sim;
  CLI::App* s = make_sub("simulate", "Write a seeded scenario as CSV");
  s->add_option("--scenario", sim.scenario, "sine | sine_exp | fault")->required();
  s->add_option("--seed", sim.seed)->capture_default_str();
  s->add_option("--out", sim.out)->required();
  s->add_option("--jumps", sim.jumps, "Fault scenario: jumps on channel 3")->capture_default_str();
  s->add_option("--mag", sim.mag, "Fault scenario: jump magnitude")->capture_default_str();
  s->callback([&] { action = [&] { return cmd_simulate(sim, io); }; });

  FilterArgs fil;
  CLI::App* f = make_sub("filter", "Track trend, derivatives and extrema of a CSV series");
  f->add_option("--in", fil.in)->required();
  f->add_option("--out", fil.out)->required();
  add_model_flags(f, fil.model);
  f->add_option("--mode", fil.mode)->check(CLI::IsMember({"threshold", "zerocross"}))
      ->capture_default_str();
  f->add_flag("--extrema", fil.extrema, "Require extrema detection (needs K >= 2)");
  f->callback([&] { action = [&] { return cmd_filter(fil, io); }; });

  FilterArgs fc;
  CLI::App* p = make_sub("forecast", "Filter a CSV series, then forecast ahead");
  p->add_option("--in", fc.in)->required();
  p->add_option("--out", fc.out)->required();
  add_model_flags(p, fc.model);
  p->add_option("--steps", fc.steps)->capture_default_str();
  p->add_option("--mode", fc.mode)->check(CLI::IsMember({"threshold", "zerocross"}))
      ->capture_default_str();
  p->add_flag("--extrema", fc.extrema, "Require predicted extrema (needs K >= 2)");
  p->callback([&] { action = [&] { return cmd_forecast(fc, io); }; });

  CompareArgs cmp;
  CLI::App* c = make_sub("compare", "Estimation and prediction MSE of tvlap, holt and level");
  c->add_option("--models", cmp.models)->capture_default_str();
  c->add_option("--trials", cmp.trials)->capture_default_str();
  c->add_option("--seed", cmp.seed, "Seed of trial 0; trial i uses seed+i")
      ->capture_default_str();
  c->add_option("--out", cmp.out, "Per-trial CSV");
  c->callback([&] { action = [&] { return cmd_compare(cmp, io); }; });

  DiagnoseArgs dia;
  dia.model.k = 4;
  dia.model.t = 0.001;
  dia.model.q = "250000";
  dia.model.r = 0.03;
  CLI::App* d = make_sub("diagnose", "Flag channels with excess derivative variance");
  d->add_option("--in", dia.in)->required();
  d->add_option("--out", dia.out, "Per-channel CSV");
  add_model_flags(d, dia.model);
  d->add_option("--ratio", dia.ratio)->capture_default_str();
  d->callback([&] { action = [&] { return cmd_diagnose(dia, io); }; });

  CheckArgs chk;
  CLI::App* k = make_sub("check", "Observability and controllability of a TVLAP model");
  add_model_flags(k, chk.model);
  k->add_option("--tol", chk.tol, "Rank tolerance")->capture_default_str();
  k->add_flag("--zero-g", chk.zero_g, "Debug: replace the noise driver with zeros");
  k->callback([&] { action = [&] { return cmd_check(chk, io); }; });

  try {
    args = detail::expand_config(args);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), const_cast<char**>(argv.data()));
    return action ? action() : 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "analytic failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace tvlap::cli
