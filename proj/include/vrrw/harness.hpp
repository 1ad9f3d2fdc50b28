#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vrrw/coupling.hpp"
#include "vrrw/localization.hpp"
#include "vrrw/record.hpp"
#include "vrrw/stats.hpp"
#include "vrrw/urns.hpp"

namespace vrrw {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Command { run, couple, urn, report };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::run: return "run";
    case Command::couple: return "couple";
    case Command::urn: return "urn";
    case Command::report: return "report";
  }
  return "?";
}

struct CouplingConfig {
  Site x = 2;
  double cap_m = 4.0;
  double g = 1.0;
  std::uint64_t k = 100;
  std::uint64_t v_cap = 0;  // 0: defaults to 2k
  std::string window_kind = "step";  // "step" | "s51"
  SeriesPreset preset = SeriesPreset::s51;
  std::string perturb = "right";  // "left" runs the dominance-breaking control
};

struct UrnConfig {
  std::string kind = "polya";  // "polya" | "friedman"
  std::int64_t a0 = 1;
  std::int64_t b0 = 1;
  double alpha = 0.5;
};

struct RunConfig {
  Command command = Command::run;
  std::uint64_t steps = 10000;  // horizon; draw count for `urn`
  std::uint64_t replicates = 1;
  std::uint64_t seed = 1;
  Site v0 = 0;
  std::string checkpoints = "geometric:10";  // or "list:n1,n2,..."
  double window = 0.1;
  double upsilon_threshold = 0.01;
  std::string out = "vrrw_out";
  unsigned threads = 0;  // 0: hardware concurrency
  InitialWeights weights;
  std::vector<std::string> ledger_cols;  // e.g. "Y@0", "Y+@2"
  std::uint64_t series_max = 1000;       // couple: diagnostic levels emitted
  CouplingConfig coupling;
  bool coupling_set = false;
  UrnConfig urn;
  bool urn_set = false;
  std::string report_input;  // report: prior run CSV
};

inline std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t value = 0;
  const bool hex = text.starts_with("0x") || text.starts_with("0X");
  const char* first = text.data() + (hex ? 2 : 0);
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, value, hex ? 16 : 10);
  if (ec != std::errc{} || p != last)
    throw ConfigError("seed must be a decimal or 0x-prefixed hex integer: " +
                      text);
  return value;
}

/// Parses "geometric:BASE" or "list:n1,n2,..." into a sorted schedule over
/// [0, horizon].
inline std::vector<std::uint64_t> parse_schedule(const std::string& text,
                                                 std::uint64_t horizon) {
  if (text.starts_with("geometric:")) {
    std::uint64_t base = 0;
    const std::string arg = text.substr(10);
    auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), base);
    if (ec != std::errc{} || p != arg.data() + arg.size() || base < 2)
      throw ConfigError("geometric checkpoint base must be an integer >= 2");
    return geometric_schedule(horizon, base);
  }
  if (text.starts_with("list:")) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text.substr(5));
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc{} || p != item.data() + item.size())
        throw ConfigError("bad checkpoint list entry: " + item);
      if (v > horizon) throw ConfigError("checkpoint beyond horizon");
      out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty checkpoint list");
    for (std::size_t i = 1; i < out.size(); ++i)
      if (out[i] <= out[i - 1])
        throw ConfigError("checkpoint list must be strictly increasing");
    return out;
  }
  throw ConfigError("checkpoints must be geometric:BASE or list:n1,n2,...");
}

struct LedgerColumn {
  std::string name;  // verbatim column header, e.g. "Y+@2"
  int field = 0;     // index into LedgerValues
  Site site = 0;
};

inline LedgerColumn parse_ledger_column(const std::string& text) {
  const auto at = text.find('@');
  if (at == std::string::npos)
    throw ConfigError("ledger column must look like FUNC@SITE: " + text);
  const std::string func = text.substr(0, at);
  const std::string site_text = text.substr(at + 1);
  static const std::vector<std::string> names = {"Y",   "Y+",  "Y-", "Yt+",
                                                 "Yt-", "Yb+", "Yb-"};
  int idx = -1;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == func) idx = static_cast<int>(i);
  if (idx < 0)
    throw ConfigError("unknown ledger functional (Y, Y+, Y-, Yt+, Yt-, Yb+, Yb-): " +
                      func);
  Site site = 0;
  try {
    site = std::stoll(site_text);
  } catch (...) {
    throw ConfigError("bad ledger column site: " + site_text);
  }
  return LedgerColumn{text, idx, site};
}

inline double ledger_field(const LedgerValues& v, int field) {
  switch (field) {
    case 0: return v.y;
    case 1: return v.y_plus;
    case 2: return v.y_minus;
    case 3: return v.y_tilde_plus;
    case 4: return v.y_tilde_minus;
    case 5: return v.y_bar_plus;
    case 6: return v.y_bar_minus;
  }
  return 0;
}

inline SeriesPreset parse_preset(const std::string& text) {
  if (text == "s51") return SeriesPreset::s51;
  if (text == "s52") return SeriesPreset::s52;
  if (text == "s53") return SeriesPreset::s53;
  throw ConfigError("preset must be one of s51, s52, s53: " + text);
}

inline void validate(const RunConfig& c) {
  if (c.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (c.steps < 1) throw ConfigError("steps must be >= 1");
  if (!(c.window > 0.0 && c.window < 1.0))
    throw ConfigError("window fraction must lie in (0, 1)");
  if (c.threads > 4096) throw ConfigError("threads out of range");
  if (c.weights.default_weight < 1)
    throw ConfigError("default initial weight must be >= 1");
  for (const auto& [site, w] : c.weights.overrides)
    if (w < 1) throw ConfigError("initial weight overrides must be >= 1");
  if (c.coupling_set && c.command != Command::couple)
    throw ConfigError("coupling parameters are only valid for `couple`");
  if (c.urn_set && c.command != Command::urn)
    throw ConfigError("urn parameters are only valid for `urn`");
  for (const auto& col : c.ledger_cols) parse_ledger_column(col);
  if (c.command == Command::couple) {
    if (!(c.coupling.cap_m > 1.0)) throw ConfigError("cap-M must be > 1");
    if (!(c.coupling.g > 0.0)) throw ConfigError("g must be > 0");
    if (c.coupling.window_kind != "step" && c.coupling.window_kind != "s51")
      throw ConfigError("window kind must be step or s51");
    if (c.coupling.window_kind == "step" && c.coupling.k >= c.steps)
      throw ConfigError("activation step k must precede the horizon");
    if (c.coupling.v_cap != 0 && c.coupling.v_cap < c.coupling.k)
      throw ConfigError("v-cap must be >= k");
    if (c.coupling.perturb != "right" && c.coupling.perturb != "left")
      throw ConfigError("perturb must be right or left");
  }
  if (c.command == Command::urn) {
    if (c.urn.kind != "polya" && c.urn.kind != "friedman")
      throw ConfigError("urn kind must be polya or friedman");
    if (c.urn.a0 < 1 || c.urn.b0 < 1) throw ConfigError("urn counts must be >= 1");
    if (!(c.urn.alpha > 0.0) || c.urn.alpha > 1.0)
      throw ConfigError("urn alpha must lie in (0, 1]");
  }
  if (c.command == Command::report && c.report_input.empty())
    throw ConfigError("report requires an input CSV (--in)");
}

inline json to_json(const InitialWeights& w) {
  json j;
  j["default"] = w.default_weight;
  json o = json::object();
  for (const auto& [site, v] : w.overrides) o[std::to_string(site)] = v;
  j["overrides"] = o;
  return j;
}

inline json config_echo(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["steps"] = c.steps;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["v0"] = c.v0;
  j["checkpoints"] = c.checkpoints;
  j["window"] = c.window;
  j["upsilon_threshold"] = c.upsilon_threshold;
  j["threads"] = c.threads;
  j["weights"] = to_json(c.weights);
  j["ledger_cols"] = c.ledger_cols;
  if (c.command == Command::couple) {
    j["coupling"] = {{"x", c.coupling.x},
                     {"cap_m", c.coupling.cap_m},
                     {"g", c.coupling.g},
                     {"k", c.coupling.k},
                     {"v_cap", c.coupling.v_cap},
                     {"window_kind", c.coupling.window_kind},
                     {"preset", to_string(c.coupling.preset)},
                     {"perturb", c.coupling.perturb}};
    j["series_max"] = c.series_max;
  }
  if (c.command == Command::urn) {
    j["urn"] = {{"kind", c.urn.kind},
                {"a", c.urn.a0},
                {"b", c.urn.b0},
                {"alpha", c.urn.alpha}};
  }
  if (c.command == Command::report) j["in"] = c.report_input;
  return j;
}

/// Round-trip-exact float text for CSV cells.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Canonical JSON form of a run record: config echo plus snapshots, plus
/// the position log for full-path records. Deterministic field order, so
/// identical runs serialize byte-identically.
inline json record_to_json(const RunRecord& rec) {
  json j;
  j["tool"] = kToolVersion;
  j["derivation"] = kDerivationVersion;
  j["v0"] = rec.v0;
  j["seed"] = rec.seed;
  j["horizon"] = rec.horizon;
  j["model"] = rec.model;
  j["weights"] = to_json(rec.weights);
  json snaps = json::array();
  for (const auto& s : rec.snapshots) {
    json pairs = json::array();
    for (const auto& [site, c] : s.z) pairs.push_back({site, c});
    json plus = json::array();
    for (const auto& [site, c] : s.z_plus) plus.push_back({site, c});
    json minus = json::array();
    for (const auto& [site, c] : s.z_minus) minus.push_back({site, c});
    json led = json::array();
    for (const auto& [site, v] : s.ledger)
      led.push_back({site, v.y, v.y_plus, v.y_minus, v.y_tilde_plus,
                     v.y_tilde_minus, v.y_bar_plus, v.y_bar_minus});
    snaps.push_back({{"n", s.n},
                     {"position", s.position},
                     {"z", pairs},
                     {"z_plus", plus},
                     {"z_minus", minus},
                     {"ledger", led}});
  }
  j["snapshots"] = snaps;
  if (rec.full_path) j["path"] = rec.path;
  return j;
}

/// RFC-4180-style field quoting; our fields are numeric or simple tokens,
/// so quoting only triggers on the config echo inside headers.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const json& config,
            const std::vector<std::string>& columns) {
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    stream_.open(path, std::ios::binary);
    if (!stream_)
      throw OutputError("cannot open output file: " + path.string());
    stream_ << "# vrrw-lab " << kToolVersion << "\n";
    stream_ << "# derivation " << kDerivationVersion << "\n";
    stream_ << "# config " << config.dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      stream_ << (i ? "," : "") << columns[i];
    stream_ << "\n";
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      stream_ << (i ? "," : "") << csv_escape(fields[i]);
    stream_ << "\n";
  }

  void close() {
    stream_.close();
    if (stream_.fail()) throw OutputError("failed writing output CSV");
  }

 private:
  std::ofstream stream_;
};

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot open output file: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw OutputError("failed writing output JSON");
}

/// Runs fn(r) for r in [0, count) on a bounded worker pool. Results land in
/// a vector indexed by r, so output order never depends on scheduling.
template <class T, class Fn>
std::vector<T> map_replicates(std::uint64_t count, unsigned threads, Fn&& fn) {
  std::vector<T> results(count);
  unsigned n = threads ? threads : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  n = static_cast<unsigned>(
      std::min<std::uint64_t>(n, std::max<std::uint64_t>(count, 1)));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t r = next.fetch_add(1);
      if (r >= count) return;
      try {
        results[r] = fn(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

// ---------------------------------------------------------------------------
// run command

struct RunRow {
  std::uint64_t replicate = 0;
  std::uint64_t n = 0;
  Site position = 0;
  bool window_ok = false;
  bool localized = false;
  Site trap_center = 0;
  std::uint64_t trap_range = 0;
  EventEstimates est;
  std::vector<double> ledger_values;
};

struct RunReplicateResult {
  std::vector<RunRow> rows;
  ReplicateReport report;
};

inline RunReplicateResult run_one_replicate(const RunConfig& cfg,
                                            std::uint64_t r) {
  const auto eval_points = parse_schedule(cfg.checkpoints, cfg.steps);
  const auto schedule = with_window_starts(eval_points, cfg.window);
  UniformTable table{replicate_seed(cfg.seed, r)};
  VrrwModel model;
  RunOptions opt;
  opt.schedule = schedule;
  opt.track_ledger = true;
  auto rec = run_walk(model, WalkState::start(cfg.v0, cfg.weights), table,
                      cfg.steps, opt);

  const TrapReport final_trap = detect_trap(rec, cfg.window, cfg.steps);
  const auto est_series = event_estimates(rec, final_trap.center);
  std::vector<LedgerColumn> cols;
  for (const auto& c : cfg.ledger_cols) cols.push_back(parse_ledger_column(c));

  RunReplicateResult out;
  out.report.replicate = r;
  for (std::uint64_t n : eval_points) {
    if (n == 0) continue;
    RunRow row;
    row.replicate = r;
    row.n = n;
    const Snapshot* snap = rec.snapshot_at(n);
    row.position = snap->position;
    const std::uint64_t start = window_start_step(n, cfg.window);
    row.window_ok = start < n && rec.snapshot_at(start) != nullptr;
    TrapReport trap;
    if (row.window_ok) {
      trap = detect_trap(rec, cfg.window, n);
      row.localized = trap.localized;
      row.trap_center = trap.center;
      row.trap_range = trap.range_size;
    }
    for (const auto& e : est_series)
      if (e.n == n) row.est = e;
    for (const auto& col : cols) {
      const auto lv = snap->ledger_at(col.site);
      row.ledger_values.push_back(lv ? ledger_field(*lv, col.field) : 0.0);
    }
    out.rows.push_back(row);

    CheckpointReport cp;
    cp.n = n;
    cp.window_ok = row.window_ok;
    cp.trap = trap;
    cp.est = row.est;
    out.report.checkpoints.push_back(cp);
  }
  return out;
}

inline json summary_to_json(const MonteCarloSummary& s) {
  json j;
  j["replicates"] = s.replicates;
  json cps = json::array();
  for (const auto& pc : s.checkpoints) {
    cps.push_back({{"n", pc.n},
                   {"evaluated", pc.evaluated},
                   {"localized", pc.localized},
                   {"localized_fraction", pc.localized_fraction},
                   {"mean_center_density", pc.mean_center_density},
                   {"sd_center_density", pc.sd_center_density},
                   {"mean_neighbor_density_sum", pc.mean_neighbor_density_sum},
                   {"sd_neighbor_density_sum", pc.sd_neighbor_density_sum},
                   {"mean_alpha_left", pc.mean_alpha_left},
                   {"sd_alpha_left", pc.sd_alpha_left},
                   {"mean_alpha_gap", pc.mean_alpha_gap}});
  }
  j["checkpoints"] = cps;
  j["alpha_histogram"] = s.alpha_histogram;
  j["alpha_min"] = s.alpha_min;
  j["alpha_max"] = s.alpha_max;
  return j;
}

inline std::vector<std::string> run_columns(const RunConfig& cfg) {
  std::vector<std::string> cols = {"replicate",
                                   "n",
                                   "position",
                                   "window_ok",
                                   "localized",
                                   "trap_center",
                                   "trap_range",
                                   "center_density",
                                   "neighbor_density_sum",
                                   "alpha_left",
                                   "alpha_right_complement",
                                   "c1_hat",
                                   "c2_hat"};
  for (const auto& c : cfg.ledger_cols) cols.push_back(c);
  return cols;
}

struct ExecutionResult {
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
  json summary;
};

inline ExecutionResult execute_run(const RunConfig& cfg) {
  const auto results = map_replicates<RunReplicateResult>(
      cfg.replicates, cfg.threads,
      [&](std::uint64_t r) { return run_one_replicate(cfg, r); });

  const json echo = config_echo(cfg);
  ExecutionResult res;
  res.csv_path = cfg.out + ".csv";
  res.json_path = cfg.out + ".json";
  CsvWriter csv(res.csv_path, echo, run_columns(cfg));
  for (const auto& rr : results) {
    for (const auto& row : rr.rows) {
      std::vector<std::string> fields = {
          std::to_string(row.replicate),
          std::to_string(row.n),
          std::to_string(row.position),
          row.window_ok ? "1" : "0",
          row.localized ? "1" : "0",
          std::to_string(row.trap_center),
          std::to_string(row.trap_range),
          format_double(row.est.center_density),
          format_double(row.est.neighbor_density_sum),
          format_double(row.est.alpha_left),
          format_double(row.est.alpha_right_complement),
          format_double(row.est.c1_hat),
          format_double(row.est.c2_hat)};
      for (double v : row.ledger_values) fields.push_back(format_double(v));
      csv.row(fields);
    }
  }
  csv.close();

  std::vector<ReplicateReport> reports;
  reports.reserve(results.size());
  for (const auto& rr : results) reports.push_back(rr.report);
  const MonteCarloSummary summary = aggregate(reports);
  json j;
  j["tool"] = kToolVersion;
  j["derivation"] = kDerivationVersion;
  j["config"] = echo;
  j["summary"] = summary_to_json(summary);
  res.summary = j;
  write_json_file(res.json_path, j);
  return res;
}

// ---------------------------------------------------------------------------
// couple command

struct CoupleReplicateResult {
  std::vector<DiagnosticPoint> base_series;
  std::vector<DiagnosticPoint> primed_series;
  MonotonicityReport audit;
  bool active = false;
};

inline CoupleReplicateResult couple_one_replicate(const RunConfig& cfg,
                                                  std::uint64_t r) {
  UniformTable table{replicate_seed(cfg.seed, r)};
  RunOptions opt;
  opt.full_path = true;
  opt.track_ledger = false;
  opt.schedule = {cfg.steps};
  const auto& cc = cfg.coupling;
  const std::uint64_t v_cap = cc.v_cap ? cc.v_cap : 2 * cc.k;

  CoupleReplicateResult out;
  RunRecord base, primed;
  if (cc.perturb == "left") {
    VrrwModel base_model;
    LeftBiasedControlModel ctrl{cc.x, cc.g, cc.k, v_cap};
    base = run_walk(base_model, WalkState::start(cfg.v0, cfg.weights), table,
                    cfg.steps, opt);
    primed = run_walk(ctrl, WalkState::start(cfg.v0, cfg.weights), table,
                      cfg.steps, opt);
    out.active = true;
  } else {
    ModifiedWalkParams params;
    params.x = cc.x;
    params.cap_m = cc.cap_m;
    params.g = cc.g;
    params.window = cc.window_kind == "s51"
                        ? WindowSpec::threshold_s51(cc.k, v_cap)
                        : WindowSpec::steps(cc.k, v_cap);
    auto pair = run_coupled(table, cfg.v0, cfg.weights, params, cfg.steps, opt);
    base = std::move(pair.base);
    primed = std::move(pair.primed);
    out.active = pair.activation.gate;
  }
  out.base_series = diagnostic_series(base, cc.preset, cfg.series_max);
  out.primed_series = diagnostic_series(primed, cc.preset, cfg.series_max);
  out.audit = verify_partial_order(base, primed);
  return out;
}

inline ExecutionResult execute_couple(const RunConfig& cfg) {
  const auto results = map_replicates<CoupleReplicateResult>(
      cfg.replicates, cfg.threads,
      [&](std::uint64_t r) { return couple_one_replicate(cfg, r); });

  const json echo = config_echo(cfg);
  ExecutionResult res;
  res.csv_path = cfg.out + ".csv";
  res.json_path = cfg.out + ".json";
  CsvWriter csv(res.csv_path, echo,
                {"replicate", "n", "t_n", "t_prime_n", "z", "z_prime", "y",
                 "y_prime"});
  for (std::uint64_t r = 0; r < results.size(); ++r) {
    const auto& cr = results[r];
    for (std::uint64_t n = 1; n <= cfg.series_max; ++n) {
      const auto& a = cr.base_series[n];
      const auto& b = cr.primed_series[n];
      if (!a.t && !b.t) break;  // nothing realized at this level or beyond
      csv.row({std::to_string(r), std::to_string(n),
               a.t ? std::to_string(*a.t) : "", b.t ? std::to_string(*b.t) : "",
               format_double(a.z), format_double(b.z), format_double(a.y),
               format_double(b.y)});
    }
  }
  csv.close();

  json audits = json::array();
  std::uint64_t cells = 0, vacuous = 0, violations = 0, active = 0;
  for (std::uint64_t r = 0; r < results.size(); ++r) {
    const auto& a = results[r].audit;
    json v = json::array();
    for (const auto& viol : a.violations) {
      v.push_back({{"i", viol.i},
                   {"j", viol.j},
                   {"base_left", viol.base_left},
                   {"base_right", viol.base_right},
                   {"primed_left", viol.primed_left},
                   {"primed_right", viol.primed_right}});
    }
    audits.push_back({{"replicate", r},
                      {"active", results[r].active},
                      {"cells_checked", a.cells_checked},
                      {"vacuous", a.vacuous},
                      {"violations", v}});
    cells += a.cells_checked;
    vacuous += a.vacuous;
    violations += a.violations.size();
    if (results[r].active) ++active;
  }
  json j;
  j["tool"] = kToolVersion;
  j["derivation"] = kDerivationVersion;
  j["config"] = echo;
  j["audits"] = audits;
  j["totals"] = {{"replicates", cfg.replicates},
                 {"active", active},
                 {"cells_checked", cells},
                 {"vacuous", vacuous},
                 {"violations", violations}};
  res.summary = j;
  write_json_file(res.json_path, j);
  return res;
}

// ---------------------------------------------------------------------------
// urn command

inline ExecutionResult execute_urn(const RunConfig& cfg) {
  const auto& uc = cfg.urn;
  const auto states = map_replicates<UrnState>(
      cfg.replicates, cfg.threads, [&](std::uint64_t r) {
        const std::uint64_t seed = replicate_seed(cfg.seed, r);
        if (uc.kind == "polya")
          return polya_run(uc.a0, uc.b0, cfg.steps, seed);
        return friedman_run({uc.alpha, uc.a0, uc.b0}, cfg.steps, seed);
      });

  const json echo = config_echo(cfg);
  ExecutionResult res;
  res.csv_path = cfg.out + ".csv";
  res.json_path = cfg.out + ".json";
  CsvWriter csv(res.csv_path, echo,
                {"replicate", "draws", "a", "b", "fraction"});
  std::vector<double> fractions;
  std::vector<double> log_ratio_dev;
  for (std::uint64_t r = 0; r < states.size(); ++r) {
    const auto& s = states[r];
    csv.row({std::to_string(r), std::to_string(s.draws), std::to_string(s.a),
             std::to_string(s.b), format_double(s.left_fraction())});
    fractions.push_back(s.left_fraction());
    if (s.a > 1 && s.b > 1)
      log_ratio_dev.push_back(std::abs(std::log(static_cast<double>(s.a)) /
                                           std::log(static_cast<double>(s.b)) -
                                       uc.alpha));
  }
  json j;
  j["tool"] = kToolVersion;
  j["derivation"] = kDerivationVersion;
  j["config"] = echo;
  json summary;
  summary["replicates"] = cfg.replicates;
  summary["draws"] = cfg.steps;
  if (uc.kind == "polya" && fractions.size() >= 100) {
    summary["ks_vs_beta"] = beta_limit_test(fractions, uc.a0, uc.b0);
  }
  if (uc.kind == "friedman" && !log_ratio_dev.empty()) {
    std::sort(log_ratio_dev.begin(), log_ratio_dev.end());
    summary["median_log_ratio_deviation"] =
        log_ratio_dev[log_ratio_dev.size() / 2];
  }
  double mean = 0;
  for (double f : fractions) mean += f;
  summary["mean_fraction"] = fractions.empty()
                                 ? 0.0
                                 : mean / static_cast<double>(fractions.size());
  j["summary"] = summary;
  res.summary = j;
  write_json_file(res.json_path, j);
  return res;
}

// ---------------------------------------------------------------------------
// report command

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

/// Rebuilds replicate reports from a `run` CSV; no raw trajectories are
/// reprocessed, only the recorded verdicts and estimates.
inline std::vector<ReplicateReport> parse_run_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report input: " + path.string());
  std::string line;
  std::vector<std::string> header;
  std::map<std::uint64_t, ReplicateReport> by_replicate;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv_line(line);
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() < 13) throw ConfigError("malformed run CSV row");
    auto col = [&](const char* name) -> const std::string& {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return fields[i];
      throw ConfigError(std::string("run CSV misses column ") + name);
    };
    const std::uint64_t r = std::stoull(col("replicate"));
    CheckpointReport cp;
    cp.n = std::stoull(col("n"));
    cp.window_ok = col("window_ok") == "1";
    cp.trap.localized = col("localized") == "1";
    cp.trap.center = std::stoll(col("trap_center"));
    cp.trap.range_size = std::stoull(col("trap_range"));
    cp.est.n = cp.n;
    cp.est.center_density = std::stod(col("center_density"));
    cp.est.neighbor_density_sum = std::stod(col("neighbor_density_sum"));
    cp.est.alpha_left = std::stod(col("alpha_left"));
    cp.est.alpha_right_complement = std::stod(col("alpha_right_complement"));
    cp.est.c1_hat = std::stod(col("c1_hat"));
    cp.est.c2_hat = std::stod(col("c2_hat"));
    auto& rep = by_replicate[r];
    rep.replicate = r;
    rep.checkpoints.push_back(cp);
  }
  std::vector<ReplicateReport> out;
  for (auto& [r, rep] : by_replicate) out.push_back(std::move(rep));
  if (out.empty()) throw ConfigError("report input contains no data rows");
  return out;
}

inline ExecutionResult execute_report(const RunConfig& cfg) {
  const auto reports = parse_run_csv(cfg.report_input);
  const MonteCarloSummary summary = aggregate(reports);
  ExecutionResult res;
  res.json_path = cfg.out + ".json";
  json j;
  j["tool"] = kToolVersion;
  j["derivation"] = kDerivationVersion;
  j["config"] = config_echo(cfg);
  j["summary"] = summary_to_json(summary);
  res.summary = j;
  write_json_file(res.json_path, j);
  return res;
}

inline ExecutionResult execute(const RunConfig& cfg) {
  validate(cfg);
  switch (cfg.command) {
    case Command::run: return execute_run(cfg);
    case Command::couple: return execute_couple(cfg);
    case Command::urn: return execute_urn(cfg);
    case Command::report: return execute_report(cfg);
  }
  throw ConfigError("unknown command");
}

// ---------------------------------------------------------------------------
// config file loading

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  const std::string cmd = j.value("command", "run");
  if (cmd == "run") c.command = Command::run;
  else if (cmd == "couple") c.command = Command::couple;
  else if (cmd == "urn") c.command = Command::urn;
  else if (cmd == "report") c.command = Command::report;
  else throw ConfigError("unknown command in config: " + cmd);

  c.steps = j.value("steps", c.steps);
  c.replicates = j.value("replicates", c.replicates);
  if (j.contains("seed")) {
    if (j["seed"].is_string())
      c.seed = parse_seed(j["seed"].get<std::string>());
    else
      c.seed = j["seed"].get<std::uint64_t>();
  }
  c.v0 = j.value("v0", c.v0);
  c.checkpoints = j.value("checkpoints", c.checkpoints);
  c.window = j.value("window", c.window);
  c.upsilon_threshold = j.value("upsilon_threshold", c.upsilon_threshold);
  c.out = j.value("out", c.out);
  c.threads = j.value("threads", c.threads);
  c.series_max = j.value("series_max", c.series_max);
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    c.weights.default_weight = w.value("default", std::int64_t{1});
    if (w.contains("overrides"))
      for (const auto& [site, v] : w["overrides"].items())
        c.weights.overrides[std::stoll(site)] = v.get<std::int64_t>();
  }
  if (j.contains("ledger_cols"))
    c.ledger_cols = j["ledger_cols"].get<std::vector<std::string>>();
  if (j.contains("coupling")) {
    c.coupling_set = true;
    const auto& cc = j["coupling"];
    c.coupling.x = cc.value("x", c.coupling.x);
    c.coupling.cap_m = cc.value("cap_m", c.coupling.cap_m);
    c.coupling.g = cc.value("g", c.coupling.g);
    c.coupling.k = cc.value("k", c.coupling.k);
    c.coupling.v_cap = cc.value("v_cap", c.coupling.v_cap);
    c.coupling.window_kind = cc.value("window_kind", c.coupling.window_kind);
    if (cc.contains("preset"))
      c.coupling.preset = parse_preset(cc["preset"].get<std::string>());
    c.coupling.perturb = cc.value("perturb", c.coupling.perturb);
  }
  if (j.contains("urn")) {
    c.urn_set = true;
    const auto& u = j["urn"];
    c.urn.kind = u.value("kind", c.urn.kind);
    c.urn.a0 = u.value("a", c.urn.a0);
    c.urn.b0 = u.value("b", c.urn.b0);
    c.urn.alpha = u.value("alpha", c.urn.alpha);
  }
  c.report_input = j.value("in", c.report_input);
  return c;
}

inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace vrrw
