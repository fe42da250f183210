#include "zpm/config.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "zpm/io.hpp"

namespace zpm {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::Validation, key + ": " + what);
}

double as_double(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v);
  } catch (const Error&) {
    bad(key, "expected a number, got '" + v + "'");
  }
}

long long as_integer(const std::string& key, const std::string& v) {
  const double d = as_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) bad(key, "expected an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

std::vector<double> as_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& f : io::split_csv_line(v)) {
    if (f.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(as_double(key, f));
  }
  return out;
}

std::vector<int> as_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (double d : as_list(key, v)) {
    if (d != std::floor(d)) bad(key, "expected integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Boost's INI reader only knows ';' comments; strip '#' ones first.
std::string strip_hash_comments(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line, out;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty() && t.front() == '#') line.clear();
    out += line;
    out += '\n';
  }
  return out;
}

using Handler = void (*)(AppConfig&, const std::string& key, const std::string& value);

#define ZPM_KEY(name, ...) \
  { name, [](AppConfig& c, const std::string& k, const std::string& v) { (void)k; (void)v; __VA_ARGS__; } }

const std::map<std::string, std::map<std::string, Handler>>& schema() {
  static const std::map<std::string, std::map<std::string, Handler>> s = {
      {"experiment",
       {
           ZPM_KEY("tau_g_ns", c.experiment.tau_g_ns = as_double(k, v)),
           ZPM_KEY("dgd_per_loop_ns", c.experiment.dgd_per_loop_ns = as_double(k, v)),
           ZPM_KEY("protection_sigma_rad", c.experiment.zeno.protection_sigma = as_double(k, v)),
           ZPM_KEY("rep_rate_khz", c.experiment.rep_rate_khz = as_double(k, v)),
           ZPM_KEY("n_pulses", c.experiment.n_pulses = as_integer(k, v)),
           ZPM_KEY("loss_db_per_loop", c.experiment.loss_db_per_loop = as_double(k, v)),
           ZPM_KEY("mean_photons_per_pulse", c.experiment.mean_photons_per_pulse = as_double(k, v)),
           ZPM_KEY("background_rate_per_gate", c.experiment.background_rate_per_gate = as_double(k, v)),
           ZPM_KEY("gate_start_ns", c.experiment.gate_start_ns = as_double(k, v)),
           ZPM_KEY("gate_ns", c.experiment.gate_ns = as_double(k, v)),
           ZPM_KEY("spcm_jitter_ns", c.experiment.spcm_jitter_ns = as_double(k, v)),
           ZPM_KEY("tdc_bin_ns", c.experiment.tdc_bin_ns = as_double(k, v)),
           ZPM_KEY("seed", c.experiment.seed = static_cast<std::uint64_t>(as_integer(k, v))),
           ZPM_KEY("structured_background_rate", c.experiment.structured_background_rate = as_double(k, v)),
           ZPM_KEY("structured_background_profile", c.experiment.structured_background_profile = as_list(k, v)),
           ZPM_KEY("threads", c.threads = static_cast<unsigned>(as_integer(k, v))),
       }},
      {"settings",
       {
           ZPM_KEY("thetas_over_quarter_pi", c.thetas_over_quarter_pi = as_list(k, v)),
           ZPM_KEY("loops", c.loops = as_int_list(k, v)),
       }},
      {"analysis",
       {
           ZPM_KEY("bin_ns", c.analysis.bin_ns = as_double(k, v)),
           ZPM_KEY("window_offset_ns", c.analysis.window_offset_ns = as_double(k, v)),
           ZPM_KEY("window_width_ns", c.analysis.window_width_ns = as_double(k, v)),
           ZPM_KEY("window_ns",
                   {
                     const auto w = as_list(k, v);
                     if (w.size() != 2 || !(w[0] < w[1])) bad(k, "expected 'lo, hi' with lo < hi");
                     c.analysis.window = TimeWindow{w[0], w[1]};
                   }),
           ZPM_KEY("tau_max_source",
                   {
                     if (v == "calibration")
                       c.tau_max_source = TauMaxSource::Calibration;
                     else if (v == "slow_axis")
                       c.tau_max_source = TauMaxSource::SlowAxis;
                     else
                       bad(k, "expected 'calibration' or 'slow_axis'");
                   }),
           ZPM_KEY("data_dir", c.data_dir = std::filesystem::path(v)),
       }},
      {"sweep",
       {
           ZPM_KEY("thetas_over_quarter_pi", c.sweep.thetas_over_quarter_pi = as_list(k, v)),
           ZPM_KEY("loops", c.sweep.loops = as_int_list(k, v)),
           ZPM_KEY("loop_tau_product", c.sweep.loop_tau_product = as_double(k, v)),
           ZPM_KEY("tau_tildes", c.sweep.tau_tildes = as_list(k, v)),
       }},
      {"table1",
       {
           ZPM_KEY("tau_tilde_grid", c.table1.tau_tilde_grid = as_list(k, v)),
           ZPM_KEY("golden", c.table1.golden = std::filesystem::path(v)),
       }},
      {"table2",
       {
           ZPM_KEY("loops", c.table2.loops = static_cast<int>(as_integer(k, v))),
           ZPM_KEY("tau_g_ns", c.table2.tau_g_ns = as_double(k, v)),
           ZPM_KEY("expectations", c.table2.expectations = as_list(k, v)),
           ZPM_KEY("n_pulses", c.table2.n_pulses = as_integer(k, v)),
           ZPM_KEY("loss_db_per_loop", c.table2.loss_db_per_loop = as_double(k, v)),
           ZPM_KEY("mean_photons_per_pulse", c.table2.mean_photons_per_pulse = as_double(k, v)),
           ZPM_KEY("background_rate_per_gate", c.table2.background_rate_per_gate = as_double(k, v)),
       }},
  };
  return s;
}

#undef ZPM_KEY

void validate(const AppConfig& c) {
  c.experiment.validate();
  if (c.threads < 1) bad("threads", "must be >= 1");
  if (c.thetas_over_quarter_pi.empty()) bad("settings.thetas_over_quarter_pi", "needs at least one value");
  if (c.loops.empty()) bad("settings.loops", "needs at least one value");
  for (int l : c.loops)
    if (l < 1) bad("settings.loops", "loop counts must be >= 1");
  if (!(c.analysis.bin_ns > 0)) bad("analysis.bin_ns", "must be > 0");
  for (int l : c.sweep.loops)
    if (l < 1) bad("sweep.loops", "loop counts must be >= 1");
  if (!(c.sweep.loop_tau_product > 0)) bad("sweep.loop_tau_product", "must be > 0");
  for (double t : c.sweep.tau_tildes)
    if (!(t > 0)) bad("sweep.tau_tildes", "must be > 0");
  for (double t : c.table1.tau_tilde_grid)
    if (!(t > 0)) bad("table1.tau_tilde_grid", "must be > 0");
  if (c.table2.loops < 1) bad("table2.loops", "must be >= 1");
  if (!(c.table2.tau_g_ns > 0)) bad("table2.tau_g_ns", "must be > 0");
  if (c.table2.n_pulses < 1) bad("table2.n_pulses", "must be >= 1");
  for (double e : c.table2.expectations)
    if (!(e >= -1 && e <= 1)) bad("table2.expectations", "values must lie in [-1, 1]");
}

}  // namespace

AppConfig parse_config(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in(strip_hash_comments(text));
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::Validation, std::string("config syntax: ") + e.what());
  }

  AppConfig c;
  const auto& sch = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) bad(section, "top-level keys must live under a [section]");
    const auto sec = sch.find(section);
    if (sec == sch.end()) bad(section, "unknown section");
    for (const auto& [key, node] : body) {
      const auto h = sec->second.find(key);
      if (h == sec->second.end()) bad(section + "." + key, "unknown key");
      h->second(c, section + "." + key, trim(node.get_value<std::string>()));
    }
  }
  c.experiment.sync_tau_tilde();
  validate(c);
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Validation, "config file not found: " + path.string());
  return parse_config(io::read_text(path));
}

std::optional<Command> parse_command(std::string_view name) {
  static const std::pair<std::string_view, Command> table[] = {
      {"table1", Command::Table1}, {"exact", Command::Exact}, {"simulate", Command::Simulate},
      {"analyze", Command::Analyze}, {"sweep", Command::Sweep}, {"table2", Command::Table2},
  };
  for (const auto& [n, c] : table)
    if (n == name) return c;
  return std::nullopt;
}

const char* to_string(Command c) {
  switch (c) {
    case Command::Table1: return "table1";
    case Command::Exact: return "exact";
    case Command::Simulate: return "simulate";
    case Command::Analyze: return "analyze";
    case Command::Sweep: return "sweep";
    case Command::Table2: return "table2";
  }
  return "?";
}

}  // namespace zpm
