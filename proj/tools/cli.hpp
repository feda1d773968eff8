#pragma once

// The vasculink command line: one subcommand per analysis, CSV or JSON on
// stdout or --out, and a run manifest next to every output file.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "table.hpp"
#include "vasculink.hpp"

namespace vasculink::cli {

inline constexpr const char* tool_version = "0.1.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(detail::concat("cannot open network file '", path, "'"));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// "lo:hi:points-per-decade" -> logarithmically spaced values, both ends included.
inline std::vector<double> parse_log_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() != 3) throw CLI::ValidationError("--n-range", "expected lo:hi:points-per-decade");
  double lo = 0.0, hi = 0.0, ppd = 0.0;
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    ppd = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--n-range", "non-numeric field in '" + text + "'");
  }
  if (!(lo > 0.0) || !(hi >= lo) || !(ppd >= 1.0) || ppd != std::floor(ppd))
    throw CLI::ValidationError("--n-range", "need 0 < lo <= hi and an integer points-per-decade >= 1");
  const double decades = std::log10(hi / lo);
  const auto steps = static_cast<std::size_t>(std::llround(decades * ppd));
  std::vector<double> values;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double v = lo * std::pow(10.0, static_cast<double>(i) / ppd);
    // Round to 12 significant digits so 1e3 stays 1000 rather than 999.9999999999.
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12).ptr;
    double rounded = v;
    std::from_chars(buf, end, rounded);
    values.push_back(rounded);
  }
  values.back() = hi;
  return values;
}

/// Everything derived from a network file that the analyses share.
struct Loaded {
  std::string file_bytes;
  NetworkDocument doc;
  FlowSolution flow;
  ChannelModel model;
  MultipathMetrics metrics;
};

inline Loaded load(const std::string& path, double background = 0.0, bool with_channel = true) {
  std::string bytes = read_file(path);
  NetworkDocument doc = parse_network(bytes);
  Loaded l{std::move(bytes), std::move(doc), {}, {}, {}};
  l.flow = solve_flow(l.doc.network);
  if (!with_channel) return l;
  auto ensemble = enumerate_paths(l.doc.network, l.flow, l.doc.placement);
  l.model = make_channel(l.doc.network, l.flow, l.doc.placement, std::move(ensemble), background);
  l.metrics = multipath_metrics(l.model.ensemble);
  return l;
}

inline std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Channel analysis for molecular communication in vessel networks", "vasculink"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    // Options shared by all subcommands.
    auto common = [&](CLI::App* sub) {
      sub->add_option("network", network_path_, "Network JSON file")->required()->check(CLI::ExistingFile);
      sub->add_option("--format", format_, "Output format")
          ->check(CLI::IsMember({"csv", "json"}))
          ->capture_default_str();
      sub->add_option("--out", out_path_, "Write output here instead of stdout");
      sub->add_option("--seed", seed_, "Random seed")->capture_default_str();
    };

    auto* flow = app.add_subcommand("flow", "Per-pipe flow rate, velocity and effective diffusion");
    common(flow);

    auto* paths = app.add_subcommand("paths", "Tx->Rx paths with fractions and moments");
    common(paths);

    auto* cir = app.add_subcommand("cir", "Channel impulse response on a uniform time grid");
    common(cir);
    cir->add_option("--t-max", t_max_, "End of the time grid in s (default E[T] + 8 tau_RMS)");
    cir->add_option("--samples", samples_, "Grid points")->capture_default_str();
    cir->add_flag("--per-path", per_path_, "Add one column per weighted path contribution");

    auto* metrics = app.add_subcommand("metrics", "Mean excess delay, RMS delay spread, coherence bandwidth");
    common(metrics);

    auto* band = app.add_subcommand("spectrum", "Frequency response, unwrapped phase and group delay");
    common(band);
    band->add_option("--f-max", f_max_, "End of the frequency grid in Hz (default 50 B_c)");
    band->add_option("--samples", spectrum_samples_, "Grid points")->capture_default_str();
    band->add_flag("--per-path", per_path_, "Add one magnitude column per weighted path");

    auto* validate = app.add_subcommand("validate", "Particle Monte Carlo against the analytic model");
    common(validate);
    validate->add_option("--particles", particles_, "Particle count")->capture_default_str();
    validate->add_option("--histogram", histogram_path_, "Write the arrival histogram CSV here");

    auto* ser = app.add_subcommand("ser", "Symbol error rate of the adaptive-threshold detector");
    common(ser);
    ser->add_option("--n-range", n_range_, "Molecules per bit as lo:hi:points-per-decade")
        ->capture_default_str();
    ser->add_option("--ts-factor", ts_factor_, "Symbol duration as a multiple of tau_RMS")
        ->capture_default_str();
    ser->add_option("--memory", memory_, "Detector memory L")->capture_default_str()->check(CLI::PositiveNumber);
    ser->add_option("--strategy", strategy_, "Sampling time strategy")
        ->check(CLI::IsMember({"global-peak", "strongest-path", "mean-delay"}))
        ->capture_default_str();
    ser->add_option("--symbols", symbols_, "Symbols per point")->capture_default_str()->check(CLI::PositiveNumber);
    ser->add_option("--noise", noise_, "Mean background molecules per sample")->capture_default_str();
    ser->add_flag("--genie", genie_, "Feed back the true symbols instead of decisions");

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::ParseError& e) {
      err_ << "USAGE: " << single_line(e.what()) << '\n';
      return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    command_ = chosen->get_name();
    for (const CLI::Option* opt : chosen->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
      const std::string name = opt->get_lnames().front();
      if (name == "out" || name == "seed") continue;
      const auto& given = opt->results();
      if (!given.empty()) parameters_[name] = join(given, ',');
      else if (!opt->get_default_str().empty()) parameters_[name] = opt->get_default_str();
    }

    try {
      std::ostringstream body;
      if (command_ == "flow") cmd_flow(body);
      else if (command_ == "paths") cmd_paths(body);
      else if (command_ == "cir") cmd_cir(body);
      else if (command_ == "metrics") cmd_metrics(body);
      else if (command_ == "spectrum") cmd_spectrum(body);
      else if (command_ == "validate") cmd_validate(body);
      else if (command_ == "ser") cmd_ser(body);
      emit(body.str());
    } catch (const CLI::ValidationError& e) {
      err_ << "USAGE: " << single_line(e.what()) << '\n';
      return 2;
    } catch (const ParseError& e) {
      err_ << "PARSE: " << single_line(e.what()) << '\n';
      return 1;
    } catch (const Error& e) {
      err_ << "MODEL: " << single_line(e.what()) << '\n';
      return 1;
    }
    return 0;
  }

 private:
  static std::string single_line(std::string s) {
    for (char& c : s)
      if (c == '\n' || c == '\r') c = ' ';
    return s;
  }

  template <class T>
  void write(std::ostream& os, const T& data) const {
    if (format_ == "json") write_json(os, data);
    else write_csv(os, data);
  }

  void warn(const Loaded& l) const {
    for (const auto& w : channel_warnings(l.doc.network, l.flow, l.doc.placement, l.model))
      err_ << "WARNING: " << w << '\n';
  }

  void emit(const std::string& body) {
    if (out_path_.empty()) {
      out_ << body;
      return;
    }
    write_text(out_path_, body);
    nlohmann::ordered_json manifest;
    manifest["command"] = command_;
    manifest["network_file_hash"] = network_hash_;
    manifest["seed"] = seed_;
    manifest["tool_version"] = tool_version;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : parameters_) params[k] = v;
    manifest["parameters"] = params;
    if (!units_.empty()) {
      nlohmann::ordered_json units = nlohmann::ordered_json::object();
      for (const auto& [column, unit] : units_) units[column] = unit;
      manifest["units"] = units;
    }
    write_text(out_path_ + ".manifest.json", manifest.dump(2) + "\n");
  }

  static void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(detail::concat("cannot write '", path, "'"));
    f << text;
    if (!f) throw Error(detail::concat("write to '", path, "' failed"));
  }

  Loaded load_checked(double background = 0.0) {
    Loaded l = load(network_path_, background);
    network_hash_ = sha256_hex(l.file_bytes);
    warn(l);
    return l;
  }

  void cmd_flow(std::ostream& os) {
    Loaded l = load(network_path_, 0.0, false);
    network_hash_ = sha256_hex(l.file_bytes);
    Table t{{"pipe_id", "Q_m3s", "u_ms", "Deff_m2s"}, {}};
    for (std::size_t p = 0; p < l.doc.network.pipe_count(); ++p)
      t.add({l.doc.network.pipe(p).id, l.flow.flow_rate[p], l.flow.velocity[p],
             l.flow.effective_diffusion[p]});
    write(os, t);
  }

  void cmd_paths(std::ostream& os) {
    Loaded l = load_checked();
    Table t{{"path", "gamma", "mean_s", "variance_s2", "scale_s", "weight", "bifurcations"}, {}};
    const auto& e = l.model.ensemble;
    for (std::size_t g = 0; g < e.size(); ++g) {
      const TxRxPath& p = e.paths[g];
      t.add({join(p.pipe_ids, '>'), p.fraction, p.mean, p.variance, p.scale, e.weights[g],
             join(p.bifurcation_node_ids, '>')});
    }
    write(os, t);
  }

  void cmd_cir(std::ostream& os) {
    Loaded l = load_checked();
    const double t_max =
        t_max_ ? *t_max_ : l.metrics.mean_excess_delay + 8.0 * l.metrics.rms_delay_spread;
    if (!(t_max > 0.0)) throw CLI::ValidationError("--t-max", "must be positive");
    if (samples_ < 2) throw CLI::ValidationError("--samples", "must be at least 2");
    Table t{{"t", "h"}, {}};
    if (per_path_)
      for (std::size_t g = 0; g < l.model.paths().size(); ++g) t.columns.push_back(path_column("h", g));
    for (std::size_t k = 0; k < samples_; ++k) {
      const double time = t_max * static_cast<double>(k) / static_cast<double>(samples_ - 1);
      std::vector<Cell> row{time, vasculink::cir(l.model, time)};
      if (per_path_)
        for (double c : path_contributions(l.model, time)) row.emplace_back(c);
      t.add(std::move(row));
    }
    write(os, t);
  }

  void cmd_metrics(std::ostream& os) {
    Loaded l = load_checked();
    const auto& m = l.metrics;
    KeyValues kv;
    kv.add("paths", static_cast<std::uint64_t>(l.model.paths().size()));
    kv.add("reach_probability", l.model.ensemble.reach_probability);
    kv.add("mean_excess_delay_s", m.mean_excess_delay);
    kv.add("rms_delay_spread_s", m.rms_delay_spread);
    kv.add("diffusion_spread_sq_s2", m.diffusion_spread_sq);
    kv.add("multipath_spread_sq_s2", m.multipath_spread_sq);
    kv.add("coherence_bandwidth_hz", m.coherence_bandwidth);
    kv.add("rx_gain_s", l.model.rx_gain);
    kv.add("max_observation_probability", max_observation_probability(l.model));
    write(os, kv);
  }

  void cmd_spectrum(std::ostream& os) {
    Loaded l = load_checked();
    double f_max = 0.0;
    if (f_max_) {
      f_max = *f_max_;
    } else {
      if (!(l.metrics.coherence_bandwidth > 0.0))
        throw ModelError("zero delay spread; pass --f-max explicitly");
      f_max = 50.0 * l.metrics.coherence_bandwidth;
    }
    if (!(f_max > 0.0)) throw CLI::ValidationError("--f-max", "must be positive");
    if (spectrum_samples_ < 3) throw CLI::ValidationError("--samples", "must be at least 3");
    const auto grid = linear_grid(f_max, spectrum_samples_);
    const auto samples = spectrum(l.model, grid);
    Table t{{"f", "re", "im", "mag", "phase_unwrapped", "group_delay"}, {}};
    if (per_path_)
      for (std::size_t g = 0; g < l.model.paths().size(); ++g) t.columns.push_back(path_column("mag", g));
    for (const auto& s : samples) {
      std::vector<Cell> row{s.frequency, s.response.real(), s.response.imag(), s.magnitude, s.phase,
                            s.group_delay};
      if (per_path_)
        for (const complex& h : path_responses(l.model, s.frequency)) row.emplace_back(std::abs(h));
      t.add(std::move(row));
    }
    units_ = {{"f", "Hz"}, {"re", "s/m"}, {"im", "s/m"}, {"mag", "s/m"}, {"phase_unwrapped", "rad"},
              {"group_delay", "s"}};
    if (per_path_)
      for (std::size_t g = 0; g < l.model.paths().size(); ++g) units_.emplace_back(path_column("mag", g), "s/m");
    write(os, t);
  }

  void cmd_validate(std::ostream& os) {
    Loaded l = load_checked();
    if (particles_ < 1) throw CLI::ValidationError("--particles", "must be at least 1");
    const auto sim = simulate_particles(l.doc.network, l.flow, l.doc.placement, particles_, seed_,
                                        default_thread_count());
    const double chi = l.model.ensemble.reach_probability;
    const double n = static_cast<double>(sim.particles);
    const double chi_sigma = std::sqrt(chi * (1.0 - chi) / n);
    KeyValues kv;
    kv.add("particles", sim.particles);
    kv.add("reached", sim.reached);
    auto compare = [&](const std::string& key, double analytic, double empirical) {
      kv.add(key + "_analytic", analytic);
      kv.add(key + "_empirical", empirical);
      kv.add(key + "_relative_error", analytic != 0.0 ? std::abs(empirical - analytic) / analytic : 0.0);
    };
    compare("reach_probability", chi, sim.reach_fraction());
    kv.add("reach_probability_sigma", chi_sigma);
    compare("mean_excess_delay_s", l.metrics.mean_excess_delay, sim.mean());
    compare("rms_delay_spread_s", l.metrics.rms_delay_spread, sim.stddev());
    if (sim.reached > 0) {
      const auto fit = chi_square_vs_pdp(l.model.ensemble, sim.arrival_times);
      kv.add("chi_square_statistic", fit.statistic);
      kv.add("chi_square_dof", static_cast<std::uint64_t>(fit.degrees_of_freedom));
      kv.add("chi_square_p_value", fit.p_value);
      if (!histogram_path_.empty()) {
        std::ostringstream hist;
        Table h{{"lower_s", "upper_s", "observed", "expected"}, {}};
        for (const auto& b : fit.bins) h.add({b.lower, b.upper, b.observed, b.expected});
        write_csv(hist, h);
        write_text(histogram_path_, hist.str());
      }
    }
    write(os, kv);
  }

  void cmd_ser(std::ostream& os) {
    const auto molecules = parse_log_range(n_range_);
    if (!(ts_factor_ > 0.0)) throw CLI::ValidationError("--ts-factor", "must be positive");
    if (!(noise_ >= 0.0)) throw CLI::ValidationError("--noise", "must be non-negative");
    Loaded l = load_checked(noise_);
    LinkConfig base;
    base.symbol_duration = min_symbol_duration(l.metrics.rms_delay_spread, ts_factor_);
    base.memory = memory_;
    base.background = noise_;
    base.strategy = parse_strategy(strategy_);
    base.symbol_count = symbols_;
    base.seed = seed_;
    base.genie_aided = genie_;
    const auto results = ser_sweep(l.model, l.metrics, base, molecules, default_thread_count());
    Table t{{"N", "ser", "ci_lo", "ci_hi", "t_s", "T_s", "psi_mean"}, {}};
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      t.add({molecules[i], r.ser, r.ci_low, r.ci_high, r.resolved_sampling_time, base.symbol_duration,
             r.psi_mean});
    }
    write(os, t);
  }

  static std::string path_column(const std::string& prefix, std::size_t g) {
    return prefix + "_P" + std::to_string(g + 1);
  }

  std::ostream& out_;
  std::ostream& err_;

  std::string network_path_;
  std::string format_ = "csv";
  std::string out_path_;
  std::uint64_t seed_ = 0;
  std::optional<double> t_max_;
  std::size_t samples_ = 1001;
  bool per_path_ = false;
  std::optional<double> f_max_;
  std::size_t spectrum_samples_ = 4096;
  std::uint64_t particles_ = 1000000;
  std::string histogram_path_;
  std::string n_range_ = "1e2:1e6:1";
  double ts_factor_ = 4.0;
  std::size_t memory_ = 2;
  std::string strategy_ = "strongest-path";
  std::uint64_t symbols_ = 1000000;
  double noise_ = 500.0;
  bool genie_ = false;

  std::string command_;
  std::string network_hash_;
  std::map<std::string, std::string> parameters_;
  std::vector<std::pair<std::string, std::string>> units_;  // column -> unit, where not obvious from the name
};

/// Runs the CLI with the given arguments; returns the process exit code.
inline int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return Cli(out, err).run(argc, argv);
}

}  // namespace vasculink::cli
