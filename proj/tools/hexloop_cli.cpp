#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hexloop/experiment.hpp"

using namespace hexloop;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::string config_path;
  std::string report_path;
  bool print_config = false;
  bool quiet = false;
  std::optional<double> n, x, p, eps, scale;
  std::optional<int> r, k, window, cut, sweeps, burnin, chains, threads;
  std::optional<long> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, boundary;
  std::vector<double> grid_n, grid_x;
  std::vector<int> grid_k;
  std::vector<std::string> tolerances;
};

void add_options(CLI::App& sub, Overrides& o) {
  sub.add_option("--config", o.config_path, "JSON configuration file; flags override its values");
  sub.add_option("--out", o.out, "write CSV/JSON results here instead of stdout");
  sub.add_option("--report", o.report_path, "write the JSON run report here");
  sub.add_option("--seed", o.seed, "master seed (required for stochastic commands)");
  sub.add_option("--n", o.n, "loop weight n > 0");
  sub.add_option("--x", o.x, "edge weight x > 0");
  sub.add_option("--p", o.p, "site percolation parameter in [0,1]");
  sub.add_option("--r", o.r, "domain radius (host radius for arms)");
  sub.add_option("--k", o.k, "annulus index / arm count");
  sub.add_option("--window", o.window, "resample window radius");
  sub.add_option("--cut", o.cut, "cut-set radius for arms");
  sub.add_option("--sweeps", o.sweeps, "sweeps between samples");
  sub.add_option("--burnin", o.burnin, "burn-in sweeps");
  sub.add_option("--samples", o.samples, "samples per chain / instance count");
  sub.add_option("--chains", o.chains, "independent chains (seeds derived from --seed)");
  sub.add_option("--threads", o.threads, "worker threads; output does not depend on it");
  sub.add_option("--boundary", o.boundary, "'empty' or comma-separated host edge ids");
  sub.add_option("--grid-n", o.grid_n, "n values for sweeps")->delimiter(',');
  sub.add_option("--grid-x", o.grid_x, "x values for sweeps")->delimiter(',');
  sub.add_option("--grid-k", o.grid_k, "k (or r) values for sweeps")->delimiter(',');
  sub.add_option("--eps", o.eps, "arc split threshold");
  sub.add_option("--scale", o.scale, "sample-count multiplier for check");
  sub.add_option("--tolerance", o.tolerances, "override a check tolerance, name=value");
  sub.add_flag("--print-config", o.print_config, "print the merged configuration and exit");
  sub.add_flag("--quiet", o.quiet, "suppress the summary on stderr");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RangeError("cannot read configuration file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> parse_edge_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw RangeError("boundary must be 'empty' or a comma-separated list of edge ids");
    }
  }
  return out;
}

ExperimentConfig merge(const std::string& command, const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = ExperimentConfig::parse(read_file(o.config_path));
  c.command = command;
  auto set = [](auto& field, const auto& opt) {
    if (opt) field = *opt;
  };
  set(c.n, o.n);
  set(c.x, o.x);
  set(c.p, o.p);
  set(c.eps, o.eps);
  set(c.scale, o.scale);
  set(c.r, o.r);
  set(c.k, o.k);
  set(c.window, o.window);
  set(c.cut, o.cut);
  set(c.sweeps, o.sweeps);
  set(c.burnin, o.burnin);
  set(c.chains, o.chains);
  set(c.threads, o.threads);
  set(c.samples, o.samples);
  set(c.out, o.out);
  if (o.seed) c.seed = o.seed;
  if (o.boundary) {
    if (*o.boundary == "empty") c.boundary.reset();
    else c.boundary = parse_edge_list(*o.boundary);
  }
  if (!o.grid_n.empty()) c.grid_n = o.grid_n;
  if (!o.grid_x.empty()) c.grid_x = o.grid_x;
  if (!o.grid_k.empty()) c.grid_k = o.grid_k;
  for (const auto& t : o.tolerances) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw RangeError("tolerance override must look like name=value");
    try {
      c.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    } catch (const std::exception&) {
      throw RangeError("tolerance override must look like name=value");
    }
  }
  c.validate();
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RangeError("cannot write '" + path + "'");
  out << text;
}

void summarise(const RunReport& r) {
  for (const auto& row : r.rows)
    std::fprintf(stderr, "%s = %s [%s, %s] (%s; n=%ld, seed=%llu)\n", row.name.c_str(),
                 format_double(row.value).c_str(), format_double(row.ci_lo).c_str(),
                 format_double(row.ci_hi).c_str(), row.estimator.c_str(), row.n_samples,
                 static_cast<unsigned long long>(row.seed));
  for (const auto& a : r.assertions)
    std::fprintf(stderr, "%s %s (%s): value %s, tolerance %s%s%s\n", a.pass ? "PASS" : "FAIL", a.name.c_str(),
                 a.kind.c_str(), format_double(a.value).c_str(), format_double(a.tolerance).c_str(),
                 a.detail.empty() ? "" : "; ", a.detail.c_str());
  std::fprintf(stderr, "%s in %.2fs (build %s)\n", r.pass() ? "ok" : "invariant failure", r.wall_seconds,
               r.build.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop O(n) and percolation experiments on hexagonal patches"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"enumerate", "exact Gibbs table, Z and marginals"},
      {"sample", "Metropolis samples of the loop model (CSV)"},
      {"rsw", "annulus-loop probability over an (n,x,k) grid (CSV)"},
      {"blocking", "blocking-vertex cluster statistics over (n,x,r) (CSV)"},
      {"arms", "arm-probability table, arc split and the Catalan bound"},
      {"trifurcation", "trifurcation counts of random forests against |dK| (CSV)"},
      {"couple", "exact and statistical stationarity of the coupled resample"},
      {"check", "the full invariant suite"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_options(*sub, o);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  std::string command;
  for (auto* s : subs)
    if (s->parsed()) command = s->get_name();

  ExperimentConfig config;
  try {
    config = merge(command, o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  if (o.print_config) {
    std::cout << config.emit() << "\n";
    return kExitPass;
  }

  CommandResult result;
  try {
    result = run_command(config);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInvariant;
  }

  try {
    write_text(config.out, result.payload);
    if (!o.report_path.empty()) write_text(o.report_path, result.report.to_json().dump(2) + "\n");
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  if (!o.quiet) summarise(result.report);
  return result.report.pass() ? kExitPass : kExitInvariant;
}
