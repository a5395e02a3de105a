// lidar-emi: batch front-end for the simulator.
//
// Exit codes:
//   0  success
//   1  usage error (bad flags, malformed band or range spec)
//   2  configuration or domain error
//   3  I/O error
//   4  partial success (some targets rejected or missed)
//   5  malformed binary point cloud

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lidar_emi.hpp"

namespace fs = std::filesystem;
using namespace lidar_emi;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kPartial = 4, kFormat = 5 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Run {
 public:
  Run(std::string subcommand, fs::path out_dir) : out_dir_(std::move(out_dir)), start_(utc_now()) {
    manifest_["subcommand"] = std::move(subcommand);
    manifest_["tool_version"] = kToolVersion;
    manifest_["config_paths"] = json::object();
    manifest_["outputs"] = json::array();
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir_.string() + "': " + ec.message());
  }

  void config(const std::string& key, const std::string& path) {
    if (!path.empty()) manifest_["config_paths"][key] = path;
  }
  void seed(std::uint64_t s) { manifest_["seed"] = s; }
  void param(const std::string& key, json value) { manifest_["parameters"][key] = std::move(value); }

  fs::path path(const std::string& name) const { return out_dir_ / name; }

  std::ofstream open(const std::string& name) {
    std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + path(name).string() + "'");
    record(name);
    return out;
  }

  void record(const std::string& name) { manifest_["outputs"].push_back(path(name).string()); }

  void finish(int exit_code) {
    manifest_["start_time"] = start_;
    manifest_["end_time"] = utc_now();
    manifest_["exit_code"] = exit_code;
    std::ofstream out(path("manifest.json"), std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in '" + out_dir_.string() + "'");
    out << manifest_.dump(2) << '\n';
  }

 private:
  fs::path out_dir_;
  std::string start_;
  json manifest_;
};

void close_checked(std::ofstream& out, const std::string& what) {
  out.close();
  if (!out) throw IoError("error writing " + what);
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("malformed number '" + text + "' in " + what);
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

std::vector<double> parse_band(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) throw UsageError("band spec must be lo:hi:step, got '" + spec + "'");
  const double lo = parse_double(parts[0], "band spec");
  const double hi = parse_double(parts[1], "band spec");
  const double step = parse_double(parts[2], "band spec");
  try {
    return frequency_grid(lo, hi, step);
  } catch (const DomainError& e) {
    throw UsageError(std::string("band spec: ") + e.what());
  }
}

std::pair<double, double> parse_pair(const std::string& spec, const std::string& what) {
  const auto parts = split(spec, ':');
  if (parts.size() != 2) throw UsageError(what + " must be a:b, got '" + spec + "'");
  return {parse_double(parts[0], what), parse_double(parts[1], what)};
}

struct Common {
  std::string config;
  std::string scene;
  std::string channel;
  std::string health;
  std::uint64_t seed = 1;
  double duration = 0.0;
  std::string out;
};

struct Loaded {
  LidarConfig cfg;
  Scene scene;
  CouplingChannel channel;
  HealthConfig health;
};

Loaded load_common(const Common& c, Run& run) {
  Loaded l;
  l.cfg = c.config.empty() ? LidarConfig{} : load_lidar_config(c.config);
  l.scene = c.scene.empty() ? Scene{} : load_scene(c.scene);
  l.channel = c.channel.empty() ? CouplingChannel{} : load_channel(c.channel);
  l.health = c.health.empty() ? HealthConfig{} : load_health_config(c.health);
  run.config("config", c.config);
  run.config("scene", c.scene);
  run.config("channel", c.channel);
  run.config("health", c.health);
  run.seed(c.seed);
  run.param("duration_s", c.duration > 0.0 ? c.duration : l.cfg.revolution_period());
  return l;
}

void add_common(CLI::App* app, Common& c, bool need_scene) {
  app->add_option("--config", c.config, "sensor configuration file (default: built-in 16-channel sensor)");
  auto* scene = app->add_option("--scene", c.scene, "scene file");
  if (need_scene) scene->required();
  app->add_option("--channel", c.channel, "coupling channel file");
  app->add_option("--health", c.health, "monitoring / fault diagnosis configuration");
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--duration", c.duration, "frame length in seconds (default: one revolution)");
  app->add_option("--out", c.out, "output directory")->required();
}

int cmd_scan(const Common& c, const std::string& emi_path) {
  Run run("scan", c.out);
  const Loaded l = load_common(c, run);
  std::optional<EmiSource> emi;
  if (!emi_path.empty()) {
    emi = load_emi_source(emi_path);
    run.config("emi", emi_path);
  }
  const auto result = scan_frame(l.scene, l.cfg, emi, l.channel, fresh_machine(l.cfg, l.health.machine), c.seed,
                                 scan_options(l.cfg, l.health, c.duration));
  write_cloud_bin(result.cloud, run.path("cloud.bin").string());
  run.record("cloud.bin");
  auto mon = run.open("monitoring.csv");
  write_monitoring_csv(mon, result.readouts);
  close_checked(mon, "monitoring.csv");
  auto trace = run.open("state_trace.csv");
  write_state_trace_csv(trace, result);
  close_checked(trace, "state_trace.csv");
  run.param("points", result.cloud.valid_count());
  run.param("final_state", std::string(to_string(result.final_state())));
  run.finish(kOk);
  std::cout << result.cloud.valid_count() << " points, final state " << to_string(result.final_state()) << '\n';
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& emi_path, const std::string& band) {
  const auto grid = parse_band(band);
  Run run("sweep", c.out);
  const Loaded l = load_common(c, run);
  EmiSource emi = emi_path.empty() ? EmiSource{} : load_emi_source(emi_path);
  run.config("emi", emi_path);
  run.param("band", band);
  const auto opt = scan_options(l.cfg, l.health, c.duration);
  const FddMachine machine = fresh_machine(l.cfg, l.health.machine);
  const auto benign = scan_frame(l.scene, l.cfg, nullptr, l.channel, machine, c.seed, opt);

  auto out = run.open("sweep.csv");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const double f : grid) {
    emi.carrier_freq = f;
    const auto r = scan_frame(l.scene, l.cfg, &emi, l.channel, machine, c.seed, opt);
    const SweepSample sample{f, r.cloud, r.final_state()};
    const auto row = sweep_report(std::span<const SweepSample>(&sample, 1), benign.cloud);
    rows.push_back(row.front());
  }
  write_sweep_csv(out, rows);
  close_checked(out, "sweep.csv");
  run.param("rows", rows.size());
  run.finish(kOk);
  std::cout << rows.size() << " frequencies swept\n";
  return kOk;
}

struct InjectArgs {
  std::string targets;
  std::string emi;
  double carrier = 1040e6;
  double depth = 0.5;
  double latency = 0.0;
  double jitter = kDefaultSyncJitter;
  double tolerance = -1.0;
  std::optional<double> all_slot;
  std::string mask;
  bool unsync = false;
};

int cmd_attack_inject(const Common& c, const InjectArgs& a) {
  if (a.targets.empty() == !a.all_slot) throw UsageError("give exactly one of --targets and --all-slot");
  Run run("attack inject", c.out);
  const Loaded l = load_common(c, run);
  const EmiSource tx = a.emi.empty() ? EmiSource{} : load_emi_source(a.emi);
  run.config("emi", a.emi);
  run.config("targets", a.targets);

  std::vector<SpoofTarget> targets;
  if (a.all_slot) {
    std::optional<std::pair<double, double>> mask;
    if (!a.mask.empty()) mask = parse_pair(a.mask, "--mask");
    targets = all_slot_targets(l.cfg, *a.all_slot, mask);
    run.param("all_slot_range_m", *a.all_slot);
  } else {
    targets = load_targets(a.targets);
  }
  const double tolerance = a.tolerance > 0.0 ? a.tolerance : l.cfg.range_accuracy;
  run.param("carrier_freq_hz", a.carrier);
  run.param("depth", a.depth);
  run.param("system_latency_s", a.latency);
  run.param("sync_jitter_s", a.jitter);
  run.param("synchronized", !a.unsync);
  run.param("hit_tolerance_m", tolerance);

  const AttackPlan plan = plan_attack(std::move(targets), l.cfg, tx, a.carrier, a.depth, a.latency, a.jitter);
  auto plan_out = run.open("plan.json");
  plan_out << to_json(plan).dump(1) << '\n';
  close_checked(plan_out, "plan.json");
  auto bb = run.open("baseband.csv");
  write_baseband_csv(bb, plan.design.baseband);
  close_checked(bb, "baseband.csv");

  const auto opt = scan_options(l.cfg, l.health, c.duration);
  const FddMachine machine = fresh_machine(l.cfg, l.health.machine);
  const auto benign = scan_frame(l.scene, l.cfg, nullptr, l.channel, machine, c.seed, opt);
  const EmiSource emi =
      realize_attack(plan, l.cfg, 0.0, 0, a.unsync ? SyncMode::kUnsynchronized : SyncMode::kSynchronized, c.seed);
  const auto attacked = scan_frame(l.scene, l.cfg, &emi, l.channel, machine, c.seed, opt);
  write_cloud_bin(attacked.cloud, run.path("attacked.bin").string());
  run.record("attacked.bin");

  const auto outcomes = evaluate_injection(plan, attacked.cloud, tolerance);
  auto report = run.open("report.csv");
  report << "target,channel,azimuth_deg,range_m,status,cycle,achieved_range_m\n";
  std::vector<std::string> status(plan.targets.size(), "rejected");
  std::vector<const TargetOutcome*> by_target(plan.targets.size(), nullptr);
  for (const auto& o : outcomes) {
    by_target[o.target] = &o;
    status[o.target] = o.hit ? "hit" : "miss";
  }
  std::size_t hits = 0;
  char buf[96];
  for (std::size_t i = 0; i < plan.targets.size(); ++i) {
    const auto& t = plan.targets[i];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,", i, t.channel, t.azimuth, t.range);
    report << buf << status[i] << ',';
    if (const auto* o = by_target[i]) {
      report << o->ray.cycle << ',';
      if (o->achieved_range) {
        std::snprintf(buf, sizeof buf, "%.17g", *o->achieved_range);
        report << buf;
      }
      hits += o->hit ? 1 : 0;
    } else {
      report << ',';
    }
    report << '\n';
  }
  close_checked(report, "report.csv");

  const auto stats = ray_error_stats(benign.cloud, attacked.cloud);
  auto st = run.open("stats.csv");
  write_stats_csv_header(st);
  st << ",effect_label\n";
  write_stats_csv_row(st, stats);
  st << ',' << to_string(classify_effect(stats, attacked.final_state())) << '\n';
  close_checked(st, "stats.csv");

  const bool complete = hits == plan.targets.size();
  run.param("targets", plan.targets.size());
  run.param("hits", hits);
  run.param("rejected", plan.design.rejected.size());
  run.param("injected_count", stats.injected_count);
  const int code = complete ? kOk : kPartial;
  run.finish(code);
  std::cout << hits << '/' << plan.targets.size() << " targets hit, " << stats.injected_count
            << " injected points\n";
  for (const auto& r : plan.design.rejected) std::cerr << "target " << r.target << " rejected: " << r.reason << '\n';
  return code;
}

int cmd_corrupt(const std::string& in, const std::string& out, double epsilon, std::uint64_t seed) {
  Run run("corrupt", out);
  run.config("input", in);
  run.seed(seed);
  run.param("epsilon_m", epsilon);
  const auto files = corrupt_directory(in, out, {epsilon, seed});
  for (const auto& f : files) run.record(f.relative.generic_string());
  run.param("files", files.size());
  run.finish(kOk);
  std::cout << files.size() << " point cloud files corrupted\n";
  return kOk;
}

int cmd_metrics(const std::string& a, const std::string& b, const std::string& out) {
  Run run("metrics", out);
  run.config("benign", a);
  run.config("attacked", b);
  const auto benign = read_cloud_bin(a);
  const auto attacked = read_cloud_bin(b);
  const auto stats = ray_error_stats(benign, attacked);
  const auto label = classify_effect(stats, LidarState::kNormal);
  auto st = run.open("stats.csv");
  write_stats_csv_header(st);
  st << ",hausdorff_m,effect_label\n";
  write_stats_csv_row(st, stats);
  st << ',';
  if (benign.valid_count() > 0 && attacked.valid_count() > 0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", hausdorff(benign, attacked));
    st << buf;
  } else {
    st << kRemovedAllSentinel;
  }
  st << ',' << to_string(label) << '\n';
  close_checked(st, "stats.csv");
  run.finish(kOk);
  std::cout << "mean_abs_error " << stats.mean_abs_error << " m, label " << to_string(label) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR electromagnetic-interference simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common scan_c, sweep_c, inject_c;
  std::string scan_emi, sweep_emi, band;
  InjectArgs inject;
  std::string corrupt_in, corrupt_out, metrics_a, metrics_b, metrics_out;
  double epsilon = 0.0;
  std::uint64_t corrupt_seed = 1;

  auto* scan = app.add_subcommand("scan", "simulate one frame");
  add_common(scan, scan_c, true);
  scan->add_option("--emi", scan_emi, "EMI source profile (omit for a benign scan)");

  auto* sweep = app.add_subcommand("sweep", "carrier frequency sweep, one frame per frequency");
  add_common(sweep, sweep_c, true);
  sweep->add_option("--emi", sweep_emi, "EMI source profile supplying power and distance");
  sweep->add_option("--band", band, "lo:hi:step in Hz, both ends inclusive")->required();

  auto* attack = app.add_subcommand("attack", "attack workflows");
  attack->require_subcommand(1);
  auto* inj = attack->add_subcommand("inject", "plan and simulate a point injection");
  add_common(inj, inject_c, false);
  inj->add_option("--targets", inject.targets, "spoof target JSON file");
  inj->add_option("--all-slot", inject.all_slot, "spoof every ray of one revolution at this range [m]");
  inj->add_option("--mask", inject.mask, "azimuth window lo:hi in degrees for --all-slot");
  inj->add_option("--emi", inject.emi, "transmitter profile (power chain)");
  inj->add_option("--carrier", inject.carrier, "carrier frequency [Hz]")->capture_default_str();
  inj->add_option("--depth", inject.depth, "AM depth in (0, 1]")->capture_default_str();
  inj->add_option("--latency", inject.latency, "attacker system latency [s]")->capture_default_str();
  inj->add_option("--jitter", inject.jitter, "sync edge timestamp jitter std-dev [s]")->capture_default_str();
  inj->add_option("--tolerance", inject.tolerance, "hit tolerance [m] (default: sensor range accuracy)");
  inj->add_flag("--unsync", inject.unsync, "replay with a random offset instead of synchronizing");

  auto* corrupt = app.add_subcommand("corrupt", "add uniform range noise to every .bin file of a tree");
  corrupt->add_option("--in", corrupt_in, "input directory")->required();
  corrupt->add_option("--out", corrupt_out, "output directory")->required();
  corrupt->add_option("--epsilon", epsilon, "noise half-width [m]")->required();
  corrupt->add_option("--seed", corrupt_seed, "master seed")->capture_default_str();

  auto* metrics = app.add_subcommand("metrics", "compare two .bin point clouds");
  metrics->add_option("--benign", metrics_a, "reference cloud")->required();
  metrics->add_option("--attacked", metrics_b, "cloud to compare")->required();
  metrics->add_option("--out", metrics_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*scan) return cmd_scan(scan_c, scan_emi);
    if (*sweep) return cmd_sweep(sweep_c, sweep_emi, band);
    if (*inj) return cmd_attack_inject(inject_c, inject);
    if (*corrupt) return cmd_corrupt(corrupt_in, corrupt_out, epsilon, corrupt_seed);
    if (*metrics) return cmd_metrics(metrics_a, metrics_b, metrics_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kUsage;
}
