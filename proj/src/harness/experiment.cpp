#include "mesval/harness/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mesval/common/error.hpp"
#include "mesval/hub/config.hpp"

namespace mesval::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModule = "cli_harness";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(kModule, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : text) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(kModule, where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InvalidInput(kModule, fmt::format("unknown key '{}' in {}", k, where));
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

DateRange parse_range(const json& j, const std::string& where) {
  only_keys(j, {"from", "to"}, where);
  DateRange r{j.at("from").get<std::string>(), j.at("to").get<std::string>()};
  if (parse_date(r.to) < parse_date(r.from)) throw InvalidInput(kModule, where + ": 'to' before 'from'");
  return r;
}

const char* optimizer_name(forecast::Optimizer o) { return o == forecast::Optimizer::kAdam ? "adam" : "gd"; }

std::vector<int> day_indices(const DateRange& r, const LoadSeries& s, const char* what) {
  const HourStamp from = parse_date(r.from), to = parse_date(r.to);
  const HourStamp first = s.time.front();
  const HourStamp last = s.day_start(s.days() - 1);
  if (from < first || to > last)
    throw InvalidInput(kModule, fmt::format("{} range {}..{} outside the data ({}..{})", what, r.from, r.to,
                                            format_timestamp(first).substr(0, 10),
                                            format_timestamp(last).substr(0, 10)));
  std::vector<int> days;
  for (HourStamp h = from; h <= to; h += 24) days.push_back(static_cast<int>((h - first) / 24));
  return days;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["hub_config"] = hub_config;
  j["seed"] = seed;
  if (synthetic()) j["data"] = {{"synthetic", {{"days", synth_days}, {"start", synth_start}}}};
  else j["data"] = {{"csv", data_csv}};
  j["split"] = {{"train", {{"from", train.from}, {"to", train.to}}}, {"test", {{"from", test.from}, {"to", test.to}}}};
  j["training"] = {{"lr", training.lr},
                   {"epochs_mse", training.epochs_mse},
                   {"epochs_e2e", training.epochs_e2e},
                   {"lr_e2e", training.lr_e2e},
                   {"window", training.window},
                   {"hidden_size", training.hidden_size},
                   {"optimizer", optimizer_name(training.optimizer)}};
  j["mode"] = mode == valuation::Mode::kJoint ? "joint" : "sequential";
  j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig parse_experiment_config(const json& j, const std::string& base_dir) {
  ExperimentConfig c;
  try {
    only_keys(j, {"schema_version", "hub_config", "seed", "data", "split", "training", "mode", "output_dir"},
              "experiment config");
    if (j.contains("schema_version") && j["schema_version"] != 1)
      throw InvalidInput(kModule, "unsupported experiment schema_version");
    if (!j.contains("seed")) throw InvalidInput(kModule, "experiment config: seed not set");
    c.seed = j["seed"].get<std::uint64_t>();
    c.hub_config = resolve(j.at("hub_config").get<std::string>(), base_dir);

    const auto& data = j.at("data");
    only_keys(data, {"csv", "synthetic"}, "data");
    if (data.contains("csv") == data.contains("synthetic"))
      throw InvalidInput(kModule, "data: give exactly one of 'csv' and 'synthetic'");
    if (data.contains("csv")) {
      c.data_csv = resolve(data["csv"].get<std::string>(), base_dir);
    } else {
      const auto& s = data["synthetic"];
      only_keys(s, {"days", "start"}, "data.synthetic");
      c.synth_days = s.at("days").get<int>();
      if (c.synth_days < 1) throw InvalidInput(kModule, "data.synthetic.days must be >= 1");
      if (s.contains("start")) c.synth_start = s["start"].get<std::string>();
      parse_date(c.synth_start);
    }

    const auto& split = j.at("split");
    only_keys(split, {"train", "test"}, "split");
    c.train = parse_range(split.at("train"), "split.train");
    c.test = parse_range(split.at("test"), "split.test");

    if (j.contains("training")) {
      const auto& t = j["training"];
      only_keys(t, {"lr", "epochs_mse", "epochs_e2e", "lr_e2e", "window", "hidden_size", "optimizer"}, "training");
      auto& tc = c.training;
      tc.lr = t.value("lr", tc.lr);
      tc.epochs_mse = t.value("epochs_mse", tc.epochs_mse);
      tc.epochs_e2e = t.value("epochs_e2e", tc.epochs_e2e);
      tc.lr_e2e = t.value("lr_e2e", tc.lr_e2e);
      tc.window = t.value("window", tc.window);
      tc.hidden_size = t.value("hidden_size", tc.hidden_size);
      const std::string opt = t.value("optimizer", std::string(optimizer_name(tc.optimizer)));
      if (opt == "adam") tc.optimizer = forecast::Optimizer::kAdam;
      else if (opt == "gd") tc.optimizer = forecast::Optimizer::kGradientDescent;
      else throw InvalidInput(kModule, "training.optimizer must be 'adam' or 'gd'");
    }
    c.training.seed = c.seed;
    c.training.validate();

    const std::string mode = j.value("mode", std::string("joint"));
    if (mode == "joint") c.mode = valuation::Mode::kJoint;
    else if (mode == "sequential") c.mode = valuation::Mode::kSequential;
    else throw InvalidInput(kModule, "mode must be 'joint' or 'sequential'");
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw InvalidInput(kModule, std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw InvalidInput(kModule, fmt::format("{}: {}", path, e.what()));
  }
  return parse_experiment_config(j, fs::path(path).parent_path().string());
}

std::uint64_t synth_seed(std::uint64_t seed) { return valuation::derive_seed(seed, "cli_harness/synth"); }

LoadSeries load_data(const ExperimentConfig& cfg) {
  if (!cfg.synthetic()) return load_series_csv(cfg.data_csv);
  return synth_data(synth_seed(cfg.seed), cfg.synth_days, cfg.synth_start);
}

valuation::Scenario make_scenario(const ExperimentConfig& cfg) {
  valuation::Scenario sc;
  sc.hub = std::make_shared<hub::HubConfig>(hub::load_hub_config(cfg.hub_config));
  sc.series = load_data(cfg);
  if (sc.series.size() < 24) throw InvalidInput(kModule, "data shorter than one day");
  sc.train_days = day_indices(cfg.train, sc.series, "train");
  sc.test_days = day_indices(cfg.test, sc.series, "test");
  const std::set<int> train(sc.train_days.begin(), sc.train_days.end());
  for (int d : sc.test_days)
    if (train.count(d)) throw InvalidInput(kModule, "train and test ranges overlap");
  sc.training = cfg.training;
  sc.mode = cfg.mode;
  sc.validate();
  return sc;
}

std::string fingerprint(const ExperimentConfig& cfg) {
  json j = cfg.to_json();
  j.erase("output_dir");
  j.erase("hub_config");
  j["hub_text"] = fmt::format("{:016x}", fnv1a(read_file(cfg.hub_config)));
  if (!cfg.synthetic()) j["data"] = fmt::format("{:016x}", fnv1a(read_file(cfg.data_csv)));
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

ModelStore::ModelStore(std::string dir, std::string fingerprint)
    : dir_(std::move(dir)), fingerprint_(std::move(fingerprint)) {}

std::optional<valuation::Models> ModelStore::load(const std::string& tag) const {
  const fs::path d = fs::path(dir_) / tag;
  std::ifstream f(d / "fingerprint");
  std::string stored;
  if (!f || !(f >> stored) || stored != fingerprint_) return std::nullopt;
  valuation::Models m;
  for (int s = 0; s < kSectorCount; ++s) {
    const fs::path p = d / (std::string(kSectorLabels[s]) + ".model");
    if (!fs::exists(p)) return std::nullopt;
    m[s] = forecast::load_model(p.string());
  }
  return m;
}

void ModelStore::save(const std::string& tag, const valuation::Models& models) const {
  const fs::path d = fs::path(dir_) / tag;
  fs::create_directories(d);
  for (int s = 0; s < kSectorCount; ++s)
    forecast::save_model(models[s], (d / (std::string(kSectorLabels[s]) + ".model")).string());
  std::ofstream f(d / "fingerprint");
  f << fingerprint_ << '\n';
  if (!f) throw DataError(kModule, "cannot write " + (d / "fingerprint").string());
}

}  // namespace mesval::harness
