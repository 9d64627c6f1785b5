#include "plangan/orchestrator/run_config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "plangan/core/errors.h"

namespace plangan::orchestrator {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, value);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

std::vector<int> ParseIntList(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseNumber<int>(key, Trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field IntField(std::string key, T RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return std::to_string(c.*member); },
          [member, key](RunConfig& c, const std::string& v) { c.*member = ParseNumber<T>(key, v); }};
}

template <typename Get, typename Set>
Field Custom(std::string key, Get get, Set set) {
  return {std::move(key), get, set};
}

Field DoubleRef(std::string key, double& (*ref)(RunConfig&)) {
  return {key, [ref](const RunConfig& c) { return FormatDouble(ref(const_cast<RunConfig&>(c))); },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = ParseNumber<double>(key, v); }};
}

Field IntRef(std::string key, int& (*ref)(RunConfig&)) {
  return {key, [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref, key](RunConfig& c, const std::string& v) { ref(c) = ParseNumber<int>(key, v); }};
}

// Canonical key order. The environment and ablation keys are handled
// separately by ParseRunConfig because they select defaults and overrides.
const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      Custom("environment", [](const RunConfig& c) { return c.environment; },
             [](RunConfig& c, const std::string& v) { c.environment = v; }),
      IntField("seed", &RunConfig::seed),
      Custom("ablation", [](const RunConfig& c) { return ToString(c.ablation); },
             [](RunConfig& c, const std::string& v) { c.ablation = ParseAblation(v); }),
      IntRef("M / gan_ensemble_size", [](RunConfig& c) -> int& { return c.ensemble.members; }),
      IntRef("K / one_step_models", [](RunConfig& c) -> int& { return c.ensemble.one_step_models; }),
      IntField("J / initial_random_trajectories", &RunConfig::initial_trajectories),
      IntField("Y / initial_training_steps", &RunConfig::initial_train_steps),
      Custom("T / trajectory_length", [](const RunConfig& c) { return std::to_string(c.horizon); },
             [](RunConfig& c, const std::string& v) {
               c.horizon = ParseNumber<int>("T / trajectory_length", v);
               c.planner.horizon = c.horizon;
             }),
      IntField("E / additional_trajectories", &RunConfig::episodes),
      IntField("P / training_steps_per_trajectory", &RunConfig::train_steps_per_episode),
      IntRef("Q / planner_initial_actions", [](RunConfig& c) -> int& { return c.planner.proposals; }),
      IntRef("C / planner_action_copies", [](RunConfig& c) -> int& { return c.planner.copies; }),
      IntRef("tau / training_trajectory_length", [](RunConfig& c) -> int& { return c.ensemble.tau; }),
      DoubleRef("lambda / one_step_regularisation",
                [](RunConfig& c) -> double& { return c.ensemble.lambda; }),
      IntRef("B_g / gan_batch_size", [](RunConfig& c) -> int& { return c.ensemble.gan_batch; }),
      IntRef("B_m / one_step_batch_size", [](RunConfig& c) -> int& { return c.ensemble.model_batch; }),
      DoubleRef("alpha / score_weighting", [](RunConfig& c) -> double& { return c.planner.alpha; }),
      Custom("selection_mode", [](const RunConfig& c) { return planner::ToString(c.planner.mode); },
             [](RunConfig& c, const std::string& v) { c.planner.mode = planner::ParseSelectionMode(v); }),
      IntRef("noise_dim", [](RunConfig& c) -> int& { return c.ensemble.noise_dim; }),
      IntRef("critic_updates", [](RunConfig& c) -> int& { return c.ensemble.critic_updates; }),
      Custom("hidden_sizes",
             [](const RunConfig& c) {
               std::string s;
               for (std::size_t i = 0; i < c.ensemble.hidden_sizes.size(); ++i)
                 s += (i ? "," : "") + std::to_string(c.ensemble.hidden_sizes[i]);
               return s;
             },
             [](RunConfig& c, const std::string& v) {
               c.ensemble.hidden_sizes = ParseIntList("hidden_sizes", v);
             }),
      DoubleRef("generator_lr", [](RunConfig& c) -> double& { return c.ensemble.generator_adam.learning_rate; }),
      DoubleRef("generator_beta1", [](RunConfig& c) -> double& { return c.ensemble.generator_adam.beta1; }),
      DoubleRef("generator_beta2", [](RunConfig& c) -> double& { return c.ensemble.generator_adam.beta2; }),
      DoubleRef("generator_l2", [](RunConfig& c) -> double& { return c.ensemble.generator_adam.weight_decay; }),
      DoubleRef("discriminator_lr",
                [](RunConfig& c) -> double& { return c.ensemble.discriminator_adam.learning_rate; }),
      DoubleRef("discriminator_beta1",
                [](RunConfig& c) -> double& { return c.ensemble.discriminator_adam.beta1; }),
      DoubleRef("discriminator_beta2",
                [](RunConfig& c) -> double& { return c.ensemble.discriminator_adam.beta2; }),
      DoubleRef("discriminator_l2",
                [](RunConfig& c) -> double& { return c.ensemble.discriminator_adam.weight_decay; }),
      DoubleRef("one_step_lr", [](RunConfig& c) -> double& { return c.ensemble.model_adam.learning_rate; }),
      DoubleRef("one_step_beta1", [](RunConfig& c) -> double& { return c.ensemble.model_adam.beta1; }),
      DoubleRef("one_step_beta2", [](RunConfig& c) -> double& { return c.ensemble.model_adam.beta2; }),
      DoubleRef("one_step_l2", [](RunConfig& c) -> double& { return c.ensemble.model_adam.weight_decay; }),
      IntField("replay_capacity", &RunConfig::replay_capacity),
      IntField("checkpoint_every", &RunConfig::checkpoint_every),
      IntField("rolling_window", &RunConfig::rolling_window),
      IntField("loss_log_every", &RunConfig::loss_log_every),
      Custom("output_dir", [](const RunConfig& c) { return c.output_dir.string(); },
             [](RunConfig& c, const std::string& v) { c.output_dir = v; }),
  };
  return fields;
}

const Field* FindField(const std::string& key) {
  for (const auto& f : Fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

std::string ToString(Ablation ablation) {
  switch (ablation) {
    case Ablation::kFull: return "full";
    case Ablation::kNoPlanner: return "no-planner";
    case Ablation::kNoPlannerAvg: return "no-planner-avg";
    case Ablation::kLambda0: return "lambda0";
    case Ablation::kEnsemble1: return "ensemble-1";
    case Ablation::kEnsemble5: return "ensemble-5";
  }
  return "full";
}

Ablation ParseAblation(const std::string& text) {
  if (text == "full") return Ablation::kFull;
  if (text == "no-planner") return Ablation::kNoPlanner;
  if (text == "no-planner-avg") return Ablation::kNoPlannerAvg;
  if (text == "lambda0" || text == "λ=0" || text == "lambda=0") return Ablation::kLambda0;
  if (text == "ensemble-1") return Ablation::kEnsemble1;
  if (text == "ensemble-5") return Ablation::kEnsemble5;
  throw ConfigError("unknown ablation variant '" + text +
                    "' (expected full, no-planner, no-planner-avg, lambda0, ensemble-1, "
                    "ensemble-5)");
}

void RunConfig::Validate() const {
  if (environment != "four_rooms" && environment != "reacher")
    throw ConfigError("unknown environment '" + environment + "'");
  if (initial_trajectories < 1) throw ConfigError("J must be >= 1");
  if (initial_train_steps < 0) throw ConfigError("Y must be >= 0");
  if (episodes < 0) throw ConfigError("E must be >= 0");
  if (train_steps_per_episode < 0) throw ConfigError("P must be >= 0");
  if (horizon < 1) throw ConfigError("T must be >= 1");
  if (planner.horizon != horizon) throw ConfigError("planner horizon must equal T");
  if (ensemble.tau > horizon) throw ConfigError("tau must not exceed T");
  if (replay_capacity < static_cast<std::size_t>(initial_trajectories))
    throw ConfigError("replay capacity must hold at least J trajectories");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (rolling_window < 1) throw ConfigError("rolling_window must be >= 1");
  if (loss_log_every < 1) throw ConfigError("loss_log_every must be >= 1");
  ensemble.Validate();
  planner.Validate();
}

std::string RunConfig::ToText() const {
  std::string out;
  for (const auto& f : Fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : Fields()) j[f.key] = f.get(*this);
  j["planner_variant"] = planner::ToString(planner.variant);
  return j;
}

std::string RunConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : Fields()) {
    if (f.key == "output_dir") continue;
    for (const char ch : f.key + "=" + f.get(*this) + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig DefaultConfig(const std::string& environment) {
  RunConfig c;
  c.environment = environment;
  if (environment == "four_rooms") {
    c.planner.mode = planner::SelectionMode::kSoftmax;
    c.planner.alpha = 5.0;
  } else if (environment == "reacher") {
    c.planner.mode = planner::SelectionMode::kMax;
  } else {
    throw ConfigError("unknown environment '" + environment + "'");
  }
  return c;
}

void ApplyDeskScale(RunConfig& config) {
  config.initial_trajectories = 50;
  config.initial_train_steps = 10000;
  config.episodes = 200;
  config.train_steps_per_episode = 100;
  config.planner.proposals = 10;
  config.planner.copies = 20;
  config.ensemble.hidden_sizes = {128, 128};
}

void ApplyAblation(RunConfig& config, Ablation ablation) {
  config.ablation = ablation;
  switch (ablation) {
    case Ablation::kFull:
      config.planner.variant = planner::Variant::kFull;
      break;
    case Ablation::kNoPlanner:
      config.planner.variant = planner::Variant::kNoPlanner;
      config.planner.proposals = 1;
      break;
    case Ablation::kNoPlannerAvg:
      config.planner.variant = planner::Variant::kNoPlannerAvg;
      break;
    case Ablation::kLambda0:
      config.ensemble.lambda = 0.0;
      break;
    case Ablation::kEnsemble1:
      config.ensemble.members = 1;
      break;
    case Ablation::kEnsemble5:
      config.ensemble.members = 5;
      break;
  }
}

std::map<std::string, std::string> ParseKeyValues(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = Trim(t.substr(0, eq));
    const std::string value = Trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, value).second) throw ConfigError("config key '" + key + "' repeated");
  }
  return out;
}

RunConfig ParseRunConfig(const std::string& text, bool desk_scale) {
  const auto values = ParseKeyValues(text);
  for (const auto& [key, value] : values)
    if (!FindField(key)) throw ConfigError("unknown config key '" + key + "'");

  const auto env_it = values.find("environment");
  RunConfig config = DefaultConfig(env_it == values.end() ? "four_rooms" : env_it->second);
  if (desk_scale) ApplyDeskScale(config);
  for (const auto& f : Fields()) {
    if (f.key == "environment" || f.key == "ablation") continue;
    const auto it = values.find(f.key);
    if (it != values.end()) f.set(config, it->second);
  }
  const auto ab_it = values.find("ablation");
  if (ab_it != values.end()) ApplyAblation(config, ParseAblation(ab_it->second));
  config.Validate();
  return config;
}

RunConfig LoadRunConfig(const std::filesystem::path& path, bool desk_scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str(), desk_scale);
}

}  // namespace plangan::orchestrator
