#include "delaycast/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "delaycast/error.hpp"

namespace delaycast::cli {
namespace {

using nlohmann::json;

// Recursively checks that `user` only uses keys present in `defaults`.
void check_keys(const json& user, const json& defaults, const std::string& prefix) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!defaults.contains(it.key())) throw ConfigError("unknown configuration key '" + key + "'");
    const auto& d = defaults.at(it.key());
    if (d.is_object()) {
      if (!it.value().is_object()) throw ConfigError("configuration key '" + key + "' must be an object");
      check_keys(it.value(), d, key);
    }
  }
}

const json& lookup(const json& doc, const std::string& dotted) {
  const json* node = &doc;
  std::stringstream path(dotted);
  for (std::string part; std::getline(path, part, '.');) {
    if (!node->is_object() || !node->contains(part)) throw ConfigError("configuration key '" + dotted + "' is missing");
    node = &node->at(part);
  }
  return *node;
}

template <typename T>
T read(const json& doc, const std::string& dotted) {
  const json& node = lookup(doc, dotted);
  try {
    return node.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("configuration key '" + dotted + "' has the wrong type");
  }
}

std::size_t read_count(const json& doc, const std::string& dotted) {
  const json& node = lookup(doc, dotted);
  if (!node.is_number_integer() || node.get<long long>() < 0) {
    throw ConfigError("configuration key '" + dotted + "' must be a non-negative integer");
  }
  return node.get<std::size_t>();
}

}  // namespace

std::string to_string(Classifier c) {
  switch (c) {
    case Classifier::Fcnn: return "fcnn";
    case Classifier::Rdf: return "rdf";
    case Classifier::Xgb: return "xgb";
    case Classifier::Hybrid: return "hybrid";
  }
  return "?";
}

std::string display_name(Classifier c) {
  switch (c) {
    case Classifier::Fcnn: return "FCNN";
    case Classifier::Rdf: return "RDF";
    case Classifier::Xgb: return "XGBoost";
    case Classifier::Hybrid: return "FCNN + RDF";
  }
  return "?";
}

Classifier parse_classifier(const std::string& name) {
  if (name == "fcnn") return Classifier::Fcnn;
  if (name == "rdf") return Classifier::Rdf;
  if (name == "xgb") return Classifier::Xgb;
  if (name == "hybrid") return Classifier::Hybrid;
  throw ConfigError("unknown classifier '" + name + "' (expected fcnn, rdf, xgb or hybrid)");
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const { return fnv1a_hex(document.dump()); }

json default_config() {
  const ingest::ColumnMap c;
  return {
      {"input",
       {{"csv", ""},
        {"columns",
         {{"flight_date", c.flight_date},
          {"year", c.year},
          {"month", c.month},
          {"day_of_week", c.day_of_week},
          {"marketing_carrier", c.marketing_carrier},
          {"operating_carrier", c.operating_carrier},
          {"origin_state", c.origin_state},
          {"dest_state", c.dest_state},
          {"scheduled_dep_time", c.scheduled_dep_time},
          {"scheduled_arr_time", c.scheduled_arr_time},
          {"dep_delay_minutes", c.dep_delay_minutes},
          {"arr_delay_minutes", c.arr_delay_minutes},
          {"distance_miles", c.distance_miles},
          {"cancelled", c.cancelled},
          {"diverted", c.diverted}}}}},
      {"delay_threshold_minutes", 15},
      {"total_delay_rule", "either"},
      {"sample_per_month", 2000},
      {"train_fraction", 0.75},
      {"seeds", {{"sampling", 1}, {"split", 2}, {"model", 3}}},
      {"task", "total"},
      {"classifier", "hybrid"},
      {"hybrid_head", "rdf"},
      {"network",
       {{"hidden_layers", 5},
        {"hidden_units", 250},
        {"dropout_rate", 0.2},
        {"batch_norm", true},
        {"epochs", 75},
        {"batch_size", 256},
        {"learning_rate", 0.01},
        {"momentum", 0.9},
        {"bn_momentum", 0.9},
        {"bn_epsilon", 1e-5}}},
      {"forest",
       {{"n_trees", 200},
        {"max_depth", nullptr},
        {"min_samples_leaf", 1},
        {"features_per_split", 0},
        {"bootstrap", true},
        {"vote", "soft"},
        {"threads", 1}}},
      {"gbm",
       {{"n_rounds", 200},
        {"max_depth", 6},
        {"learning_rate", 0.1},
        {"lambda", 1.0},
        {"gamma", 0.0},
        {"min_child_hessian", 1.0},
        {"base_score", 0.5}}},
      {"output_dir", "delaycast_out"},
      {"matrix_format", "binary"},
      {"sweep", {{"axis", "hidden_units"}, {"values", {50, 100, 250, 500}}}},
      {"jobs", 1},
  };
}

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const json defaults = default_config();
  const json* d = &defaults;
  json* node = &document;
  std::stringstream path(key);
  std::vector<std::string> parts;
  for (std::string part; std::getline(path, part, '.');) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!d->is_object() || !d->contains(parts[i])) throw ConfigError("unknown configuration key '" + key + "'");
    d = &d->at(parts[i]);
    if (i + 1 < parts.size()) {
      if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) (*node)[parts[i]] = json::object();
      node = &(*node)[parts[i]];
    }
  }
  (*node)[parts.back()] = std::move(value);
}

RunConfig parse_config(const json& user, const std::vector<std::string>& overrides) {
  if (!user.is_object()) throw ConfigError("configuration document must be a JSON object");
  const json defaults = default_config();
  check_keys(user, defaults, "");
  json doc = defaults;
  doc.merge_patch(user);
  // merge_patch drops null members; keep nullable keys present.
  if (!doc["forest"].contains("max_depth")) doc["forest"]["max_depth"] = nullptr;
  for (const auto& o : overrides) apply_override(doc, o);
  check_keys(doc, defaults, "");

  RunConfig cfg;
  cfg.document = doc;
  cfg.input_csv = read<std::string>(doc, "input.csv");
  auto& c = cfg.columns;
  c.flight_date = read<std::string>(doc, "input.columns.flight_date");
  c.year = read<std::string>(doc, "input.columns.year");
  c.month = read<std::string>(doc, "input.columns.month");
  c.day_of_week = read<std::string>(doc, "input.columns.day_of_week");
  c.marketing_carrier = read<std::string>(doc, "input.columns.marketing_carrier");
  c.operating_carrier = read<std::string>(doc, "input.columns.operating_carrier");
  c.origin_state = read<std::string>(doc, "input.columns.origin_state");
  c.dest_state = read<std::string>(doc, "input.columns.dest_state");
  c.scheduled_dep_time = read<std::string>(doc, "input.columns.scheduled_dep_time");
  c.scheduled_arr_time = read<std::string>(doc, "input.columns.scheduled_arr_time");
  c.dep_delay_minutes = read<std::string>(doc, "input.columns.dep_delay_minutes");
  c.arr_delay_minutes = read<std::string>(doc, "input.columns.arr_delay_minutes");
  c.distance_miles = read<std::string>(doc, "input.columns.distance_miles");
  c.cancelled = read<std::string>(doc, "input.columns.cancelled");
  c.diverted = read<std::string>(doc, "input.columns.diverted");

  cfg.labels.threshold_minutes = read<int>(doc, "delay_threshold_minutes");
  const auto rule = read<std::string>(doc, "total_delay_rule");
  if (rule == "either") {
    cfg.labels.total_rule = ingest::TotalDelayRule::Either;
  } else if (rule == "arrival") {
    cfg.labels.total_rule = ingest::TotalDelayRule::ArrivalOnly;
  } else {
    throw ConfigError("total_delay_rule must be 'either' or 'arrival'");
  }
  cfg.sample_per_month = read<int>(doc, "sample_per_month");
  if (cfg.sample_per_month < 1) throw ConfigError("sample_per_month must be >= 1");
  cfg.train_fraction = read<double>(doc, "train_fraction");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  cfg.seeds.sampling = read<std::uint64_t>(doc, "seeds.sampling");
  cfg.seeds.split = read<std::uint64_t>(doc, "seeds.split");
  cfg.seeds.model = read<std::uint64_t>(doc, "seeds.model");
  cfg.task = ingest::parse_task(read<std::string>(doc, "task"));
  cfg.classifier = parse_classifier(read<std::string>(doc, "classifier"));
  cfg.hybrid_head = parse_classifier(read<std::string>(doc, "hybrid_head"));
  if (cfg.hybrid_head != Classifier::Rdf && cfg.hybrid_head != Classifier::Xgb) {
    throw ConfigError("hybrid_head must be 'rdf' or 'xgb'");
  }

  auto& n = cfg.network;
  n.hidden_layers = read_count(doc, "network.hidden_layers");
  n.hidden_units = read_count(doc, "network.hidden_units");
  n.dropout_rate = read<double>(doc, "network.dropout_rate");
  n.batch_norm = read<bool>(doc, "network.batch_norm");
  n.epochs = read_count(doc, "network.epochs");
  n.batch_size = read_count(doc, "network.batch_size");
  n.learning_rate = read<double>(doc, "network.learning_rate");
  n.momentum = read<double>(doc, "network.momentum");
  n.bn_momentum = read<double>(doc, "network.bn_momentum");
  n.bn_epsilon = read<double>(doc, "network.bn_epsilon");
  n.seed = cfg.seeds.model;
  {
    auto probe = n;
    probe.input_width = 1;
    probe.validate();
  }

  auto& f = cfg.forest;
  f.n_trees = read_count(doc, "forest.n_trees");
  if (!doc["forest"]["max_depth"].is_null()) f.max_depth = read_count(doc, "forest.max_depth");
  f.min_samples_leaf = read_count(doc, "forest.min_samples_leaf");
  f.features_per_split = read_count(doc, "forest.features_per_split");
  f.bootstrap = read<bool>(doc, "forest.bootstrap");
  const auto vote = read<std::string>(doc, "forest.vote");
  if (vote != "soft" && vote != "hard") throw ConfigError("forest.vote must be 'soft' or 'hard'");
  f.vote = vote == "soft" ? forest::Vote::Soft : forest::Vote::Hard;
  f.threads = read_count(doc, "forest.threads");
  f.seed = cfg.seeds.model;
  f.validate();

  auto& g = cfg.gbm;
  g.n_rounds = read_count(doc, "gbm.n_rounds");
  g.max_depth = read_count(doc, "gbm.max_depth");
  g.learning_rate = read<double>(doc, "gbm.learning_rate");
  g.lambda = read<double>(doc, "gbm.lambda");
  g.gamma = read<double>(doc, "gbm.gamma");
  g.min_child_hessian = read<double>(doc, "gbm.min_child_hessian");
  g.base_score = read<double>(doc, "gbm.base_score");
  g.seed = cfg.seeds.model;
  g.validate();

  cfg.output_dir = read<std::string>(doc, "output_dir");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  const auto format = read<std::string>(doc, "matrix_format");
  if (format == "binary") {
    cfg.matrix_format = MatrixFormat::Binary;
  } else if (format == "csv") {
    cfg.matrix_format = MatrixFormat::Csv;
  } else {
    throw ConfigError("matrix_format must be 'binary' or 'csv'");
  }
  cfg.sweep.axis = read<std::string>(doc, "sweep.axis");
  if (cfg.sweep.axis != "hidden_units" && cfg.sweep.axis != "hidden_layers" && cfg.sweep.axis != "epochs") {
    throw ConfigError("sweep.axis must be hidden_units, hidden_layers or epochs");
  }
  cfg.sweep.values.clear();
  const auto& values = doc["sweep"]["values"];
  if (!values.is_array()) throw ConfigError("sweep.values must be an array");
  for (const auto& v : values) {
    if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("sweep.values must be positive integers");
    cfg.sweep.values.push_back(v.get<std::size_t>());
  }
  cfg.jobs = std::max<std::size_t>(1, read_count(doc, "jobs"));
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  json doc = json::parse(in, nullptr, false, true);
  if (doc.is_discarded()) throw ConfigError("configuration file '" + path + "' is not valid JSON");
  return parse_config(doc, overrides);
}

}  // namespace delaycast::cli
