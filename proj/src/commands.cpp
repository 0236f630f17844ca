#include "delaycast/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "delaycast/csv.hpp"
#include "delaycast/error.hpp"
#include "delaycast/fcnn.hpp"
#include "delaycast/forest.hpp"
#include "delaycast/gbm.hpp"
#include "delaycast/hybrid.hpp"
#include "delaycast/tree_io.hpp"

namespace delaycast::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr ingest::Task kTasks[] = {ingest::Task::Departure, ingest::Task::Arrival, ingest::Task::Total};

fs::path out_dir(const RunConfig& config) { return fs::path(config.output_dir); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string matrix_ext(const RunConfig& config) { return config.matrix_format == MatrixFormat::Binary ? ".dcm" : ".csv"; }

json seeds_json(const RunConfig& config) {
  return {{"sampling", config.seeds.sampling}, {"split", config.seeds.split}, {"model", config.seeds.model}};
}

std::string task_heading(ingest::Task task) {
  switch (task) {
    case ingest::Task::Departure: return "Departure Delay";
    case ingest::Task::Arrival: return "Arrival Delay";
    case ingest::Task::Total: return "Total Delay";
  }
  return "?";
}

struct Scores {
  Labels classes;
  std::vector<double> probabilities;
  json model;
  std::optional<fcnn::TrainHistory> history;
};

Labels threshold_half(const std::vector<double>& p) {
  Labels out;
  out.reserve(p.size());
  for (double v : p) out.push_back(v >= 0.5 ? 1 : 0);
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

hybrid::HeadParams head_params(const RunConfig& config, std::uint64_t seed) {
  if (config.hybrid_head == Classifier::Xgb) {
    auto g = config.gbm;
    g.seed = seed;
    return g;
  }
  auto f = config.forest;
  f.seed = seed;
  return f;
}

Scores fit_and_score(const RunConfig& config, Classifier classifier, const Matrix& x_train, const Labels& y_train,
                     const Matrix& x_test, std::uint64_t seed, const fcnn::NetworkConfig& network) {
  Scores s;
  switch (classifier) {
    case Classifier::Fcnn: {
      auto cfg = network;
      cfg.seed = seed;
      auto trained = fcnn::fit_network(x_train, y_train, cfg);
      s.probabilities = to_std(fcnn::predict(trained.network, x_test));
      s.classes = threshold_half(s.probabilities);
      s.model = fcnn::to_json(trained.network);
      s.history = std::move(trained.history);
      break;
    }
    case Classifier::Rdf: {
      auto params = config.forest;
      params.seed = seed;
      const auto forest = forest::fit_forest(x_train, y_train, params);
      auto p = forest::predict_forest(forest, x_test);
      s.classes = std::move(p.classes);
      s.probabilities = std::move(p.probabilities);
      s.model = tree_io::to_json(forest);
      break;
    }
    case Classifier::Xgb: {
      auto params = config.gbm;
      params.seed = seed;
      const auto model = gbm::fit_gbm(x_train, y_train, params);
      s.probabilities = gbm::predict_gbm(model, x_test);
      s.classes = threshold_half(s.probabilities);
      s.model = tree_io::to_json(model);
      break;
    }
    case Classifier::Hybrid: {
      auto cfg = network;
      cfg.seed = seed;
      const auto model = hybrid::fit_hybrid(x_train, y_train, cfg, head_params(config, seed));
      auto p = hybrid::predict_hybrid(model, x_test);
      s.classes = std::move(p.classes);
      s.probabilities = std::move(p.probabilities);
      s.model = hybrid::to_json(model);
      s.history = model.history;
      break;
    }
  }
  return s;
}

// AUCs stay NaN (null in JSON) when the test labels hold a single class.
struct RocPair {
  std::optional<metrics::RocCurve> class1;
  std::optional<metrics::RocCurve> class0;
};

RocPair safe_roc(const std::vector<double>& scores, const Labels& labels, std::vector<std::string>& warnings) {
  try {
    auto [c1, c0] = metrics::per_class_roc(scores, labels);
    return {std::move(c1), std::move(c0)};
  } catch (const DomainError& e) {
    warnings.push_back(std::string("ROC undefined: ") + e.what());
    return {};
  }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemaError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const EmptyTableError*>(&e) ||
      dynamic_cast<const DomainError*>(&e)) {
    return kExitData;
  }
  if (dynamic_cast<const Error*>(&e)) return kExitTraining;
  return 1;
}

void record_manifest(const RunConfig& config, const std::string& command, const std::vector<fs::path>& files,
                     const json& extra) {
  const fs::path dir = out_dir(config);
  ensure_dir(dir);
  const fs::path path = dir / "manifest.json";
  json manifest = {{"format", "delaycast.manifest"}, {"version", 1}, {"commands", json::object()}};
  if (fs::exists(path)) {
    json existing = json::parse(read_text(path), nullptr, false);
    if (!existing.is_discarded() && existing.contains("commands") && existing["commands"].is_object()) {
      manifest["commands"] = existing["commands"];
    }
  }
  json listed = json::array();
  for (const auto& f : files) {
    const std::string bytes = read_text(f);
    listed.push_back({{"path", fs::relative(f, dir).generic_string()},
                      {"bytes", bytes.size()},
                      {"fnv1a64", fnv1a_hex(bytes)}});
  }
  json entry = {{"config_hash", config.hash()}, {"config", config.document}, {"seeds", seeds_json(config)},
                {"files", listed}};
  if (extra.is_object()) entry.update(extra);
  manifest["commands"][command] = std::move(entry);
  write_json(path, manifest);
}

IngestSummary cmd_ingest(const RunConfig& config, std::ostream& log) {
  if (config.input_csv.empty()) throw ConfigError("input.csv is not set");
  if (!fs::exists(config.input_csv)) throw ConfigError("input.csv '" + config.input_csv + "' does not exist");
  const fs::path dir = out_dir(config);
  ensure_dir(dir);

  auto parsed = ingest::parse_records_file(config.input_csv, config.columns);
  log << "parsed " << parsed.skips.kept << " of " << parsed.skips.rows_read << " rows\n";
  std::vector<std::string> warnings;
  const auto sample =
      ingest::stratified_monthly_sample(parsed.table, config.sample_per_month, config.seeds.sampling, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << '\n';

  const auto train_rows = encode::split_train_rows(sample.size(), config.train_fraction, config.seeds.split);
  ingest::FlightTable train_table, test_table;
  for (std::size_t i = 0, next = 0; i < sample.size(); ++i) {
    if (next < train_rows.size() && train_rows[next] == i) {
      train_table.push_back(sample[i]);
      ++next;
    } else {
      test_table.push_back(sample[i]);
    }
  }
  const auto schema = encode::fit_schema(train_table);
  const auto train = encode::encode(train_table, schema, config.labels);
  const auto test = encode::encode(test_table, schema, config.labels);

  std::vector<fs::path> files;
  {
    const fs::path p = dir / "sample.csv";
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    ingest::write_records(out, sample);
    files.push_back(p);
  }
  files.push_back(dir / "schema.json");
  write_json(files.back(), encode::schema_to_json(schema));
  const fs::path train_path = dir / ("train" + matrix_ext(config));
  const fs::path test_path = dir / ("test" + matrix_ext(config));
  if (config.matrix_format == MatrixFormat::Binary) {
    encode::save_matrix_binary(train_path.string(), train);
    encode::save_matrix_binary(test_path.string(), test);
  } else {
    encode::save_matrix_csv(train_path.string(), train);
    encode::save_matrix_csv(test_path.string(), test);
  }
  files.push_back(train_path);
  files.push_back(test_path);

  std::string report = parsed.skips.summary();
  report += "rows sampled:   " + std::to_string(sample.size()) + '\n';
  report += "train / test:   " + std::to_string(train.rows()) + " / " + std::to_string(test.rows()) + '\n';
  for (const auto& w : warnings) report += "warning: " + w + '\n';
  files.push_back(dir / "skip_report.txt");
  write_text(files.back(), report);

  IngestSummary summary{parsed.skips.kept, sample.size(), train.rows(), test.rows(), schema.width()};
  record_manifest(config, "ingest", files,
                  {{"rows",
                    {{"parsed", summary.parsed},
                     {"sampled", summary.sampled},
                     {"train", summary.train_rows},
                     {"test", summary.test_rows}}},
                   {"feature_width", summary.width}});
  log << "sampled " << summary.sampled << " rows; train/test " << summary.train_rows << "/" << summary.test_rows
      << "; " << summary.width << " features\n";
  return summary;
}

std::vector<fs::path> cmd_analyze(const RunConfig& config, std::ostream& log) {
  const fs::path dir = out_dir(config);
  const fs::path sample_path = dir / "sample.csv";
  if (!fs::exists(sample_path)) throw DataError("no ingested sample at '" + sample_path.string() + "'; run ingest first");
  const auto table = ingest::parse_records_file(sample_path.string()).table;

  std::vector<fs::path> files;
  for (auto key : ingest::all_group_keys()) {
    std::vector<std::vector<ingest::RateRow>> per_task;
    for (auto task : kTasks) per_task.push_back(ingest::delay_rate_by(table, key, config.labels, task));
    std::ostringstream out;
    out << "key,flights,departure_delayed,departure_rate,arrival_delayed,arrival_rate,total_delayed,total_rate\n";
    char buf[64];
    for (std::size_t i = 0; i < per_task[0].size(); ++i) {
      out << csv::escape(per_task[0][i].key) << ',' << per_task[0][i].flights;
      for (const auto& rows : per_task) {
        std::snprintf(buf, sizeof buf, ",%zu,%.17g", rows[i].delayed, rows[i].rate);
        out << buf;
      }
      out << '\n';
    }
    files.push_back(dir / ("eda_" + ingest::to_string(key) + ".csv"));
    write_text(files.back(), out.str());
    log << "wrote " << files.back().string() << " (" << per_task[0].size() << " groups)\n";
  }
  record_manifest(config, "analyze", files);
  return files;
}

TrainedMatrices load_ingested(const RunConfig& config) {
  const fs::path dir = out_dir(config);
  const fs::path train_path = dir / ("train" + matrix_ext(config));
  const fs::path test_path = dir / ("test" + matrix_ext(config));
  if (!fs::exists(train_path) || !fs::exists(test_path)) {
    throw DataError("no ingested matrices in '" + dir.string() + "'; run ingest first");
  }
  if (config.matrix_format == MatrixFormat::Binary) {
    return {encode::load_matrix_binary(train_path.string()), encode::load_matrix_binary(test_path.string())};
  }
  const auto schema = encode::schema_from_json(json::parse(read_text(dir / "schema.json")));
  return {encode::load_matrix_csv(train_path.string(), schema), encode::load_matrix_csv(test_path.string(), schema)};
}

CellResult train_and_evaluate(const RunConfig& config, Classifier classifier, ingest::Task task,
                              const TrainedMatrices& data, std::uint64_t seed, const fs::path& directory) {
  const auto start = std::chrono::steady_clock::now();
  CellResult cell;
  cell.classifier = classifier;
  cell.task = task;
  cell.seed = seed;
  cell.directory = directory;

  const auto& y_train = data.train.labels(task);
  const auto& y_test = data.test.labels(task);
  Scores scores = fit_and_score(config, classifier, data.train.values, y_train, data.test.values, seed, config.network);
  cell.report = metrics::classification_report(scores.classes, y_test);
  const RocPair roc = safe_roc(scores.probabilities, y_test, cell.report.warnings);
  cell.auc_class1 = roc.class1 ? roc.class1->auc : std::nan("");
  cell.auc_class0 = roc.class0 ? roc.class0->auc : std::nan("");

  ensure_dir(directory);
  json m = {{"classifier", to_string(classifier)},
            {"task", ingest::to_string(task)},
            {"positive_class", "1 (delayed)"},
            {"seed", seed},
            {"n_train", data.train.rows()},
            {"n_test", data.test.rows()},
            {"report", metrics::to_json(cell.report)},
            {"auc_class1", nullable(cell.auc_class1)},
            {"auc_class0", nullable(cell.auc_class0)}};
  if (scores.history) {
    json losses = json::array();
    for (const auto& e : scores.history->epochs) losses.push_back(e.train_loss);
    m["train_loss"] = std::move(losses);
  }
  write_json(directory / "metrics.json", m);
  write_text(directory / "roc_class1.csv", roc.class1 ? metrics::roc_csv(*roc.class1) : "fpr,tpr\n");
  write_text(directory / "roc_class0.csv", roc.class0 ? metrics::roc_csv(*roc.class0) : "fpr,tpr\n");
  write_json(directory / "model.json", {{"format", "delaycast.model"},
                                        {"version", 1},
                                        {"classifier", to_string(classifier)},
                                        {"task", ingest::to_string(task)},
                                        {"feature_width", data.train.values.cols()},
                                        {"model", std::move(scores.model)}});
  cell.ok = true;
  cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

CellResult cmd_train_eval(const RunConfig& config, std::ostream& log) {
  const auto data = load_ingested(config);
  const std::string name = to_string(config.classifier) + "-" + ingest::to_string(config.task);
  const fs::path directory = out_dir(config) / "runs" / name;
  log << "training " << display_name(config.classifier) << " on " << ingest::to_string(config.task) << " delay ("
      << data.train.rows() << " rows, " << data.train.values.cols() << " features)\n";
  auto cell = train_and_evaluate(config, config.classifier, config.task, data, config.seeds.model, directory);
  std::vector<fs::path> files;
  for (const char* f : {"metrics.json", "roc_class0.csv", "roc_class1.csv", "model.json"}) files.push_back(directory / f);
  record_manifest(config, "train:" + name, files);
  log << "accuracy " << fmt_cell(cell.report.accuracy) << "  precision " << fmt_cell(cell.report.precision)
      << "  recall " << fmt_cell(cell.report.recall) << "  f1 " << fmt_cell(cell.report.f1) << "  auc "
      << cell.auc_class1 << '\n';
  return cell;
}

std::vector<Classifier> benchmark_classifiers() {
  return {Classifier::Hybrid, Classifier::Rdf, Classifier::Xgb, Classifier::Fcnn};
}

bool BenchmarkReport::complete() const {
  return cells.size() == 12 && std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

json BenchmarkReport::to_json() const {
  json out = json::array();
  for (const auto& c : cells) {
    json j = {{"task", ingest::to_string(c.task)},
              {"classifier", to_string(c.classifier)},
              {"label", display_name(c.classifier)},
              {"seed", c.seed},
              {"status", c.ok ? "ok" : "failed"}};
    if (c.ok) {
      j["accuracy"] = c.report.accuracy;
      j["precision"] = c.report.precision;
      j["recall"] = c.report.recall;
      j["f1"] = c.report.f1;
      j["auc_class1"] = nullable(c.auc_class1);
      j["auc_class0"] = nullable(c.auc_class0);
    } else {
      j["error"] = c.error;
    }
    out.push_back(std::move(j));
  }
  return {{"format", "delaycast.benchmark"}, {"version", 1}, {"complete", complete()}, {"cells", std::move(out)}};
}

std::string BenchmarkReport::render() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-17s%-11s", "Classifiers", "Metric");
  out << buf;
  for (auto c : benchmark_classifiers()) {
    std::snprintf(buf, sizeof buf, "%12s", display_name(c).c_str());
    out << buf;
  }
  out << '\n';
  const char* metric_names[] = {"Accuracy", "Precision", "Recall", "f1-score"};
  for (auto task : kTasks) {
    for (int m = 0; m < 4; ++m) {
      std::snprintf(buf, sizeof buf, "%-17s%-11s", m == 0 ? task_heading(task).c_str() : "", metric_names[m]);
      out << buf;
      for (auto classifier : benchmark_classifiers()) {
        auto it = std::find_if(cells.begin(), cells.end(),
                               [&](const CellResult& c) { return c.task == task && c.classifier == classifier; });
        std::string text = "-";
        if (it != cells.end()) {
          if (!it->ok) {
            text = "failed";
          } else {
            const double values[] = {it->report.accuracy, it->report.precision, it->report.recall, it->report.f1};
            text = fmt_cell(values[m]);
          }
        }
        std::snprintf(buf, sizeof buf, "%12s", text.c_str());
        out << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

BenchmarkReport cmd_benchmark(const RunConfig& config, std::ostream& log) {
  const auto data = load_ingested(config);
  const fs::path root = out_dir(config) / "runs" / "benchmark";

  struct Job {
    ingest::Task task;
    Classifier classifier;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto task : kTasks) {
    for (auto classifier : benchmark_classifiers()) {
      jobs.push_back({task, classifier, Rng::derive_seed(config.seeds.model, jobs.size())});
    }
  }

  BenchmarkReport report;
  report.cells.resize(jobs.size());
  auto run = [&](std::size_t i) {
    const Job& job = jobs[i];
    const fs::path dir = root / (to_string(job.classifier) + "-" + ingest::to_string(job.task));
    const auto start = std::chrono::steady_clock::now();
    try {
      report.cells[i] = train_and_evaluate(config, job.classifier, job.task, data, job.seed, dir);
    } catch (const std::exception& e) {
      CellResult failed;
      failed.classifier = job.classifier;
      failed.task = job.task;
      failed.seed = job.seed;
      failed.error = e.what();
      failed.exit_code = exit_code_for(e);
      failed.directory = dir;
      failed.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.cells[i] = std::move(failed);
    }
  };

  const std::size_t workers = std::min(config.jobs, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      log << "[" << (i + 1) << "/" << jobs.size() << "] " << display_name(jobs[i].classifier) << " / "
          << ingest::to_string(jobs[i].task) << '\n';
      run(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) run(i);
      });
    }
  }

  for (const auto& c : report.cells) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1f s", c.wall_seconds);
    log << display_name(c.classifier) << " / " << ingest::to_string(c.task) << ": " << (c.ok ? "ok" : "failed") << ", "
        << secs << '\n';
  }

  const fs::path dir = out_dir(config);
  write_json(dir / "benchmark.json", report.to_json());
  write_text(dir / "benchmark.txt", report.render());
  std::vector<fs::path> files{dir / "benchmark.json", dir / "benchmark.txt"};
  for (const auto& c : report.cells) {
    if (c.ok) files.push_back(c.directory / "metrics.json");
  }
  record_manifest(config, "benchmark", files);
  log << report.render();
  return report;
}

std::vector<SweepPoint> cmd_sweep(const RunConfig& config, std::ostream& log) {
  const auto data = load_ingested(config);
  const std::string& axis = config.sweep.axis;
  std::size_t anchor = 0;
  if (axis == "hidden_units") {
    anchor = config.network.hidden_units;
  } else if (axis == "hidden_layers") {
    anchor = config.network.hidden_layers;
  } else if (axis == "epochs") {
    anchor = config.network.epochs;
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }
  std::vector<std::size_t> grid = config.sweep.values;
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  grid.push_back(anchor);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto& y_train = data.train.labels(config.task);
  const auto& y_test = data.test.labels(config.task);
  std::vector<SweepPoint> points(grid.size());
  auto run = [&](std::size_t i) {
    SweepPoint& point = points[i];
    point.value = grid[i];
    point.anchor = grid[i] == anchor;
    auto network = config.network;
    if (axis == "hidden_units") network.hidden_units = grid[i];
    if (axis == "hidden_layers") network.hidden_layers = grid[i];
    if (axis == "epochs") network.epochs = grid[i];
    try {
      Scores s = fit_and_score(config, Classifier::Hybrid, data.train.values, y_train, data.test.values,
                               config.seeds.model, network);
      point.report = metrics::classification_report(s.classes, y_test);
      const RocPair roc = safe_roc(s.probabilities, y_test, point.report.warnings);
      point.auc_class1 = roc.class1 ? roc.class1->auc : std::nan("");
      point.ok = true;
    } catch (const std::exception& e) {
      point.error = e.what();
    }
  };
  const std::size_t workers = std::min(config.jobs, grid.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      log << axis << " = " << grid[i] << '\n';
      run(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) run(i);
      });
    }
  }

  std::ostringstream out;
  out << axis << ",anchor,status,accuracy,precision,recall,f1,auc_class1,error\n";
  char buf[160];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,", p.value, p.anchor ? 1 : 0,
                  p.ok ? "ok" : "failed", p.report.accuracy, p.report.precision, p.report.recall, p.report.f1,
                  p.auc_class1);
    out << buf << csv::escape(p.error) << '\n';
  }
  const fs::path path = out_dir(config) / ("sweep_" + axis + ".csv");
  ensure_dir(out_dir(config));
  write_text(path, out.str());
  record_manifest(config, "sweep:" + axis, {path});
  log << out.str();
  return points;
}

}  // namespace delaycast::cli
