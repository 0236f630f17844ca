#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delaycast/commands.hpp"
#include "delaycast/error.hpp"

namespace dc = delaycast::cli;

namespace {

std::vector<std::string> split_grid(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delaycast: flight delay classification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "JSON config file (defaults when omitted)");
  app.add_option("--set", overrides, "override a config key, e.g. --set network.epochs=10")->take_all();

  auto* ingest = app.add_subcommand("ingest", "parse, sample, split and encode the input CSV");
  auto* analyze = app.add_subcommand("analyze", "per-group delay rates of the ingested sample");
  auto* train = app.add_subcommand("train", "train and evaluate one classifier on one task");
  std::string classifier, task;
  train->add_option("--classifier", classifier, "fcnn, rdf, xgb or hybrid");
  train->add_option("--task", task, "departure, arrival or total");
  auto* benchmark = app.add_subcommand("benchmark", "all classifiers on all tasks");
  auto* sweep = app.add_subcommand("sweep", "hybrid model over a grid of one network setting");
  std::string axis, grid;
  sweep->add_option("--axis", axis, "hidden_units, hidden_layers or epochs");
  sweep->add_option("--grid", grid, "comma separated values");

  // options given after the subcommand land in the same variables
  for (auto* sub : {ingest, analyze, train, benchmark, sweep}) {
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "override a config key")->take_all();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (!classifier.empty()) overrides.push_back("classifier=" + classifier);
    if (!task.empty()) overrides.push_back("task=" + task);
    if (!axis.empty()) overrides.push_back("sweep.axis=" + axis);
    if (!grid.empty()) {
      std::string values = "sweep.values=[";
      const auto items = split_grid(grid);
      for (std::size_t i = 0; i < items.size(); ++i) values += (i ? "," : "") + items[i];
      overrides.push_back(values + "]");
    }
    const dc::RunConfig config = config_path.empty() ? dc::parse_config(nlohmann::json::object(), overrides)
                                                     : dc::load_config(config_path, overrides);

    if (ingest->parsed()) {
      dc::cmd_ingest(config, std::cout);
    } else if (analyze->parsed()) {
      dc::cmd_analyze(config, std::cout);
    } else if (train->parsed()) {
      dc::cmd_train_eval(config, std::cout);
    } else if (benchmark->parsed()) {
      const auto report = dc::cmd_benchmark(config, std::cout);
      if (!report.complete()) {
        for (const auto& c : report.cells) {
          if (!c.ok) std::cerr << "cell " << dc::to_string(c.classifier) << "/" << delaycast::ingest::to_string(c.task)
                               << " failed: " << c.error << '\n';
        }
        return dc::kExitTraining;
      }
    } else if (sweep->parsed()) {
      const auto points = dc::cmd_sweep(config, std::cout);
      for (const auto& p : points) {
        if (!p.ok) return dc::kExitTraining;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dc::exit_code_for(e);
  }
  return dc::kExitOk;
}
