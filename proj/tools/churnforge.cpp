#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "churnforge/error.hpp"
#include "churnforge/pipeline.hpp"

namespace cf = churnforge;

int main(int argc, char** argv) {
  CLI::App app{"Churn prediction pipeline over call detail records"};
  app.require_subcommand(1, 1);

  std::string config_path;
  cf::RunOptions options;
  using Command = void (*)(const cf::PipelineConfig&, const cf::RunOptions&);
  const std::map<std::string, std::pair<Command, std::string>> commands{
      {"generate", {cf::cmd_generate, "Write a seeded synthetic CDR, profile and label set"}},
      {"graph", {cf::cmd_graph, "Build the social graph and per-customer SNA features"}},
      {"features", {cf::cmd_features, "Aggregate, merge and select features into the labeled dataset"}},
      {"train", {cf::cmd_train, "Split, cross-validate and fit the configured learner"}},
      {"evaluate", {cf::cmd_evaluate, "Score the held-out split: ROC, AUC and feature importance"}},
      {"experiment", {cf::cmd_experiment, "Run the feature-set x learner x sampling grid and window sweep"}},
  };
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_flag("--strict", options.strict, "Fail on the first malformed input row");
    sub->add_option("--threads", options.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const auto config = cf::PipelineConfig::load(config_path);
    commands.at(name).first(config, options);
  } catch (const cf::Error& e) {
    std::cerr << "churnforge " << name << ": " << e.what() << '\n';
    return e.code() == cf::ErrorCode::Validation ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "churnforge " << name << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
