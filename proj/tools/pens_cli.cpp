// Command-line driver: run, sweep, inspect.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pens/harness.hpp"
#include "pens/serialize.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pens::ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw pens::DataError("cannot write '" + path + "'");
  out << text;
}

void print_summary(const pens::Summary& s) {
  std::printf("stamps %zu\n", s.stamps);
  std::printf("classification rate %.4f +- %.4f\n", s.accuracy.mean, s.accuracy.stddev);
  std::printf("fuzzy rules         %.2f +- %.2f\n", s.rules.mean, s.rules.stddev);
  std::printf("input attributes    %.2f +- %.2f\n", s.attributes.mean, s.attributes.stddev);
  std::printf("network parameters  %.1f +- %.1f\n", s.parameters.mean, s.parameters.stddev);
  std::printf("ensemble size       %.2f +- %.2f\n", s.ensemble_size.mean, s.ensemble_size.stddev);
  std::printf("seconds             %.3f total\n", s.total_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving fuzzy ensemble for drifting data streams"};
  app.require_subcommand(1);

  std::string stream_kind, csv_path, out, model_out;
  std::size_t stamps = 1, train = 250, test = 250;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  bool strict = false;
  auto* run = app.add_subcommand("run", "Train/test over a stream and write metrics");
  auto* src = run->add_option_group("source");
  src->add_option("--stream", stream_kind, "Synthetic stream: sea, hyperplane, gaussian, line, sin, sinh");
  src->add_option("--csv", csv_path, "CSV file, header row, label in the last column");
  src->require_option(1);
  run->add_option("--stamps", stamps, "Number of time stamps")->check(CLI::PositiveNumber);
  run->add_option("--train", train, "Training samples per stamp")->check(CLI::PositiveNumber);
  run->add_option("--test", test, "Test samples per stamp")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Seed for the stream and the ensemble");
  run->add_option("--out", out, "Metrics CSV path (summary written alongside)");
  run->add_option("--save-model", model_out, "Write the final model here");
  run->add_option("--set", sets, "Override a config key, key=value (stream.* for the generator)");
  run->add_flag("--strict-labels", strict, "CSV: reject labels outside --labels");
  std::vector<std::string> labels;
  run->add_option("--labels", labels, "CSV: class names in index order")->delimiter(',');

  std::string grid;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("--grid", grid, "Grid file (JSON)")->required();
  int jobs = 0;
  sweep->add_option("--jobs", jobs, "Parallel runs (overrides the grid file)");

  std::string model_path;
  auto* inspect = app.add_subcommand("inspect", "Print a saved model's experts and rules");
  inspect->add_option("model", model_path, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      pens::RunConfig cfg;
      cfg.stamps = stamps;
      cfg.train = train;
      cfg.test = test;
      cfg.seed = seed;
      cfg.ensemble.seed = seed;
      cfg.out = out;
      cfg.model_out = model_out;
      if (!stream_kind.empty()) {
        cfg.stream = pens::default_stream(pens::parse_stream_kind(stream_kind), cfg.horizon(), seed);
      } else {
        cfg.csv_path = csv_path;
        cfg.csv_schema.labels = labels;
        cfg.csv_schema.strict = strict;
      }
      for (const auto& s : sets) {
        const auto [k, v] = pens::parse_setting(s);
        pens::apply_setting(cfg, k, v);
      }
      try {
        auto result = pens::run_experiment(cfg);
        pens::write_outputs(cfg, result.rows, result.summary);
        if (!cfg.model_out.empty()) pens::save_model(result.model, cfg.model_out);
        print_summary(result.summary);
      } catch (const pens::PartialRunError& e) {
        const auto partial = pens::summarize(e.rows());
        pens::write_outputs(cfg, e.rows(), partial);
        throw;
      }
    } else if (*sweep) {
      auto spec = pens::parse_sweep(read_file(grid));
      if (jobs > 0) spec.jobs = jobs;
      const auto results = pens::run_sweep(spec.base, spec.points, spec.jobs);
      const auto csv = pens::sweep_csv(results);
      if (spec.out.empty()) {
        std::cout << csv;
      } else {
        write_file(spec.out, csv);
        std::printf("%zu sweep points written to %s\n", results.size(), spec.out.c_str());
      }
    } else if (*inspect) {
      std::cout << pens::describe_model(pens::load_model(model_path));
    }
  } catch (const pens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const pens::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
