#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "oamsim/scenarios/runner.hpp"

namespace fs = std::filesystem;
using namespace oamsim;
using scenarios::Json;

namespace {

enum ExitCode { ok = 0, failure = 1, schema = 2, guard = 3, io_error = 4 };

/// Maps library exceptions to the documented exit codes.
template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const scenarios::SchemaError& e) {
    std::cerr << "schema error:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return schema;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return schema;
  } catch (const NumericalGuard& e) {
    std::cerr << "numerical guard [" << e.guard() << "]: " << e.what() << '\n';
    return guard;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
}

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return text;
  }
}

void print_summary(const scenarios::Summary& s) {
  for (const auto& [k, v] : s.entries()) std::cout << k << '\t' << v << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator of orbital angular momentum transfer from light to a condensate"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t threads = 0;
  int verbosity = 0;

  auto* run = app.add_subcommand("run", "Run the scenario described by a config file");
  run->add_option("config", config_path, "Scenario config (JSON)")->required();
  run->add_option("-o,--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("-j,--threads", threads, "Worker threads for study trials and sweeps");
  run->add_flag("-v,--verbose", verbosity, "Increase log verbosity");

  auto* validate = app.add_subcommand("validate", "Check a config and print its normalized form");
  validate->add_option("config", config_path, "Scenario config (JSON)")->required();

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  sweep->add_option("config", config_path, "Scenario config (JSON)")->required();
  sweep->add_option("-p,--param", param, "Dotted key, e.g. sequence.0.duration_s")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("-o,--out", out_dir, "Output directory (overrides output_dir)");
  sweep->add_option("-j,--threads", threads, "Sweep points run concurrently");
  sweep->add_flag("-v,--verbose", verbosity, "Increase log verbosity");

  CLI11_PARSE(app, argc, argv);

  if (*validate) {
    return guarded([&] {
      const auto cfg = scenarios::load_config(config_path);
      std::cout << scenarios::to_json(cfg).dump(2) << '\n';
      return int(ok);
    });
  }

  if (*run) {
    return guarded([&] {
      auto cfg = scenarios::load_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      scenarios::RunOptions opts;
      opts.threads = threads;
      opts.verbosity = verbosity;
      opts.log = &std::cerr;
      const auto result = scenarios::run_scenario(cfg, opts);
      print_summary(result.summary);
      return int(ok);
    });
  }

  return guarded([&] {
    const Json base = scenarios::read_json_file(config_path);
    const auto base_cfg = scenarios::parse_config(base);
    const fs::path root = out_dir.empty() ? fs::path(base_cfg.output_dir) : fs::path(out_dir);
    std::vector<scenarios::ExperimentConfig> points;
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < values.size(); ++i) {
      Json j = base;
      scenarios::set_by_path(j, param, parse_value(values[i]));
      try {
        auto cfg = scenarios::parse_config(j);
        char name[32];
        std::snprintf(name, sizeof name, "point_%03zu", i);
        cfg.output_dir = (root / name).string();
        points.push_back(std::move(cfg));
      } catch (const scenarios::SchemaError& e) {
        for (const auto& p : e.problems()) problems.push_back(param + "=" + values[i] + ": " + p);
      }
    }
    if (!problems.empty()) throw scenarios::SchemaError(problems);

    std::vector<scenarios::Summary> summaries(points.size());
    std::vector<std::exception_ptr> errors(points.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
      for (std::size_t i = next++; i < points.size(); i = next++) {
        try {
          std::ostringstream log;
          scenarios::RunOptions opts;
          opts.threads = 1;
          opts.verbosity = verbosity;
          opts.log = &log;
          summaries[i] = scenarios::run_scenario(points[i], opts).summary;
          const std::lock_guard lock(log_mutex);
          std::cerr << "[" << points[i].output_dir << "] done\n" << log.str();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, points.size()));
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    fs::create_directories(root);
    std::ofstream table(root / "sweep.tsv");
    if (!table) throw IoError("cannot write " + (root / "sweep.tsv").string());
    table << "point\t" << param;
    for (const auto& [k, v] : summaries.front().entries()) table << '\t' << k;
    table << '\n';
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      table << i << '\t' << values[i];
      for (const auto& [k, v] : summaries.front().entries()) {
        table << '\t' << (summaries[i].contains(k) ? summaries[i].text(k) : "");
      }
      table << '\n';
    }
    if (!table) throw IoError("write failed: sweep.tsv");
    std::cout << "sweep of " << points.size() << " points written to " << root.string() << '\n';
    return int(ok);
  });
}
