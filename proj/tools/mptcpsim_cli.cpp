#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mptcpsim.h"

namespace fs = std::filesystem;

namespace {

int fail(int code, const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return code;
}

bool write_file(const fs::path& path, const char* text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

int do_run(const std::string& scenario, const mptcpsim_overrides& ov, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) return fail(1, "cannot create output directory: " + out_dir.string());

  mptcpsim_result* result = nullptr;
  if (const int rc = mptcpsim_run(scenario.c_str(), &ov, &result); rc != MPTCPSIM_OK)
    return fail(rc, mptcpsim_last_error());

  const std::string name = mptcpsim_result_name(result);
  const fs::path trace_path = out_dir / (name + ".trace.csv");
  const fs::path summary_path = out_dir / (name + ".summary.json");
  const fs::path plot_path = out_dir / (name + ".plot.gp");

  bool ok = write_file(trace_path, mptcpsim_result_trace_csv(result));
  ok = ok && write_file(summary_path, mptcpsim_result_summary_json(result));
  ok = ok && write_file(plot_path,
                        mptcpsim_result_plot_script(result, trace_path.filename().string().c_str()));
  mptcpsim_result_free(result);
  if (!ok) return fail(1, "cannot write outputs under " + out_dir.string());

  std::cout << trace_path.string() << "\n"
            << summary_path.string() << "\n"
            << plot_path.string() << "\n";
  return 0;
}

int do_list() {
  char* names = nullptr;
  if (const int rc = mptcpsim_list_scenarios(&names); rc != MPTCPSIM_OK)
    return fail(rc, mptcpsim_last_error());
  std::cout << names;
  mptcpsim_string_free(names);
  return 0;
}

int do_plot(const fs::path& csv_path) {
  if (!fs::exists(csv_path)) return fail(1, "no such trace file: " + csv_path.string());
  char* script = nullptr;
  if (const int rc = mptcpsim_plot_script_for_csv(csv_path.string().c_str(), &script);
      rc != MPTCPSIM_OK)
    return fail(rc, mptcpsim_last_error());
  fs::path out = csv_path;
  out.replace_extension();  // trace.csv -> trace
  out.replace_extension(".plot.gp");
  const bool ok = write_file(out, script);
  mptcpsim_string_free(script);
  if (!ok) return fail(1, "cannot write " + out.string());
  std::cout << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mptcpsim: deterministic multipath TCP network simulator"};
  app.require_subcommand(1);

  std::string scenario, mode, out_dir = ".";
  uint32_t mss = 0;
  uint64_t seed = 0;
  double duration = 0;
  bool seed_set = false;

  CLI::App* run = app.add_subcommand("run", "run a scenario and write its artifacts");
  run->add_option("--scenario", scenario, "builtin name or path to a scenario JSON file")
      ->required();
  run->add_option("--mss", mss, "override MSS in bytes");
  run->add_option("--seed", seed, "override the random seed")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--duration", duration, "override the simulated duration in seconds");
  run->add_option("--mode", mode, "override transport mode: mptcp or tcp")
      ->check(CLI::IsMember({"mptcp", "tcp"}));
  run->add_option("--out", out_dir, "output directory")->required();

  CLI::App* list = app.add_subcommand("list-scenarios", "print the builtin scenario names");

  std::string csv;
  CLI::App* plot = app.add_subcommand("plot", "write a gnuplot script for an existing trace");
  plot->add_option("trace", csv, "path to a trace CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (run->parsed()) {
    mptcpsim_overrides ov{};
    ov.mss = mss;
    ov.seed = seed;
    ov.has_seed = seed_set ? 1 : 0;
    ov.duration_s = duration;
    ov.mode = mode.empty() ? nullptr : mode.c_str();
    return do_run(scenario, ov, out_dir);
  }
  if (list->parsed()) return do_list();
  if (plot->parsed()) return do_plot(csv);
  return 1;
}
