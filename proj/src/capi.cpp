#include "mptcpsim.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "scenario.hpp"
#include "trace.hpp"

struct mptcpsim_result {
  std::string name;
  std::string trace_csv;
  std::string summary;
  std::string plot_cache;
  std::vector<mptcp::TraceRecord> records;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MPTCPSIM_OK;
  } catch (const mptcp::ConfigError& e) {
    return fail(MPTCPSIM_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(MPTCPSIM_ERR_INTERNAL, e.what());
  }
}

mptcp::ScenarioConfig load_scenario(const std::string& spec) {
  const auto builtins = mptcp::builtin_scenario_names();
  if (std::find(builtins.begin(), builtins.end(), spec) != builtins.end())
    return mptcp::builtin_scenario(spec);
  if (!spec.empty() && spec.front() == '{') return mptcp::parse_scenario_json(spec);
  std::ifstream in(spec);
  if (!in) throw mptcp::ConfigError("unknown scenario or unreadable file: '" + spec + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return mptcp::parse_scenario_json(text.str());
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

int mptcpsim_run(const char* scenario, const mptcpsim_overrides* overrides,
                 mptcpsim_result** out) {
  if (!scenario || !out) return fail(MPTCPSIM_ERR_CONFIG, "scenario and out must be non-null");
  *out = nullptr;
  return guarded([&] {
    mptcp::ScenarioConfig cfg = load_scenario(scenario);
    if (overrides) {
      if (overrides->mss) cfg.mss = overrides->mss;
      if (overrides->has_seed) cfg.seed = overrides->seed;
      if (overrides->duration_s > 0) cfg.sim_duration_s = overrides->duration_s;
      if (overrides->mode) {
        const std::string m = overrides->mode;
        if (m == "mptcp")
          cfg.mode = mptcp::ConnMode::Mptcp;
        else if (m == "tcp" || m == "single-path-tcp")
          cfg.mode = mptcp::ConnMode::Tcp;
        else
          throw mptcp::ConfigError("mode override: expected 'mptcp' or 'tcp'");
      }
    }
    mptcp::validate_scenario(cfg);
    mptcp::RunResult run = mptcp::run_scenario(cfg);
    auto r = std::make_unique<mptcpsim_result>();
    r->name = cfg.name;
    r->trace_csv = mptcp::write_trace_csv(run.trace);
    r->summary = mptcp::summary_json(run);
    r->records = std::move(run.trace);
    *out = r.release();
  });
}

const char* mptcpsim_result_name(const mptcpsim_result* r) {
  return r ? r->name.c_str() : "";
}

const char* mptcpsim_result_trace_csv(const mptcpsim_result* r) {
  return r ? r->trace_csv.c_str() : "";
}

const char* mptcpsim_result_summary_json(const mptcpsim_result* r) {
  return r ? r->summary.c_str() : "";
}

const char* mptcpsim_result_plot_script(mptcpsim_result* r, const char* csv_path) {
  if (!r) return "";
  r->plot_cache = mptcp::emit_plot_script(csv_path ? csv_path : "trace.csv", &r->records);
  return r->plot_cache.c_str();
}

void mptcpsim_result_free(mptcpsim_result* r) { delete r; }

int mptcpsim_list_scenarios(char** out) {
  if (!out) return fail(MPTCPSIM_ERR_CONFIG, "out must be non-null");
  return guarded([&] {
    std::string joined;
    for (const std::string& n : mptcp::builtin_scenario_names()) {
      joined += n;
      joined += '\n';
    }
    *out = dup_string(joined);
  });
}

int mptcpsim_plot_script_for_csv(const char* csv_path, char** out) {
  if (!csv_path || !out)
    return fail(MPTCPSIM_ERR_CONFIG, "csv_path and out must be non-null");
  return guarded([&] { *out = dup_string(mptcp::emit_plot_script(csv_path)); });
}

void mptcpsim_string_free(char* s) { delete[] s; }

const char* mptcpsim_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
